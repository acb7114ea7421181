//! The Γ operator `Σ_k (|ψ_k⟩⟨ψ_k|)ᵀ ⊗ |ψ_k⟩⟨ψ_k|` over SIC product states,
//! its factor γ, the overlap matrix M, and numerical checks of its spectrum,
//! of |φ⟩ as the top eigenvector, and of the witness operators A and B.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eig, kron, norm, ComplexMatrix, Spectrum};
use crate::quantum::{check_qubits, max_entangled, sic_states, SicEnsemble};

/// Window used when counting eigenvalue multiplicities.
pub const MULTIPLICITY_TOL: f64 = 1e-6;

/// Γ for n qubits with its spectrum computed at construction.
#[derive(Debug, Clone)]
pub struct GammaOperator {
    n: usize,
    gamma: ComplexMatrix,
    spectrum: Spectrum,
}

impl GammaOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.gamma
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Γ summed over an arbitrary product-SIC ensemble.
    pub fn from_ensemble(sic: &SicEnsemble) -> Result<Self> {
        Self::from_ensemble_shifted(sic, 0)
    }

    fn from_ensemble_shifted(sic: &SicEnsemble, shift: usize) -> Result<Self> {
        let d = sic.dim();
        let count = sic.len();
        let mut gamma = ComplexMatrix::zeros(d * d, d * d);
        for k in 0..count {
            let left = ComplexMatrix::projector(sic.state(k)).transpose();
            let right = ComplexMatrix::projector(sic.state((k + shift) % count));
            gamma = &gamma + &kron(&left, &right)?;
        }
        let spectrum = hermitian_eig(&gamma)?;
        Ok(Self {
            n: sic.n(),
            gamma,
            spectrum,
        })
    }

    /// Largest eigenvalue together with its multiplicity, then the next distinct one.
    pub fn spectrum_check(&self, tol: f64) -> SpectrumCheck {
        let d = self.dim() as f64;
        let top_count = self.spectrum.count_near(d, tol);
        let second_count = self.spectrum.count_near(d / 3.0, tol);
        let expected_second = 3 * self.n;
        let above_second = self
            .spectrum
            .eigenvalues
            .iter()
            .filter(|&&l| l > d / 3.0 + tol)
            .count();
        SpectrumCheck {
            n: self.n,
            top_eigenvalue: self.spectrum.max(),
            top_count,
            second_count,
            expected_second_count: expected_second,
            trace: self.gamma.trace().re,
            tolerance: tol,
            pass: top_count == 1 && second_count == expected_second && above_second == 1,
        }
    }
}

pub fn build_gamma(n: usize) -> Result<GammaOperator> {
    GammaOperator::from_ensemble(&sic_states(n)?)
}

/// Γ with the right-hand projector index shifted by `shift`; only useful as a
/// negative control for the spectral checks.
#[doc(hidden)]
pub fn build_gamma_with_shift(n: usize, shift: usize) -> Result<GammaOperator> {
    GammaOperator::from_ensemble_shifted(&sic_states(n)?, shift)
}

/// Factor γ with `Γ = γγ†`, restricted to the span of `{|k⟩⊗|k⟩}` where it is
/// supported: column k is `|ψ_k*⟩⊗|ψ_k⟩`, so `γ†γ` is the overlap matrix M.
pub fn build_gamma_factor(n: usize) -> Result<ComplexMatrix> {
    let sic = sic_states(n)?;
    let d = sic.dim();
    let columns: Vec<Vec<_>> = sic
        .states()
        .iter()
        .map(|psi| {
            let conj: Vec<_> = psi.iter().map(|z| z.conj()).collect();
            crate::matrix::kron_vec(&conj, psi)
        })
        .collect();
    Ok(ComplexMatrix::from_fn(d * d, d * d, |row, k| columns[k][row]))
}

/// The 4×4 single-qubit overlap matrix: ones on the diagonal, 1/3 elsewhere.
pub fn single_qubit_overlap() -> ComplexMatrix {
    ComplexMatrix::from_fn(4, 4, |i, j| {
        num_complex::Complex64::new(if i == j { 1.0 } else { 1.0 / 3.0 }, 0.0)
    })
}

/// `M_{kk'} = |⟨ψ_k|ψ_{k'}⟩|²`, computed from the states themselves.
pub fn overlap_matrix(n: usize) -> Result<ComplexMatrix> {
    let sic = sic_states(n)?;
    let m = sic.len();
    Ok(ComplexMatrix::from_fn(m, m, |k, kp| {
        let ov = crate::matrix::inner(sic.state(k), sic.state(kp)).norm_sqr();
        num_complex::Complex64::new(ov, 0.0)
    }))
}

/// ‖Γ|φ⟩ − d|φ⟩‖₂
pub fn phi_eigen_residual(g: &GammaOperator) -> Result<f64> {
    let phi = max_entangled(g.n)?;
    let d = g.dim() as f64;
    let gphi = g.gamma.mul_vec(phi.vector())?;
    let diff: Vec<_> = gphi
        .iter()
        .zip(phi.vector())
        .map(|(a, b)| a - b * d)
        .collect();
    Ok(norm(&diff))
}

pub fn verify_phi_eigenvector(n: usize) -> Result<f64> {
    phi_eigen_residual(&build_gamma(n)?)
}

/// Witness operators `A = |φ⟩⟨φ| − (3/2d)Γ + I/2` and `B = Γ/d − |φ⟩⟨φ|`.
pub fn witness_operators(g: &GammaOperator) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let d = g.dim() as f64;
    let phi = max_entangled(g.n)?.projector();
    let side = phi.rows();
    let a = &(&phi - &g.gamma.scale(1.5 / d)) + &ComplexMatrix::identity(side).scale(0.5);
    let b = &g.gamma.scale(1.0 / d) - &phi;
    Ok((a, b))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCheck {
    pub n: usize,
    pub top_eigenvalue: f64,
    pub top_count: usize,
    pub second_count: usize,
    pub expected_second_count: usize,
    pub trace: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub min_eig_a: f64,
    pub min_eig_b: f64,
    /// ⟨φ|Γ⊥|φ⟩ with Γ⊥ = Γ − d|φ⟩⟨φ|
    pub perp_phi_overlap: f64,
    /// Largest eigenvalue of Γ⊥, expected d/3.
    pub perp_top_eigenvalue: f64,
    pub pass: bool,
}

pub const WITNESS_TOL: f64 = 1e-9;

pub fn witness_report(g: &GammaOperator) -> Result<WitnessReport> {
    let d = g.dim() as f64;
    let (a, b) = witness_operators(g)?;
    let min_eig_a = hermitian_eig(&a)?.min();
    let min_eig_b = hermitian_eig(&b)?.min();

    let phi = max_entangled(g.n)?;
    let perp = &g.gamma - &phi.projector().scale(d);
    let perp_phi_overlap = perp.expectation(phi.vector())?.re;
    let perp_top_eigenvalue = hermitian_eig(&perp)?.max();

    let pass = min_eig_a >= -WITNESS_TOL
        && min_eig_b >= -WITNESS_TOL
        && perp_phi_overlap.abs() <= WITNESS_TOL
        && (perp_top_eigenvalue - d / 3.0).abs() <= WITNESS_TOL;
    Ok(WitnessReport {
        min_eig_a,
        min_eig_b,
        perp_phi_overlap,
        perp_top_eigenvalue,
        pass,
    })
}

pub fn witness_check(n: usize) -> Result<WitnessReport> {
    check_qubits(n)?;
    witness_report(&build_gamma(n)?)
}

pub(crate) fn check_same_n(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!(
            "Γ built for n = {b} used with a channel on n = {a} qubits"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{hermitian_eigenvalues, kron_power};

    #[test]
    fn single_qubit_spectrum() {
        let g = build_gamma(1).unwrap();
        let ev = &g.spectrum().eigenvalues;
        let expected = [2.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn trace_is_d_squared() {
        for n in 1..=3 {
            let g = build_gamma(n).unwrap();
            let d2 = (g.dim() * g.dim()) as f64;
            assert!((g.matrix().trace().re - d2).abs() < 1e-9);
        }
    }

    #[test]
    fn two_qubit_multiplicities() {
        let check = build_gamma(2).unwrap().spectrum_check(MULTIPLICITY_TOL);
        assert!(check.pass, "{check:?}");
        assert_eq!(check.second_count, 6);
        assert!((check.top_eigenvalue - 4.0).abs() < 1e-12);
    }

    #[test]
    fn factor_reproduces_gamma() {
        for n in 1..=2 {
            let f = build_gamma_factor(n).unwrap();
            let g = build_gamma(n).unwrap();
            let dev = (&f * &f.adjoint()).max_abs_diff(g.matrix()).unwrap();
            assert!(dev < 1e-12, "n={n}: {dev}");
        }
    }

    #[test]
    fn factor_gram_is_overlap_matrix() {
        let f = build_gamma_factor(2).unwrap();
        let gram = &f.adjoint() * &f;
        assert!(gram.max_abs_diff(&overlap_matrix(2).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn overlap_rows_sum_to_two() {
        let m = overlap_matrix(1).unwrap();
        for i in 0..4 {
            let s: f64 = (0..4).map(|j| m[(i, j)].re).sum();
            assert!((s - 2.0).abs() < 1e-12);
        }
        assert!(m.max_abs_diff(&single_qubit_overlap()).unwrap() < 1e-12);
    }

    #[test]
    fn overlap_is_kronecker_power() {
        for n in 1..=3 {
            let direct = overlap_matrix(n).unwrap();
            let power = kron_power(&single_qubit_overlap(), n).unwrap();
            assert!(direct.max_abs_diff(&power).unwrap() < 1e-12);
        }
    }

    #[test]
    fn single_overlap_eigenvalues() {
        let ev = hermitian_eigenvalues(&single_qubit_overlap()).unwrap();
        assert!((ev[0] - 2.0).abs() < 1e-12);
        for l in &ev[1..] {
            assert!((l - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_residuals() {
        assert!(verify_phi_eigenvector(1).unwrap() < 1e-12);
        assert!(verify_phi_eigenvector(3).unwrap() < 1e-9);
        assert!(verify_phi_eigenvector(0).is_err());
    }

    #[test]
    fn single_qubit_witnesses_saturate() {
        let r = witness_check(1).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.min_eig_b.abs() < 1e-12);
        assert!(r.min_eig_a.abs() < 1e-12);
    }

    #[test]
    fn shifted_gamma_fails_spectrum_check() {
        let g = build_gamma_with_shift(2, 1).unwrap();
        assert!(!g.spectrum_check(MULTIPLICITY_TOL).pass);
    }
}
