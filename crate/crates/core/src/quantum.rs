//! SIC-POVM ensembles, the maximally entangled state, and channels stored as
//! Choi matrices.
//!
//! Conventions: the Choi state is `χ = (I ⊗ E)(|φ⟩⟨φ|)` with the channel
//! acting on the second factor, so `Tr₂ χ = I/d` is trace preservation.
//! Transposes and conjugates are always taken in the computational basis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eig, kron_vec, partial_trace, ComplexMatrix, Subsystem};

/// Largest qubit count any constructor accepts.
pub const MAX_QUBITS: usize = 4;

/// Tolerance used when a [`Channel`] is built from a Choi matrix.
pub const CHANNEL_TOL: f64 = 1e-9;

pub(crate) fn check_qubits(n: usize) -> Result<usize> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(1 << n)
    } else {
        Err(Error::Range {
            what: "qubit count n",
            value: n as f64,
            range: format!("[1, {MAX_QUBITS}]"),
        })
    }
}

/// The canonical single-qubit tetrahedron: |0⟩ and three states at polar
/// angle arccos(−1/3) spaced by 2π/3 in azimuth.
pub fn tetrahedron() -> [Vec<Complex64>; 4] {
    let a = (1.0f64 / 3.0).sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    let state = |j: usize| {
        let angle = 2.0 * std::f64::consts::PI * (j as f64 - 2.0) / 3.0;
        vec![Complex64::new(a, 0.0), Complex64::from_polar(b, angle)]
    };
    [
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        state(2),
        state(3),
        state(4),
    ]
}

/// The d² product states |ψ_{k₁}⟩⊗···⊗|ψ_{kₙ}⟩.
///
/// Flat index `k = Σᵢ kᵢ·4^(n−1−i)` with zero-based `kᵢ`, so qubit 1 is the
/// most significant digit, matching the Kronecker ordering.
#[derive(Debug, Clone)]
pub struct SicEnsemble {
    n: usize,
    factors: Vec<[Vec<Complex64>; 4]>,
    states: Vec<Vec<Complex64>>,
}

impl SicEnsemble {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn states(&self) -> &[Vec<Complex64>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &[Complex64] {
        &self.states[k]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Single-qubit SIC used on qubit `i` (zero-based).
    pub fn factor(&self, i: usize) -> &[Vec<Complex64>; 4] {
        &self.factors[i]
    }

    /// Zero-based digits (k₁, …, kₙ) of a flat index.
    pub fn multi_index(&self, k: usize) -> Vec<usize> {
        (0..self.n).map(|i| (k >> (2 * (self.n - 1 - i))) & 3).collect()
    }

    fn from_factors(factors: Vec<[Vec<Complex64>; 4]>) -> Self {
        let n = factors.len();
        let mut states: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0)]];
        for f in &factors {
            states = states
                .iter()
                .flat_map(|s| f.iter().map(move |psi| kron_vec(s, psi)))
                .collect();
        }
        Self { n, factors, states }
    }

    /// Ensemble obtained by applying single-qubit unitaries `u[i]` to qubit `i`.
    pub fn rotated(&self, unitaries: &[ComplexMatrix]) -> Result<Self> {
        if unitaries.len() != self.n {
            return Err(Error::Shape(format!(
                "{} unitaries supplied for {} qubits",
                unitaries.len(),
                self.n
            )));
        }
        let mut factors = Vec::with_capacity(self.n);
        for (u, f) in unitaries.iter().zip(&self.factors) {
            check_unitary(u, 2)?;
            factors.push([
                u.mul_vec(&f[0])?,
                u.mul_vec(&f[1])?,
                u.mul_vec(&f[2])?,
                u.mul_vec(&f[3])?,
            ]);
        }
        Ok(Self::from_factors(factors))
    }
}

/// Tensor-product SIC states for `n` qubits, the canonical tetrahedron on every qubit.
pub fn sic_states(n: usize) -> Result<SicEnsemble> {
    check_qubits(n)?;
    Ok(SicEnsemble::from_factors(vec![tetrahedron(); n]))
}

/// (1/√d) Σₓ |x⟩⊗|x⟩ on C^d ⊗ C^d.
#[derive(Debug, Clone)]
pub struct MaxEntangledState {
    n: usize,
    vector: Vec<Complex64>,
}

impl MaxEntangledState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vector(&self) -> &[Complex64] {
        &self.vector
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.vector)
    }
}

pub fn max_entangled(n: usize) -> Result<MaxEntangledState> {
    let d = check_qubits(n)?;
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut vector = vec![Complex64::new(0.0, 0.0); d * d];
    for x in 0..d {
        vector[x * d + x] = amp;
    }
    Ok(MaxEntangledState { n, vector })
}

/// An n-qubit CPTP map held as its Choi state χ (trace one, side d²).
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    n: usize,
    choi: ComplexMatrix,
}

impl Channel {
    /// Wraps a Choi matrix after checking the CPTP conditions at [`CHANNEL_TOL`].
    pub fn from_choi(n: usize, choi: ComplexMatrix) -> Result<Self> {
        Self::from_choi_with_tol(n, choi, CHANNEL_TOL)
    }

    pub fn from_choi_with_tol(n: usize, choi: ComplexMatrix, tol: f64) -> Result<Self> {
        let report = validate_choi(n, &choi, tol)?;
        if !report.pass {
            return Err(Error::Validity(format!(
                "Choi matrix is not CPTP at tolerance {tol:e}: {report}"
            )));
        }
        Ok(Self {
            n,
            choi: choi.hermitian_part(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self {
            n,
            choi: max_entangled(n)?.projector(),
        })
    }

    pub fn to_file(&self) -> ChannelFile {
        ChannelFile {
            n: self.n,
            choi_real: self.choi.real_rows(),
            choi_imag: self.choi.imag_rows(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("channel serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!(
                "channel JSON at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        file.into_channel()
    }
}

/// On-disk channel format: `{n, choi_real, choi_imag}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub n: usize,
    pub choi_real: Vec<Vec<f64>>,
    pub choi_imag: Vec<Vec<f64>>,
}

impl ChannelFile {
    pub fn into_channel(self) -> Result<Channel> {
        let d = check_qubits(self.n)?;
        let side = d * d;
        for (field, rows) in [("choi_real", &self.choi_real), ("choi_imag", &self.choi_imag)] {
            if rows.len() != side {
                return Err(Error::Parse(format!(
                    "field `{field}` has {} rows, expected {side} for n = {}",
                    rows.len(),
                    self.n
                )));
            }
            if let Some(i) = rows.iter().position(|r| r.len() != side) {
                return Err(Error::Parse(format!(
                    "field `{field}` row {i} has {} entries, expected {side}",
                    rows[i].len()
                )));
            }
        }
        let choi = ComplexMatrix::from_parts(&self.choi_real, &self.choi_imag)?;
        Channel::from_choi(self.n, choi)
    }
}

pub(crate) fn check_unitary(u: &ComplexMatrix, d: usize) -> Result<()> {
    if u.rows() != d || u.cols() != d {
        return Err(Error::Shape(format!(
            "expected a {d}x{d} unitary, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let dev = u
        .adjoint()
        .matmul(u)?
        .max_abs_diff(&ComplexMatrix::identity(d))?;
    if dev > 1e-9 {
        return Err(Error::Validity(format!(
            "matrix is not unitary: max |U†U − I| = {dev:e}"
        )));
    }
    Ok(())
}

/// χ = Σᵢ (I⊗Kᵢ)|φ⟩⟨φ|(I⊗Kᵢ)†.
pub fn channel_from_kraus(n: usize, kraus: &[ComplexMatrix]) -> Result<Channel> {
    let d = check_qubits(n)?;
    if kraus.is_empty() {
        return Err(Error::Validity("empty Kraus set".into()));
    }
    let mut completeness = ComplexMatrix::zeros(d, d);
    for (i, k) in kraus.iter().enumerate() {
        if k.rows() != d || k.cols() != d {
            return Err(Error::Shape(format!(
                "Kraus operator {i} is {}x{}, expected {d}x{d}",
                k.rows(),
                k.cols()
            )));
        }
        completeness = &completeness + &(&k.adjoint() * k);
    }
    let dev = completeness.max_abs_diff(&ComplexMatrix::identity(d))?;
    if dev > 1e-9 {
        return Err(Error::Validity(format!(
            "Kraus set is not trace preserving: max |ΣK†K − I| = {dev:e}"
        )));
    }

    let scale = 1.0 / (d as f64).sqrt();
    let mut choi = ComplexMatrix::zeros(d * d, d * d);
    for k in kraus {
        // (I⊗K)|φ⟩ has amplitude K[y][x]/√d on |x⟩|y⟩.
        let v: Vec<Complex64> = (0..d * d).map(|idx| k[(idx % d, idx / d)] * scale).collect();
        choi = &choi + &ComplexMatrix::projector(&v);
    }
    Ok(Channel {
        n,
        choi: choi.hermitian_part(),
    })
}

/// χ = (1−p)|φ⟩⟨φ| + p·I/d².
pub fn depolarizing(n: usize, p: f64) -> Result<Channel> {
    let d = check_qubits(n)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range {
            what: "depolarizing probability p",
            value: p,
            range: "[0, 1]".into(),
        });
    }
    let phi = max_entangled(n)?.projector();
    let mixed = ComplexMatrix::identity(d * d).scale(p / (d * d) as f64);
    Ok(Channel {
        n,
        choi: &phi.scale(1.0 - p) + &mixed,
    })
}

/// χ of the unitary channel ρ ↦ UρU†.
pub fn unitary_channel(n: usize, u: &ComplexMatrix) -> Result<Channel> {
    let d = check_qubits(n)?;
    check_unitary(u, d)?;
    channel_from_kraus(n, std::slice::from_ref(u))
}

/// Haar-random isometry from C^d into C^(d·env_dim) via QR of a complex Gaussian matrix.
/// Returns the Kraus operators `K_e`, where row `e·d + y` of the isometry is row `y` of `K_e`.
pub fn haar_isometry_kraus(d: usize, env_dim: usize, rng: &mut ChaCha8Rng) -> Vec<ComplexMatrix> {
    let m = d * env_dim;
    let g = DMatrix::<Complex64>::from_fn(m, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the phase ambiguity of QR so the distribution is Haar.
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    (0..env_dim)
        .map(|e| ComplexMatrix::from_fn(d, d, |y, x| q[(e * d + y, x)]))
        .collect()
}

/// Haar-random unitary of dimension d.
pub fn haar_unitary(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    haar_isometry_kraus(d, 1, rng).pop().expect("one Kraus operator")
}

/// Random CPTP map: Haar isometry d → d·env_dim followed by tracing out the environment.
pub fn random_cptp(n: usize, env_dim: usize, seed: u64) -> Result<Channel> {
    let d = check_qubits(n)?;
    if env_dim == 0 {
        return Err(Error::Range {
            what: "environment dimension",
            value: 0.0,
            range: "[1, ∞)".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kraus = haar_isometry_kraus(d, env_dim, &mut rng);
    channel_from_kraus(n, &kraus)
}

/// E(ρ) = d·Tr₁(χ(ρᵀ⊗I)), contracted entrywise:
/// `E(ρ)[p][q] = d Σ_{i,k} χ[(i,p),(k,q)] ρ[i][k]`.
pub fn apply_channel(c: &Channel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = c.dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::Shape(format!(
            "state is {}x{}, channel acts on dimension {d}",
            rho.rows(),
            rho.cols()
        )));
    }
    let chi = &c.choi;
    let mut out = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            let r = rho[(i, k)];
            if r == Complex64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..d {
                for q in 0..d {
                    out[(p, q)] += chi[(i * d + p, k * d + q)] * r;
                }
            }
        }
    }
    Ok(out.scale(d as f64))
}

/// Choi matrix of U†∘E, i.e. `(I⊗U†) χ (I⊗U)`.
pub fn conjugate_by_unitary(c: &Channel, u: &ComplexMatrix) -> Result<Channel> {
    let d = c.dim();
    check_unitary(u, d)?;
    let lifted = crate::matrix::kron(&ComplexMatrix::identity(d), u)?;
    let choi = &(&lifted.adjoint() * &c.choi) * &lifted;
    Ok(Channel {
        n: c.n,
        choi: choi.hermitian_part(),
    })
}

/// Outcome of a CPTP check on a Choi matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CptpReport {
    pub min_eigenvalue: f64,
    pub hermitian_deviation: f64,
    /// max |Tr₂(χ) − I/d| entrywise
    pub trace_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl std::fmt::Display for CptpReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "min eigenvalue {:e}, Hermitian deviation {:e}, trace-preservation deviation {:e} ({})",
            self.min_eigenvalue,
            self.hermitian_deviation,
            self.trace_deviation,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// Checks χ ≥ 0 and Tr₂(χ) = I/d at tolerance `tol`.
pub fn validate_choi(n: usize, choi: &ComplexMatrix, tol: f64) -> Result<CptpReport> {
    let d = check_qubits(n)?;
    if choi.rows() != d * d || choi.cols() != d * d {
        return Err(Error::Shape(format!(
            "Choi matrix for n = {n} must be {0}x{0}, got {1}x{2}",
            d * d,
            choi.rows(),
            choi.cols()
        )));
    }
    let hermitian_deviation = choi.hermitian_deviation();
    let sym = choi.hermitian_part();
    let min_eigenvalue = hermitian_eig(&sym)?.min();
    let marginal = partial_trace(&sym, d, d, Subsystem::Second)?;
    let trace_deviation =
        marginal.max_abs_diff(&ComplexMatrix::identity(d).scale(1.0 / d as f64))?;
    let pass = hermitian_deviation <= tol.max(crate::matrix::HERMITIAN_TOL)
        && min_eigenvalue >= -tol
        && trace_deviation <= tol;
    Ok(CptpReport {
        min_eigenvalue,
        hermitian_deviation,
        trace_deviation,
        tolerance: tol,
        pass,
    })
}

pub fn validate_cptp(c: &Channel, tol: f64) -> Result<CptpReport> {
    validate_choi(c.n, &c.choi, tol)
}
