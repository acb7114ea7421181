//! Extremal process fidelity at fixed 0-fidelity.
//!
//! Both programs optimize `Tr(χ|φ⟩⟨φ|)` over Choi matrices with
//! `Tr(χΓ) = dF₀`, `Tr₂(χ) = I/d` and `χ ⪰ 0`. The Hermitian variable χ is
//! handed to the real solver through its real embedding, so every trace
//! computed on the embedding is twice the complex one.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::theorem1_bounds;
use crate::gamma::{build_gamma, GammaOperator};
use crate::matrix::{kron, real_embed, real_unembed, ComplexMatrix};
use crate::quantum::{check_qubits, max_entangled, Channel};
use crate::sdp::{solve, SdpProblem, SdpSolution, Sense, SolveStatus, SolverConfig};

/// Hermitian basis of d×d matrices: `E_aa`, `E_ab + E_ba` and `i(E_ba − E_ab)` for a < b.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(a, a)] = Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for a in 0..d {
        for b in a + 1..d {
            let mut re = ComplexMatrix::zeros(d, d);
            re[(a, b)] = Complex64::new(1.0, 0.0);
            re[(b, a)] = Complex64::new(1.0, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(d, d);
            im[(a, b)] = Complex64::new(0.0, -1.0);
            im[(b, a)] = Complex64::new(0.0, 1.0);
            out.push(im);
        }
    }
    out
}

/// Adds the CPTP equalities `Tr(χ (H⊗I)) = Tr(H)/d` for every basis element H.
pub fn add_trace_preservation(problem: &mut SdpProblem, d: usize) -> Result<()> {
    let id = ComplexMatrix::identity(d);
    for h in hermitian_basis(d) {
        let lifted = kron(&h, &id)?;
        let rhs = 2.0 * h.trace().re / d as f64;
        problem.add_constraint(real_embed(&lifted)?, rhs)?;
    }
    Ok(())
}

/// Embedded SDP optimizing F at fixed F₀ under the CPTP constraints.
pub fn build_fidelity_sdp_with(g: &GammaOperator, f0: f64, sense: Sense) -> Result<SdpProblem> {
    if !f0.is_finite() {
        return Err(Error::Range {
            what: "F0",
            value: f0,
            range: "finite".into(),
        });
    }
    let n = g.n();
    let d = g.dim();
    let objective = real_embed(&max_entangled(n)?.projector())?;
    let mut problem = SdpProblem::new(objective, sense)?.with_hermitian_embedding()?;
    problem.add_constraint(real_embed(g.matrix())?, 2.0 * d as f64 * f0)?;
    add_trace_preservation(&mut problem, d)?;
    Ok(problem)
}

pub fn build_fidelity_sdp(n: usize, f0: f64, sense: Sense) -> Result<SdpProblem> {
    check_qubits(n)?;
    build_fidelity_sdp_with(&build_gamma(n)?, f0, sense)
}

/// An extremal F together with the solver output and recovered Choi matrix.
#[derive(Debug, Clone)]
pub struct FidelityExtremum {
    pub n: usize,
    pub f0: f64,
    pub sense: Sense,
    /// Extremal process fidelity (complex-trace semantics).
    pub value: f64,
    pub choi: ComplexMatrix,
    pub solution: SdpSolution,
}

impl FidelityExtremum {
    /// The optimizer as a channel, checked at `tol`.
    pub fn channel(&self, tol: f64) -> Result<Channel> {
        Channel::from_choi_with_tol(self.n, self.choi.clone(), tol)
    }
}

/// Solves one fidelity SDP without any feasibility pre-check.
pub fn solve_fidelity_sdp(
    g: &GammaOperator,
    f0: f64,
    sense: Sense,
    config: &SolverConfig,
) -> Result<FidelityExtremum> {
    let problem = build_fidelity_sdp_with(g, f0, sense)?;
    let solution = solve(&problem, config)?;
    let choi = real_unembed(&solution.x)?;
    Ok(FidelityExtremum {
        n: g.n(),
        f0,
        sense,
        value: solution.objective_value / 2.0,
        choi,
        solution,
    })
}

fn extremum(n: usize, f0: f64, sense: Sense, config: &SolverConfig) -> Result<FidelityExtremum> {
    let g = build_gamma(n)?;
    let infeasible = |g: &GammaOperator| -> Result<Error> {
        let (f0_min, f0_max) = feasible_f0_range_with(g, config)?;
        Ok(Error::InfeasibleF0 {
            n,
            f0,
            f0_min,
            f0_max,
        })
    };
    if f0.is_nan() || f0 > 1.0 + 1e-12 {
        return Err(infeasible(&g)?);
    }
    let out = solve_fidelity_sdp(&g, f0, sense, config)?;
    match out.solution.status {
        SolveStatus::Solved => Ok(out),
        SolveStatus::InfeasibleSuspected => Err(infeasible(&g)?),
        SolveStatus::MaxIterations => Err(Error::NotConverged(format!(
            "n = {n}, F0 = {f0}: {} iterations, primal residual {:e}, dual residual {:e}",
            out.solution.iterations, out.solution.primal_residual, out.solution.dual_residual
        ))),
    }
}

/// Minimum process fidelity over channels with the given 0-fidelity.
pub fn min_process_fidelity(n: usize, f0: f64, config: &SolverConfig) -> Result<FidelityExtremum> {
    extremum(n, f0, Sense::Minimize, config)
}

/// Maximum process fidelity over channels with the given 0-fidelity.
pub fn max_process_fidelity(n: usize, f0: f64, config: &SolverConfig) -> Result<FidelityExtremum> {
    extremum(n, f0, Sense::Maximize, config)
}

/// `[min F₀, 1]` over CPTP maps; the minimum is `min Tr(χΓ)/d` under the
/// trace-preservation constraints alone.
pub fn feasible_f0_range_with(g: &GammaOperator, config: &SolverConfig) -> Result<(f64, f64)> {
    let d = g.dim();
    let objective = real_embed(g.matrix())?;
    let mut problem = SdpProblem::new(objective, Sense::Minimize)?.with_hermitian_embedding()?;
    add_trace_preservation(&mut problem, d)?;
    let sol = solve(&problem, config)?;
    if sol.status != SolveStatus::Solved {
        return Err(Error::NotConverged(format!(
            "feasible-range SDP for n = {}: status {}, {} iterations",
            g.n(),
            sol.status,
            sol.iterations
        )));
    }
    Ok((sol.objective_value / 2.0 / d as f64, 1.0))
}

pub fn feasible_f0_range(n: usize, config: &SolverConfig) -> Result<(f64, f64)> {
    feasible_f0_range_with(&build_gamma(n)?, config)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub f0: f64,
    pub one_minus_f0: f64,
    pub theorem1_lower: f64,
    pub theorem1_upper: f64,
    pub sdp_min: f64,
    pub sdp_max: f64,
    pub min_status: SolveStatus,
    pub max_status: SolveStatus,
}

pub const CSV_HEADER: &str =
    "n,F0,one_minus_F0,theorem1_lower,theorem1_upper,sdp_min,sdp_max,min_status,max_status";

/// Formats a float with 10 significant digits, trailing zeros trimmed.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.9e}");
        let (mantissa, e) = s.split_once('e').expect("exponent");
        format!("{}e{e}", trim_zeros(mantissa.to_string()))
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl BoundsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            format_sig10(self.f0),
            format_sig10(self.one_minus_f0),
            format_sig10(self.theorem1_lower),
            format_sig10(self.theorem1_upper),
            format_sig10(self.sdp_min),
            format_sig10(self.sdp_max),
            self.min_status,
            self.max_status
        )
    }
}

pub fn write_csv<W: Write>(rows: &[BoundsRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv_line())?;
    }
    Ok(())
}

fn cell(g: &GammaOperator, f0: f64, config: &SolverConfig) -> BoundsRow {
    let run = |sense| match solve_fidelity_sdp(g, f0, sense, config) {
        Ok(e) => (e.value, e.solution.status),
        Err(err) => {
            log::warn!("n = {}, F0 = {f0}, {sense:?}: {err}", g.n());
            (f64::NAN, SolveStatus::InfeasibleSuspected)
        }
    };
    let (sdp_min, min_status) = run(Sense::Minimize);
    let (sdp_max, max_status) = run(Sense::Maximize);
    let b = theorem1_bounds(f0);
    BoundsRow {
        n: g.n(),
        f0,
        one_minus_f0: 1.0 - f0,
        theorem1_lower: b.lower,
        theorem1_upper: b.upper,
        sdp_min,
        sdp_max,
        min_status,
        max_status,
    }
}

/// One row per (n, F₀) pair, ordered by n then F₀. Cells run in parallel;
/// a failed cell is recorded through its statuses and the sweep continues.
pub fn sweep(n_values: &[usize], f0_grid: &[f64], config: &SolverConfig) -> Result<Vec<BoundsRow>> {
    if n_values.is_empty() || f0_grid.is_empty() {
        return Err(Error::Validity("sweep needs at least one n and one F0".into()));
    }
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut grid = f0_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let gammas = ns
        .iter()
        .map(|&n| build_gamma(n))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, f64)> = (0..gammas.len())
        .flat_map(|gi| grid.iter().map(move |&f0| (gi, f0)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(gi, f0)| cell(&gammas[gi], f0, config))
        .collect())
}

/// The default grid `1 − F₀ ∈ {0.00, 0.01, …, 0.10}`.
pub fn default_f0_grid() -> Vec<f64> {
    (0..=10).map(|i| 1.0 - i as f64 / 100.0).collect()
}
