//! Operator-splitting solver for small dense semidefinite programs in the
//! standard primal form
//!
//! ```text
//!   minimize / maximize  ⟨C, X⟩
//!   subject to           ⟨Aᵢ, X⟩ = bᵢ,   X ⪰ 0
//! ```
//!
//! over real symmetric `X`. The iteration is Douglas–Rachford splitting
//! between the affine subspace (plus the linear objective) and the PSD cone:
//!
//! ```text
//!   X ← Π_aff(Z − tC)
//!   Y ← Π_psd(2X − Z)
//!   Z ← Z + α(Y − X)
//! ```
//!
//! `Y` is the reported primal point. The dual pair is recovered in closed
//! form: `S = (Y − 2X + Z)/t` is PSD with `⟨Y, S⟩ = 0` exactly, and the dual
//! residual `C − Aᵀy − S` equals `(X − Y)/t`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One affine equality `⟨A, X⟩ = b`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub a: RealMatrix,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub side: usize,
    pub objective: RealMatrix,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
    /// The variable is the real image `[[R, −I], [I, R]]` of a Hermitian
    /// matrix; every cone projection is averaged back onto that structure.
    pub hermitian_embedding: bool,
}

const SYMMETRY_TOL: f64 = 1e-12;
const SETUP_INFEASIBILITY_TOL: f64 = 1e-6;
const RANK_TOL: f64 = 1e-10;

impl SdpProblem {
    pub fn new(objective: RealMatrix, sense: Sense) -> Result<Self> {
        let side = objective.nrows();
        check_symmetric("objective", &objective, side)?;
        Ok(Self {
            side,
            objective,
            constraints: Vec::new(),
            sense,
            hermitian_embedding: false,
        })
    }

    pub fn add_constraint(&mut self, a: RealMatrix, b: f64) -> Result<()> {
        check_symmetric("constraint", &a, self.side)?;
        self.constraints.push(Constraint { a, b });
        Ok(())
    }

    pub fn with_hermitian_embedding(mut self) -> Result<Self> {
        if !self.side.is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "Hermitian embedding needs an even side, got {}",
                self.side
            )));
        }
        self.hermitian_embedding = true;
        Ok(self)
    }
}

fn check_symmetric(what: &str, m: &RealMatrix, side: usize) -> Result<()> {
    if m.nrows() != side || m.ncols() != side || side == 0 {
        return Err(Error::Shape(format!(
            "{what} matrix is {}x{}, problem side is {side}",
            m.nrows(),
            m.ncols()
        )));
    }
    let dev = (m - m.transpose()).amax();
    if dev > SYMMETRY_TOL {
        return Err(Error::Symmetry {
            deviation: dev,
            tolerance: SYMMETRY_TOL,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverConfig {
    /// Initial Douglas–Rachford step `t`.
    pub step: f64,
    /// Relaxation α in (0, 2).
    pub relaxation: f64,
    /// Target for both residuals.
    pub tolerance: f64,
    /// Objective change allowed across `stall_window` iterations at convergence.
    pub stall_tolerance: f64,
    pub stall_window: usize,
    pub max_iterations: usize,
    /// Rebalance `t` from the residual ratio every this many iterations (0 disables).
    pub adapt_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            relaxation: 1.6,
            tolerance: 1e-7,
            stall_tolerance: 1e-9,
            stall_window: 50,
            max_iterations: 200_000,
            adapt_interval: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Solved,
    InfeasibleSuspected,
    MaxIterations,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::InfeasibleSuspected => "infeasible-suspected",
            SolveStatus::MaxIterations => "max-iterations",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: RealMatrix,
    /// ⟨C, X⟩ with the caller's C, whatever the sense.
    pub objective_value: f64,
    /// ‖A(X) − b‖₂ over all supplied constraints.
    pub primal_residual: f64,
    /// ‖C − Aᵀy − S‖_F
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Multipliers for the constraints kept after rank filtering (zero for dropped rows).
    pub dual_y: Vec<f64>,
    pub dual_slack: RealMatrix,
    /// ⟨X, S⟩
    pub complementarity: f64,
    /// Indices of constraints removed as linearly dependent.
    pub dropped_constraints: Vec<usize>,
    pub min_eigenvalue: f64,
}

/// Compact JSON view of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
}

impl SdpSolution {
    pub fn diagnostics(&self) -> SolveDiagnostics {
        SolveDiagnostics {
            status: self.status,
            iterations: self.iterations,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            objective: self.objective_value,
        }
    }
}

/// Constraint operator stored row-sparse, with the Gram matrix factored once.
struct AffineOperator {
    rows: Vec<Vec<(usize, f64)>>,
    b: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
    kept: Vec<usize>,
    dropped: Vec<usize>,
}

fn sparse_row(a: &RealMatrix) -> Vec<(usize, f64)> {
    a.as_slice()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect()
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

impl AffineOperator {
    fn new(constraints: &[Constraint]) -> Result<Self> {
        let all: Vec<Vec<(usize, f64)>> = constraints.iter().map(|c| sparse_row(&c.a)).collect();

        // Greedy rank filter: keep a row if it is not (numerically) in the span
        // of the rows kept so far. Uses an incremental Cholesky of the Gram matrix.
        let mut kept: Vec<usize> = Vec::new();
        let mut dropped = Vec::new();
        let mut l = DMatrix::<f64>::zeros(constraints.len(), constraints.len());
        for (idx, row) in all.iter().enumerate() {
            let r = kept.len();
            let self_dot = sparse_dot(row, row);
            let mut v = vec![0.0; r];
            for (p, &k) in kept.iter().enumerate() {
                let g = sparse_dot(row, &all[k]);
                let mut s = g;
                for q in 0..p {
                    s -= l[(p, q)] * v[q];
                }
                v[p] = s / l[(p, p)];
            }
            let pivot = self_dot - v.iter().map(|x| x * x).sum::<f64>();
            if self_dot == 0.0 || pivot <= RANK_TOL * self_dot {
                dropped.push(idx);
                continue;
            }
            for (q, &vq) in v.iter().enumerate() {
                l[(r, q)] = vq;
            }
            l[(r, r)] = pivot.sqrt();
            kept.push(idx);
        }
        if !dropped.is_empty() {
            log::warn!(
                "dropped {} linearly dependent constraint(s): {:?}",
                dropped.len(),
                dropped
            );
        }
        let m = kept.len();
        if m == 0 {
            return Err(Error::Shape("no independent constraints".into()));
        }
        let rows: Vec<_> = kept.iter().map(|&k| all[k].clone()).collect();
        let gram_m = DMatrix::from_fn(m, m, |i, j| sparse_dot(&rows[i], &rows[j]));
        let gram = Cholesky::new(gram_m)
            .ok_or_else(|| Error::Numeric("constraint Gram matrix is not positive definite".into()))?;
        let b = DVector::from_iterator(m, kept.iter().map(|&k| constraints[k].b));
        let op = Self {
            rows,
            b,
            gram,
            kept,
            dropped,
        };

        // Least-squares consistency: the min-norm solution of the kept system
        // must also satisfy the dropped rows.
        if !op.dropped.is_empty() {
            let side2 = constraints[0].a.len();
            let coeffs = op.gram.solve(&op.b);
            let mut x0 = vec![0.0; side2];
            op.add_adjoint(&coeffs, &mut x0);
            let residual = constraints
                .iter()
                .zip(&all)
                .map(|(c, row)| {
                    let v: f64 = row.iter().map(|&(i, a)| a * x0[i]).sum();
                    (v - c.b).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            if residual > SETUP_INFEASIBILITY_TOL {
                return Err(Error::InfeasibleAtSetup { residual });
            }
        }
        Ok(op)
    }

    fn apply(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| r.iter().map(|&(i, a)| a * x[i]).sum()),
        )
    }

    fn add_adjoint(&self, coeffs: &DVector<f64>, out: &mut [f64]) {
        for (row, &c) in self.rows.iter().zip(coeffs.iter()) {
            for &(i, a) in row {
                out[i] += c * a;
            }
        }
    }

    /// Projects `v` onto `{X : A(X) = b}` in place and returns the multipliers λ
    /// with `v_in − v_out = Aᵀλ`.
    fn project(&self, v: &mut [f64]) -> DVector<f64> {
        let r = self.apply(v) - &self.b;
        let lambda = self.gram.solve(&r);
        let neg = -&lambda;
        self.add_adjoint(&neg, v);
        lambda
    }
}

/// Eigenvalue clipping `V max(Λ, 0) Vᵀ`.
pub fn project_psd(s: &RealMatrix) -> Result<RealMatrix> {
    if s.nrows() != s.ncols() || s.nrows() == 0 {
        return Err(Error::Shape(format!(
            "PSD projection of {}x{} matrix",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = s.amax().max(1.0);
    let dev = (s - s.transpose()).amax();
    if dev > 1e-10 * scale {
        return Err(Error::Symmetry {
            deviation: dev,
            tolerance: 1e-10 * scale,
        });
    }
    Ok(project_psd_with_min(s)?.0)
}

/// PSD projection together with the smallest eigenvalue of the input.
fn project_psd_with_min(s: &RealMatrix) -> Result<(RealMatrix, f64)> {
    let n = s.nrows();
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let positive: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
    if positive.is_empty() {
        return Ok((RealMatrix::zeros(n, n), min));
    }
    let mut w = DMatrix::<f64>::zeros(n, positive.len());
    for (c, &k) in positive.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            w[(i, c)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    let mut out = &w * w.transpose();
    out = (&out + out.transpose()) * 0.5;
    Ok((out, min))
}

/// Average with the conjugation by the block rotation `[[0, −I], [I, 0]]`.
fn symmetrize_embedding(x: &mut RealMatrix) {
    let n = x.nrows() / 2;
    for i in 0..n {
        for j in 0..n {
            let p = x[(i, j)];
            let s = x[(i + n, j + n)];
            let q = x[(i, j + n)];
            let r = x[(i + n, j)];
            let diag = 0.5 * (p + s);
            let off = 0.5 * (q - r);
            x[(i, j)] = diag;
            x[(i + n, j + n)] = diag;
            x[(i, j + n)] = off;
            x[(i + n, j)] = -off;
        }
    }
}

fn min_eigenvalue(x: &RealMatrix) -> f64 {
    x.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn solve(problem: &SdpProblem, config: &SolverConfig) -> Result<SdpSolution> {
    if problem.constraints.is_empty() {
        return Err(Error::Shape("SDP has no constraints".into()));
    }
    let relaxation_ok = config.relaxation > 0.0 && config.relaxation < 2.0;
    if !relaxation_ok || config.step.is_nan() || config.step <= 0.0 {
        return Err(Error::Validity(format!(
            "solver relaxation must lie in (0, 2) and step must be positive, got {} and {}",
            config.relaxation, config.step
        )));
    }
    let n = problem.side;
    let op = AffineOperator::new(&problem.constraints)?;
    let c_min = match problem.sense {
        Sense::Minimize => problem.objective.clone(),
        Sense::Maximize => -&problem.objective,
    };

    let mut t = config.step;
    let mut z = RealMatrix::zeros(n, n);
    let mut x = RealMatrix::zeros(n, n);
    let mut y = RealMatrix::zeros(n, n);
    let mut lambda = DVector::<f64>::zeros(op.rows.len());
    let mut history: Vec<f64> = Vec::with_capacity(config.stall_window + 1);
    let mut primal_checkpoints: Vec<f64> = Vec::new();

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    for k in 1..=config.max_iterations {
        iterations = k;
        x.copy_from(&z);
        x -= &c_min * t;
        lambda = op.project(x.as_mut_slice());

        let w = &x * 2.0 - &z;
        y = project_psd_with_min(&w)?.0;
        if problem.hermitian_embedding {
            symmetrize_embedding(&mut y);
        }
        z += (&y - &x) * config.relaxation;

        let ay = op.apply(y.as_slice());
        primal = (ay - &op.b).norm();
        dual = (&x - &y).norm() / t;

        let obj = c_min.dot(&y);
        history.push(obj);
        if history.len() > config.stall_window + 1 {
            history.remove(0);
        }
        let stalled = history.len() == config.stall_window + 1
            && (history[config.stall_window] - history[0]).abs() < config.stall_tolerance;
        if primal < config.tolerance && dual < config.tolerance && stalled {
            status = SolveStatus::Solved;
            break;
        }

        if k % 1000 == 0 {
            primal_checkpoints.push(primal.max(dual * t));
            let c = primal_checkpoints.len();
            // Divergence heuristic: the X–Y gap has plateaued far from zero.
            if c >= 10 {
                let now = primal_checkpoints[c - 1];
                let before = primal_checkpoints[c - 6];
                if now > 1e3 * config.tolerance && now > 0.99 * before {
                    status = SolveStatus::InfeasibleSuspected;
                    break;
                }
            }
        }

        if config.adapt_interval > 0 && k % config.adapt_interval == 0 && primal > 0.0 && dual > 0.0 {
            let ratio = primal / dual;
            if !(0.2..=5.0).contains(&ratio) {
                // Larger t favours the dual residual, smaller t the primal.
                let factor = ratio.sqrt().clamp(0.1, 10.0).recip();
                let t_new = t * factor;
                let mut shifted = &z - &x;
                shifted *= t_new / t;
                z = &x + shifted;
                t = t_new;
                history.clear();
            }
        }
    }

    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let slack = (&y - &x * 2.0 + &z) / t;
    let complementarity = y.dot(&slack);
    let mut dual_y = vec![0.0; problem.constraints.len()];
    for (pos, &idx) in op.kept.iter().enumerate() {
        dual_y[idx] = -sign * lambda[pos] / t;
    }
    let primal_all = problem
        .constraints
        .iter()
        .map(|c| (c.a.dot(&y) - c.b).powi(2))
        .sum::<f64>()
        .sqrt();
    let min_eig = min_eigenvalue(&y);
    if status == SolveStatus::Solved && (primal_all >= config.tolerance || min_eig < -1e-8) {
        status = SolveStatus::MaxIterations;
    }
    Ok(SdpSolution {
        objective_value: problem.objective.dot(&y),
        x: y,
        primal_residual: primal_all.max(primal),
        dual_residual: dual,
        iterations,
        status,
        dual_y,
        dual_slack: slack * sign,
        complementarity,
        dropped_constraints: op.dropped.clone(),
        min_eigenvalue: min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize, j: usize) -> RealMatrix {
        let mut m = RealMatrix::zeros(n, n);
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
        m
    }

    #[test]
    fn min_trace_with_fixed_corner() {
        let mut p = SdpProblem::new(RealMatrix::identity(2, 2), Sense::Minimize).unwrap();
        p.add_constraint(e(2, 0, 0), 1.0).unwrap();
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Solved);
        assert!((s.objective_value - 1.0).abs() < 1e-6);
        assert!((&s.x - e(2, 0, 0)).amax() < 1e-6);
    }

    #[test]
    fn max_top_eigenvalue_under_unit_trace() {
        let c = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let mut p = SdpProblem::new(c, Sense::Maximize).unwrap();
        p.add_constraint(RealMatrix::identity(2, 2), 1.0).unwrap();
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Solved);
        assert!((s.objective_value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dependent_constraints_are_dropped() {
        let mut p = SdpProblem::new(RealMatrix::identity(2, 2), Sense::Minimize).unwrap();
        p.add_constraint(e(2, 0, 0), 1.0).unwrap();
        p.add_constraint(e(2, 0, 0) * 2.0, 2.0).unwrap();
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.dropped_constraints, vec![1]);
        assert_eq!(s.status, SolveStatus::Solved);
    }

    #[test]
    fn inconsistent_constraints_rejected_at_setup() {
        let mut p = SdpProblem::new(RealMatrix::identity(2, 2), Sense::Minimize).unwrap();
        p.add_constraint(e(2, 0, 0), 1.0).unwrap();
        p.add_constraint(e(2, 0, 0), 2.0).unwrap();
        assert!(matches!(
            solve(&p, &SolverConfig::default()),
            Err(Error::InfeasibleAtSetup { .. })
        ));
    }

    #[test]
    fn psd_infeasible_is_flagged() {
        // X₀₀ = −1 has no PSD solution.
        let mut p = SdpProblem::new(RealMatrix::identity(2, 2), Sense::Minimize).unwrap();
        p.add_constraint(e(2, 0, 0), -1.0).unwrap();
        let cfg = SolverConfig {
            max_iterations: 20_000,
            ..SolverConfig::default()
        };
        let s = solve(&p, &cfg).unwrap();
        assert_ne!(s.status, SolveStatus::Solved);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut c = RealMatrix::identity(2, 2);
        c[(0, 1)] = 1.0;
        assert!(matches!(
            SdpProblem::new(c, Sense::Minimize),
            Err(Error::Symmetry { .. })
        ));
    }

    #[test]
    fn projection_of_diagonal() {
        let s = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0]));
        let p = project_psd(&s).unwrap();
        let expected = RealMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!((p - expected).amax() < 1e-14);
    }

    #[test]
    fn projection_keeps_psd_input() {
        let a = RealMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        let p = project_psd(&a).unwrap();
        assert!((p - a).amax() < 1e-12);
    }

    #[test]
    fn embedding_symmetrizer_is_projection() {
        let mut x = RealMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
        x = &x + x.transpose();
        symmetrize_embedding(&mut x);
        let once = x.clone();
        symmetrize_embedding(&mut x);
        assert_eq!(once, x);
        assert_eq!(x[(0, 0)], x[(2, 2)]);
        assert_eq!(x[(0, 3)], -x[(2, 1)]);
    }
}
