//! 0-fidelity (direct SIC average and Choi-trace routes), process fidelity,
//! average fidelity, the linear bounds relating F to F₀, and a shot-based
//! F₀ estimator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::{check_same_n, GammaOperator};
use crate::matrix::ComplexMatrix;
use crate::quantum::{apply_channel, max_entangled, random_cptp, sic_states, Channel, SicEnsemble};

/// ⟨ψ|E(|ψ⟩⟨ψ|)|ψ⟩ for every state of the ensemble, each via `apply_channel`.
pub fn survival_probabilities(c: &Channel, sic: &SicEnsemble) -> Result<Vec<f64>> {
    if sic.n() != c.n() {
        return Err(Error::Shape(format!(
            "SIC ensemble for n = {} used with a channel on n = {}",
            sic.n(),
            c.n()
        )));
    }
    sic.states()
        .iter()
        .map(|psi| {
            let out = apply_channel(c, &ComplexMatrix::projector(psi))?;
            Ok(out.expectation(psi)?.re)
        })
        .collect()
}

pub fn zero_fidelity_with(c: &Channel, sic: &SicEnsemble) -> Result<f64> {
    let probs = survival_probabilities(c, sic)?;
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

/// F₀ as the average survival probability of the d² SIC product states.
pub fn zero_fidelity_direct(c: &Channel) -> Result<f64> {
    zero_fidelity_with(c, &sic_states(c.n())?)
}

/// F₀ = Tr(χΓ)/d.
pub fn zero_fidelity_choi(c: &Channel, g: &GammaOperator) -> Result<f64> {
    check_same_n(c.n(), g.n())?;
    Ok(c.choi().trace_product(g.matrix())?.re / c.dim() as f64)
}

/// F = ⟨φ|χ|φ⟩.
pub fn process_fidelity(c: &Channel) -> Result<f64> {
    let phi = max_entangled(c.n())?;
    Ok(c.choi().expectation(phi.vector())?.re)
}

/// F_avg = (dF + 1)/(d + 1).
pub fn average_fidelity(c: &Channel) -> Result<f64> {
    let d = c.dim() as f64;
    Ok((d * process_fidelity(c)? + 1.0) / (d + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// `1 − (3/2)(1 − F₀) ≤ F ≤ F₀`. The lower bound is negative for F₀ < 1/3.
pub fn theorem1_bounds(f0: f64) -> Bounds {
    Bounds {
        lower: 1.0 - 1.5 * (1.0 - f0),
        upper: f0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelityReport {
    /// Choi-trace route.
    pub f0: f64,
    /// Direct SIC average.
    pub f0_direct: f64,
    pub route_deviation: f64,
    pub f: f64,
    pub f_avg: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl FidelityReport {
    pub fn compute(c: &Channel, g: &GammaOperator) -> Result<Self> {
        let f0 = zero_fidelity_choi(c, g)?;
        let f0_direct = zero_fidelity_direct(c)?;
        let f = process_fidelity(c)?;
        let bounds = theorem1_bounds(f0);
        Ok(Self {
            f0,
            f0_direct,
            route_deviation: (f0 - f0_direct).abs(),
            f,
            f_avg: average_fidelity(c)?,
            lower_bound: bounds.lower,
            upper_bound: bounds.upper,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShotEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub shots: u64,
    pub seed: u64,
}

/// Each shot picks a SIC product state uniformly, sends it through the
/// channel and records a Bernoulli outcome with the survival probability.
pub fn estimate_zero_fidelity(c: &Channel, shots: u64, seed: u64) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::Range {
            what: "shots",
            value: 0.0,
            range: "[1, ∞)".into(),
        });
    }
    let probs = survival_probabilities(c, &sic_states(c.n())?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut successes = 0u64;
    for _ in 0..shots {
        let k = rng.random_range(0..probs.len());
        if rng.random::<f64>() < probs[k] {
            successes += 1;
        }
    }
    let n = shots as f64;
    let mean = successes as f64 / n;
    // Sample variance of 0/1 outcomes with the n−1 denominator.
    let std_error = if shots > 1 {
        let var = (successes as f64 * (1.0 - mean).powi(2)
            + (n - successes as f64) * mean.powi(2))
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(ShotEstimate {
        mean,
        std_error,
        shots,
        seed,
    })
}

/// Aggregate of a random-channel sweep testing `lower ≤ F ≤ F₀`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsSweep {
    pub n: usize,
    pub channels: usize,
    pub violations: usize,
    /// Most negative `F − lower`; ≥ 0 when the lower bound holds.
    pub min_lower_slack: f64,
    /// Most negative `F₀ − F`.
    pub min_upper_slack: f64,
    pub max_route_deviation: f64,
    /// max |Tr(χA) − (F − lower)| and |Tr(χB) − (F₀ − F)|
    pub max_witness_trace_error: f64,
}

/// Seed for the `index`-th channel of a sweep.
pub fn sweep_seed(seed: u64, n: usize, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 32)
        .wrapping_add(index as u64)
}

/// Environment dimensions cycle through 1, d, d².
pub fn sweep_env_dim(d: usize, index: usize) -> usize {
    [1, d, d * d][index % 3]
}

/// Samples `count` random channels and checks both bounds at `tol`.
pub fn bounds_sweep(g: &GammaOperator, count: usize, seed: u64, tol: f64) -> Result<BoundsSweep> {
    let n = g.n();
    let d = g.dim();
    let (a, b) = crate::gamma::witness_operators(g)?;
    let mut out = BoundsSweep {
        n,
        channels: count,
        violations: 0,
        min_lower_slack: f64::INFINITY,
        min_upper_slack: f64::INFINITY,
        max_route_deviation: 0.0,
        max_witness_trace_error: 0.0,
    };
    for i in 0..count {
        let c = random_cptp(n, sweep_env_dim(d, i), sweep_seed(seed, n, i))?;
        let f0 = zero_fidelity_choi(&c, g)?;
        let f0_direct = zero_fidelity_direct(&c)?;
        let f = process_fidelity(&c)?;
        let bounds = theorem1_bounds(f0);
        let lower_slack = f - bounds.lower;
        let upper_slack = bounds.upper - f;
        if lower_slack < -tol || upper_slack < -tol {
            out.violations += 1;
        }
        out.min_lower_slack = out.min_lower_slack.min(lower_slack);
        out.min_upper_slack = out.min_upper_slack.min(upper_slack);
        out.max_route_deviation = out.max_route_deviation.max((f0 - f0_direct).abs());
        let ta = c.choi().trace_product(&a)?.re;
        let tb = c.choi().trace_product(&b)?.re;
        out.max_witness_trace_error = out
            .max_witness_trace_error
            .max((ta - lower_slack).abs())
            .max((tb - upper_slack).abs());
    }
    Ok(out)
}
