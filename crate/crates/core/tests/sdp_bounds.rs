mod common;

use common::*;
use proptest::prelude::*;
use zerofid::bounds::{default_f0_grid, write_csv};
use zerofid::gamma::{overlap_matrix, witness_operators};
use zerofid::matrix::hermitian_eigenvalues;
use zerofid::quantum::{haar_unitary, unitary_channel};
use zerofid::*;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn real_psd(side: usize, seed: u64) -> RealMatrix {
    let mut r = rng(seed);
    let a = random_matrix(side, side, &mut r).real_rows();
    let m = RealMatrix::from_row_slice(side, side, &a.concat());
    &m * m.transpose()
}

fn real_symmetric(side: usize, seed: u64) -> RealMatrix {
    let mut r = rng(seed);
    let a = random_matrix(side, side, &mut r).real_rows();
    let m = RealMatrix::from_row_slice(side, side, &a.concat());
    (&m + m.transpose()) * 0.5
}

#[test]
fn psd_projection_is_nearest() {
    for seed in 0..100 {
        let s = real_symmetric(6, seed);
        let p = project_psd(&s).unwrap();
        let best = (&s - &p).norm();
        let q = real_psd(6, 1000 + seed);
        assert!(best <= (&s - &q).norm() + 1e-12);
        assert!(p.clone().symmetric_eigenvalues().min() > -1e-12);
        // Idempotent on the cone.
        assert!((project_psd(&p).unwrap() - &p).amax() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psd_projection_keeps_positive_part(seed in 0u64..10_000) {
        let s = real_symmetric(5, seed);
        let p = project_psd(&s).unwrap();
        let pos: f64 = s.clone().symmetric_eigenvalues().iter().map(|l| l.max(0.0)).sum();
        prop_assert!((p.trace() - pos).abs() < 1e-10);
    }
}

#[test]
fn solver_is_deterministic() {
    let a = min_process_fidelity(2, 0.93, &cfg()).unwrap();
    let b = min_process_fidelity(2, 0.93, &cfg()).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.solution.iterations, b.solution.iterations);
}

#[test]
fn solution_diagnostics() {
    for sense in [Sense::Minimize, Sense::Maximize] {
        let g = build_gamma(2).unwrap();
        let out = zerofid::bounds::solve_fidelity_sdp(&g, 0.92, sense, &cfg()).unwrap();
        let s = &out.solution;
        assert_eq!(s.status, SolveStatus::Solved);
        assert!(s.primal_residual < 1e-7);
        assert!(s.complementarity.abs() < 1e-5, "{}", s.complementarity);
        assert!(s.min_eigenvalue > -1e-8);
        let diag = s.diagnostics();
        assert_eq!(diag.status, SolveStatus::Solved);
        assert_eq!(diag.iterations, s.iterations);
    }
}

#[test]
fn trace_preservation_constraint_count() {
    for n in 1..=3 {
        let d = 1usize << n;
        let p = build_fidelity_sdp(n, 0.95, Sense::Minimize).unwrap();
        // Trace preservation over a Hermitian basis of size d², plus the F₀ row.
        assert_eq!(p.constraints.len(), d * d + 1);
        assert_eq!(p.side, 2 * d * d);
    }
}

#[test]
fn dropping_the_f0_row_relaxes() {
    let g = build_gamma(2).unwrap();
    let d = 4;
    let mut relaxed = SdpProblem::new(
        real_embed(&max_entangled(2).unwrap().projector()).unwrap(),
        Sense::Minimize,
    )
    .unwrap()
    .with_hermitian_embedding()
    .unwrap();
    zerofid::bounds::add_trace_preservation(&mut relaxed, d).unwrap();
    let free = solve(&relaxed, &cfg()).unwrap().objective_value / 2.0;
    let pinned = zerofid::bounds::solve_fidelity_sdp(&g, 0.9, Sense::Minimize, &cfg())
        .unwrap()
        .value;
    assert!(free <= pinned + 1e-6);
    assert!(free.abs() < 1e-6, "unconstrained min F is 0, got {free}");
}

#[test]
fn pinned_extremes() {
    let cases = [
        (2, 0.9, Sense::Minimize, 0.85),
        (2, 0.9, Sense::Maximize, 0.8875),
        (2, 0.95, Sense::Maximize, 0.94375),
        (3, 0.95, Sense::Maximize, 0.9480769231),
    ];
    for (n, f0, sense, want) in cases {
        let got = match sense {
            Sense::Minimize => min_process_fidelity(n, f0, &cfg()),
            Sense::Maximize => max_process_fidelity(n, f0, &cfg()),
        }
        .unwrap()
        .value;
        assert!((got - want).abs() < 1e-6, "n={n} F0={f0} {sense:?}: {got}");
    }
}

#[test]
fn maximum_follows_closed_form() {
    // Cross-checked against an independent conic solver.
    for n in 1..=3 {
        let k = 3f64.powi(n as i32);
        for f0 in [0.9, 0.96, 0.99] {
            let got = max_process_fidelity(n, f0, &cfg()).unwrap().value;
            let want = 1.0 - (1.0 - f0) * k / (k - 1.0);
            assert!((got - want).abs() < 1e-6, "n={n} F0={f0}: {got} vs {want}");
        }
    }
}

#[test]
fn minimum_is_linear_on_grid() {
    for n in 1..=2 {
        let grid: Vec<f64> = (0..10).map(|i| 0.91 + 0.01 * i as f64).collect();
        for f0 in grid {
            let got = min_process_fidelity(n, f0, &cfg()).unwrap().value;
            assert!((got - (1.0 - 1.5 * (1.0 - f0))).abs() < 1e-5, "n={n} F0={f0}");
        }
    }
}

#[test]
fn perfect_zero_fidelity_forces_identity() {
    for n in 1..=3 {
        for sense in [Sense::Minimize, Sense::Maximize] {
            let g = build_gamma(n).unwrap();
            let v = zerofid::bounds::solve_fidelity_sdp(&g, 1.0, sense, &cfg()).unwrap().value;
            assert!((v - 1.0).abs() < 1e-6, "n={n}: {v}");
        }
    }
}

#[test]
fn extremes_bracket_random_channels() {
    let g = build_gamma(2).unwrap();
    for seed in 0..20 {
        let c = random_cptp(2, 4, 300 + seed).unwrap();
        let f0 = zero_fidelity_choi(&c, &g).unwrap();
        if f0 < 0.2 {
            continue;
        }
        let f = process_fidelity(&c).unwrap();
        let lo = min_process_fidelity(2, f0, &cfg()).unwrap().value;
        let hi = max_process_fidelity(2, f0, &cfg()).unwrap().value;
        assert!(lo - 1e-6 <= f && f <= hi + 1e-6, "F0={f0}: {lo} <= {f} <= {hi}");
    }
}

#[test]
fn feasible_range_brackets_unitaries() {
    let (lo, hi) = feasible_f0_range(1, &cfg()).unwrap();
    assert_eq!(hi, 1.0);
    assert!((lo - 1.0 / 3.0).abs() < 1e-6);
    let g = build_gamma(1).unwrap();
    // Spectral floor: Tr(χΓ)/d ≥ λ_min(Γ)/d.
    assert!(lo >= g.spectrum().min() / 2.0 - 1e-9);
    let mut r = rng(77);
    let mut best = f64::INFINITY;
    for _ in 0..2000 {
        let u = haar_unitary(2, &mut r);
        let f0 = zero_fidelity_choi(&unitary_channel(1, &u).unwrap(), &g).unwrap();
        best = best.min(f0);
    }
    assert!(lo <= best + 1e-9);
    let (lo2, _) = feasible_f0_range(2, &cfg()).unwrap();
    assert!((lo2 - 1.0 / 9.0).abs() < 1e-6);
}

#[test]
fn infeasible_targets_are_reported() {
    match min_process_fidelity(1, 0.2, &cfg()) {
        Err(Error::InfeasibleF0 { f0_min, f0_max, .. }) => {
            assert!((f0_min - 1.0 / 3.0).abs() < 1e-6);
            assert_eq!(f0_max, 1.0);
        }
        other => panic!("expected InfeasibleF0, got {other:?}"),
    }
    assert!(matches!(
        max_process_fidelity(1, 1.2, &cfg()),
        Err(Error::InfeasibleF0 { .. })
    ));
}

#[test]
fn sweep_rows_and_csv() {
    let rows = sweep(&[2, 1], &[1.0, 0.95, 0.9], &cfg()).unwrap();
    assert_eq!(rows.len(), 6);
    let keys: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.f0)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    assert_eq!(keys, sorted);
    for r in rows.iter().filter(|r| r.f0 == 1.0) {
        assert!((r.sdp_min - 1.0).abs() < 1e-6 && (r.sdp_max - 1.0).abs() < 1e-6);
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    assert_eq!(lines.count(), 6);
}

#[test]
fn default_grid_spans_ten_percent() {
    let g = default_f0_grid();
    assert_eq!(g.len(), 11);
    assert!((g.first().unwrap() - 1.0).abs() < 1e-12 || (g.last().unwrap() - 1.0).abs() < 1e-12);
    assert!(g.iter().all(|&f| (0.9 - 1e-12..=1.0 + 1e-12).contains(&f)));
}

#[test]
fn witness_trace_identities() {
    for n in 1..=2 {
        let g = build_gamma(n).unwrap();
        let (a, b) = witness_operators(&g).unwrap();
        for seed in 0..100 {
            let c = random_cptp(n, 1 + seed as usize % 5, seed).unwrap();
            let f = process_fidelity(&c).unwrap();
            let f0 = zero_fidelity_direct(&c).unwrap();
            let ta = c.choi().trace_product(&a).unwrap().re;
            let tb = c.choi().trace_product(&b).unwrap().re;
            assert!((ta - (f - theorem1_bounds(f0).lower)).abs() < 1e-9);
            assert!((tb - (f0 - f)).abs() < 1e-9);
        }
    }
}

#[test]
fn single_qubit_fidelity_relation() {
    let g = build_gamma(1).unwrap();
    for seed in 0..100 {
        let c = random_cptp(1, 1 + seed as usize % 4, seed).unwrap();
        let r = FidelityReport::compute(&c, &g).unwrap();
        assert!((r.f - (3.0 * r.f0 - 1.0) / 2.0).abs() < 1e-10);
        assert!((r.f_avg - r.f0).abs() < 1e-10);
        assert!(r.route_deviation < 1e-10);
    }
}

#[test]
fn overlap_matrix_spectrum_matches_gamma() {
    for n in 1..=3 {
        let m = overlap_matrix(n).unwrap();
        let mut ov = hermitian_eigenvalues(&m).unwrap();
        let g = build_gamma(n).unwrap();
        let mut gv = g.spectrum().eigenvalues.clone();
        // Γ = γγ† and M = γ†γ share their nonzero spectrum.
        ov.retain(|l| l.abs() > 1e-9);
        gv.retain(|l| l.abs() > 1e-9);
        assert_eq!(ov.len(), gv.len());
        for (x, y) in ov.iter().zip(&gv) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn estimator_brackets_exact_value() {
    let c = random_cptp(2, 3, 9).unwrap();
    let exact = zero_fidelity_direct(&c).unwrap();
    let e = estimate_zero_fidelity(&c, 200_000, 5).unwrap();
    assert!((e.mean - exact).abs() <= 5.0 * e.std_error);
    let id = estimate_zero_fidelity(&Channel::identity(1).unwrap(), 1000, 1).unwrap();
    assert_eq!(id.mean, 1.0);
    assert_eq!(id.std_error, 0.0);
    assert!(estimate_zero_fidelity(&c, 0, 1).is_err());
}

#[test]
fn paulis_have_zero_fidelity_below_one() {
    let g = build_gamma(1).unwrap();
    for p in ['X', 'Y', 'Z'] {
        let c = unitary_channel(1, &pauli(p)).unwrap();
        assert!(process_fidelity(&c).unwrap().abs() < 1e-12);
        assert!((zero_fidelity_choi(&c, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}
