use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout(), $($arg)*)?
    };
}

use zerofid::bounds::{default_f0_grid, feasible_f0_range_with, write_csv};
use zerofid::fidelity::bounds_sweep;
use zerofid::gamma::{
    build_gamma_factor, build_gamma_with_shift, overlap_matrix, phi_eigen_residual,
    witness_report,
};
use zerofid::matrix::hermitian_eigenvalues;
use zerofid::quantum::MAX_QUBITS;
use zerofid::{
    build_gamma, depolarizing, estimate_zero_fidelity, random_cptp, sweep, theorem1_bounds,
    zero_fidelity_choi, Channel, FidelityReport, GammaOperator, SolverConfig,
};

use crate::grid::{parse_grid, parse_n_list};
use crate::{ChannelSpec, CheckFailure, Cli, Command, ValidationError};

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid(format!("--tol must be positive and finite, got {tol}")));
        }
    }
    match &cli.command {
        Command::Verify(args) => verify(cli, args),
        Command::Fidelity(args) => fidelity(cli, &args.channel),
        Command::Sweep(args) => run_sweep(cli, args),
        Command::Estimate(args) => estimate(cli, args),
        Command::FeasibleRange(args) => feasible_range(cli, args),
    }
}

fn single_n(cli: &Cli, default: usize) -> Result<usize> {
    let n = match &cli.n {
        None => default,
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| invalid(format!("--n expects a single qubit count, got `{s}`")))?,
    };
    check_n(n)?;
    Ok(n)
}

fn check_n(n: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(invalid(format!("qubit count {n} outside [1, {MAX_QUBITS}]")));
    }
    Ok(())
}

fn solver_config(cli: &Cli, max_iter: usize) -> Result<SolverConfig> {
    if max_iter == 0 {
        return Err(invalid("--max-iter must be at least 1"));
    }
    Ok(SolverConfig {
        tolerance: cli.tol.unwrap_or(1e-7),
        max_iterations: max_iter,
        ..SolverConfig::default()
    })
}

/// Temp file next to `path`, created up front so an unwritable destination
/// fails before any computation.
struct AtomicOutput {
    tmp: PathBuf,
    dest: PathBuf,
    file: File,
}

impl AtomicOutput {
    fn create(dest: &Path) -> Result<Self> {
        let name = dest
            .file_name()
            .ok_or_else(|| invalid(format!("output path `{}` has no file name", dest.display())))?;
        let mut tmp_name = name.to_os_string();
        tmp_name.push(format!(".tmp-{}", std::process::id()));
        let tmp = dest.with_file_name(tmp_name);
        let file = File::create(&tmp)
            .map_err(|e| invalid(format!("cannot write `{}`: {e}", dest.display())))?;
        Ok(Self {
            tmp,
            dest: dest.to_path_buf(),
            file,
        })
    }

    fn commit(mut self) -> Result<()> {
        self.file.flush()?;
        self.file.sync_all()?;
        fs::rename(&self.tmp, &self.dest)
            .with_context(|| format!("renaming into `{}`", self.dest.display()))?;
        Ok(())
    }
}

impl Drop for AtomicOutput {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.tmp);
    }
}

fn emit<T: Serialize>(cli: &Cli, value: &T, out: Option<AtomicOutput>) -> Result<()> {
    let text = if cli.json {
        serde_json::to_string(value)?
    } else {
        serde_json::to_string_pretty(value)?
    };
    say!("{text}");
    if let Some(mut out) = out {
        writeln!(out.file, "{text}")?;
        out.commit()?;
    }
    Ok(())
}

fn open_out(cli: &Cli) -> Result<Option<AtomicOutput>> {
    cli.out.as_deref().map(AtomicOutput::create).transpose()
}

fn build_channel(cli: &Cli, spec: &ChannelSpec) -> Result<(Channel, String)> {
    match spec {
        ChannelSpec::Depolarizing { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(invalid(format!("--p must lie in [0, 1], got {p}")));
            }
            let n = single_n(cli, 1)?;
            Ok((depolarizing(n, *p)?, format!("depolarizing(p = {p})")))
        }
        ChannelSpec::Random { env_dim } => {
            if *env_dim == 0 {
                return Err(invalid("--env-dim must be at least 1"));
            }
            let n = single_n(cli, 1)?;
            Ok((
                random_cptp(n, *env_dim, cli.seed)?,
                format!("random(env_dim = {env_dim}, seed = {})", cli.seed),
            ))
        }
        ChannelSpec::Identity => {
            let n = single_n(cli, 1)?;
            Ok((Channel::identity(n)?, "identity".into()))
        }
        ChannelSpec::File { path } => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read `{}`: {e}", path.display())))?;
            let channel = Channel::from_json(&text)
                .with_context(|| format!("loading channel from `{}`", path.display()))?;
            if cli.n.is_some() {
                let n = single_n(cli, channel.n())?;
                if n != channel.n() {
                    return Err(invalid(format!(
                        "--n {n} does not match the channel file (n = {})",
                        channel.n()
                    )));
                }
            }
            Ok((channel, format!("file({})", path.display())))
        }
    }
}

#[derive(Serialize)]
struct FidelityOutput {
    n: usize,
    channel: String,
    #[serde(flatten)]
    report: FidelityReport,
}

fn fidelity(cli: &Cli, spec: &ChannelSpec) -> Result<()> {
    let (channel, label) = build_channel(cli, spec)?;
    let out = open_out(cli)?;
    let g = build_gamma(channel.n())?;
    let report = FidelityReport::compute(&channel, &g)?;
    emit(
        cli,
        &FidelityOutput {
            n: channel.n(),
            channel: label,
            report,
        },
        out,
    )
}

#[derive(Serialize)]
struct EstimateOutput {
    n: usize,
    channel: String,
    mean: f64,
    std_error: f64,
    shots: u64,
    seed: u64,
    exact_f0: f64,
    theorem1_lower: f64,
    theorem1_upper: f64,
}

fn estimate(cli: &Cli, args: &crate::EstimateArgs) -> Result<()> {
    if args.shots == 0 {
        return Err(invalid("--shots must be at least 1"));
    }
    let (channel, label) = build_channel(cli, &args.channel)?;
    let out = open_out(cli)?;
    let est = estimate_zero_fidelity(&channel, args.shots, cli.seed)?;
    let exact = zero_fidelity_choi(&channel, &build_gamma(channel.n())?)?;
    let bounds = theorem1_bounds(est.mean);
    emit(
        cli,
        &EstimateOutput {
            n: channel.n(),
            channel: label,
            mean: est.mean,
            std_error: est.std_error,
            shots: est.shots,
            seed: est.seed,
            exact_f0: exact,
            theorem1_lower: bounds.lower,
            theorem1_upper: bounds.upper,
        },
        out,
    )
}

#[derive(Serialize)]
struct RangeOutput {
    n: usize,
    f0_min: f64,
    f0_max: f64,
}

fn feasible_range(cli: &Cli, args: &crate::RangeArgs) -> Result<()> {
    let n = single_n(cli, 1)?;
    let config = solver_config(cli, args.max_iter)?;
    let out = open_out(cli)?;
    let (f0_min, f0_max) = feasible_f0_range_with(&build_gamma(n)?, &config)?;
    emit(cli, &RangeOutput { n, f0_min, f0_max }, out)
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    failures: usize,
    wall_time_s: f64,
    out: Option<PathBuf>,
}

fn run_sweep(cli: &Cli, args: &crate::SweepArgs) -> Result<()> {
    let ns = match &cli.n {
        None => vec![1, 2, 3],
        Some(s) => parse_n_list(s).map_err(|e| invalid(format!("{e:#}")))?,
    };
    for &n in &ns {
        check_n(n)?;
    }
    let grid = match &args.f0 {
        None => default_f0_grid(),
        Some(s) => parse_grid(s).map_err(|e| invalid(format!("{e:#}")))?,
    };
    if let Some(bad) = grid.iter().find(|f| **f > 1.0 + 1e-12) {
        return Err(invalid(format!("F0 = {bad} exceeds 1")));
    }
    let config = solver_config(cli, args.max_iter)?;
    let out = open_out(cli)?;

    let start = Instant::now();
    let rows = sweep(&ns, &grid, &config)?;
    let elapsed = start.elapsed().as_secs_f64();
    let failures = rows
        .iter()
        .filter(|r| {
            r.min_status != zerofid::SolveStatus::Solved
                || r.max_status != zerofid::SolveStatus::Solved
        })
        .count();

    let summary = SweepSummary {
        rows: rows.len(),
        failures,
        wall_time_s: elapsed,
        out: cli.out.clone(),
    };
    match out {
        Some(mut out) => {
            write_csv(&rows, &mut out.file)?;
            out.commit()?;
            print_summary(cli, &summary)?;
        }
        None => {
            write_csv(&rows, std::io::stdout().lock())?;
            eprintln!(
                "{} rows, {} failed cells, {:.2} s",
                summary.rows, summary.failures, summary.wall_time_s
            );
        }
    }
    if failures > 0 {
        return Err(CheckFailure(format!("{failures} sweep cell(s) did not solve")).into());
    }
    Ok(())
}

fn print_summary(cli: &Cli, s: &SweepSummary) -> Result<()> {
    if cli.json {
        say!("{}", serde_json::to_string(s)?);
    } else {
        say!(
            "wrote {} rows to {} ({} failed cells, {:.2} s)",
            s.rows,
            s.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            s.failures,
            s.wall_time_s
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CheckLine {
    n: usize,
    check: &'static str,
    pass: bool,
    detail: String,
}

fn verify(cli: &Cli, args: &crate::VerifyArgs) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&args.n_max) {
        return Err(invalid(format!(
            "--n-max must lie in [1, {MAX_QUBITS}], got {}",
            args.n_max
        )));
    }
    if args.channels == 0 {
        return Err(invalid("--channels must be at least 1"));
    }
    let tol = cli.tol.unwrap_or(1e-9);
    let out = open_out(cli)?;

    let mut lines = Vec::new();
    for n in 1..=args.n_max {
        let g = if args.tamper_gamma {
            build_gamma_with_shift(n, 1)?
        } else {
            build_gamma(n)?
        };
        lines.extend(verify_one(&g, args.channels, cli.seed, tol)?);
    }

    let failed: Vec<&CheckLine> = lines.iter().filter(|l| !l.pass).collect();
    if cli.json {
        say!("{}", serde_json::to_string(&lines)?);
    } else {
        for l in &lines {
            say!(
                "{} n={} {:<22} {}",
                if l.pass { "PASS" } else { "FAIL" },
                l.n,
                l.check,
                l.detail
            );
        }
    }
    if let Some(mut out) = out {
        writeln!(out.file, "{}", serde_json::to_string_pretty(&lines)?)?;
        out.commit()?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<String> = failed.iter().map(|l| format!("n={} {}", l.n, l.check)).collect();
        Err(CheckFailure(format!("{} check(s) failed: {}", failed.len(), names.join(", "))).into())
    }
}

fn verify_one(g: &GammaOperator, channels: usize, seed: u64, tol: f64) -> Result<Vec<CheckLine>> {
    let n = g.n();
    let d = g.dim() as f64;
    let mut lines = Vec::new();
    let mut push = |check, pass, detail: String| lines.push(CheckLine { n, check, pass, detail });

    let spec = g.spectrum_check(tol);
    push(
        "spectrum",
        spec.pass,
        format!(
            "top {:.12} (x{}), d/3 multiplicity {} (expected {})",
            spec.top_eigenvalue, spec.top_count, spec.second_count, spec.expected_second_count
        ),
    );
    let trace_err = (spec.trace - d * d).abs();
    push("trace", trace_err <= tol, format!("|Tr Γ − d²| = {trace_err:.3e}"));

    let residual = phi_eigen_residual(g)?;
    push("phi-eigenvector", residual < tol, format!("‖Γφ − dφ‖ = {residual:.3e}"));

    let factor = build_gamma_factor(n)?;
    let factor_err = (&factor * &factor.adjoint()).max_abs_diff(g.matrix())?;
    push("factorization", factor_err <= 1e-10, format!("max |γγ† − Γ| = {factor_err:.3e}"));

    let m_spec = hermitian_eigenvalues(&overlap_matrix(n)?)?;
    let spec_err = m_spec
        .iter()
        .zip(&g.spectrum().eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    push("overlap-spectrum", spec_err <= tol, format!("max |spec M − spec Γ| = {spec_err:.3e}"));

    let w = witness_report(g)?;
    let witness_pass = w.min_eig_a >= -tol
        && w.min_eig_b >= -tol
        && w.perp_phi_overlap.abs() <= tol
        && (w.perp_top_eigenvalue - d / 3.0).abs() <= tol;
    push(
        "witnesses",
        witness_pass,
        format!(
            "min eig A {:.3e}, min eig B {:.3e}, ⟨φ|Γ⊥|φ⟩ {:.3e}, top Γ⊥ {:.12}",
            w.min_eig_a, w.min_eig_b, w.perp_phi_overlap, w.perp_top_eigenvalue
        ),
    );

    let s = bounds_sweep(g, channels, seed, tol)?;
    push(
        "bounds",
        s.violations == 0,
        format!(
            "{} channels, {} violations, min slack lower {:.3e} upper {:.3e}",
            s.channels, s.violations, s.min_lower_slack, s.min_upper_slack
        ),
    );
    push(
        "route-equivalence",
        s.max_route_deviation < 1e-10,
        format!("max |F0 direct − F0 Choi| = {:.3e}", s.max_route_deviation),
    );
    push(
        "witness-traces",
        s.max_witness_trace_error < tol,
        format!("max trace identity error {:.3e}", s.max_witness_trace_error),
    );
    Ok(lines)
}
