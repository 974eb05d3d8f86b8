use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use mdc_core::bounds::{compare_bounds, sweep_point, SweepRow};
use mdc_core::coupling::{verify_discrepancy_recursion, verify_maximal_coupling, verify_oscillation_bound, verify_sampled_discrepancy};
use mdc_core::dependency::{compute_h_exact, h_enumeration_cost};
use mdc_core::montecarlo::{check_tail_domination, default_t_grid, empirical_tail, tail_rows};
use mdc_core::resolvent::{operator_norms, resolvent, spectral_kappa};
use mdc_core::{Budget, Family, MdcError, ProcessSpec, VerificationReport};

use crate::config::{build_spec, validate_t, FamilyConfig, Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::output::{fmt_num, write_bounds, write_sparse, write_sweep, write_tail, write_verification};

/// Concentration bounds for causally dependent sequences.
#[derive(Debug, Parser)]
#[command(name = "mdc", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true, env = "MDC_CONFIG")]
    pub config: Option<PathBuf>,

    /// Directory for CSV outputs.
    #[arg(long, global = true, env = "MDC_OUT", default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, env = "MDC_SEED")]
    pub seed: Option<u64>,

    /// Maximum kernel evaluations for exact enumeration.
    #[arg(long, global = true, env = "MDC_BUDGET")]
    pub budget: Option<u64>,

    /// Comma-separated deviation levels.
    #[arg(long, global = true, env = "MDC_T", value_delimiter = ',')]
    pub t: Option<Vec<f64>>,

    #[arg(long = "n-samples", global = true, env = "MDC_N_SAMPLES")]
    pub n_samples: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Print the scenario and the cost of computing H exactly.
    Describe,
    /// Write H.csv and gamma.csv and print their norms.
    Matrix,
    /// Compare every tail bound; writes bounds.csv.
    Bounds,
    /// Run the exact and Monte Carlo checks; writes verify.csv and tail.csv.
    Verify,
    /// Proxy versus horizon for a window scenario; writes sweep.csv.
    Sweep,
}

pub fn load_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("missing --config (or MDC_CONFIG)".into()))?;
    let mut cfg = ScenarioConfig::from_path(path)?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(b) = cli.budget {
        cfg.run.budget = b;
    }
    if let Some(t) = &cli.t {
        validate_t(t).map_err(|m| CliError::Config(format!("--t: {m}")))?;
        cfg.run.t = Some(t.clone());
    }
    if let Some(n) = cli.n_samples {
        cfg.run.n_samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if cli.command != Command::Describe {
        std::fs::create_dir_all(&cli.out)?;
    }
    match cli.command {
        Command::Describe => describe(&cfg, out),
        Command::Matrix => matrix(&cfg, &cli.out, out),
        Command::Bounds => bounds(&cfg, &cli.out, out),
        Command::Verify => verify(&cfg, &cli.out, out),
        Command::Sweep => sweep(&cfg, &cli.out, out),
    }
}

fn positions(ctx: &[usize]) -> String {
    let p: Vec<String> = ctx.iter().map(|c| (c + 1).to_string()).collect();
    format!("[{}]", p.join(", "))
}

fn describe_family(cfg: &ScenarioConfig, spec: &ProcessSpec, calibrated_beta: Option<f64>) -> String {
    match (spec.family(), &cfg.family) {
        (Family::Markov { alpha, .. }, _) => format!("markov (alpha {})", fmt_num(*alpha)),
        (Family::CausalTree { max_out_degree, .. }, _) => format!("tree (max out-degree {max_out_degree})"),
        (Family::SlidingWindow { width }, FamilyConfig::Window { alpha, .. }) => format!(
            "window (width {width}, target alpha {}, mixture weight {})",
            fmt_num(*alpha),
            calibrated_beta.map(fmt_num).unwrap_or_else(|| "?".into())
        ),
        (f, _) => f.name().to_string(),
    }
}

fn describe(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let budget = Budget(cfg.run.budget);
    let (spec, cal) = build_spec(cfg, budget)?;
    writeln!(out, "horizon: {}", spec.horizon())?;
    writeln!(out, "alphabet: {}", spec.alphabet().size())?;
    writeln!(out, "family: {}", describe_family(cfg, &spec, cal.as_ref().map(|c| c.mixture.beta)))?;
    writeln!(out, "target: {:?}", cfg.target)?;
    writeln!(out, "contexts:")?;
    for j in 0..spec.horizon() {
        writeln!(out, "  step {}: {}", j + 1, positions(spec.context(j)))?;
    }
    let cost = h_enumeration_cost(&spec);
    writeln!(out, "exact H cost: {cost} kernel evaluations (budget {})", budget.0)?;
    if cost > budget.0 as u128 {
        writeln!(out, "warning: exact H exceeds the budget; matrix, bounds and verify will fail")?;
    }
    match Scenario::build(cfg, budget) {
        Ok(s) => writeln!(out, "sensitivity: {}", fmt_vec(s.sensitivity.as_slice()))?,
        Err(CliError::Core(MdcError::BudgetExceeded { .. })) => {
            writeln!(out, "warning: sensitivity oracle exceeds the budget")?
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("[{}]", s.join(", "))
}

fn matrix(cfg: &ScenarioConfig, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (spec, _) = build_spec(cfg, Budget(cfg.run.budget))?;
    let h = compute_h_exact(&spec, Budget(cfg.run.budget))?;
    let gamma = resolvent(&h);
    write_sparse(&dir.join("H.csv"), h.nonzeros())?;
    let n = gamma.n();
    write_sparse(
        &dir.join("gamma.csv"),
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| (i, j, gamma.get(i, j))),
    )?;
    let hn = operator_norms(h.as_matrix());
    let gn = operator_norms(gamma.as_matrix());
    writeln!(out, "H nonzeros: {}", h.nonzeros().len())?;
    writeln!(out, "H norms: l1 {} linf {} l2 {}", fmt_num(hn.l1), fmt_num(hn.linf), fmt_num(hn.l2))?;
    writeln!(out, "gamma norms: l1 {} linf {} l2 {}", fmt_num(gn.l1), fmt_num(gn.linf), fmt_num(gn.l2))?;
    writeln!(out, "kappa: {}", fmt_num(spectral_kappa(&gamma)))?;
    writeln!(out, "wrote {} and {}", dir.join("H.csv").display(), dir.join("gamma.csv").display())?;
    Ok(())
}

fn bounds(cfg: &ScenarioConfig, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let budget = Budget(cfg.run.budget);
    let s = Scenario::build(cfg, budget)?;
    let report = compare_bounds(&s.spec, &s.target, &s.sensitivity, budget)?;
    let t = cfg.run.t.clone().unwrap_or_else(|| default_t_grid(&s.sensitivity));
    let sc = &report.scenario;
    writeln!(out, "scenario: {} N={} |A|={} target={} c={}", sc.family, sc.horizon, sc.alphabet, sc.target, sc.c_description)?;
    writeln!(out, "column-sum alpha: {}", fmt_num(sc.alpha))?;
    if let Some(a) = sc.markov_alpha {
        writeln!(out, "superdiagonal alpha: {}", fmt_num(a))?;
    }
    if let Some(d) = sc.max_out_degree {
        writeln!(out, "forest out-degree: {d}")?;
    }
    writeln!(
        out,
        "kappa: {} (decay lower bound {})",
        fmt_num(sc.kappa),
        sc.kappa_lower.map(fmt_num).unwrap_or_else(|| "n/a".into())
    )?;
    let k = &report.kontorovich;
    match k.multiplier {
        Some(m) => writeln!(out, "unconditional baseline: alpha {} multiplier {}", fmt_num(k.alpha), fmt_num(m))?,
        None => writeln!(out, "unconditional baseline: alpha {} divergent", fmt_num(k.alpha))?,
    }
    writeln!(out, "{:<16} {:>16} {:>10}  reason", "bound", "proxy", "applies")?;
    for b in &report.bounds {
        writeln!(out, "{:<16} {:>16} {:>10}  {}", b.name(), fmt_num(b.proxy), b.is_applicable(), b.reason())?;
    }
    let path = dir.join("bounds.csv");
    write_bounds(&path, &report.bounds, &t)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

/// Steps whose kernel has at least two context rows, paired first-vs-last.
fn coupling_pairs(spec: &ProcessSpec, limit: usize) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
    spec.steps()
        .iter()
        .filter(|k| k.num_rows() >= 2)
        .take(limit)
        .map(|k| (k.step(), k.row(0).to_vec(), k.row(k.num_rows() - 1).to_vec()))
        .collect()
}

pub fn verify_suite(cfg: &ScenarioConfig) -> Result<(VerificationReport, Vec<mdc_core::montecarlo::TailCheckRow>), CliError> {
    let budget = Budget(cfg.run.budget);
    let seed = cfg.run.seed;
    let n_samples = cfg.run.n_samples;
    let s = Scenario::build(cfg, budget)?;
    let mut report = verify_oscillation_bound(&s.spec, &s.target, &s.sensitivity, budget)?;
    if !report.passed() {
        return Ok((report, Vec::new()));
    }
    report.extend(verify_discrepancy_recursion(&s.spec, budget)?);
    for (step, mu, nu) in coupling_pairs(&s.spec, 3) {
        let mut r = verify_maximal_coupling(&mu, &nu, n_samples, seed ^ step as u64, 4.0)?;
        for rec in &mut r.records {
            rec.k = Some(step);
        }
        report.extend(r);
    }
    if s.spec.alphabet().size() >= 2 {
        let gamma = resolvent(&compute_h_exact(&s.spec, budget)?);
        report.extend(verify_sampled_discrepancy(&s.spec, &gamma, &[], 0, 1, n_samples, seed)?);
    }
    let bounds = compare_bounds(&s.spec, &s.target, &s.sensitivity, budget)?;
    let grid = cfg.run.t.clone().unwrap_or_else(|| default_t_grid(&s.sensitivity));
    let est = empirical_tail(&s.spec, &s.target, &grid, n_samples, seed, budget)?;
    let mut rows = Vec::new();
    for b in bounds.bounds.iter().filter(|b| b.is_applicable()) {
        report.extend(check_tail_domination(&est, b));
        rows.extend(tail_rows(&est, b));
    }
    Ok((report, rows))
}

fn verify(cfg: &ScenarioConfig, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (report, rows) = verify_suite(cfg)?;
    let path = dir.join("verify.csv");
    write_verification(&path, &report)?;
    if !rows.is_empty() {
        write_tail(&dir.join("tail.csv"), &rows)?;
    }
    let mut groups: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    for r in &report.records {
        let key = r.check.split([' ', '@', ':']).next().unwrap_or("").to_string();
        let g = groups.entry(key).or_insert((0, 0, f64::INFINITY));
        g.0 += 1;
        g.1 += usize::from(!r.pass);
        g.2 = g.2.min(r.slack);
    }
    writeln!(out, "{:<22} {:>7} {:>7} {:>16}", "check", "rows", "failed", "worst slack")?;
    for (name, (rows, failed, slack)) in &groups {
        writeln!(out, "{name:<22} {rows:>7} {failed:>7} {:>16}", fmt_num(*slack))?;
    }
    let failures: Vec<_> = report.failures().collect();
    for f in &failures {
        writeln!(
            out,
            "FAIL {} k={} j={} observed={} bound={}",
            f.check,
            f.k.map(|k| (k + 1).to_string()).unwrap_or_default(),
            f.j.map(|j| (j + 1).to_string()).unwrap_or_default(),
            fmt_num(f.observed),
            fmt_num(f.bound)
        )?;
    }
    writeln!(out, "wrote {}", path.display())?;
    if failures.is_empty() {
        writeln!(out, "all {} checks passed", report.records.len())?;
        Ok(())
    } else {
        Err(CliError::VerificationFailed(failures.len()))
    }
}

pub fn sweep_rows(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [sweep] table with horizons".into()))?;
    let budget = Budget(cfg.run.budget);
    sweep
        .horizons
        .iter()
        .map(|&n| {
            let c = cfg.at_horizon(n)?;
            let s = Scenario::build(&c, budget)?;
            let h = match s.calibration {
                Some(cal) => cal.h,
                None => compute_h_exact(&s.spec, budget)?,
            };
            Ok(sweep_point(&h, &s.sensitivity)?)
        })
        .collect()
}

fn sweep(cfg: &ScenarioConfig, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let rows = sweep_rows(cfg)?;
    writeln!(out, "{:>6} {:>16} {:>22} {:>22} {:>10}", "N", "mdc_proxy", "scalar_collapse_proxy", "sparse_terminal_bound", "alpha")?;
    for r in &rows {
        writeln!(
            out,
            "{:>6} {:>16} {:>22} {:>22} {:>10}",
            r.n,
            fmt_num(r.mdc_proxy),
            fmt_num(r.scalar_collapse_proxy),
            r.sparse_terminal_bound.map(fmt_num).unwrap_or_else(|| "n/a".into()),
            fmt_num(r.alpha)
        )?;
    }
    let path = dir.join("sweep.csv");
    write_sweep(&path, &rows)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}
