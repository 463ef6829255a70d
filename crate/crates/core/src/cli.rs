//! Command-line front end: `solve`, `scan`, `eigs` and `sample-diag`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or parse
//! errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::circuit::{plan_circuit, GibbsCircuit};
use crate::hamiltonian::{parse_hamiltonian, PauliHamiltonian};
use crate::optimizer::{train_from, initial_parameters, OptimizationTrajectory, OptimizerConfig, TRANSFER_BUDGET_DIVISOR};
use crate::rbm::RbmParameters;
use crate::sampler::{
    empirical_success_rate, sample_distribution, success_lower_bound, total_variation, Backend, KPolicy,
    SamplerConfig, DEFAULT_SEED,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Largest `n + m` for which `sample-diag` compares against enumeration.
const DIAG_EXACT_LIMIT: usize = 20;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "qrbm", version, about = "RBM wavefunctions trained with a simulated Gibbs-sampling circuit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train once on a single Hamiltonian.
    Solve(SolveArgs),
    /// Solve a sequence of Hamiltonians listed in a JSON manifest.
    Scan(ScanArgs),
    /// Print the exact ground energy.
    Eigs(EigsArgs),
    /// Compare sampler backends on a parameter file.
    SampleDiag(DiagArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Hidden units; defaults to twice the qubit count.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Iterations (cold start default 20000).
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value_t = crate::optimizer::DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = crate::optimizer::DEFAULT_INIT_RANGE)]
    pub init_range: f64,
    #[arg(long, default_value = "exact")]
    pub sampler: Backend,
    #[arg(long, default_value_t = crate::sampler::DEFAULT_SHOTS)]
    pub shots: usize,
    #[arg(long, default_value_t = crate::optimizer::DEFAULT_SEED)]
    pub seed: u64,
    /// Fixed regulation exponent; adaptive when omitted.
    #[arg(long)]
    pub k: Option<f64>,
    /// Clamp vanishing signs to ±ε instead of skipping the sign-layer update.
    #[arg(long)]
    pub sign_clamp: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub hamiltonian: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Also print the exact ground energy and the gap.
    #[arg(long)]
    pub check_exact: bool,
    /// Trajectory JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Final parameters JSON output.
    #[arg(long)]
    pub dump_params: Option<PathBuf>,
    /// Trajectory CSV (iteration, energy) output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Iterations for warm-started points; defaults to 1/40 of the cold budget.
    #[arg(long)]
    pub warm_iters: Option<usize>,
    /// Warm start for the first point.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Results CSV output; printed to stdout as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    #[arg(long)]
    pub hamiltonian: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Expected visible units, checked against the file.
    #[arg(long)]
    pub visible: Option<usize>,
    /// Expected hidden units, checked against the file.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub shots: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub k: Option<f64>,
    /// JSON report output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Per-point overrides in a scan manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointOverrides {
    pub hidden: Option<usize>,
    pub iters: Option<usize>,
    pub lr: Option<f64>,
    pub init_range: Option<f64>,
    pub sampler: Option<Backend>,
    pub shots: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPoint {
    pub label: String,
    pub hamiltonian: PathBuf,
    #[serde(default)]
    pub overrides: PointOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanManifest {
    #[serde(default)]
    pub transfer: bool,
    pub points: Vec<ScanPoint>,
}

impl ScanManifest {
    /// Parse and validate; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut m: ScanManifest =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("manifest: {e}")))?;
        if m.points.is_empty() {
            return Err(CliError::Usage("manifest lists no points".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &mut m.points {
            if !seen.insert(p.label.clone()) {
                return Err(CliError::Usage(format!("duplicate label `{}`", p.label)));
            }
            if p.hamiltonian.is_relative() {
                p.hamiltonian = base.join(&p.hamiltonian);
            }
            if !p.hamiltonian.is_file() {
                return Err(CliError::Usage(format!(
                    "point `{}`: no such file {}",
                    p.label,
                    p.hamiltonian.display()
                )));
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// One row of the scan results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub label: String,
    pub rbm_min_energy: Option<f64>,
    pub exact_energy: Option<f64>,
    pub error: Option<String>,
}

impl ScanRow {
    pub fn gap(&self) -> Option<f64> {
        Some(self.rbm_min_energy? - self.exact_energy?)
    }
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let mut out = String::from("label,rbm_min_energy,exact_energy,gap\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.label,
            fmt(r.rbm_min_energy),
            fmt(r.exact_energy),
            fmt(r.gap())
        );
    }
    out
}

pub fn load_hamiltonian(path: &Path) -> Result<PauliHamiltonian, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_hamiltonian(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn sampler_config(t: &TrainArgs) -> SamplerConfig {
    SamplerConfig {
        backend: t.sampler,
        shots: t.shots,
        k_policy: t.k.map_or(KPolicy::Adaptive, KPolicy::Fixed),
        rng_seed: t.seed,
        ..SamplerConfig::default()
    }
}

fn optimizer_config(t: &TrainArgs, n_qubits: usize) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::new(t.hidden.unwrap_or(2 * n_qubits));
    cfg.learning_rate = t.lr;
    cfg.init_range = t.init_range;
    cfg.rng_seed = t.seed;
    if let Some(iters) = t.iters {
        cfg.iterations = iters;
    }
    if let Some(eps) = t.sign_clamp {
        cfg.sign_guard_policy = crate::optimizer::SignGuardPolicy::Clamp(eps);
    }
    cfg
}

fn validate(opt: &OptimizerConfig, s: &SamplerConfig) -> Result<(), CliError> {
    opt.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    s.validate().map_err(|e| CliError::Usage(e.to_string()))
}

fn starting_point(h: &PauliHamiltonian, cfg: &OptimizerConfig, warm: Option<&Path>) -> Result<RbmParameters, CliError> {
    match warm {
        None => Ok(initial_parameters(h.n_qubits(), cfg)),
        Some(path) => {
            let p = RbmParameters::load(path).map_err(|e| CliError::Usage(e.to_string()))?;
            if p.n_visible() != h.n_qubits() || p.n_hidden() != cfg.hidden_units {
                return Err(CliError::Usage(format!(
                    "{}: warm start has n={}, m={}; expected n={}, m={}",
                    path.display(),
                    p.n_visible(),
                    p.n_hidden(),
                    h.n_qubits(),
                    cfg.hidden_units
                )));
            }
            Ok(p)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub fn cmd_solve(args: &SolveArgs, out: &mut String) -> Result<OptimizationTrajectory, CliError> {
    let h = load_hamiltonian(&args.hamiltonian)?;
    let mut opt = optimizer_config(&args.train, h.n_qubits());
    opt.warm_start = args.warm_start.clone();
    let sampler = sampler_config(&args.train);
    validate(&opt, &sampler)?;
    let init = starting_point(&h, &opt, args.warm_start.as_deref())?;
    let traj = train_from(&h, &opt, &sampler, init).map_err(runtime)?;

    let _ = writeln!(out, "min_energy {}", traj.min_energy);
    let _ = writeln!(out, "argmin_iteration {}", traj.argmin_iteration);
    if args.check_exact {
        let exact = h.exact_ground_energy().map_err(runtime)?;
        let _ = writeln!(out, "exact_energy {exact}");
        let _ = writeln!(out, "gap {}", traj.min_energy - exact);
    }
    if let Some(path) = &args.out {
        write_file(path, &traj.to_json())?;
    }
    if let Some(path) = &args.csv {
        write_file(path, &traj.to_csv())?;
    }
    if let Some(path) = &args.dump_params {
        traj.final_parameters().save(path).map_err(runtime)?;
    }
    Ok(traj)
}

pub fn cmd_scan(args: &ScanArgs, out: &mut String) -> Result<Vec<ScanRow>, CliError> {
    let manifest = ScanManifest::load(&args.manifest)?;
    let cold_iters = args.train.iters.unwrap_or(crate::optimizer::DEFAULT_ITERATIONS);
    let warm_iters = args
        .warm_iters
        .unwrap_or_else(|| cold_iters.div_ceil(TRANSFER_BUDGET_DIVISOR));

    let mut rows = Vec::with_capacity(manifest.points.len());
    let mut previous: Option<RbmParameters> = None;
    for (i, point) in manifest.points.iter().enumerate() {
        let result = solve_point(args, &manifest, point, i, previous.take(), cold_iters, warm_iters);
        match result {
            Ok((row, best)) => {
                previous = Some(best);
                rows.push(row);
            }
            Err(e) => rows.push(ScanRow {
                label: point.label.clone(),
                rbm_min_energy: None,
                exact_energy: None,
                error: Some(e.message().to_string()),
            }),
        }
    }
    let csv = scan_csv(&rows);
    out.push_str(&csv);
    if let Some(path) = &args.out {
        write_file(path, &csv)?;
    }
    Ok(rows)
}

fn solve_point(
    args: &ScanArgs,
    manifest: &ScanManifest,
    point: &ScanPoint,
    index: usize,
    previous: Option<RbmParameters>,
    cold_iters: usize,
    warm_iters: usize,
) -> Result<(ScanRow, RbmParameters), CliError> {
    let h = load_hamiltonian(&point.hamiltonian)?;
    let o = &point.overrides;
    let mut t = args.train.clone();
    t.hidden = o.hidden.or(t.hidden);
    t.lr = o.lr.unwrap_or(t.lr);
    t.init_range = o.init_range.unwrap_or(t.init_range);
    t.sampler = o.sampler.unwrap_or(t.sampler);
    t.shots = o.shots.unwrap_or(t.shots);
    t.seed = o.seed.unwrap_or(t.seed);

    let transferred = manifest.transfer && previous.is_some();
    t.iters = Some(o.iters.unwrap_or(if transferred { warm_iters } else { cold_iters }));
    let opt = optimizer_config(&t, h.n_qubits());
    let sampler = sampler_config(&t);
    validate(&opt, &sampler)?;

    let init = match previous.filter(|_| manifest.transfer) {
        Some(p) if p.n_visible() == h.n_qubits() && p.n_hidden() == opt.hidden_units => p,
        Some(p) => {
            return Err(CliError::Runtime(format!(
                "cannot transfer n={}, m={} parameters to a point with n={}, m={}",
                p.n_visible(),
                p.n_hidden(),
                h.n_qubits(),
                opt.hidden_units
            )))
        }
        None if index == 0 => starting_point(&h, &opt, args.warm_start.as_deref())?,
        None => starting_point(&h, &opt, None)?,
    };
    let traj = train_from(&h, &opt, &sampler, init).map_err(runtime)?;
    let exact = h.exact_ground_energy().ok();
    Ok((
        ScanRow {
            label: point.label.clone(),
            rbm_min_energy: Some(traj.min_energy),
            exact_energy: exact,
            error: None,
        },
        traj.best_parameters(),
    ))
}

pub fn cmd_eigs(args: &EigsArgs, out: &mut String) -> Result<f64, CliError> {
    let h = load_hamiltonian(&args.hamiltonian)?;
    let e = h.exact_ground_energy().map_err(|e| CliError::Usage(e.to_string()))?;
    let _ = writeln!(out, "{e:.12}");
    Ok(e)
}

/// Sampler diagnostics for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagReport {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub qubits: usize,
    pub k: f64,
    pub success_bound: f64,
    pub success_probability: f64,
    pub step_success_probabilities: Vec<f64>,
    pub shots: usize,
    pub attempts: u64,
    pub empirical_success_rate: f64,
    /// Binomial standard error of the empirical rate.
    pub success_rate_stderr: f64,
    pub tv_analytic_vs_exact: Option<f64>,
    pub tv_shots_vs_exact: Option<f64>,
}

pub fn sample_diagnostics(p: &RbmParameters, shots: usize, seed: u64, k: Option<f64>) -> Result<DiagReport, CliError> {
    let base = SamplerConfig {
        shots,
        rng_seed: seed,
        k_policy: k.map_or(KPolicy::Adaptive, KPolicy::Fixed),
        ..SamplerConfig::default()
    };
    base.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let k = base.k_for(p);
    let circuit = GibbsCircuit::prepare(plan_circuit(p, k).map_err(runtime)?).map_err(runtime)?;

    let shots_cfg = SamplerConfig {
        backend: Backend::CircuitShots,
        ..base.clone()
    };
    let sampled = sample_distribution(p, &shots_cfg).map_err(runtime)?;
    let rate = empirical_success_rate(&sampled).map_err(runtime)?;

    let (tv_analytic, tv_shots) = if p.n_visible() + p.n_hidden() <= DIAG_EXACT_LIMIT {
        let exact = sample_distribution(p, &base).map_err(runtime)?.to_dense();
        let analytic_cfg = SamplerConfig {
            backend: Backend::CircuitAnalytic,
            ..base.clone()
        };
        let analytic = sample_distribution(p, &analytic_cfg).map_err(runtime)?.to_dense();
        (
            Some(total_variation(&analytic, &exact)),
            Some(total_variation(&sampled.to_dense(), &exact)),
        )
    } else {
        (None, None)
    };

    Ok(DiagReport {
        n_visible: p.n_visible(),
        n_hidden: p.n_hidden(),
        qubits: circuit.qubits_allocated(),
        k,
        success_bound: success_lower_bound(p, k),
        success_probability: circuit.success_probability(),
        step_success_probabilities: circuit.step_success_probabilities().to_vec(),
        shots,
        attempts: sampled.attempts,
        empirical_success_rate: rate,
        success_rate_stderr: (rate * (1.0 - rate) / sampled.attempts as f64).sqrt(),
        tv_analytic_vs_exact: tv_analytic,
        tv_shots_vs_exact: tv_shots,
    })
}

pub fn cmd_sample_diag(args: &DiagArgs, out: &mut String) -> Result<DiagReport, CliError> {
    let p = RbmParameters::load(&args.params).map_err(|e| CliError::Usage(e.to_string()))?;
    for (flag, want, got) in [("visible", args.visible, p.n_visible()), ("hidden", args.hidden, p.n_hidden())] {
        if let Some(want) = want {
            if want != got {
                return Err(CliError::Usage(format!(
                    "--{flag} {want} does not match {} ({got} in file)",
                    args.params.display()
                )));
            }
        }
    }
    let report = sample_diagnostics(&p, args.shots, args.seed, args.k)?;
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:e}"));
    let _ = writeln!(out, "qubits {}", report.qubits);
    let _ = writeln!(out, "k {}", report.k);
    let _ = writeln!(out, "success_bound {}", report.success_bound);
    let _ = writeln!(out, "success_probability {}", report.success_probability);
    let _ = writeln!(
        out,
        "empirical_success_rate {} ± {:.2e}",
        report.empirical_success_rate, report.success_rate_stderr
    );
    let _ = writeln!(out, "tv_analytic_vs_exact {}", opt(report.tv_analytic_vs_exact));
    let _ = writeln!(out, "tv_shots_vs_exact {}", opt(report.tv_shots_vs_exact));
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report).map_err(runtime)?;
        write_file(path, &json)?;
    }
    Ok(report)
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut out = String::new();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, &mut out).map(drop),
        Command::Scan(a) => cmd_scan(a, &mut out).and_then(|rows| {
            let failed: Vec<_> = rows
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.label)))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Runtime(failed.join("\n")))
            }
        }),
        Command::Eigs(a) => cmd_eigs(a, &mut out).map(drop),
        Command::SampleDiag(a) => cmd_sample_diag(a, &mut out).map(drop),
    };
    print!("{out}");
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}
