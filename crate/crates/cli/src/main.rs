//! `tbvqd`: band sweeps, correlator benchmarks, validation batteries and
//! Hamiltonian dumps from the command line.
//!
//! Exit codes: 0 success, 1 computational failure, 2 usage or config error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use tbvqd::bench::{correlator_trials, execution_report, TrialConfig, DEFAULT_POLICY_SEED};
use tbvqd::optimizer::OptimizerConfig;
use tbvqd::pauli::{qubit_hamiltonian, qwc_groups_conventional};
use tbvqd::protocol::{Mode, XySign};
use tbvqd::report::{self, RunManifest};
use tbvqd::tbmodel::{bloch_matrix, exact_bands, KVector, ModelDocument};
use tbvqd::validation::{run_validation, ValidationConfig, MAX_VALIDATION_QUBITS};
use tbvqd::vqd::{band_sweep, DeflationConfig, RunConfig};

/// Analytic sweeps must match exact diagonalization this closely to exit 0.
const ANALYTIC_BAND_TOLERANCE: f64 = 1e-5;
const DEFAULT_BAND_SHOTS: u64 = 20_000;
const DEFAULT_BENCH_SHOTS: u64 = 10_000;
const DEFAULT_EXECUTION_SHOTS: [u64; 3] = [10_000, 100_000, 1_000_000];

#[derive(Parser, Debug)]
#[command(name = "tbvqd", version, about = "Tight-binding band structures from a three-setting VQD protocol")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Base seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per measurement setting.
    #[arg(long, global = true, conflicts_with = "analytic")]
    shots: Option<u64>,
    /// Exact outcome probabilities instead of sampling.
    #[arg(long, global = true)]
    analytic: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for CSV, SVG and manifest files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band structure along the model's k-path.
    Bands {
        /// Model file, or the name of a shipped model (cuo2, graphene_bilayer).
        model: Option<String>,
        /// Fixed deflation penalty in eV.
        #[arg(long)]
        beta: Option<f64>,
        /// Optimizations per k-point and level, best kept.
        #[arg(long)]
        restarts: Option<usize>,
        /// Start every k-point from scratch.
        #[arg(long)]
        cold: bool,
        /// Disable correlator clipping.
        #[arg(long)]
        no_clip: bool,
    },
    /// Correlator statistics and circuit-execution counts.
    Bench {
        /// Qubit range, `a..b` inclusive.
        #[arg(long)]
        qubits: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Correlator pairs, `j:l` comma separated.
        #[arg(long)]
        pairs: Option<String>,
    },
    /// Analytic invariant batteries.
    Validate {
        #[arg(long)]
        max_qubits: Option<usize>,
        /// Random matrices and angle sets per qubit count.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, hide = true)]
        corrupt_xy_sign: bool,
    },
    /// Bloch matrix, Pauli terms and measurement groups at one k-point.
    DumpHamiltonian {
        model: String,
        /// Index along the model's k-path.
        #[arg(long, default_value_t = 0, conflicts_with = "k")]
        k_index: usize,
        /// Cartesian k-point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<f64>>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    seed: Option<u64>,
    shots: Option<u64>,
    analytic: Option<bool>,
    jobs: Option<usize>,
    out_dir: Option<PathBuf>,
    bands: BandsFile,
    bench: BenchFile,
    validate: ValidateFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BandsFile {
    model: Option<String>,
    warm_start: Option<bool>,
    restarts: Option<usize>,
    initial_spread: Option<f64>,
    clip: Option<bool>,
    optimizer: Option<OptimizerConfig>,
    deflation: Option<DeflationConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BenchFile {
    min_qubits: Option<usize>,
    max_qubits: Option<usize>,
    pairs: Option<Vec<(usize, usize)>>,
    trials: Option<usize>,
    policy_seed: Option<u64>,
    clip: Option<bool>,
    execution_shots: Option<Vec<u64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ValidateFile {
    max_qubits: Option<usize>,
    matrices: Option<usize>,
    thetas: Option<usize>,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: impl std::fmt::Display) -> Failure {
    Failure::Compute(e.to_string())
}

/// Flags merged over the config file.
struct Settings {
    seed: u64,
    shots: Option<u64>,
    analytic: bool,
    out_dir: PathBuf,
    file: FileConfig,
}

impl Settings {
    fn mode(&self, default_shots: u64) -> Outcome<Mode> {
        if self.analytic {
            return Ok(Mode::Analytic);
        }
        match self.shots.unwrap_or(default_shots) {
            0 => Err(usage("--shots must be at least 1")),
            s => Ok(Mode::Shots(s)),
        }
    }
}

fn load_settings(g: &GlobalArgs) -> Outcome<Settings> {
    let file: FileConfig = match &g.config {
        None => FileConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
    };
    let analytic = g.analytic || (g.shots.is_none() && file.analytic.unwrap_or(false));
    let jobs = g.jobs.or(file.jobs);
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(compute)?;
    }
    Ok(Settings {
        seed: g.seed.or(file.seed).unwrap_or(0),
        shots: g.shots.or(file.shots),
        analytic,
        out_dir: g.out_dir.clone().or(file.out_dir.clone()).unwrap_or_else(|| "out".into()),
        file,
    })
}

fn load_model(name: &str) -> Outcome<ModelDocument> {
    let path = Path::new(name);
    if !path.exists() {
        if let Some(text) = tbvqd::models::builtin(name) {
            return ModelDocument::parse(text).map_err(usage);
        }
    }
    ModelDocument::from_path(path).map_err(usage)
}

fn prepare_out_dir(dir: &Path) -> Outcome<()> {
    std::fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_bands(
    s: &Settings,
    model: Option<String>,
    beta: Option<f64>,
    restarts: Option<usize>,
    cold: bool,
    no_clip: bool,
) -> Outcome<()> {
    let f = &s.file.bands;
    let model_name = model
        .or_else(|| f.model.clone())
        .ok_or_else(|| usage("no model file given"))?;
    let doc = load_model(&model_name)?;
    let path = doc
        .kpath
        .as_ref()
        .ok_or_else(|| usage(format!("{model_name} has no [kpath] section")))?
        .build()
        .map_err(usage)?;

    let mode = s.mode(DEFAULT_BAND_SHOTS)?;
    let mut cfg = match mode {
        Mode::Analytic => RunConfig::analytic(s.seed),
        Mode::Shots(n) => RunConfig::shots(n, s.seed),
    };
    if let Some(o) = f.optimizer {
        cfg.optimizer = o;
    }
    cfg.warm_start = !cold && f.warm_start.unwrap_or(cfg.warm_start);
    cfg.restarts = restarts.or(f.restarts).unwrap_or(cfg.restarts);
    cfg.initial_spread = f.initial_spread.unwrap_or(cfg.initial_spread);
    cfg.clip = !no_clip && f.clip.unwrap_or(cfg.clip);
    let mut dcfg = f.deflation.unwrap_or_default();
    if beta.is_some() {
        dcfg.beta = beta;
    }

    prepare_out_dir(&s.out_dir)?;
    let config = json!({
        "model": model_name,
        "kpoints": path.len(),
        "run": cfg,
        "deflation": dcfg,
    });
    let mut manifest = RunManifest::new("bands", config, vec![s.seed]);
    let result = band_sweep(&doc.model, &path, &cfg, &dcfg).map_err(|e| match e {
        tbvqd::Error::InvalidArgument(_) => usage(e),
        _ => compute(e),
    })?;

    let csv = report::bands_csv(&result).map_err(compute)?;
    let seed = mode.shots().map(|_| s.seed);
    let out = &s.out_dir;
    manifest.write_output(out, "bands.csv", "csv", seed, &csv).map_err(compute)?;
    let svg = report::bands_svg(&result, &model_name);
    manifest.write_output(out, "bands.svg", "svg", seed, &svg).map_err(compute)?;
    manifest.telemetry = json!({
        "max_abs_error": result.max_abs_error(),
        "failures": result.failures(),
        "cost_evals": result.total_cost_evals(),
        "points": result.points,
    });
    manifest.finish(out).map_err(compute)?;

    let max_err = result.max_abs_error();
    println!(
        "{} k-points x {} levels, max |E - E_exact| = {:.3e} eV, {} failed, output in {}",
        result.points.len(),
        result.levels,
        max_err,
        result.failures(),
        out.display()
    );
    if result.failures() > 0 {
        for p in &result.points {
            for b in p.bands.iter().filter(|b| b.failure.is_some()) {
                eprintln!("k {} level {}: {}", p.k_index, b.level, b.failure.as_deref().unwrap_or(""));
            }
        }
        return Err(compute(format!("{} (k, level) points failed", result.failures())));
    }
    if mode == Mode::Analytic && !(max_err < ANALYTIC_BAND_TOLERANCE) {
        return Err(compute(format!(
            "analytic sweep deviates from exact bands by {max_err:.3e} eV"
        )));
    }
    Ok(())
}

fn parse_range(text: &str) -> Outcome<(usize, usize)> {
    let (a, b) = text
        .split_once("..=")
        .or_else(|| text.split_once(".."))
        .ok_or_else(|| usage(format!("qubit range `{text}` is not of the form a..b")))?;
    let a = a.trim().parse().map_err(|_| usage(format!("bad range start in `{text}`")))?;
    let b = b.trim().parse().map_err(|_| usage(format!("bad range end in `{text}`")))?;
    Ok((a, b))
}

fn parse_pairs(text: &str) -> Outcome<Vec<(usize, usize)>> {
    text.split(',')
        .map(|p| {
            let (j, l) = p
                .split_once(':')
                .ok_or_else(|| usage(format!("pair `{p}` is not of the form j:l")))?;
            let j = j.trim().parse().map_err(|_| usage(format!("bad pair `{p}`")))?;
            let l = l.trim().parse().map_err(|_| usage(format!("bad pair `{p}`")))?;
            Ok((j, l))
        })
        .collect()
}

#[derive(Serialize)]
struct BenchEffective<'a> {
    trials: &'a TrialConfig,
    execution_shots: &'a [u64],
}

fn cmd_bench(s: &Settings, qubits: Option<String>, trials: Option<usize>, pairs: Option<String>) -> Outcome<()> {
    let f = &s.file.bench;
    let mut cfg = TrialConfig {
        mode: s.mode(DEFAULT_BENCH_SHOTS)?,
        seed: s.seed,
        policy_seed: f.policy_seed.unwrap_or(DEFAULT_POLICY_SEED),
        ..TrialConfig::default()
    };
    cfg.min_qubits = f.min_qubits.unwrap_or(cfg.min_qubits);
    cfg.max_qubits = f.max_qubits.unwrap_or(cfg.max_qubits);
    if let Some(q) = qubits {
        (cfg.min_qubits, cfg.max_qubits) = parse_range(&q)?;
    }
    cfg.trials = trials.or(f.trials).unwrap_or(cfg.trials);
    cfg.clip = f.clip.unwrap_or(cfg.clip);
    cfg.pairs = match pairs {
        Some(p) => parse_pairs(&p)?,
        None => f.pairs.clone().unwrap_or(cfg.pairs),
    };
    cfg.validate().map_err(usage)?;
    let execution_shots = f.execution_shots.clone().unwrap_or(DEFAULT_EXECUTION_SHOTS.to_vec());
    if execution_shots.is_empty() {
        return Err(usage("execution_shots is empty"));
    }

    prepare_out_dir(&s.out_dir)?;
    let config = serde_json::to_value(BenchEffective {
        trials: &cfg,
        execution_shots: &execution_shots,
    })
    .map_err(compute)?;
    let mut manifest = RunManifest::new("bench", config, vec![s.seed, cfg.policy_seed]);
    let trial_report = correlator_trials(&cfg).map_err(compute)?;
    let sizes: Vec<usize> = (cfg.min_qubits..=cfg.max_qubits).collect();
    let executions = execution_report(&sizes, &execution_shots);

    let out = &s.out_dir;
    let seed = cfg.mode.shots().map(|_| s.seed);
    let stats = report::correlator_stats_csv(&trial_report.stats).map_err(compute)?;
    manifest.write_output(out, "correlator_stats.csv", "csv", seed, &stats).map_err(compute)?;
    let exec = report::executions_csv(&executions).map_err(compute)?;
    manifest.write_output(out, "executions.csv", "csv", None, &exec).map_err(compute)?;
    let svg = report::correlators_svg(&trial_report.stats);
    manifest.write_output(out, "correlators.svg", "svg", seed, &svg).map_err(compute)?;
    let svg = report::executions_svg(&executions);
    manifest.write_output(out, "executions.svg", "svg", None, &svg).map_err(compute)?;
    manifest.telemetry = json!({
        "skipped": trial_report.skipped,
        "policy": "fixed amplitudes per N, see tbvqd::bench::policy_amplitudes; sigma is policy dependent",
    });
    manifest.finish(out).map_err(compute)?;

    println!("  N  pair      mean_re    mean_im   std_re   std_im   |err|");
    for t in &trial_report.stats {
        println!(
            "{:3}  ({},{})  {:9.5}  {:9.5}  {:7.4}  {:7.4}  {:.2e}",
            t.n_qubits, t.pair.0, t.pair.1, t.mean.re, t.mean.im, t.std_re, t.std_im, t.abs_error()
        );
    }
    for note in &trial_report.skipped {
        println!("skipped N = {} pair ({},{}): {}", note.n_qubits, note.pair.0, note.pair.1, note.reason);
    }
    println!("output in {}", out.display());
    Ok(())
}

fn cmd_validate(s: &Settings, max_qubits: Option<usize>, samples: Option<usize>, corrupt: bool) -> Outcome<()> {
    let f = &s.file.validate;
    let max_qubits = max_qubits.or(f.max_qubits).unwrap_or(8);
    if !(2..=MAX_VALIDATION_QUBITS).contains(&max_qubits) {
        return Err(usage(format!(
            "--max-qubits must be in 2..={MAX_VALIDATION_QUBITS}, got {max_qubits}"
        )));
    }
    let mut cfg = ValidationConfig::new(max_qubits);
    cfg.seed = s.seed;
    cfg.matrices = samples.or(f.matrices).unwrap_or(cfg.matrices);
    cfg.thetas = samples.or(f.thetas).unwrap_or(cfg.thetas);
    if cfg.matrices == 0 || cfg.thetas == 0 {
        return Err(usage("sample counts must be at least 1"));
    }
    if corrupt {
        cfg.xy_sign = XySign::Corrupted;
    }

    prepare_out_dir(&s.out_dir)?;
    let mut config = serde_json::to_value(cfg).map_err(compute)?;
    config["corrupt_xy_sign"] = json!(corrupt);
    let mut manifest = RunManifest::new("validate", config, vec![s.seed]);
    let result = run_validation(&cfg).map_err(compute)?;
    let table = result.table();
    print!("{table}");
    manifest
        .write_output(&s.out_dir, "validation.txt", "text", Some(s.seed), &table)
        .map_err(compute)?;
    manifest.telemetry = json!({ "passed": result.passed() });
    manifest.finish(&s.out_dir).map_err(compute)?;
    if !result.passed() {
        let mut names: Vec<String> = result.failures().map(|c| c.name.clone()).collect();
        names.dedup();
        return Err(compute(format!("failed checks: {}", names.join(", "))));
    }
    Ok(())
}

fn cmd_dump(model: &str, k_index: usize, k: Option<Vec<f64>>) -> Outcome<()> {
    let doc = load_model(model)?;
    let kvec = match k {
        Some(c) => {
            if c.len() != doc.model.dimension() {
                return Err(usage(format!(
                    "--k needs {} components, got {}",
                    doc.model.dimension(),
                    c.len()
                )));
            }
            KVector::new(c)
        }
        None => {
            let path = match &doc.kpath {
                Some(kp) => kp.build().map_err(usage)?,
                None => vec![KVector::new(vec![0.0; doc.model.dimension()])],
            };
            path.get(k_index)
                .cloned()
                .ok_or_else(|| usage(format!("k-index {k_index} outside path of {} points", path.len())))?
        }
    };
    let bloch = bloch_matrix(&doc.model, &kvec).map_err(compute)?;
    let h = qubit_hamiltonian(&bloch).map_err(compute)?;
    let groups = qwc_groups_conventional(&h);
    let bands = exact_bands(&bloch).map_err(compute)?;

    println!("k = {:?}", kvec.components);
    println!("H(k):");
    for j in 0..bloch.dim() {
        let row: Vec<String> = (0..bloch.dim())
            .map(|l| {
                let z = bloch.get(j, l);
                format!("{:9.5}{:+9.5}i", z.re, z.im)
            })
            .collect();
        println!("  {}", row.join("  "));
    }
    println!("qubit Hamiltonian ({} terms):", h.terms.len());
    print!("{h}");
    println!(
        "measurement settings: conventional {} (qubit-wise commuting groups), constant 3",
        groups.len()
    );
    let bands: Vec<String> = bands.iter().map(|e| format!("{e:.6}")).collect();
    println!("exact bands: {}", bands.join(" "));
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    let settings = load_settings(&cli.global)?;
    match cli.command {
        Command::Bands {
            model,
            beta,
            restarts,
            cold,
            no_clip,
        } => cmd_bands(&settings, model, beta, restarts, cold, no_clip),
        Command::Bench { qubits, trials, pairs } => cmd_bench(&settings, qubits, trials, pairs),
        Command::Validate {
            max_qubits,
            samples,
            corrupt_xy_sign,
        } => cmd_validate(&settings, max_qubits, samples, corrupt_xy_sign),
        Command::DumpHamiltonian { model, k_index, k } => cmd_dump(&model, k_index, k),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) => format!("error: {m}"),
                Failure::Compute(m) => format!("failed: {m}"),
            };
            eprintln!("{msg}");
            ExitCode::from(f.code())
        }
    }
}
