//! Subcommands of the `ebit` binary.
//!
//! Each command renders its CSV into memory first; the same flags and seed
//! always give the same bytes, whatever order parallel trials finish in.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ebit_core::dilution::{
    dilution_cost, prepare_entangled_compressed, ProjectionChoice, DENSE_DILUTION_MAX,
};
use ebit_core::procrustean::expected_yield_cos2;
use ebit_core::qcore::binary_entropy;
use ebit_core::qdc::{
    expected_fidelity, schmidt_coding_counterexample, two_sided_compression_analysis,
    LikelySubspace, QuantumSource, SequenceLabel,
};
use ebit_core::schmidt_projection::{
    concentrated_yield_per_pair, predicted_yield_rate, run_full_protocol, standardize,
    ConcentrationRun, PairEnsembleSpec, ProtocolConfig, ProtocolMode, WalkConfig, DENSE_MAX_PAIRS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] ebit_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad parameters, 1 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Core(_) => 2,
            CliError::Io { .. } | CliError::Input { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "ebit",
    version,
    about = "Entanglement concentration and dilution simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Yield per pair against cos²θ for filtering, Schmidt projection and the entropy bound.
    Fig1(Fig1Args),
    /// Monte Carlo runs of Schmidt projection plus the standardization walk.
    Concentrate(ConcentrateArgs),
    /// Likely-subspace compression fidelity over block lengths.
    Qdc(QdcArgs),
    /// Preparing partly entangled pairs from singlets by compressed teleportation.
    Dilute(DiluteArgs),
}

/// The pair angle, given either directly or as `cos²θ`.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct AngleArgs {
    /// Angle θ in radians, in (0, π/2).
    #[arg(long)]
    pub theta: Option<f64>,
    /// cos²θ, in (0, 1).
    #[arg(long)]
    pub cos2: Option<f64>,
}

impl AngleArgs {
    pub fn theta(&self) -> Result<f64> {
        match (self.theta, self.cos2) {
            (Some(t), None) if t > 0.0 && t < FRAC_PI_2 => Ok(t),
            (Some(t), None) => Err(CliError::Validation(format!(
                "--theta {t} must lie in (0, pi/2)"
            ))),
            (None, Some(x)) if x > 0.0 && x < 1.0 => Ok(x.sqrt().acos()),
            (None, Some(x)) => Err(CliError::Validation(format!(
                "--cos2 {x} must lie in (0, 1)"
            ))),
            _ => Err(CliError::Validation(
                "give exactly one of --theta or --cos2".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Fig1Args {
    /// Number of interior grid points; cos²θ = i/(grid+1).
    #[arg(long, default_value_t = 99)]
    pub grid: usize,
    /// Batch sizes for the Schmidt-projection curves.
    #[arg(long = "n", value_delimiter = ',', default_values = ["2", "4", "8", "32"])]
    pub n_list: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Symbolic,
    Dense,
}

#[derive(Debug, Clone, Args)]
pub struct ConcentrateArgs {
    #[command(flatten)]
    pub angle: AngleArgs,
    /// Pairs per batch.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Batches measured before the stop rule is consulted.
    #[arg(long, default_value_t = 1)]
    pub batches: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: usize,
    #[arg(long, value_enum, default_value_t = Mode::Symbolic)]
    pub mode: Mode,
    /// Replay a recorded `k` sequence (whitespace or comma separated) as a single trial.
    #[arg(long)]
    pub k_file: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// Orthogonal signals with unequal probabilities.
    Q,
    /// Equiprobable non-orthogonal signals.
    QPrime,
}

#[derive(Debug, Clone, Args)]
pub struct QdcArgs {
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long = "n", value_delimiter = ',', default_values = ["4", "8", "16", "32", "64"])]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Source::QPrime)]
    pub source: Source,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiluteArgs {
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Independent generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of ASCII fields")
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(CliError::Validation(format!("--{name} must be positive")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CliError::Validation(format!(
            "--delta {delta} must be positive"
        )));
    }
    Ok(())
}

pub const FIG1_HEADER: [&str; 4] = ["cos2theta", "method", "n", "yield_per_pair"];

pub fn fig1(args: &Fig1Args) -> Result<String> {
    check_positive("grid", args.grid)?;
    if args.n_list.is_empty() || args.n_list.contains(&0) {
        return Err(CliError::Validation(
            "--n needs positive batch sizes".into(),
        ));
    }
    let mut rows = Vec::new();
    for i in 1..=args.grid {
        let x = i as f64 / (args.grid + 1) as f64;
        rows.push(vec![
            num(x),
            "asymptotic".into(),
            String::new(),
            num(binary_entropy(x)),
        ]);
        for &n in &args.n_list {
            let y = concentrated_yield_per_pair(&PairEnsembleSpec::from_cos2(x, n)?);
            rows.push(vec![num(x), "schmidt".into(), n.to_string(), num(y)]);
        }
        rows.push(vec![
            num(x),
            "procrustean".into(),
            String::new(),
            num(expected_yield_cos2(x)),
        ]);
    }
    Ok(csv_string(&FIG1_HEADER, &rows))
}

pub const CONCENTRATE_HEADER: [&str; 11] = [
    "trial",
    "seed",
    "theta",
    "n",
    "epsilon",
    "m",
    "ell",
    "pairs_consumed",
    "status",
    "yield_rate",
    "predicted_rate",
];

fn parse_k_file(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<usize>() {
            Ok(k) if k <= n => Ok(k),
            _ => Err(CliError::Validation(format!(
                "k-file entry {t:?} is not an integer in 0..={n}"
            ))),
        })
        .collect()
}

pub fn concentrate(args: &ConcentrateArgs) -> Result<String> {
    let theta = args.angle.theta()?;
    check_positive("n", args.n)?;
    check_positive("trials", args.trials)?;
    check_positive("max-steps", args.max_steps)?;
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(CliError::Validation(format!(
            "--epsilon {} must be positive: with epsilon = 0 the walk need never terminate",
            args.epsilon
        )));
    }
    if args.mode == Mode::Dense && args.n > DENSE_MAX_PAIRS {
        return Err(CliError::Validation(format!(
            "dense mode supports n <= {DENSE_MAX_PAIRS}"
        )));
    }
    let spec = PairEnsembleSpec::new(theta, args.n)?;
    let predicted = predicted_yield_rate(&spec, args.epsilon);
    let walk_cfg = WalkConfig {
        batch_n: args.n,
        epsilon: args.epsilon,
        min_batches: args.batches.max(1),
        max_steps: args.max_steps,
    };

    let runs: Vec<ConcentrationRun> = match &args.k_file {
        Some(path) => {
            let ks = parse_k_file(path, args.n)?;
            vec![standardize(ks, walk_cfg, &mut trial_rng(args.seed, 0))?]
        }
        None => {
            let cfg = ProtocolConfig {
                epsilon: args.epsilon,
                min_batches: walk_cfg.min_batches,
                max_steps: args.max_steps,
                mode: match args.mode {
                    Mode::Symbolic => ProtocolMode::Symbolic,
                    Mode::Dense => ProtocolMode::Dense,
                },
                ..ProtocolConfig::new(args.epsilon)
            };
            (0..args.trials as u64)
                .into_par_iter()
                .map(|t| Ok(run_full_protocol(&spec, &cfg, &mut trial_rng(args.seed, t))?.run))
                .collect::<Result<_>>()?
        }
    };

    let mut rows: Vec<Vec<String>> = runs
        .iter()
        .enumerate()
        .map(|(t, run)| {
            vec![
                t.to_string(),
                args.seed.to_string(),
                num(theta),
                args.n.to_string(),
                num(args.epsilon),
                run.steps().to_string(),
                run.ell().to_string(),
                run.pairs_consumed().to_string(),
                run.status.name().into(),
                num(run.yield_rate()),
                num(predicted),
            ]
        })
        .collect();
    let count = runs.len() as f64;
    let mean = |f: &dyn Fn(&ConcentrationRun) -> f64| runs.iter().map(f).sum::<f64>() / count;
    rows.push(vec![
        "summary".into(),
        args.seed.to_string(),
        num(theta),
        args.n.to_string(),
        num(args.epsilon),
        num(mean(&|r| r.steps() as f64)),
        num(mean(&|r| r.ell() as f64)),
        num(mean(&|r| r.pairs_consumed() as f64)),
        "mean".into(),
        num(mean(&|r| r.yield_rate())),
        num(predicted),
    ]);
    Ok(csv_string(&CONCENTRATE_HEADER, &rows))
}

pub const QDC_HEADER: [&str; 8] = [
    "theta",
    "n",
    "delta",
    "retained_dim",
    "retained_mass",
    "fidelity",
    "max_ent_fidelity",
    "overlap",
];

pub fn qdc(args: &QdcArgs) -> Result<String> {
    let theta = args.angle.theta()?;
    check_delta(args.delta)?;
    if args.n_list.is_empty() || args.n_list.contains(&0) {
        return Err(CliError::Validation(
            "--n needs positive block lengths".into(),
        ));
    }
    let source = match args.source {
        Source::Q => QuantumSource::q(theta),
        Source::QPrime => QuantumSource::q_prime(theta),
    };
    let rows = args
        .n_list
        .iter()
        .map(|&n| {
            let sub = LikelySubspace::build(&source, n, args.delta)?;
            let fidelity = expected_fidelity(&source, n, args.delta)?;
            let two_sided = two_sided_compression_analysis(theta, n, args.delta)?;
            let overlap = if (2..=16).contains(&n) {
                schmidt_coding_counterexample(theta, &SequenceLabel::from_index(0, n))?.overlap
            } else {
                (2.0 * theta).cos().powi(n as i32)
            };
            Ok(vec![
                num(theta),
                n.to_string(),
                num(args.delta),
                sub.dimension().to_string(),
                num(sub.retained_mass()),
                num(fidelity),
                num(two_sided.max_entangled_fidelity),
                num(overlap),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv_string(&QDC_HEADER, &rows))
}

pub const DILUTE_HEADER: [&str; 7] = [
    "trial", "theta", "n", "delta", "singlets", "cbits", "fidelity",
];

pub fn dilute(args: &DiluteArgs) -> Result<String> {
    let theta = args.angle.theta()?;
    check_positive("n", args.n)?;
    check_positive("trials", args.trials)?;
    check_delta(args.delta)?;
    let cost = dilution_cost(theta, args.n, args.delta)?;
    let rows = (0..args.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(args.seed, t);
            let (singlets, cbits, fidelity) = if args.n <= DENSE_DILUTION_MAX {
                let r = prepare_entangled_compressed(
                    theta,
                    args.n,
                    args.delta,
                    ProjectionChoice::Sample,
                    &mut rng,
                )?;
                (
                    r.ledger.singlets_consumed,
                    r.ledger.classical_bits_sent,
                    r.fidelity,
                )
            } else {
                // too large to simulate: a passing run has fidelity equal to the retained mass
                let passed = rng.random::<f64>() < cost.retained_mass;
                let f = if passed { cost.retained_mass } else { 0.0 };
                (cost.singlets, cost.classical_bits, f)
            };
            Ok(vec![
                t.to_string(),
                num(theta),
                args.n.to_string(),
                num(args.delta),
                singlets.to_string(),
                cbits.to_string(),
                num(fidelity),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv_string(&DILUTE_HEADER, &rows))
}

/// Runs a command and writes its CSV to `--out` or standard output.
pub fn run(cli: &Cli) -> Result<()> {
    let (csv, out) = match &cli.command {
        Command::Fig1(a) => (fig1(a)?, &a.out),
        Command::Concentrate(a) => (concentrate(a)?, &a.out),
        Command::Qdc(a) => (qdc(a)?, &a.out),
        Command::Dilute(a) => (dilute(a)?, &a.out),
    };
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(csv.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
