//! Command-line front end.
//!
//! Exit codes: 0 on success (including `UNDECIDED` verdicts), 2 for malformed
//! input or arguments, 3 for numerical failures.

pub mod format;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chanfactory::{self, ExampleChannel};
use crate::ensemble::{build_problem_p, off_diagonalize};
use crate::error::{Error, Result};
use crate::manifold::OptimizerConfig;
use crate::qstate::{classify, DEFAULT_TOL};
use crate::rudistance::{self, DistanceConfig};

pub use report::{ConfigEcho, Extremality, Report};

use format::{ChannelFile, UnitaryFile, UNITARY_SCHEMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "RUCHAN_SEED";

#[derive(Debug, Parser)]
#[command(name = "ruchan", version, about = "Decide whether a quantum channel is a mixture of unitaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a channel, bound its distance to the random-unitary maps and test extremality.
    Analyze(AnalyzeArgs),
    /// Only the distance computation and verdict.
    Distance(AnalyzeArgs),
    /// Write a random or named channel file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Extremality rank tests.
    Extremal(InputArgs),
    /// Concurrence (and optionally entanglement) of assistance of a two-qubit Choi state.
    Ca(CaArgs),
    /// Unitary that zeroes the diagonal of one matrix A_i.
    Offdiag(OffdiagArgs),
    /// Numerical experiments.
    Experiment {
        #[command(subcommand)]
        name: ExperimentKind,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Channel file (JSON).
    pub path: PathBuf,
    /// Emit a JSON report.
    #[arg(long)]
    pub json: bool,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Restarts of the manifold optimizer (default 8 for d = 2, 16 otherwise).
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Seed; falls back to RUCHAN_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration cap per restart.
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Ensemble cardinality K (default d²).
    #[arg(long)]
    pub cardinality: Option<usize>,
    /// Upper bound below which the map is reported as random unitary.
    #[arg(long, default_value_t = rudistance::MEMBER_TOL)]
    pub member_tol: f64,
    /// Reduction norm above which the map is certified not random unitary.
    #[arg(long, default_value_t = rudistance::CERT_TOL)]
    pub cert_tol: f64,
    /// Retry with K = 2d² and K = d⁴.
    #[arg(long = "escalate-K", alias = "escalate-k")]
    pub escalate: bool,
}

#[derive(Debug, Args)]
pub struct CaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Also estimate the entanglement of assistance.
    #[arg(long)]
    pub eoa: bool,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct OffdiagArgs {
    pub path: PathBuf,
    /// 1-based index i of the Gell-Mann element selecting A_i.
    #[arg(long)]
    pub index: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateCommon {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Random CP map (Choi form, unit trace).
    RandomCp {
        #[command(flatten)]
        common: GenerateCommon,
        #[arg(long)]
        rank: usize,
    },
    /// Random trace-preserving map.
    RandomCpt {
        #[command(flatten)]
        common: GenerateCommon,
        #[arg(long)]
        rank: usize,
    },
    /// Random doubly stochastic map from alternating projections.
    DoublyStochastic {
        #[command(flatten)]
        common: GenerateCommon,
        #[arg(long)]
        rank: usize,
    },
    /// A named channel (Kraus form).
    Example {
        name: ExampleName,
        #[command(flatten)]
        common: GenerateCommon,
        /// Number of unitaries for random-unitary-mixture.
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExampleName {
    LandauStreater,
    Loss,
    Identity,
    RandomUnitaryMixture,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentKind {
    /// Fraction of random maps that pass the extremality rank tests.
    Saturation {
        #[arg(long, default_value_t = 4)]
        dmax: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
}

/// Map a library error to a process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericalFailure { .. } | Error::NonConvergence(_) | Error::Retraction(_) => {
            EXIT_NUMERICAL
        }
        _ => EXIT_INPUT,
    }
}

/// Run the CLI on explicit arguments and streams; returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// `--seed` wins over `RUCHAN_SEED`, which wins over 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    match flag {
        Some(s) => Ok(s),
        None => Ok(env_seed()?.unwrap_or(0)),
    }
}

fn optimizer_config(d: usize, args: &OptimizerArgs) -> Result<OptimizerConfig> {
    let mut cfg = OptimizerConfig::for_dim(d).with_seed(resolve_seed(args.seed)?);
    if let Some(r) = args.restarts {
        cfg.restarts = r;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load(path: &Path) -> Result<(format::Channel, String)> {
    let (text, bytes) = format::read_to_string(path)?;
    let channel = ChannelFile::parse(&text)?.validate()?;
    Ok((channel, format::sha256_hex(&bytes)))
}

fn emit(report: &Report, input: &InputArgs, out: &mut dyn Write) -> Result<()> {
    let json = report.to_json();
    if let Some(path) = &input.out {
        format::write_atomic(path, &json)?;
    }
    let text = if input.json { json } else { report.to_text() };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::InvalidArgument(format!("cannot write output: {e}")))
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => format::write_atomic(p, text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::InvalidArgument(format!("cannot write output: {e}"))),
    }
}

fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Analyze(args) => analyze(&args, true, out),
        Command::Distance(args) => analyze(&args, false, out),
        Command::Generate { kind } => generate(kind, out).map(|_| EXIT_OK),
        Command::Extremal(args) => {
            let (channel, digest) = load(&args.path)?;
            let mut report = Report::new("extremal", digest, channel.choi.dim());
            report.extremality = Some(Extremality::of(&channel.kraus()?));
            emit(&report, &args, out)?;
            Ok(EXIT_OK)
        }
        Command::Ca(args) => {
            let (channel, digest) = load(&args.input.path)?;
            let d = channel.choi.dim();
            let mut report = Report::new("ca", digest, d);
            report.assistance = Some(rudistance::concurrence_of_assistance(&channel.choi)?);
            if args.eoa {
                let cfg = optimizer_config(d, &args.optimizer)?;
                report.eoa = Some(rudistance::eoa_estimate(&channel.choi, &cfg)?);
                report.config = Some(ConfigEcho::optimizer_only(&cfg));
            }
            emit(&report, &args.input, out)?;
            Ok(EXIT_OK)
        }
        Command::Offdiag(args) => {
            let (channel, _) = load(&args.path)?;
            let problem = build_problem_p(&channel.choi)?;
            let n = problem.a.len();
            if !(1..=n).contains(&args.index) {
                return Err(Error::InvalidArgument(format!("index must be in 1..={n}")));
            }
            let result = off_diagonalize(&problem.a[args.index - 1], args.tol)?;
            let file = UnitaryFile {
                schema: UNITARY_SCHEMA.into(),
                dim: channel.choi.dim(),
                index: args.index,
                rotations: result.rotations,
                max_abs_diag: result.max_abs_diag,
                unitary: result.unitary,
            };
            let mut text = serde_json::to_string_pretty(&file).expect("serializable");
            text.push('\n');
            write_or_print(args.out.as_deref(), &text, out)?;
            Ok(EXIT_OK)
        }
        Command::Experiment {
            name: ExperimentKind::Saturation { dmax, trials, seed, json },
        } => {
            let seed = resolve_seed(seed)?;
            let rows = chanfactory::saturation_experiment(dmax, trials, seed)?;
            let mut report = Report::new("experiment saturation", String::new(), dmax);
            report.saturation = Some(rows);
            report.config = Some(ConfigEcho::seed_only(seed));
            let text = if json { report.to_json() } else { report.to_text() };
            out.write_all(text.as_bytes())
                .map_err(|e| Error::InvalidArgument(format!("cannot write output: {e}")))?;
            Ok(EXIT_OK)
        }
    }
}

fn analyze(args: &AnalyzeArgs, full: bool, out: &mut dyn Write) -> Result<i32> {
    let (channel, digest) = load(&args.input.path)?;
    let d = channel.choi.dim();
    let config = DistanceConfig {
        optimizer: optimizer_config(d, &args.optimizer)?,
        cardinality: args.cardinality,
        escalate: args.escalate,
        member_tol: args.member_tol,
        cert_tol: args.cert_tol,
    };
    let command = if full { "analyze" } else { "distance" };
    let mut report = Report::new(command, digest, d);
    report.classification = Some(classify(channel.choi.matrix(), DEFAULT_TOL)?);
    let distance = rudistance::distance(&channel.choi, &config)?;
    let failed = distance.diagnostics.is_some();
    report.distance = Some(distance);
    if full {
        report.extremality = Some(Extremality::of(&channel.kraus()?));
        if d == 2 {
            report.assistance = Some(rudistance::concurrence_of_assistance(&channel.choi)?);
        }
    }
    report.config = Some(ConfigEcho::distance(&config, DEFAULT_TOL));
    emit(&report, &args.input, out)?;
    Ok(if failed { EXIT_NUMERICAL } else { EXIT_OK })
}

fn generate(kind: GenerateKind, out: &mut dyn Write) -> Result<()> {
    let (common, file) = match kind {
        GenerateKind::RandomCp { common, rank } => {
            let seed = resolve_seed(common.seed)?;
            let choi = chanfactory::random_cp(common.dim, rank, seed)?;
            (common, ChannelFile::from_choi(&choi))
        }
        GenerateKind::RandomCpt { common, rank } => {
            let seed = resolve_seed(common.seed)?;
            let choi = chanfactory::project_tp(&chanfactory::random_cp(common.dim, rank, seed)?)?;
            (common, ChannelFile::from_choi(&choi))
        }
        GenerateKind::DoublyStochastic { common, rank } => {
            let seed = resolve_seed(common.seed)?;
            let (choi, _) = chanfactory::random_doubly_stochastic(
                common.dim,
                rank,
                seed,
                chanfactory::POCS_TOL,
                chanfactory::POCS_MAX_ITERS,
            )?;
            (common, ChannelFile::from_choi(&choi))
        }
        GenerateKind::Example { name, common, count } => {
            let kind = match name {
                ExampleName::LandauStreater => ExampleChannel::LandauStreater,
                ExampleName::Loss => ExampleChannel::Loss,
                ExampleName::Identity => ExampleChannel::Identity,
                ExampleName::RandomUnitaryMixture => ExampleChannel::RandomUnitaryMixture {
                    count,
                    seed: resolve_seed(common.seed)?,
                },
            };
            let channel = chanfactory::example_channel(&kind, common.dim)?;
            (common, ChannelFile::from_kraus(&channel))
        }
    };
    write_or_print(common.out.as_deref(), &file.to_json(), out)
}
