//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 domain validation, 3 I/O or format,
//! 4 raw-bit shortage.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{self, slowdown_table, summarize};
use crate::bits::{distill, KeyRequest};
use crate::error::Error;
use crate::keyfile;
use crate::math::{self, invert_leak, leak, leak_rate, Epsilon, FoldCount, GuessProbability, LeakFraction};
use crate::sim::{run_trial_on, RecordStream, SchemeName, SchemePreset};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SHORTAGE: i32 = 4;

const DEFAULT_EPSILON: f64 = 0.0006;

#[derive(Debug, Parser)]
#[command(name = "xorfold", version, about = "XOR-fold privacy amplification for classical key exchange")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimal fold count for a guess probability and tolerance
    Plan(PlanArgs),
    /// Distill a raw key file into a final key file
    Fold(FoldArgs),
    /// Monte-Carlo simulation of exchange, sifting, folding and a passive eavesdropper
    Simulate(SimulateArgs),
    /// Per-bit leak fraction, or the guess probability for a target leak
    Leak(LeakArgs),
    /// Fold counts for the reference guess probabilities
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NamedScheme {
    Kljn,
    Ufl,
    Liu,
}

impl From<NamedScheme> for SchemePreset {
    fn from(s: NamedScheme) -> Self {
        match s {
            NamedScheme::Kljn => SchemePreset::KLJN,
            NamedScheme::Ufl => SchemePreset::UFL,
            NamedScheme::Liu => SchemePreset::LIU,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Kljn,
    Ufl,
    Liu,
    Custom,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Upper bound on Eve's raw-bit guess probability
    #[arg(long, conflicts_with = "scheme", required_unless_present = "scheme")]
    p: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<NamedScheme>,
    /// Tolerated distance above 0.5 [default: 0.0006]
    #[arg(long, conflicts_with = "leak_target")]
    epsilon: Option<f64>,
    /// Target leak fraction; sets epsilon to invert_leak(target) - 0.5
    #[arg(long)]
    leak_target: Option<f64>,
}

#[derive(Debug, Args)]
struct FoldArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: u32,
    /// Final key length [default: raw bits / 2^k]
    #[arg(long)]
    final_bits: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    /// Also print the distilled key as hex
    #[arg(long)]
    hex: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    /// Guess probability (custom scheme only)
    #[arg(long)]
    p: Option<f64>,
    /// Raw-bit fidelity (custom scheme only)
    #[arg(long)]
    fidelity: Option<f64>,
    /// Final key bits per trial
    #[arg(long)]
    final_bits: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Fold count override; planned from p and epsilon otherwise
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, env = "PA_SEED")]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Write the JSON report here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LeakArgs {
    #[arg(long, conflicts_with = "target", required_unless_present = "target")]
    p: Option<f64>,
    /// Leak fraction to invert
    #[arg(long)]
    target: Option<f64>,
    /// Key-bit frequency in Hz; also prints the leak rate
    #[arg(long, requires = "p")]
    fs: Option<f64>,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

/// Error carrying the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. } | Error::Empty(_) => EXIT_DOMAIN,
            Error::Length { .. } | Error::Format(_) | Error::Io(_) => EXIT_IO,
            Error::Shortage { .. } => EXIT_SHORTAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::from(Error::Io(e.to_string()))
}

type CmdResult = Result<(), Failure>;

/// Six significant digits.
fn sig6(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.5e}")
    }
}

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a, out),
        Command::Fold(a) => cmd_fold(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Leak(a) => cmd_leak(a, out),
        Command::Table(a) => cmd_table(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_plan(a: PlanArgs, out: &mut dyn Write) -> CmdResult {
    let (p, label) = match (a.p, a.scheme) {
        (Some(p), _) => (GuessProbability::new(p)?, None),
        (None, Some(s)) => {
            let preset = SchemePreset::from(s);
            (preset.p, Some(preset.name))
        }
        (None, None) => return Err(usage("one of --p or --scheme is required")),
    };
    let eps = match a.leak_target {
        Some(t) => Epsilon::new(invert_leak(LeakFraction::new(t)?) - 0.5)?,
        None => Epsilon::new(a.epsilon.unwrap_or(DEFAULT_EPSILON))?,
    };
    let plan = math::plan(p, eps)?;
    let mut w = || -> std::io::Result<()> {
        if let Some(name) = label {
            writeln!(out, "scheme: {name}")?;
        }
        writeln!(out, "p: {p}")?;
        writeln!(out, "epsilon: {}", eps.value())?;
        writeln!(out, "k: {}", plan.k)?;
        writeln!(out, "blockSize: {}", plan.block_size)?;
        writeln!(out, "P^k(p): {:.5}", plan.p_final.value())?;
        writeln!(out, "residualLeak: {}", sig6(plan.residual_leak.value()))
    };
    w().map_err(io_failure)
}

fn cmd_fold(a: FoldArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let k = FoldCount::new(a.k)?;
    let raw = keyfile::read(&a.input)?;
    let final_bits = a.final_bits.unwrap_or(raw.len() >> k.get());
    if final_bits == 0 {
        return Err(Error::Shortage {
            available: raw.len(),
            required: k.block_size() as usize,
        }
        .into());
    }
    let req = KeyRequest::new(final_bits, k)?;
    let distilled = distill(&raw, req)?;
    keyfile::write(&a.output, &distilled.key)?;
    writeln!(err, "surplus raw bits: {}", distilled.surplus).map_err(io_failure)?;
    writeln!(out, "final bits: {}", distilled.key.len()).map_err(io_failure)?;
    if a.hex {
        writeln!(out, "{}", distilled.key.to_hex()).map_err(io_failure)?;
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let preset = match a.scheme {
        SchemeArg::Custom => {
            let (Some(p), Some(f)) = (a.p, a.fidelity) else {
                return Err(usage("--scheme custom needs --p and --fidelity"));
            };
            SchemePreset::custom(p, f)?
        }
        named => {
            if a.p.is_some() || a.fidelity.is_some() {
                return Err(usage("--p and --fidelity apply only to --scheme custom"));
            }
            let name: SchemeName = format!("{named:?}").parse()?;
            SchemePreset::named(name).expect("named scheme has a preset")
        }
    };
    if a.trials == 0 {
        return Err(Error::Empty("at least one trial is required").into());
    }
    let eps = Epsilon::new(a.epsilon)?;
    let k = match a.k {
        Some(k) => FoldCount::new(k)?,
        None => math::plan(preset.p, eps)?.k,
    };
    let req = KeyRequest::new(a.final_bits, k)?;

    let mut outputs = Vec::with_capacity(a.trials);
    for t in 0..a.trials as u64 {
        outputs.push(run_trial_on(&preset, req, &RecordStream::with_stream(a.seed, t))?);
    }
    let keys_agree = outputs.iter().all(|o| o.alice_key == o.bob_key);
    let report = summarize(&outputs, &preset, req, a.seed)?;
    if let Some(path) = &a.report {
        std::fs::write(path, report.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    print_summary(&report, keys_agree, out).map_err(io_failure)
}

fn print_summary(r: &analysis::SimulationReport, keys_agree: bool, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "scheme: {} (p = {}, fidelity = {})", r.preset, r.p, r.fidelity)?;
    writeln!(out, "k: {}  slowdown: {}  raw bits per final bit: {:.4}", r.k, r.slowdown, r.raw_per_final)?;
    writeln!(out, "final bits: {} x {} trial(s)", r.final_bits, r.trials)?;
    let s = r.sift_stats;
    writeln!(out, "sift: generated {}, kept {}, discarded {}", s.generated, s.kept, s.discarded)?;
    writeln!(
        out,
        "eve rate: {:.6} (bound {:.6}, {:+.2} sd)",
        r.empirical_eve_rate, r.bound_rate, r.std_devs
    )?;
    writeln!(out, "alice/bob keys identical: {keys_agree}")
}

fn cmd_leak(a: LeakArgs, out: &mut dyn Write) -> CmdResult {
    let mut w = |line: String| writeln!(out, "{line}").map_err(io_failure);
    match (a.p, a.target) {
        (Some(p), _) => {
            w(format!("leak: {}", sig6(leak(p)?.value())))?;
            if let Some(fs) = a.fs {
                w(format!("rate: {} bits/s", sig6(leak_rate(fs, p)?)))?;
            }
        }
        (None, Some(t)) => {
            let p = invert_leak(LeakFraction::new(t)?);
            w(format!("p: {p:.12}"))?;
            let planning = leak(0.5 + DEFAULT_EPSILON)?.value();
            w(format!(
                "note: the planning tolerance epsilon = {DEFAULT_EPSILON} (p = 0.5006) leaks {} per bit; \
                 a 1e-8 leak corresponds to p = {:.7}, not 0.5006",
                sig6(planning),
                invert_leak(LeakFraction::new(1e-8)?)
            ))?;
        }
        (None, None) => return Err(usage("one of --p or --target is required")),
    }
    Ok(())
}

fn cmd_table(a: TableArgs, out: &mut dyn Write) -> CmdResult {
    let eps = Epsilon::new(a.epsilon)?;
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "epsilon: {}", eps.value())?;
        writeln!(out, "{:<7} {:>3} {:>9}  {:<8} {:<12} flag", "p", "k", "slowdown", "P^k(p)", "leak")?;
        for row in slowdown_table(eps) {
            let line = format!(
                "{:<7} {:>3} {:>9}  {:<8} {:<12} {}",
                row.p.value(),
                row.k,
                row.slowdown,
                row.p_final_rounded(),
                sig6(row.residual_leak.value()),
                row.flag().unwrap_or_default()
            );
            writeln!(out, "{}", line.trim_end())?;
        }
        Ok(())
    };
    w().map_err(io_failure)
}
