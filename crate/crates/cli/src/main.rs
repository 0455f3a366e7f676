//! `fpslope`: range analysis of block-diagram models.
//!
//! Exit codes: 0 success, 1 possible run-time error reported, 2 usage or
//! parse error, 3 soundness violation found by `fuzz`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use fpslope::analyzer::report::show;
use fpslope::analyzer::{analyze, InputMode, Options, Report};
use fpslope::domain::{Domain, IntervalDomain, SlopeDomain};
use fpslope::frontend::compile;
use fpslope::ir::{Lit, Program};
use fpslope::oracle::{fuzz_soundness, FuzzConfig};
use fpslope::{Precision, PrecisionProfile, Thresholds};

const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "fpslope", version, about = "Range analysis of floating-point block-diagram models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the bounds of every output.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        setup: Setup,
        #[arg(long, value_enum, default_value_t = DomainKind::Fps)]
        domain: DomainKind,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check the analysis against concrete runs on random inputs.
    Fuzz {
        file: PathBuf,
        #[command(flatten)]
        setup: Setup,
        #[arg(long, value_enum, default_value_t = DomainKind::Fps)]
        domain: DomainKind,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Concrete steps run past the unrolled ones.
        #[arg(long, default_value_t = 20)]
        extra_steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Tabulate output widths under the interval, real-slope and fps domains.
    Compare {
        file: PathBuf,
        #[command(flatten)]
        setup: Setup,
    },
}

#[derive(clap::Args)]
struct Setup {
    /// Overrides the model's `simulate precision=`.
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// Overrides the model's `simulate steps=`.
    #[arg(long)]
    unroll: Option<usize>,
    #[arg(long, default_value_t = 3)]
    widen_delay: usize,
    /// Skip the fixpoint covering the steps after the unrolled ones.
    #[arg(long)]
    no_fixpoint: bool,
    #[arg(long, value_enum, default_value_t = InputsArg::Constant)]
    inputs: InputsArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Single,
    Double,
    Extended,
    DoubleRounding,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Precision {
        match p {
            PrecisionArg::Single => Precision::Single,
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
            PrecisionArg::DoubleRounding => Precision::DoubleRounding,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InputsArg {
    /// Each input holds one value for the whole run.
    Constant,
    /// Inputs may change at every step.
    PerStep,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DomainKind {
    Fps,
    /// Intervals widened by the relative rounding error.
    Interval,
    /// Intervals with correctly rounded bounds.
    IntervalDirected,
    RealSlope,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// A failure with its exit code.
struct Failure(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(USAGE, e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Analyze {
            file,
            setup,
            domain,
            format,
        } => {
            let (prog, profile, opts) = load(&file, &setup)?;
            let report = match domain {
                DomainKind::Fps => report(&SlopeDomain::fps(profile), &prog, &opts)?,
                DomainKind::RealSlope => report(&SlopeDomain::real(profile), &prog, &opts)?,
                DomainKind::Interval => report(&IntervalDomain::error_model(profile), &prog, &opts)?,
                DomainKind::IntervalDirected => report(&IntervalDomain::new(profile), &prog, &opts)?,
            };
            match format {
                Format::Text => emit(&report.to_text()),
                Format::Json => emit(&format!("{}\n", report.to_json())),
            }
            Ok(u8::from(report.has_errors()))
        }
        Command::Fuzz {
            file,
            setup,
            domain,
            samples,
            seed,
            extra_steps,
            format,
        } => {
            let (prog, profile, opts) = load(&file, &setup)?;
            let cfg = FuzzConfig {
                samples,
                seed,
                extra_steps,
                ..FuzzConfig::default()
            };
            match domain {
                DomainKind::Fps => fuzz(&SlopeDomain::fps(profile), &prog, &opts, &cfg, format),
                DomainKind::RealSlope => fuzz(&SlopeDomain::real(profile), &prog, &opts, &cfg, format),
                DomainKind::Interval => fuzz(&IntervalDomain::error_model(profile), &prog, &opts, &cfg, format),
                DomainKind::IntervalDirected => fuzz(&IntervalDomain::new(profile), &prog, &opts, &cfg, format),
            }
        }
        Command::Compare { file, setup } => {
            let (prog, profile, opts) = load(&file, &setup)?;
            let reports = [
                report(&IntervalDomain::error_model(profile), &prog, &opts)?,
                report(&SlopeDomain::real(profile), &prog, &opts)?,
                report(&SlopeDomain::fps(profile), &prog, &opts)?,
            ];
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<12} {:>16} {:>16} {:>16}",
                "output", "interval", "real-slope", "fps"
            );
            for o in &reports[0].outputs {
                let widths: Vec<String> = reports
                    .iter()
                    .map(|r| {
                        let b = r.output(&o.name).expect("same outputs").overall.interval;
                        format!("{:>16.9e}", b.width())
                    })
                    .collect();
                let _ = writeln!(out, "{:<12} {}", o.name, widths.join(" "));
            }
            for (r, name) in reports.iter().zip(["interval", "real-slope", "fps"]) {
                for o in &r.outputs {
                    let _ = writeln!(out, "{name:<10} {:<12} {}", o.name, show(o.overall.interval, 9));
                }
            }
            emit(&out);
            Ok(u8::from(reports[2].has_errors()))
        }
    }
}

fn load(file: &Path, setup: &Setup) -> Result<(Program, PrecisionProfile, Options), Failure> {
    let text = std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    let (_, mut prog) = compile(&text).map_err(|errs| {
        let lines: Vec<String> = errs.0.iter().map(|e| format!("{}:{e}", file.display())).collect();
        anyhow!("{}", lines.join("\n"))
    })?;
    if let Some(p) = setup.precision {
        prog.precision = p.into();
    }
    let profile = PrecisionProfile::new(prog.precision);
    let opts = Options {
        unroll: setup.unroll,
        widen_delay: setup.widen_delay,
        fixpoint: !setup.no_fixpoint,
        thresholds: env_thresholds()?,
        inputs: match setup.inputs {
            InputsArg::Constant => InputMode::Constant,
            InputsArg::PerStep => InputMode::PerStep,
        },
        ..Options::default()
    };
    Ok((prog, profile, opts))
}

/// Widening thresholds from `FPS_THRESHOLDS`, comma-separated.
fn env_thresholds() -> Result<Option<Thresholds>, Failure> {
    let Ok(raw) = std::env::var("FPS_THRESHOLDS") else {
        return Ok(None);
    };
    let values = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Lit::parse(s).map(|l| l.value).ok_or_else(|| anyhow!("FPS_THRESHOLDS: invalid number `{s}`")))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(Some(Thresholds::new(values)))
}

fn report<D: Domain>(d: &D, prog: &Program, opts: &Options) -> Result<Report, Failure> {
    let a = analyze(d, prog, opts)?;
    Ok(Report::new(d, prog, &a))
}

fn fuzz<D>(d: &D, prog: &Program, opts: &Options, cfg: &FuzzConfig, format: Format) -> Result<u8, Failure>
where
    D: Domain + Sync,
    D::Value: Send + Sync,
{
    let a = analyze(d, prog, opts)?;
    let verdict = fuzz_soundness(d, prog, &a, cfg)?;
    let mut out = String::new();
    match format {
        Format::Json => {
            let _ = writeln!(out, "{}", verdict.to_json());
        }
        Format::Text => {
            let _ = writeln!(
                out,
                "{} violation{} in {} samples ({} environments checked, seed {})",
                verdict.violation_count,
                if verdict.violation_count == 1 { "" } else { "s" },
                verdict.samples,
                verdict.checks,
                verdict.seed
            );
            for v in &verdict.violations {
                let _ = writeln!(
                    out,
                    "  sample {} at {}: {} = {} ({}) outside {}",
                    v.sample, v.instant, v.var, v.value, v.value_hex, v.allowed
                );
            }
        }
    }
    emit(&out);
    Ok(if verdict.is_sound() { 0 } else { 3 })
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}
