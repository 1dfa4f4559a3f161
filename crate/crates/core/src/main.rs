use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tdd_queue::analytic::{ResidualFamily, ResidualModel};
use tdd_queue::desim::{run_with, CsvTrace, RunSpec, Topology};
use tdd_queue::experiments::{
    cmd_cycle_time, cmd_residual_cdf, cmd_sojourn_sweep, cmd_validate, CommandError, CycleOptions, ExperimentConfig,
    ResidualOptions, SweepOptions, ValidateOptions,
};

const EXIT_VALIDATION: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tdd-queue",
    version,
    about = "Coupled vs decoupled UL/DL latency under flexible TDD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Departures per simulation run, including the 10% warmup.
    #[arg(long, default_value_t = 1_100_000)]
    horizon: u64,
    /// Comma-separated utilizations; overrides `rho` from the config.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Exponential,
    TruncatedExponential,
    Uniform,
    Degenerate,
}

#[derive(Args)]
struct ResidualArgs {
    #[arg(long, value_enum, default_value = "exponential")]
    family: Family,
    /// Rate of the exponential families.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Longest long TTI, the upper end of the residual's range.
    #[arg(long, default_value_t = 10.0)]
    s_long: f64,
}

impl ResidualArgs {
    fn model(&self) -> tdd_queue::Result<ResidualModel> {
        let family = match self.family {
            Family::Exponential => ResidualFamily::Exponential { rate: self.rate },
            Family::TruncatedExponential => ResidualFamily::TruncatedExponential { rate: self.rate },
            Family::Uniform => ResidualFamily::Uniform,
            Family::Degenerate => ResidualFamily::Degenerate,
        };
        ResidualModel::new(family, self.s_long)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mean sojourn per class and topology over a utilization sweep.
    SojournSweep {
        #[command(flatten)]
        common: Common,
        /// Also write the event trace of the first coupled point here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Residual-time CDF of one radio head versus the better of two.
    ResidualCdf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        residual: ResidualArgs,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Cycle time of a priority two-way device.
    CycleTime {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        residual: ResidualArgs,
        #[arg(long, default_value_t = 1.0)]
        s_short: f64,
        #[arg(long, default_value_t = 2.0)]
        t_proc: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Runs the oracle and invariant checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Scales every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
}

fn load_config(common: &Common) -> tdd_queue::Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(rho) = &common.rho {
        config.rho = rho.clone();
    }
    Ok(config)
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_spec(common: &Common) -> RunSpec {
    RunSpec::new(common.horizon, common.seed)
}

fn execute(cli: Cli) -> Result<ExitCode, CommandError> {
    match cli.command {
        Command::SojournSweep { common, trace } => {
            let config = load_config(&common)?;
            let opts = SweepOptions {
                template: config.template()?,
                rhos: config.rho.clone(),
                run: run_spec(&common),
            };
            if let (Some(path), Some(&rho)) = (&trace, opts.rhos.first()) {
                let traffic = opts.template.at(rho)?;
                let mut sink = CsvTrace::new(BufWriter::new(File::create(path)?))?;
                run_with(&traffic, Topology::Coupled, &opts.run, &mut sink)?;
                sink.finish()?;
            }
            let mut out = open_out(common.out.as_deref())?;
            let rows = cmd_sojourn_sweep(&opts, &mut out)?;
            out.flush()?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "warning: rho={} {} {}: {}",
                    r.rho,
                    r.class.as_str(),
                    r.topology.as_str(),
                    r.error.as_deref().unwrap_or_default()
                );
            }
        }
        Command::ResidualCdf {
            common,
            residual,
            step,
            samples,
        } => {
            let opts = ResidualOptions {
                model: residual.model()?,
                step,
                samples,
                seed: common.seed,
            };
            let mut out = open_out(common.out.as_deref())?;
            let res = cmd_residual_cdf(&opts, &mut out)?;
            out.flush()?;
            eprintln!(
                "KS distance: coupled {:.5}, decoupled {:.5}",
                res.ks_coupled, res.ks_decoupled
            );
        }
        Command::CycleTime {
            common,
            residual,
            s_short,
            t_proc,
            samples,
        } => {
            let opts = CycleOptions {
                model: residual.model()?,
                s_short,
                t_proc,
                samples,
                seed: common.seed,
            };
            let mut out = open_out(common.out.as_deref())?;
            cmd_cycle_time(&opts, &mut out)?;
            out.flush()?;
        }
        Command::Validate {
            common,
            tolerance_scale,
        } => {
            let config = load_config(&common)?;
            let opts = ValidateOptions {
                config,
                departures: common.horizon - common.horizon / 10,
                seed: common.seed,
                tolerance_scale,
            };
            let mut out = open_out(common.out.as_deref())?;
            let report = cmd_validate(&opts, &mut out)?;
            out.flush()?;
            if !report.passed() {
                return Ok(ExitCode::from(EXIT_VALIDATION));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_BAD_INPUT)
        }
    }
}
