//! `lieavg`: experiment driver for Lie bracket averaging.
//!
//! Every subcommand writes its results to files. Exit codes: 0 on success,
//! 1 for argument, configuration, validation or I/O errors, 2 when a
//! simulation diverges. Failures print one JSON object on stderr.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lieavg_core::coeffs::DEFAULT_GRID;
use lieavg_core::sim::StateEffort;

use report::Failure;

#[derive(Parser, Debug)]
#[command(name = "lieavg", version, about = "Higher-order Lie bracket averaging of control-affine systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the JSON config of a built-in example.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long, value_name = "PATH")]
        emit_config: PathBuf,
    },
    /// Check a config against the standing assumptions.
    Validate {
        #[command(flatten)]
        input: Input,
        /// Also write the validation report here.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Tabulate the averaging coefficients up to an order as CSV.
    Coeffs {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Assemble the averaged system and write its terms as JSON.
    Assemble {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        lbs: LbsArgs,
        #[arg(long)]
        order: usize,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Integrate the oscillatory system or an averaged one.
    Simulate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        lbs: LbsArgs,
        /// `original` or `lbs:R` with R in 1..=4.
        #[arg(long, value_parser = commands::parse_model, default_value = "original")]
        model: commands::Model,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Simulate both systems and write the per-sample distance.
    Compare {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        lbs: LbsArgs,
        #[arg(long)]
        order: usize,
        /// Distance CSV (`t,distance`).
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Summary JSON; defaults to the CSV path with a `.json` extension.
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
    },
    /// Evaluate the scaling conditions and write the design report.
    Check {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Distance between original and averaged trajectories across frequencies.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Comma-separated, strictly increasing, at least three.
        #[arg(long, value_delimiter = ',', required = true)]
        omegas: Vec<f64>,
        /// Sweep CSV (`omega,epsilon,d_sup,d_rms`).
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Summary JSON with the fitted slope; defaults to the CSV path with a `.json` extension.
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
    },
    /// Cumulative control and state effort of the oscillatory system.
    Efforts {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        /// Overrides the config's state effort measure.
        #[arg(long, value_enum)]
        state_effort: Option<EffortArg>,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Input {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Leave out the metadata block (the only non-deterministic content).
    #[arg(long)]
    no_meta: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Overrides the config's ω.
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Args, Debug)]
struct LbsArgs {
    /// Use the ω → ∞ limit of the averaged system.
    #[arg(long)]
    limit: bool,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum EffortArg {
    First,
    Norm,
}

impl From<EffortArg> for StateEffort {
    fn from(a: EffortArg) -> StateEffort {
        match a {
            EffortArg::First => StateEffort::First,
            EffortArg::Norm => StateEffort::Norm,
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var("LIEAVG_THREADS") else { return Ok(()) };
    let n: usize = match text.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(Failure::config("usage", format!("LIEAVG_THREADS must be a positive integer, got '{text}'"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config("usage", format!("cannot start the thread pool: {e}")))
}

fn run(cli: Cli) -> report::Outcome {
    configure_threads()?;
    match cli.command {
        Command::Preset { name, emit_config } => commands::preset(&name, &emit_config),
        Command::Validate { input, out } => commands::validate(&input.config, out.as_deref(), !input.no_meta),
        Command::Coeffs { input, order, grid, out } => commands::coeffs(&input.config, order, grid, &out),
        Command::Assemble { input, lbs, order, out } => {
            commands::assemble(&input.config, order, lbs.limit, lbs.grid, &out, !input.no_meta)
        }
        Command::Simulate { input, run, lbs, model, out } => {
            let job = commands::Job::load(&input.config, run.t_final, run.dt, run.omega)?;
            job.simulate(model, lbs.limit, lbs.grid, &out)
        }
        Command::Compare { input, run, lbs, order, out, summary } => {
            let job = commands::Job::load(&input.config, run.t_final, run.dt, run.omega)?;
            let summary = summary.unwrap_or_else(|| out.with_extension("json"));
            job.compare(order, lbs.limit, lbs.grid, &out, &summary, !input.no_meta)
        }
        Command::Check { input, order, grid, out } => commands::check(&input.config, order, grid, &out, !input.no_meta),
        Command::Sweep { input, run, order, grid, omegas, out, summary } => {
            let job = commands::Job::load(&input.config, run.t_final, run.dt, run.omega)?;
            let summary = summary.unwrap_or_else(|| out.with_extension("json"));
            job.sweep(order, grid, &omegas, &out, &summary, !input.no_meta)
        }
        Command::Efforts { input, run, state_effort, out } => {
            let job = commands::Job::load(&input.config, run.t_final, run.dt, run.omega)?;
            job.efforts(state_effort.map(Into::into), &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", Failure::config("usage", e.render()).to_json());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
