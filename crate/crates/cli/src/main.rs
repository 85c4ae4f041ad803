//! `concfn`: concentration functions, Esséen integrals, progression search
//! and the verification harness from the command line.

mod commands;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use concfn::Error;

use commands::{
    BetaArgs, ConcentrationArgs, DetectArgs, EssenArgs, FitArgs, HdistArgs, K1Args, PlantArgs,
    VerifyArgs,
};

pub const THREADS_ENV: &str = "CONCFN_THREADS";

#[derive(Parser, Debug)]
#[command(name = "concfn", version, about = "Concentration function laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Global {
    /// Input JSON: a file path, or an inline object. Flags override its fields.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for `plant`, `beta` and `verify` (default 7).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to `CONCFN_THREADS`, then to the core count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Q(F_a, tau) for S_a = sum_k X_k a_k.
    Concentration(ConcentrationArgs),
    /// Coordinatewise progression detector.
    Detect(DetectArgs),
    /// One-dimensional progression fit with outliers.
    Fit(FitArgs),
    /// Upper bound on beta_{r,m}(W, tau), exact for r = 1 on rationals.
    Beta(BetaArgs),
    /// The compound Poisson law H_z^lambda of a coefficient vector.
    Hdist(HdistArgs),
    /// Esséen integral of a law or compound Poisson spec.
    Essen(EssenArgs),
    /// Runs the verification suites.
    Verify(VerifyArgs),
    /// Draws a planted progression instance for `detect`.
    Plant(PlantArgs),
    /// Signed-cube report for the symmetrized coefficient measure.
    K1(K1Args),
}

/// Text to write and the process exit code.
pub struct Outcome {
    pub text: String,
    pub code: u8,
}

fn code_of(e: &Error) -> u8 {
    if e.is_cap() {
        3
    } else {
        2
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    if let Some(n) = threads(cli.global.threads)? {
        if n == 0 {
            return Err(Error::invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    }
    let file = input::read_input(&cli.global.input)?;
    let g = &cli.global;
    match cli.command {
        Command::Concentration(a) => commands::concentration(input::merge(a, file)?, g),
        Command::Detect(a) => commands::detect(input::merge(a, file)?, g),
        Command::Fit(a) => commands::fit(input::merge(a, file)?, g),
        Command::Beta(a) => commands::beta(input::merge(a, file)?, g),
        Command::Hdist(a) => commands::hdist(input::merge(a, file)?, g),
        Command::Essen(a) => commands::essen(input::merge(a, file)?, g),
        Command::Verify(a) => commands::verify(a, file, g),
        Command::Plant(a) => commands::plant(input::merge(a, file)?, g),
        Command::K1(a) => commands::k1(input::merge(a, file)?, g),
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> std::io::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let output = cli.global.output.clone();
    match run(cli) {
        Ok(out) => {
            if let Err(e) = emit(&out.text, &output) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code_of(&e))
        }
    }
}
