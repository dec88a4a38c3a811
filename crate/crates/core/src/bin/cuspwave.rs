use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cuspwave::cli::run;
use cuspwave::config::{Command, RunConfig};
use cuspwave::nonlinearity::NonlinearityKind;
use cuspwave::output::error_record;
use cuspwave::spectral::SymbolFamily;
use cuspwave::Error;

#[derive(Debug, Parser)]
#[command(
    name = "cuspwave",
    version,
    about = "Travelling waves with negative-order dispersion"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<CommandArg>,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// neg_order, whitham_power or bessel.
    #[arg(long, global = true)]
    symbol_family: Option<SymbolFamily>,
    /// abs or sgn.
    #[arg(long, global = true)]
    kind: Option<NonlinearityKind>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Comma-separated homotopy schedule.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_schedule: Option<Vec<f64>>,
    /// Branch index.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Retained cosine modes.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Grid nodes (0 for 4m).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Kernel table size.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Random points in the kernel cross-check.
    #[arg(long, global = true)]
    checks: Option<usize>,
    /// Comma-separated amplitudes for verify-asymptotics.
    #[arg(long, global = true, value_delimiter = ',')]
    s_list: Option<Vec<f64>>,
    /// Wave CSV to audit.
    #[arg(long, global = true)]
    wave: Option<PathBuf>,
    #[arg(long, global = true)]
    s0: Option<f64>,
    #[arg(long, global = true)]
    ds: Option<f64>,
    /// Relative crest margin at which the branch stops.
    #[arg(long, global = true)]
    crest_margin: Option<f64>,
    #[arg(long, global = true)]
    newton_tol: Option<f64>,
    #[arg(long, global = true)]
    max_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum CommandArg {
    /// Kernel table, random cross-check against the Fourier sum, L1 norm.
    Kernel,
    /// Follow the branch from the trivial line toward the highest wave.
    Branch,
    /// Branches along the eps schedule.
    Homotopy,
    /// Small-amplitude coefficient checks.
    VerifyAsymptotics,
    /// Crest exponent fit of the near-crest wave.
    Regularity,
    /// Audit a wave CSV, or every point of a fresh branch.
    Audit,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Kernel => Command::Kernel,
            CommandArg::Branch => Command::Branch,
            CommandArg::Homotopy => Command::Homotopy,
            CommandArg::VerifyAsymptotics => Command::VerifyAsymptotics,
            CommandArg::Regularity => Command::Regularity,
            CommandArg::Audit => Command::Audit,
        }
    }
}

fn assemble(cli: Cli) -> Result<RunConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    macro_rules! apply {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = cli.$flag { config.$($field).+ = v; })*
        };
    }
    apply!(
        output_dir => output_dir, seed => seed, alpha => alpha, symbol_family => symbol_family,
        kind => kind, p => p, eps => eps, k => k, m => m, n => n, nodes => nodes,
        checks => checks, s_list => s_list, s0 => continuation.s0, ds => continuation.ds,
        crest_margin => continuation.crest_margin, newton_tol => continuation.newton_tol,
        max_steps => continuation.max_steps, eps_schedule => continuation.eps_schedule,
    );
    if let Some(c) = cli.command {
        config.command = Some(c.into());
    }
    if cli.wave.is_some() {
        config.wave = cli.wave;
    }
    Ok(config)
}

fn fail(error: &Error) -> ExitCode {
    eprintln!("{}", error_record(error));
    ExitCode::from(error.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return fail(&Error::Config {
                field: "arguments".into(),
                message: e.to_string(),
            })
        }
    };
    let config = match assemble(cli) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run(&config) {
        Ok(outcome) => {
            for file in outcome.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
