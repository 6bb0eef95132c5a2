use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hope::io::experiments::resolve_out_dir;
use hope::io::{run, Config, RunContext, Subcommand};
use hope::HopeError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Taylor expansion plus summed fields and efficiencies.
    Solve,
    /// Error table of partial sums against a reference.
    Converge,
    /// Taylor, Pade and reference efficiencies over a delta sweep.
    Continue,
    /// Envelope and permittivity on an (x, z) grid.
    EnvelopePlot,
    /// Transfer-matrix sweep for laminar envelopes.
    Oracle,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Solve => Subcommand::Solve,
            Command::Converge => Subcommand::Converge,
            Command::Continue => Subcommand::Continue,
            Command::EnvelopePlot => Subcommand::EnvelopePlot,
            Command::Oracle => Subcommand::Oracle,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hope",
    version,
    about = "Scattering by biperiodic inhomogeneous slabs"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides HOPE_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 uses all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Seed recorded in the manifest for randomized utilities.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), HopeError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| HopeError::InvalidConfig(format!("thread pool: {e}")))?;
    let (config, base) = Config::load(&cli.config)?;
    let env = std::env::var("HOPE_OUT_DIR").ok();
    let ctx = RunContext {
        config,
        base,
        out_dir: resolve_out_dir(cli.out.as_deref(), env.as_deref()),
        threads: pool.current_num_threads(),
        seed: cli.seed,
    };
    let manifest = pool.install(|| run(cli.command.into(), &ctx))?;
    for f in &manifest.files {
        println!("{}  {}", f.sha256, ctx.out_dir.join(&f.path).display());
    }
    Ok(())
}
