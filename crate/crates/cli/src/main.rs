use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use guidespec_cli::commands::default_out;
use guidespec_cli::{run, Command, RunOptions};
use guidespec_core::weyl::WeylKind;

#[derive(Parser)]
#[command(name = "guidespec", version, about = "Essential spectrum of perforated periodic planes with an open waveguide")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a config without solving anything.
    Validate(Common),
    /// Band functions, bands and gaps of the periodic cell problem.
    Bands(Common),
    /// Strip spectra, guided branches and σ♯.
    Dispersion(Common),
    /// Bands, dispersion and the union report.
    Spectrum(Common),
    /// Singular-sequence residual decay.
    Weyl {
        #[command(flatten)]
        common: Common,
        /// Run only one of the configured targets.
        #[arg(long, value_enum)]
        target: Option<Target>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: out/<config stem>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Neither read nor write the product cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Bloch,
    Floquet,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, common, target) = match cli.command {
        Cmd::Validate(c) => (Command::Validate, c, None),
        Cmd::Bands(c) => (Command::Bands, c, None),
        Cmd::Dispersion(c) => (Command::Dispersion, c, None),
        Cmd::Spectrum(c) => (Command::Spectrum, c, None),
        Cmd::Weyl { common, target } => (Command::Weyl, common, target),
    };
    let opts = RunOptions {
        out: common.out.unwrap_or_else(|| default_out(&common.config)),
        config: common.config,
        workers: common.workers,
        no_cache: common.no_cache,
        target: target.map(|t| match t {
            Target::Bloch => WeylKind::Bloch,
            Target::Floquet => WeylKind::Floquet,
        }),
    };
    match run(command, &opts) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for path in &summary.written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
