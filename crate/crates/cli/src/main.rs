use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use introspection_cli::commands::{resolve_out_dir, OUT_DIR_ENV};
use introspection_cli::config::load_file;
use introspection_cli::{
    cmd_check, cmd_figure, cmd_simulate, cmd_solve, exit, CliError, FigureName, Method, Overrides,
    Report,
};

#[derive(Parser)]
#[command(
    name = "introspect",
    version,
    about = "Introspection dynamics with mutation on N-player games"
)]
struct Cli {
    /// Output directory [default: config `output.path`, then $INTROSPECT_OUT_DIR, then ./introspect-out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and replicates [default: all cores]
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Base seed for simulation (overrides `simulation.seed`)
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Computation route (overrides `method`)
    #[arg(long, value_name = "NAME")]
    method: Option<Method>,
}

#[derive(Subcommand)]
enum Command {
    /// Long-run behaviour by the configured method, or a sweep
    Solve(RunArgs),
    /// Monte Carlo replicates of the chain
    Simulate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
    },
    /// Report which players' payoff differences are constant
    Check {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Regenerate the data behind a figure or table
    Figure {
        #[arg(value_enum)]
        name: FigureName,
        #[arg(long, value_name = "U64", default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<Option<Report>, CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads {k}: {e}")))?;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Solve(args) => {
            let loaded = load_file(
                &args.config,
                &Overrides {
                    method: args.method,
                    seed: args.seed,
                },
            )?;
            cmd_solve(&loaded, &resolve_out_dir(out, Some(&loaded.config.output))).map(Some)
        }
        Command::Simulate { config, seed } => {
            let loaded = load_file(
                &config,
                &Overrides {
                    method: Some(Method::Simulate),
                    seed,
                },
            )?;
            cmd_simulate(&loaded, &resolve_out_dir(out, Some(&loaded.config.output))).map(Some)
        }
        Command::Check { config } => {
            print!(
                "{}",
                cmd_check(&load_file(&config, &Overrides::default())?)?
            );
            Ok(None)
        }
        Command::Figure { name, seed } => {
            cmd_figure(name, &resolve_out_dir(out, None), seed).map(Some)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            if let Some(report) = report {
                if !report.summary.is_empty() {
                    println!("{}", report.summary);
                }
                for f in &report.written.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::from(exit::OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Io { .. }) && std::env::var_os(OUT_DIR_ENV).is_some() {
                eprintln!("note: ${OUT_DIR_ENV} is set");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
