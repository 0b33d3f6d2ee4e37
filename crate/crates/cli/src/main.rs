use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use curvepass_cli::commands::{self, Target};
use curvepass_cli::simulate::{Noise, SimSpec};
use curvepass_core::{DegradeParams, ImageId};
use curvepass_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "curvepass", version, about = "Curve-drawing graphical password toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or transform image catalogs.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Enroll a user on a running service.
    Enroll {
        #[arg(long)]
        server: String,
        #[arg(long)]
        user: String,
        /// Pass-image ids in order, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        images: Vec<ImageId>,
    },
    /// Scripted login runs.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Security reports.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Run the HTTP service (config from --config or $CURVEPASS_CONFIG).
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// Generate a synthetic catalog: manifest.json plus PNG rasters.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the degraded rendering of every image in a manifest.
    Degrade {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DegradeParams::default().contrast())]
        contrast: f64,
        #[arg(long, default_value_t = DegradeParams::default().brightness())]
        brightness: f64,
    },
}

#[derive(Subcommand)]
enum SimulateCmd {
    Login(SimulateLogin),
}

#[derive(Args)]
struct SimulateLogin {
    #[arg(long)]
    user: String,
    /// The user's pass-image ids in order, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    password: Vec<ImageId>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    /// `ideal` or `jitter:<sigma pixels>`.
    #[arg(long, default_value = "ideal")]
    noise: Noise,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Service URL. Without it a loopback service is started for the run.
    #[arg(long)]
    server: Option<String>,
    /// Enroll the user on --server before running.
    #[arg(long, requires = "server")]
    enroll: bool,
    /// Service config for the loopback service.
    #[arg(long, conflicts_with = "server")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Password space versus a PIN space.
    Space {
        #[arg(short = 'N', long = "catalog-size")]
        catalog_size: u64,
        #[arg(short = 'n', long = "length")]
        n: u64,
        #[arg(long, default_value_t = 36)]
        alphabet: u64,
        #[arg(long, default_value_t = 4)]
        pin_length: u32,
    },
    /// Candidate passwords left to an observer of a whole login.
    Attack {
        /// Crossed image ids in order, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        observed: Vec<ImageId>,
        #[arg(short = 'n', long = "length")]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        truth: Option<Vec<ImageId>>,
        #[arg(short = 'N', long = "catalog-size")]
        catalog_size: Option<u64>,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

async fn run(cli: Cli) -> Result<()> {
    let report = match cli.command {
        Command::Catalog(CatalogCmd::Gen { count, seed, out }) => commands::catalog_gen(count as usize, seed, &out)?,
        Command::Catalog(CatalogCmd::Degrade {
            manifest,
            out,
            contrast,
            brightness,
        }) => commands::catalog_degrade(&manifest, &out, &DegradeParams::new(contrast, brightness)?)?,
        Command::Enroll { server, user, images } => commands::enroll(&server, &user, &images).await?,
        Command::Simulate(SimulateCmd::Login(args)) => {
            let target = match args.server {
                Some(url) => Target::Remote {
                    url,
                    enroll: args.enroll,
                },
                None => Target::InProcess { config: args.config },
            };
            let spec = SimSpec {
                user: args.user,
                password: args.password,
                runs: args.runs as usize,
                noise: args.noise,
                seed: args.seed,
                parallel: args.parallel,
            };
            commands::simulate_login(&target, &spec).await?
        }
        Command::Analyze(AnalyzeCmd::Space {
            catalog_size,
            n,
            alphabet,
            pin_length,
        }) => commands::analyze_space(catalog_size, n, alphabet, pin_length)?,
        Command::Analyze(AnalyzeCmd::Attack {
            observed,
            n,
            truth,
            catalog_size,
        }) => commands::analyze_attack(&observed, n, truth.as_deref(), catalog_size)?,
        Command::Serve { config } => {
            let config = match config {
                Some(path) => {
                    let mut c = ServiceConfig::from_file(&path)?;
                    c.apply_overrides(|k| std::env::var(k).ok())?;
                    c
                }
                None => ServiceConfig::from_env()?,
            };
            curvepass_service::serve(&config).await?;
            return Ok(());
        }
    };
    print!("{report}");
    Ok(())
}
