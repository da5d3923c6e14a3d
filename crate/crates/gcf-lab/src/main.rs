//! `gcf`: command-line laboratory for the α-Gauss curvature flow on convex
//! bodies, its self-similar solutions, and the identity/inequality checks
//! backing them.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use gcf_lab::config::Settings;
use gcf_lab::run;

#[derive(Parser)]
#[command(name = "gcf", version, about = "Gauss curvature flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value config file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving CSV/JSON artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed for every random draw in the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Nodes on the circle (n=1) or latitude rows (n=2, longitudes = 2x).
    #[arg(long)]
    resolution: Option<usize>,
    /// Curvature exponent of the speed K^alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Hypersurface dimension: 1 (curves) or 2 (surfaces).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the volume-normalized (or free) contraction flow.
    Flow {
        #[command(flatten)]
        common: Common,
    },
    /// Solve or sweep the closed self-similar curve equation.
    Shrinker {
        #[command(flatten)]
        common: Common,
    },
    /// Run a verification case of the identity suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// sphere | ellipse | random | ode-shrinker
        #[arg(long, default_value = "sphere")]
        case: String,
    },
    /// Scan the scalar inequality family and certify its bounds.
    Ineq {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        alpha_samples: Option<usize>,
        #[arg(long)]
        theta_samples: Option<usize>,
        #[arg(long)]
        theta_max: Option<f64>,
    },
}

/// Defaults, then the config file, then flags.
fn resolve(common: &Common) -> anyhow::Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {path:?}: {e}"))?;
        s.apply_file(&text, &path.display().to_string())?;
    }
    if let Some(v) = common.seed {
        s.apply_flag("seed", &v.to_string())?;
    }
    if let Some(v) = common.resolution {
        s.apply_flag("resolution", &v.to_string())?;
    }
    if let Some(v) = common.alpha {
        s.apply_flag("alpha", &format!("{v:e}"))?;
    }
    if let Some(v) = common.n {
        s.apply_flag("n", &v.to_string())?;
    }
    if let Some(dir) = &common.out_dir {
        s.out_dir = dir.clone();
    }
    Ok(s)
}

fn dispatch(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Flow { common } => run::flow(&resolve(common)?),
        Command::Shrinker { common } => run::shrinker(&resolve(common)?),
        Command::Verify { common, case } => run::verify(&resolve(common)?, case),
        Command::Ineq { common, n_max, alpha_samples, theta_samples, theta_max } => {
            let mut s = resolve(common)?;
            if let Some(v) = n_max {
                s.apply_flag("n_max", &v.to_string())?;
            }
            if let Some(v) = alpha_samples {
                s.apply_flag("alpha_samples", &v.to_string())?;
            }
            if let Some(v) = theta_samples {
                s.apply_flag("theta_samples", &v.to_string())?;
            }
            if let Some(v) = theta_max {
                s.apply_flag("theta_max", &format!("{v:e}"))?;
            }
            run::ineq(&s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
