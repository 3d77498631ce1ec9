use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use klist::expcli::results::write_atomic;
use klist::expcli::run::{manifest_text, prepare_out_dir};
use klist::expcli::{
    default_k_grid, render_plots, run_smallball, sweep_rows, theory_report, write_results, ErrorModelSelection,
    ExperimentSpec, Overrides, SmallBallSpec, MANIFEST_FILE, RESULTS_FILE,
};

#[derive(Parser)]
#[command(name = "klist", version, about = "Centralized vs decentralized k-list estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep (d, sigma_n, k) and write results.csv, manifest.toml and figures.
    Run {
        /// TOML config; defaults apply to anything it leaves out.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dimensions, comma separated.
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        sigma_n: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        /// Trial count for both estimators.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plots: Option<bool>,
    },
    /// Empirical small-ball probabilities with bounds and the fitted exponent.
    Smallball {
        #[arg(long, value_enum, default_value = "gaussian")]
        model: ModelKind,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma_x: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_n: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: usize,
        #[arg(long, value_delimiter = ',')]
        a_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Render fig_d{d}.svg files from a results CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print closed-form predictions for one Gaussian model.
    Theory {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma_x: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_n: f64,
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Gaussian,
    Powerlaw,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, d, sigma_n, k_grid, trials, seed, out, plots } => {
            let mut spec = match &config {
                Some(p) => ExperimentSpec::from_file(p).context("stage `config`")?,
                None => ExperimentSpec::default(),
            };
            spec.apply(&Overrides { dims: d, sigma_n, k_grid, trials, seed, out, plots })
                .context("stage `config`")?;
            prepare_out_dir(&spec.out_dir).context("stage `output`")?;
            let mut rows = sweep_rows(&spec).context("stage `sweep`")?;
            let csv = spec.out_dir.join(RESULTS_FILE);
            write_results(&csv, &mut rows).context("stage `write`")?;
            let manifest = spec.out_dir.join(MANIFEST_FILE);
            write_atomic(&manifest, manifest_text(&spec, rows.len()).as_bytes()).context("stage `write`")?;
            println!("{}", csv.display());
            if spec.emit_plots {
                for p in render_plots(&csv, &spec.out_dir).context("stage `plot`")? {
                    println!("{}", p.display());
                }
            }
        }
        Command::Smallball { model, d, sigma_x, sigma_n, beta, r_max, trials, a_grid, seed, out } => {
            let model = match model {
                ModelKind::Gaussian => ErrorModelSelection::Gaussian { d, sigma_x, sigma_n },
                ModelKind::Powerlaw => ErrorModelSelection::PowerLaw { d, beta, r_max },
            };
            let spec = SmallBallSpec { model, trials, a_grid, seed_root: seed, out_dir: out };
            let path = run_smallball(&spec).context("stage `smallball`")?;
            println!("{}", path.display());
        }
        Command::Plot { csv, out } => {
            for p in render_plots(&csv, &out).context("stage `plot`")? {
                println!("{}", p.display());
            }
        }
        Command::Theory { d, sigma_x, sigma_n, k_grid } => {
            let ks = k_grid.unwrap_or_else(default_k_grid);
            print!("{}", theory_report(d, sigma_x, sigma_n, &ks).context("stage `theory`")?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
