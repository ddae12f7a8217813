use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hdcpr::model::PriorFamily;
use hdcpr::simulation::GridSettings;
use hdcpr_cli::commands::{self, FitOverrides, FitSource, RunOptions, SimSource};
use hdcpr_cli::config::SEED_ENV;
use hdcpr_cli::{CliError, EXIT_USER};

/// Bayesian change-point regression with sparse priors.
#[derive(Parser, Debug)]
#[command(name = "hdcpr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Parallelism {
    /// Worker threads for independent chains (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Run chains one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one or more change-point counts and write the output bundle.
    Fit {
        /// TOML run configuration.
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Repeat a previous run from its manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Change-point counts to compare, e.g. `--k 0,1,2`.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        prior: Option<PriorFamily>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        /// Overrides the HDCPR_SEED environment variable and the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        proposal_sd: Option<f64>,
        #[arg(long)]
        holdout: Option<usize>,
        #[arg(long)]
        level: Option<f64>,
        #[command(flatten)]
        par: Parallelism,
    },
    /// Generate a synthetic dataset with its ground truth.
    Simulate {
        /// paper-sec3, paper-sec3-cs, paper-sec3-two, paper-sec3-two-cs,
        /// dic-change, dic-null or hpi-analog.
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        preset: Option<String>,
        /// TOML scenario: n, p, beta, tau, sigma2, cov, rho, seed.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of covariates for the paper presets.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Partial autocorrelations of one column as plot-ready CSV.
    Pacf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        /// Period label column (YYYY-MM or YYYYQn).
        #[arg(long)]
        label: Option<String>,
        /// Average monthly values to quarters first.
        #[arg(long, requires = "label")]
        quarterly: bool,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summaries of a samples file written by `fit`, as JSON.
    Summarize {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a grid of simulation presets and prior families.
    Grid {
        #[arg(long = "preset", required = true)]
        presets: Vec<String>,
        #[arg(long = "prior", default_value = "basad")]
        priors: Vec<PriorFamily>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, default_value_t = 40_000)]
        iterations: usize,
        #[arg(long, default_value_t = 20_000)]
        burn_in: usize,
        #[arg(long, default_value = "grid-out")]
        out: PathBuf,
        #[command(flatten)]
        par: Parallelism,
    },
}

fn options(par: &Parallelism) -> RunOptions {
    RunOptions {
        jobs: par.jobs,
        sequential: par.sequential,
        env_seed: std::env::var(SEED_ENV).ok(),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit {
            config,
            manifest,
            input,
            out,
            k,
            prior,
            iterations,
            burn_in,
            thin,
            seed,
            proposal_sd,
            holdout,
            level,
            par,
        } => {
            let source = match (config, manifest) {
                (_, Some(m)) => FitSource::Manifest(m),
                (Some(c), None) => FitSource::Config(c),
                (None, None) => unreachable!("clap requires one"),
            };
            let overrides = FitOverrides {
                input,
                out,
                k,
                prior,
                iterations,
                burn_in,
                thin,
                seed,
                proposal_sd,
                holdout,
                level,
            };
            let opts = options(&par);
            let cfg = commands::fit_config(&source, &overrides, &opts)?;
            let report = commands::fit(&cfg, &opts).context("fit failed")?;
            if !report.dropped_rows.is_empty() {
                eprintln!("dropped rows for lagged covariates: {}", report.dropped_rows.join(", "));
            }
            println!("K\tDIC\tp_D\tRMSPE\ttau");
            for r in &report.table {
                let rmspe = r.rmspe.map_or("-".to_string(), |v| format!("{v:.4}"));
                println!("{}\t{:.3}\t{:.3}\t{}\t{}", r.k, r.dic, r.p_d, rmspe, r.tau);
            }
            println!("lowest DIC: K = {}", report.best_k);
            println!("wrote {}", cfg.output.dir.display());
        }
        Command::Simulate {
            preset,
            spec,
            p,
            seed,
            out,
        } => {
            let source = match (preset, spec) {
                (Some(name), _) => SimSource::Preset { name, p },
                (None, Some(s)) => SimSource::Spec(s),
                (None, None) => unreachable!("clap requires one"),
            };
            let files = commands::simulate(&source, seed, &out)?;
            println!("wrote {} in {}", files.join(", "), out.display());
        }
        Command::Pacf {
            input,
            column,
            max_lag,
            label,
            quarterly,
            out,
        } => {
            let rows = commands::pacf_table(&input, &column, max_lag, label.as_deref(), quarterly)?;
            match out {
                Some(path) => {
                    let f = std::fs::File::create(&path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
                    commands::write_pacf(f, &rows)?;
                }
                None => commands::write_pacf(std::io::stdout().lock(), &rows)?,
            }
        }
        Command::Summarize { samples, level, out } => {
            let summary = commands::summarize_samples(&samples, level)?;
            match out {
                Some(path) => hdcpr_cli::output::write_json(&path, &summary)?,
                None => println!("{}", serde_json::to_string_pretty(&summary)?),
            }
        }
        Command::Grid {
            presets,
            priors,
            p,
            seed,
            replicates,
            iterations,
            burn_in,
            out,
            par,
        } => {
            let settings = GridSettings {
                iterations,
                burn_in,
                replicates,
                ..GridSettings::default()
            };
            let n = commands::grid(&presets, &priors, p, seed, &settings, &out, &options(&par))?;
            println!("fitted {n} cells; wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(EXIT_USER, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
