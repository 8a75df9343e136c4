use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sparsetrack::bounds::{certify, MatrixConstants, TheoremParams, Variant, DEFAULT_BUDGET};
use sparsetrack::experiment::{run_monte_carlo, write_outputs, AggregateRecord, ExperimentConfig, Fig1Regime, OutputPaths, SvgOptions};
use sparsetrack::measurement::{equiangular_frame, gaussian_matrix, read_matrix_csv, write_matrix_csv};
use sparsetrack::Error;

#[derive(Parser)]
#[command(name = "sparsetrack", version, about = "Recursive sparse reconstruction experiments and stability certificates")]
struct Cli {
    /// Master seed; overrides the seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte-Carlo trials and constant enumeration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Write results.{csv,json,svg} here instead of the config's output paths.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the four reference stability regimes.
    #[command(name = "reproduce-fig1")]
    ReproduceFig1 {
        #[arg(long)]
        regime: Fig1Regime,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        horizon: Option<usize>,
        /// Output directory (default `fig1-<regime>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute exact restricted isometry and orthogonality constants of a matrix.
    #[command(name = "analyze-matrix")]
    AnalyzeMatrix {
        /// Matrix CSV with an `n,m` header line.
        #[arg(long)]
        matrix: PathBuf,
        /// Comma-separated orders S of delta_S.
        #[arg(long, value_delimiter = ',', default_value = "")]
        delta_orders: Vec<String>,
        /// Comma-separated `S:S'` pairs of theta_{S,S'}.
        #[arg(long, value_delimiter = ',', default_value = "")]
        theta_pairs: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        /// Write the constants JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the hypotheses of a stability statement.
    #[command(name = "check-conditions")]
    CheckConditions {
        #[arg(long)]
        variant: Option<Variant>,
        /// Statement parameters as JSON.
        #[arg(long)]
        params: PathBuf,
        /// Precomputed constants JSON.
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        constants: Option<PathBuf>,
        /// Matrix CSV; the needed constants are computed from it.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Write a random measurement matrix as CSV.
    #[command(name = "gen-matrix")]
    GenMatrix {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = MatrixKind::Gaussian)]
        kind: MatrixKind,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKind {
    /// Column-normalized i.i.d. Gaussian.
    Gaussian,
    /// Equiangular (m−1)×m frame.
    Frame,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Simulate { config, out } => {
            let mut cfg = ExperimentConfig::read(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let paths = match out {
                Some(dir) => OutputPaths::in_dir(&dir),
                None => cfg.output.clone(),
            };
            simulate(&cfg, &paths)
        }
        Command::ReproduceFig1 { regime, trials, horizon, out } => {
            let mut cfg = ExperimentConfig::fig1(regime, trials, seed.unwrap_or(0));
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            cfg.validate()?;
            let dir = out.unwrap_or_else(|| PathBuf::from(format!("fig1-{}", regime.name())));
            simulate(&cfg, &OutputPaths::in_dir(&dir))
        }
        Command::AnalyzeMatrix { matrix, delta_orders, theta_pairs, budget, out } => {
            let a = read_matrix_csv(&matrix)?;
            let orders = parse_orders(&delta_orders)?;
            let pairs = parse_pairs(&theta_pairs)?;
            let constants = MatrixConstants::compute(&a, &orders, &pairs, budget)?;
            if let Some(path) = out {
                constants.write_json(&path)?;
            }
            println!("{}", constants.to_json());
            Ok(())
        }
        Command::CheckConditions { variant, params, constants, matrix, budget } => {
            let mut p: TheoremParams = read_json(&params)?;
            if let Some(v) = variant {
                p.variant = v;
            }
            let constants = match (constants, matrix) {
                (Some(path), _) => MatrixConstants::read_json(&path)?,
                (None, Some(path)) => {
                    let (d, t) = p.required_constants();
                    MatrixConstants::compute(&read_matrix_csv(&path)?, &d, &t, budget)?
                }
                (None, None) => unreachable!("clap requires one of --constants and --matrix"),
            };
            let report = certify(&p, &constants)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
        Command::GenMatrix { n, m, kind, out } => {
            let a = match kind {
                MatrixKind::Gaussian => {
                    let n = n.ok_or_else(|| Error::Config("--n is required for gaussian matrices".into()))?;
                    gaussian_matrix(n, m, seed.unwrap_or(0), true)?
                }
                MatrixKind::Frame => equiangular_frame(m, seed.unwrap_or(0))?,
            };
            write_matrix_csv(&a, &out)?;
            println!("wrote {}x{} matrix to {}", a.nrows(), a.ncols(), out.display());
            Ok(())
        }
    }
}

fn simulate(cfg: &ExperimentConfig, paths: &OutputPaths) -> Result<(), Error> {
    let (agg, _) = run_monte_carlo(cfg)?;
    let written = write_outputs(&agg, paths, &SvgOptions::default())?;
    print_summary(&agg);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(agg: &AggregateRecord) {
    println!("{} trials, horizon {}", agg.trials, agg.horizon);
    for s in &agg.series {
        let last = agg.horizon - 1;
        println!(
            "{:<11} final NMSE {:.3e}  misses {:.2}  extras {:.2}  solver failures {}",
            s.algorithm.to_string(),
            s.nmse[last],
            s.misses[last],
            s.extras[last],
            s.solver_failures
        );
    }
    if let Some(sp) = &agg.spread {
        println!("LS-step error spread: {:.4} of {} steps", sp.fraction, sp.steps);
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
}

fn parse_orders(raw: &[String]) -> Result<Vec<usize>, Error> {
    raw.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("bad delta order {s:?}"))))
        .collect()
}

fn parse_pairs(raw: &[String]) -> Result<Vec<(usize, usize)>, Error> {
    raw.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (a, b) = s.trim().split_once(':').ok_or_else(|| Error::Config(format!("bad theta pair {s:?}, expected S:S'")))?;
            let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad theta pair {s:?}")));
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}
