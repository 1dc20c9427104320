use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ged_core::bench::{self, GeneratorParams};
use ged_core::cost::load_cost_model;
use ged_core::edit_path::DEFAULT_NODE_BUDGET;
use ged_core::graph::load_graph;
use ged_core::{estimate_ged, exact_ged, BuiltinCost, CostModel, Error, LabeledGraph, SolverConfig};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_BUDGET: u8 = 4;

/// Approximate and exact graph edit distance.
#[derive(Parser, Debug)]
#[command(name = "ged", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the edit distance of two graphs and print the report as JSON.
    Estimate {
        g1: PathBuf,
        g2: PathBuf,
        #[arg(long, default_value = "case3")]
        cost: String,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact edit distance by enumerating every node mapping.
    Exact {
        g1: PathBuf,
        g2: PathBuf,
        #[arg(long, default_value = "case3")]
        cost: String,
        /// Largest padded order the enumeration accepts.
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic pair corpus with exact distances.
    Gen {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 0)]
        edits_min: usize,
        #[arg(long, default_value_t = 2)]
        edits_max: usize,
        #[arg(long, default_value_t = 0.35)]
        edge_prob: f64,
        /// Comma-separated label alphabet.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        labels: Vec<String>,
        /// Cost setting the exact distances are computed under.
        #[arg(long, default_value = "case3")]
        cost: String,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        /// Corpus directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate every pair of a corpus and report MAE/SI.
    Bench {
        corpus: PathBuf,
        /// Overrides the corpus cost setting; exact distances are recomputed.
        #[arg(long)]
        cost: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Budget for recomputing exact distances under --cost.
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        /// Directory for report.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write zero in place of wall-clock columns.
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda_step: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    inner_iters: Option<usize>,
    #[arg(long)]
    sigma_cap: Option<f64>,
    /// Keep λ at zero (round the plain relaxed solution).
    #[arg(long)]
    no_regularizer: bool,
    /// Skip recentering the problem after each round.
    #[arg(long)]
    no_inverse_relabel: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(mu => mu, alpha => alpha, lambda_step => lambda_step, max_rounds => lambda_max_rounds,
             patience => patience, inner_tol => inner_tol, inner_iters => inner_max_iters, sigma_cap => sigma_cap);
        cfg.enable_regularizer = !self.no_regularizer;
        cfg.enable_inverse_relabel = !self.no_inverse_relabel;
        cfg
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Dimension(_) | Error::NotPermutation(_) | Error::NonFinite(_) | Error::EigenNoConvergence { .. } => {
            EXIT_SOLVER
        }
        _ => EXIT_INPUT,
    }
}

fn parse_cost(selector: &str) -> Result<CostModel, Error> {
    match selector.strip_prefix("file:") {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::InvalidCost(format!("{path}: {e}")))?;
            load_cost_model(BufReader::new(file))
        }
        None => Ok(CostModel::builtin(selector.parse::<BuiltinCost>()?)),
    }
}

fn read_graph(path: &Path) -> Result<LabeledGraph, Error> {
    let file = File::open(path).map_err(|e| Error::InvalidGraph(format!("{}: {e}", path.display())))?;
    load_graph(BufReader::new(file)).map_err(|e| match e {
        Error::GraphParse { line, column, message } => Error::GraphParse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))?,
        None => writeln!(io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Estimate {
            g1,
            g2,
            cost,
            solver,
            out,
        } => {
            let cm = parse_cost(&cost)?;
            let cfg = solver.config();
            cfg.validate()?;
            let (g1, g2) = (read_graph(&g1)?, read_graph(&g2)?);
            let report = estimate_ged(&g1, &g2, &cm, &cfg)?;
            log::info!(
                "estimated {} after {} rounds ({:?})",
                report.estimated_ged,
                report.rounds(),
                report.converged_reason
            );
            emit(&serde_json::to_string_pretty(&report)?, out.as_deref())
        }
        Command::Exact {
            g1,
            g2,
            cost,
            budget,
            out,
        } => {
            let cm = parse_cost(&cost)?;
            let (g1, g2) = (read_graph(&g1)?, read_graph(&g2)?);
            let result = exact_ged(&g1, &g2, &cm, budget)?;
            emit(&serde_json::to_string_pretty(&result)?, out.as_deref())
        }
        Command::Gen {
            seed,
            count,
            n_min,
            n_max,
            edits_min,
            edits_max,
            edge_prob,
            labels,
            cost,
            budget,
            out,
        } => {
            let cm = parse_cost(&cost)?;
            let params = GeneratorParams {
                seed,
                count,
                n_range: (n_min, n_max),
                edit_range: (edits_min, edits_max),
                edge_prob,
                labels,
                oracle_budget: budget,
            };
            let cases = bench::generate_pairs(&params, &cm)?;
            let manifest = bench::write_corpus(&out, &cases, &cost, Some(&params))?;
            log::info!("wrote {} cases to {}", cases.len(), manifest.display());
            Ok(())
        }
        Command::Bench {
            corpus,
            cost,
            solver,
            workers,
            budget,
            out,
            no_timing,
        } => {
            let cfg = solver.config();
            cfg.validate()?;
            let (manifest, mut cases) = bench::read_corpus(&corpus)?;
            let cm = match &cost {
                Some(selector) if *selector != manifest.cost => {
                    let cm = parse_cost(selector)?;
                    bench::recompute_truth(&mut cases, &cm, budget)?;
                    cm
                }
                _ => parse_cost(&manifest.cost)?,
            };
            let report = bench::run_bench(&cases, &cm, &cfg, workers)?;
            let timing = !no_timing;
            let summary = report.aggregate_json(timing);
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("report.csv"), report.to_csv(timing))?;
                fs::write(dir.join("summary.json"), format!("{summary}\n"))?;
            }
            emit(&summary, None)
        }
    }
}

fn init_logging() {
    let level = std::env::var("GED_LOG").unwrap_or_else(|_| "off".into());
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
