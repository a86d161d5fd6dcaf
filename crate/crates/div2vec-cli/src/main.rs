use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use div2vec_cli::config::ExperimentConfig;
use div2vec_cli::pipeline::{Pipeline, PipelineError};

/// Random-walk node embeddings (DeepWalk, node2vec, div2vec) with a
/// link-prediction and diversity evaluation pipeline.
#[derive(Parser)]
#[command(name = "div2vec", version, max_term_width = 100)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,

    /// Directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "runs/default")]
    out_dir: PathBuf,

    /// Override every per-stage seed with values derived from this one.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for within-stage parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Recompute stages even when cached artifacts are current.
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse ratings, binarize, filter, split, and build the graphs.
    Ingest,
    /// Generate walk corpora for every configured method.
    Walk,
    /// Train skip-gram embeddings for every method.
    Embed,
    /// Dump per-edge feature CSVs for every (method, operator).
    Edges,
    /// Train the link-prediction classifier per (method, operator).
    Fit,
    /// Compute AUC, coverage, entropy-diversity and intra-list
    /// similarity per (method, operator).
    Evaluate,
    /// Write degree-versus-frequency CSVs per walk strategy.
    Figure2,
    /// Run everything and write the comparison grid to report.csv.
    Report,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ PipelineError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ PipelineError::Stage { .. }) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| PipelineError::Config(format!("--threads: {e}")))?;
    }
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    let mut pipeline = Pipeline::new(config, &cli.out_dir, cli.force)?;

    match cli.command {
        Command::Ingest => {
            let ingest = pipeline.ensure_ingest()?;
            println!(
                "ingested {} nodes ({} users, {} items), {} labeled edges",
                ingest.id_map.len(),
                ingest.users.len(),
                ingest.items.len(),
                ingest.edges.edges.len()
            );
        }
        Command::Walk => {
            let methods = pipeline.config().methods.clone();
            for method in &methods {
                let (pos, neg) = pipeline.ensure_walks(method)?;
                println!(
                    "{}: {} positive-graph walks, {} negative-graph walks",
                    method.name,
                    pos.walks.len(),
                    neg.walks.len()
                );
            }
        }
        Command::Embed => {
            let methods = pipeline.config().methods.clone();
            for method in &methods {
                let (pos, neg) = pipeline.ensure_embeddings(method)?;
                println!(
                    "{}: {} positive-graph vectors, {} negative-graph vectors",
                    method.name,
                    pos.present_nodes().count(),
                    neg.present_nodes().count()
                );
            }
        }
        Command::Edges => {
            for path in pipeline.ensure_edge_dumps()? {
                println!("wrote {}", path.display());
            }
        }
        Command::Fit | Command::Evaluate => {
            let methods = pipeline.config().methods.clone();
            for method in &methods {
                for row in pipeline.ensure_method(method)? {
                    println!(
                        "{} / {}: auc {:.6}",
                        row.method, row.operator, row.auc
                    );
                }
            }
        }
        Command::Figure2 => {
            for (strategy, spearman, path) in pipeline.ensure_figure2()? {
                println!("{strategy}: spearman(degree, frequency) = {spearman:.4} -> {}", path.display());
            }
        }
        Command::Report => {
            let outcome = pipeline.ensure_report()?;
            pipeline.manifest().verify_completeness(pipeline.out_dir())?;
            println!("wrote {}", outcome.report_path.display());
            for report in &outcome.reports {
                println!(
                    "  {} / {}: auc {:.6}",
                    report.method,
                    report.operator.name(),
                    report.auc
                );
            }
        }
    }
    Ok(())
}
