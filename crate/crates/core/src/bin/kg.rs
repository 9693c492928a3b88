//! Command-line front end: `stats`, `describe`, `run`, `ablate`,
//! `correlate`. Exit codes: 0 on success, 1 on configuration errors, 2 on
//! data errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kgbench::descriptors::describe;
use kgbench::factor::FactorKind;
use kgbench::graph::KnowledgeGraph;
use kgbench::link_eval::CombineOp;
use kgbench::pipeline::{
    correlate, run_ablation_on, run_benchmark_on, ModelKind, RankModeChoice, RunConfig,
};
use kgbench::splits::{build_splits, write_splits_dir, NegativeMode, SplitConfig};

#[derive(Parser)]
#[command(
    name = "kg",
    version,
    about = "Benchmark knowledge-graph embeddings under structural ablations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Shallow,
    Distmult,
    Complex,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> ModelKind {
        match m {
            ModelArg::Shallow => ModelKind::Shallow,
            ModelArg::Distmult => ModelKind::DistMult,
            ModelArg::Complex => ModelKind::Complex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineArg {
    Concat,
    Sum,
    Mean,
    Hadamard,
}

impl From<CombineArg> for CombineOp {
    fn from(c: CombineArg) -> CombineOp {
        match c {
            CombineArg::Concat => CombineOp::Concat,
            CombineArg::Sum => CombineOp::Sum,
            CombineArg::Mean => CombineOp::Mean,
            CombineArg::Hadamard => CombineOp::Hadamard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NegModeArg {
    Semantic,
    Unrestricted,
}

impl From<NegModeArg> for NegativeMode {
    fn from(m: NegModeArg) -> NegativeMode {
        match m {
            NegModeArg::Semantic => NegativeMode::Semantic,
            NegModeArg::Unrestricted => NegativeMode::Unrestricted,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RankModeArg {
    Raw,
    Filtered,
    Both,
}

impl From<RankModeArg> for RankModeChoice {
    fn from(m: RankModeArg) -> RankModeChoice {
        match m {
            RankModeArg::Raw => RankModeChoice::Raw,
            RankModeArg::Filtered => RankModeChoice::Filtered,
            RankModeArg::Both => RankModeChoice::Both,
        }
    }
}

#[derive(clap::Args)]
struct CommonModelArgs {
    /// Triple corpus: a TSV file or a directory with train/valid/test.txt
    #[arg(long)]
    input: PathBuf,
    /// Repeated sub-sampling runs
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Embedding dimension (model default when omitted)
    #[arg(long)]
    dim: Option<usize>,
    /// Training epochs (model default when omitted)
    #[arg(long)]
    epochs: Option<usize>,
    /// Negatives per positive during embedding training
    #[arg(long)]
    neg_k: Option<usize>,
    /// Learning rate (model default when omitted)
    #[arg(long)]
    lr: Option<f64>,
    /// Master seed for every random choice
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Omit wall-clock timings so reports are byte-identical per seed
    #[arg(long)]
    deterministic: bool,
    /// Directory for report.json and CSV outputs
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print entity/relation/triple counts as JSON
    Stats {
        /// Triple corpus: a TSV file or a directory with train/valid/test.txt
        #[arg(long)]
        input: PathBuf,
    },
    /// Compute connectivity and relation-similarity descriptors
    Describe {
        /// Triple corpus: a TSV file or a directory with train/valid/test.txt
        #[arg(long)]
        input: PathBuf,
        /// Output JSON report path
        #[arg(long)]
        out: PathBuf,
        /// Also write the similarity matrices as CSV into this directory
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate specialized vs generalized embeddings over repeated splits
    Run {
        #[command(flatten)]
        common: CommonModelArgs,
        /// Retain fraction for every relation
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        /// Embedding model
        #[arg(long, value_enum, default_value_t = ModelArg::Shallow)]
        model: ModelArg,
        /// Link feature construction
        #[arg(long, value_enum, default_value_t = CombineArg::Concat)]
        combine: CombineArg,
        /// Negative sampling pool
        #[arg(long, value_enum, default_value_t = NegModeArg::Semantic)]
        neg_mode: NegModeArg,
        /// Train only the shared generalized embeddings
        #[arg(long)]
        generalized_only: bool,
        /// Per-run wall-clock budget in seconds
        #[arg(long)]
        timeout_secs: Option<u64>,
        /// Audit dump of the first run's splits into this directory
        #[arg(long)]
        dump_splits: Option<PathBuf>,
    },
    /// Random per-relation ablation scored with mean (reciprocal) rank
    Ablate {
        #[command(flatten)]
        common: CommonModelArgs,
        /// Factorization model; both are trained when omitted
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Candidate filtering for ranking
        #[arg(long, value_enum, default_value_t = RankModeArg::Both)]
        rank_mode: RankModeArg,
    },
    /// Spearman-correlate saved report metrics against graph descriptors
    Correlate {
        /// One or more report.json files from `run` or `ablate`
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: Cli) -> kgbench::Result<()> {
    match cli.command {
        Command::Stats { input } => {
            let kg = KnowledgeGraph::load_dir(&input)?;
            println!("{}", serde_json::to_string(&kg.stats_json())?);
        }
        Command::Describe { input, out, csv } => {
            let kg = KnowledgeGraph::load_dir(&input)?;
            let report = describe(&kg)?;
            report.write_json(&out)?;
            if let Some(dir) = csv {
                report.write_matrices_csv(&dir)?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "entities": report.entities,
                    "relations": report.relations,
                    "triples": report.triples,
                    "mu_mean": report.mu_mean,
                    "z_mean": report.z_mean,
                    "frob_s": report.frob_s,
                    "frob_s_prime": report.frob_s_prime,
                })
            );
        }
        Command::Run {
            common,
            alpha,
            model,
            combine,
            neg_mode,
            generalized_only,
            timeout_secs,
            dump_splits,
        } => {
            let cfg = RunConfig {
                input: common.input.clone(),
                alpha,
                runs: common.runs,
                model: model.into(),
                dim: common.dim,
                epochs: common.epochs,
                neg_k: common.neg_k,
                learning_rate: common.lr,
                combine: combine.into(),
                negative_mode: neg_mode.into(),
                generalized_only,
                seed: common.seed,
                deterministic: common.deterministic,
                rank_mode: RankModeChoice::Both,
                timeout_secs,
            };
            cfg.validate()?;
            let kg = KnowledgeGraph::load_dir(&common.input)?;
            if let Some(dir) = dump_splits {
                let split_cfg = SplitConfig {
                    alpha,
                    seed: kgbench::seed::derive_seed(common.seed, 0, 0),
                    negative_mode: cfg.negative_mode,
                    ratio: 1,
                };
                let splits = build_splits(&kg, &split_cfg)?;
                write_splits_dir(&kg, &splits, &dir)?;
            }
            let report = run_benchmark_on(&kg, &cfg)?;
            if let Some(dir) = &common.out {
                report.write_outputs(dir)?;
            }
            let mut summary = serde_json::json!({
                "runs": cfg.runs,
                "relations": report.descriptors.relations,
                "records": report.specialized.len() + report.generalized.len(),
                "skips": report.skips.len(),
                "f1_generalized": report.aggregates.generalized.f1,
            });
            if let Some(spec) = &report.aggregates.specialized {
                summary["f1_specialized"] = serde_json::to_value(spec.f1)?;
            }
            println!("{summary}");
        }
        Command::Ablate {
            common,
            model,
            rank_mode,
        } => {
            let kinds: Vec<FactorKind> = match model {
                None => vec![FactorKind::DistMult, FactorKind::Complex],
                Some(arg) => {
                    let kind = ModelKind::from(arg).factor_kind().ok_or_else(|| {
                        kgbench::Error::Config(
                            "ablate requires a factorization model (distmult or complex)".into(),
                        )
                    })?;
                    vec![kind]
                }
            };
            let model_kind = match kinds[0] {
                FactorKind::DistMult => ModelKind::DistMult,
                FactorKind::Complex => ModelKind::Complex,
            };
            let cfg = RunConfig {
                input: common.input.clone(),
                runs: common.runs,
                model: model_kind,
                dim: common.dim,
                epochs: common.epochs,
                neg_k: common.neg_k,
                learning_rate: common.lr,
                seed: common.seed,
                deterministic: common.deterministic,
                rank_mode: rank_mode.into(),
                ..Default::default()
            };
            cfg.validate()?;
            let kg = KnowledgeGraph::load_dir(&common.input)?;
            let report = run_ablation_on(&kg, &cfg, &kinds)?;
            if let Some(dir) = &common.out {
                report.write_outputs(dir)?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "runs": cfg.runs,
                    "models": report.models,
                    "records": report.ranking.len(),
                    "skips": report.skips.len(),
                    "aggregates": report.aggregates,
                })
            );
        }
        Command::Correlate { input, out } => {
            let output = correlate(&input)?;
            output.write_outputs(&out)?;
            println!(
                "{}",
                serde_json::json!({
                    "reports": output.n_reports,
                    "per_run_metrics": output.per_run.rows.len(),
                    "per_graph_metrics": output.per_graph_mean.rows.len(),
                })
            );
        }
    }
    Ok(())
}
