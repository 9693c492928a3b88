//! End-to-end orchestration of the two studies.
//!
//! `run_benchmark` performs J repeated sub-sampling runs: per run it splits
//! every relation at one retain fraction, trains generalized embeddings on
//! the jointly ablated corpus and specialized embeddings per relation, and
//! evaluates both with the same train/test splits. `run_ablation` draws an
//! independent retain fraction per relation, trains factorization models on
//! the retained union, and ranks the removed triples.
//!
//! The master seed fans out as one derived seed per run, and within a run
//! as one stream per (relation, purpose); the parallel relation loop is
//! therefore schedule-independent. With the deterministic flag set, report
//! JSON is byte-identical across processes: wall-clock timings are the one
//! non-reproducible field and are omitted in that mode.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::{describe, DescriptorReport};
use crate::factor::{train_factor_with_rng, FactorConfig, FactorKind};
use crate::graph::{KnowledgeGraph, RelationId, Triple};
use crate::link_eval::{evaluate_relation, CombineOp, EvalRecord, LogRegConfig};
use crate::rank_eval::{evaluate_ranking, RankMode};
use crate::seed::{derive_seed, stream_rng, Purpose};
use crate::shallow::{train_shallow_with_rng, EmbeddingTable, ShallowConfig, Similarity};
use crate::splits::{
    generalized_corpus, partition_positives, specialized_corpus, split_relation, NegativeMode,
    RelationSplit, SplitConfig,
};
use crate::stats::{
    aggregate_runs, correlation_report, Aggregate, CorrelationPoint, CorrelationReport,
    DescriptorVector, MeanSd,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Shallow,
    DistMult,
    Complex,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Shallow => "shallow",
            ModelKind::DistMult => "distmult",
            ModelKind::Complex => "complex",
        }
    }

    pub fn factor_kind(self) -> Option<FactorKind> {
        match self {
            ModelKind::Shallow => None,
            ModelKind::DistMult => Some(FactorKind::DistMult),
            ModelKind::Complex => Some(FactorKind::Complex),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankModeChoice {
    Raw,
    Filtered,
    Both,
}

impl RankModeChoice {
    pub fn modes(self) -> Vec<RankMode> {
        match self {
            RankModeChoice::Raw => vec![RankMode::Raw],
            RankModeChoice::Filtered => vec![RankMode::Filtered],
            RankModeChoice::Both => vec![RankMode::Raw, RankMode::Filtered],
        }
    }
}

/// Configuration for both studies; unset hyperparameters fall back to the
/// model's defaults (shallow: d=50, 10 epochs, k=10, lr=0.05; factor:
/// d=200, 50 epochs, 10 negatives, lr=1e-3).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub alpha: f64,
    pub runs: usize,
    pub model: ModelKind,
    pub dim: Option<usize>,
    pub epochs: Option<usize>,
    pub neg_k: Option<usize>,
    pub learning_rate: Option<f64>,
    pub combine: CombineOp,
    pub negative_mode: NegativeMode,
    pub generalized_only: bool,
    pub seed: u64,
    pub deterministic: bool,
    pub rank_mode: RankModeChoice,
    /// Per-run wall-clock budget; relations left when it expires are
    /// recorded as skipped. Incompatible with the deterministic flag.
    pub timeout_secs: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            alpha: 0.8,
            runs: 10,
            model: ModelKind::Shallow,
            dim: None,
            epochs: None,
            neg_k: None,
            learning_rate: None,
            combine: CombineOp::Concat,
            negative_mode: NegativeMode::Semantic,
            generalized_only: false,
            seed: 0,
            deterministic: false,
            rank_mode: RankModeChoice::Both,
            timeout_secs: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.deterministic && self.timeout_secs.is_some() {
            return Err(Error::Config(
                "a wall-clock timeout cannot be combined with deterministic reports".into(),
            ));
        }
        Ok(())
    }

    fn shallow_config(&self) -> ShallowConfig {
        ShallowConfig {
            dim: self.dim.unwrap_or(50),
            epochs: self.epochs.unwrap_or(10),
            negatives_k: self.neg_k.unwrap_or(10),
            learning_rate: self.learning_rate.unwrap_or(0.05),
            similarity: Similarity::Dot,
            seed: 0,
        }
    }

    fn factor_config(&self) -> FactorConfig {
        FactorConfig {
            dim: self.dim.unwrap_or(200),
            epochs: self.epochs.unwrap_or(50),
            n_neg: self.neg_k.unwrap_or(10),
            learning_rate: self.learning_rate.unwrap_or(1e-3),
            l2: 0.0,
            seed: 0,
        }
    }

    fn split_config(&self, run_seed: u64) -> SplitConfig {
        SplitConfig {
            alpha: self.alpha,
            seed: run_seed,
            negative_mode: self.negative_mode,
            ratio: 1,
        }
    }
}

/// A (run, relation, kind) slot that produced no record, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkipRecord {
    pub run: usize,
    pub rel: u32,
    pub relation: String,
    pub kind: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub total_secs: f64,
    pub per_run_secs: Vec<f64>,
}

/// Histogram counts over per-relation mean values, bin width 0.05 on [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KindHistograms {
    pub f1: Vec<usize>,
    pub missing_train: Vec<usize>,
    pub missing_test: Vec<usize>,
}

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;

fn histogram(values: impl Iterator<Item = f64>) -> Vec<usize> {
    let bins = (1.0 / HISTOGRAM_BIN_WIDTH).round() as usize;
    let mut counts = vec![0usize; bins];
    for v in values {
        let idx = ((v / HISTOGRAM_BIN_WIDTH).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
}

fn kind_histograms(agg: &Aggregate) -> KindHistograms {
    KindHistograms {
        f1: histogram(agg.per_relation.iter().map(|r| r.f1.mean)),
        missing_train: histogram(agg.per_relation.iter().map(|r| r.missing_train_ratio.mean)),
        missing_test: histogram(agg.per_relation.iter().map(|r| r.missing_test_ratio.mean)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histograms {
    pub bin_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specialized: Option<KindHistograms>,
    pub generalized: KindHistograms,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkAggregates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specialized: Option<Aggregate>,
    pub generalized: Aggregate,
}

/// Full output of `run_benchmark`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Report discriminator, `"benchmark"`.
    pub report: String,
    pub config: RunConfig,
    pub descriptors: DescriptorReport,
    pub specialized: Vec<EvalRecord>,
    pub generalized: Vec<EvalRecord>,
    pub skips: Vec<SkipRecord>,
    pub aggregates: BenchmarkAggregates,
    pub histograms: Histograms,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Train embeddings for one corpus under the configured model.
fn train_table(
    kg: &KnowledgeGraph,
    corpus: &[Triple],
    cfg: &RunConfig,
    run_seed: u64,
    rel: Option<RelationId>,
) -> Result<EmbeddingTable> {
    let (purpose, tag) = match rel {
        None => (Purpose::TrainGeneralized, 0),
        Some(r) => (Purpose::TrainSpecialized, r.0 as u64),
    };
    let mut rng = stream_rng(run_seed, 0, tag, purpose);
    match cfg.model.factor_kind() {
        None => train_shallow_with_rng(corpus, kg, &cfg.shallow_config(), &mut rng),
        Some(kind) => {
            let model = train_factor_with_rng(corpus, kg, kind, &cfg.factor_config(), &mut rng)?;
            model.entity_table(corpus)
        }
    }
}

fn skip(run: usize, kg: &KnowledgeGraph, rel: RelationId, kind: &str, reason: String) -> SkipRecord {
    SkipRecord {
        run,
        rel: rel.0,
        relation: kg.relation_name(rel).unwrap_or("<unknown>").to_owned(),
        kind: kind.to_owned(),
        reason,
    }
}

/// Repeated sub-sampling evaluation of specialized and generalized
/// embeddings. Module errors under a single (run, relation) are recorded as
/// skips and never abort the sweep.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let kg = KnowledgeGraph::load_dir(&cfg.input)?;
    run_benchmark_on(&kg, cfg)
}

/// [`run_benchmark`] over an already-loaded graph.
pub fn run_benchmark_on(kg: &KnowledgeGraph, cfg: &RunConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let started = Instant::now();
    let descriptors = describe(kg)?;
    let logreg = LogRegConfig::default();

    let mut specialized: Vec<EvalRecord> = Vec::new();
    let mut generalized: Vec<EvalRecord> = Vec::new();
    let mut skips: Vec<SkipRecord> = Vec::new();
    let mut per_run_secs: Vec<f64> = Vec::new();

    for run in 0..cfg.runs {
        let run_started = Instant::now();
        let deadline = cfg.timeout_secs.map(|s| run_started + Duration::from_secs(s));
        let run_seed = derive_seed(cfg.seed, run as u64, 0);
        let split_cfg = cfg.split_config(run_seed);

        let rels: Vec<RelationId> = kg.relation_ids().collect();
        let mut splits: BTreeMap<RelationId, RelationSplit> = BTreeMap::new();
        let split_outcomes: Vec<(RelationId, Result<Option<RelationSplit>>)> = rels
            .par_iter()
            .map(|&r| (r, split_relation(kg, r, &split_cfg)))
            .collect();
        for (r, outcome) in split_outcomes {
            match outcome {
                Ok(Some(s)) => {
                    splits.insert(r, s);
                }
                Ok(None) => {
                    for kind in eval_kinds(cfg) {
                        skips.push(skip(run, kg, r, kind, "fewer than 2 positives".into()));
                    }
                }
                Err(e) => {
                    for kind in eval_kinds(cfg) {
                        skips.push(skip(run, kg, r, kind, e.to_string()));
                    }
                }
            }
        }

        let gen_graph = generalized_corpus(kg, splits.values());
        let gen_table = train_table(kg, &gen_graph.corpus, cfg, run_seed, None)?;

        type Outcome = (
            RelationId,
            Option<Result<EvalRecord>>,
            Result<EvalRecord>,
        );
        let outcomes: Vec<Outcome> = splits
            .par_iter()
            .map(|(&r, split)| {
                if let Some(d) = deadline {
                    if Instant::now() > d {
                        let timeout = || Err(Error::Config("run timeout exceeded".into()));
                        let spec = (!cfg.generalized_only).then(timeout);
                        return (r, spec, timeout());
                    }
                }
                let gen_record = evaluate_relation(split, &gen_table, cfg.combine, run, &logreg);
                let spec_record = (!cfg.generalized_only).then(|| {
                    let corpus = specialized_corpus(kg, split);
                    train_table(kg, &corpus.corpus, cfg, run_seed, Some(r)).and_then(|table| {
                        evaluate_relation(split, &table, cfg.combine, run, &logreg)
                    })
                });
                (r, spec_record, gen_record)
            })
            .collect();

        for (r, spec_record, gen_record) in outcomes {
            match gen_record {
                Ok(rec) => generalized.push(rec),
                Err(e) => skips.push(skip(run, kg, r, "generalized", e.to_string())),
            }
            if let Some(spec) = spec_record {
                match spec {
                    Ok(rec) => specialized.push(rec),
                    Err(e) => skips.push(skip(run, kg, r, "specialized", e.to_string())),
                }
            }
        }
        per_run_secs.push(run_started.elapsed().as_secs_f64());
    }

    let spec_agg = (!cfg.generalized_only).then(|| aggregate_runs(&specialized));
    let gen_agg = aggregate_runs(&generalized);
    let histograms = Histograms {
        bin_width: HISTOGRAM_BIN_WIDTH,
        specialized: spec_agg.as_ref().map(kind_histograms),
        generalized: kind_histograms(&gen_agg),
    };
    let timings = (!cfg.deterministic).then(|| Timings {
        total_secs: started.elapsed().as_secs_f64(),
        per_run_secs,
    });

    Ok(BenchmarkReport {
        report: "benchmark".into(),
        config: cfg.clone(),
        descriptors,
        specialized,
        generalized,
        skips,
        aggregates: BenchmarkAggregates {
            specialized: spec_agg,
            generalized: gen_agg,
        },
        histograms,
        timings,
    })
}

fn eval_kinds(cfg: &RunConfig) -> Vec<&'static str> {
    if cfg.generalized_only {
        vec!["generalized"]
    } else {
        vec!["specialized", "generalized"]
    }
}

/// One model's ranking outcome for one run and mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingRecord {
    pub model: String,
    pub run: usize,
    pub mode: RankMode,
    pub mr: f64,
    pub mrr: f64,
    pub n_queries: usize,
    pub skipped_queries: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingAggregate {
    pub model: String,
    pub mode: RankMode,
    pub n_runs: usize,
    pub mr: MeanSd,
    pub mrr: MeanSd,
}

/// Full output of `run_ablation`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    /// Report discriminator, `"ablation"`.
    pub report: String,
    pub config: RunConfig,
    pub models: Vec<String>,
    pub descriptors: DescriptorReport,
    /// Per run, the retain fraction drawn for each relation.
    pub alphas: Vec<BTreeMap<String, f64>>,
    pub ranking: Vec<RankingRecord>,
    pub aggregates: Vec<RankingAggregate>,
    /// Spearman of per-run metrics against this graph's descriptors. With a
    /// single input graph the descriptor columns have no variance and the
    /// cells stay missing; `correlate` across several graphs fills them.
    pub correlation: CorrelationReport,
    pub skips: Vec<SkipRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Random per-relation ablation with MR/MRR evaluation of the removed
/// triples. All requested model kinds consume identical splits in each run.
pub fn run_ablation(cfg: &RunConfig, kinds: &[FactorKind]) -> Result<AblationReport> {
    cfg.validate()?;
    let kg = KnowledgeGraph::load_dir(&cfg.input)?;
    run_ablation_on(&kg, cfg, kinds)
}

/// [`run_ablation`] over an already-loaded graph.
pub fn run_ablation_on(
    kg: &KnowledgeGraph,
    cfg: &RunConfig,
    kinds: &[FactorKind],
) -> Result<AblationReport> {
    cfg.validate()?;
    if kinds.is_empty() {
        return Err(Error::Config("ablation needs at least one model kind".into()));
    }
    let started = Instant::now();
    let descriptors = describe(kg)?;
    let descriptor_vector = DescriptorVector::from_report(&descriptors);

    let mut ranking: Vec<RankingRecord> = Vec::new();
    let mut skips: Vec<SkipRecord> = Vec::new();
    let mut alphas_per_run: Vec<BTreeMap<String, f64>> = Vec::new();
    let mut per_run_secs: Vec<f64> = Vec::new();

    for run in 0..cfg.runs {
        let run_started = Instant::now();
        let run_seed = derive_seed(cfg.seed, run as u64, 1);
        let alphas = crate::splits::ablation_alphas(kg, run_seed);
        alphas_per_run.push(
            alphas
                .iter()
                .map(|(r, a)| (kg.relation_name(*r).unwrap_or("<unknown>").to_owned(), *a))
                .collect(),
        );

        let mut removed: HashSet<Triple> = HashSet::new();
        let mut test: Vec<Triple> = Vec::new();
        for (&r, &alpha) in alphas.iter() {
            if kg.pairs_of(r)?.len() < 2 {
                skips.push(skip(run, kg, r, "split", "fewer than 2 positives".into()));
                continue;
            }
            let mut rng = stream_rng(run_seed, 0, r.0 as u64, Purpose::AblationSplit);
            let (_, dropped) = partition_positives(kg, r, alpha, &mut rng)?;
            removed.extend(dropped.iter().copied());
            test.extend(dropped);
        }
        let corpus: Vec<Triple> = kg
            .triples()
            .iter()
            .filter(|t| !removed.contains(t))
            .copied()
            .collect();

        for (kind_idx, &kind) in kinds.iter().enumerate() {
            if test.is_empty() {
                for mode in cfg.rank_mode.modes() {
                    skips.push(SkipRecord {
                        run,
                        rel: u32::MAX,
                        relation: format!("<{}:{}>", kind.name(), mode.name()),
                        kind: "ranking".into(),
                        reason: "no triples were removed".into(),
                    });
                }
                continue;
            }
            let mut rng = stream_rng(run_seed, kind_idx as u64, 0, Purpose::TrainFactor);
            let model = train_factor_with_rng(&corpus, kg, kind, &cfg.factor_config(), &mut rng)?;
            for mode in cfg.rank_mode.modes() {
                match evaluate_ranking(&model, &test, kg, mode) {
                    Ok(result) => ranking.push(RankingRecord {
                        model: kind.name().to_owned(),
                        run,
                        mode,
                        mr: result.mr,
                        mrr: result.mrr,
                        n_queries: result.n_queries,
                        skipped_queries: result.skipped,
                    }),
                    Err(e) => skips.push(SkipRecord {
                        run,
                        rel: u32::MAX,
                        relation: format!("<{}:{}>", kind.name(), mode.name()),
                        kind: "ranking".into(),
                        reason: e.to_string(),
                    }),
                }
            }
        }
        per_run_secs.push(run_started.elapsed().as_secs_f64());
    }

    // Aggregate per (model, mode) in a deterministic order.
    let mut grouped: BTreeMap<(String, &'static str), Vec<&RankingRecord>> = BTreeMap::new();
    for rec in &ranking {
        grouped
            .entry((rec.model.clone(), rec.mode.name()))
            .or_default()
            .push(rec);
    }
    let aggregates: Vec<RankingAggregate> = grouped
        .into_iter()
        .map(|((model, _), recs)| RankingAggregate {
            model,
            mode: recs[0].mode,
            n_runs: recs.len(),
            mr: MeanSd::of(&recs.iter().map(|r| r.mr).collect::<Vec<f64>>()),
            mrr: MeanSd::of(&recs.iter().map(|r| r.mrr).collect::<Vec<f64>>()),
        })
        .collect();

    let points: Vec<CorrelationPoint> = ranking
        .iter()
        .map(|rec| CorrelationPoint {
            metric: format!("mrr_{}_{}", rec.model, rec.mode.name()),
            value: rec.mrr,
            descriptors: descriptor_vector,
        })
        .collect();
    let correlation = correlation_report(&points);

    let timings = (!cfg.deterministic).then(|| Timings {
        total_secs: started.elapsed().as_secs_f64(),
        per_run_secs,
    });

    Ok(AblationReport {
        report: "ablation".into(),
        config: cfg.clone(),
        models: kinds.iter().map(|k| k.name().to_owned()).collect(),
        descriptors,
        alphas: alphas_per_run,
        ranking,
        aggregates,
        correlation,
        skips,
        timings,
    })
}

/// Correlation input assembled from saved reports: per-run metric points
/// and per-graph means, each tied to the source graph's descriptors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelateOutput {
    pub n_reports: usize,
    pub per_run: CorrelationReport,
    pub per_graph_mean: CorrelationReport,
}

/// Re-correlate metrics from existing report files (benchmark or ablation)
/// against their graphs' descriptors, in both point constructions: one
/// point per run, and one mean point per graph.
pub fn correlate(inputs: &[PathBuf]) -> Result<CorrelateOutput> {
    if inputs.is_empty() {
        return Err(Error::Config("correlate needs at least one report".into()));
    }
    let mut per_run: Vec<CorrelationPoint> = Vec::new();
    let mut per_graph: Vec<CorrelationPoint> = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("report").and_then(|v| v.as_str()) {
            Some("benchmark") => {
                let report: BenchmarkReport = serde_json::from_value(value)?;
                let descriptors = DescriptorVector::from_report(&report.descriptors);
                for (metric, records, agg) in [
                    (
                        "f1_specialized",
                        &report.specialized,
                        report.aggregates.specialized.as_ref(),
                    ),
                    (
                        "f1_generalized",
                        &report.generalized,
                        Some(&report.aggregates.generalized),
                    ),
                ] {
                    if records.is_empty() {
                        continue;
                    }
                    // Per-run points: mean F1 over that run's relations.
                    let mut by_run: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                    for rec in records {
                        by_run.entry(rec.run).or_default().push(rec.f1);
                    }
                    for (_, values) in by_run {
                        per_run.push(CorrelationPoint {
                            metric: metric.into(),
                            value: values.iter().sum::<f64>() / values.len() as f64,
                            descriptors,
                        });
                    }
                    if let Some(agg) = agg {
                        per_graph.push(CorrelationPoint {
                            metric: metric.into(),
                            value: agg.f1.mean,
                            descriptors,
                        });
                    }
                }
            }
            Some("ablation") => {
                let report: AblationReport = serde_json::from_value(value)?;
                let descriptors = DescriptorVector::from_report(&report.descriptors);
                for rec in &report.ranking {
                    per_run.push(CorrelationPoint {
                        metric: format!("mrr_{}_{}", rec.model, rec.mode.name()),
                        value: rec.mrr,
                        descriptors,
                    });
                }
                for agg in &report.aggregates {
                    per_graph.push(CorrelationPoint {
                        metric: format!("mrr_{}_{}", agg.model, agg.mode.name()),
                        value: agg.mrr.mean,
                        descriptors,
                    });
                }
            }
            other => {
                return Err(Error::MalformedFile {
                    path: path.clone(),
                    reason: format!("unknown report discriminator {other:?}"),
                })
            }
        }
    }
    Ok(CorrelateOutput {
        n_reports: inputs.len(),
        per_run: correlation_report(&per_run),
        per_graph_mean: correlation_report(&per_graph),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_records_csv(records: &[EvalRecord], names: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "run", "relation", "f1", "auc", "miss_train", "miss_test", "n_train", "n_test",
    ])?;
    for rec in records {
        w.write_record(&[
            rec.run.to_string(),
            names
                .get(rec.rel.0 as usize)
                .cloned()
                .unwrap_or_else(|| format!("r{}", rec.rel.0)),
            rec.f1.to_string(),
            rec.roc_auc.to_string(),
            rec.missing_train_ratio.to_string(),
            rec.missing_test_ratio.to_string(),
            rec.n_train_used.to_string(),
            rec.n_test_used.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

impl BenchmarkReport {
    /// Write `report.json`, per-kind record CSVs, and `summary.json`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(self, &dir.join("report.json"))?;
        let names: Vec<String> = self
            .descriptors
            .per_relation
            .iter()
            .map(|d| d.relation.clone())
            .collect();
        write_records_csv(
            &self.generalized,
            &names,
            &dir.join("records_generalized.csv"),
        )?;
        if !self.config.generalized_only {
            write_records_csv(
                &self.specialized,
                &names,
                &dir.join("records_specialized.csv"),
            )?;
        }
        write_json(&self.aggregates, &dir.join("summary.json"))?;
        Ok(())
    }
}

impl AblationReport {
    /// Write `report.json`, `ranking.csv`, and `correlation_report.csv`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(self, &dir.join("report.json"))?;
        let path = dir.join("ranking.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["model", "run", "mode", "mr", "mrr", "n_queries"])?;
        for rec in &self.ranking {
            w.write_record(&[
                rec.model.clone(),
                rec.run.to_string(),
                rec.mode.name().to_owned(),
                rec.mr.to_string(),
                rec.mrr.to_string(),
                rec.n_queries.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.correlation
            .write_csv(&dir.join("correlation_report.csv"))?;
        Ok(())
    }
}

impl CorrelateOutput {
    /// Write `correlation_report.csv` (both variants) and `summary.json`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("correlation_report.csv");
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["variant".to_owned(), "metric".to_owned(), "n_points".to_owned()];
        header.extend(self.per_run.descriptors.iter().cloned());
        w.write_record(&header)?;
        for (variant, report) in [("per_run", &self.per_run), ("per_graph_mean", &self.per_graph_mean)] {
            for row in &report.rows {
                let mut record = vec![
                    variant.to_owned(),
                    row.metric.clone(),
                    row.n_points.to_string(),
                ];
                for rho in &row.rho {
                    record.push(rho.map(|v| v.to_string()).unwrap_or_default());
                }
                w.write_record(&record)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        write_json(self, &dir.join("summary.json"))?;
        Ok(())
    }
}
