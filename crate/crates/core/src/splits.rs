//! Retained graphs, negative samples, and per-relation train/test splits.
//!
//! For a retain fraction `alpha`, each relation's positives are partitioned
//! into a retained (train) part and a removed (test) part. The generalized
//! retained graph drops every relation's test positives at once; a
//! specialized retained graph drops only one relation's. Negatives are
//! non-asserted triples, drawn either from the relation's domain-by-range
//! pair space (`semantic`) or from all distinct entity pairs
//! (`unrestricted`), at a fixed negatives-per-positive ratio.
//!
//! Every random choice draws from a stream keyed by (seed, relation,
//! purpose), so per-relation work is schedule-independent.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{write_triples_tsv, EntityId, KnowledgeGraph, RelationId, Triple};
use crate::seed::{stream_rng, Purpose};
use crate::{Error, Result};

/// Where negative heads and tails may come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeMode {
    /// Head from dom(r), tail from range(r).
    Semantic,
    /// Any ordered pair of distinct entities.
    Unrestricted,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Retain fraction in (0, 1).
    pub alpha: f64,
    pub seed: u64,
    pub negative_mode: NegativeMode,
    /// Negatives drawn per positive.
    pub ratio: usize,
}

impl SplitConfig {
    pub fn new(alpha: f64, seed: u64) -> Self {
        SplitConfig {
            alpha,
            seed,
            negative_mode: NegativeMode::Semantic,
            ratio: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.ratio == 0 {
            return Err(Error::Config("ratio must be at least 1".into()));
        }
        Ok(())
    }
}

/// Train/test positives and negatives for one relation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationSplit {
    pub rel: RelationId,
    pub train_pos: Vec<Triple>,
    pub test_pos: Vec<Triple>,
    pub train_neg: Vec<Triple>,
    pub test_neg: Vec<Triple>,
    /// Set when the negative candidate space had fewer triples than
    /// requested; counts are then below the configured ratio.
    pub shortfall: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RetainedKind {
    Specialized(RelationId),
    Generalized,
}

/// A training corpus: the positive set minus some relation test positives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetainedGraph {
    pub kind: RetainedKind,
    pub corpus: Vec<Triple>,
}

/// A relation left out of the split, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedRelation {
    pub rel: RelationId,
    pub reason: String,
}

/// Everything `build_splits` produces for one run.
#[derive(Debug, Clone)]
pub struct SplitSet {
    pub generalized: RetainedGraph,
    pub relations: BTreeMap<RelationId, (RetainedGraph, RelationSplit)>,
    pub skipped: Vec<SkippedRelation>,
}

/// Uniform random partition of the positives of `r` into
/// (retained, removed), with |retained| = round(alpha·|Pos_r|),
/// half rounding up.
pub fn split_positives(
    kg: &KnowledgeGraph,
    r: RelationId,
    cfg: &SplitConfig,
) -> Result<(Vec<Triple>, Vec<Triple>)> {
    cfg.validate()?;
    let pairs = kg.pairs_of(r)?;
    if pairs.len() < 2 {
        return Err(Error::EmptyInput("relation has fewer than 2 positives"));
    }
    let mut rng = stream_rng(cfg.seed, 0, r.0 as u64, Purpose::SplitPositives);
    partition_positives(kg, r, cfg.alpha, &mut rng)
}

/// The raw partition primitive behind [`split_positives`] and the
/// per-relation ablations: shuffle the relation's positives and retain
/// round(alpha·n) of them.
pub fn partition_positives(
    kg: &KnowledgeGraph,
    r: RelationId,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Triple>, Vec<Triple>)> {
    let pairs = kg.pairs_of(r)?;
    let n = pairs.len();
    let train_size = ((alpha * n as f64) + 0.5).floor() as usize;
    let train_size = train_size.min(n);
    let mut triples: Vec<Triple> = pairs
        .iter()
        .map(|&(h, t)| Triple::new(h, r, t))
        .collect();
    triples.shuffle(rng);
    let test = triples.split_off(train_size);
    Ok((triples, test))
}

/// Outcome of negative sampling; `shortfall` is set when the candidate
/// space could not supply `count` distinct triples.
#[derive(Debug, Clone)]
pub struct NegativeSample {
    pub triples: Vec<Triple>,
    pub shortfall: bool,
}

/// Draw `count` distinct non-asserted triples for `r`, none in `exclude`.
///
/// Rejection sampling with a deduplication set; when the candidate space is
/// small or sampling stalls, falls back to enumerating the space and
/// shuffling, which stays uniform and detects exhaustion exactly.
pub fn sample_negatives(
    kg: &KnowledgeGraph,
    r: RelationId,
    count: usize,
    mode: NegativeMode,
    rng: &mut ChaCha8Rng,
    exclude: &HashSet<Triple>,
) -> Result<NegativeSample> {
    if count == 0 {
        return Ok(NegativeSample {
            triples: Vec::new(),
            shortfall: false,
        });
    }
    let dom = kg.domain_of(r)?;
    let range = kg.range_of(r)?;
    let n_ents = kg.entity_count();
    let space = match mode {
        NegativeMode::Semantic => dom.len() * range.len(),
        NegativeMode::Unrestricted => n_ents * (n_ents - 1),
    };

    // Small spaces are enumerated outright; exact and still uniform.
    const ENUMERATE_LIMIT: usize = 1 << 20;
    if space <= ENUMERATE_LIMIT.max(4 * count) && space <= 50_000_000 {
        return Ok(enumerate_negatives(kg, r, count, mode, rng, exclude));
    }

    let mut accepted: Vec<Triple> = Vec::with_capacity(count);
    let mut seen: HashSet<Triple> = HashSet::with_capacity(count);
    let max_attempts = 200 * count + 10_000;
    let mut attempts = 0usize;
    while accepted.len() < count && attempts < max_attempts {
        attempts += 1;
        let (h, t) = match mode {
            NegativeMode::Semantic => (
                dom[rng.random_range(0..dom.len())],
                range[rng.random_range(0..range.len())],
            ),
            NegativeMode::Unrestricted => {
                let h = EntityId(rng.random_range(0..n_ents as u32));
                let t = EntityId(rng.random_range(0..n_ents as u32));
                if h == t {
                    continue;
                }
                (h, t)
            }
        };
        let cand = Triple::new(h, r, t);
        if kg.contains(&cand) || exclude.contains(&cand) || seen.contains(&cand) {
            continue;
        }
        seen.insert(cand);
        accepted.push(cand);
    }
    if accepted.len() < count {
        if space <= 50_000_000 {
            return Ok(enumerate_negatives(kg, r, count, mode, rng, exclude));
        }
        return Ok(NegativeSample {
            triples: accepted,
            shortfall: true,
        });
    }
    Ok(NegativeSample {
        triples: accepted,
        shortfall: false,
    })
}

fn enumerate_negatives(
    kg: &KnowledgeGraph,
    r: RelationId,
    count: usize,
    mode: NegativeMode,
    rng: &mut ChaCha8Rng,
    exclude: &HashSet<Triple>,
) -> NegativeSample {
    let mut candidates: Vec<Triple> = Vec::new();
    match mode {
        NegativeMode::Semantic => {
            let dom = kg.domain_of(r).expect("relation checked by caller");
            let range = kg.range_of(r).expect("relation checked by caller");
            for &h in dom {
                for &t in range {
                    let cand = Triple::new(h, r, t);
                    if !kg.contains(&cand) && !exclude.contains(&cand) {
                        candidates.push(cand);
                    }
                }
            }
        }
        NegativeMode::Unrestricted => {
            let n = kg.entity_count() as u32;
            for h in 0..n {
                for t in 0..n {
                    if h == t {
                        continue;
                    }
                    let cand = Triple::new(EntityId(h), r, EntityId(t));
                    if !kg.contains(&cand) && !exclude.contains(&cand) {
                        candidates.push(cand);
                    }
                }
            }
        }
    }
    candidates.shuffle(rng);
    let shortfall = candidates.len() < count;
    candidates.truncate(count);
    NegativeSample {
        triples: candidates,
        shortfall,
    }
}

/// Split every relation of `kg` under `cfg`: one generalized retained graph,
/// and per relation a specialized retained graph plus the train/test
/// example sets. Relations with fewer than 2 positives are skipped with a
/// warning record.
pub fn build_splits(kg: &KnowledgeGraph, cfg: &SplitConfig) -> Result<SplitSet> {
    cfg.validate()?;
    let mut relations = BTreeMap::new();
    let mut skipped = Vec::new();
    for r in kg.relation_ids() {
        match split_relation(kg, r, cfg)? {
            Some(split) => {
                let specialized = specialized_corpus(kg, &split);
                relations.insert(r, (specialized, split));
            }
            None => skipped.push(SkippedRelation {
                rel: r,
                reason: "fewer than 2 positives".into(),
            }),
        }
    }
    let generalized = generalized_corpus(kg, relations.values().map(|(_, s)| s));
    Ok(SplitSet {
        generalized,
        relations,
        skipped,
    })
}

/// Split a single relation, or `None` when it must be skipped.
pub fn split_relation(
    kg: &KnowledgeGraph,
    r: RelationId,
    cfg: &SplitConfig,
) -> Result<Option<RelationSplit>> {
    if kg.pairs_of(r)?.len() < 2 {
        return Ok(None);
    }
    let mut rng = stream_rng(cfg.seed, 0, r.0 as u64, Purpose::SplitPositives);
    let (train_pos, test_pos) = partition_positives(kg, r, cfg.alpha, &mut rng)?;

    // Train and test negatives come from one joint draw, which makes their
    // disjointness structural.
    let want_train = cfg.ratio * train_pos.len();
    let want_test = cfg.ratio * test_pos.len();
    let want = want_train + want_test;
    let mut neg_rng = stream_rng(cfg.seed, 0, r.0 as u64, Purpose::SampleNegatives);
    let sample = sample_negatives(kg, r, want, cfg.negative_mode, &mut neg_rng, &HashSet::new())?;
    let got = sample.triples.len();
    let train_take = if sample.shortfall {
        // Proportional partition of whatever was available.
        if want == 0 {
            0
        } else {
            ((got * want_train) + want / 2) / want
        }
    } else {
        want_train
    };
    let mut negatives = sample.triples;
    let test_neg = negatives.split_off(train_take.min(got));
    Ok(Some(RelationSplit {
        rel: r,
        train_pos,
        test_pos,
        train_neg: negatives,
        test_neg,
        shortfall: sample.shortfall,
    }))
}

/// Positive set minus the test positives of the split's relation.
pub fn specialized_corpus(kg: &KnowledgeGraph, split: &RelationSplit) -> RetainedGraph {
    let removed: HashSet<Triple> = split.test_pos.iter().copied().collect();
    RetainedGraph {
        kind: RetainedKind::Specialized(split.rel),
        corpus: kg
            .triples()
            .iter()
            .filter(|t| !removed.contains(t))
            .copied()
            .collect(),
    }
}

/// Positive set minus every relation's test positives.
pub fn generalized_corpus<'a>(
    kg: &KnowledgeGraph,
    splits: impl Iterator<Item = &'a RelationSplit>,
) -> RetainedGraph {
    let removed: HashSet<Triple> = splits
        .flat_map(|s| s.test_pos.iter().copied())
        .collect();
    RetainedGraph {
        kind: RetainedKind::Generalized,
        corpus: kg
            .triples()
            .iter()
            .filter(|t| !removed.contains(t))
            .copied()
            .collect(),
    }
}

/// Independent per-relation retain fractions, uniform in [0.1, 0.9),
/// deterministic per seed.
pub fn ablation_alphas(kg: &KnowledgeGraph, seed: u64) -> BTreeMap<RelationId, f64> {
    kg.relation_ids()
        .map(|r| {
            let mut rng = stream_rng(seed, 0, r.0 as u64, Purpose::AblationAlpha);
            (r, 0.1 + 0.8 * rng.random::<f64>())
        })
        .collect()
}

/// Serialize a split set to a directory of TSV files for audit:
/// `corpus.tsv` (the generalized retained graph), `relations.tsv`
/// (directory index), and per relation
/// `r<id>/{train_pos,test_pos,train_neg,test_neg}.tsv`.
pub fn write_splits_dir(kg: &KnowledgeGraph, splits: &SplitSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus_path = dir.join("corpus.tsv");
    let f = fs::File::create(&corpus_path).map_err(|e| Error::io(&corpus_path, e))?;
    write_triples_tsv(kg, &splits.generalized.corpus, BufWriter::new(f))?;

    let index_path = dir.join("relations.tsv");
    let mut index = String::new();
    for (r, _) in splits.relations.iter() {
        index.push_str(&format!("r{:05}\t{}\n", r.0, kg.relation_name(*r)?));
    }
    fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))?;

    for (r, (_, split)) in splits.relations.iter() {
        let rel_dir = dir.join(format!("r{:05}", r.0));
        fs::create_dir_all(&rel_dir).map_err(|e| Error::io(&rel_dir, e))?;
        for (name, triples) in [
            ("train_pos.tsv", &split.train_pos),
            ("test_pos.tsv", &split.test_pos),
            ("train_neg.tsv", &split.train_neg),
            ("test_neg.tsv", &split.test_neg),
        ] {
            let path = rel_dir.join(name);
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_triples_tsv(kg, triples, BufWriter::new(f))?;
        }
    }
    Ok(())
}
