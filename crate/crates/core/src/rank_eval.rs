//! Mean rank / mean reciprocal rank evaluation for factorization models.
//!
//! Each test triple yields two queries: rank the true head against all
//! candidate heads and the true tail against all candidate tails. Ties take
//! the midpoint of the tied block, rounded up. Filtered mode removes
//! candidates that would form a different known positive.

use serde::{Deserialize, Serialize};

use crate::factor::FactorModel;
use crate::graph::{EntityId, KnowledgeGraph, Triple};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Raw,
    Filtered,
}

impl RankMode {
    pub fn name(self) -> &'static str {
        match self {
            RankMode::Raw => "raw",
            RankMode::Filtered => "filtered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuerySide {
    Head,
    Tail,
}

/// MR and MRR over head- and tail-replacement queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankResult {
    pub mode: RankMode,
    pub mr: f64,
    pub mrr: f64,
    pub n_queries: usize,
    /// Queries dropped because the triple lies outside the model vocabulary.
    pub skipped: usize,
}

/// Integer rank from competitor comparisons: one plus the number of
/// strictly higher scores, plus the midpoint of the tied block, rounded up.
pub fn rank_from_counts(higher: usize, ties: usize) -> usize {
    1 + higher + ties.div_ceil(2)
}

/// Rank `true_score` within an iterator of competitor scores.
pub fn rank_within(competitors: impl Iterator<Item = f64>, true_score: f64) -> usize {
    let mut higher = 0;
    let mut ties = 0;
    for s in competitors {
        if s > true_score {
            higher += 1;
        } else if s == true_score {
            ties += 1;
        }
    }
    rank_from_counts(higher, ties)
}

/// Rank the triple's entity on `side` against every candidate replacement.
pub fn rank_triple(
    model: &FactorModel,
    kg: &KnowledgeGraph,
    triple: &Triple,
    side: QuerySide,
    mode: RankMode,
) -> Result<usize> {
    let n = model.entity_count() as u32;
    if triple.head.0 >= n || triple.tail.0 >= n {
        return Err(Error::UnknownEntity(triple.head.0.max(triple.tail.0)));
    }
    if triple.rel.0 >= model.relation_count() as u32 {
        return Err(Error::UnknownRelation(triple.rel.0));
    }
    let true_entity = match side {
        QuerySide::Head => triple.head,
        QuerySide::Tail => triple.tail,
    };
    let true_score = model.score_triple(triple);
    let mut higher = 0;
    let mut ties = 0;
    for c in 0..n {
        let candidate = EntityId(c);
        if candidate == true_entity {
            continue;
        }
        let corrupted = match side {
            QuerySide::Head => Triple::new(candidate, triple.rel, triple.tail),
            QuerySide::Tail => Triple::new(triple.head, triple.rel, candidate),
        };
        if mode == RankMode::Filtered && kg.contains(&corrupted) {
            continue;
        }
        let s = model.score_triple(&corrupted);
        if s > true_score {
            higher += 1;
        } else if s == true_score {
            ties += 1;
        }
    }
    Ok(rank_from_counts(higher, ties))
}

/// Evaluate MR/MRR over both sides of every test triple. Vocabulary misses
/// are skipped and counted; an empty query set is an error.
pub fn evaluate_ranking(
    model: &FactorModel,
    test_triples: &[Triple],
    kg: &KnowledgeGraph,
    mode: RankMode,
) -> Result<RankResult> {
    if test_triples.is_empty() {
        return Err(Error::EmptyInput("ranking test set"));
    }
    let mut ranks: Vec<usize> = Vec::with_capacity(2 * test_triples.len());
    let mut skipped = 0;
    for t in test_triples {
        for side in [QuerySide::Head, QuerySide::Tail] {
            match rank_triple(model, kg, t, side, mode) {
                Ok(rank) => ranks.push(rank),
                Err(Error::UnknownEntity(_)) | Err(Error::UnknownRelation(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if ranks.is_empty() {
        return Err(Error::EmptyInput("all ranking queries skipped"));
    }
    let n = ranks.len() as f64;
    let mr = ranks.iter().map(|&r| r as f64).sum::<f64>() / n;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    Ok(RankResult {
        mode,
        mr,
        mrr,
        n_queries: ranks.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{train_factor, FactorConfig, FactorKind, FactorModel};
    use crate::graph::KnowledgeGraphBuilder;
    use crate::seed::{stream_rng, Purpose};

    fn kg_from(lines: &[(&str, &str, &str)]) -> crate::graph::KnowledgeGraph {
        let mut b = KnowledgeGraphBuilder::new();
        for (h, r, t) in lines {
            b.add(h, r, t);
        }
        b.build().unwrap()
    }

    #[test]
    fn rank_counting_rules() {
        // strictly highest
        assert_eq!(rank_within([0.1, 0.3, -1.0].into_iter(), 0.9), 1);
        // two higher, no ties
        assert_eq!(rank_within([1.5, 2.0, 0.1].into_iter(), 0.9), 3);
        // one tie: block {1, 2}, midpoint 1.5, rounded up
        assert_eq!(rank_within([0.9, 0.1].into_iter(), 0.9), 2);
        // two ties: block {1, 2, 3}, midpoint 2
        assert_eq!(rank_within([0.9, 0.9, 0.1].into_iter(), 0.9), 2);
        // three ties: midpoint 2.5, rounded up
        assert_eq!(rank_within([0.9, 0.9, 0.9].into_iter(), 0.9), 3);
    }

    #[test]
    fn reciprocal_rank_drops_when_one_more_competitor_wins() {
        let scores = [0.8, 0.6, 0.4, 0.2];
        let above = rank_within(scores.into_iter(), 0.7);
        let below = rank_within(scores.into_iter(), 0.5);
        assert!(above < below);
        assert!(1.0 / above as f64 > 1.0 / below as f64);
    }

    #[test]
    fn filtered_mode_removes_known_positives() {
        // Head `a` connects to every entity, so each tail replacement forms
        // a known positive and filtering leaves no competitors at all.
        let kg = kg_from(&[
            ("a", "r", "a"),
            ("a", "r", "b"),
            ("a", "r", "x"),
            ("b", "r", "x"),
        ]);
        let mut rng = stream_rng(1, 0, 0, Purpose::TrainFactor);
        let model = FactorModel::init(FactorKind::DistMult, 4, &kg, &mut rng);
        let query = Triple::new(
            kg.entity_id("a").unwrap(),
            kg.relation_id("r").unwrap(),
            kg.entity_id("x").unwrap(),
        );
        let filtered =
            rank_triple(&model, &kg, &query, QuerySide::Tail, RankMode::Filtered).unwrap();
        assert_eq!(filtered, 1);
        let raw = rank_triple(&model, &kg, &query, QuerySide::Tail, RankMode::Raw).unwrap();
        assert!(raw >= filtered);
    }

    #[test]
    fn filtered_never_exceeds_raw() {
        let kg = kg_from(&[
            ("a", "r", "b"),
            ("b", "r", "c"),
            ("c", "r", "d"),
            ("d", "r", "a"),
            ("a", "s", "c"),
            ("b", "s", "d"),
        ]);
        for seed in 0..5u64 {
            let mut rng = stream_rng(seed, 0, 0, Purpose::TrainFactor);
            let model = FactorModel::init(FactorKind::Complex, 6, &kg, &mut rng);
            for t in kg.triples() {
                for side in [QuerySide::Head, QuerySide::Tail] {
                    let raw = rank_triple(&model, &kg, t, side, RankMode::Raw).unwrap();
                    let filtered =
                        rank_triple(&model, &kg, t, side, RankMode::Filtered).unwrap();
                    assert!(filtered <= raw);
                }
            }
        }
    }

    #[test]
    fn mrr_hand_mean() {
        // ranks [1, 2, 4] -> MRR = (1 + 0.5 + 0.25) / 3
        let ranks = [1usize, 2, 4];
        let mrr: f64 = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / 3.0;
        assert!((mrr - 7.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn single_candidate_universe_is_perfect() {
        let kg = kg_from(&[("a", "r", "a")]);
        let mut rng = stream_rng(2, 0, 0, Purpose::TrainFactor);
        let model = FactorModel::init(FactorKind::DistMult, 4, &kg, &mut rng);
        let result =
            evaluate_ranking(&model, kg.triples(), &kg, RankMode::Raw).unwrap();
        assert_eq!(result.mr, 1.0);
        assert_eq!(result.mrr, 1.0);
        assert_eq!(result.n_queries, 2);
    }

    #[test]
    fn full_sort_oracle_matches_counting() {
        let kg = kg_from(&[
            ("a", "r", "b"),
            ("b", "r", "c"),
            ("c", "r", "d"),
            ("d", "r", "e"),
            ("e", "s", "a"),
            ("a", "s", "d"),
        ]);
        let cfg = FactorConfig {
            dim: 6,
            epochs: 10,
            seed: 4,
            ..Default::default()
        };
        let model = train_factor(kg.triples(), &kg, FactorKind::Complex, &cfg).unwrap();
        for t in kg.triples() {
            for side in [QuerySide::Head, QuerySide::Tail] {
                for mode in [RankMode::Raw, RankMode::Filtered] {
                    let got = rank_triple(&model, &kg, t, side, mode).unwrap();
                    let oracle = sort_oracle(&model, &kg, t, side, mode);
                    assert_eq!(got, oracle, "{t:?} {side:?} {mode:?}");
                }
            }
        }
    }

    // Independent oracle: materialize all candidate scores, sort
    // descending, and average the positions of the tied block.
    fn sort_oracle(
        model: &FactorModel,
        kg: &crate::graph::KnowledgeGraph,
        triple: &Triple,
        side: QuerySide,
        mode: RankMode,
    ) -> usize {
        let true_entity = match side {
            QuerySide::Head => triple.head,
            QuerySide::Tail => triple.tail,
        };
        let true_score = model.score_triple(triple);
        let mut scores = vec![true_score];
        for c in 0..kg.entity_count() as u32 {
            let candidate = EntityId(c);
            if candidate == true_entity {
                continue;
            }
            let corrupted = match side {
                QuerySide::Head => Triple::new(candidate, triple.rel, triple.tail),
                QuerySide::Tail => Triple::new(triple.head, triple.rel, candidate),
            };
            if mode == RankMode::Filtered && kg.contains(&corrupted) {
                continue;
            }
            scores.push(model.score_triple(&corrupted));
        }
        scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let first = scores.iter().position(|&s| s == true_score).unwrap();
        let count = scores.iter().filter(|&&s| s == true_score).count();
        // 1-based midpoint of the tied block, rounded up
        let sum: usize = (first + 1..=first + count).sum();
        (sum as f64 / count as f64).ceil() as usize
    }

    #[test]
    fn vocabulary_misses_are_skipped() {
        let kg = kg_from(&[("a", "r", "b"), ("b", "r", "c")]);
        let big = kg_from(&[
            ("a", "r", "b"),
            ("b", "r", "c"),
            ("c", "r", "d"),
            ("d", "r", "e"),
        ]);
        let mut rng = stream_rng(6, 0, 0, Purpose::TrainFactor);
        // Model over the small graph, queries from the bigger one.
        let model = FactorModel::init(FactorKind::DistMult, 4, &kg, &mut rng);
        let result = evaluate_ranking(&model, big.triples(), &big, RankMode::Raw).unwrap();
        assert_eq!(result.skipped, 4);
        assert_eq!(result.n_queries, 4);
        // Nothing rankable at all is an error.
        let out_of_vocab = &big.triples()[2..];
        assert!(evaluate_ranking(&model, out_of_vocab, &big, RankMode::Raw).is_err());
    }
}
