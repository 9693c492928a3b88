//! Per-relation binary link classifiers over combined entity embeddings.
//!
//! Each relation's split becomes a balanced classification problem: head and
//! tail vectors are combined into one feature vector, an L2-regularized
//! logistic regression is fit on the train side by full-batch gradient
//! descent with backtracking, and the test side is scored with F1 and ROC
//! AUC. Examples whose head or tail received no embedding are dropped, never
//! imputed, and accounted as missing ratios.

use serde::{Deserialize, Serialize};

use crate::graph::RelationId;
use crate::shallow::EmbeddingTable;
use crate::splits::RelationSplit;
use crate::{Error, Result};

/// How two entity vectors become one link feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineOp {
    /// `[u ; v]`, output dimension 2d.
    Concat,
    /// `u + v`, output dimension d.
    Sum,
    /// `(u + v) / 2`, output dimension d.
    Mean,
    /// `u ⊙ v`, output dimension d.
    Hadamard,
}

impl CombineOp {
    pub fn name(self) -> &'static str {
        match self {
            CombineOp::Concat => "concat",
            CombineOp::Sum => "sum",
            CombineOp::Mean => "mean",
            CombineOp::Hadamard => "hadamard",
        }
    }

    pub fn output_dim(self, dim: usize) -> usize {
        match self {
            CombineOp::Concat => 2 * dim,
            _ => dim,
        }
    }
}

/// Combine two present embeddings into a link feature vector.
pub fn combine(op: CombineOp, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(match op {
        CombineOp::Concat => u.iter().chain(v).copied().collect(),
        CombineOp::Sum => u.iter().zip(v).map(|(a, b)| a + b).collect(),
        CombineOp::Mean => u.iter().zip(v).map(|(a, b)| (a + b) / 2.0).collect(),
        CombineOp::Hadamard => u.iter().zip(v).map(|(a, b)| a * b).collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// L2 weight on the coefficients (never the intercept).
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop when the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            lambda: 1.0,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// Fitted logistic regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ClassifierModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.decision(x)).exp())
    }
}

/// Summed log loss plus (lambda/2)·||w||², with gradient.
fn objective(
    features: &[Vec<f64>],
    labels: &[bool],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (x, &y) in features.iter().zip(labels) {
        let zraw: f64 = b + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        let y = if y { 1.0 } else { 0.0 };
        loss += zraw.max(0.0) + (-zraw.abs()).exp().ln_1p() - y * zraw;
        let sigma = 1.0 / (1.0 + (-zraw).exp());
        let d = sigma - y;
        for (g, xi) in grad_w.iter_mut().zip(x) {
            *g += d * xi;
        }
        grad_b += d;
    }
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g += lambda * wi;
    }
    loss += 0.5 * lambda * w.iter().map(|wi| wi * wi).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Full-batch gradient descent with backtracking line search; deterministic.
pub fn fit_logreg(
    features: &[Vec<f64>],
    labels: &[bool],
    cfg: &LogRegConfig,
) -> Result<ClassifierModel> {
    if features.is_empty() {
        return Err(Error::EmptyInput("classifier training set"));
    }
    if features.len() != labels.len() {
        return Err(Error::DimMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass);
    }
    let dim = features[0].len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut step = 1.0 / features.len() as f64;
    for _ in 0..cfg.max_iter {
        let (obj, grad_w, grad_b) = objective(features, labels, &w, b, cfg.lambda);
        let gnorm2: f64 = grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b;
        if gnorm2.sqrt() <= cfg.tol {
            break;
        }
        // Backtracking with Armijo condition; the accepted step is carried
        // to the next iteration and allowed to grow again.
        let mut t = step * 2.0;
        loop {
            let w_new: Vec<f64> = w.iter().zip(&grad_w).map(|(wi, g)| wi - t * g).collect();
            let b_new = b - t * grad_b;
            let (obj_new, _, _) = objective(features, labels, &w_new, b_new, cfg.lambda);
            if obj_new <= obj - 0.25 * t * gnorm2 || t < 1e-14 {
                w = w_new;
                b = b_new;
                step = t;
                break;
            }
            t *= 0.5;
        }
    }
    Ok(ClassifierModel { weights: w, bias: b })
}

/// F1 of the positive class at the given probability threshold
/// (predicted positive when p ≥ threshold). Degenerate confusion
/// matrices yield 0.
pub fn f1_score(predictions: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fne = 0.0;
    for (&p, &y) in predictions.iter().zip(labels) {
        let pred = p >= threshold;
        match (pred, y) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fne += 1.0,
            (false, false) => {}
        }
    }
    let denom = 2.0 * tp + fp + fne;
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * tp / denom
}

/// ROC AUC by the rank statistic, ties resolved with midranks.
/// Requires both classes.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::EmptyInput("roc_auc inputs"));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = crate::stats::midranks(scores);
    let sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y)
        .map(|(r, _)| r)
        .sum();
    let n_pos = n_pos as f64;
    Ok((sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// One relation's evaluation under one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub rel: RelationId,
    pub run: usize,
    pub f1: f64,
    pub roc_auc: f64,
    pub missing_train_ratio: f64,
    pub missing_test_ratio: f64,
    pub n_train_used: usize,
    pub n_test_used: usize,
}

fn gather_examples(
    positives: &[crate::graph::Triple],
    negatives: &[crate::graph::Triple],
    table: &EmbeddingTable,
    op: CombineOp,
) -> Result<(Vec<Vec<f64>>, Vec<bool>, f64)> {
    let total = positives.len() + negatives.len();
    let mut features = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut dropped = 0usize;
    for (list, label) in [(positives, true), (negatives, false)] {
        for t in list {
            match (table.get(t.head), table.get(t.tail)) {
                (Some(u), Some(v)) => {
                    features.push(combine(op, u, v)?);
                    labels.push(label);
                }
                _ => dropped += 1,
            }
        }
    }
    let ratio = if total == 0 {
        0.0
    } else {
        dropped as f64 / total as f64
    };
    Ok((features, labels, ratio))
}

/// Fit on the split's train side, score its test side. Examples with absent
/// embeddings are dropped and surface only in the missing ratios.
pub fn evaluate_relation(
    split: &RelationSplit,
    table: &EmbeddingTable,
    op: CombineOp,
    run: usize,
    cfg: &LogRegConfig,
) -> Result<EvalRecord> {
    let (train_x, train_y, missing_train) =
        gather_examples(&split.train_pos, &split.train_neg, table, op)?;
    let (test_x, test_y, missing_test) =
        gather_examples(&split.test_pos, &split.test_neg, table, op)?;
    if test_x.is_empty() {
        return Err(Error::EmptyInput("test examples after drops"));
    }
    let model = fit_logreg(&train_x, &train_y, cfg)?;
    let predictions: Vec<f64> = test_x.iter().map(|x| model.predict_proba(x)).collect();
    let f1 = f1_score(&predictions, &test_y, 0.5);
    let auc = roc_auc(&predictions, &test_y)?;
    Ok(EvalRecord {
        rel: split.rel,
        run,
        f1,
        roc_auc: auc,
        missing_train_ratio: missing_train,
        missing_test_ratio: missing_test,
        n_train_used: train_x.len(),
        n_test_used: test_x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EntityId, Triple};
    use crate::seed::{stream_rng, Purpose};
    use rand::Rng;

    #[test]
    fn combine_hand_values() {
        let u = [1.0, 2.0];
        let v = [3.0, 4.0];
        assert_eq!(
            combine(CombineOp::Concat, &u, &v).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(combine(CombineOp::Sum, &u, &v).unwrap(), vec![4.0, 6.0]);
        assert_eq!(combine(CombineOp::Mean, &u, &v).unwrap(), vec![2.0, 3.0]);
        assert_eq!(
            combine(CombineOp::Hadamard, &u, &v).unwrap(),
            vec![3.0, 8.0]
        );
    }

    #[test]
    fn combine_dim_mismatch() {
        assert!(combine(CombineOp::Sum, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn logreg_separable_data_reaches_full_accuracy() {
        let features = vec![vec![-1.0], vec![1.0], vec![-1.3], vec![0.9]];
        let labels = vec![false, true, false, true];
        let model = fit_logreg(&features, &labels, &LogRegConfig::default()).unwrap();
        for (x, &y) in features.iter().zip(&labels) {
            assert_eq!(model.predict_proba(x) >= 0.5, y);
        }
    }

    #[test]
    fn logreg_flipped_labels_flip_weight_sign() {
        let features = vec![vec![-1.0], vec![1.0], vec![-0.5], vec![0.7]];
        let labels = vec![false, true, false, true];
        let flipped: Vec<bool> = labels.iter().map(|y| !y).collect();
        let m1 = fit_logreg(&features, &labels, &LogRegConfig::default()).unwrap();
        let m2 = fit_logreg(&features, &flipped, &LogRegConfig::default()).unwrap();
        assert!(m1.weights[0] > 0.0);
        assert!(m2.weights[0] < 0.0);
        assert!((m1.weights[0] + m2.weights[0]).abs() < 1e-4);
    }

    #[test]
    fn logreg_huge_lambda_flattens_predictions() {
        let features = vec![vec![-1.0], vec![1.0], vec![-0.5], vec![0.7]];
        let labels = vec![false, true, false, true];
        let cfg = LogRegConfig {
            lambda: 1e6,
            ..Default::default()
        };
        let model = fit_logreg(&features, &labels, &cfg).unwrap();
        assert!(model.weights[0].abs() < 1e-4);
        for x in &features {
            assert!((model.predict_proba(x) - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn logreg_single_class_is_an_error() {
        let features = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            fit_logreg(&features, &[true, true], &LogRegConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn f1_hand_values() {
        // perfect
        assert_eq!(f1_score(&[0.9, 0.1], &[true, false], 0.5), 1.0);
        // TP=1, FP=1, FN=1 -> 2·0.25/0.5 = 0.5
        let preds = [0.9, 0.8, 0.1];
        let labels = [true, false, true];
        assert_eq!(f1_score(&preds, &labels, 0.5), 0.5);
        // no positive predictions, no positive labels
        assert_eq!(f1_score(&[0.1, 0.2], &[false, false], 0.5), 0.0);
    }

    #[test]
    fn auc_perfect_and_tied() {
        assert_eq!(
            roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(),
            1.0
        );
        assert_eq!(
            roc_auc(&[0.4, 0.4, 0.4, 0.4], &[true, false, true, false]).unwrap(),
            0.5
        );
        assert!(matches!(
            roc_auc(&[0.5, 0.6], &[true, true]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn f1_and_auc_are_permutation_invariant() {
        let mut rng = stream_rng(17, 0, 0, Purpose::TrainGeneralized);
        let n = 40;
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let f1_base = f1_score(&scores, &labels, 0.5);
        let auc_base = roc_auc(&scores, &labels).unwrap();
        let mut index: Vec<usize> = (0..n).collect();
        for _ in 0..10 {
            use rand::seq::SliceRandom;
            index.shuffle(&mut rng);
            let s: Vec<f64> = index.iter().map(|&i| scores[i]).collect();
            let l: Vec<bool> = index.iter().map(|&i| labels[i]).collect();
            assert_eq!(f1_score(&s, &l, 0.5), f1_base);
            assert!((roc_auc(&s, &l).unwrap() - auc_base).abs() < 1e-12);
        }
    }

    fn table_of(rows: &[(u32, Vec<f64>)], n: usize) -> EmbeddingTable {
        let rows: Vec<(EntityId, Vec<f64>)> = rows
            .iter()
            .map(|(e, v)| (EntityId(*e), v.clone()))
            .collect();
        EmbeddingTable::from_rows(n, &rows).unwrap()
    }

    fn triple(h: u32, t: u32) -> Triple {
        Triple::new(EntityId(h), crate::graph::RelationId(0), EntityId(t))
    }

    #[test]
    fn missing_entities_drop_examples_and_raise_the_ratio() {
        // Entity 3 has no embedding; 2 of the 4 test examples touch it.
        let table = table_of(
            &[
                (0, vec![1.0, 0.0]),
                (1, vec![0.0, 1.0]),
                (2, vec![1.0, 1.0]),
            ],
            4,
        );
        let split = RelationSplit {
            rel: crate::graph::RelationId(0),
            train_pos: vec![triple(0, 1), triple(1, 2)],
            train_neg: vec![triple(1, 0), triple(2, 0)],
            test_pos: vec![triple(0, 2), triple(1, 3)],
            test_neg: vec![triple(2, 1), triple(3, 0)],
            shortfall: false,
        };
        let record =
            evaluate_relation(&split, &table, CombineOp::Concat, 0, &LogRegConfig::default())
                .unwrap();
        assert_eq!(record.missing_test_ratio, 0.5);
        assert_eq!(record.missing_train_ratio, 0.0);
        assert_eq!(record.n_test_used, 2);
        assert_eq!(record.n_train_used, 4);
        // used + dropped = split size per side
        assert_eq!(record.n_test_used + 2, 4);
    }

    #[test]
    fn single_class_test_side_is_unevaluable() {
        // The only surviving test example is positive; AUC is undefined and
        // the relation must surface as an error, not a fabricated record.
        let table = table_of(
            &[
                (0, vec![1.0, 0.0]),
                (1, vec![0.0, 1.0]),
                (2, vec![1.0, 1.0]),
            ],
            4,
        );
        let split = RelationSplit {
            rel: crate::graph::RelationId(0),
            train_pos: vec![triple(0, 1), triple(1, 2)],
            train_neg: vec![triple(1, 0), triple(2, 0)],
            test_pos: vec![triple(0, 2)],
            test_neg: vec![triple(0, 3)],
            shortfall: false,
        };
        assert!(matches!(
            evaluate_relation(&split, &table, CombineOp::Concat, 0, &LogRegConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn random_embeddings_score_near_chance() {
        // Null model: embeddings carry no information about the pairs, so
        // test F1 hovers around 0.5 on a large balanced test side.
        let mut rng = stream_rng(23, 0, 0, Purpose::TrainGeneralized);
        let n_entities = 60u32;
        let dim = 8;
        let rows: Vec<(u32, Vec<f64>)> = (0..n_entities)
            .map(|e| {
                (
                    e,
                    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let table = table_of(&rows, n_entities as usize);
        let draw_pair = |rng: &mut rand_chacha::ChaCha8Rng| {
            let h = rng.random_range(0..n_entities);
            let mut t = rng.random_range(0..n_entities);
            while t == h {
                t = rng.random_range(0..n_entities);
            }
            triple(h, t)
        };
        let take = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<Triple> {
            (0..n).map(|_| draw_pair(rng)).collect()
        };
        let mut rng2 = stream_rng(29, 0, 0, Purpose::TrainGeneralized);
        let split = RelationSplit {
            rel: crate::graph::RelationId(0),
            train_pos: take(&mut rng2, 200),
            train_neg: take(&mut rng2, 200),
            test_pos: take(&mut rng2, 1000),
            test_neg: take(&mut rng2, 1000),
            shortfall: false,
        };
        let record =
            evaluate_relation(&split, &table, CombineOp::Concat, 0, &LogRegConfig::default())
                .unwrap();
        assert!(
            (record.f1 - 0.5).abs() <= 0.1,
            "null-model F1 {} should sit near 0.5",
            record.f1
        );
        assert!(record.roc_auc > 0.0 && record.roc_auc < 1.0);
    }
}
