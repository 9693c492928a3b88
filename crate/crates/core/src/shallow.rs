//! Shallow contrastive entity embeddings.
//!
//! Entity-only lookup table trained with SGD on a softmax loss: for each
//! positive triple (e_i, _, e_j), the dot product sim(e_i, e_j) competes
//! against sim(e_i, ē) for k entities ē sampled uniformly from the corpus
//! vocabulary. Entities absent from the training corpus receive no vector.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{EntityId, KnowledgeGraph, Triple};
use crate::seed::{stream_rng, Purpose};
use crate::{Error, Result};

/// Similarity between entity vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Dot,
    Cosine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShallowConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives_k: usize,
    pub learning_rate: f64,
    pub similarity: Similarity,
    pub seed: u64,
}

impl Default for ShallowConfig {
    fn default() -> Self {
        ShallowConfig {
            dim: 50,
            epochs: 10,
            negatives_k: 10,
            learning_rate: 0.05,
            similarity: Similarity::Dot,
            seed: 0,
        }
    }
}

impl ShallowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.negatives_k == 0 {
            return Err(Error::Config("negatives_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Entity vectors of a fixed dimension, with a presence flag per entity.
/// Vectors exist only for entities seen in the training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
    present: Vec<bool>,
}

impl EmbeddingTable {
    fn zeroed(n_entities: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            data: vec![0.0; n_entities * dim],
            present: vec![false; n_entities],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn is_present(&self, e: EntityId) -> bool {
        self.present.get(e.0 as usize).copied().unwrap_or(false)
    }

    /// The vector for `e`, or `None` when the entity never appeared in the
    /// training corpus.
    pub fn get(&self, e: EntityId) -> Option<&[f64]> {
        let i = e.0 as usize;
        if *self.present.get(i)? {
            Some(&self.data[i * self.dim..(i + 1) * self.dim])
        } else {
            None
        }
    }

    fn row_mut(&mut self, e: EntityId) -> &mut [f64] {
        let i = e.0 as usize;
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Build a table directly from (entity, vector) rows. All rows must
    /// share one dimension.
    pub fn from_rows(n_entities: usize, rows: &[(EntityId, Vec<f64>)]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|(_, v)| v.len())
            .ok_or(Error::EmptyInput("embedding rows"))?;
        let mut table = EmbeddingTable::zeroed(n_entities, dim);
        for (e, v) in rows {
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    left: dim,
                    right: v.len(),
                });
            }
            table.present[e.0 as usize] = true;
            table.row_mut(*e).copy_from_slice(v);
        }
        Ok(table)
    }

    /// TSV serialization: a `dim` header line, then one row per present
    /// entity (`name \t v_0 \t ... \t v_{d-1}`).
    pub fn write_tsv(&self, kg: &KnowledgeGraph, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "dim\t{}", self.dim).map_err(|e| Error::io(path, e))?;
        for idx in 0..self.present.len() {
            let e = EntityId(idx as u32);
            if let Some(vec) = self.get(e) {
                let mut line = kg.entity_name(e)?.to_owned();
                for v in vec {
                    line.push('\t');
                    line.push_str(&format!("{v:?}"));
                }
                writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
            }
        }
        Ok(())
    }

    pub fn read_tsv(kg: &KnowledgeGraph, path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedFile {
                path: path.to_owned(),
                reason: "missing header".into(),
            })?
            .map_err(|e| Error::io(path, e))?;
        let dim: usize = header
            .strip_prefix("dim\t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::MalformedFile {
                path: path.to_owned(),
                reason: format!("bad header line: {header:?}"),
            })?;
        let mut table = EmbeddingTable::zeroed(kg.entity_count(), dim);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut fields = line.split('\t');
            let name = fields.next().unwrap_or_default();
            let e = kg.entity_id(name).ok_or_else(|| Error::MalformedFile {
                path: path.to_owned(),
                reason: format!("unknown entity {name:?}"),
            })?;
            let vec: Vec<f64> = fields
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::MalformedFile {
                    path: path.to_owned(),
                    reason: format!("bad float: {e}"),
                })?;
            if vec.len() != dim {
                return Err(Error::DimMismatch {
                    left: dim,
                    right: vec.len(),
                });
            }
            table.present[e.0 as usize] = true;
            table.row_mut(e).copy_from_slice(&vec);
        }
        Ok(table)
    }
}

/// Plain dot product; errors on dimension mismatch.
pub fn similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(dot(u, v))
}

#[inline]
fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    dot(u, v) / (nu * nv)
}

/// Softmax loss value and gradient for one positive score against its
/// sampled negative scores.
#[derive(Debug, Clone)]
pub struct SoftmaxLoss {
    pub loss: f64,
    /// d loss / d pos_sim
    pub d_pos: f64,
    /// d loss / d neg_sims[k]
    pub d_negs: Vec<f64>,
}

/// −log( exp(pos) / (exp(pos) + Σ exp(neg_k)) ), max-shifted for stability.
pub fn softmax_loss(pos_sim: f64, neg_sims: &[f64]) -> Result<SoftmaxLoss> {
    if neg_sims.is_empty() {
        return Err(Error::EmptyInput("softmax_loss needs at least 1 negative"));
    }
    let max = neg_sims
        .iter()
        .fold(pos_sim, |m, &v| if v > m { v } else { m });
    let e_pos = (pos_sim - max).exp();
    let mut denom = e_pos;
    let mut e_negs = Vec::with_capacity(neg_sims.len());
    for &s in neg_sims {
        let e = (s - max).exp();
        e_negs.push(e);
        denom += e;
    }
    let p_pos = e_pos / denom;
    let loss = -p_pos.ln();
    let d_negs = e_negs.iter().map(|e| e / denom).collect();
    Ok(SoftmaxLoss {
        loss,
        d_pos: p_pos - 1.0,
        d_negs,
    })
}

/// Train entity embeddings on `corpus`. Bitwise deterministic for a fixed
/// config: the corpus order, shuffles and negative draws all derive from
/// `cfg.seed`.
pub fn train_shallow(
    corpus: &[Triple],
    kg: &KnowledgeGraph,
    cfg: &ShallowConfig,
) -> Result<EmbeddingTable> {
    let mut rng = stream_rng(cfg.seed, 0, 0, Purpose::TrainGeneralized);
    train_shallow_with_rng(corpus, kg, cfg, &mut rng)
}

/// Same as [`train_shallow`] but drawing from a caller-provided stream;
/// the pipeline keys streams by (run, relation).
pub fn train_shallow_with_rng(
    corpus: &[Triple],
    kg: &KnowledgeGraph,
    cfg: &ShallowConfig,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddingTable> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("training corpus"));
    }
    let dim = cfg.dim;
    let mut table = EmbeddingTable::zeroed(kg.entity_count(), dim);

    // Vocabulary: entities that occur in the corpus, in entity-id order.
    let mut vocab: Vec<EntityId> = corpus
        .iter()
        .flat_map(|t| [t.head, t.tail])
        .collect();
    vocab.sort_unstable();
    vocab.dedup();
    let half = 1.0 / (2.0 * dim as f64);
    for &e in &vocab {
        table.present[e.0 as usize] = true;
        for v in table.row_mut(e) {
            *v = rng.random_range(-half..half);
        }
    }

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let k = cfg.negatives_k;
    let lr = cfg.learning_rate;
    let mut negs = vec![EntityId(0); k];
    let mut d_head = vec![0.0; dim];
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for &idx in &order {
            let t = corpus[idx];
            for slot in negs.iter_mut() {
                *slot = vocab[rng.random_range(0..vocab.len())];
            }
            let (pos_sim, neg_sims) = {
                let u = table.get(t.head).expect("head present");
                let v = table.get(t.tail).expect("tail present");
                let pos = match cfg.similarity {
                    Similarity::Dot => dot(u, v),
                    Similarity::Cosine => cosine(u, v),
                };
                let sims: Vec<f64> = negs
                    .iter()
                    .map(|&n| {
                        let w = table.get(n).expect("negative present");
                        match cfg.similarity {
                            Similarity::Dot => dot(u, w),
                            Similarity::Cosine => cosine(u, w),
                        }
                    })
                    .collect();
                (pos, sims)
            };
            let grad = softmax_loss(pos_sim, &neg_sims)?;

            // SGD step through the dot product: d sim(u, v)/du = v.
            // The cosine switch only changes the forward similarity.
            d_head.iter_mut().for_each(|x| *x = 0.0);
            {
                let v = table.get(t.tail).expect("tail present").to_vec();
                for (g, vi) in d_head.iter_mut().zip(&v) {
                    *g += grad.d_pos * vi;
                }
                let u = table.get(t.head).expect("head present").to_vec();
                for (i, &n) in negs.iter().enumerate() {
                    let w = table.row_mut(n);
                    for (j, wj) in w.iter_mut().enumerate() {
                        d_head[j] += grad.d_negs[i] * *wj;
                        *wj -= lr * grad.d_negs[i] * u[j];
                    }
                }
                let vrow = table.row_mut(t.tail);
                for (vj, &uj) in vrow.iter_mut().zip(&u) {
                    *vj -= lr * grad.d_pos * uj;
                }
            }
            let urow = table.row_mut(t.head);
            for (uj, &g) in urow.iter_mut().zip(&d_head) {
                *uj -= lr * g;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::KnowledgeGraphBuilder;

    fn kg_from(lines: &[(&str, &str, &str)]) -> KnowledgeGraph {
        let mut b = KnowledgeGraphBuilder::new();
        for (h, r, t) in lines {
            b.add(h, r, t);
        }
        b.build().unwrap()
    }

    #[test]
    fn similarity_hand_values() {
        assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(similarity(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let u = [0.3, -2.0, 0.7];
        assert!(similarity(&u, &u).unwrap() >= 0.0);
    }

    #[test]
    fn similarity_dim_mismatch() {
        assert!(matches!(
            similarity(&[1.0], &[1.0, 2.0]),
            Err(Error::DimMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn softmax_loss_uniform_scores() {
        let one = softmax_loss(0.0, &[0.0]).unwrap();
        assert!((one.loss - 2.0_f64.ln()).abs() < 1e-12);
        for k in [2usize, 5, 10] {
            let l = softmax_loss(1.3, &vec![1.3; k]).unwrap();
            assert!((l.loss - ((k + 1) as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_loss_saturates() {
        let l = softmax_loss(20.0, &[0.0]).unwrap();
        assert!(l.loss < 1e-8);
        // Stability at large magnitudes: no NaN/inf.
        let l = softmax_loss(1e4, &[-1e4, 1e4]).unwrap();
        assert!(l.loss.is_finite());
    }

    #[test]
    fn softmax_loss_gradient_matches_finite_differences() {
        // Central differences with h = 1e-6, relative error 1e-5.
        let mut rng = stream_rng(7, 0, 0, Purpose::TrainGeneralized);
        for _ in 0..100 {
            let k = rng.random_range(1..6);
            let pos: f64 = rng.random_range(-3.0..3.0);
            let negs: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
            let grad = softmax_loss(pos, &negs).unwrap();
            let h = 1e-6;
            let num_pos = (softmax_loss(pos + h, &negs).unwrap().loss
                - softmax_loss(pos - h, &negs).unwrap().loss)
                / (2.0 * h);
            let rel = (grad.d_pos - num_pos).abs() / num_pos.abs().max(1e-8);
            assert!(rel < 1e-5, "pos grad {} vs {}", grad.d_pos, num_pos);
            for i in 0..k {
                let mut up = negs.clone();
                up[i] += h;
                let mut down = negs.clone();
                down[i] -= h;
                let num = (softmax_loss(pos, &up).unwrap().loss
                    - softmax_loss(pos, &down).unwrap().loss)
                    / (2.0 * h);
                let rel = (grad.d_negs[i] - num).abs() / num.abs().max(1e-8);
                assert!(rel < 1e-5, "neg grad {} vs {}", grad.d_negs[i], num);
            }
        }
    }

    #[test]
    fn softmax_loss_monotonicity() {
        let base = softmax_loss(0.4, &[0.1, -0.2]).unwrap().loss;
        assert!(softmax_loss(0.9, &[0.1, -0.2]).unwrap().loss < base);
        assert!(softmax_loss(0.4, &[0.6, -0.2]).unwrap().loss > base);
    }

    #[test]
    fn training_increases_positive_similarity() {
        let kg = kg_from(&[("a", "r", "b")]);
        let corpus = kg.triples().to_vec();
        let a = kg.entity_id("a").unwrap();
        let b = kg.entity_id("b").unwrap();
        let cfg_init = ShallowConfig {
            epochs: 1,
            learning_rate: 0.0, // keeps initialization
            ..Default::default()
        };
        let init = train_shallow(&corpus, &kg, &cfg_init).unwrap();
        let cfg = ShallowConfig {
            epochs: 50,
            ..Default::default()
        };
        let trained = train_shallow(&corpus, &kg, &cfg).unwrap();
        let sim0 = similarity(init.get(a).unwrap(), init.get(b).unwrap()).unwrap();
        let sim1 = similarity(trained.get(a).unwrap(), trained.get(b).unwrap()).unwrap();
        assert!(sim1 > sim0, "{sim1} should exceed {sim0}");
    }

    #[test]
    fn absent_entities_have_no_vector() {
        let kg = kg_from(&[("a", "r", "b"), ("c", "r", "d")]);
        let corpus: Vec<Triple> = kg.triples()[..1].to_vec();
        let table = train_shallow(&corpus, &kg, &ShallowConfig::default()).unwrap();
        assert!(table.get(kg.entity_id("a").unwrap()).is_some());
        assert!(table.get(kg.entity_id("c").unwrap()).is_none());
        assert!(!table.is_present(kg.entity_id("d").unwrap()));
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let kg = kg_from(&[
            ("a", "r", "b"),
            ("b", "r", "c"),
            ("c", "r", "d"),
            ("d", "r", "a"),
        ]);
        let corpus = kg.triples().to_vec();
        let cfg = ShallowConfig {
            seed: 1234,
            ..Default::default()
        };
        let t1 = train_shallow(&corpus, &kg, &cfg).unwrap();
        let t2 = train_shallow(&corpus, &kg, &cfg).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn two_cliques_embed_apart() {
        // Two 4-cliques with no cross edges: intra-clique dot products must
        // exceed inter-clique ones on average, across 5 seeds.
        let names_a = ["a0", "a1", "a2", "a3"];
        let names_b = ["b0", "b1", "b2", "b3"];
        let mut b = KnowledgeGraphBuilder::new();
        for group in [&names_a, &names_b] {
            for x in group.iter() {
                for y in group.iter() {
                    if x != y {
                        b.add(x, "r", y);
                    }
                }
            }
        }
        let kg = b.build().unwrap();
        let corpus = kg.triples().to_vec();
        for seed in 0..5 {
            let cfg = ShallowConfig {
                seed,
                epochs: 30,
                ..Default::default()
            };
            let table = train_shallow(&corpus, &kg, &cfg).unwrap();
            let avg = |xs: &[&str], ys: &[&str]| -> f64 {
                let mut total = 0.0;
                let mut n = 0;
                for x in xs {
                    for y in ys {
                        if x != y {
                            let u = table.get(kg.entity_id(x).unwrap()).unwrap();
                            let v = table.get(kg.entity_id(y).unwrap()).unwrap();
                            total += dot(u, v);
                            n += 1;
                        }
                    }
                }
                total / n as f64
            };
            let intra = (avg(&names_a, &names_a) + avg(&names_b, &names_b)) / 2.0;
            let inter = avg(&names_a, &names_b);
            assert!(
                intra > inter,
                "seed {seed}: intra {intra} should exceed inter {inter}"
            );
        }
    }

    #[test]
    fn tsv_round_trip() {
        let kg = kg_from(&[("a", "r", "b"), ("b", "r", "c")]);
        let corpus = kg.triples().to_vec();
        let cfg = ShallowConfig {
            dim: 8,
            ..Default::default()
        };
        let table = train_shallow(&corpus, &kg, &cfg).unwrap();
        let path = std::env::temp_dir().join(format!("kgbench-emb-{}.tsv", std::process::id()));
        table.write_tsv(&kg, &path).unwrap();
        let back = EmbeddingTable::read_tsv(&kg, &path).unwrap();
        assert_eq!(table, back);
        std::fs::remove_file(&path).unwrap();
    }
}
