//! Relation-centric connectivity and similarity descriptors.
//!
//! For each relation the report carries two completeness ratios: `mu`,
//! positives over the domain-times-range pair space (the semantic negative
//! pool), and `z`, positives over all ordered entity pairs (the unrestricted
//! pool). Relation similarity is summarized by two Jaccard matrices: `S`
//! over shared (head, tail) instances and `S'` over shared participating
//! entities, each condensed to a Frobenius norm.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{EntityId, KnowledgeGraph, RelationId};
use crate::{Error, Result};

/// Ratio of asserted pairs to the domain-by-range pair space of `r`.
/// Always in (0, 1] for an indexed relation.
pub fn mu(kg: &KnowledgeGraph, r: RelationId) -> Result<f64> {
    let pos = kg.pairs_of(r)?.len();
    let dom = kg.domain_of(r)?.len();
    let rng = kg.range_of(r)?.len();
    Ok(pos as f64 / (dom as f64 * rng as f64))
}

/// Ratio of asserted pairs to all ordered pairs of distinct entities.
pub fn z(kg: &KnowledgeGraph, r: RelationId) -> Result<f64> {
    let n = kg.entity_count();
    if n < 2 {
        return Err(Error::SingleEntity);
    }
    let pos = kg.pairs_of(r)?.len();
    Ok(pos as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Jaccard similarity of the (head, tail) instance sets of two relations.
pub fn jaccard_instances(kg: &KnowledgeGraph, r1: RelationId, r2: RelationId) -> Result<f64> {
    if r1 == r2 {
        kg.pairs_of(r1)?;
        return Ok(1.0);
    }
    let a = sorted_pairs(kg, r1)?;
    let b = sorted_pairs(kg, r2)?;
    Ok(jaccard_sorted(&a, &b))
}

/// Jaccard similarity of the participating-entity sets
/// `dom(r) ∪ range(r)` of two relations.
pub fn jaccard_entities(kg: &KnowledgeGraph, r1: RelationId, r2: RelationId) -> Result<f64> {
    if r1 == r2 {
        kg.pairs_of(r1)?;
        return Ok(1.0);
    }
    let a = participating_entities(kg, r1)?;
    let b = participating_entities(kg, r2)?;
    Ok(jaccard_sorted(&a, &b))
}

/// Square root of the sum of squared entries.
pub fn frobenius(matrix: &[Vec<f64>]) -> f64 {
    matrix
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

fn sorted_pairs(kg: &KnowledgeGraph, r: RelationId) -> Result<Vec<(EntityId, EntityId)>> {
    let mut pairs = kg.pairs_of(r)?.to_vec();
    pairs.sort_unstable();
    Ok(pairs)
}

fn participating_entities(kg: &KnowledgeGraph, r: RelationId) -> Result<Vec<EntityId>> {
    let dom = kg.domain_of(r)?;
    let rng = kg.range_of(r)?;
    let mut out = Vec::with_capacity(dom.len() + rng.len());
    out.extend_from_slice(dom);
    out.extend_from_slice(rng);
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Intersection-over-union of two sorted, deduplicated slices.
fn jaccard_sorted<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut inter = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Mean and sample standard deviation (n−1 denominator, 0 for n ≤ 1).
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-relation descriptor row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationDescriptor {
    pub relation: String,
    pub positives: usize,
    pub domain_size: usize,
    pub range_size: usize,
    pub mu: f64,
    pub z: f64,
}

/// Full descriptor report for one knowledge graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescriptorReport {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub per_relation: Vec<RelationDescriptor>,
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub z_mean: f64,
    pub z_sd: f64,
    /// Instance-level Jaccard matrix, row-major in relation-id order.
    pub s: Vec<Vec<f64>>,
    /// Entity-level Jaccard matrix, row-major in relation-id order.
    pub s_prime: Vec<Vec<f64>>,
    pub frob_s: f64,
    pub frob_s_prime: f64,
}

/// Compute every descriptor for `kg`. Matrix rows are computed in parallel
/// and assembled in relation-id order, so the report is deterministic.
pub fn describe(kg: &KnowledgeGraph) -> Result<DescriptorReport> {
    let rels: Vec<RelationId> = kg.relation_ids().collect();
    let mut per_relation = Vec::with_capacity(rels.len());
    for &r in &rels {
        per_relation.push(RelationDescriptor {
            relation: kg.relation_name(r)?.to_owned(),
            positives: kg.pairs_of(r)?.len(),
            domain_size: kg.domain_of(r)?.len(),
            range_size: kg.range_of(r)?.len(),
            mu: mu(kg, r)?,
            z: z(kg, r)?,
        });
    }

    let pair_sets: Vec<Vec<(EntityId, EntityId)>> = rels
        .iter()
        .map(|&r| sorted_pairs(kg, r))
        .collect::<Result<_>>()?;
    let entity_sets: Vec<Vec<EntityId>> = rels
        .iter()
        .map(|&r| participating_entities(kg, r))
        .collect::<Result<_>>()?;

    let n = rels.len();
    let s: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        jaccard_sorted(&pair_sets[i], &pair_sets[j])
                    }
                })
                .collect()
        })
        .collect();
    let s_prime: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        jaccard_sorted(&entity_sets[i], &entity_sets[j])
                    }
                })
                .collect()
        })
        .collect();

    let mus: Vec<f64> = per_relation.iter().map(|d| d.mu).collect();
    let zs: Vec<f64> = per_relation.iter().map(|d| d.z).collect();
    let (mu_mean, mu_sd) = mean_sd(&mus);
    let (z_mean, z_sd) = mean_sd(&zs);
    let frob_s = frobenius(&s);
    let frob_s_prime = frobenius(&s_prime);

    Ok(DescriptorReport {
        entities: kg.entity_count(),
        relations: kg.relation_count(),
        triples: kg.triple_count(),
        per_relation,
        mu_mean,
        mu_sd,
        z_mean,
        z_sd,
        s,
        s_prime,
        frob_s,
        frob_s_prime,
    })
}

impl DescriptorReport {
    /// Write `s.csv` and `s_prime.csv` into `dir`, each with a relation-name
    /// header row and column, suitable for heatmap plotting.
    pub fn write_matrices_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let names: Vec<&str> = self.per_relation.iter().map(|d| d.relation.as_str()).collect();
        for (file, matrix) in [("s.csv", &self.s), ("s_prime.csv", &self.s_prime)] {
            let path = dir.join(file);
            let mut w = csv::Writer::from_path(&path)?;
            let mut header = vec![""];
            header.extend(&names);
            w.write_record(&header)?;
            for (i, row) in matrix.iter().enumerate() {
                let mut record = vec![names[i].to_owned()];
                record.extend(row.iter().map(|v| format!("{v}")));
                w.write_record(&record)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let text = serde_json::to_string_pretty(self)?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
