//! Shared test support: random graph generators and an index-free
//! brute-force descriptor oracle.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kgbench::graph::{KnowledgeGraph, KnowledgeGraphBuilder};

pub fn rng(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Raw triple lines (possibly with duplicates) plus the graph built from
/// them, for oracle comparisons.
pub struct RandomKg {
    pub lines: Vec<(String, String, String)>,
    pub kg: KnowledgeGraph,
}

/// A random knowledge graph with at most the given sizes. Always yields at
/// least one triple and two entities.
pub fn random_kg(seed: u64, max_entities: usize, max_relations: usize, max_triples: usize) -> RandomKg {
    let mut r = rng(seed);
    let n_entities = r.random_range(2..=max_entities.max(2));
    let n_relations = r.random_range(1..=max_relations.max(1));
    let n_triples = r.random_range(1..=max_triples.max(1));
    let mut lines = Vec::with_capacity(n_triples);
    let mut builder = KnowledgeGraphBuilder::new();
    for _ in 0..n_triples {
        let h = format!("e{}", r.random_range(0..n_entities));
        let rel = format!("r{}", r.random_range(0..n_relations));
        let t = format!("e{}", r.random_range(0..n_entities));
        builder.add(&h, &rel, &t);
        lines.push((h, rel, t));
    }
    RandomKg {
        lines,
        kg: builder.build().expect("at least one triple"),
    }
}

/// Random graph guaranteed to have several relations with enough positives
/// to split.
pub fn splittable_kg(seed: u64) -> KnowledgeGraph {
    let mut r = rng(seed ^ 0x5eed);
    let n_entities = r.random_range(10..40);
    let n_relations = r.random_range(2..6);
    let mut builder = KnowledgeGraphBuilder::new();
    for rel in 0..n_relations {
        let count = r.random_range(4..25);
        for _ in 0..count {
            let h = r.random_range(0..n_entities);
            let mut t = r.random_range(0..n_entities);
            if t == h {
                t = (t + 1) % n_entities;
            }
            builder.add(&format!("e{h}"), &format!("r{rel}"), &format!("e{t}"));
        }
    }
    builder.build().unwrap()
}

/// Desk-scale stand-in for a dense biomedical-style graph: 135 entities in
/// 11 interleaved clusters, 46 relations, each almost-completely connecting
/// one or two cluster pairs. Entity/relation/triple counts and per-relation
/// density sit in the same regime as the real corpus the benchmark targets.
pub fn dense_surrogate_kg(seed: u64) -> KnowledgeGraph {
    const N_ENTITIES: usize = 135;
    const N_CLUSTERS: usize = 11;
    const N_RELATIONS: usize = 46;
    let mut r = rng(seed ^ 0xd1ce);
    let entities: Vec<String> = (0..N_ENTITIES).map(|i| format!("c{i:03}")).collect();
    let clusters: Vec<Vec<&String>> = (0..N_CLUSTERS)
        .map(|j| entities.iter().skip(j).step_by(N_CLUSTERS).collect())
        .collect();
    let mut builder = KnowledgeGraphBuilder::new();
    for rel in 0..N_RELATIONS {
        let rel_name = format!("rel{rel:02}");
        let n_pairs = if rel % 3 == 0 { 2 } else { 1 };
        let density = r.random_range(0.82..0.95);
        for _ in 0..n_pairs {
            let ci = r.random_range(0..N_CLUSTERS);
            let cj = r.random_range(0..N_CLUSTERS);
            for h in &clusters[ci] {
                for t in &clusters[cj] {
                    if r.random::<f64>() < density {
                        builder.add(h, &rel_name, t);
                    }
                }
            }
        }
    }
    builder.build().unwrap()
}

/// Index-free descriptor oracle over the raw triple list. Everything is
/// recomputed with nested scans and string comparisons; no interning, maps
/// or sorted indices, so it shares no code path with the implementation.
pub struct OracleReport {
    pub entities: usize,
    pub relations: Vec<String>,
    pub triples: usize,
    /// per relation: (positives, dom size, range size, mu, z)
    pub per_relation: Vec<(usize, usize, usize, f64, f64)>,
    pub s: Vec<Vec<f64>>,
    pub s_prime: Vec<Vec<f64>>,
    pub frob_s: f64,
    pub frob_s_prime: f64,
    pub mu_mean: f64,
    pub z_mean: f64,
}

fn dedup_triples(lines: &[(String, String, String)]) -> Vec<&(String, String, String)> {
    let mut out: Vec<&(String, String, String)> = Vec::new();
    for t in lines {
        if !out.iter().any(|u| *u == t) {
            out.push(t);
        }
    }
    out
}

pub fn brute_force_describe(lines: &[(String, String, String)]) -> OracleReport {
    let triples = dedup_triples(lines);

    let mut entity_names: BTreeSet<&str> = BTreeSet::new();
    for (h, _, t) in lines {
        entity_names.insert(h);
        entity_names.insert(t);
    }
    // relations in first-seen order, matching interner order
    let mut relations: Vec<String> = Vec::new();
    for (_, r, _) in lines {
        if !relations.contains(r) {
            relations.push(r.clone());
        }
    }

    let n_entities = entity_names.len();
    let pairs_of = |rel: &str| -> Vec<(&str, &str)> {
        triples
            .iter()
            .filter(|(_, r, _)| r == rel)
            .map(|(h, _, t)| (h.as_str(), t.as_str()))
            .collect()
    };
    fn distinct<'a>(items: Vec<&'a str>) -> Vec<&'a str> {
        let mut out: Vec<&'a str> = Vec::new();
        for i in items {
            if !out.contains(&i) {
                out.push(i);
            }
        }
        out
    }

    let mut per_relation = Vec::new();
    for rel in &relations {
        let pairs = pairs_of(rel);
        let dom = distinct(pairs.iter().map(|&(h, _)| h).collect());
        let range = distinct(pairs.iter().map(|&(_, t)| t).collect());
        let mu = pairs.len() as f64 / (dom.len() as f64 * range.len() as f64);
        let z = pairs.len() as f64 / (n_entities as f64 * (n_entities as f64 - 1.0));
        per_relation.push((pairs.len(), dom.len(), range.len(), mu, z));
    }

    let nr = relations.len();
    let mut s = vec![vec![0.0; nr]; nr];
    let mut s_prime = vec![vec![0.0; nr]; nr];
    for i in 0..nr {
        for j in 0..nr {
            if i == j {
                s[i][j] = 1.0;
                s_prime[i][j] = 1.0;
                continue;
            }
            let pi = pairs_of(&relations[i]);
            let pj = pairs_of(&relations[j]);
            let inter = pi.iter().filter(|p| pj.contains(p)).count();
            let union = pi.len() + pj.len() - inter;
            s[i][j] = if union == 0 { 0.0 } else { inter as f64 / union as f64 };

            let xi = distinct(
                pi.iter()
                    .map(|&(h, _)| h)
                    .chain(pi.iter().map(|&(_, t)| t))
                    .collect(),
            );
            let xj = distinct(
                pj.iter()
                    .map(|&(h, _)| h)
                    .chain(pj.iter().map(|&(_, t)| t))
                    .collect(),
            );
            let inter_e = xi.iter().filter(|e| xj.contains(e)).count();
            let union_e = xi.len() + xj.len() - inter_e;
            s_prime[i][j] = if union_e == 0 {
                0.0
            } else {
                inter_e as f64 / union_e as f64
            };
        }
    }

    let frob = |m: &Vec<Vec<f64>>| -> f64 {
        m.iter()
            .flat_map(|row| row.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    };
    let mu_mean = per_relation.iter().map(|r| r.3).sum::<f64>() / nr as f64;
    let z_mean = per_relation.iter().map(|r| r.4).sum::<f64>() / nr as f64;

    OracleReport {
        entities: n_entities,
        triples: triples.len(),
        frob_s: frob(&s),
        frob_s_prime: frob(&s_prime),
        s,
        s_prime,
        per_relation,
        relations,
        mu_mean,
        z_mean,
    }
}
