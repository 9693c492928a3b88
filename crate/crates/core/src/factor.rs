//! DistMult and ComplEx factorization models.
//!
//! Both score a triple through a trilinear form over entity and relation
//! vectors: DistMult over reals (symmetric in head/tail by construction),
//! ComplEx over complex vectors stored as `[re_0..re_d, im_0..im_d]`
//! (asymmetric, via the conjugated tail). Training minimizes a pointwise
//! logistic loss on positives and uniformly corrupted negatives, with
//! per-row Adam states.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::seed::{stream_rng, Purpose};
use crate::shallow::EmbeddingTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    DistMult,
    Complex,
}

impl FactorKind {
    pub fn name(self) -> &'static str {
        match self {
            FactorKind::DistMult => "distmult",
            FactorKind::Complex => "complex",
        }
    }

    /// Reals stored per embedding row.
    fn width(self, dim: usize) -> usize {
        match self {
            FactorKind::DistMult => dim,
            FactorKind::Complex => 2 * dim,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorConfig {
    pub dim: usize,
    pub epochs: usize,
    /// Corrupted negatives per positive.
    pub n_neg: usize,
    pub learning_rate: f64,
    /// Optional L2 weight applied to touched rows; 0 disables.
    pub l2: f64,
    pub seed: u64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            dim: 200,
            epochs: 50,
            n_neg: 10,
            learning_rate: 1e-3,
            l2: 0.0,
            seed: 0,
        }
    }
}

impl FactorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be at least 1".into()));
        }
        if self.n_neg == 0 {
            return Err(Error::Config("n_neg must be at least 1".into()));
        }
        Ok(())
    }
}

/// Σ_i h_i r_i t_i. Each term associates as (h·t)·r so that swapping head
/// and tail is bit-exact, not merely algebraic.
pub fn score_distmult(h: &[f64], r: &[f64], t: &[f64]) -> Result<f64> {
    check_dims(h, r, t)?;
    Ok(h.iter()
        .zip(r)
        .zip(t)
        .map(|((&a, &b), &c)| (a * c) * b)
        .sum())
}

/// Re(Σ_i h_i r_i conj(t_i)) over `[re; im]`-packed complex vectors.
pub fn score_complex(h: &[f64], r: &[f64], t: &[f64]) -> Result<f64> {
    check_dims(h, r, t)?;
    if h.len() % 2 != 0 {
        return Err(Error::Config(
            "complex vectors carry 2d reals; odd length given".into(),
        ));
    }
    let d = h.len() / 2;
    let (hr, hi) = h.split_at(d);
    let (rr, ri) = r.split_at(d);
    let (tr, ti) = t.split_at(d);
    let mut sum = 0.0;
    for i in 0..d {
        // Re((a+bi)(c+di)(e-fi)) for h=a+bi, r=c+di, t=e+fi
        sum += tr[i] * (hr[i] * rr[i] - hi[i] * ri[i]) + ti[i] * (hr[i] * ri[i] + hi[i] * rr[i]);
    }
    Ok(sum)
}

fn check_dims(h: &[f64], r: &[f64], t: &[f64]) -> Result<()> {
    if h.len() != r.len() || h.len() != t.len() {
        return Err(Error::DimMismatch {
            left: h.len(),
            right: r.len().max(t.len()),
        });
    }
    Ok(())
}

/// Score gradients for one triple, to be scaled by the upstream
/// d loss / d score.
pub fn score_gradients(
    kind: FactorKind,
    h: &[f64],
    r: &[f64],
    t: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    match kind {
        FactorKind::DistMult => {
            let n = h.len();
            let mut dh = vec![0.0; n];
            let mut dr = vec![0.0; n];
            let mut dt = vec![0.0; n];
            for i in 0..n {
                dh[i] = r[i] * t[i];
                dr[i] = h[i] * t[i];
                dt[i] = h[i] * r[i];
            }
            (dh, dr, dt)
        }
        FactorKind::Complex => {
            let d = h.len() / 2;
            let mut dh = vec![0.0; 2 * d];
            let mut dr = vec![0.0; 2 * d];
            let mut dt = vec![0.0; 2 * d];
            for i in 0..d {
                let (a, b) = (h[i], h[d + i]);
                let (c, dd) = (r[i], r[d + i]);
                let (e, f) = (t[i], t[d + i]);
                dh[i] = c * e + dd * f;
                dh[d + i] = -dd * e + c * f;
                dr[i] = a * e + b * f;
                dr[d + i] = -b * e + a * f;
                dt[i] = a * c - b * dd;
                dt[d + i] = a * dd + b * c;
            }
            (dh, dr, dt)
        }
    }
}

/// Pointwise logistic loss and its score gradient:
/// −log σ(s) for positives, −log(1 − σ(s)) for negatives.
pub fn logistic_loss(score: f64, positive: bool) -> (f64, f64) {
    let y = if positive { 1.0 } else { 0.0 };
    // softplus(s) − y·s, computed stably
    let loss = score.max(0.0) + (-score.abs()).exp().ln_1p() - y * score;
    let sigma = 1.0 / (1.0 + (-score).exp());
    (loss, sigma - y)
}

/// Adam accumulator for one parameter block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            learning_rate,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimMismatch {
            left: params.len(),
            right: grads.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Entity and relation embeddings for one factorization model.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub kind: FactorKind,
    pub dim: usize,
    n_entities: usize,
    n_relations: usize,
    entity: Vec<f64>,
    relation: Vec<f64>,
}

impl FactorModel {
    /// Xavier-style uniform initialization in ±1/sqrt(dim).
    pub fn init(kind: FactorKind, dim: usize, kg: &KnowledgeGraph, rng: &mut ChaCha8Rng) -> Self {
        let w = kind.width(dim);
        let bound = 1.0 / (dim as f64).sqrt();
        let n_entities = kg.entity_count();
        let n_relations = kg.relation_count();
        let mut entity = vec![0.0; n_entities * w];
        let mut relation = vec![0.0; n_relations * w];
        for v in entity.iter_mut().chain(relation.iter_mut()) {
            *v = rng.random_range(-bound..bound);
        }
        FactorModel {
            kind,
            dim,
            n_entities,
            n_relations,
            entity,
            relation,
        }
    }

    fn width(&self) -> usize {
        self.kind.width(self.dim)
    }

    pub fn entity_count(&self) -> usize {
        self.n_entities
    }

    pub fn relation_count(&self) -> usize {
        self.n_relations
    }

    pub fn entity_row(&self, e: EntityId) -> &[f64] {
        let w = self.width();
        &self.entity[e.0 as usize * w..(e.0 as usize + 1) * w]
    }

    pub fn relation_row(&self, r: RelationId) -> &[f64] {
        let w = self.width();
        &self.relation[r.0 as usize * w..(r.0 as usize + 1) * w]
    }

    fn entity_row_mut(&mut self, e: EntityId) -> &mut [f64] {
        let w = self.width();
        &mut self.entity[e.0 as usize * w..(e.0 as usize + 1) * w]
    }

    fn relation_row_mut(&mut self, r: RelationId) -> &mut [f64] {
        let w = self.width();
        &mut self.relation[r.0 as usize * w..(r.0 as usize + 1) * w]
    }

    pub fn score_ids(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        let score = match self.kind {
            FactorKind::DistMult => {
                score_distmult(self.entity_row(h), self.relation_row(r), self.entity_row(t))
            }
            FactorKind::Complex => {
                score_complex(self.entity_row(h), self.relation_row(r), self.entity_row(t))
            }
        };
        score.expect("model rows share one width")
    }

    pub fn score_triple(&self, t: &Triple) -> f64 {
        self.score_ids(t.head, t.rel, t.tail)
    }

    /// View the entity vectors as an [`EmbeddingTable`], marking as present
    /// exactly the entities that occur in `corpus`. ComplEx rows concatenate
    /// real and imaginary parts.
    pub fn entity_table(&self, corpus: &[Triple]) -> Result<EmbeddingTable> {
        let mut seen: Vec<EntityId> = corpus.iter().flat_map(|t| [t.head, t.tail]).collect();
        seen.sort_unstable();
        seen.dedup();
        let rows: Vec<(EntityId, Vec<f64>)> = seen
            .into_iter()
            .map(|e| (e, self.entity_row(e).to_vec()))
            .collect();
        EmbeddingTable::from_rows(self.n_entities, &rows)
    }

    /// Checkpoint: fixed header then packed little-endian f64s.
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut emit = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        emit(b"KGFM")?;
        emit(&1u32.to_le_bytes())?;
        emit(&[match self.kind {
            FactorKind::DistMult => 0u8,
            FactorKind::Complex => 1u8,
        }])?;
        emit(&(self.dim as u64).to_le_bytes())?;
        emit(&(self.n_entities as u64).to_le_bytes())?;
        emit(&(self.n_relations as u64).to_le_bytes())?;
        for v in self.entity.iter().chain(self.relation.iter()) {
            emit(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FactorModel> {
        let malformed = |reason: &str| Error::MalformedFile {
            path: path.to_owned(),
            reason: reason.to_owned(),
        };
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(f);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != b"KGFM" {
            return Err(malformed("bad magic"));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(|e| Error::io(path, e))?;
        if u32::from_le_bytes(u32buf) != 1 {
            return Err(malformed("unsupported version"));
        }
        let mut kind_byte = [0u8; 1];
        r.read_exact(&mut kind_byte)
            .map_err(|e| Error::io(path, e))?;
        let kind = match kind_byte[0] {
            0 => FactorKind::DistMult,
            1 => FactorKind::Complex,
            _ => return Err(malformed("unknown model kind")),
        };
        let read_u64 = |r: &mut BufReader<std::fs::File>| -> Result<u64> {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            Ok(u64::from_le_bytes(buf))
        };
        let dim = read_u64(&mut r)? as usize;
        let n_entities = read_u64(&mut r)? as usize;
        let n_relations = read_u64(&mut r)? as usize;
        if dim == 0 {
            return Err(malformed("zero dimension"));
        }
        let w = kind.width(dim);
        let read_block = |r: &mut BufReader<std::fs::File>, len: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(len);
            let mut buf = [0u8; 8];
            for _ in 0..len {
                r.read_exact(&mut buf).map_err(|_| malformed("truncated parameter block"))?;
                out.push(f64::from_le_bytes(buf));
            }
            Ok(out)
        };
        let entity = read_block(&mut r, n_entities * w)?;
        let relation = read_block(&mut r, n_relations * w)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(|e| Error::io(path, e))?;
        if !rest.is_empty() {
            return Err(malformed("trailing bytes after parameter block"));
        }
        Ok(FactorModel {
            kind,
            dim,
            n_entities,
            n_relations,
            entity,
            relation,
        })
    }
}

/// Train a factorization model on `corpus`. Each positive takes one
/// logistic update, followed by `n_neg` corrupted negatives (head or tail
/// replaced uniformly, resampled while the corruption is asserted in `kg`).
/// Deterministic for a fixed config.
pub fn train_factor(
    corpus: &[Triple],
    kg: &KnowledgeGraph,
    kind: FactorKind,
    cfg: &FactorConfig,
) -> Result<FactorModel> {
    let mut rng = stream_rng(cfg.seed, 0, 0, Purpose::TrainFactor);
    train_factor_with_rng(corpus, kg, kind, cfg, &mut rng)
}

/// [`train_factor`] with a caller-keyed stream.
pub fn train_factor_with_rng(
    corpus: &[Triple],
    kg: &KnowledgeGraph,
    kind: FactorKind,
    cfg: &FactorConfig,
    rng: &mut ChaCha8Rng,
) -> Result<FactorModel> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("training corpus"));
    }
    let mut model = FactorModel::init(kind, cfg.dim, kg, rng);
    let w = model.width();
    let mut entity_states: Vec<AdamState> = (0..model.n_entities)
        .map(|_| AdamState::new(w, cfg.learning_rate))
        .collect();
    let mut relation_states: Vec<AdamState> = (0..model.n_relations)
        .map(|_| AdamState::new(w, cfg.learning_rate))
        .collect();

    let n_entities = kg.entity_count() as u32;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for &idx in &order {
            let pos = corpus[idx];
            apply_example(
                &mut model,
                &mut entity_states,
                &mut relation_states,
                &pos,
                true,
                cfg.l2,
            );
            for _ in 0..cfg.n_neg {
                let mut corrupted = pos;
                // Resample while the corruption is a known positive; bounded
                // so dense relations cannot stall the epoch.
                let mut ok = false;
                for _ in 0..100 {
                    corrupted = pos;
                    let replacement = EntityId(rng.random_range(0..n_entities));
                    if rng.random::<bool>() {
                        corrupted.head = replacement;
                    } else {
                        corrupted.tail = replacement;
                    }
                    if !kg.contains(&corrupted) {
                        ok = true;
                        break;
                    }
                }
                if ok {
                    apply_example(
                        &mut model,
                        &mut entity_states,
                        &mut relation_states,
                        &corrupted,
                        false,
                        cfg.l2,
                    );
                }
            }
        }
    }
    Ok(model)
}

fn apply_example(
    model: &mut FactorModel,
    entity_states: &mut [AdamState],
    relation_states: &mut [AdamState],
    triple: &Triple,
    positive: bool,
    l2: f64,
) {
    let score = model.score_triple(triple);
    let (_, dscore) = logistic_loss(score, positive);
    let (mut dh, mut dr, mut dt) = score_gradients(
        model.kind,
        model.entity_row(triple.head),
        model.relation_row(triple.rel),
        model.entity_row(triple.tail),
    );
    for g in dh.iter_mut() {
        *g *= dscore;
    }
    for g in dr.iter_mut() {
        *g *= dscore;
    }
    for g in dt.iter_mut() {
        *g *= dscore;
    }
    if l2 > 0.0 {
        for (g, p) in dh.iter_mut().zip(model.entity_row(triple.head).to_vec()) {
            *g += l2 * p;
        }
        for (g, p) in dr.iter_mut().zip(model.relation_row(triple.rel).to_vec()) {
            *g += l2 * p;
        }
        for (g, p) in dt.iter_mut().zip(model.entity_row(triple.tail).to_vec()) {
            *g += l2 * p;
        }
    }
    adam_step(
        model.entity_row_mut(triple.head),
        &dh,
        &mut entity_states[triple.head.0 as usize],
    )
    .expect("shapes fixed at init");
    adam_step(
        model.relation_row_mut(triple.rel),
        &dr,
        &mut relation_states[triple.rel.0 as usize],
    )
    .expect("shapes fixed at init");
    adam_step(
        model.entity_row_mut(triple.tail),
        &dt,
        &mut entity_states[triple.tail.0 as usize],
    )
    .expect("shapes fixed at init");
}
