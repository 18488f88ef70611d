//! TransE: score a fact by `‖h + r − t‖` and train with the margin ranking
//! loss `max(0, γ + d(pos) − d(neg))` against filtered corrupted facts.
//!
//! Training is plain mini-batch SGD on the summed hinge loss. Gradients for a
//! batch are taken at the parameters as they stood when the batch began, so
//! the update order inside a batch does not matter. Entity vectors are
//! projected back to the unit sphere after every batch when
//! `normalize_entities` is set. With `parallel == false` the loss history is
//! bit-reproducible for a fixed seed; the parallel path sums per-chunk
//! gradients and is not guaranteed to match it bit for bit.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kgraph::{NegativeSampler, Triple, TripleStore};
use crate::vectors::VectorTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            other => Err(Error::Config(format!("unknown norm `{other}`"))),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TransEConfig {
    pub dim: usize,
    pub margin: f64,
    pub norm: Norm,
    pub learning_rate: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    pub normalize_entities: bool,
    pub sampler: NegativeSampler,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for TransEConfig {
    fn default() -> Self {
        TransEConfig {
            dim: 384,
            margin: 1.0,
            norm: Norm::L2,
            learning_rate: 0.01,
            epochs: 100,
            negatives_per_positive: 1,
            batch_size: 128,
            normalize_entities: true,
            sampler: NegativeSampler::default(),
            seed: 0,
            parallel: false,
        }
    }
}

impl TransEConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("transe: {m}")));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad("margin must be a non-negative number");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Entity and relation vectors of one graph, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(num_entities: usize, num_relations: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            entities: vec![0.0; num_entities * dim],
            relations: vec![0.0; num_relations * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len() / self.dim
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len() / self.dim
    }

    pub fn entity(&self, i: usize) -> &[f64] {
        &self.entities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entity_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn relation(&self, r: usize) -> &[f64] {
        &self.relations[r * self.dim..(r + 1) * self.dim]
    }

    pub fn relation_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.relations[r * self.dim..(r + 1) * self.dim]
    }

    /// Flat view of every parameter: entities first, then relations.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.entities.iter().chain(self.relations.iter()).copied()
    }

    pub fn param_mut(&mut self, flat: usize) -> &mut f64 {
        let ne = self.entities.len();
        if flat < ne {
            &mut self.entities[flat]
        } else {
            &mut self.relations[flat - ne]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(f64::is_finite)
    }

    pub fn entity_vectors(&self, store: &TripleStore) -> VectorTable {
        let mut t = VectorTable::new(self.dim);
        for (i, key) in store.entities().keys().iter().enumerate() {
            t.push_f64(key, self.entity(i)).expect("dictionary keys are unique");
        }
        t
    }

    pub fn relation_vectors(&self, store: &TripleStore) -> VectorTable {
        let mut t = VectorTable::new(self.dim);
        for (i, key) in store.relations().keys().iter().enumerate() {
            t.push_f64(key, self.relation(i)).expect("dictionary keys are unique");
        }
        t
    }
}

fn l2_normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Uniform `[−6/√d, 6/√d]` initialisation; relation vectors are then scaled
/// to unit L2 norm.
pub fn init_embeddings(config: &TransEConfig, store: &TripleStore) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_with_rng(config.dim, store, &mut rng)
}

fn init_with_rng<R: Rng>(dim: usize, store: &TripleStore, rng: &mut R) -> EmbeddingTable {
    let bound = 6.0 / (dim as f64).sqrt();
    let mut table = EmbeddingTable::zeros(store.num_entities(), store.num_relations(), dim);
    for x in table.entities.iter_mut().chain(table.relations.iter_mut()) {
        *x = rng.random_range(-bound..=bound);
    }
    for r in 0..table.num_relations() {
        l2_normalize(table.relation_mut(r));
    }
    table
}

pub fn distance(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> f64 {
    let diffs = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t);
    match norm {
        Norm::L1 => diffs.map(f64::abs).sum(),
        Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
    }
}

pub fn score(h: usize, r: usize, t: usize, table: &EmbeddingTable, norm: Norm) -> f64 {
    distance(table.entity(h), table.relation(r), table.entity(t), norm)
}

pub fn score_triple(t: &Triple, table: &EmbeddingTable, norm: Norm) -> f64 {
    score(t.head, t.relation, t.tail, table, norm)
}

pub fn margin_loss(pos_score: f64, neg_score: f64, margin: f64) -> f64 {
    (margin + pos_score - neg_score).max(0.0)
}

/// Sparse gradient keyed by row; `BTreeMap` keeps application order fixed.
#[derive(Debug, Clone, Default)]
pub struct Gradient {
    pub entities: BTreeMap<usize, Vec<f64>>,
    pub relations: BTreeMap<usize, Vec<f64>>,
}

impl Gradient {
    fn add(row: &mut BTreeMap<usize, Vec<f64>>, i: usize, g: &[f64], sign: f64, dim: usize) {
        let acc = row.entry(i).or_insert_with(|| vec![0.0; dim]);
        acc.iter_mut().zip(g).for_each(|(a, g)| *a += sign * g);
    }

    fn merge(&mut self, other: Gradient) {
        for (dst, src) in [
            (&mut self.entities, other.entities),
            (&mut self.relations, other.relations),
        ] {
            for (i, g) in src {
                match dst.get_mut(&i) {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, g)| *a += g),
                    None => {
                        dst.insert(i, g);
                    }
                }
            }
        }
    }

    /// Dense copy in the flat layout of [`EmbeddingTable::params`].
    pub fn to_dense(&self, table: &EmbeddingTable) -> Vec<f64> {
        let d = table.dim;
        let mut out = vec![0.0; table.entities.len() + table.relations.len()];
        for (&i, g) in &self.entities {
            out[i * d..(i + 1) * d].copy_from_slice(g);
        }
        let off = table.entities.len();
        for (&r, g) in &self.relations {
            out[off + r * d..off + (r + 1) * d].copy_from_slice(g);
        }
        out
    }
}

/// (Sub)gradient of `‖diff‖` w.r.t. `diff`; zero where the norm is not
/// differentiable.
fn norm_grad(diff: &[f64], norm: Norm, out: &mut [f64]) {
    match norm {
        Norm::L1 => {
            for (o, d) in out.iter_mut().zip(diff) {
                *o = if *d > 0.0 {
                    1.0
                } else if *d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
            }
        }
        Norm::L2 => {
            let n = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (o, d) in out.iter_mut().zip(diff) {
                *o = if n > 0.0 { d / n } else { 0.0 };
            }
        }
    }
}

fn accumulate_fact(table: &EmbeddingTable, t: &Triple, norm: Norm, sign: f64, grad: &mut Gradient) {
    let d = table.dim;
    let diff: Vec<f64> = table
        .entity(t.head)
        .iter()
        .zip(table.relation(t.relation))
        .zip(table.entity(t.tail))
        .map(|((h, r), t)| h + r - t)
        .collect();
    let mut g = vec![0.0; d];
    norm_grad(&diff, norm, &mut g);
    Gradient::add(&mut grad.entities, t.head, &g, sign, d);
    Gradient::add(&mut grad.relations, t.relation, &g, sign, d);
    Gradient::add(&mut grad.entities, t.tail, &g, -sign, d);
}

/// Summed hinge loss over `(positive, negative)` pairs.
pub fn pairs_loss(table: &EmbeddingTable, pairs: &[(Triple, Triple)], margin: f64, norm: Norm) -> f64 {
    pairs
        .iter()
        .map(|(p, n)| margin_loss(score_triple(p, table, norm), score_triple(n, table, norm), margin))
        .sum()
}

/// Summed hinge loss and its gradient. The subgradient at the hinge kink
/// (loss exactly zero) is taken as zero.
pub fn pairs_loss_and_grad(
    table: &EmbeddingTable,
    pairs: &[(Triple, Triple)],
    margin: f64,
    norm: Norm,
) -> (f64, Gradient) {
    let mut grad = Gradient::default();
    let mut total = 0.0;
    for (p, n) in pairs {
        let loss = margin_loss(score_triple(p, table, norm), score_triple(n, table, norm), margin);
        if loss > 0.0 {
            total += loss;
            accumulate_fact(table, p, norm, 1.0, &mut grad);
            accumulate_fact(table, n, norm, -1.0, &mut grad);
        }
    }
    (total, grad)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub table: EmbeddingTable,
    /// Mean hinge loss per (positive, negative) pair, one entry per epoch.
    pub loss_history: Vec<f64>,
    /// Facts skipped because no negative could be drawn.
    pub skipped: usize,
}

pub fn train(store: &TripleStore, config: &TransEConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if store.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut table = init_with_rng(config.dim, store, &mut rng);
    if config.normalize_entities {
        for i in 0..table.num_entities() {
            l2_normalize(table.entity_mut(i));
        }
    }

    let mut order: Vec<usize> = (0..store.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut skipped = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut epoch_loss, mut epoch_pairs) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut pairs = Vec::with_capacity(batch.len() * config.negatives_per_positive);
            for &i in batch {
                let pos = store.triples()[i];
                for _ in 0..config.negatives_per_positive {
                    match config.sampler.corrupt(pos, store, &mut rng) {
                        Ok(neg) => pairs.push((pos, neg)),
                        Err(Error::ExhaustedRetries { .. }) => skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
            let (loss, grad) = if config.parallel {
                parallel_loss_and_grad(&table, &pairs, config.margin, config.norm)
            } else {
                pairs_loss_and_grad(&table, &pairs, config.margin, config.norm)
            };
            epoch_loss += loss;
            epoch_pairs += pairs.len();
            apply(&mut table, &grad, config);
        }
        let mean = if epoch_pairs > 0 {
            epoch_loss / epoch_pairs as f64
        } else {
            0.0
        };
        if !mean.is_finite() || !table.is_finite() {
            return Err(Error::DivergedLoss {
                epoch: epoch + 1,
                value: mean,
            });
        }
        history.push(mean);
    }
    Ok(TrainOutcome {
        table,
        loss_history: history,
        skipped,
    })
}

fn parallel_loss_and_grad(
    table: &EmbeddingTable,
    pairs: &[(Triple, Triple)],
    margin: f64,
    norm: Norm,
) -> (f64, Gradient) {
    let chunk = pairs.len().div_ceil(rayon::current_num_threads().max(1)).max(1);
    let parts: Vec<(f64, Gradient)> = pairs
        .par_chunks(chunk)
        .map(|c| pairs_loss_and_grad(table, c, margin, norm))
        .collect();
    let mut total = 0.0;
    let mut grad = Gradient::default();
    for (l, g) in parts {
        total += l;
        grad.merge(g);
    }
    (total, grad)
}

fn apply(table: &mut EmbeddingTable, grad: &Gradient, config: &TransEConfig) {
    let lr = config.learning_rate;
    for (&i, g) in &grad.entities {
        let row = table.entity_mut(i);
        row.iter_mut().zip(g).for_each(|(x, g)| *x -= lr * g);
        if config.normalize_entities {
            l2_normalize(row);
        }
    }
    for (&r, g) in &grad.relations {
        table
            .relation_mut(r)
            .iter_mut()
            .zip(g)
            .for_each(|(x, g)| *x -= lr * g);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPredictionReport {
    pub queries: usize,
    pub mean_rank: f64,
    pub hits_at_1: f64,
    pub hits_at_10: f64,
}

/// Filtered tail prediction. Every other known positive `(h, r, t')` from
/// the store or from `held_out` is removed from the candidate list; ties
/// are ranked pessimistically (the true tail goes after every equal score).
pub fn link_prediction_eval(
    table: &EmbeddingTable,
    store: &TripleStore,
    held_out: &[Triple],
    norm: Norm,
) -> LinkPredictionReport {
    let held: HashSet<Triple> = held_out.iter().copied().collect();
    let ranks: Vec<usize> = held_out
        .par_iter()
        .map(|q| {
            let truth = score_triple(q, table, norm);
            let mut rank = 1;
            for c in 0..table.num_entities() {
                if c == q.tail {
                    continue;
                }
                let cand = Triple::new(q.head, q.relation, c);
                if store.is_positive(&cand) || held.contains(&cand) {
                    continue;
                }
                if score_triple(&cand, table, norm) <= truth {
                    rank += 1;
                }
            }
            rank
        })
        .collect();
    let n = ranks.len().max(1) as f64;
    LinkPredictionReport {
        queries: ranks.len(),
        mean_rank: ranks.iter().sum::<usize>() as f64 / n,
        hits_at_1: ranks.iter().filter(|&&r| r <= 1).count() as f64 / n,
        hits_at_10: ranks.iter().filter(|&&r| r <= 10).count() as f64 / n,
    }
}
