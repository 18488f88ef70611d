//! Recall experiment: rank a known-relevant holdout from a seed set, sort
//! the holdout ranks, and compare aggregation methods by the area under the
//! sorted log10-rank curve. The ideal curve is `1, 2, ..., n`.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::retrieval::{rank_targets, Aggregation, SeedSet};
use crate::vectors::VectorTable;

#[derive(Debug, Clone, PartialEq)]
pub struct RankCurve {
    pub method: String,
    pub ranks: Vec<usize>,
    pub log_ranks: Vec<f64>,
}

impl RankCurve {
    /// Sorts `ranks` ascending and takes base-10 logs.
    pub fn from_ranks(method: impl Into<String>, mut ranks: Vec<usize>) -> Self {
        ranks.sort_unstable();
        let log_ranks = ranks.iter().map(|&r| (r as f64).log10()).collect();
        RankCurve {
            method: method.into(),
            ranks,
            log_ranks,
        }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

pub fn baseline_curve(n: usize) -> RankCurve {
    RankCurve::from_ranks("baseline", (1..=n).collect())
}

/// Trapezoidal area under `log_ranks` over positions `1..=n` with unit
/// spacing. A single point has zero width; its value is returned instead.
pub fn auc(curve: &RankCurve) -> f64 {
    match curve.log_ranks.as_slice() {
        [] => 0.0,
        [only] => *only,
        ys => ys.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum(),
    }
}

pub fn recall_experiment(
    seeds: &SeedSet,
    holdout: &[String],
    universe: &VectorTable,
    methods: &[Aggregation],
) -> Result<Vec<RankCurve>> {
    let missing: Vec<String> = holdout.iter().filter(|h| !universe.contains(h)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::HoldoutNotInUniverse(missing));
    }
    if let Some(h) = holdout.iter().find(|h| seeds.contains(h)) {
        return Err(Error::Invalid(format!("holdout id `{h}` is also a seed")));
    }
    let wanted: HashSet<&str> = holdout.iter().map(String::as_str).collect();
    methods
        .par_iter()
        .map(|&m| {
            let ranking = rank_targets(seeds, universe, m)?;
            let ranks = ranking
                .results
                .iter()
                .filter(|r| wanted.contains(r.patent_id.as_str()))
                .map(|r| r.rank)
                .collect();
            Ok(RankCurve::from_ranks(m.name(), ranks))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodComparison {
    /// `(method, auc)` by ascending AUC; equal AUCs keep input order.
    pub order: Vec<(String, f64)>,
    pub winner: String,
    pub baseline_auc: f64,
}

pub fn compare_methods(curves: &[RankCurve]) -> Result<MethodComparison> {
    if curves.len() < 2 {
        return Err(Error::Invalid("need at least two curves to compare".into()));
    }
    let n = curves[0].len();
    if let Some(c) = curves.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch(n, c.len()));
    }
    let mut order: Vec<(String, f64)> = curves.iter().map(|c| (c.method.clone(), auc(c))).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(MethodComparison {
        winner: order[0].0.clone(),
        order,
        baseline_auc: auc(&baseline_curve(n.max(1))),
    })
}

/// `method\tindex\trank\tlog10_rank`, indices 1-based.
pub fn curves_tsv(curves: &[RankCurve]) -> String {
    let mut s = String::from("method\tindex\trank\tlog10_rank\n");
    for c in curves {
        for (i, (r, l)) in c.ranks.iter().zip(&c.log_ranks).enumerate() {
            writeln!(s, "{}\t{}\t{}\t{:.6}", c.method, i + 1, r, l).unwrap();
        }
    }
    s
}

/// `method\tauc`, in the order given.
pub fn auc_tsv(curves: &[RankCurve]) -> String {
    let mut s = String::from("method\tauc\n");
    for c in curves {
        writeln!(s, "{}\t{:.6}", c.method, auc(c)).unwrap();
    }
    s
}
