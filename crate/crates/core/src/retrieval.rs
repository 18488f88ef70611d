//! Seed-set retrieval: every candidate is scored by aggregating its cosine
//! similarity to each seed, then ranked.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tsv;
use crate::vectors::VectorTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregation {
    Mean,
    Median,
    Min,
    Max,
}

impl Aggregation {
    pub const ALL: [Aggregation; 4] = [
        Aggregation::Mean,
        Aggregation::Median,
        Aggregation::Min,
        Aggregation::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Median => "median",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            "min" => Ok(Aggregation::Min),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::Config(format!("unknown aggregation `{other}`"))),
        }
    }
}

pub fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            found: v.len(),
            context: "cosine".into(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector(String::new()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn aggregate(scores: &[f64], method: Aggregation) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(match method {
        Aggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        Aggregation::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Median => {
            let mut s = scores.to_vec();
            s.sort_by(f64::total_cmp);
            let n = s.len();
            if n % 2 == 1 {
                s[n / 2]
            } else {
                (s[n / 2 - 1] + s[n / 2]) / 2.0
            }
        }
    })
}

/// Non-empty, duplicate-free, ordered set of seed patent ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet(Vec<String>);

impl SeedSet {
    pub fn new(ids: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for id in ids {
            let id = id.into();
            if !seen.insert(id.clone()) {
                return Err(Error::Invalid(format!("duplicate seed `{id}`")));
            }
            out.push(id);
        }
        if out.is_empty() {
            return Err(Error::Invalid("seed set is empty".into()));
        }
        Ok(SeedSet(out))
    }

    pub fn ids(&self) -> &[String] {
        &self.0
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.iter().any(|s| s == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub patent_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub results: Vec<RankedResult>,
    /// Candidates with a zero vector; scored `-inf` and placed last.
    pub zero_vectors: usize,
}

/// Ranks every universe entry that is not a seed. Sorted by descending score,
/// ties broken by ascending patent id, ranks `1..=M`.
pub fn rank_targets(seeds: &SeedSet, universe: &VectorTable, method: Aggregation) -> Result<Ranking> {
    rank_candidates(seeds, universe, method, |_| true)
}

/// As [`rank_targets`], restricted to candidates accepted by `keep`.
pub fn rank_candidates(
    seeds: &SeedSet,
    universe: &VectorTable,
    method: Aggregation,
    keep: impl Fn(&str) -> bool + Sync,
) -> Result<Ranking> {
    let mut seed_vecs = Vec::with_capacity(seeds.ids().len());
    for id in seeds.ids() {
        let v = universe.get(id).ok_or_else(|| Error::UnknownSeed(id.clone()))?;
        let n = norm(v);
        if n == 0.0 {
            return Err(Error::ZeroVector(id.clone()));
        }
        seed_vecs.push((v, n));
    }
    let seed_ids: HashSet<&str> = seeds.ids().iter().map(String::as_str).collect();

    let scored: Vec<(usize, f64)> = (0..universe.len())
        .into_par_iter()
        .filter(|&i| {
            let k = universe.keys()[i].as_str();
            !seed_ids.contains(k) && keep(k)
        })
        .map(|i| {
            let v = universe.row(i);
            let n = norm(v);
            if n == 0.0 {
                return (i, f64::NEG_INFINITY);
            }
            let cos: Vec<f64> = seed_vecs
                .iter()
                .map(|(s, ns)| (dot(v, s) / (n * ns)).clamp(-1.0, 1.0))
                .collect();
            (i, aggregate(&cos, method).expect("seed set is non-empty"))
        })
        .collect();

    let zero_vectors = scored.iter().filter(|(_, s)| *s == f64::NEG_INFINITY).count();
    let mut scored = scored;
    let keys = universe.keys();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| keys[a.0].cmp(&keys[b.0])));
    let results = scored
        .into_iter()
        .enumerate()
        .map(|(r, (i, score))| RankedResult {
            patent_id: keys[i].clone(),
            score,
            rank: r + 1,
        })
        .collect();
    Ok(Ranking {
        results,
        zero_vectors,
    })
}

/// First `min(k, M)` results, optionally cut further at a score threshold.
pub fn retrieve_top_k(
    seeds: &SeedSet,
    universe: &VectorTable,
    method: Aggregation,
    k: usize,
    min_score: Option<f64>,
) -> Result<Vec<RankedResult>> {
    if k == 0 {
        return Err(Error::Invalid("k must be >= 1".into()));
    }
    let ranking = rank_targets(seeds, universe, method)?;
    Ok(ranking
        .results
        .into_iter()
        .take(k)
        .take_while(|r| min_score.is_none_or(|t| r.score >= t))
        .collect())
}

pub const RANKED_HEADER: &str = "rank\tpatent_id\tscore";

pub fn ranked_to_tsv(results: &[RankedResult]) -> String {
    let mut s = format!("{RANKED_HEADER}\n");
    for r in results {
        s.push_str(&format!("{}\t{}\t{:.6}\n", r.rank, r.patent_id, r.score));
    }
    s
}

pub fn write_ranked(results: &[RankedResult], path: &Path) -> Result<()> {
    let mut w = tsv::create(path)?;
    w.write_all(ranked_to_tsv(results).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Patent ids from a ranked TSV, in rank order.
pub fn read_ranked_ids(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (line, text) in tsv::read_lines(path)? {
        if text.is_empty() || text == RANKED_HEADER {
            continue;
        }
        let id = text.split('\t').nth(1).ok_or_else(|| Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason: "expected rank<TAB>patent_id<TAB>score".into(),
        })?;
        out.push(id.to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn universe(rows: &[(&str, &[f32])]) -> VectorTable {
        let mut t = VectorTable::new(rows[0].1.len());
        for (k, v) in rows {
            t.push(k, v).unwrap();
        }
        t
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn aggregate_examples() {
        let s = [0.2, 0.4, 0.6];
        assert!((aggregate(&s, Aggregation::Mean).unwrap() - 0.4).abs() < 1e-15);
        assert!((aggregate(&[0.2, 0.4, 0.6, 0.8], Aggregation::Median).unwrap() - 0.5).abs() < 1e-15);
        for m in Aggregation::ALL {
            assert_eq!(aggregate(&[0.3], m).unwrap(), 0.3);
        }
        assert!(matches!(aggregate(&[], Aggregation::Max), Err(Error::EmptyScores)));
    }

    #[test]
    fn seeds_only_universe_is_empty() {
        let u = universe(&[("P1", &[1.0, 0.0]), ("P2", &[0.0, 1.0])]);
        let seeds = SeedSet::new(["P1", "P2"]).unwrap();
        assert!(rank_targets(&seeds, &u, Aggregation::Mean).unwrap().results.is_empty());
    }

    #[test]
    fn one_seed_two_targets() {
        // cos(S, T1) = 0.9, cos(S, T2) = 0.1
        let t1 = [0.9f32, (1.0f32 - 0.81).sqrt()];
        let t2 = [0.1f32, (1.0f32 - 0.01).sqrt()];
        let u = universe(&[("S", &[1.0, 0.0]), ("T2", &t2), ("T1", &t1)]);
        let r = rank_targets(&SeedSet::new(["S"]).unwrap(), &u, Aggregation::Mean).unwrap();
        let ids: Vec<(&str, usize)> = r.results.iter().map(|x| (x.patent_id.as_str(), x.rank)).collect();
        assert_eq!(ids, [("T1", 1), ("T2", 2)]);
    }

    #[test]
    fn ties_and_zero_vectors() {
        let u = universe(&[
            ("S", &[1.0, 0.0]),
            ("Z", &[0.0, 0.0]),
            ("B", &[1.0, 1.0]),
            ("A", &[2.0, 2.0]),
        ]);
        let r = rank_targets(&SeedSet::new(["S"]).unwrap(), &u, Aggregation::Max).unwrap();
        let ids: Vec<&str> = r.results.iter().map(|x| x.patent_id.as_str()).collect();
        assert_eq!(ids, ["A", "B", "Z"]);
        assert_eq!(r.zero_vectors, 1);
        assert_eq!(r.results[2].score, f64::NEG_INFINITY);
    }

    #[test]
    fn top_k_truncates() {
        let rows: Vec<(String, Vec<f32>)> =
            (0..11).map(|i| (format!("P{i:02}"), vec![1.0, i as f32 * 0.1])).collect();
        let mut u = VectorTable::new(2);
        for (k, v) in &rows {
            u.push(k, v).unwrap();
        }
        let seeds = SeedSet::new(["P00"]).unwrap();
        let top = retrieve_top_k(&seeds, &u, Aggregation::Mean, 3, None).unwrap();
        assert_eq!(top.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3]);
        assert_eq!(top[0].patent_id, "P01");
        assert_eq!(retrieve_top_k(&seeds, &u, Aggregation::Mean, 50, None).unwrap().len(), 10);
        let cut = retrieve_top_k(&seeds, &u, Aggregation::Mean, 50, Some(0.99)).unwrap();
        assert!(cut.iter().all(|r| r.score >= 0.99) && !cut.is_empty());
    }

    #[test]
    fn unknown_seed() {
        let u = universe(&[("P1", &[1.0])]);
        let r = rank_targets(&SeedSet::new(["P9"]).unwrap(), &u, Aggregation::Mean);
        assert!(matches!(r, Err(Error::UnknownSeed(s)) if s == "P9"));
        assert!(SeedSet::new(["P1", "P1"]).is_err());
        assert!(SeedSet::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn tsv_has_six_decimals() {
        let r = [RankedResult {
            patent_id: "P1".into(),
            score: 0.5,
            rank: 1,
        }];
        assert_eq!(ranked_to_tsv(&r), "rank\tpatent_id\tscore\n1\tP1\t0.500000\n");
    }
}
