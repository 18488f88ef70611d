//! Combining text (A), citation (B) and inventor (C) blocks into one patent
//! vector by concatenation `[A, B]` or elementwise addition `A + B`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::tsv;
use crate::vectors::VectorTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Block {
    /// Text embedding.
    A,
    /// Citation-graph embedding.
    B,
    /// Inventor-graph embedding.
    C,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::A, Block::B, Block::C];

    pub fn letter(self) -> char {
        match self {
            Block::A => 'A',
            Block::B => 'B',
            Block::C => 'C',
        }
    }

    fn from_letter(c: &str) -> Option<Block> {
        match c.trim() {
            "A" | "a" => Some(Block::A),
            "B" | "b" => Some(Block::B),
            "C" | "c" => Some(Block::C),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionOp {
    Concat,
    Add,
}

/// Ordered, non-empty subset of {A, B, C} plus an operator. Single-block
/// specs are stored as `Concat`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FusionSpec {
    parts: Vec<Block>,
    op: FusionOp,
}

impl FusionSpec {
    pub fn new(parts: &[Block], op: FusionOp) -> Result<Self> {
        let mut parts = parts.to_vec();
        parts.sort();
        parts.dedup();
        if parts.is_empty() {
            return Err(Error::Invalid("fusion spec needs at least one block".into()));
        }
        let op = if parts.len() == 1 { FusionOp::Concat } else { op };
        Ok(FusionSpec { parts, op })
    }

    pub fn single(block: Block) -> Self {
        FusionSpec {
            parts: vec![block],
            op: FusionOp::Concat,
        }
    }

    pub fn parts(&self) -> &[Block] {
        &self.parts
    }

    pub fn op(&self) -> FusionOp {
        self.op
    }

    pub fn contains(&self, b: Block) -> bool {
        self.parts.contains(&b)
    }

    /// The eleven schemes compared in the embedding-selection experiment.
    pub fn all() -> Vec<FusionSpec> {
        use Block::*;
        use FusionOp::*;
        let table: [(&[Block], FusionOp); 11] = [
            (&[A], Concat),
            (&[B], Concat),
            (&[C], Concat),
            (&[A, B], Add),
            (&[B, C], Add),
            (&[A, C], Add),
            (&[A, B, C], Add),
            (&[A, B], Concat),
            (&[B, C], Concat),
            (&[A, C], Concat),
            (&[A, B, C], Concat),
        ];
        table
            .iter()
            .map(|(p, op)| FusionSpec::new(p, *op).unwrap())
            .collect()
    }

    /// Output dimension for the given per-block dimensions.
    pub fn output_dim(&self, block_dim: impl Fn(Block) -> usize) -> Result<usize> {
        match self.op {
            FusionOp::Concat => Ok(self.parts.iter().map(|&b| block_dim(b)).sum()),
            FusionOp::Add => {
                let d = block_dim(self.parts[0]);
                for &b in &self.parts[1..] {
                    if block_dim(b) != d {
                        return Err(Error::DimMismatch {
                            expected: d,
                            found: block_dim(b),
                            context: format!("block {} in `{self}`", b.letter()),
                        });
                    }
                }
                Ok(d)
            }
        }
    }
}

impl fmt::Display for FusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.parts.iter().map(|b| b.letter().to_string()).collect();
        match (self.parts.len(), self.op) {
            (1, _) => f.write_str(&letters[0]),
            (_, FusionOp::Concat) => write!(f, "[{}]", letters.join(", ")),
            (_, FusionOp::Add) => f.write_str(&letters.join(" + ")),
        }
    }
}

impl FromStr for FusionSpec {
    type Err = Error;

    /// Accepts `A`, `A + B`, `[A, B, C]` with any spacing.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad fusion spec `{s}`"));
        let (body, op) = if let Some(inner) = s.strip_prefix('[') {
            (inner.strip_suffix(']').ok_or_else(bad)?, FusionOp::Concat)
        } else {
            (s, FusionOp::Add)
        };
        let sep = if op == FusionOp::Concat { ',' } else { '+' };
        let parts: Vec<Block> = body
            .split(sep)
            .map(|p| Block::from_letter(p).ok_or_else(bad))
            .collect::<Result<_>>()?;
        let mut sorted = parts.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != parts {
            return Err(bad());
        }
        FusionSpec::new(&parts, op)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    Error,
    Zero,
}

impl FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(MissingPolicy::Error),
            "zero" => Ok(MissingPolicy::Zero),
            other => Err(Error::Config(format!("unknown missing policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FuseOptions {
    pub missing: MissingPolicy,
    /// L2-normalise every block before combining.
    pub normalize_blocks: bool,
}

impl FuseOptions {
    pub fn classification() -> Self {
        FuseOptions {
            missing: MissingPolicy::Error,
            normalize_blocks: false,
        }
    }

    pub fn retrieval() -> Self {
        FuseOptions {
            missing: MissingPolicy::Zero,
            normalize_blocks: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BlockTables<'a> {
    pub a: Option<&'a VectorTable>,
    pub b: Option<&'a VectorTable>,
    pub c: Option<&'a VectorTable>,
}

impl<'a> BlockTables<'a> {
    pub fn get(&self, b: Block) -> Option<&'a VectorTable> {
        match b {
            Block::A => self.a,
            Block::B => self.b,
            Block::C => self.c,
        }
    }

    fn require(&self, spec: &FusionSpec) -> Result<Vec<&'a VectorTable>> {
        spec.parts()
            .iter()
            .map(|&b| {
                self.get(b).ok_or_else(|| {
                    Error::Invalid(format!("no table supplied for block {} of `{spec}`", b.letter()))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector {
    pub patent_id: String,
    pub vector: Vec<f64>,
    pub spec: FusionSpec,
    /// Blocks replaced by zeros under [`MissingPolicy::Zero`].
    pub missing: Vec<Block>,
}

pub fn fuse(spec: &FusionSpec, patent_id: &str, tables: &BlockTables<'_>, opts: FuseOptions) -> Result<FusedVector> {
    let parts = tables.require(spec)?;
    let dim = spec.output_dim(|b| tables.get(b).map_or(0, |t| t.dim()))?;
    let mut out = vec![0.0; dim];
    let mut missing = Vec::new();
    let mut offset = 0;
    for (&block, table) in spec.parts().iter().zip(parts) {
        let d = table.dim();
        match table.get(patent_id) {
            Some(v) => {
                let scale = if opts.normalize_blocks {
                    let n = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
                    if n > 0.0 { 1.0 / n } else { 1.0 }
                } else {
                    1.0
                };
                let dst = match spec.op() {
                    FusionOp::Concat => &mut out[offset..offset + d],
                    FusionOp::Add => &mut out[..],
                };
                dst.iter_mut().zip(v).for_each(|(o, &x)| *o += x as f64 * scale);
            }
            None => match opts.missing {
                MissingPolicy::Error => {
                    return Err(Error::MissingEmbedding {
                        patent_id: patent_id.to_string(),
                        block: block.letter(),
                    })
                }
                MissingPolicy::Zero => missing.push(block),
            },
        }
        if spec.op() == FusionOp::Concat {
            offset += d;
        }
    }
    Ok(FusedVector {
        patent_id: patent_id.to_string(),
        vector: out,
        spec: spec.clone(),
        missing,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub patents: usize,
    pub missing_a: usize,
    pub missing_b: usize,
    pub missing_c: usize,
    /// Patents with every block missing (zero vectors).
    pub all_missing: usize,
}

impl CoverageReport {
    pub fn missing(&self, b: Block) -> usize {
        match b {
            Block::A => self.missing_a,
            Block::B => self.missing_b,
            Block::C => self.missing_c,
        }
    }
}

/// One fused vector per corpus patent, in corpus order.
pub fn fuse_all(
    spec: &FusionSpec,
    corpus: &CorpusIndex,
    tables: &BlockTables<'_>,
    opts: FuseOptions,
) -> Result<(VectorTable, CoverageReport)> {
    tables.require(spec)?;
    let dim = spec.output_dim(|b| tables.get(b).map_or(0, |t| t.dim()))?;
    let mut out = VectorTable::new(dim);
    let mut report = CoverageReport::default();
    for r in corpus.records() {
        let fused = fuse(spec, &r.patent_id, tables, opts)?;
        for b in &fused.missing {
            match b {
                Block::A => report.missing_a += 1,
                Block::B => report.missing_b += 1,
                Block::C => report.missing_c += 1,
            }
        }
        if fused.missing.len() == spec.parts().len() {
            report.all_missing += 1;
        }
        report.patents += 1;
        out.push_f64(&r.patent_id, &fused.vector)?;
    }
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionManifest {
    pub spec: String,
    pub parts: Vec<Block>,
    pub operator: FusionOp,
    pub dim: usize,
    pub normalize_blocks: bool,
    pub missing_policy: MissingPolicy,
    pub patents: usize,
    pub missing_a: usize,
    pub missing_b: usize,
    pub missing_c: usize,
}

impl FusionManifest {
    pub fn new(spec: &FusionSpec, opts: FuseOptions, dim: usize, report: &CoverageReport) -> Self {
        FusionManifest {
            spec: spec.to_string(),
            parts: spec.parts().to_vec(),
            operator: spec.op(),
            dim,
            normalize_blocks: opts.normalize_blocks,
            missing_policy: opts.missing,
            patents: report.patents,
            missing_a: report.missing_a,
            missing_b: report.missing_b,
            missing_c: report.missing_c,
        }
    }

    /// `fused.bin` -> `fused.bin.manifest.json`
    pub fn sidecar_path(table_path: &Path) -> PathBuf {
        let mut s = table_path.as_os_str().to_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn save(&self, table_path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serialises");
        tsv::write_string(&Self::sidecar_path(table_path), &(json + "\n"))
    }
}
