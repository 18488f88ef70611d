//! Flat `key = value` configuration files.
//!
//! ```text
//! # comments start with '#'
//! seed = 7
//! transe.dim = 64
//! transe.inventor.epochs = 50   # overrides transe.epochs for one graph
//! mlp.hidden_dim = 384
//! fusion.specs = A, B, [A, B, C]
//! retrieval.method = mean
//! retrieval.k = 36
//! ```
//!
//! Unknown keys are rejected. CLI flags take precedence over file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::classifier::MlpConfig;
use crate::corpus::EdgeKind;
use crate::error::{Error, Result};
use crate::fusion::FusionSpec;
use crate::kgraph::CorruptSide;
use crate::retrieval::Aggregation;
use crate::transe::{Norm, TransEConfig};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub citation: TransEConfig,
    pub inventor: TransEConfig,
    pub mlp: MlpConfig,
    pub specs: Vec<FusionSpec>,
    pub method: Aggregation,
    pub k: usize,
    pub threshold: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            citation: TransEConfig::default(),
            inventor: TransEConfig::default(),
            mlp: MlpConfig::default(),
            specs: FusionSpec::all(),
            method: Aggregation::Mean,
            k: 36,
            threshold: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

/// Splits a spec list on commas that are not inside brackets.
pub fn parse_spec_list(s: &str) -> Result<Vec<FusionSpec>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim().parse()?);
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() {
        out.push(last.parse()?);
    }
    if out.is_empty() {
        return Err(Error::Config("empty fusion spec list".into()));
    }
    Ok(out)
}

fn set_transe(c: &mut TransEConfig, field: &str, key: &str, v: &str) -> Result<bool> {
    match field {
        "dim" => c.dim = parse(key, v)?,
        "margin" => c.margin = parse(key, v)?,
        "norm" => c.norm = parse::<Norm>(key, v)?,
        "learning_rate" => c.learning_rate = parse(key, v)?,
        "epochs" => c.epochs = parse(key, v)?,
        "negatives_per_positive" => c.negatives_per_positive = parse(key, v)?,
        "batch_size" => c.batch_size = parse(key, v)?,
        "normalize_entities" => c.normalize_entities = parse_bool(key, v)?,
        "type_constrained" => c.sampler.type_constrained = parse_bool(key, v)?,
        "corrupt_side" => {
            c.sampler.side = match v {
                "head" => CorruptSide::Head,
                "tail" => CorruptSide::Tail,
                "uniform" => CorruptSide::Uniform,
                _ => return Err(Error::Config(format!("`{key}`: expected head, tail or uniform"))),
            }
        }
        "parallel" => c.parallel = parse_bool(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_mlp(c: &mut MlpConfig, field: &str, key: &str, v: &str) -> Result<bool> {
    match field {
        "hidden_dim" => c.hidden_dim = parse(key, v)?,
        "dropout_rate" => c.dropout_rate = parse(key, v)?,
        "learning_rate" => c.learning_rate = parse(key, v)?,
        "batch_size" => c.batch_size = parse(key, v)?,
        "epochs" => c.epochs = parse(key, v)?,
        "split" => c.split = v.parse()?,
        "threshold" => c.threshold = parse(key, v)?,
        "averaging" => c.averaging = v.parse()?,
        _ => return Ok(false),
    }
    Ok(true)
}

impl PipelineConfig {
    pub fn transe(&self, kind: EdgeKind) -> &TransEConfig {
        match kind {
            EdgeKind::Citation => &self.citation,
            EdgeKind::Inventor => &self.inventor,
        }
    }

    pub fn transe_mut(&mut self, kind: EdgeKind) -> &mut TransEConfig {
        match kind {
            EdgeKind::Citation => &mut self.citation,
            EdgeKind::Inventor => &mut self.inventor,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Shared `transe.*` keys apply to both graphs; `transe.citation.*` and
    /// `transe.inventor.*` win regardless of line order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }

        let mut cfg = PipelineConfig::default();
        let (shared, rest): (Vec<_>, Vec<_>) = entries.iter().partition(|(k, _)| {
            k.strip_prefix("transe.")
                .is_some_and(|f| !f.starts_with("citation.") && !f.starts_with("inventor."))
        });
        for (k, v) in shared {
            let field = &k["transe.".len()..];
            if !set_transe(&mut cfg.citation, field, k, v)? {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            set_transe(&mut cfg.inventor, field, k, v)?;
        }
        for (k, v) in rest {
            let known = if let Some(f) = k.strip_prefix("transe.citation.") {
                set_transe(&mut cfg.citation, f, k, v)?
            } else if let Some(f) = k.strip_prefix("transe.inventor.") {
                set_transe(&mut cfg.inventor, f, k, v)?
            } else if let Some(f) = k.strip_prefix("mlp.") {
                set_mlp(&mut cfg.mlp, f, k, v)?
            } else {
                match k.as_str() {
                    "seed" => cfg.seed = Some(parse(k, v)?),
                    "fusion.specs" => cfg.specs = parse_spec_list(v)?,
                    "retrieval.method" => cfg.method = v.parse()?,
                    "retrieval.k" => cfg.k = parse(k, v)?,
                    "retrieval.threshold" => cfg.threshold = Some(parse(k, v)?),
                    _ => return Err(Error::Config(format!("unknown key `{k}`"))),
                }
                true
            };
            if !known {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
        }
        if let Some(seed) = cfg.seed {
            cfg.apply_seed(seed);
        }
        Ok(cfg)
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.citation.seed = seed;
        self.inventor.seed = seed.wrapping_add(1);
        self.mlp.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_graph_keys_override_shared() {
        let cfg = PipelineConfig::parse(
            "transe.inventor.epochs = 5\ntranse.epochs = 20 # shared\nseed=3\nfusion.specs = A, [A, B], B + C\n",
        )
        .unwrap();
        assert_eq!(cfg.citation.epochs, 20);
        assert_eq!(cfg.inventor.epochs, 5);
        assert_eq!(cfg.citation.seed, 3);
        let names: Vec<String> = cfg.specs.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["A", "[A, B]", "B + C"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(PipelineConfig::parse("transe.dims = 3"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::parse("no equals sign"), Err(Error::Config(_))));
    }
}
