//! Title + abstract sequences and text embedding (block A) tables.
//!
//! Real text vectors come from an external sentence encoder and are ingested
//! in the shared [`VectorTable`] formats. [`fallback_embed`] is a seeded
//! hashed bag-of-words stand-in so the pipeline runs end to end without one.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::corpus::{CorpusIndex, PatentRecord};
use crate::error::{Error, Result};
use crate::tsv;
use crate::vectors::VectorTable;

pub const DEFAULT_MAX_TOKENS: usize = 256;
pub const DEFAULT_TEXT_DIM: usize = 384;

/// `title + ". " + abstract`, whitespace-tokenised and cut to strictly fewer
/// than `max_tokens` tokens. Tokens are rejoined with single spaces.
pub fn prepare_sequence(record: &PatentRecord, max_tokens: usize) -> Result<String> {
    let title = record.title.trim();
    let abs = record.abstract_text.trim();
    let joined = match (title.is_empty(), abs.is_empty()) {
        (true, true) => return Err(Error::EmptyText),
        (false, true) => title.to_string(),
        (true, false) => abs.to_string(),
        (false, false) => format!("{title}. {abs}"),
    };
    let cap = max_tokens.saturating_sub(1);
    Ok(joined.split_whitespace().take(cap).collect::<Vec<_>>().join(" "))
}

pub fn write_sequences(corpus: &CorpusIndex, max_tokens: usize, path: &Path) -> Result<()> {
    let mut w = tsv::create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "patent_id\ttext").map_err(io)?;
    for r in corpus.records() {
        writeln!(w, "{}\t{}", r.patent_id, prepare_sequence(r, max_tokens)?).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Loads an externally produced table. `expected_dim`, when given, must
/// match the file's dimension.
pub fn load_text_embeddings(path: &Path, expected_dim: Option<usize>) -> Result<VectorTable> {
    let table = VectorTable::load(path)?;
    if let Some(d) = expected_dim {
        if !table.is_empty() && table.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: table.dim(),
                context: path.display().to_string(),
            });
        }
    }
    Ok(table)
}

/// Lowercased alphanumeric runs; hyphens and apostrophes stay inside words.
pub fn bag_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\''))
        .map(|t| t.trim_matches(|c| c == '-' || c == '\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Seeded 64-bit token hash: FNV-1a over seed and bytes, then a splitmix64
/// finaliser. Stable across platforms and toolchains.
pub fn token_hash(token: &str, seed: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(PRIME);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Bucket and sign a token hashes to.
pub fn token_slot(token: &str, dim: usize, seed: u64) -> (usize, f64) {
    let h = token_hash(token, seed);
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    ((h % dim as u64) as usize, sign)
}

pub fn fallback_embed(text: &str, dim: usize, seed: u64) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::Invalid("embedding dim must be >= 1".into()));
    }
    let tokens = bag_tokens(text);
    if tokens.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut v = vec![0.0; dim];
    for t in &tokens {
        let (i, s) = token_slot(t, dim, seed);
        v[i] += s;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        // every token cancelled out; fall back to unsigned counts
        for t in &tokens {
            v[token_slot(t, dim, seed).0] += 1.0;
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    } else {
        v.iter_mut().for_each(|x| *x /= n);
    }
    Ok(v)
}

/// Fallback vectors for every corpus patent, keyed by patent id.
pub fn embed_corpus(corpus: &CorpusIndex, dim: usize, seed: u64, max_tokens: usize) -> Result<VectorTable> {
    let mut table = VectorTable::new(dim);
    for r in corpus.records() {
        let seq = prepare_sequence(r, max_tokens)?;
        table.push_f64(&r.patent_id, &fallback_embed(&seq, dim, seed)?)?;
    }
    Ok(table)
}

/// True when the two token sets hash to disjoint buckets.
pub fn buckets_disjoint(a: &str, b: &str, dim: usize, seed: u64) -> bool {
    let slots = |s: &str| -> HashSet<usize> {
        bag_tokens(s).iter().map(|t| token_slot(t, dim, seed).0).collect()
    };
    slots(a).is_disjoint(&slots(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    #[test]
    fn concatenation() {
        let r = PatentRecord::new("P", "A", "B", &[]);
        assert_eq!(prepare_sequence(&r, 256).unwrap(), "A. B");
        let r = PatentRecord::new("P", "Rolling toy", "", &[]);
        assert_eq!(prepare_sequence(&r, 256).unwrap(), "Rolling toy");
    }

    #[test]
    fn cap_is_strict() {
        let abs = vec!["word"; 300].join(" ");
        let r = PatentRecord::new("P", "Title", &abs, &[]);
        let s = prepare_sequence(&r, 256).unwrap();
        assert_eq!(s.split_whitespace().count(), 255);
        assert!(s.split_whitespace().all(|t| t == "word" || t == "Title."));
    }

    #[test]
    fn empty_text() {
        let r = PatentRecord::new("P", " ", "", &[]);
        assert!(matches!(prepare_sequence(&r, 256), Err(Error::EmptyText)));
        assert!(matches!(fallback_embed("  ,; ", 8, 0), Err(Error::EmptyText)));
    }

    #[test]
    fn identical_texts_identical_vectors() {
        let a = fallback_embed("A spherical rolling toy", 64, 3).unwrap();
        let b = fallback_embed("A spherical rolling toy", 64, 3).unwrap();
        assert_eq!(a, b);
        assert!((cos(&a, &b) - 1.0).abs() < 1e-12);
        let n = cos(&a, &a).sqrt();
        assert!((n - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_buckets_give_zero_cosine() {
        let (x, y) = ("outer casing gear", "magnetic switch spring");
        let dim = 4096;
        assert!(buckets_disjoint(x, y, dim, 0));
        let a = fallback_embed(x, dim, 0).unwrap();
        let b = fallback_embed(y, dim, 0).unwrap();
        assert_eq!(cos(&a, &b), 0.0);
    }

    #[test]
    fn hash_depends_on_seed_and_token() {
        assert_eq!(token_hash("toy", 0), token_hash("toy", 0));
        assert_ne!(token_hash("toy", 0), token_hash("toy", 1));
        assert_ne!(token_hash("toy", 0), token_hash("tox", 0));
    }
}
