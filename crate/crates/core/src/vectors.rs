//! Keyed dense vectors and their on-disk formats.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! magic  b"PEMB"  (4 bytes)
//! version u32     (currently 1)
//! count   u64
//! dim     u32
//! count × { key_len u16, key utf8[key_len], dim × f32 }
//! ```
//!
//! The debug TSV format is one `key\tv1,v2,...` line per vector. Floats are
//! printed with the shortest representation that parses back to the same
//! `f32`, so both formats round-trip bit-exactly.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tsv;

pub const MAGIC: [u8; 4] = *b"PEMB";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    keys: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Self {
        VectorTable {
            dim,
            keys: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.index.get(key).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.keys
            .iter()
            .enumerate()
            .map(move |(i, k)| (k.as_str(), self.row(i)))
    }

    pub fn push(&mut self, key: &str, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: vector.len(),
                context: format!("vector for `{key}`"),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value in vector for `{key}`")));
        }
        if self.index.contains_key(key) {
            return Err(Error::DuplicateKey(key.to_string()));
        }
        if key.len() > u16::MAX as usize {
            return Err(Error::Invalid(format!("key longer than {} bytes", u16::MAX)));
        }
        self.index.insert(key.to_string(), self.keys.len());
        self.keys.push(key.to_string());
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn push_f64(&mut self, key: &str, vector: &[f64]) -> Result<()> {
        let v: Vec<f32> = vector.iter().map(|&x| x as f32).collect();
        self.push(key, &v)
    }

    /// Keeps only the rows whose key satisfies `keep`, preserving order.
    pub fn retain_keys(&self, mut keep: impl FnMut(&str) -> bool) -> VectorTable {
        let mut out = VectorTable::new(self.dim);
        for (k, v) in self.iter() {
            if keep(k) {
                out.push(k, v).expect("keys unique in source table");
            }
        }
        out
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(20 + self.data.len() * 4 + self.keys.len() * 10);
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.keys.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (key, v) in self.iter() {
            buf.extend_from_slice(&(key.len() as u16).to_le_bytes());
            buf.extend_from_slice(key.as_bytes());
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        buf
    }

    pub fn from_binary(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::BadEmbeddingFile {
            path: origin.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = cur.u32().ok_or_else(|| bad("truncated header"))?;
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let count = cur.u64().ok_or_else(|| bad("truncated header"))? as usize;
        let dim = cur.u32().ok_or_else(|| bad("truncated header"))? as usize;
        let mut table = VectorTable::new(dim);
        let mut v = vec![0f32; dim];
        for i in 0..count {
            let trunc = || bad(&format!("truncated at record {i}"));
            let klen = cur.u16().ok_or_else(trunc)? as usize;
            let key = std::str::from_utf8(cur.take(klen).ok_or_else(trunc)?)
                .map_err(|_| bad(&format!("record {i}: key is not utf-8")))?;
            for x in v.iter_mut() {
                *x = f32::from_le_bytes(cur.take(4).ok_or_else(trunc)?.try_into().unwrap());
            }
            table.push(key, &v)?;
        }
        if cur.pos != bytes.len() {
            return Err(bad(&format!(
                "{} trailing bytes after {count} records of dim {dim}",
                bytes.len() - cur.pos
            )));
        }
        Ok(table)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.iter() {
            s.push_str(k);
            s.push('\t');
            for (j, x) in v.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                s.push_str(&format!("{x:?}"));
            }
            s.push('\n');
        }
        s
    }

    /// Parses the debug TSV format. The first record fixes the dimension.
    pub fn from_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut table: Option<VectorTable> = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: String| Error::MalformedRow {
                path: origin.to_path_buf(),
                line: n + 1,
                reason,
            };
            let (key, values) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected key<TAB>values".into()))?;
            let v = values
                .split(',')
                .map(|x| x.trim().parse::<f32>())
                .collect::<std::result::Result<Vec<f32>, _>>()
                .map_err(|e| malformed(e.to_string()))?;
            let t = table.get_or_insert_with(|| VectorTable::new(v.len()));
            t.push(key, &v)?;
        }
        Ok(table.unwrap_or_else(|| VectorTable::new(0)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = tsv::create(path)?;
        w.write_all(&self.to_binary())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        tsv::write_string(path, &self.to_tsv())
    }

    /// Loads either format, sniffing the binary magic.
    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(&MAGIC) {
            Self::from_binary(&bytes, path)
        } else {
            let text = String::from_utf8(bytes).map_err(|_| Error::BadEmbeddingFile {
                path: path.to_path_buf(),
                reason: "neither binary embeddings nor utf-8 tsv".into(),
            })?;
            Self::from_tsv(&text, path)
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes(b.try_into().unwrap()))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VectorTable {
        let mut t = VectorTable::new(3);
        t.push("P1", &[1.0, -0.5, 0.1]).unwrap();
        t.push("P2", &[f32::MIN_POSITIVE, 3.4e38, -0.0]).unwrap();
        t
    }

    #[test]
    fn header_layout() {
        let b = sample().to_binary();
        assert_eq!(&b[..4], b"PEMB");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 3);
        assert_eq!(u16::from_le_bytes(b[20..22].try_into().unwrap()), 2);
        assert_eq!(&b[22..24], b"P1");
        assert_eq!(b.len(), 20 + 2 * (2 + 2 + 12));
    }

    #[test]
    fn truncated_file_rejected() {
        let b = sample().to_binary();
        let r = VectorTable::from_binary(&b[..b.len() - 1], Path::new("x"));
        assert!(matches!(r, Err(Error::BadEmbeddingFile { .. })));
    }

    #[test]
    fn tsv_is_bit_exact() {
        let t = sample();
        let back = VectorTable::from_tsv(&t.to_tsv(), Path::new("x")).unwrap();
        for (a, b) in t.iter().zip(back.iter()) {
            assert_eq!(a.0, b.0);
            let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a.1), bits(b.1));
        }
    }

    #[test]
    fn tsv_dim_mismatch() {
        let r = VectorTable::from_tsv("a\t1,2\nb\t1,2,3\n", Path::new("x"));
        assert!(matches!(
            r,
            Err(Error::DimMismatch {
                expected: 2,
                found: 3,
                ..
            })
        ));
    }

    #[test]
    fn duplicate_key_rejected() {
        let r = VectorTable::from_tsv("a\t1,2\na\t3,4\n", Path::new("x"));
        assert!(matches!(r, Err(Error::DuplicateKey(k)) if k == "a"));
    }
}
