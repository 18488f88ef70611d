//! Patent table, citation and inventor adjacency tables.
//!
//! All inputs are UTF-8 TSV. The patent table has the fixed header
//! `patent_id\ttitle\tabstract\tcpc_codes`, with `cpc_codes` a `;`-joined
//! (possibly empty) list. Edge tables have two columns and an optional header
//! (`citing\tcited` or `inventor_id\tpatent_id`).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::tsv;

pub const PATENT_HEADER: &str = "patent_id\ttitle\tabstract\tcpc_codes";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatentRecord {
    pub patent_id: String,
    pub title: String,
    pub abstract_text: String,
    pub cpc_codes: BTreeSet<String>,
}

impl PatentRecord {
    pub fn new(id: &str, title: &str, abstract_text: &str, codes: &[&str]) -> Self {
        PatentRecord {
            patent_id: id.to_string(),
            title: title.to_string(),
            abstract_text: abstract_text.to_string(),
            cpc_codes: codes.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// Immutable, densely indexed corpus. Index `i` is the `i`-th row of the
/// source file; `label_space` is the sorted set of every class code seen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusIndex {
    records: Vec<PatentRecord>,
    order: HashMap<String, usize>,
    label_space: Vec<String>,
}

impl CorpusIndex {
    pub fn from_records(records: Vec<PatentRecord>) -> Result<Self> {
        let mut order = HashMap::with_capacity(records.len());
        let mut labels = BTreeSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.patent_id.is_empty() {
                return Err(Error::Invalid(format!("record {i} has an empty patent id")));
            }
            if r.title.trim().is_empty() {
                return Err(Error::Invalid(format!(
                    "patent `{}` has an empty title",
                    r.patent_id
                )));
            }
            if order.insert(r.patent_id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: r.patent_id.clone(),
                    line: i + 1,
                });
            }
            labels.extend(r.cpc_codes.iter().cloned());
        }
        debug_assert!(order.values().all(|&i| i < records.len()));
        Ok(CorpusIndex {
            records,
            order,
            label_space: labels.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PatentRecord] {
        &self.records
    }

    pub fn index_of(&self, patent_id: &str) -> Option<usize> {
        self.order.get(patent_id).copied()
    }

    pub fn get(&self, patent_id: &str) -> Option<&PatentRecord> {
        self.index_of(patent_id).map(|i| &self.records[i])
    }

    pub fn contains(&self, patent_id: &str) -> bool {
        self.order.contains_key(patent_id)
    }

    pub fn label_space(&self) -> &[String] {
        &self.label_space
    }

    pub fn label_index(&self, code: &str) -> Option<usize> {
        self.label_space
            .binary_search_by(|c| c.as_str().cmp(code))
            .ok()
    }

    /// Multi-hot label vector over `label_space`.
    pub fn multi_hot(&self, record: &PatentRecord) -> Vec<f64> {
        let mut v = vec![0.0; self.label_space.len()];
        for code in &record.cpc_codes {
            if let Some(j) = self.label_index(code) {
                v[j] = 1.0;
            }
        }
        v
    }
}

pub fn load_patents(path: &Path, lenient: bool) -> Result<CorpusIndex> {
    let lines = tsv::read_lines(path)?;
    let mut iter = lines.into_iter();
    match iter.next() {
        Some((_, h)) if h == PATENT_HEADER => {}
        Some((line, h)) => {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                reason: format!("expected header `{PATENT_HEADER}`, found `{h}`"),
            })
        }
        None => {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: 1,
                reason: "missing header".into(),
            })
        }
    }

    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line, text) in iter {
        if text.is_empty() {
            continue;
        }
        let record = match parse_patent_row(&text) {
            Ok(r) => r,
            Err(reason) => {
                if lenient {
                    warn!("{}:{line}: skipping malformed row: {reason}", path.display());
                    continue;
                }
                return Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    line,
                    reason,
                });
            }
        };
        if seen.insert(record.patent_id.clone(), line).is_some() {
            return Err(Error::DuplicateId {
                id: record.patent_id,
                line,
            });
        }
        records.push(record);
    }
    CorpusIndex::from_records(records)
}

fn parse_patent_row(text: &str) -> std::result::Result<PatentRecord, String> {
    let fields: Vec<&str> = text.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let id = fields[0].trim();
    if id.is_empty() {
        return Err("empty patent_id".into());
    }
    if fields[1].trim().is_empty() {
        return Err(format!("empty title for `{id}`"));
    }
    let codes = fields[3]
        .split(';')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(String::from)
        .collect();
    Ok(PatentRecord {
        patent_id: id.to_string(),
        title: fields[1].to_string(),
        abstract_text: fields[2].to_string(),
        cpc_codes: codes,
    })
}

pub fn write_patents(corpus: &CorpusIndex, path: &Path) -> Result<()> {
    let mut w = tsv::create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{PATENT_HEADER}").map_err(io)?;
    for r in corpus.records() {
        let codes: Vec<&str> = r.cpc_codes.iter().map(String::as_str).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            r.patent_id,
            r.title,
            r.abstract_text,
            codes.join(";")
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Citation,
    Inventor,
}

impl EdgeKind {
    pub fn header(self) -> &'static str {
        match self {
            EdgeKind::Citation => "citing\tcited",
            EdgeKind::Inventor => "inventor_id\tpatent_id",
        }
    }

    pub fn relation(self) -> &'static str {
        match self {
            EdgeKind::Citation => "cite",
            EdgeKind::Inventor => "write",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Citation => "citation",
            EdgeKind::Inventor => "inventor",
        })
    }
}

impl std::str::FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "citation" | "cite" => Ok(EdgeKind::Citation),
            "inventor" | "write" => Ok(EdgeKind::Inventor),
            other => Err(Error::Config(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// One adjacency row. For citations `from` cites `to`; for inventor edges
/// `from` is the inventor id and `to` the patent id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn new(from: &str, to: &str) -> Self {
        Edge {
            from: from.to_string(),
            to: to.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub kind: EdgeKind,
    pub edges: Vec<Edge>,
    /// Rows dropped because they repeated an earlier row.
    pub duplicates: usize,
    /// Citation rows dropped because citing == cited.
    pub self_loops: usize,
}

impl EdgeList {
    /// Deduplicates in first-seen order and drops self-citations.
    pub fn from_edges(kind: EdgeKind, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let (mut duplicates, mut self_loops) = (0, 0);
        for e in edges {
            if kind == EdgeKind::Citation && e.from == e.to {
                warn!("dropping self-citation {}", e.from);
                self_loops += 1;
                continue;
            }
            if seen.insert(e.clone()) {
                out.push(e);
            } else {
                duplicates += 1;
            }
        }
        EdgeList {
            kind,
            edges: out,
            duplicates,
            self_loops,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges with at least one patent endpoint absent from `corpus`.
    pub fn dangling(&self, corpus: &CorpusIndex) -> usize {
        self.edges
            .iter()
            .filter(|e| match self.kind {
                EdgeKind::Citation => !corpus.contains(&e.from) || !corpus.contains(&e.to),
                EdgeKind::Inventor => !corpus.contains(&e.to),
            })
            .count()
    }

    /// Corpus patents that appear in no edge of this list.
    pub fn isolated(&self, corpus: &CorpusIndex) -> usize {
        let mut touched = HashSet::new();
        for e in &self.edges {
            if self.kind == EdgeKind::Citation {
                touched.insert(e.from.as_str());
            }
            touched.insert(e.to.as_str());
        }
        corpus
            .records()
            .iter()
            .filter(|r| !touched.contains(r.patent_id.as_str()))
            .count()
    }
}

pub fn load_edges(path: &Path, kind: EdgeKind, lenient: bool) -> Result<EdgeList> {
    let mut rows = Vec::new();
    for (line, text) in tsv::read_lines(path)? {
        if text.is_empty() || (line == 1 && text == kind.header()) {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
        let bad = if fields.len() != 2 {
            Some(format!("expected 2 fields, found {}", fields.len()))
        } else if fields.iter().any(|f| f.is_empty()) {
            Some("empty field".to_string())
        } else {
            None
        };
        if let Some(reason) = bad {
            if lenient {
                warn!("{}:{line}: skipping malformed row: {reason}", path.display());
                continue;
            }
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                reason,
            });
        }
        rows.push(Edge::new(fields[0], fields[1]));
    }
    let list = EdgeList::from_edges(kind, rows);
    if list.duplicates > 0 {
        warn!(
            "{}: dropped {} duplicate {kind} edges",
            path.display(),
            list.duplicates
        );
    }
    Ok(list)
}

pub fn write_edges(edges: &EdgeList, path: &Path) -> Result<()> {
    let mut w = tsv::create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", edges.kind.header()).map_err(io)?;
    for e in &edges.edges {
        writeln!(w, "{}\t{}", e.from, e.to).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphReport {
    pub edges: usize,
    pub dangling: usize,
    pub isolated: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub patents: usize,
    pub label_space: usize,
    pub unlabeled: usize,
    pub citation: Option<GraphReport>,
    pub inventor: Option<GraphReport>,
}

impl ValidationReport {
    pub fn to_tsv(&self) -> String {
        let mut s = format!(
            "key\tvalue\npatents\t{}\nlabel_space\t{}\nunlabeled\t{}\n",
            self.patents, self.label_space, self.unlabeled
        );
        for (name, g) in [("citation", &self.citation), ("inventor", &self.inventor)] {
            if let Some(g) = g {
                s.push_str(&format!(
                    "{name}_edges\t{}\n{name}_dangling\t{}\n{name}_isolated\t{}\n{name}_duplicates\t{}\n{name}_self_loops\t{}\n",
                    g.edges, g.dangling, g.isolated, g.duplicates, g.self_loops
                ));
            }
        }
        s
    }
}

pub fn validate_corpus(
    corpus: &CorpusIndex,
    citations: Option<&EdgeList>,
    inventors: Option<&EdgeList>,
) -> ValidationReport {
    let graph = |list: &EdgeList| GraphReport {
        edges: list.len(),
        dangling: list.dangling(corpus),
        isolated: list.isolated(corpus),
        duplicates: list.duplicates,
        self_loops: list.self_loops,
    };
    ValidationReport {
        patents: corpus.len(),
        label_space: corpus.label_space().len(),
        unlabeled: corpus
            .records()
            .iter()
            .filter(|r| r.cpc_codes.is_empty())
            .count(),
        citation: citations.map(graph),
        inventor: inventors.map(graph),
    }
}
