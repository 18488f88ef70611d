//! Noun-phrase concepts for comparing an initial and a retrieved patent set.
//!
//! Tokens arrive already tagged (`tokens.tsv`, from any external tagger), or
//! from [`fallback_tag`], a crude closed-list tagger used for self-contained
//! runs. Chunks match `DET? (ADJ|NOUN|PROPN|NUM)* (NOUN|PROPN)`, are
//! lowercased, stripped of determiners and count terms, and kept only when
//! at least two words remain.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pos {
    Noun,
    Propn,
    Adj,
    Det,
    Num,
    Other,
}

impl Pos {
    pub fn tag(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Propn => "PROPN",
            Pos::Adj => "ADJ",
            Pos::Det => "DET",
            Pos::Num => "NUM",
            Pos::Other => "OTHER",
        }
    }

    fn is_head(self) -> bool {
        matches!(self, Pos::Noun | Pos::Propn)
    }

    fn is_modifier(self) -> bool {
        matches!(self, Pos::Adj | Pos::Noun | Pos::Propn | Pos::Num)
    }
}

impl FromStr for Pos {
    type Err = std::convert::Infallible;

    /// Unknown tags map to `Other`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" => Pos::Noun,
            "PROPN" => Pos::Propn,
            "ADJ" => Pos::Adj,
            "DET" => Pos::Det,
            "NUM" => Pos::Num,
            _ => Pos::Other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub surface: String,
    pub pos: Pos,
}

impl TaggedToken {
    pub fn new(surface: &str, pos: Pos) -> Self {
        TaggedToken {
            surface: surface.to_string(),
            pos,
        }
    }
}

/// Parses `word/TAG word/TAG ...`; handy in tests and examples.
pub fn parse_tagged(s: &str) -> Vec<TaggedToken> {
    s.split_whitespace()
        .filter_map(|t| {
            let (w, tag) = t.rsplit_once('/')?;
            Some(TaggedToken::new(w, tag.parse().unwrap()))
        })
        .collect()
}

/// Greedy left-to-right maximal matches of `DET? (ADJ|NOUN|PROPN|NUM)*
/// (NOUN|PROPN)`. Trailing modifiers after the last head are not included.
pub fn chunk_noun_phrases(tokens: &[TaggedToken]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let start = i;
        let mut j = i;
        if tokens[j].pos == Pos::Det {
            j += 1;
        }
        let mut k = j;
        let mut head = None;
        while k < tokens.len() && tokens[k].pos.is_modifier() {
            if tokens[k].pos.is_head() {
                head = Some(k);
            }
            k += 1;
        }
        match head {
            Some(h) => {
                let words: Vec<&str> = tokens[start..=h].iter().map(|t| t.surface.as_str()).collect();
                out.push(words.join(" "));
                i = h + 1;
            }
            None => i = k.max(i + 1),
        }
    }
    out
}

const DETERMINERS: [&str; 3] = ["the", "a", "an"];
const COUNT_TERMS: [&str; 20] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseFilter {
    pub determiners: Vec<String>,
    pub count_terms: Vec<String>,
    pub min_words: usize,
}

impl Default for PhraseFilter {
    fn default() -> Self {
        PhraseFilter {
            determiners: DETERMINERS.iter().map(|s| s.to_string()).collect(),
            count_terms: COUNT_TERMS.iter().map(|s| s.to_string()).collect(),
            min_words: 2,
        }
    }
}

impl PhraseFilter {
    /// Lowercase, drop determiners, drop count terms, keep if enough words
    /// remain. Applied in that order.
    pub fn apply(&self, phrase: &str) -> Option<String> {
        let lower = phrase.to_lowercase();
        let words: Vec<&str> = lower
            .split_whitespace()
            .filter(|w| !self.determiners.iter().any(|d| d == w))
            .filter(|w| !self.count_terms.iter().any(|c| c == w))
            .collect();
        (words.len() >= self.min_words).then(|| words.join(" "))
    }

    pub fn filter<S: AsRef<str>>(&self, phrases: &[S]) -> Vec<String> {
        phrases.iter().filter_map(|p| self.apply(p.as_ref())).collect()
    }
}

pub fn filter_phrases<S: AsRef<str>>(phrases: &[S]) -> Vec<String> {
    PhraseFilter::default().filter(phrases)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptCount {
    pub phrase: String,
    pub frequency: usize,
}

/// Occurrences summed over all documents, sorted by frequency descending
/// then phrase ascending; entries under `min_freq` are dropped.
pub fn count_concepts<'a>(
    docs: impl IntoIterator<Item = &'a [TaggedToken]>,
    filter: &PhraseFilter,
    min_freq: usize,
) -> Vec<ConceptCount> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        for phrase in filter.filter(&chunk_noun_phrases(doc)) {
            *counts.entry(phrase).or_default() += 1;
        }
    }
    let mut out: Vec<ConceptCount> = counts
        .into_iter()
        .filter(|(_, f)| *f >= min_freq)
        .map(|(phrase, frequency)| ConceptCount { phrase, frequency })
        .collect();
    out.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.phrase.cmp(&b.phrase)));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordFlag {
    pub keyword: String,
    pub in_initial: bool,
    pub in_retrieved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConceptDiff {
    /// `(phrase, initial frequency, retrieved frequency)`
    pub shared: Vec<(String, usize, usize)>,
    pub initial_only: Vec<ConceptCount>,
    pub retrieved_only: Vec<ConceptCount>,
    pub keywords: Vec<KeywordFlag>,
}

/// Partitions both vocabularies and reports, for each seed keyword, whether
/// it survives in either column. Keywords are lowercased before matching.
pub fn compare_sets(initial: &[ConceptCount], retrieved: &[ConceptCount], keywords: &[String]) -> ConceptDiff {
    let ini: HashMap<&str, usize> = initial.iter().map(|c| (c.phrase.as_str(), c.frequency)).collect();
    let ret: HashMap<&str, usize> = retrieved.iter().map(|c| (c.phrase.as_str(), c.frequency)).collect();
    let mut diff = ConceptDiff::default();
    for c in initial {
        match ret.get(c.phrase.as_str()) {
            Some(&fr) => diff.shared.push((c.phrase.clone(), c.frequency, fr)),
            None => diff.initial_only.push(c.clone()),
        }
    }
    for c in retrieved {
        if !ini.contains_key(c.phrase.as_str()) {
            diff.retrieved_only.push(c.clone());
        }
    }
    diff.shared
        .sort_by(|a, b| (b.1 + b.2).cmp(&(a.1 + a.2)).then_with(|| a.0.cmp(&b.0)));
    for k in keywords {
        let k = k.trim().to_lowercase();
        diff.keywords.push(KeywordFlag {
            in_initial: ini.contains_key(k.as_str()),
            in_retrieved: ret.contains_key(k.as_str()),
            keyword: k,
        });
    }
    diff
}

impl ConceptDiff {
    /// `partition\tphrase\tfreq_initial\tfreq_retrieved`; keyword rows use the
    /// partitions `keyword_present` / `keyword_absent` (relative to the
    /// retrieved set).
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("partition\tphrase\tfreq_initial\tfreq_retrieved\n");
        for (p, fi, fr) in &self.shared {
            writeln!(s, "shared\t{p}\t{fi}\t{fr}").unwrap();
        }
        for c in &self.initial_only {
            writeln!(s, "initial_only\t{}\t{}\t0", c.phrase, c.frequency).unwrap();
        }
        for c in &self.retrieved_only {
            writeln!(s, "retrieved_only\t{}\t0\t{}", c.phrase, c.frequency).unwrap();
        }
        let freq = |list: &[ConceptCount], k: &str| {
            list.iter().find(|c| c.phrase == k).map_or(0, |c| c.frequency)
        };
        let ini: Vec<ConceptCount> = self
            .shared
            .iter()
            .map(|(p, f, _)| ConceptCount { phrase: p.clone(), frequency: *f })
            .chain(self.initial_only.iter().cloned())
            .collect();
        let ret: Vec<ConceptCount> = self
            .shared
            .iter()
            .map(|(p, _, f)| ConceptCount { phrase: p.clone(), frequency: *f })
            .chain(self.retrieved_only.iter().cloned())
            .collect();
        for k in &self.keywords {
            let part = if k.in_retrieved { "keyword_present" } else { "keyword_absent" };
            writeln!(s, "{part}\t{}\t{}\t{}", k.keyword, freq(&ini, &k.keyword), freq(&ret, &k.keyword)).unwrap();
        }
        s
    }
}

/// `set\tphrase\tfrequency`
pub fn concepts_tsv(sets: &[(&str, &[ConceptCount])]) -> String {
    let mut s = String::from("set\tphrase\tfrequency\n");
    for (name, counts) in sets {
        for c in counts.iter() {
            writeln!(s, "{name}\t{}\t{}", c.phrase, c.frequency).unwrap();
        }
    }
    s
}

/// Tagged documents keyed by doc id.
pub type TaggedDocs = BTreeMap<String, Vec<TaggedToken>>;

/// Reads `doc_id\tsurface\tpos` rows (header optional). Token order within a
/// document follows file order.
pub fn load_tokens(path: &Path) -> Result<TaggedDocs> {
    let mut docs = TaggedDocs::new();
    for (line, text) in tsv::read_lines(path)? {
        if text.is_empty() || (line == 1 && text == "doc_id\tsurface\tpos") {
            continue;
        }
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != 3 || f[0].is_empty() || f[1].is_empty() {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                reason: "expected doc_id<TAB>surface<TAB>pos".into(),
            });
        }
        docs.entry(f[0].to_string())
            .or_default()
            .push(TaggedToken::new(f[1], f[2].parse().unwrap()));
    }
    Ok(docs)
}

pub fn tokens_tsv(docs: &TaggedDocs) -> String {
    let mut s = String::from("doc_id\tsurface\tpos\n");
    for (id, toks) in docs {
        for t in toks {
            writeln!(s, "{id}\t{}\t{}", t.surface, t.pos.tag()).unwrap();
        }
    }
    s
}

const CLOSED_DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "said", "its", "their",
    "any", "some", "another", "such", "no",
];
const CARDINALS: &[&str] = &["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
const FUNCTION_WORDS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "has", "have", "had", "do", "does", "did",
    "can", "could", "may", "might", "will", "would", "shall", "should", "must", "and", "or", "but",
    "nor", "of", "in", "on", "at", "to", "for", "with", "by", "from", "into", "onto", "upon",
    "over", "under", "between", "through", "about", "against", "during", "without", "within",
    "which", "who", "whom", "whose", "where", "when", "what", "how", "it", "they", "them", "we",
    "you", "he", "she", "i", "so", "as", "than", "then", "thereby", "wherein", "whereby",
    "comprises", "comprising", "includes", "including", "having", "provides", "provided",
    "configured", "adapted", "arranged", "disposed", "moves", "rolls", "allows", "enables",
    "contains", "uses", "engages", "engage", "couples", "supports", "drives", "holds",
    "receives", "connects", "rotates", "not", "also", "via", "up", "out", "off", "if", "while",
];
const ADJ_SUFFIXES: &[&str] = &["ous", "ive", "able", "ible", "ical", "ful", "less", "ing", "ed", "al"];

/// Tags one word with the closed lists and suffix heuristics; anything
/// unrecognised is a noun.
pub fn fallback_pos(word: &str) -> Pos {
    let w = word.to_lowercase();
    if w.chars().all(|c| !c.is_alphanumeric()) {
        return Pos::Other;
    }
    if CLOSED_DETERMINERS.contains(&w.as_str()) {
        return Pos::Det;
    }
    if CARDINALS.contains(&w.as_str()) || w.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return Pos::Num;
    }
    if FUNCTION_WORDS.contains(&w.as_str()) || (w.len() > 4 && w.ends_with("ly")) {
        return Pos::Other;
    }
    if w.len() > 4 && ADJ_SUFFIXES.iter().any(|s| w.ends_with(s)) {
        return Pos::Adj;
    }
    Pos::Noun
}

/// Whitespace tokenisation with leading/trailing punctuation split off as
/// separate `Other` tokens, then [`fallback_pos`].
pub fn fallback_tag(text: &str) -> Vec<TaggedToken> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let is_punct = |c: char| !(c.is_alphanumeric() || c == '-');
        let core = raw.trim_matches(is_punct);
        let lead = &raw[..raw.find(core).unwrap_or(0)];
        if core.is_empty() {
            out.push(TaggedToken::new(raw, Pos::Other));
            continue;
        }
        for p in lead.chars() {
            out.push(TaggedToken::new(&p.to_string(), Pos::Other));
        }
        out.push(TaggedToken::new(core, fallback_pos(core)));
        let trail = &raw[lead.len() + core.len()..];
        for p in trail.chars() {
            out.push(TaggedToken::new(&p.to_string(), Pos::Other));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_examples() {
        assert_eq!(
            chunk_noun_phrases(&parse_tagged("the/DET outer/ADJ casing/NOUN")),
            ["the outer casing"]
        );
        assert!(chunk_noun_phrases(&parse_tagged("rolls/OTHER quickly/OTHER")).is_empty());
        assert_eq!(
            chunk_noun_phrases(&parse_tagged("a/DET sliding/ADJ switch/NOUN 106/NUM is/OTHER")),
            ["a sliding switch"]
        );
        assert!(chunk_noun_phrases(&[]).is_empty());
    }

    #[test]
    fn chunk_breaks_on_determiner() {
        let toks = parse_tagged("gear/NOUN the/DET pivot/NOUN axis/NOUN of/OTHER a/DET");
        assert_eq!(chunk_noun_phrases(&toks), ["gear", "the pivot axis"]);
    }

    #[test]
    fn filter_examples() {
        assert_eq!(filter_phrases(&["The Outer Casing"]), ["outer casing"]);
        assert!(filter_phrases(&["first wheel"]).is_empty());
        assert!(filter_phrases(&["a sphere"]).is_empty());
        assert_eq!(filter_phrases(&["an inner toy body"]), ["inner toy body"]);
    }

    #[test]
    fn counts_sorted_with_ties() {
        let d1 = parse_tagged("pivot/NOUN axis/NOUN and/OTHER gear/NOUN train/NOUN");
        let d2 = parse_tagged("gear/NOUN train/NOUN ,/OTHER pivot/NOUN axis/NOUN");
        let d3 = parse_tagged("lone/ADJ phrase/NOUN");
        let docs = [d1.as_slice(), d2.as_slice(), d3.as_slice()];
        let c = count_concepts(docs, &PhraseFilter::default(), 2);
        assert_eq!(
            c,
            [
                ConceptCount { phrase: "gear train".into(), frequency: 2 },
                ConceptCount { phrase: "pivot axis".into(), frequency: 2 },
            ]
        );
    }

    #[test]
    fn diff_partitions() {
        let cc = |p: &str, f| ConceptCount { phrase: p.into(), frequency: f };
        let initial = [cc("pivot axis", 3), cc("rolling toy", 4)];
        let retrieved = [cc("pivot axis", 2), cc("drive wheel", 5)];
        let d = compare_sets(&initial, &retrieved, &["Rolling Toy".into(), "rolling robot".into()]);
        assert_eq!(d.shared, [("pivot axis".to_string(), 3, 2)]);
        assert_eq!(d.initial_only, [cc("rolling toy", 4)]);
        assert_eq!(d.retrieved_only, [cc("drive wheel", 5)]);
        assert!(d.keywords.iter().all(|k| !k.in_retrieved));
        assert!(d.keywords[0].in_initial);
        let tsv = d.to_tsv();
        assert!(tsv.contains("keyword_absent\trolling toy\t4\t0\n"));
        assert!(tsv.contains("shared\tpivot axis\t3\t2\n"));

        let none = compare_sets(&[cc("a b", 2)], &[cc("c d", 2)], &[]);
        assert!(none.shared.is_empty());
    }

    #[test]
    fn fallback_tagger_on_sample_sentence() {
        let toks = fallback_tag("A sliding switch 106 is positioned between rims 104 of spool 96.");
        let tags: Vec<&str> = toks.iter().map(|t| t.pos.tag()).collect();
        assert_eq!(
            tags,
            ["DET", "ADJ", "NOUN", "NUM", "OTHER", "ADJ", "OTHER", "NOUN", "NUM", "OTHER", "NOUN", "NUM", "OTHER"]
        );
        assert_eq!(chunk_noun_phrases(&toks), ["A sliding switch", "rims", "spool"]);
    }
}
