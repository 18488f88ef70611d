//! Citation and inventor knowledge graphs as triple stores, plus filtered
//! negative sampling.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{EdgeKind, EdgeList};
use crate::error::{Error, Result};
use crate::tsv;

/// Draw budget for one corruption before giving up.
pub const MAX_CORRUPT_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

/// String key <-> dense index bijection, indices assigned in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    keys: Vec<String>,
    index: HashMap<String, usize>,
}

impl Dictionary {
    pub fn intern(&mut self, key: &str) -> usize {
        if let Some(&i) = self.index.get(key) {
            return i;
        }
        let i = self.keys.len();
        self.keys.push(key.to_string());
        self.index.insert(key.to_string(), i);
        i
    }

    pub fn get(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, index: usize) -> &str {
        &self.keys[index]
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityType {
    Patent,
    Inventor,
}

#[derive(Debug, Clone)]
pub struct TripleStore {
    triples: Vec<Triple>,
    entities: Dictionary,
    relations: Dictionary,
    entity_types: Vec<EntityType>,
    positives: HashSet<Triple>,
}

impl TripleStore {
    /// Builds a store from already-indexed triples. Duplicates are dropped,
    /// first occurrence wins.
    pub fn from_parts(
        entities: Dictionary,
        relations: Dictionary,
        entity_types: Vec<EntityType>,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        if entity_types.len() != entities.len() {
            return Err(Error::Invalid(format!(
                "{} entity types for {} entities",
                entity_types.len(),
                entities.len()
            )));
        }
        let mut positives = HashSet::new();
        let mut kept = Vec::new();
        for t in triples {
            if t.head >= entities.len() || t.tail >= entities.len() || t.relation >= relations.len()
            {
                return Err(Error::Invalid(format!("triple {t:?} out of dictionary bounds")));
            }
            if positives.insert(t) {
                kept.push(t);
            }
        }
        Ok(TripleStore {
            triples: kept,
            entities,
            relations,
            entity_types,
            positives,
        })
    }

    /// Convenience constructor for an anonymous single-relation graph over
    /// `num_entities` patent entities keyed `e0`, `e1`, ...
    pub fn anonymous(num_entities: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut entities = Dictionary::default();
        for i in 0..num_entities {
            entities.intern(&format!("e{i}"));
        }
        let mut relations = Dictionary::default();
        relations.intern("r");
        let triples = pairs.iter().map(|&(h, t)| Triple::new(h, 0, t));
        Self::from_parts(
            entities,
            relations,
            vec![EntityType::Patent; num_entities],
            triples,
        )
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn entities(&self) -> &Dictionary {
        &self.entities
    }

    pub fn relations(&self) -> &Dictionary {
        &self.relations
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_type(&self, entity: usize) -> EntityType {
        self.entity_types[entity]
    }

    pub fn is_positive(&self, t: &Triple) -> bool {
        self.positives.contains(t)
    }

    /// Moves `n` randomly chosen triples out of the store. The returned store
    /// keeps the full dictionaries so held-out triples stay addressable.
    pub fn split_holdout<R: Rng>(&self, n: usize, rng: &mut R) -> (TripleStore, Vec<Triple>) {
        let mut order: Vec<usize> = (0..self.triples.len()).collect();
        order.shuffle(rng);
        let n = n.min(self.triples.len());
        let mut held: Vec<Triple> = order[..n].iter().map(|&i| self.triples[i]).collect();
        let held_set: HashSet<Triple> = held.iter().copied().collect();
        let train: Vec<Triple> = self
            .triples
            .iter()
            .copied()
            .filter(|t| !held_set.contains(t))
            .collect();
        held.sort();
        let store = TripleStore {
            positives: train.iter().copied().collect(),
            triples: train,
            entities: self.entities.clone(),
            relations: self.relations.clone(),
            entity_types: self.entity_types.clone(),
        };
        (store, held)
    }

    /// Writes `head_key\trelation\ttail_key` rows.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut w = tsv::create(path)?;
        let io = |e| Error::io(path, e);
        for t in &self.triples {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.entities.key(t.head),
                self.relations.key(t.relation),
                self.entities.key(t.tail)
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Citation edges become `<citing, cite, cited>` over patent entities;
/// inventor edges become `<inventor, write, patent>` with inventors and
/// patents sharing one entity dictionary.
pub fn build_graph(edges: &EdgeList) -> Result<TripleStore> {
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut entities = Dictionary::default();
    let mut types = Vec::new();
    let mut relations = Dictionary::default();
    let rel = relations.intern(edges.kind.relation());

    let mut intern = |key: &str, ty: EntityType| -> Result<usize> {
        if let Some(i) = entities.get(key) {
            return if types[i] == ty {
                Ok(i)
            } else {
                Err(Error::EntityKeyCollision(key.to_string()))
            };
        }
        types.push(ty);
        Ok(entities.intern(key))
    };

    let head_type = match edges.kind {
        EdgeKind::Citation => EntityType::Patent,
        EdgeKind::Inventor => EntityType::Inventor,
    };
    let mut triples = Vec::with_capacity(edges.len());
    for e in &edges.edges {
        let h = intern(&e.from, head_type)?;
        let t = intern(&e.to, EntityType::Patent)?;
        triples.push(Triple::new(h, rel, t));
    }
    TripleStore::from_parts(entities, relations, types, triples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptSide {
    Head,
    Tail,
    /// Fair coin between head and tail, flipped per draw.
    Uniform,
}

/// Filtered uniform negative sampling. With `type_constrained`, the
/// replacement is drawn only from entities of the same type as the slot.
#[derive(Debug, Clone, Copy)]
pub struct NegativeSampler {
    pub side: CorruptSide,
    pub type_constrained: bool,
}

impl Default for NegativeSampler {
    fn default() -> Self {
        NegativeSampler {
            side: CorruptSide::Uniform,
            type_constrained: false,
        }
    }
}

impl NegativeSampler {
    pub fn corrupt<R: Rng>(&self, triple: Triple, store: &TripleStore, rng: &mut R) -> Result<Triple> {
        let n = store.num_entities();
        for _ in 0..MAX_CORRUPT_DRAWS {
            let head_side = match self.side {
                CorruptSide::Head => true,
                CorruptSide::Tail => false,
                CorruptSide::Uniform => rng.random_bool(0.5),
            };
            let slot = if head_side { triple.head } else { triple.tail };
            let replacement = rng.random_range(0..n);
            if self.type_constrained && store.entity_type(replacement) != store.entity_type(slot) {
                continue;
            }
            let candidate = if head_side {
                Triple::new(replacement, triple.relation, triple.tail)
            } else {
                Triple::new(triple.head, triple.relation, replacement)
            };
            if !store.is_positive(&candidate) {
                return Ok(candidate);
            }
        }
        Err(Error::ExhaustedRetries {
            head: triple.head,
            relation: triple.relation,
            tail: triple.tail,
            attempts: MAX_CORRUPT_DRAWS,
        })
    }
}

pub fn corrupt<R: Rng>(
    triple: Triple,
    store: &TripleStore,
    side: CorruptSide,
    rng: &mut R,
) -> Result<Triple> {
    NegativeSampler {
        side,
        type_constrained: false,
    }
    .corrupt(triple, store, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Edge;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn citation_chain() {
        let edges = EdgeList::from_edges(
            EdgeKind::Citation,
            [Edge::new("P1", "P2"), Edge::new("P2", "P3")],
        );
        let g = build_graph(&edges).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.num_entities(), 3);
        assert_eq!(g.relations().keys(), ["cite"]);
    }

    #[test]
    fn inventor_graph_shares_dictionary() {
        let edges = EdgeList::from_edges(
            EdgeKind::Inventor,
            [Edge::new("I1", "P1"), Edge::new("I1", "P2")],
        );
        let g = build_graph(&edges).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.entities().keys(), ["I1", "P1", "P2"]);
        assert_eq!(g.relations().keys(), ["write"]);
        assert_eq!(g.entity_type(0), EntityType::Inventor);
        assert_eq!(g.entity_type(2), EntityType::Patent);
    }

    #[test]
    fn empty_edges_rejected() {
        let edges = EdgeList::from_edges(EdgeKind::Citation, []);
        assert!(matches!(build_graph(&edges), Err(Error::EmptyGraph)));
    }

    #[test]
    fn key_collision_detected() {
        let edges = EdgeList::from_edges(
            EdgeKind::Inventor,
            [Edge::new("X", "P1"), Edge::new("I2", "X")],
        );
        assert!(matches!(
            build_graph(&edges),
            Err(Error::EntityKeyCollision(k)) if k == "X"
        ));
    }

    #[test]
    fn tail_corruption_reaches_both_candidates() {
        let store = TripleStore::anonymous(3, &[(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = HashSet::new();
        for _ in 0..64 {
            let c = corrupt(store.triples()[0], &store, CorruptSide::Tail, &mut rng).unwrap();
            assert_eq!(c.head, 0);
            seen.insert(c.tail);
        }
        assert_eq!(seen, HashSet::from([0, 2]));
    }

    #[test]
    fn head_corruption_keeps_tail() {
        let store = TripleStore::anonymous(10, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in store.triples() {
            for _ in 0..50 {
                let c = corrupt(*t, &store, CorruptSide::Head, &mut rng).unwrap();
                assert_eq!((c.relation, c.tail), (t.relation, t.tail));
                assert_ne!(c.head, t.head);
            }
        }
    }

    #[test]
    fn complete_graph_exhausts() {
        // every (h, t) pair over two entities is positive
        let all: Vec<(usize, usize)> = (0..2).flat_map(|h| (0..2).map(move |t| (h, t))).collect();
        let store = TripleStore::anonymous(2, &all).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = corrupt(store.triples()[1], &store, CorruptSide::Uniform, &mut rng);
        assert!(matches!(r, Err(Error::ExhaustedRetries { attempts: 100, .. })));
    }

    #[test]
    fn type_constrained_keeps_entity_types() {
        let edges = EdgeList::from_edges(
            EdgeKind::Inventor,
            [
                Edge::new("I1", "P1"),
                Edge::new("I2", "P2"),
                Edge::new("I3", "P3"),
            ],
        );
        let g = build_graph(&edges).unwrap();
        let sampler = NegativeSampler {
            side: CorruptSide::Uniform,
            type_constrained: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let c = sampler.corrupt(g.triples()[0], &g, &mut rng).unwrap();
            assert_eq!(g.entity_type(c.head), EntityType::Inventor);
            assert_eq!(g.entity_type(c.tail), EntityType::Patent);
        }
    }
}
