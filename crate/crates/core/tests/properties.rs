use std::collections::{BTreeMap, BTreeSet};

use patent_retrieval::classifier::{split_indices, SplitRatios};
use patent_retrieval::concepts::{
    chunk_noun_phrases, compare_sets, count_concepts, filter_phrases, ConceptCount, PhraseFilter, Pos, TaggedToken,
};
use patent_retrieval::corpus::{load_edges, load_patents, write_edges, write_patents, CorpusIndex, Edge, EdgeKind, EdgeList, PatentRecord};
use patent_retrieval::evalrecall::{auc, baseline_curve, recall_experiment, RankCurve};
use patent_retrieval::kgraph::{CorruptSide, NegativeSampler, Triple, TripleStore};
use patent_retrieval::retrieval::{aggregate, rank_targets, Aggregation, SeedSet};
use patent_retrieval::textembed::fallback_embed;
use patent_retrieval::transe::{distance, Norm};
use patent_retrieval::vectors::VectorTable;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}"
}

fn record(i: usize) -> impl Strategy<Value = PatentRecord> {
    (
        prop::collection::vec(word(), 1..5),
        prop::collection::vec(word(), 0..12),
        prop::collection::btree_set("[A-H][0-9]{2}", 0..4),
    )
        .prop_map(move |(title, abs, codes)| {
            let codes: Vec<&str> = codes.iter().map(String::as_str).collect();
            PatentRecord::new(&format!("P{i}"), &title.join(" "), &abs.join(" "), &codes)
        })
}

fn corpus() -> impl Strategy<Value = Vec<PatentRecord>> {
    (1usize..12).prop_flat_map(|n| (0..n).map(record).collect::<Vec<_>>())
}

fn vectors(n: std::ops::Range<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f32>>> {
    prop::collection::vec(prop::collection::vec(-1.0f32..1.0, dim), n)
}

fn table(rows: &[Vec<f32>]) -> VectorTable {
    let mut t = VectorTable::new(rows[0].len());
    for (i, v) in rows.iter().enumerate() {
        t.push(&format!("P{i:02}"), v).unwrap();
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_round_trips(records in corpus()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patents.tsv");
        let c = CorpusIndex::from_records(records).unwrap();
        write_patents(&c, &path).unwrap();
        let back = load_patents(&path, false).unwrap();
        prop_assert_eq!(&back, &c);
        for (i, r) in back.records().iter().enumerate() {
            prop_assert_eq!(back.index_of(&r.patent_id), Some(i));
        }
    }

    #[test]
    fn edges_are_unique_after_load(pairs in prop::collection::vec((0u8..6, 0u8..6), 0..40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("citations.tsv");
        let raw = EdgeList {
            kind: EdgeKind::Citation,
            edges: pairs.iter().map(|(a, b)| Edge::new(&format!("P{a}"), &format!("P{b}"))).collect(),
            duplicates: 0,
            self_loops: 0,
        };
        write_edges(&raw, &path).unwrap();
        let loaded = load_edges(&path, EdgeKind::Citation, false).unwrap();
        let unique: BTreeSet<_> = loaded.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect();
        prop_assert_eq!(unique.len(), loaded.edges.len());
        prop_assert!(loaded.edges.iter().all(|e| e.from != e.to));
        prop_assert_eq!(loaded.edges.len() + loaded.duplicates + loaded.self_loops, pairs.len());
    }

    #[test]
    fn corruptions_are_never_positive(
        n in 3usize..10,
        pairs in prop::collection::vec((0usize..10, 0usize..10), 1..20),
        seed in any::<u64>(),
        side in prop_oneof![Just(CorruptSide::Head), Just(CorruptSide::Tail), Just(CorruptSide::Uniform)],
    ) {
        let pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let store = TripleStore::anonymous(n, &pairs).unwrap();
        let sampler = NegativeSampler { side, type_constrained: false };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..1000 {
            let pos = store.triples()[i % store.len()];
            if let Ok(neg) = sampler.corrupt(pos, &store, &mut rng) {
                prop_assert!(!store.is_positive(&neg));
                match side {
                    CorruptSide::Head => prop_assert_eq!(neg.tail, pos.tail),
                    CorruptSide::Tail => prop_assert_eq!(neg.head, pos.head),
                    CorruptSide::Uniform => prop_assert!(neg.head == pos.head || neg.tail == pos.tail),
                }
            }
        }
    }

    #[test]
    fn l2_score_is_translation_invariant(
        h in prop::collection::vec(-2.0f64..2.0, 6),
        r in prop::collection::vec(-2.0f64..2.0, 6),
        t in prop::collection::vec(-2.0f64..2.0, 6),
        c in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let hc: Vec<f64> = h.iter().zip(&c).map(|(a, b)| a + b).collect();
        let tc: Vec<f64> = t.iter().zip(&c).map(|(a, b)| a + b).collect();
        for norm in [Norm::L1, Norm::L2] {
            prop_assert!((distance(&h, &r, &t, norm) - distance(&hc, &r, &tc, norm)).abs() < 1e-9);
        }
    }

    #[test]
    fn ranking_ignores_vector_scale(rows in vectors(4..15, 5), scale in 0.01f32..100.0, k in 1usize..4) {
        prop_assume!(rows.iter().all(|v| v.iter().any(|x| x.abs() > 1e-3)));
        let base = table(&rows);
        let scaled: Vec<Vec<f32>> = rows.iter().map(|v| v.iter().map(|x| x * scale).collect()).collect();
        let scaled = table(&scaled);
        let seeds = SeedSet::new(base.keys()[..k.min(rows.len() - 1)].to_vec()).unwrap();
        for m in Aggregation::ALL {
            let a = rank_targets(&seeds, &base, m).unwrap().results;
            let b = rank_targets(&seeds, &scaled, m).unwrap().results;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.score - y.score).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn ranking_ignores_universe_order(rows in vectors(4..15, 4), k in 1usize..4, seed in any::<u64>()) {
        let t = table(&rows);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        let mut shuffled = VectorTable::new(4);
        for &i in &order {
            shuffled.push(&t.keys()[i], t.row(i)).unwrap();
        }
        let seeds = SeedSet::new(t.keys()[..k.min(rows.len() - 1)].to_vec()).unwrap();
        for m in Aggregation::ALL {
            prop_assert_eq!(rank_targets(&seeds, &t, m).unwrap(), rank_targets(&seeds, &shuffled, m).unwrap());
        }
    }

    #[test]
    fn aggregates_lie_within_bounds(scores in prop::collection::vec(-1.0f64..1.0, 1..20)) {
        let lo = aggregate(&scores, Aggregation::Min).unwrap();
        let hi = aggregate(&scores, Aggregation::Max).unwrap();
        for m in [Aggregation::Mean, Aggregation::Median] {
            let v = aggregate(&scores, m).unwrap();
            prop_assert!(lo - 1e-12 <= v && v <= hi + 1e-12);
        }
    }

    #[test]
    fn phrase_filter_is_idempotent(phrases in prop::collection::vec(
        prop::collection::vec(prop_oneof![Just("The".to_string()), Just("first".to_string()), Just("an".to_string()), "[A-Za-z]{1,6}"], 1..5)
            .prop_map(|w| w.join(" ")),
        0..20,
    )) {
        let once = filter_phrases(&phrases);
        prop_assert_eq!(filter_phrases(&once), once.clone());
        prop_assert!(once.iter().all(|p| p.split_whitespace().count() >= 2 && p.to_lowercase() == *p));
    }

    #[test]
    fn concept_counts_match_recount(docs in prop::collection::vec(
        prop::collection::vec((0usize..4, 0usize..5), 0..15), 0..8,
    )) {
        let vocab = ["wheel", "casing", "outer", "the", "rolls"];
        let tags = [Pos::Noun, Pos::Noun, Pos::Adj, Pos::Det, Pos::Other];
        let docs: Vec<Vec<TaggedToken>> = docs
            .iter()
            .map(|d| d.iter().map(|&(_, w)| TaggedToken::new(vocab[w], tags[w])).collect())
            .collect();
        let filter = PhraseFilter::default();
        let counts = count_concepts(docs.iter().map(Vec::as_slice), &filter, 1);
        let mut recount: BTreeMap<String, usize> = BTreeMap::new();
        for d in &docs {
            for p in chunk_noun_phrases(d) {
                if let Some(f) = filter.apply(&p) {
                    *recount.entry(f).or_default() += 1;
                }
            }
        }
        let got: BTreeMap<String, usize> = counts.iter().map(|c| (c.phrase.clone(), c.frequency)).collect();
        prop_assert_eq!(got, recount);
        prop_assert!(counts.windows(2).all(|w| w[0].frequency > w[1].frequency
            || (w[0].frequency == w[1].frequency && w[0].phrase < w[1].phrase)));
    }

    #[test]
    fn concept_diff_partitions_both_sides(
        a in prop::collection::btree_map("[a-d] [a-d]", 1usize..9, 0..8),
        b in prop::collection::btree_map("[a-d] [a-d]", 1usize..9, 0..8),
    ) {
        let list = |m: &BTreeMap<String, usize>| m.iter().map(|(p, f)| ConceptCount { phrase: p.clone(), frequency: *f }).collect::<Vec<_>>();
        let diff = compare_sets(&list(&a), &list(&b), &[]);
        let shared: BTreeSet<&str> = diff.shared.iter().map(|s| s.0.as_str()).collect();
        let left: BTreeSet<&str> = diff.initial_only.iter().map(|c| c.phrase.as_str()).collect();
        let right: BTreeSet<&str> = diff.retrieved_only.iter().map(|c| c.phrase.as_str()).collect();
        prop_assert!(shared.is_disjoint(&left) && shared.is_disjoint(&right) && left.is_disjoint(&right));
        let ia: BTreeSet<&str> = a.keys().map(String::as_str).collect();
        let ib: BTreeSet<&str> = b.keys().map(String::as_str).collect();
        prop_assert_eq!(shared.union(&left).copied().collect::<BTreeSet<_>>(), ia);
        prop_assert_eq!(shared.union(&right).copied().collect::<BTreeSet<_>>(), ib);
    }

    #[test]
    fn auc_is_monotone_in_each_rank(ranks in prop::collection::vec(1usize..1000, 1..30), i in any::<prop::sample::Index>(), bump in 1usize..500) {
        let before = auc(&RankCurve::from_ranks("m", ranks.clone()));
        let mut worse = ranks.clone();
        let j = i.index(worse.len());
        worse[j] += bump;
        prop_assert!(auc(&RankCurve::from_ranks("m", worse)) >= before - 1e-12);
    }

    #[test]
    fn baseline_is_the_floor(ranks in prop::collection::btree_set(1usize..2000, 1..40)) {
        let n = ranks.len();
        prop_assert!(auc(&baseline_curve(n)) <= auc(&RankCurve::from_ranks("m", ranks.into_iter().collect())) + 1e-12);
    }

    #[test]
    fn recall_ignores_holdout_order(rows in vectors(8..16, 3), seed in any::<u64>()) {
        prop_assume!(rows.iter().all(|v| v.iter().any(|x| x.abs() > 1e-3)));
        let t = table(&rows);
        let seeds = SeedSet::new(t.keys()[..2].to_vec()).unwrap();
        let mut holdout: Vec<String> = t.keys()[2..6].to_vec();
        let a = recall_experiment(&seeds, &holdout, &t, &Aggregation::ALL).unwrap();
        rand::seq::SliceRandom::shuffle(holdout.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        let b = recall_experiment(&seeds, &holdout, &t, &Aggregation::ALL).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bag_of_words_ignores_token_order(words in prop::collection::vec(word(), 1..12), seed in any::<u64>()) {
        let mut shuffled = words.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        let a = fallback_embed(&words.join(" "), 32, 9).unwrap();
        let b = fallback_embed(&shuffled.join(" "), 32, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_files_round_trip(rows in vectors(1..10, 7)) {
        let t = table(&rows);
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("t.emb");
        let text = dir.path().join("t.tsv");
        t.save(&bin).unwrap();
        t.save_tsv(&text).unwrap();
        prop_assert_eq!(VectorTable::load(&bin).unwrap(), t.clone());
        prop_assert_eq!(VectorTable::load(&text).unwrap(), t);
    }

    #[test]
    fn split_partitions_indices(n in 10usize..300, seed in any::<u64>()) {
        let s = split_indices(n, SplitRatios::default(), seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn triple_store_dedups() {
    let s = TripleStore::anonymous(3, &[(0, 1), (0, 1), (1, 2)]).unwrap();
    assert_eq!(s.len(), 2);
    assert!(s.is_positive(&Triple::new(0, 0, 1)));
}
