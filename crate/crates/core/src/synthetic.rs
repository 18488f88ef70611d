//! Seeded synthetic data: clustered citation graphs, label-decodable
//! datasets, block-signal fusion fixtures, recall fixtures, and a small
//! patent corpus with text, citations and inventors for the demo pipeline.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classifier::Example;
use crate::corpus::{CorpusIndex, Edge, EdgeKind, EdgeList, PatentRecord};
use crate::vectors::VectorTable;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Planted-partition citation graph over entities `e000..`, split into
/// `clusters` equal index ranges. Entity index doubles as filing order: each
/// pair `i > j` yields the citation `i -> j` with probability `p_in` inside a
/// cluster and `p_out` across. Returns the edges and each entity's cluster.
pub fn clustered_citations(n: usize, clusters: usize, p_in: f64, p_out: f64, seed: u64) -> (EdgeList, Vec<usize>) {
    let mut rng = rng(seed);
    let cluster_of: Vec<usize> = (0..n).map(|i| i * clusters / n).collect();
    let name = |i: usize| format!("e{i:03}");
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..i {
            let p = if cluster_of[i] == cluster_of[j] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push(Edge::new(&name(i), &name(j)));
            }
        }
    }
    (EdgeList::from_edges(EdgeKind::Citation, edges), cluster_of)
}

/// `n` examples with one or two labels each, whose input is the sum of the
/// labels' random unit-scale prototypes plus Gaussian noise of norm about
/// 0.3, so every label is a linear read-out of the input.
pub fn linear_label_dataset(n: usize, dim: usize, labels: usize, seed: u64) -> Vec<Example> {
    let mut rng = rng(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    let protos: Vec<Vec<f64>> = (0..labels).map(|_| gaussian(&mut rng, dim, scale)).collect();
    (0..n)
        .map(|i| {
            let mut y = vec![0.0; labels];
            y[rng.random_range(0..labels)] = 1.0;
            if rng.random_bool(0.3) {
                y[rng.random_range(0..labels)] = 1.0;
            }
            let mut x = gaussian(&mut rng, dim, 0.3 * scale);
            for (k, p) in protos.iter().enumerate() {
                if y[k] == 1.0 {
                    x.iter_mut().zip(p).for_each(|(a, b)| *a += b);
                }
            }
            Example {
                id: format!("x{i:03}"),
                input: x,
                labels: y,
            }
        })
        .collect()
}

pub struct BlockFixture {
    pub corpus: CorpusIndex,
    pub a: VectorTable,
    pub b: VectorTable,
    pub c: VectorTable,
}

/// Patents with one class each (`L0..`); block B is the class centroid plus
/// noise, blocks A and C are pure noise of the same scale.
pub fn block_signal_fixture(n: usize, classes: usize, block_dim: usize, seed: u64) -> BlockFixture {
    let mut rng = rng(seed);
    let centroids: Vec<Vec<f64>> = (0..classes).map(|_| gaussian(&mut rng, block_dim, 1.0)).collect();
    let mut records = Vec::with_capacity(n);
    let (mut a, mut b, mut c) = (
        VectorTable::new(block_dim),
        VectorTable::new(block_dim),
        VectorTable::new(block_dim),
    );
    for i in 0..n {
        let id = format!("P{i:04}");
        let k = i % classes;
        let code = format!("L{k}");
        records.push(PatentRecord::new(&id, "synthetic patent", "", &[code.as_str()]));
        let noise = gaussian(&mut rng, block_dim, 0.3);
        let bv: Vec<f64> = centroids[k].iter().zip(&noise).map(|(m, e)| m + e).collect();
        a.push_f64(&id, &gaussian(&mut rng, block_dim, 1.0)).unwrap();
        b.push_f64(&id, &bv).unwrap();
        c.push_f64(&id, &gaussian(&mut rng, block_dim, 1.0)).unwrap();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let records = order.into_iter().map(|i| records[i].clone()).collect();
    BlockFixture {
        corpus: CorpusIndex::from_records(records).unwrap(),
        a,
        b,
        c,
    }
}

pub struct RecallFixture {
    pub universe: VectorTable,
    pub seeds: Vec<String>,
    pub holdout: Vec<String>,
    pub distractors: Vec<String>,
}

/// One cluster holding seeds and holdout, plus distractors that each sit
/// next to exactly one seed on the far side from the cluster centre, plus
/// unrelated background vectors.
///
/// Seeds are `centre + spread·uᵢ` for near-orthogonal directions `uᵢ`;
/// holdout members sit close to the centre; the distractors of seed `i`
/// are `centre + 2·spread·uᵢ` plus jitter, so they are nearer seed `i` than
/// any holdout member is, but far from every other seed.
pub fn recall_fixture(
    dim: usize,
    n_seeds: usize,
    n_holdout: usize,
    distractors_per_seed: usize,
    n_background: usize,
    seed: u64,
) -> RecallFixture {
    let mut rng = rng(seed);
    let centre = unit(gaussian(&mut rng, dim, 1.0));
    let spread = 1.2;
    let mut universe = VectorTable::new(dim);
    let mut seeds = Vec::new();
    let mut holdout = Vec::new();
    let mut distractors = Vec::new();
    let dirs: Vec<Vec<f64>> = (0..n_seeds)
        .map(|_| {
            // remove the centre component so the spread is orthogonal to it
            let g = gaussian(&mut rng, dim, 1.0);
            let p: f64 = g.iter().zip(&centre).map(|(a, b)| a * b).sum();
            unit(g.iter().zip(&centre).map(|(a, c)| a - p * c).collect())
        })
        .collect();
    for (i, u) in dirs.iter().enumerate() {
        let id = format!("S{i:02}");
        let v: Vec<f64> = centre.iter().zip(u).map(|(c, u)| c + spread * u).collect();
        universe.push_f64(&id, &v).unwrap();
        seeds.push(id);
        for j in 0..distractors_per_seed {
            let jitter = gaussian(&mut rng, dim, 0.05);
            let v: Vec<f64> = centre
                .iter()
                .zip(u)
                .zip(&jitter)
                .map(|((c, u), e)| c + 2.0 * spread * u + e)
                .collect();
            let id = format!("D{i:02}_{j:02}");
            universe.push_f64(&id, &v).unwrap();
            distractors.push(id);
        }
    }
    for h in 0..n_holdout {
        let jitter = gaussian(&mut rng, dim, 0.25 / (dim as f64).sqrt());
        let v: Vec<f64> = centre.iter().zip(&jitter).map(|(c, e)| c + e).collect();
        let id = format!("H{h:03}");
        universe.push_f64(&id, &v).unwrap();
        holdout.push(id);
    }
    for b in 0..n_background {
        let id = format!("X{b:04}");
        universe.push_f64(&id, &gaussian(&mut rng, dim, 1.0)).unwrap();
    }
    RecallFixture {
        universe,
        seeds,
        holdout,
        distractors,
    }
}

struct Topic {
    title_noun: &'static str,
    codes: [&'static str; 2],
    phrases: [&'static str; 10],
}

const TOPICS: [Topic; 4] = [
    Topic {
        title_noun: "rolling toy",
        codes: ["A63H", "A63B"],
        phrases: [
            "outer casing", "inner body", "coupling rod", "pivot axis", "magnetic switch",
            "spiral spring", "gear assembly", "support member", "driving unit", "coupling ring",
        ],
    },
    Topic {
        title_noun: "spinal implant",
        codes: ["A61B", "A61F"],
        phrases: [
            "screw member", "intervertebral cage", "mobile core", "tapered end", "threaded body",
            "sliding box", "vertebral body", "bone screw", "staple base", "core rim",
        ],
    },
    Topic {
        title_noun: "electric vehicle",
        codes: ["B60L", "B60K"],
        phrases: [
            "battery pack", "electric motor", "charging station", "drive wheel", "power converter",
            "control unit", "brake pedal", "cooling system", "wheel hub", "vehicle frame",
        ],
    },
    Topic {
        title_noun: "memory device",
        codes: ["G06F", "G11C"],
        phrases: [
            "memory cell", "data bus", "processing unit", "cache line", "storage device",
            "network interface", "control signal", "clock circuit", "register file", "input buffer",
        ],
    },
];

const TITLE_PREFIXES: [&str; 4] = ["Self-propelled", "Improved", "Compact", "Modular"];

pub struct DemoCorpus {
    pub corpus: CorpusIndex,
    pub citations: EdgeList,
    pub inventors: EdgeList,
    pub topic_of: Vec<usize>,
    /// Keywords describing topic 0, for the concept-diff step.
    pub keywords: Vec<String>,
}

fn sentence(rng: &mut impl Rng, phrases: &[&str]) -> String {
    let p: Vec<&str> = phrases.choose_multiple(rng, 3).copied().collect();
    match rng.random_range(0..4) {
        0 => format!("The {} is coupled to the {}.", p[0], p[1]),
        1 => format!("A {} includes a {} and a {}.", p[0], p[1], p[2]),
        2 => format!("A first {} engages a second {}.", p[0], p[1]),
        _ => format!("The {} moves relative to the {} via a {}.", p[0], p[1], p[2]),
    }
}

/// Timestamped-by-index corpus of `per_topic × 4` patents. Each patent
/// cites a few earlier patents (mostly same topic) and occasionally a
/// pre-corpus patent `OLDnnn`; inventors work mostly within one topic.
pub fn demo_corpus(per_topic: usize, seed: u64) -> DemoCorpus {
    let mut rng = rng(seed);
    let n = per_topic * TOPICS.len();
    let mut topic_of: Vec<usize> = (0..n).map(|i| i % TOPICS.len()).collect();
    topic_of.shuffle(&mut rng);
    let mut records = Vec::with_capacity(n);
    for (i, &t) in topic_of.iter().enumerate() {
        let topic = &TOPICS[t];
        let id = format!("US{:07}", 4_000_000 + i * 37);
        let title = format!(
            "{} {} with {}",
            TITLE_PREFIXES.choose(&mut rng).unwrap(),
            topic.title_noun,
            topic.phrases.choose(&mut rng).unwrap()
        );
        // drift a few sentences from a neighbouring topic into the text
        let other = &TOPICS[(t + 1) % TOPICS.len()];
        let sentences: Vec<String> = (0..rng.random_range(2..5))
            .map(|_| {
                if rng.random_bool(0.2) {
                    sentence(&mut rng, &other.phrases)
                } else {
                    sentence(&mut rng, &topic.phrases)
                }
            })
            .collect();
        // primary codes disagree with the topic now and then
        let primary = if rng.random_bool(0.85) { t } else { rng.random_range(0..TOPICS.len()) };
        let mut codes = vec![TOPICS[primary].codes[0]];
        if rng.random_bool(0.4) {
            codes.push(topic.codes[1]);
        }
        if rng.random_bool(0.1) {
            codes.push(TOPICS[rng.random_range(0..TOPICS.len())].codes[0]);
        }
        records.push(PatentRecord::new(&id, &title, &sentences.join(" "), &codes));
    }

    let ids: Vec<String> = records.iter().map(|r| r.patent_id.clone()).collect();
    let mut cites = Vec::new();
    for i in 1..n {
        let k = rng.random_range(1..=4).min(i);
        let same: Vec<usize> = (0..i).filter(|&j| topic_of[j] == topic_of[i]).collect();
        for _ in 0..k {
            let j = if !same.is_empty() && rng.random_bool(0.85) {
                *same.choose(&mut rng).unwrap()
            } else {
                rng.random_range(0..i)
            };
            cites.push(Edge::new(&ids[i], &ids[j]));
        }
        if rng.random_bool(0.15) {
            cites.push(Edge::new(&ids[i], &format!("OLD{:03}", topic_of[i] * 10 + rng.random_range(0..10))));
        }
    }

    let pool = 12;
    let mut authorship = BTreeSet::new();
    for (i, &t) in topic_of.iter().enumerate() {
        for _ in 0..rng.random_range(1..=3) {
            let team = if rng.random_bool(0.9) { t } else { rng.random_range(0..TOPICS.len()) };
            let inv = format!("INV{}_{:02}", team, rng.random_range(0..pool));
            authorship.insert((inv, i));
        }
    }
    let inventors = authorship
        .into_iter()
        .map(|(inv, i)| Edge::new(&inv, &ids[i]));

    DemoCorpus {
        corpus: CorpusIndex::from_records(records).unwrap(),
        citations: EdgeList::from_edges(EdgeKind::Citation, cites),
        inventors: EdgeList::from_edges(EdgeKind::Inventor, inventors),
        topic_of,
        keywords: vec!["rolling toy".into(), "rolling robot".into()],
    }
}
