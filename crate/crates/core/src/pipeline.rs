//! Stage functions shared by the CLI, the examples and the synthetic demo.
//! Each stage takes in-memory inputs and returns in-memory outputs; the
//! `write_*` helpers put them on disk in the documented formats.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{run_embedding_selection, MlpConfig, SelectionReport};
use crate::concepts::{
    compare_sets, concepts_tsv, count_concepts, fallback_tag, tokens_tsv, ConceptCount, ConceptDiff,
    PhraseFilter, TaggedDocs,
};
use crate::corpus::{
    load_edges, load_patents, validate_corpus, write_edges, write_patents, CorpusIndex, EdgeKind, EdgeList,
    ValidationReport,
};
use crate::error::{Error, Result};
use crate::evalrecall::{auc, auc_tsv, compare_methods, curves_tsv, recall_experiment, MethodComparison, RankCurve};
use crate::fusion::{fuse_all, BlockTables, CoverageReport, FuseOptions, FusionManifest, FusionSpec};
use crate::kgraph::{build_graph, TripleStore};
use crate::retrieval::{retrieve_top_k, write_ranked, Aggregation, RankedResult, SeedSet};
use crate::synthetic::demo_corpus;
use crate::textembed::{embed_corpus, prepare_sequence, write_sequences, DEFAULT_MAX_TOKENS};
use crate::transe::{link_prediction_eval, train, LinkPredictionReport, TrainOutcome, TransEConfig};
use crate::tsv;
use crate::vectors::VectorTable;

pub struct Ingested {
    pub corpus: CorpusIndex,
    pub citations: Option<EdgeList>,
    pub inventors: Option<EdgeList>,
    pub report: ValidationReport,
}

pub fn ingest(patents: &Path, citations: Option<&Path>, inventors: Option<&Path>, lenient: bool) -> Result<Ingested> {
    let corpus = load_patents(patents, lenient)?;
    let citations = citations
        .map(|p| load_edges(p, EdgeKind::Citation, lenient))
        .transpose()?;
    let inventors = inventors
        .map(|p| load_edges(p, EdgeKind::Inventor, lenient))
        .transpose()?;
    let report = validate_corpus(&corpus, citations.as_ref(), inventors.as_ref());
    Ok(Ingested {
        corpus,
        citations,
        inventors,
        report,
    })
}

pub struct TrainedGraph {
    pub store: TripleStore,
    pub outcome: TrainOutcome,
    pub link: Option<LinkPredictionReport>,
}

/// Trains on the graph, or on the graph minus `holdout` random facts that
/// are then scored by filtered tail prediction.
pub fn train_graph(store: TripleStore, config: &TransEConfig, holdout: usize) -> Result<TrainedGraph> {
    if holdout == 0 {
        let outcome = train(&store, config)?;
        return Ok(TrainedGraph {
            store,
            outcome,
            link: None,
        });
    }
    if holdout >= store.len() {
        return Err(Error::Invalid(format!(
            "holdout of {holdout} leaves no training facts out of {}",
            store.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_401d);
    let (train_store, held) = store.split_holdout(holdout, &mut rng);
    let outcome = train(&train_store, config)?;
    // filter against every known fact, held-out ones included
    let link = link_prediction_eval(&outcome.table, &store, &held, config.norm);
    Ok(TrainedGraph {
        store,
        outcome,
        link: Some(link),
    })
}

pub fn loss_tsv(history: &[f64]) -> String {
    let mut s = String::from("epoch\tloss\n");
    for (i, l) in history.iter().enumerate() {
        writeln!(s, "{}\t{:.6}", i + 1, l).unwrap();
    }
    s
}

pub fn link_tsv(r: &LinkPredictionReport) -> String {
    format!(
        "key\tvalue\nqueries\t{}\nmean_rank\t{:.6}\nhits_at_1\t{:.6}\nhits_at_10\t{:.6}\n",
        r.queries, r.mean_rank, r.hits_at_1, r.hits_at_10
    )
}

/// `<dir>/<name>.emb`, `.rel.emb`, `.loss.tsv` and, with a holdout,
/// `.linkpred.tsv`. Returns the entity table path.
pub fn write_trained_graph(g: &TrainedGraph, dir: &Path, name: &str) -> Result<PathBuf> {
    let emb = dir.join(format!("{name}.emb"));
    g.outcome.table.entity_vectors(&g.store).save(&emb)?;
    g.outcome
        .table
        .relation_vectors(&g.store)
        .save(&dir.join(format!("{name}.rel.emb")))?;
    tsv::write_string(&dir.join(format!("{name}.loss.tsv")), &loss_tsv(&g.outcome.loss_history))?;
    if let Some(link) = &g.link {
        tsv::write_string(&dir.join(format!("{name}.linkpred.tsv")), &link_tsv(link))?;
    }
    Ok(emb)
}

/// Patents present in every table that `specs` use. Classification runs on
/// fully covered patents only.
pub fn covered_subset(corpus: &CorpusIndex, tables: &BlockTables<'_>, specs: &[FusionSpec]) -> Result<CorpusIndex> {
    let needed: Vec<&VectorTable> = crate::fusion::Block::ALL
        .iter()
        .filter(|b| specs.iter().any(|s| s.contains(**b)))
        .map(|&b| {
            tables
                .get(b)
                .ok_or_else(|| Error::Invalid(format!("no table supplied for block {}", b.letter())))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<_> = corpus
        .records()
        .iter()
        .filter(|r| needed.iter().all(|t| t.contains(&r.patent_id)))
        .cloned()
        .collect();
    if kept.len() < corpus.len() {
        info!("{} of {} patents lack a required block and are excluded", corpus.len() - kept.len(), corpus.len());
    }
    CorpusIndex::from_records(kept)
}

pub fn select_embedding(
    corpus: &CorpusIndex,
    tables: &BlockTables<'_>,
    specs: &[FusionSpec],
    config: &MlpConfig,
) -> Result<SelectionReport> {
    let covered = covered_subset(corpus, tables, specs)?;
    let report = run_embedding_selection(&covered, specs, tables, config)?;
    if report.excluded_unlabeled > 0 {
        info!("{} patents without class codes excluded", report.excluded_unlabeled);
    }
    Ok(report)
}

pub fn write_fused(
    spec: &FusionSpec,
    corpus: &CorpusIndex,
    tables: &BlockTables<'_>,
    opts: FuseOptions,
    out: &Path,
) -> Result<(VectorTable, CoverageReport)> {
    let (table, report) = fuse_all(spec, corpus, tables, opts)?;
    table.save(out)?;
    FusionManifest::new(spec, opts, table.dim(), &report).save(out)?;
    Ok((table, report))
}

pub struct RecallOutcome {
    pub curves: Vec<RankCurve>,
    pub comparison: MethodComparison,
}

pub fn eval_recall(
    seeds: &SeedSet,
    holdout: &[String],
    universe: &VectorTable,
    methods: &[Aggregation],
    out_dir: &Path,
) -> Result<RecallOutcome> {
    let curves = recall_experiment(seeds, holdout, universe, methods)?;
    let comparison = compare_methods(&curves)?;
    tsv::write_string(&out_dir.join("curves.tsv"), &curves_tsv(&curves))?;
    tsv::write_string(&out_dir.join("auc.tsv"), &auc_tsv(&curves))?;
    Ok(RecallOutcome { curves, comparison })
}

pub struct ConceptReport {
    pub initial: Vec<ConceptCount>,
    pub retrieved: Vec<ConceptCount>,
    pub diff: ConceptDiff,
}

/// Counts concepts over the documents of each id list. Ids absent from
/// `docs` are skipped with a warning.
pub fn concept_report(
    docs: &TaggedDocs,
    initial: &[String],
    retrieved: &[String],
    keywords: &[String],
    filter: &PhraseFilter,
    min_freq: usize,
) -> ConceptReport {
    let pick = |ids: &[String]| {
        ids.iter()
            .filter_map(|id| {
                let d = docs.get(id);
                if d.is_none() {
                    warn!("no tokens for `{id}`");
                }
                d.map(Vec::as_slice)
            })
            .collect::<Vec<_>>()
    };
    let initial = count_concepts(pick(initial), filter, min_freq);
    let retrieved = count_concepts(pick(retrieved), filter, min_freq);
    let diff = compare_sets(&initial, &retrieved, keywords);
    ConceptReport {
        initial,
        retrieved,
        diff,
    }
}

pub fn write_concepts(report: &ConceptReport, out_dir: &Path) -> Result<()> {
    tsv::write_string(
        &out_dir.join("concepts.tsv"),
        &concepts_tsv(&[("initial", &report.initial), ("retrieved", &report.retrieved)]),
    )?;
    tsv::write_string(&out_dir.join("diff.tsv"), &report.diff.to_tsv())
}

/// Tags every patent's prepared sequence with the built-in fallback tagger.
pub fn tag_corpus(corpus: &CorpusIndex, max_tokens: usize) -> Result<TaggedDocs> {
    corpus
        .records()
        .iter()
        .map(|r| Ok((r.patent_id.clone(), fallback_tag(&prepare_sequence(r, max_tokens)?))))
        .collect()
}

#[derive(Debug, Clone)]
/// Text vectors share the TransE dimension so additive specs are defined.
pub struct DemoOptions {
    pub patents_per_topic: usize,
    pub transe: TransEConfig,
    pub link_holdout: usize,
    pub mlp: MlpConfig,
    pub specs: Vec<FusionSpec>,
    pub seeds: usize,
    pub k: usize,
    pub method: Aggregation,
}

impl Default for DemoOptions {
    fn default() -> Self {
        DemoOptions {
            patents_per_topic: 60,
            transe: TransEConfig {
                dim: 48,
                epochs: 60,
                learning_rate: 0.05,
                ..TransEConfig::default()
            },
            link_holdout: 40,
            mlp: MlpConfig {
                hidden_dim: 64,
                learning_rate: 1e-3,
                epochs: 30,
                ..MlpConfig::default()
            },
            specs: FusionSpec::all(),
            seeds: 6,
            k: 36,
            method: Aggregation::Mean,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoSummary {
    pub patents: usize,
    pub best_spec: FusionSpec,
    pub selection: SelectionReport,
    pub retrieved: Vec<RankedResult>,
    /// `(method, auc)`, ascending.
    pub auc: Vec<(String, f64)>,
    pub citation_link: Option<LinkPredictionReport>,
    pub files: Vec<PathBuf>,
}

/// Generates the synthetic corpus under `out/data` and runs every stage on
/// it, writing artifacts under `out`. Output bytes depend only on `seed`
/// and `opts`.
pub fn run_demo(out: &Path, seed: u64, opts: &DemoOptions) -> Result<DemoSummary> {
    let data = out.join("data");
    let demo = demo_corpus(opts.patents_per_topic, seed);
    let patents_path = data.join("patents.tsv");
    let cites_path = data.join("citations.tsv");
    let inv_path = data.join("inventors.tsv");
    write_patents(&demo.corpus, &patents_path)?;
    write_edges(&demo.citations, &cites_path)?;
    write_edges(&demo.inventors, &inv_path)?;

    let ing = ingest(&patents_path, Some(&cites_path), Some(&inv_path), false)?;
    tsv::write_string(&out.join("validation.tsv"), &ing.report.to_tsv())?;
    let corpus = ing.corpus;
    info!("ingested {} patents, {} labels", corpus.len(), corpus.label_space().len());

    let mut graphs = Vec::new();
    for (kind, edges, offset) in [
        (EdgeKind::Citation, ing.citations.as_ref().unwrap(), 0u64),
        (EdgeKind::Inventor, ing.inventors.as_ref().unwrap(), 1),
    ] {
        let store = build_graph(edges)?;
        store.write_tsv(&out.join(format!("{kind}.triples.tsv")))?;
        let cfg = TransEConfig {
            seed: seed.wrapping_add(offset),
            ..opts.transe.clone()
        };
        let holdout = if kind == EdgeKind::Citation { opts.link_holdout } else { 0 };
        let g = train_graph(store, &cfg, holdout)?;
        write_trained_graph(&g, out, &kind.to_string())?;
        info!(
            "{kind}: {} facts, final loss {:.4}",
            g.store.len(),
            g.outcome.loss_history.last().copied().unwrap_or(0.0)
        );
        graphs.push(g);
    }
    let citation_link = graphs[0].link.clone();
    let b = graphs[0].outcome.table.entity_vectors(&graphs[0].store);
    let c = graphs[1].outcome.table.entity_vectors(&graphs[1].store);

    write_sequences(&corpus, DEFAULT_MAX_TOKENS, &out.join("sequences.tsv"))?;
    let a = embed_corpus(&corpus, opts.transe.dim, seed, DEFAULT_MAX_TOKENS)?;
    a.save(&out.join("text.emb"))?;

    let tables = BlockTables {
        a: Some(&a),
        b: Some(&b),
        c: Some(&c),
    };
    let mlp = MlpConfig {
        seed,
        ..opts.mlp.clone()
    };
    let selection = select_embedding(&corpus, &tables, &opts.specs, &mlp)?;
    tsv::write_string(&out.join("selection.tsv"), &selection.to_tsv())?;
    let best_spec = selection.rows[0].spec.clone();
    info!("best fusion by top-1 accuracy: {best_spec}");

    let fused_path = out.join("fused.emb");
    let (universe, _) = write_fused(&best_spec, &corpus, &tables, FuseOptions::retrieval(), &fused_path)?;

    // topic 0 plays the seed set; its remaining patents are the holdout
    let topic0: Vec<String> = corpus
        .records()
        .iter()
        .zip(&demo.topic_of)
        .filter(|(_, &t)| t == 0)
        .map(|(r, _)| r.patent_id.clone())
        .collect();
    let (seed_ids, holdout) = topic0.split_at(opts.seeds.min(topic0.len().saturating_sub(1)));
    let seeds = SeedSet::new(seed_ids.iter().cloned())?;
    tsv::write_string(&out.join("seeds.txt"), &(seed_ids.join("\n") + "\n"))?;
    tsv::write_string(&out.join("holdout.txt"), &(holdout.join("\n") + "\n"))?;

    let retrieved = retrieve_top_k(&seeds, &universe, opts.method, opts.k, None)?;
    write_ranked(&retrieved, &out.join("ranked.tsv"))?;

    let recall = eval_recall(&seeds, holdout, &universe, &Aggregation::ALL, out)?;

    let docs = tag_corpus(&corpus, DEFAULT_MAX_TOKENS)?;
    tsv::write_string(&out.join("tokens.tsv"), &tokens_tsv(&docs))?;
    let retrieved_ids: Vec<String> = retrieved.iter().map(|r| r.patent_id.clone()).collect();
    let concepts = concept_report(
        &docs,
        seed_ids,
        &retrieved_ids,
        &demo.keywords,
        &PhraseFilter::default(),
        2,
    );
    write_concepts(&concepts, out)?;

    let files = [
        "data/patents.tsv", "data/citations.tsv", "data/inventors.tsv", "validation.tsv",
        "citation.triples.tsv", "inventor.triples.tsv", "citation.emb", "citation.rel.emb",
        "citation.loss.tsv", "citation.linkpred.tsv", "inventor.emb", "inventor.rel.emb",
        "inventor.loss.tsv", "sequences.tsv", "text.emb", "selection.tsv", "fused.emb",
        "fused.emb.manifest.json", "seeds.txt", "holdout.txt", "ranked.tsv", "curves.tsv",
        "auc.tsv", "tokens.tsv", "concepts.tsv", "diff.tsv",
    ]
    .iter()
    .map(|f| out.join(f))
    .filter(|p| p.exists())
    .collect();

    Ok(DemoSummary {
        patents: corpus.len(),
        best_spec,
        selection,
        retrieved,
        auc: recall.comparison.order.clone(),
        citation_link,
        files,
    })
}

/// AUC per curve, in input order.
pub fn curve_aucs(curves: &[RankCurve]) -> Vec<(String, f64)> {
    curves.iter().map(|c| (c.method.clone(), auc(c))).collect()
}
