//! `patent-retrieval` subcommands. Exit codes: 0 ok, 1 data error, 2 usage
//! or configuration error, 3 numerical divergence. Failures print one line,
//! `error: CODE: message`, to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::classifier::Averaging;
use crate::concepts::{load_tokens, PhraseFilter};
use crate::config::{parse_spec_list, PipelineConfig};
use crate::corpus::{load_edges, load_patents, EdgeKind};
use crate::error::{Error, Result};
use crate::fusion::{BlockTables, FuseOptions, FusionSpec, MissingPolicy};
use crate::kgraph::build_graph;
use crate::pipeline::{self, DemoOptions};
use crate::retrieval::{read_ranked_ids, retrieve_top_k, write_ranked, Aggregation, SeedSet, RANKED_HEADER};
use crate::textembed::{embed_corpus, load_text_embeddings, write_sequences, DEFAULT_MAX_TOKENS, DEFAULT_TEXT_DIM};
use crate::transe::Norm;
use crate::tsv;
use crate::vectors::VectorTable;

#[derive(Debug, Parser)]
#[command(name = "patent-retrieval", version, about = "Seed-based patent retrieval with fused graph and text embeddings")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Skip malformed input rows with a warning instead of aborting.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate the corpus and edge lists.
    Ingest {
        #[arg(long)]
        patents: PathBuf,
        #[arg(long)]
        citations: Option<PathBuf>,
        #[arg(long)]
        inventors: Option<PathBuf>,
        #[arg(long, default_value = "validation.tsv")]
        out: PathBuf,
    },
    /// Build the triple store of one graph and write it as TSV.
    BuildKg {
        #[arg(long, value_parser = parse_kind)]
        graph: EdgeKind,
        /// Edge list; defaults to `citations.tsv` or `inventors.tsv`.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train TransE on one graph; writes `<graph>.emb`, `<graph>.rel.emb`
    /// and `<graph>.loss.tsv`.
    TrainKg(TrainKgArgs),
    /// Embed title+abstract sequences, or validate external embeddings.
    EmbedText {
        #[arg(long)]
        patents: PathBuf,
        /// Embeddings from an external encoder (binary or TSV).
        #[arg(long)]
        external: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
        max_tokens: usize,
        /// Also write `patent_id\ttext` sequences here.
        #[arg(long)]
        sequences: Option<PathBuf>,
        #[arg(long, default_value = "text.emb")]
        out: PathBuf,
    },
    /// Fuse blocks into one table per the given spec.
    Fuse {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        patents: PathBuf,
        #[command(flatten)]
        blocks: BlockPaths,
        #[arg(long, value_parser = parse_missing, default_value = "zero")]
        missing: MissingPolicy,
        #[arg(long)]
        normalize_blocks: bool,
        #[arg(long, default_value = "fused.emb")]
        out: PathBuf,
    },
    /// Train one classifier per fusion spec and report their metrics.
    SelectEmbedding(SelectArgs),
    /// Rank the universe against a seed set.
    Retrieve {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        method: Option<Aggregation>,
        #[arg(long)]
        k: Option<usize>,
        /// Drop results scoring below this value.
        #[arg(long)]
        threshold: Option<f64>,
        /// Restrict candidates to this corpus; out-of-corpus graph entities
        /// are dropped.
        #[arg(long)]
        patents: Option<PathBuf>,
        #[arg(long, default_value = "ranked.tsv")]
        out: PathBuf,
    },
    /// Rank a holdout from a seed set and compare aggregation methods.
    EvalRecall {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        holdout: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = Aggregation::ALL.to_vec())]
        methods: Vec<Aggregation>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Count and diff noun-phrase concepts of two patent sets.
    Concepts {
        /// Ids of the initial set.
        #[arg(long)]
        initial: PathBuf,
        /// Ids of the retrieved set, or a ranked TSV.
        #[arg(long)]
        retrieved: PathBuf,
        /// `doc_id\tsurface\tpos` from an external tagger.
        #[arg(long, required_unless_present = "patents")]
        tokens: Option<PathBuf>,
        /// Tag the corpus with the built-in fallback tagger instead.
        #[arg(long, conflicts_with = "tokens")]
        patents: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        keywords: Vec<String>,
        #[arg(long, default_value_t = 2)]
        min_freq: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Generate a synthetic corpus and run every stage on it.
    DemoSynthetic {
        #[arg(long, default_value = "demo-out")]
        out_dir: PathBuf,
        #[arg(long)]
        patents_per_topic: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct BlockPaths {
    /// Block A.
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Block B.
    #[arg(long)]
    pub citation: Option<PathBuf>,
    /// Block C.
    #[arg(long)]
    pub inventor: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainKgArgs {
    #[arg(long, value_parser = parse_kind)]
    pub graph: EdgeKind,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub norm: Option<Norm>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Hold out this many facts and report filtered link prediction.
    #[arg(long, default_value_t = 0)]
    pub holdout: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub patents: PathBuf,
    #[command(flatten)]
    pub blocks: BlockPaths,
    /// Comma-separated specs; brackets may contain commas.
    #[arg(long)]
    pub specs: Option<String>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub averaging: Option<Averaging>,
    #[arg(long, default_value = "selection.tsv")]
    pub out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<EdgeKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_missing(s: &str) -> std::result::Result<MissingPolicy, String> {
    match s {
        "error" => Ok(MissingPolicy::Error),
        "zero" => Ok(MissingPolicy::Zero),
        _ => Err(format!("expected `error` or `zero`, got `{s}`")),
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

fn load_block(path: &Option<PathBuf>) -> Result<Option<VectorTable>> {
    path.as_deref().map(VectorTable::load).transpose()
}

fn read_any_ids(path: &Path) -> Result<Vec<String>> {
    let first = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if first.lines().next().map(str::trim_end) == Some(RANKED_HEADER) {
        read_ranked_ids(path)
    } else {
        tsv::read_id_list(path)
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.apply_seed(s);
    }
    let seed = cfg.seed.unwrap_or(0);

    match cli.command {
        Command::Ingest {
            patents,
            citations,
            inventors,
            out,
        } => {
            let ing = pipeline::ingest(&patents, citations.as_deref(), inventors.as_deref(), cli.lenient)?;
            tsv::write_string(&out, &ing.report.to_tsv())?;
            info!("{} patents, {} labels", ing.report.patents, ing.report.label_space);
        }
        Command::BuildKg { graph, edges, out } => {
            let edges = edges.unwrap_or_else(|| PathBuf::from(format!("{graph}s.tsv")));
            let store = build_graph(&load_edges(&edges, graph, cli.lenient)?)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{graph}.triples.tsv")));
            store.write_tsv(&out)?;
            info!("{} entities, {} facts", store.num_entities(), store.len());
        }
        Command::TrainKg(a) => {
            let t = cfg.transe_mut(a.graph);
            if let Some(v) = a.dim {
                t.dim = v;
            }
            if let Some(v) = a.epochs {
                t.epochs = v;
            }
            if let Some(v) = a.learning_rate {
                t.learning_rate = v;
            }
            if let Some(v) = a.margin {
                t.margin = v;
            }
            if let Some(v) = a.norm {
                t.norm = v;
            }
            if let Some(v) = a.batch_size {
                t.batch_size = v;
            }
            if let Some(v) = a.negatives {
                t.negatives_per_positive = v;
            }
            let t = t.clone();
            t.validate()?;
            let edges = a.edges.unwrap_or_else(|| PathBuf::from(format!("{}s.tsv", a.graph)));
            let store = build_graph(&load_edges(&edges, a.graph, cli.lenient)?)?;
            let g = pipeline::train_graph(store, &t, a.holdout)?;
            let path = pipeline::write_trained_graph(&g, &a.out_dir, &a.graph.to_string())?;
            info!("wrote {}", path.display());
            if let Some(l) = &g.link {
                info!("mean rank {:.2}, hits@10 {:.3}", l.mean_rank, l.hits_at_10);
            }
        }
        Command::EmbedText {
            patents,
            external,
            dim,
            max_tokens,
            sequences,
            out,
        } => {
            let corpus = load_patents(&patents, cli.lenient)?;
            if let Some(seq) = &sequences {
                write_sequences(&corpus, max_tokens, seq)?;
            }
            let table = match external {
                Some(p) => load_text_embeddings(&p, dim)?,
                None => embed_corpus(&corpus, dim.unwrap_or(DEFAULT_TEXT_DIM), seed, max_tokens)?,
            };
            table.save(&out)?;
        }
        Command::Fuse {
            spec,
            patents,
            blocks,
            missing,
            normalize_blocks,
            out,
        } => {
            let spec: FusionSpec = spec.parse()?;
            let corpus = load_patents(&patents, cli.lenient)?;
            let (a, b, c) = (load_block(&blocks.text)?, load_block(&blocks.citation)?, load_block(&blocks.inventor)?);
            let tables = BlockTables {
                a: a.as_ref(),
                b: b.as_ref(),
                c: c.as_ref(),
            };
            let opts = FuseOptions {
                missing,
                normalize_blocks,
            };
            let (_, report) = pipeline::write_fused(&spec, &corpus, &tables, opts, &out)?;
            info!(
                "{} patents; missing A {}, B {}, C {}",
                report.patents, report.missing_a, report.missing_b, report.missing_c
            );
        }
        Command::SelectEmbedding(a) => {
            if let Some(s) = &a.specs {
                cfg.specs = parse_spec_list(s)?;
            }
            let m = &mut cfg.mlp;
            if let Some(v) = a.hidden {
                m.hidden_dim = v;
            }
            if let Some(v) = a.epochs {
                m.epochs = v;
            }
            if let Some(v) = a.learning_rate {
                m.learning_rate = v;
            }
            if let Some(v) = a.batch_size {
                m.batch_size = v;
            }
            if let Some(v) = a.dropout {
                m.dropout_rate = v;
            }
            if let Some(v) = a.averaging {
                m.averaging = v;
            }
            m.seed = seed;
            let corpus = load_patents(&a.patents, cli.lenient)?;
            let blocks = &a.blocks;
            let (ta, tb, tc) = (load_block(&blocks.text)?, load_block(&blocks.citation)?, load_block(&blocks.inventor)?);
            let tables = BlockTables {
                a: ta.as_ref(),
                b: tb.as_ref(),
                c: tc.as_ref(),
            };
            let report = pipeline::select_embedding(&corpus, &tables, &cfg.specs, &cfg.mlp)?;
            tsv::write_string(&a.out, &report.to_tsv())?;
        }
        Command::Retrieve {
            seeds,
            embeddings,
            method,
            k,
            threshold,
            patents,
            out,
        } => {
            let seeds = SeedSet::new(tsv::read_id_list(&seeds)?)?;
            let mut universe = VectorTable::load(&embeddings)?;
            if let Some(p) = patents {
                let corpus = load_patents(&p, cli.lenient)?;
                universe = universe.retain_keys(|k| corpus.contains(k));
            }
            let results = retrieve_top_k(
                &seeds,
                &universe,
                method.unwrap_or(cfg.method),
                k.unwrap_or(cfg.k),
                threshold.or(cfg.threshold),
            )?;
            write_ranked(&results, &out)?;
        }
        Command::EvalRecall {
            seeds,
            holdout,
            embeddings,
            methods,
            out_dir,
        } => {
            let seeds = SeedSet::new(tsv::read_id_list(&seeds)?)?;
            let holdout = tsv::read_id_list(&holdout)?;
            let universe = VectorTable::load(&embeddings)?;
            let r = pipeline::eval_recall(&seeds, &holdout, &universe, &methods, &out_dir)?;
            info!("best method by AUC: {}", r.comparison.winner);
        }
        Command::Concepts {
            initial,
            retrieved,
            tokens,
            patents,
            keywords,
            min_freq,
            out_dir,
        } => {
            let docs = match (tokens, patents) {
                (Some(t), _) => load_tokens(&t)?,
                (None, Some(p)) => pipeline::tag_corpus(&load_patents(&p, cli.lenient)?, DEFAULT_MAX_TOKENS)?,
                (None, None) => return Err(Error::Config("need --tokens or --patents".into())),
            };
            let report = pipeline::concept_report(
                &docs,
                &tsv::read_id_list(&initial)?,
                &read_any_ids(&retrieved)?,
                &keywords,
                &PhraseFilter::default(),
                min_freq,
            );
            pipeline::write_concepts(&report, &out_dir)?;
        }
        Command::DemoSynthetic {
            out_dir,
            patents_per_topic,
        } => {
            let mut opts = DemoOptions::default();
            if let Some(n) = patents_per_topic {
                opts.patents_per_topic = n;
            }
            if cli.config.is_some() {
                opts.transe = cfg.citation.clone();
                opts.mlp = cfg.mlp.clone();
                opts.specs = cfg.specs.clone();
                opts.method = cfg.method;
                opts.k = cfg.k;
            }
            let summary = pipeline::run_demo(&out_dir, seed, &opts)?;
            println!("patents\t{}", summary.patents);
            println!("best_spec\t{}", summary.best_spec);
            for (m, a) in &summary.auc {
                println!("auc_{m}\t{a:.6}");
            }
            if let Some(l) = &summary.citation_link {
                println!("citation_hits_at_10\t{:.6}", l.hits_at_10);
            }
        }
    }
    Ok(())
}
