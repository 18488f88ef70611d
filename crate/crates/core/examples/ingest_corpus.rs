//! Write a synthetic corpus to disk, load it back and print the validation
//! report.
//!
//! ```bash
//! cargo run --example ingest_corpus
//! ```

use patent_retrieval::pipeline::ingest;
use patent_retrieval::corpus::{write_edges, write_patents};
use patent_retrieval::synthetic::demo_corpus;

fn main() -> patent_retrieval::Result<()> {
    let dir = std::env::temp_dir().join("patent-retrieval-examples/ingest");
    let demo = demo_corpus(20, 7);
    write_patents(&demo.corpus, &dir.join("patents.tsv"))?;
    write_edges(&demo.citations, &dir.join("citations.tsv"))?;
    write_edges(&demo.inventors, &dir.join("inventors.tsv"))?;

    let ing = ingest(
        &dir.join("patents.tsv"),
        Some(&dir.join("citations.tsv")),
        Some(&dir.join("inventors.tsv")),
        false,
    )?;
    print!("{}", ing.report.to_tsv());
    println!("labels: {}", ing.corpus.label_space().join(" "));
    println!("files under {}", dir.display());
    Ok(())
}
