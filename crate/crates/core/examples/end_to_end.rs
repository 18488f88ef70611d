//! Every stage on a generated corpus: ingest, both graphs, text, embedding
//! selection, fusion, retrieval, recall curves and concepts.
//!
//! ```bash
//! cargo run --release --example end_to_end [OUT_DIR]
//! ```

use patent_retrieval::pipeline::{run_demo, DemoOptions};

fn main() -> patent_retrieval::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("patent-retrieval-examples/end-to-end"));
    let summary = run_demo(&out, 2024, &DemoOptions::default())?;

    print!("{}", summary.selection.to_tsv());
    println!("fused with {} over {} patents", summary.best_spec, summary.patents);
    for r in summary.retrieved.iter().take(5) {
        println!("{:>3} {} {:.4}", r.rank, r.patent_id, r.score);
    }
    for (m, a) in &summary.auc {
        println!("auc {m} {a:.3}");
    }
    println!("{} files in {}", summary.files.len(), out.display());
    Ok(())
}
