//! Train TransE on a clustered citation graph and report filtered link
//! prediction on held-out facts.
//!
//! ```bash
//! cargo run --release --example train_transe
//! ```

use patent_retrieval::kgraph::build_graph;
use patent_retrieval::pipeline::{train_graph, write_trained_graph};
use patent_retrieval::synthetic::clustered_citations;
use patent_retrieval::transe::TransEConfig;

fn main() -> patent_retrieval::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (edges, _) = clustered_citations(200, 4, 0.3, 0.005, 1);
    let store = build_graph(&edges)?;
    let cfg = TransEConfig {
        dim: 32,
        epochs: 300,
        seed: 1,
        ..TransEConfig::default()
    };
    let g = train_graph(store, &cfg, 100)?;
    let loss = &g.outcome.loss_history;
    println!("loss: first {:.4}, last {:.4}", loss[0], loss[loss.len() - 1]);
    if let Some(link) = &g.link {
        println!(
            "{} queries: mean rank {:.1}, hits@1 {:.3}, hits@10 {:.3}",
            link.queries, link.mean_rank, link.hits_at_1, link.hits_at_10
        );
    }
    let dir = std::env::temp_dir().join("patent-retrieval-examples/transe");
    std::fs::create_dir_all(&dir).map_err(|e| patent_retrieval::Error::io(&dir, e))?;
    let path = write_trained_graph(&g, &dir, "citation")?;
    println!("wrote {}", path.display());
    Ok(())
}
