//! Turn citation and inventor edge lists into triple stores.
//!
//! ```bash
//! cargo run --example build_knowledge_graphs
//! ```

use patent_retrieval::kgraph::{build_graph, EntityType};
use patent_retrieval::synthetic::demo_corpus;

fn main() -> patent_retrieval::Result<()> {
    let demo = demo_corpus(20, 7);
    for edges in [&demo.citations, &demo.inventors] {
        let store = build_graph(edges)?;
        let inventors = (0..store.num_entities())
            .filter(|&e| store.entity_type(e) == EntityType::Inventor)
            .count();
        println!(
            "{}: {} facts, {} entities ({} inventors), relation `{}`",
            edges.kind,
            store.len(),
            store.num_entities(),
            inventors,
            store.relations().key(0),
        );
        let t = store.triples()[0];
        println!(
            "  first fact: {} {} {}",
            store.entities().key(t.head),
            store.relations().key(t.relation),
            store.entities().key(t.tail)
        );
    }
    Ok(())
}
