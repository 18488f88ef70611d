//! Extract noun-phrase concepts from two patent sets and diff them against
//! a keyword list.
//!
//! ```bash
//! cargo run --example concept_diff
//! ```

use patent_retrieval::concepts::PhraseFilter;
use patent_retrieval::pipeline::{concept_report, tag_corpus};
use patent_retrieval::synthetic::demo_corpus;
use patent_retrieval::textembed::DEFAULT_MAX_TOKENS;

fn main() -> patent_retrieval::Result<()> {
    let demo = demo_corpus(20, 2);
    let docs = tag_corpus(&demo.corpus, DEFAULT_MAX_TOKENS)?;
    let ids_of = |topic: usize| -> Vec<String> {
        demo.corpus
            .records()
            .iter()
            .zip(&demo.topic_of)
            .filter(|(_, &t)| t == topic)
            .map(|(r, _)| r.patent_id.clone())
            .collect()
    };
    let topic0 = ids_of(0);
    let (initial, retrieved) = topic0.split_at(6);

    let report = concept_report(&docs, initial, retrieved, &demo.keywords, &PhraseFilter::default(), 2);
    println!("top retrieved concepts:");
    for c in report.retrieved.iter().take(5) {
        println!("  {:>3}  {}", c.frequency, c.phrase);
    }
    println!("shared: {}", report.diff.shared.len());
    println!("only in retrieved: {}", report.diff.retrieved_only.len());
    for k in &report.diff.keywords {
        println!("keyword `{}` in retrieved concepts: {}", k.keyword, k.in_retrieved);
    }
    Ok(())
}
