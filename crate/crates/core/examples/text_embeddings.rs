//! Embed title and abstract with the built-in hashed bag-of-words encoder
//! and show how sequences are prepared for an external one.
//!
//! ```bash
//! cargo run --example text_embeddings
//! ```

use patent_retrieval::retrieval::cosine;
use patent_retrieval::synthetic::demo_corpus;
use patent_retrieval::textembed::{embed_corpus, prepare_sequence, DEFAULT_MAX_TOKENS};

fn main() -> patent_retrieval::Result<()> {
    let demo = demo_corpus(10, 3);
    let records = demo.corpus.records();
    println!("sequence: {}", prepare_sequence(&records[0], DEFAULT_MAX_TOKENS)?);

    let table = embed_corpus(&demo.corpus, 64, 3, DEFAULT_MAX_TOKENS)?;
    println!("{} vectors of dim {}", table.len(), table.dim());

    // Same-topic pairs should score above cross-topic pairs on average.
    let (mut same, mut cross) = (Vec::new(), Vec::new());
    for i in 0..records.len() {
        for j in i + 1..records.len() {
            let s = cosine(table.row(i), table.row(j))?;
            if demo.topic_of[i] == demo.topic_of[j] {
                same.push(s);
            } else {
                cross.push(s);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("mean cosine: same topic {:.3}, cross topic {:.3}", mean(&same), mean(&cross));
    Ok(())
}
