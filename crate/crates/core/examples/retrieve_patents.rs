//! Rank a universe of vectors against a seed set with each aggregation
//! method.
//!
//! ```bash
//! cargo run --example retrieve_patents
//! ```

use patent_retrieval::retrieval::{retrieve_top_k, Aggregation, SeedSet};
use patent_retrieval::synthetic::recall_fixture;

fn main() -> patent_retrieval::Result<()> {
    let fx = recall_fixture(16, 5, 10, 3, 200, 4);
    let seeds = SeedSet::new(fx.seeds.iter().cloned())?;
    for method in Aggregation::ALL {
        let top = retrieve_top_k(&seeds, &fx.universe, method, 8, None)?;
        let ids: Vec<&str> = top.iter().map(|r| r.patent_id.as_str()).collect();
        println!("{method:<6} {}", ids.join(" "));
    }
    // Seed-adjacent distractors (D..) crowd out the max ranking; the
    // holdout (H..) sits near the seed centroid.
    Ok(())
}
