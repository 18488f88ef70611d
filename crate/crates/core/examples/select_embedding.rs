//! Train one multi-label classifier per fusion spec and rank the specs by
//! top-1 accuracy on held-out patents.
//!
//! ```bash
//! cargo run --release --example select_embedding
//! ```

use patent_retrieval::classifier::MlpConfig;
use patent_retrieval::fusion::{BlockTables, FusionSpec};
use patent_retrieval::pipeline::select_embedding;
use patent_retrieval::synthetic::block_signal_fixture;

fn main() -> patent_retrieval::Result<()> {
    // Only block B carries class signal in this fixture.
    let fx = block_signal_fixture(240, 8, 16, 9);
    let tables = BlockTables {
        a: Some(&fx.a),
        b: Some(&fx.b),
        c: Some(&fx.c),
    };
    let mlp = MlpConfig {
        hidden_dim: 64,
        epochs: 60,
        seed: 9,
        ..MlpConfig::default()
    };
    let report = select_embedding(&fx.corpus, &tables, &FusionSpec::all(), &mlp)?;
    print!("{}", report.to_tsv());
    println!("best: {}", report.rows[0].spec);
    Ok(())
}
