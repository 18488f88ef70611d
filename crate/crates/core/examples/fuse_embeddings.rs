//! Combine text (A), citation (B) and inventor (C) blocks by addition and
//! by concatenation.
//!
//! ```bash
//! cargo run --example fuse_embeddings
//! ```

use patent_retrieval::fusion::{fuse, fuse_all, BlockTables, FuseOptions, FusionSpec, MissingPolicy};
use patent_retrieval::synthetic::block_signal_fixture;

fn main() -> patent_retrieval::Result<()> {
    let fx = block_signal_fixture(40, 4, 8, 5);
    // Drop one patent from the inventor block to show coverage handling.
    let gone = fx.corpus.records()[0].patent_id.clone();
    let c = fx.c.retain_keys(|k| k != gone);
    let tables = BlockTables {
        a: Some(&fx.a),
        b: Some(&fx.b),
        c: Some(&c),
    };

    for s in ["A + B", "[A, B, C]", "B"] {
        let spec: FusionSpec = s.parse()?;
        let (table, report) = fuse_all(&spec, &fx.corpus, &tables, FuseOptions::retrieval())?;
        println!(
            "{spec:<10} dim {:>3}  patents {}  missing C {}",
            table.dim(),
            report.patents,
            report.missing_c
        );
    }

    let strict = FuseOptions {
        missing: MissingPolicy::Error,
        normalize_blocks: false,
    };
    match fuse(&"A + C".parse()?, &gone, &tables, strict) {
        Err(e) => println!("strict policy: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
