//! Compare aggregation methods by the area under their holdout rank curves.
//!
//! ```bash
//! cargo run --example recall_curves
//! ```

use patent_retrieval::evalrecall::{auc, baseline_curve};
use patent_retrieval::pipeline::eval_recall;
use patent_retrieval::retrieval::{Aggregation, SeedSet};
use patent_retrieval::synthetic::recall_fixture;

fn main() -> patent_retrieval::Result<()> {
    let fx = recall_fixture(16, 5, 20, 3, 400, 8);
    let seeds = SeedSet::new(fx.seeds.iter().cloned())?;
    let dir = std::env::temp_dir().join("patent-retrieval-examples/recall");
    std::fs::create_dir_all(&dir).map_err(|e| patent_retrieval::Error::io(&dir, e))?;

    let out = eval_recall(&seeds, &fx.holdout, &fx.universe, &Aggregation::ALL, &dir)?;
    for (method, area) in &out.comparison.order {
        println!("{method:<6} auc {area:.3}");
    }
    println!("baseline auc {:.3}", auc(&baseline_curve(fx.holdout.len())));
    println!("lowest area: {}", out.comparison.winner);
    println!("curves in {}", dir.join("curves.tsv").display());
    Ok(())
}
