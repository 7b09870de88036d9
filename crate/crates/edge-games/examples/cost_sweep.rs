//! Device-cost sweep: provider utilities fall as devices get more
//! expensive, and devices earn more the more providers compete for them.
//!
//! ```bash
//! cargo run --release --example cost_sweep
//! ```

use edge_games::domain::StorageRegime;
use edge_games::experiments::{emit_csv, emit_figure, sweep_cost, FigureKind, SweepSpec};

fn main() -> edge_games::Result<()> {
    let out = std::path::Path::new("target/example-out");
    std::fs::create_dir_all(out).map_err(|e| edge_games::Error::io(out, e))?;
    let costs = [0.5, 0.75, 1.0, 1.25, 1.5];

    for regime in [StorageRegime::Light, StorageRegime::Strict] {
        let spec = SweepSpec::with_defaults(regime, 99);
        let result = sweep_cost(&costs, &spec)?;
        println!("=== {regime} regime (5 contents per CP, {} EDs)", spec.base_config.ed_count);
        println!("{:>6} {:>6} {:>16} {:>16}", "cost", "CPs", "total CP util", "total ED util");
        for row in result.rows.iter().filter(|r| r.cp_index.is_none()) {
            println!(
                "{:>6.2} {:>6} {:>16.2} {:>16.2}",
                row.cost.unwrap(),
                row.cp_count,
                row.mean_cp_utility,
                row.mean_ed_utility
            );
        }
        let csv = out.join(format!("cost_{regime}.csv"));
        emit_csv(&result, &csv)?;
        let svg = out.join(format!("cost_{regime}_ed_utility.svg"));
        emit_figure(&result, FigureKind::EdUtility, &svg)?;
        println!("wrote {} and {}", csv.display(), svg.display());
    }
    Ok(())
}
