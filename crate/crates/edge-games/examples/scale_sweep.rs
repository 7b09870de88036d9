//! Convergence scaling: a reduced (CP, ED) grid sweep with CSV and SVG
//! output under `target/example-out/`.
//!
//! ```bash
//! cargo run --release --example scale_sweep
//! ```

use edge_games::domain::StorageRegime;
use edge_games::experiments::{emit_csv, emit_figure, sweep_scale, FigureKind, SweepSpec};

fn main() -> edge_games::Result<()> {
    let out = std::path::Path::new("target/example-out");
    std::fs::create_dir_all(out).map_err(|e| edge_games::Error::io(out, e))?;

    for regime in [StorageRegime::Light, StorageRegime::Strict] {
        let spec = SweepSpec {
            ed_counts: vec![5, 15, 25],
            replications: 5,
            ..SweepSpec::with_defaults(regime, 7)
        };
        let result = sweep_scale(&spec)?;
        println!("=== {regime} regime");
        println!("{:>4} {:>4} {:>11} {:>11}", "CPs", "EDs", "mean iters", "conv rate");
        for row in &result.rows {
            println!(
                "{:>4} {:>4} {:>11.2} {:>10.0}%",
                row.cp_count,
                row.ed_count,
                row.mean_iterations,
                100.0 * row.convergence_rate
            );
        }
        let csv = out.join(format!("scale_{regime}.csv"));
        emit_csv(&result, &csv)?;
        let svg = out.join(format!("scale_{regime}_iterations.svg"));
        emit_figure(&result, FigureKind::Iterations, &svg)?;
        println!("wrote {} and {}", csv.display(), svg.display());
    }
    Ok(())
}
