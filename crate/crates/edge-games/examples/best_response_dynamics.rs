//! The full leader-follower loop on one instance, light versus strict
//! storage, with per-iteration utilities and the potential trace.
//!
//! ```bash
//! cargo run --example best_response_dynamics
//! ```

use edge_games::domain::{sample_instance, ContentCounts, InstanceConfig, StorageRegime};
use edge_games::game_dynamics::{run_best_response, DynamicsOptions};

fn main() -> edge_games::Result<()> {
    let config = InstanceConfig {
        cp_count: 3,
        ed_count: 8,
        contents_per_cp: ContentCounts::Range { range: [6, 6] },
        storage_regime: StorageRegime::Strict,
        ..InstanceConfig::default()
    };
    let instance = sample_instance(&config, 42)?;

    for regime in [StorageRegime::Light, StorageRegime::Strict] {
        let report = run_best_response(&instance, &DynamicsOptions::for_regime(regime))?;
        println!(
            "\n=== {regime} regime: converged = {} after {} iterations",
            report.converged, report.iterations
        );
        println!("{:>5} {:>14} {:>14}", "iter", "total CP util", "total ED util");
        for (k, (cps, eds)) in report.cp_utilities.iter().zip(&report.ed_utilities).enumerate() {
            println!(
                "{k:>5} {:>14.3} {:>14.3}",
                cps.iter().sum::<f64>(),
                eds.iter().sum::<f64>()
            );
        }
        if !report.potential_trace.is_empty() {
            let trace: Vec<String> =
                report.potential_trace.iter().map(|p| format!("{p:.3}")).collect();
            println!("potential trace (nondecreasing): {}", trace.join(" -> "));
        }
        let cached: usize = report
            .responses
            .iter()
            .map(|r| r.cached.iter().flatten().filter(|&&c| c).count())
            .sum();
        println!("cached (cp, ed, content) pairs at the fixed point: {cached}");
    }
    Ok(())
}
