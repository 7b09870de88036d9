//! Rank-based content model: how the skew parameters shape the
//! popularity and importance distributions.
//!
//! ```bash
//! cargo run --example content_model
//! ```

use edge_games::domain::{importance, popularity};

fn main() -> edge_games::Result<()> {
    println!("Popularity over 10 contents, by skew:");
    println!("{:>6} {}", "skew", "f_1 .. f_10");
    for skew in [0.0, 0.6, 1.2, 2.0] {
        let f = popularity(10, skew)?;
        let row: Vec<String> = f.iter().map(|p| format!("{p:.3}")).collect();
        println!("{skew:>6.1} {}", row.join(" "));
    }

    let f = popularity(10, 1.2)?;
    let p = importance(10, 1.2)?;
    println!("\nWith both skews at 1.2, the joint weight f_m * p_m decays fast:");
    for (m, (fm, pm)) in f.iter().zip(&p).enumerate() {
        println!("  content {:>2}: f = {fm:.3}, p = {pm:.3}, f*p = {:.4}", m + 1, fm * pm);
    }
    let top3: f64 = f.iter().zip(&p).take(3).map(|(a, b)| a * b).sum();
    let total: f64 = f.iter().zip(&p).map(|(a, b)| a * b).sum();
    println!(
        "\nTop 3 of 10 contents carry {:.0}% of the total demand weight.",
        100.0 * top3 / total
    );
    Ok(())
}
