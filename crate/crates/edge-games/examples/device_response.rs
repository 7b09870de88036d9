//! Follower-side behavior: the closed-form quality response, and what
//! changes when storage gets tight and the device must pick a subset.
//!
//! ```bash
//! cargo run --example device_response
//! ```

use edge_games::domain::EdgeDeviceParams;
use edge_games::ed_response::{best_quality, solve_ed, solve_ed_bruteforce, ItemOffer};

fn main() -> edge_games::Result<()> {
    let (theta, nu, epsilon) = (1.0, 1.0, 0.01);
    let cost = 1.0;

    println!("Quality response of a device with c = {cost} (saturation at g = {}):", 2.0 * cost * nu / theta);
    for g in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        println!("  payment {g:.1} -> quality {:.3}", best_quality(g, theta, cost, nu)?);
    }

    let offers: Vec<ItemOffer> = [(1.8, 10), (1.2, 8), (0.9, 12), (0.6, 6), (0.3, 9)]
        .iter()
        .enumerate()
        .map(|(m, &(payment, size))| ItemOffer {
            cp_index: 0,
            content_index: m,
            payment,
            size,
            demand_weight: 0.0,
        })
        .collect();

    let roomy = EdgeDeviceParams { cost, cheat_cost: 1.0, capacity: 100, user_count: 60 };
    let tight = EdgeDeviceParams { capacity: 20, ..roomy.clone() };

    let free = solve_ed(&offers, &roomy, theta, nu, epsilon)?;
    let pressed = solve_ed(&offers, &tight, theta, nu, epsilon)?;
    println!("\nFive offers, total size {} MB:", offers.iter().map(|o| o.size).sum::<u32>());
    println!(
        "  capacity 100 MB: caches {:?}, profit {:.3}",
        cached_set(&free),
        free.utility
    );
    println!(
        "  capacity  20 MB: caches {:?}, profit {:.3} ({} MB used)",
        cached_set(&pressed),
        pressed.utility,
        pressed.used_capacity
    );

    let oracle = solve_ed_bruteforce(&offers, &tight, theta, nu, epsilon)?;
    println!(
        "  subset enumeration agrees: {}",
        (oracle.utility - pressed.utility).abs() < 1e-12
    );
    Ok(())
}

fn cached_set(response: &edge_games::ed_response::EdResponse) -> Vec<usize> {
    response.cached[0]
        .iter()
        .enumerate()
        .filter_map(|(m, &c)| c.then_some(m))
        .collect()
}
