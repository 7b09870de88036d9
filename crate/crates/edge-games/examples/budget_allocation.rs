//! Leader-side allocation: spreading one content's budget across
//! heterogeneous devices, with and without a binding budget.
//!
//! ```bash
//! cargo run --example budget_allocation
//! ```

use edge_games::cp_optimizer::{
    allocate_content, anticipated_item_utility, ContentAllocationProblem,
};

fn show(problem: &ContentAllocationProblem) -> edge_games::Result<()> {
    let alloc = allocate_content(problem)?;
    let spent: f64 = alloc.payments.iter().sum();
    let value: f64 = alloc
        .payments
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            anticipated_item_utility(
                g,
                problem.demand_weights[i],
                problem.ed_costs[i],
                problem.theta,
                problem.nu,
            )
        })
        .sum();
    println!(
        "  budget {:>5.1}: payments {:?}  spent {spent:.3}  multiplier {:.3}  utility {value:.3}",
        problem.budget,
        alloc
            .payments
            .iter()
            .map(|g| (g * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
        alloc.multiplier
    );
    Ok(())
}

fn main() -> edge_games::Result<()> {
    let base = ContentAllocationProblem {
        demand_weights: vec![12.0, 6.0, 2.0, 0.5],
        ed_costs: vec![0.6, 0.9, 1.2, 1.4],
        theta: 1.0,
        nu: 1.0,
        lower: 0.0,
        upper: 3.0,
        budget: 20.0,
        mask: vec![true; 4],
    };

    println!("Four devices, demand weights 12/6/2/0.5, costs 0.6..1.4.");
    println!("Slack budget: every payment sits at its own stationary point (multiplier 0).");
    show(&base)?;

    println!("Tightening the budget drives a positive multiplier and trims the weakest devices:");
    for budget in [3.0, 1.5, 0.6] {
        show(&ContentAllocationProblem { budget, ..base.clone() })?;
    }

    println!("Masking out device 0 reallocates its share within the same content:");
    let mut masked = base.clone();
    masked.budget = 1.5;
    masked.mask[0] = false;
    show(&masked)?;
    Ok(())
}
