//! Leader-side solver: payment allocation for one content across devices.
//!
//! A CP anticipating the devices' quality responses earns, per device,
//!
//! ```text
//! h(g) = A * ln(1 + g*theta/(2*c*nu)) - g^2 * theta^2 / (2*c*nu)
//! ```
//!
//! on the non-saturated branch. Each `h` is strictly concave, so the
//! per-content problem — maximize the sum over devices subject to box
//! bounds and the content budget — splits into independent coordinates
//! coupled only through the budget multiplier. The allocator bisects that
//! multiplier; each coordinate's stationarity condition is a quadratic in
//! the payment with a unique admissible root.

use crate::domain::GameInstance;
use crate::error::{Error, Result};

/// Budget residual accepted by the bisection, in payment units.
pub const BUDGET_RESIDUAL_TOL: f64 = 1e-9;

/// Payment allocation problem for a single (cp, content) pair.
#[derive(Debug, Clone)]
pub struct ContentAllocationProblem {
    /// Demand weight per device.
    pub demand_weights: Vec<f64>,
    /// Unit cost per device.
    pub ed_costs: Vec<f64>,
    pub theta: f64,
    pub nu: f64,
    /// Per-device payment floor.
    pub lower: f64,
    /// Per-device payment cap.
    pub upper: f64,
    /// Total budget for this content across all devices.
    pub budget: f64,
    /// Devices anticipated to cache the content; the rest stay at the floor.
    pub mask: Vec<bool>,
}

impl ContentAllocationProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.demand_weights.len();
        if self.ed_costs.len() != n || self.mask.len() != n {
            return Err(Error::invalid("allocation: sequence lengths differ"));
        }
        if n == 0 {
            return Err(Error::invalid("allocation: needs at least one device"));
        }
        if self.demand_weights.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(Error::invalid("allocation: demand weights must be >= 0"));
        }
        if self.ed_costs.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::invalid("allocation: costs must be > 0"));
        }
        if !(self.theta > 0.0 && self.nu > 0.0) {
            return Err(Error::invalid("allocation: theta and nu must be > 0"));
        }
        if !(self.lower >= 0.0) || self.lower > self.upper {
            return Err(Error::invalid("allocation: needs 0 <= lower <= upper"));
        }
        if !(self.budget >= 0.0) {
            return Err(Error::invalid("allocation: budget must be >= 0"));
        }
        Ok(())
    }
}

/// Result of one content allocation: the payments and the budget
/// multiplier certifying their optimality (zero when the budget is slack).
#[derive(Debug, Clone)]
pub struct ContentAllocation {
    pub payments: Vec<f64>,
    pub multiplier: f64,
}

/// Anticipated per-item CP utility at payment `g`, with the device's
/// quality response substituted: `A*ln(1 + g*theta/(2*c*nu)) -
/// g^2*theta^2/(2*c*nu)` until the response saturates, `A*ln(2) - g*theta`
/// beyond. The two branches agree at the saturation payment.
pub fn anticipated_item_utility(g: f64, demand: f64, c: f64, theta: f64, nu: f64) -> f64 {
    let denom = 2.0 * c * nu;
    let saturation = denom / theta;
    if g <= saturation {
        demand * (1.0 + g * theta / denom).ln() - g * g * theta * theta / denom
    } else {
        demand * std::f64::consts::LN_2 - g * theta
    }
}

/// Marginal anticipated utility on the non-saturated branch; the KKT
/// certificate compares it against the budget multiplier.
pub fn marginal_utility(g: f64, demand: f64, c: f64, theta: f64, nu: f64) -> f64 {
    demand * theta / (2.0 * c * nu + g * theta) - g * theta * theta / (c * nu)
}

/// Unique nonnegative root of `marginal_utility(g) = lambda`, before box clipping.
/// Derived by clearing denominators: `theta^3 g^2 + c nu theta (2 theta +
/// lambda) g + c nu (2 lambda c nu - A theta) = 0`.
fn stationary_payment(lambda: f64, demand: f64, c: f64, theta: f64, nu: f64) -> f64 {
    let cnu = c * nu;
    let a = theta * theta * theta;
    let b = cnu * theta * (2.0 * theta + lambda);
    let e = cnu * (2.0 * lambda * cnu - demand * theta);
    let disc = (b * b - 4.0 * a * e).max(0.0);
    let root = (-b + disc.sqrt()) / (2.0 * a);
    root.max(0.0)
}

fn clipped_payment(
    lambda: f64,
    demand: f64,
    c: f64,
    theta: f64,
    nu: f64,
    lower: f64,
    upper: f64,
) -> f64 {
    stationary_payment(lambda, demand, c, theta, nu).clamp(lower, upper)
}

/// Exact maximizer of the anticipated content utility over the per-device
/// box intersected with the budget. Masked-out devices are pinned at the
/// payment floor. Payments never exceed the device's saturation point,
/// beyond which anticipated utility strictly decreases.
pub fn allocate_content(problem: &ContentAllocationProblem) -> Result<ContentAllocation> {
    problem.validate()?;
    let n = problem.demand_weights.len();
    let theta = problem.theta;
    let nu = problem.nu;

    // Per-coordinate caps: the box top or the saturation payment,
    // whichever is lower, but never below the floor.
    let caps: Vec<f64> = (0..n)
        .map(|i| {
            let sat = 2.0 * problem.ed_costs[i] * nu / theta;
            problem.upper.min(sat).max(problem.lower)
        })
        .collect();

    let masked: Vec<usize> = (0..n).filter(|&i| problem.mask[i]).collect();
    let floor_spend = problem.lower * (n - masked.len()) as f64;
    let effective_budget = problem.budget - floor_spend;
    if problem.lower * masked.len() as f64 > effective_budget + 1e-12 {
        return Err(Error::InfeasibleAllocation(format!(
            "floor {} across {} devices exceeds budget {}",
            problem.lower, n, problem.budget
        )));
    }

    let payments_at = |lambda: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if problem.mask[i] {
                    clipped_payment(
                        lambda,
                        problem.demand_weights[i],
                        problem.ed_costs[i],
                        theta,
                        nu,
                        problem.lower,
                        caps[i],
                    )
                } else {
                    problem.lower
                }
            })
            .collect()
    };
    let masked_spend =
        |g: &[f64]| -> f64 { masked.iter().map(|&i| g[i]).sum::<f64>() };

    let unconstrained = payments_at(0.0);
    if masked_spend(&unconstrained) <= effective_budget + BUDGET_RESIDUAL_TOL {
        return Ok(ContentAllocation {
            payments: unconstrained,
            multiplier: 0.0,
        });
    }

    // Above the largest zero-payment marginal every coordinate clips to the
    // floor, so [0, lambda_hi] brackets the budget-binding multiplier.
    let lambda_hi = masked
        .iter()
        .map(|&i| {
            problem.demand_weights[i] * theta / (2.0 * problem.ed_costs[i] * nu)
        })
        .fold(0.0_f64, f64::max)
        .max(1.0);

    let mut lo = 0.0_f64;
    let mut hi = lambda_hi;
    let mut best = payments_at(hi);
    for _ in 0..200 {
        let spent = masked_spend(&best);
        if effective_budget - spent <= BUDGET_RESIDUAL_TOL * 1e-3 && spent <= effective_budget {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let trial = payments_at(mid);
        if masked_spend(&trial) > effective_budget {
            lo = mid;
        } else {
            hi = mid;
            best = trial;
        }
    }
    Ok(ContentAllocation {
        payments: best,
        multiplier: hi,
    })
}

/// Builds the allocation problem for content `m` of CP `cp` from an
/// instance and an anticipation mask over devices.
pub fn problem_for_content(
    instance: &GameInstance,
    cp: usize,
    content: usize,
    mask: Vec<bool>,
) -> ContentAllocationProblem {
    let catalog = &instance.cps[cp].catalog;
    ContentAllocationProblem {
        demand_weights: (0..instance.ed_count())
            .map(|i| instance.demand_weight(cp, i, content))
            .collect(),
        ed_costs: instance.eds.iter().map(|ed| ed.cost).collect(),
        theta: instance.theta,
        nu: instance.nu,
        lower: catalog.payment_lower,
        upper: catalog.payment_upper,
        budget: catalog.budgets[content],
        mask,
    }
}

/// Realized utility of CP `cp`: logarithmic satisfaction minus payment cost
/// over honest entries, and the cheat penalty `-sigma * r*N*f*p` on entries
/// with quality -1 (where the CP pays nothing).
pub fn realized_cp_utility(
    payments: &[Vec<f64>],
    quality: &[Vec<f64>],
    instance: &GameInstance,
    cp: usize,
) -> Result<f64> {
    let params = &instance.cps[cp];
    let count = params.catalog.count;
    if payments.len() != instance.ed_count() || quality.len() != instance.ed_count() {
        return Err(Error::invalid("cp utility: row count != ed count"));
    }
    let mut total = 0.0;
    for i in 0..instance.ed_count() {
        if payments[i].len() != count || quality[i].len() != count {
            return Err(Error::invalid("cp utility: column count != content count"));
        }
        for m in 0..count {
            let q = quality[i][m];
            let demand = instance.demand_weight(cp, i, m);
            if q == -1.0 {
                total += params.cheat_penalty * (demand / params.satisfaction) * q;
            } else if (0.0..=1.0).contains(&q) {
                total += demand * (1.0 + q).ln() - payments[i][m] * instance.theta * q;
            } else {
                return Err(Error::invalid(format!(
                    "cp utility: quality {q} outside {{-1}} union [0,1]"
                )));
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simple_problem(demand: Vec<f64>, budget: f64, upper: f64) -> ContentAllocationProblem {
        let n = demand.len();
        ContentAllocationProblem {
            demand_weights: demand,
            ed_costs: vec![1.0; n],
            theta: 1.0,
            nu: 1.0,
            lower: 0.0,
            upper,
            budget,
            mask: vec![true; n],
        }
    }

    #[test]
    fn anticipated_utility_at_zero_payment() {
        assert_eq!(anticipated_item_utility(0.0, 4.0, 1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn anticipated_utility_branches_agree_at_knee() {
        // c = nu = theta = 1 puts the knee at g = 2.
        let demand = 3.7;
        let below = anticipated_item_utility(2.0 - 1e-12, demand, 1.0, 1.0, 1.0);
        let at = anticipated_item_utility(2.0, demand, 1.0, 1.0, 1.0);
        let expect = demand * std::f64::consts::LN_2 - 2.0;
        assert!((at - expect).abs() < 1e-12);
        assert!((below - at).abs() < 1e-9);
    }

    #[test]
    fn anticipated_utility_hand_value() {
        let u = anticipated_item_utility(1.0, 4.0, 1.0, 1.0, 1.0);
        assert!((u - (4.0 * 1.5_f64.ln() - 0.5)).abs() < 1e-12);
        assert!((u - 1.12186).abs() < 1e-5);
    }

    #[test]
    fn single_device_interior_optimum() {
        // Stationarity at lambda = 0: 4/(2+g) = g, i.e. g^2 + 2g - 4 = 0.
        let problem = simple_problem(vec![4.0], 10.0, 5.0);
        let alloc = allocate_content(&problem).unwrap();
        let expect = 5.0_f64.sqrt() - 1.0;
        assert!((alloc.payments[0] - expect).abs() < 1e-9, "{}", alloc.payments[0]);
        assert_eq!(alloc.multiplier, 0.0);
        let q = crate::ed_response::best_quality(alloc.payments[0], 1.0, 1.0, 1.0).unwrap();
        assert!((q - 0.61803).abs() < 1e-5);
    }

    #[test]
    fn symmetric_devices_split_binding_budget() {
        let problem = simple_problem(vec![4.0, 4.0], 1.0, 5.0);
        let alloc = allocate_content(&problem).unwrap();
        assert!((alloc.payments[0] - 0.5).abs() < 1e-9);
        assert!((alloc.payments[1] - 0.5).abs() < 1e-9);
        assert!(alloc.multiplier > 0.0);
    }

    #[test]
    fn zero_demand_coordinate_sits_at_floor() {
        let problem = simple_problem(vec![4.0, 0.0], 10.0, 5.0);
        let alloc = allocate_content(&problem).unwrap();
        assert_eq!(alloc.payments[1], 0.0);
    }

    #[test]
    fn masked_devices_pinned_to_floor() {
        let mut problem = simple_problem(vec![4.0, 4.0], 10.0, 5.0);
        problem.mask[1] = false;
        let alloc = allocate_content(&problem).unwrap();
        assert!(alloc.payments[0] > 1.0);
        assert_eq!(alloc.payments[1], 0.0);
    }

    #[test]
    fn empty_mask_returns_floor_vector() {
        let mut problem = simple_problem(vec![4.0, 4.0], 10.0, 5.0);
        problem.mask = vec![false, false];
        let alloc = allocate_content(&problem).unwrap();
        assert_eq!(alloc.payments, vec![0.0, 0.0]);
    }

    #[test]
    fn infeasible_floor_is_an_error() {
        let mut problem = simple_problem(vec![1.0, 1.0, 1.0], 1.0, 5.0);
        problem.lower = 0.5;
        match allocate_content(&problem) {
            Err(Error::InfeasibleAllocation(_)) => {}
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> ContentAllocationProblem {
        ContentAllocationProblem {
            demand_weights: (0..n).map(|_| rng.random::<f64>() * 50.0).collect(),
            ed_costs: (0..n).map(|_| 0.5 + rng.random::<f64>()).collect(),
            theta: 0.8 + rng.random::<f64>() * 0.4,
            nu: 0.8 + rng.random::<f64>() * 0.4,
            lower: 0.0,
            upper: 0.5 + rng.random::<f64>() * 4.5,
            budget: 2.0 + rng.random::<f64>() * 8.0,
            mask: vec![true; n],
        }
    }

    fn objective(problem: &ContentAllocationProblem, payments: &[f64]) -> f64 {
        payments
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
            .sum()
    }

    #[test]
    fn bounds_budget_and_kkt_hold_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..300 {
            let n = 1 + (rng.random::<f64>() * 12.0) as usize;
            let problem = random_problem(&mut rng, n);
            let alloc = allocate_content(&problem).unwrap();
            let spent: f64 = alloc.payments.iter().sum();
            assert!(spent <= problem.budget + BUDGET_RESIDUAL_TOL, "trial {trial}");
            if alloc.multiplier > 0.0 {
                assert!(
                    problem.budget - spent <= BUDGET_RESIDUAL_TOL,
                    "trial {trial}: binding budget left {} unspent",
                    problem.budget - spent
                );
            }
            for (i, &g) in alloc.payments.iter().enumerate() {
                let sat = 2.0 * problem.ed_costs[i] * problem.nu / problem.theta;
                let cap = problem.upper.min(sat);
                assert!(g >= problem.lower - 1e-12 && g <= cap + 1e-12, "trial {trial}");
                let grad = marginal_utility(
                    g,
                    problem.demand_weights[i],
                    problem.ed_costs[i],
                    problem.theta,
                    problem.nu,
                );
                if g > problem.lower + 1e-9 && g < cap - 1e-9 {
                    assert!(
                        (grad - alloc.multiplier).abs() <= 1e-6,
                        "trial {trial} coord {i}: stationarity residual {}",
                        (grad - alloc.multiplier).abs()
                    );
                } else if g <= problem.lower + 1e-9 {
                    assert!(grad <= alloc.multiplier + 1e-6, "trial {trial} coord {i}");
                } else {
                    assert!(grad >= alloc.multiplier - 1e-6, "trial {trial} coord {i}");
                }
            }
        }
    }

    #[test]
    fn matches_grid_search_on_small_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..40 {
            let mut problem = random_problem(&mut rng, 3);
            problem.upper = 0.06 + rng.random::<f64>() * 0.06;
            problem.budget = 0.05 + rng.random::<f64>() * 0.2;
            let alloc = allocate_content(&problem).unwrap();
            let got = objective(&problem, &alloc.payments);

            let step = 1e-3;
            let axis: Vec<Vec<f64>> = (0..3)
                .map(|i| {
                    let cap = problem.upper.min(2.0 * problem.ed_costs[i] * problem.nu / problem.theta);
                    let mut pts: Vec<f64> =
                        (0..=(cap / step) as usize).map(|k| k as f64 * step).collect();
                    pts.push(cap);
                    pts
                })
                .collect();
            let mut best = f64::NEG_INFINITY;
            // Lattice triples cover slack-budget optima; projecting each
            // coordinate in turn onto the budget face covers binding ones.
            for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let cap_c = *axis[c].last().unwrap();
                for &ga in &axis[a] {
                    for &gb in &axis[b] {
                        let remaining = problem.budget - ga - gb;
                        if remaining < 0.0 {
                            continue;
                        }
                        let lattice = if a == 0 { axis[c].as_slice() } else { &[] };
                        for &gc in lattice.iter().chain(&[cap_c.min(remaining)]) {
                            if gc <= remaining {
                                let mut g = [0.0; 3];
                                g[a] = ga;
                                g[b] = gb;
                                g[c] = gc;
                                let v = objective(&problem, &g);
                                if v > best {
                                    best = v;
                                }
                            }
                        }
                    }
                }
            }
            assert!(
                (got - best).abs() <= 1e-3 && got >= best - 1e-9,
                "trial {trial}: allocator {got} vs grid {best}"
            );
        }
    }

    #[test]
    fn raising_costs_never_helps() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let problem = random_problem(&mut rng, 5);
            let base = allocate_content(&problem).unwrap();
            let base_value = objective(&problem, &base.payments);

            let mut pricier = problem.clone();
            let scale = 1.1 + rng.random::<f64>();
            for c in &mut pricier.ed_costs {
                *c *= scale;
            }
            let worse = allocate_content(&pricier).unwrap();
            let worse_value = objective(&pricier, &worse.payments);
            assert!(worse_value <= base_value + 1e-9);
        }
    }

    #[test]
    fn realized_utility_matches_anticipated_under_closed_form_response() {
        let config = crate::domain::InstanceConfig {
            cp_count: 2,
            ed_count: 4,
            contents_per_cp: crate::domain::ContentCounts::Range { range: [3, 3] },
            ..Default::default()
        };
        let instance = crate::domain::sample_instance(&config, 77).unwrap();
        let cp = 1;
        let mut payments = vec![vec![0.0; 3]; 4];
        let mut quality = vec![vec![0.0; 3]; 4];
        let mut anticipated = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..4 {
            for m in 0..3 {
                let g = rng.random::<f64>() * instance.cps[cp].catalog.payment_upper;
                payments[i][m] = g;
                quality[i][m] =
                    crate::ed_response::best_quality(g, instance.theta, instance.eds[i].cost, instance.nu)
                        .unwrap();
                anticipated += anticipated_item_utility(
                    g,
                    instance.demand_weight(cp, i, m),
                    instance.eds[i].cost,
                    instance.theta,
                    instance.nu,
                );
            }
        }
        let realized = realized_cp_utility(&payments, &quality, &instance, cp).unwrap();
        assert!((realized - anticipated).abs() < 1e-9);
    }

    #[test]
    fn realized_utility_zero_and_cheating_cases() {
        let config = crate::domain::InstanceConfig {
            cp_count: 1,
            ed_count: 2,
            contents_per_cp: crate::domain::ContentCounts::Range { range: [2, 2] },
            ..Default::default()
        };
        let instance = crate::domain::sample_instance(&config, 3).unwrap();
        let payments = vec![vec![1.0, 1.0]; 2];
        let zeros = vec![vec![0.0, 0.0]; 2];
        assert_eq!(realized_cp_utility(&payments, &zeros, &instance, 0).unwrap(), 0.0);

        let mut cheated = zeros.clone();
        cheated[0][0] = -1.0;
        let u = realized_cp_utility(&payments, &cheated, &instance, 0).unwrap();
        let expected = -instance.cps[0].cheat_penalty
            * (instance.demand_weight(0, 0, 0) / instance.cps[0].satisfaction);
        assert!((u - expected).abs() < 1e-12);
        assert!(u < 0.0);

        let mut bad = zeros;
        bad[0][0] = 1.2;
        assert!(realized_cp_utility(&payments, &bad, &instance, 0).is_err());
    }
}
