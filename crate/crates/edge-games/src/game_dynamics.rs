//! Decentralized best-response dynamics between providers and devices,
//! plus the potential-function machinery that certifies the light-regime
//! equilibrium.
//!
//! Each iteration alternates a follower pass (every device solves its
//! caching problem against the standing payments) and a leader pass (every
//! provider reallocates each content's budget against the anticipated
//! responses). Under light storage the provider competition admits the
//! exact potential
//!
//! ```text
//! P(g) = sum over (cp, ed, content) of
//!        A * ln(1 + g*theta/(2*c*nu)) - g^2*theta^2/(2*c*nu)
//! ```
//!
//! whose unilateral differences coincide with the deviating provider's
//! utility differences; the loop then reaches the unique equilibrium in two
//! iterations. Under strict storage the providers are coupled through the
//! shared capacities: the loop tracks which (provider, device, content)
//! pairs were rejected while actually paid, retries each such pair once,
//! and freezes it out after a second rejection, which keeps the dynamics
//! finite. Non-convergence is reported, never raised.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cp_optimizer::{allocate_content, anticipated_item_utility, problem_for_content};
use crate::domain::{GameInstance, PaymentMatrix, StorageRegime};
use crate::ed_response::{solve_ed, EdResponse, ItemOffer};
use crate::error::{Error, Result};

/// Recurrence window used to flag payment limit cycles.
pub const CYCLE_WINDOW: usize = 10;

/// Paid rejections tolerated per (cp, ed, content) pair before the pair is
/// frozen out of the provider's anticipation.
const MAX_PAID_REJECTIONS: u8 = 2;

/// Loop controls for [`run_best_response`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOptions {
    pub max_iterations: usize,
    /// A provider counts as settled when its re-solve improves its
    /// anticipated utility by no more than this.
    pub utility_tolerance: f64,
    /// Payments count as settled when the max-norm step is below this.
    pub payment_tolerance: f64,
    /// Light treats every capacity as non-binding; strict enforces it.
    pub regime: StorageRegime,
}

impl DynamicsOptions {
    pub fn for_regime(regime: StorageRegime) -> Self {
        DynamicsOptions {
            max_iterations: 100,
            utility_tolerance: 1e-6,
            payment_tolerance: 1e-6,
            regime,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("options: max_iterations must be >= 1"));
        }
        if !(self.utility_tolerance > 0.0) || !(self.payment_tolerance > 0.0) {
            return Err(Error::invalid("options: tolerances must be > 0"));
        }
        Ok(())
    }
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions::for_regime(StorageRegime::Light)
    }
}

/// Outcome of one dynamics run. Serializes with a stable key schema; the
/// measured wall time is kept in memory only so that identical runs emit
/// identical documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub regime: StorageRegime,
    pub iterations: usize,
    pub converged: bool,
    /// Final payments.
    pub payments: PaymentMatrix,
    /// Final device responses, one per device.
    pub responses: Vec<EdResponse>,
    /// Realized provider utilities per iteration (index 0 is the response
    /// to the opening payments; the last row is the final state).
    pub cp_utilities: Vec<Vec<f64>>,
    /// Realized device utilities per iteration, same layout.
    pub ed_utilities: Vec<Vec<f64>>,
    /// Potential value before the loop and after every leader pass;
    /// populated in the light regime only.
    pub potential_trace: Vec<f64>,
    /// Recurrence period of the payment profile when the loop ended in a
    /// detectable cycle instead of converging.
    pub limit_cycle_period: Option<usize>,
    #[serde(skip, default)]
    pub wall_time: Duration,
}

fn offers_for_ed(instance: &GameInstance, payments: &PaymentMatrix, ed: usize) -> Vec<ItemOffer> {
    let mut offers = Vec::new();
    for (o, cp) in instance.cps.iter().enumerate() {
        for m in 0..cp.catalog.count {
            offers.push(ItemOffer {
                cp_index: o,
                content_index: m,
                payment: payments.values[o][ed][m],
                size: cp.catalog.sizes[m],
                demand_weight: instance.demand_weight(o, ed, m),
            });
        }
    }
    offers
}

fn respond_all(
    instance: &GameInstance,
    payments: &PaymentMatrix,
    regime: StorageRegime,
) -> Result<Vec<EdResponse>> {
    (0..instance.ed_count())
        .map(|i| {
            let offers = offers_for_ed(instance, payments, i);
            let mut params = instance.eds[i].clone();
            if regime == StorageRegime::Light {
                // Relaxed capacity: everything offered fits.
                let total: u64 = offers.iter().map(|o| o.size as u64).sum();
                params.capacity = total.max(1).min(u32::MAX as u64) as u32;
            }
            solve_ed(&offers, &params, instance.theta, instance.nu, instance.epsilon)
        })
        .collect()
}

fn realized_utilities(
    instance: &GameInstance,
    payments: &PaymentMatrix,
    responses: &[EdResponse],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cp_utilities = (0..instance.cp_count())
        .map(|o| {
            let pay_rows: Vec<Vec<f64>> = (0..instance.ed_count())
                .map(|i| payments.values[o][i].clone())
                .collect();
            let q_rows: Vec<Vec<f64>> = (0..instance.ed_count())
                .map(|i| responses[i].quality[o].clone())
                .collect();
            crate::cp_optimizer::realized_cp_utility(&pay_rows, &q_rows, instance, o)
        })
        .collect::<Result<Vec<f64>>>()?;
    let ed_utilities = responses.iter().map(|r| r.utility).collect();
    Ok((cp_utilities, ed_utilities))
}

/// Anticipated utility of one provider under a caching mask: masked-out
/// pairs are expected to serve nothing and cost nothing.
fn anticipated_cp_utility(
    instance: &GameInstance,
    payments: &PaymentMatrix,
    masks: &[Vec<Vec<bool>>],
    cp: usize,
) -> f64 {
    let mut total = 0.0;
    for i in 0..instance.ed_count() {
        for m in 0..instance.cps[cp].catalog.count {
            if masks[cp][i][m] {
                total += anticipated_item_utility(
                    payments.values[cp][i][m],
                    instance.demand_weight(cp, i, m),
                    instance.eds[i].cost,
                    instance.theta,
                    instance.nu,
                );
            }
        }
    }
    total
}

/// Exact potential of the provider game in the light regime: the sum of
/// every provider's substituted utility.
pub fn potential(payments: &PaymentMatrix, instance: &GameInstance) -> f64 {
    let mut total = 0.0;
    for o in 0..instance.cp_count() {
        for i in 0..instance.ed_count() {
            for m in 0..instance.cps[o].catalog.count {
                total += anticipated_item_utility(
                    payments.values[o][i][m],
                    instance.demand_weight(o, i, m),
                    instance.eds[i].cost,
                    instance.theta,
                    instance.nu,
                );
            }
        }
    }
    total
}

/// Run the decentralized payment-update loop from the uniform opening
/// allocation.
pub fn run_best_response(
    instance: &GameInstance,
    options: &DynamicsOptions,
) -> Result<ConvergenceReport> {
    let initial = PaymentMatrix::uniform_initial(instance);
    run_best_response_from(instance, options, initial)
}

/// Run the loop from an explicit opening payment profile.
pub fn run_best_response_from(
    instance: &GameInstance,
    options: &DynamicsOptions,
    initial: PaymentMatrix,
) -> Result<ConvergenceReport> {
    options.validate()?;
    instance.validate()?;
    initial.validate(instance)?;
    let start = Instant::now();
    let light = options.regime == StorageRegime::Light;

    let mut payments = initial;
    let mut masks: Vec<Vec<Vec<bool>>> = instance
        .cps
        .iter()
        .map(|cp| vec![vec![true; cp.catalog.count]; instance.ed_count()])
        .collect();
    let mut paid_rejections: Vec<Vec<Vec<u8>>> = instance
        .cps
        .iter()
        .map(|cp| vec![vec![0u8; cp.catalog.count]; instance.ed_count()])
        .collect();

    let mut cp_utilities = Vec::new();
    let mut ed_utilities = Vec::new();
    let mut potential_trace = Vec::new();
    if light {
        potential_trace.push(potential(&payments, instance));
    }
    let mut recent: Vec<PaymentMatrix> = Vec::new();
    let mut limit_cycle_period = None;
    let mut converged = false;
    let mut iterations = options.max_iterations;

    for iter in 1..=options.max_iterations {
        // Follower pass.
        let responses = respond_all(instance, &payments, options.regime)?;
        let (cp_u, ed_u) = realized_utilities(instance, &payments, &responses)?;
        cp_utilities.push(cp_u);
        ed_utilities.push(ed_u);

        // Anticipation masks: a pair stays masked while the device keeps
        // caching it. A pair rejected while genuinely paid is benched for
        // one round, retried once, and frozen after a second rejection.
        if !light {
            for (o, cp) in instance.cps.iter().enumerate() {
                let floor = cp.catalog.payment_lower;
                for i in 0..instance.ed_count() {
                    for m in 0..cp.catalog.count {
                        let cached = responses[i].cached[o][m];
                        let paid = payments.values[o][i][m] > floor + 1e-12;
                        masks[o][i][m] = if cached {
                            true
                        } else if paid {
                            paid_rejections[o][i][m] =
                                paid_rejections[o][i][m].saturating_add(1);
                            false
                        } else {
                            paid_rejections[o][i][m] < MAX_PAID_REJECTIONS
                        };
                    }
                }
            }
        }

        // Leader pass: each provider re-solves every content allocation.
        let mut next = payments.clone();
        for (o, cp) in instance.cps.iter().enumerate() {
            for m in 0..cp.catalog.count {
                let mask: Vec<bool> = (0..instance.ed_count()).map(|i| masks[o][i][m]).collect();
                let problem = problem_for_content(instance, o, m, mask);
                let allocation = allocate_content(&problem)?;
                for i in 0..instance.ed_count() {
                    next.values[o][i][m] = allocation.payments[i];
                }
            }
        }

        let payment_step = next.max_distance(&payments);
        let max_improvement = (0..instance.cp_count())
            .map(|o| {
                anticipated_cp_utility(instance, &next, &masks, o)
                    - anticipated_cp_utility(instance, &payments, &masks, o)
            })
            .fold(f64::NEG_INFINITY, f64::max);

        payments = next;
        if light {
            potential_trace.push(potential(&payments, instance));
        }

        if payment_step <= options.payment_tolerance
            && max_improvement <= options.utility_tolerance
        {
            converged = true;
            iterations = iter;
            break;
        }

        if let Some(offset) = recent
            .iter()
            .rev()
            .position(|old| old.max_distance(&payments) <= options.payment_tolerance)
        {
            limit_cycle_period = Some(offset + 1);
        }
        recent.push(payments.clone());
        if recent.len() > CYCLE_WINDOW {
            recent.remove(0);
        }
    }

    let responses = respond_all(instance, &payments, options.regime)?;
    let (cp_u, ed_u) = realized_utilities(instance, &payments, &responses)?;
    cp_utilities.push(cp_u);
    ed_utilities.push(ed_u);

    Ok(ConvergenceReport {
        regime: options.regime,
        iterations,
        converged,
        payments,
        responses,
        cp_utilities,
        ed_utilities,
        potential_trace,
        limit_cycle_period: if converged { None } else { limit_cycle_period },
        wall_time: start.elapsed(),
    })
}

/// Smallest meaningful payment for exactness sampling: anything at or
/// above it keeps every device's interior response above the quality
/// floor, so closed-form and solver responses agree exactly.
pub fn payment_floor(instance: &GameInstance) -> f64 {
    let max_sat = (0..instance.ed_count())
        .map(|i| instance.saturation_payment(i))
        .fold(0.0_f64, f64::max);
    1.1 * instance.epsilon * max_sat
}

/// Sample a feasible payment profile: entries are zero or lie in
/// `[payment_floor, min(upper, saturation)]`, and each content's budget is
/// respected by greedy truncation.
pub fn sample_feasible_payments(instance: &GameInstance, rng: &mut ChaCha8Rng) -> PaymentMatrix {
    let floor = payment_floor(instance);
    let mut payments = PaymentMatrix::zeros(instance);
    for (o, cp) in instance.cps.iter().enumerate() {
        for m in 0..cp.catalog.count {
            let budget = cp.catalog.budgets[m];
            let mut spent = 0.0;
            for i in 0..instance.ed_count() {
                let cap = cp.catalog.payment_upper.min(instance.saturation_payment(i));
                if rng.random::<f64>() < 0.25 || cap < floor {
                    continue;
                }
                let g = floor + rng.random::<f64>() * (cap - floor);
                if spent + g <= budget {
                    payments.values[o][i][m] = g;
                    spent += g;
                }
            }
        }
    }
    payments
}

/// Executable form of the exact-potential identity: over `trials` random
/// profiles and unilateral provider deviations, the deviator's realized
/// utility difference must match the potential difference within
/// `tolerance`. The utility route goes through the device solver; the
/// potential route is the closed formula.
pub fn check_exactness(instance: &GameInstance, trials: usize, tolerance: f64) -> Result<bool> {
    if trials == 0 {
        return Err(Error::invalid("exactness: trials must be >= 1"));
    }
    Ok(max_exactness_gap(instance, trials)? <= tolerance)
}

/// Largest observed `|dU - dP|` over the sampled deviations.
pub fn max_exactness_gap(instance: &GameInstance, trials: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance.seed ^ 0x5eed_00d5);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let base = sample_feasible_payments(instance, &mut rng);
        let deviator = (rng.random::<f64>() * instance.cp_count() as f64) as usize;
        let deviator = deviator.min(instance.cp_count() - 1);
        let mut deviated = base.clone();
        let fresh = sample_feasible_payments(instance, &mut rng);
        deviated.values[deviator] = fresh.values[deviator].clone();

        let u_base = realized_for(instance, &base, deviator)?;
        let u_dev = realized_for(instance, &deviated, deviator)?;
        let p_base = potential(&base, instance);
        let p_dev = potential(&deviated, instance);
        worst = worst.max(((u_dev - u_base) - (p_dev - p_base)).abs());
    }
    Ok(worst)
}

fn realized_for(instance: &GameInstance, payments: &PaymentMatrix, cp: usize) -> Result<f64> {
    let responses = respond_all(instance, payments, StorageRegime::Light)?;
    let (cp_u, _) = realized_utilities(instance, payments, &responses)?;
    Ok(cp_u[cp])
}

/// Run the dynamics from `inits` random feasible openings and return the
/// largest max-norm distance between the resulting payment equilibria.
/// Only defined in the light regime, where the equilibrium is unique.
pub fn verify_uniqueness(instance: &GameInstance, inits: usize) -> Result<f64> {
    if inits == 0 {
        return Err(Error::invalid("uniqueness: inits must be >= 1"));
    }
    let options = DynamicsOptions::for_regime(StorageRegime::Light);
    let mut rng = ChaCha8Rng::seed_from_u64(instance.seed ^ 0x0171_c0de);
    let mut finals: Vec<PaymentMatrix> = Vec::with_capacity(inits);
    for _ in 0..inits {
        let initial = sample_feasible_payments(instance, &mut rng);
        let report = run_best_response_from(instance, &options, initial)?;
        finals.push(report.payments);
    }
    let mut max_distance = 0.0_f64;
    for a in 0..finals.len() {
        for b in (a + 1)..finals.len() {
            max_distance = max_distance.max(finals[a].max_distance(&finals[b]));
        }
    }
    Ok(max_distance)
}

/// Uniqueness is a light-regime statement; strict instances are refused.
pub fn verify_uniqueness_for_regime(
    instance: &GameInstance,
    inits: usize,
    regime: StorageRegime,
) -> Result<f64> {
    if regime == StorageRegime::Strict {
        return Err(Error::invalid(
            "uniqueness verification is only defined under the light regime",
        ));
    }
    verify_uniqueness(instance, inits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_instance, ContentCounts, InstanceConfig};

    fn small_config(cp_count: usize, ed_count: usize, contents: u32) -> InstanceConfig {
        InstanceConfig {
            cp_count,
            ed_count,
            contents_per_cp: ContentCounts::Range {
                range: [contents, contents],
            },
            ..InstanceConfig::default()
        }
    }

    #[test]
    fn potential_is_zero_at_zero_payments() {
        let instance = sample_instance(&small_config(2, 3, 4), 8).unwrap();
        let zero = PaymentMatrix::zeros(&instance);
        assert_eq!(potential(&zero, &instance), 0.0);
    }

    #[test]
    fn potential_collapses_to_single_cp_utility() {
        let instance = sample_instance(&small_config(1, 4, 5), 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let payments = sample_feasible_payments(&instance, &mut rng);
        let masks =
            vec![vec![vec![true; 5]; instance.ed_count()]];
        let u = anticipated_cp_utility(&instance, &payments, &masks, 0);
        let p = potential(&payments, &instance);
        assert!((u - p).abs() < 1e-12);
    }

    #[test]
    fn potential_matches_reordered_summation() {
        let instance = sample_instance(&small_config(2, 3, 4), 31).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let payments = sample_feasible_payments(&instance, &mut rng);
        let fast = potential(&payments, &instance);
        // Re-sum innermost-first as an order-independence oracle.
        let mut slow = 0.0;
        for m in 0..4 {
            for i in 0..instance.ed_count() {
                for o in 0..instance.cp_count() {
                    slow += anticipated_item_utility(
                        payments.values[o][i][m],
                        instance.demand_weight(o, i, m),
                        instance.eds[i].cost,
                        instance.theta,
                        instance.nu,
                    );
                }
            }
        }
        assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1.0));
    }

    #[test]
    fn exactness_holds_on_light_instances() {
        for seed in [1, 2, 3] {
            let instance = sample_instance(&small_config(3, 5, 4), seed).unwrap();
            assert!(check_exactness(&instance, 50, 1e-9).unwrap());
        }
    }

    #[test]
    fn exactness_identical_profiles_differ_by_zero() {
        let instance = sample_instance(&small_config(2, 3, 3), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let payments = sample_feasible_payments(&instance, &mut rng);
        let u = realized_for(&instance, &payments, 1).unwrap();
        let p = potential(&payments, &instance);
        assert_eq!(u - u, 0.0);
        assert_eq!(p - p, 0.0);
    }

    #[test]
    fn corrupted_potential_is_detected() {
        let instance = sample_instance(&small_config(2, 4, 3), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Potential with one summand dropped must break the identity.
        let corrupt = |payments: &PaymentMatrix| -> f64 {
            potential(payments, &instance)
                - anticipated_item_utility(
                    payments.values[1][2][1],
                    instance.demand_weight(1, 2, 1),
                    instance.eds[2].cost,
                    instance.theta,
                    instance.nu,
                )
        };
        let mut violated = false;
        for _ in 0..50 {
            let base = sample_feasible_payments(&instance, &mut rng);
            let mut deviated = base.clone();
            let fresh = sample_feasible_payments(&instance, &mut rng);
            deviated.values[1] = fresh.values[1].clone();
            let du = realized_for(&instance, &deviated, 1).unwrap()
                - realized_for(&instance, &base, 1).unwrap();
            let dp = corrupt(&deviated) - corrupt(&base);
            if (du - dp).abs() > 1e-9 {
                violated = true;
                break;
            }
        }
        assert!(violated, "dropping a summand should break exactness");
    }

    #[test]
    fn one_shot_stackelberg_converges_in_two_iterations() {
        let instance = sample_instance(&small_config(1, 1, 3), 5).unwrap();
        let options = DynamicsOptions::for_regime(StorageRegime::Light);
        let report = run_best_response(&instance, &options).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 2, "took {}", report.iterations);

        // The fixed point is the single-problem optimum per content.
        for m in 0..3 {
            let problem = problem_for_content(&instance, 0, m, vec![true]);
            let alloc = allocate_content(&problem).unwrap();
            assert!((report.payments.values[0][0][m] - alloc.payments[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn light_instances_converge_fast_with_monotone_potential() {
        for seed in [10, 20, 30, 40] {
            let instance = sample_instance(&small_config(3, 8, 6), seed).unwrap();
            let options = DynamicsOptions::for_regime(StorageRegime::Light);
            let report = run_best_response(&instance, &options).unwrap();
            assert!(report.converged);
            assert!(report.iterations <= 3, "seed {seed}: {}", report.iterations);
            for w in report.potential_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "seed {seed}: potential dipped");
            }
            // The final potential matches the directly maximized one.
            let mut direct = PaymentMatrix::zeros(&instance);
            for (o, cp) in instance.cps.iter().enumerate() {
                for m in 0..cp.catalog.count {
                    let problem =
                        problem_for_content(&instance, o, m, vec![true; instance.ed_count()]);
                    let alloc = allocate_content(&problem).unwrap();
                    for i in 0..instance.ed_count() {
                        direct.values[o][i][m] = alloc.payments[i];
                    }
                }
            }
            let gap = potential(&direct, &instance) - potential(&report.payments, &instance);
            assert!(gap.abs() <= 1e-6, "seed {seed}: potential gap {gap}");
        }
    }

    #[test]
    fn no_cp_can_improve_at_the_light_fixed_point() {
        let instance = sample_instance(&small_config(3, 6, 5), 77).unwrap();
        let options = DynamicsOptions::for_regime(StorageRegime::Light);
        let report = run_best_response(&instance, &options).unwrap();
        assert!(report.converged);
        let masks: Vec<Vec<Vec<bool>>> = instance
            .cps
            .iter()
            .map(|cp| vec![vec![true; cp.catalog.count]; instance.ed_count()])
            .collect();
        for o in 0..instance.cp_count() {
            let mut best = report.payments.clone();
            for m in 0..instance.cps[o].catalog.count {
                let problem = problem_for_content(&instance, o, m, vec![true; instance.ed_count()]);
                let alloc = allocate_content(&problem).unwrap();
                for i in 0..instance.ed_count() {
                    best.values[o][i][m] = alloc.payments[i];
                }
            }
            let improvement = anticipated_cp_utility(&instance, &best, &masks, o)
                - anticipated_cp_utility(&instance, &report.payments, &masks, o);
            assert!(improvement <= 1e-6, "cp {o} could improve by {improvement}");
        }
    }

    #[test]
    fn strict_pairs_with_tight_capacity_stabilize() {
        let mut config = small_config(2, 2, 2);
        config.storage_regime = StorageRegime::Strict;
        // Capacity fits exactly one content per device.
        config.content_size_mb = [8, 10];
        config.capacity_strict_mb = [10, 12];
        let options = DynamicsOptions::for_regime(StorageRegime::Strict);
        for seed in 0..100 {
            let instance = sample_instance(&config, seed).unwrap();
            let report = run_best_response(&instance, &options).unwrap();
            assert!(report.converged, "seed {seed} did not converge");
            assert!(report.iterations <= 100);
            // Caching sets are a fixed point: re-solving changes nothing.
            let again = respond_all(&instance, &report.payments, StorageRegime::Strict).unwrap();
            for (a, b) in again.iter().zip(&report.responses) {
                assert_eq!(a.cached, b.cached);
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let mut config = small_config(3, 6, 5);
        config.storage_regime = StorageRegime::Strict;
        let instance = sample_instance(&config, 123).unwrap();
        let options = DynamicsOptions::for_regime(StorageRegime::Strict);
        let a = run_best_response(&instance, &options).unwrap();
        let b = run_best_response(&instance, &options).unwrap();
        assert_eq!(a.payments, b.payments);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.cp_utilities, b.cp_utilities);
        assert_eq!(a.ed_utilities, b.ed_utilities);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn scarcity_never_helps_totals() {
        let mut strict_config = small_config(3, 4, 6);
        strict_config.storage_regime = StorageRegime::Strict;
        for seed in [7, 17, 27, 37, 47] {
            let instance = sample_instance(&strict_config, seed).unwrap();
            let strict = run_best_response(
                &instance,
                &DynamicsOptions::for_regime(StorageRegime::Strict),
            )
            .unwrap();
            let light = run_best_response(
                &instance,
                &DynamicsOptions::for_regime(StorageRegime::Light),
            )
            .unwrap();
            let total =
                |rows: &Vec<Vec<f64>>| -> f64 { rows.last().unwrap().iter().sum() };
            assert!(
                total(&strict.cp_utilities) <= total(&light.cp_utilities) + 1e-9,
                "seed {seed}: strict CP total exceeded light"
            );
            assert!(
                total(&strict.ed_utilities) <= total(&light.ed_utilities) + 1e-9,
                "seed {seed}: strict ED total exceeded light"
            );
        }
    }

    #[test]
    fn uniqueness_distance_is_tiny_in_light_regime() {
        let instance = sample_instance(&small_config(2, 5, 4), 88).unwrap();
        let d = verify_uniqueness(&instance, 5).unwrap();
        assert!(d <= 1e-4, "distance {d}");
        let single = verify_uniqueness(&instance, 1).unwrap();
        assert_eq!(single, 0.0);
    }

    #[test]
    fn uniqueness_refuses_strict_regime() {
        let instance = sample_instance(&small_config(2, 3, 3), 9).unwrap();
        assert!(
            verify_uniqueness_for_regime(&instance, 3, StorageRegime::Strict).is_err()
        );
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let mut config = small_config(3, 6, 5);
        config.storage_regime = StorageRegime::Strict;
        let instance = sample_instance(&config, 55).unwrap();
        let options = DynamicsOptions {
            max_iterations: 1,
            ..DynamicsOptions::for_regime(StorageRegime::Strict)
        };
        let report = run_best_response(&instance, &options).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 1);
    }
}
