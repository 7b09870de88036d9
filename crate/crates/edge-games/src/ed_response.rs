//! Follower-side solver: per-item quality responses and the
//! storage-constrained caching selection.
//!
//! For a single offer with payment `g`, an ED maximizing
//! `g*theta*q - c*nu*q^2` picks `q = g*theta / (2*c*nu)` and saturates at 1
//! once the payment reaches `2*c*nu/theta`. With a binding storage capacity
//! the per-item values feed an exact 0/1 knapsack over integer MB weights.
//! A subset-enumeration solver doubles as the test oracle.

use serde::{Deserialize, Serialize};

use crate::domain::EdgeDeviceParams;
use crate::error::{Error, Result};

/// Hard ceiling on the knapsack DP capacity axis, in MB.
pub const CAPACITY_DP_CEILING: u32 = 1 << 22;

/// Largest offer count accepted by the brute-force solver.
pub const BRUTE_FORCE_MAX_OFFERS: usize = 20;

/// One payment offer as seen by a device: which CP and content it is for,
/// what it pays, and how much storage it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOffer {
    pub cp_index: usize,
    pub content_index: usize,
    /// Payment for full-quality service of this content.
    pub payment: f64,
    /// Content size in MB.
    pub size: u32,
    /// Demand weight of the pair, carried through for reporting.
    pub demand_weight: f64,
}

impl ItemOffer {
    fn validate(&self) -> Result<()> {
        if !(self.payment >= 0.0) {
            return Err(Error::invalid(format!(
                "offer ({}, {}): payment must be >= 0",
                self.cp_index, self.content_index
            )));
        }
        if self.size == 0 {
            return Err(Error::invalid(format!(
                "offer ({}, {}): size must be >= 1 MB",
                self.cp_index, self.content_index
            )));
        }
        Ok(())
    }
}

/// A device's full response: which items it caches, at what quality, the
/// profit it realizes, and the storage it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdResponse {
    /// Caching indicator per (cp, content).
    pub cached: Vec<Vec<bool>>,
    /// Quality per (cp, content); zero exactly where `cached` is false.
    pub quality: Vec<Vec<f64>>,
    /// Realized device profit.
    pub utility: f64,
    /// Total size of cached items in MB.
    pub used_capacity: u64,
}

impl EdResponse {
    fn empty(shape: &[usize]) -> Self {
        EdResponse {
            cached: shape.iter().map(|&m| vec![false; m]).collect(),
            quality: shape.iter().map(|&m| vec![0.0; m]).collect(),
            utility: 0.0,
            used_capacity: 0,
        }
    }
}

/// Unconstrained quality best reply to payment `g`: full quality once the
/// payment reaches the saturation point `2*c*nu/theta`, proportional below.
pub fn best_quality(g: f64, theta: f64, c: f64, nu: f64) -> Result<f64> {
    if !(g >= 0.0) {
        return Err(Error::invalid(format!("payment must be >= 0, got {g}")));
    }
    if !(theta > 0.0 && c > 0.0 && nu > 0.0) {
        return Err(Error::invalid("theta, c, nu must be > 0"));
    }
    let saturation = 2.0 * c * nu / theta;
    if g >= saturation {
        Ok(1.0)
    } else {
        Ok(g * theta / (2.0 * c * nu))
    }
}

/// Profit-maximizing quality on `[epsilon, 1]` and the profit it earns.
/// The caller decides whether caching at that profit is worthwhile.
pub fn item_profit(g: f64, theta: f64, c: f64, nu: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let q = best_quality(g, theta, c, nu)?.clamp(epsilon, 1.0);
    let profit = g * theta * q - c * nu * q * q;
    Ok((q, profit))
}

struct ScoredOffer {
    index: usize,
    quality: f64,
    profit: f64,
}

fn score_offers(
    offers: &[ItemOffer],
    cost: f64,
    theta: f64,
    nu: f64,
    epsilon: f64,
) -> Result<Vec<ScoredOffer>> {
    offers
        .iter()
        .enumerate()
        .map(|(index, offer)| {
            offer.validate()?;
            let (quality, profit) = item_profit(offer.payment, theta, cost, nu, epsilon)?;
            Ok(ScoredOffer { index, quality, profit })
        })
        .collect()
}

fn response_shape(offers: &[ItemOffer]) -> Vec<usize> {
    let mut shape = Vec::new();
    for offer in offers {
        if offer.cp_index >= shape.len() {
            shape.resize(offer.cp_index + 1, 0);
        }
        shape[offer.cp_index] = shape[offer.cp_index].max(offer.content_index + 1);
    }
    shape
}

fn assemble_response(
    offers: &[ItemOffer],
    scored: &[ScoredOffer],
    chosen: &[bool],
) -> EdResponse {
    let mut response = EdResponse::empty(&response_shape(offers));
    for item in scored {
        if chosen[item.index] {
            let offer = &offers[item.index];
            response.cached[offer.cp_index][offer.content_index] = true;
            response.quality[offer.cp_index][offer.content_index] = item.quality;
            response.utility += item.profit;
            response.used_capacity += offer.size as u64;
        }
    }
    response
}

/// Exact maximizer of the device profit subject to the storage capacity.
///
/// Items whose best achievable profit is nonpositive are never cached. If
/// the remaining items fit the capacity outright they are all cached, which
/// reproduces the unconstrained closed-form response; otherwise the
/// selection is a 0/1 knapsack solved exactly by dynamic programming over
/// integer MB capacities.
pub fn solve_ed(
    offers: &[ItemOffer],
    params: &EdgeDeviceParams,
    theta: f64,
    nu: f64,
    epsilon: f64,
) -> Result<EdResponse> {
    let scored = score_offers(offers, params.cost, theta, nu, epsilon)?;
    let mut chosen = vec![false; offers.len()];

    let candidates: Vec<&ScoredOffer> = scored.iter().filter(|s| s.profit > 0.0).collect();
    let total_size: u64 = candidates.iter().map(|s| offers[s.index].size as u64).sum();

    if total_size <= params.capacity as u64 {
        for item in &candidates {
            chosen[item.index] = true;
        }
        return Ok(assemble_response(offers, &scored, &chosen));
    }

    if params.capacity > CAPACITY_DP_CEILING {
        return Err(Error::ResourceLimit(format!(
            "knapsack capacity {} MB exceeds the {} MB DP ceiling",
            params.capacity, CAPACITY_DP_CEILING
        )));
    }

    let cap = params.capacity as usize;
    let mut dp = vec![0.0_f64; cap + 1];
    // keep[j] bit w: candidate j is included at DP state w. Strict
    // improvement only, so ties resolve toward caching earlier offers.
    let words = cap / 64 + 1;
    let mut keep = vec![0u64; candidates.len() * words];
    for (j, item) in candidates.iter().enumerate() {
        let size = offers[item.index].size as usize;
        for w in (size..=cap).rev() {
            let with = dp[w - size] + item.profit;
            if with > dp[w] {
                dp[w] = with;
                keep[j * words + w / 64] |= 1 << (w % 64);
            }
        }
    }
    let mut w = cap;
    for j in (0..candidates.len()).rev() {
        if keep[j * words + w / 64] >> (w % 64) & 1 == 1 {
            chosen[candidates[j].index] = true;
            w -= offers[candidates[j].index].size as usize;
        }
    }
    Ok(assemble_response(offers, &scored, &chosen))
}

/// Subset-enumeration reference solver. Ties in total profit resolve toward
/// the smallest caching bitmask, i.e. toward caching lower offer indices.
pub fn solve_ed_bruteforce(
    offers: &[ItemOffer],
    params: &EdgeDeviceParams,
    theta: f64,
    nu: f64,
    epsilon: f64,
) -> Result<EdResponse> {
    if offers.len() > BRUTE_FORCE_MAX_OFFERS {
        return Err(Error::ResourceLimit(format!(
            "brute force refuses {} offers (limit {})",
            offers.len(),
            BRUTE_FORCE_MAX_OFFERS
        )));
    }
    let scored = score_offers(offers, params.cost, theta, nu, epsilon)?;
    let mut best_mask = 0usize;
    let mut best_value = 0.0_f64;
    for mask in 0..(1usize << offers.len()) {
        let mut value = 0.0;
        let mut size = 0u64;
        for item in &scored {
            if mask >> item.index & 1 == 1 {
                value += item.profit;
                size += offers[item.index].size as u64;
            }
        }
        if size <= params.capacity as u64 && value > best_value {
            best_value = value;
            best_mask = mask;
        }
    }
    let chosen: Vec<bool> = (0..offers.len()).map(|j| best_mask >> j & 1 == 1).collect();
    Ok(assemble_response(offers, &scored, &chosen))
}

/// Device utility of an arbitrary quality profile, including cheating
/// entries. Honest entries `q in [0,1]` earn `g*theta*q - c*nu*q^2`;
/// cheating entries `q = -1` earn no payment and lose the fixed cheat cost.
pub fn ed_utility_with_cheating(
    quality: &[Vec<f64>],
    payments: &[Vec<f64>],
    params: &EdgeDeviceParams,
    theta: f64,
    nu: f64,
) -> Result<f64> {
    if quality.len() != payments.len() {
        return Err(Error::invalid("quality and payment tables differ in shape"));
    }
    let mut total = 0.0;
    for (q_row, g_row) in quality.iter().zip(payments) {
        if q_row.len() != g_row.len() {
            return Err(Error::invalid("quality and payment tables differ in shape"));
        }
        for (&q, &g) in q_row.iter().zip(g_row) {
            if q == -1.0 {
                total -= params.cheat_cost;
            } else if (0.0..=1.0).contains(&q) {
                total += g * theta * q - params.cost * nu * q * q;
            } else {
                return Err(Error::invalid(format!(
                    "quality {q} outside {{-1}} union [0,1]"
                )));
            }
        }
    }
    Ok(total)
}
