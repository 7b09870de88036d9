//! Domain types and seeded instance generation.
//!
//! A game instance couples a set of content providers (CPs, the leaders)
//! with a set of edge devices (EDs, the followers). Each CP owns a content
//! catalog whose popularity and importance follow rank-based Zipf laws, pays
//! EDs per content out of a per-content budget, and anticipates the EDs'
//! quality responses. Each ED carries a quadratic service cost and a storage
//! capacity. All stochastic fields are drawn from configured ranges through
//! a counter-seeded generator, so an instance is a pure function of
//! `(config, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that probability vectors sum to one.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// Slack allowed on per-content budget sums in payment matrices.
pub const BUDGET_SLACK: f64 = 1e-9;

/// Largest admissible content size in MB.
pub const MAX_CONTENT_SIZE_MB: u32 = 1 << 20;

/// Rank-based Zipf probabilities: entry `m` (1-indexed rank) is
/// `m^-gamma / sum_k k^-gamma`. With `gamma = 0` the distribution is
/// uniform; larger `gamma` concentrates mass on the lowest ranks.
pub fn popularity(count: usize, gamma: f64) -> Result<Vec<f64>> {
    zipf(count, gamma, "popularity")
}

/// Rank-based importance probabilities; same functional form as
/// [`popularity`] with skew parameter `beta`.
pub fn importance(count: usize, beta: f64) -> Result<Vec<f64>> {
    zipf(count, beta, "importance")
}

fn zipf(count: usize, skew: f64, what: &str) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid(format!("{what}: content count must be >= 1")));
    }
    if !skew.is_finite() || skew < 0.0 {
        return Err(Error::invalid(format!(
            "{what}: skew must be finite and >= 0, got {skew}"
        )));
    }
    let weights: Vec<f64> = (1..=count).map(|m| (m as f64).powf(-skew)).collect();
    // Kahan summation keeps the sum-to-one invariant inside 1e-12 even at
    // count = 10^4.
    let mut norm = 0.0_f64;
    let mut carry = 0.0_f64;
    for &w in &weights {
        let y = w - carry;
        let t = norm + y;
        carry = (t - norm) - y;
        norm = t;
    }
    Ok(weights.into_iter().map(|w| w / norm).collect())
}

/// A CP's content catalog: per-content popularity, importance, size, and
/// budget, plus the per-device payment bounds shared by all contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentCatalog {
    /// Number of contents offered by the CP.
    pub count: usize,
    /// Popularity distribution over contents (sums to one).
    pub popularity: Vec<f64>,
    /// Importance distribution over contents (sums to one).
    pub importance: Vec<f64>,
    /// Content sizes in MB.
    pub sizes: Vec<u32>,
    /// Per-content global payment budget across all EDs.
    pub budgets: Vec<f64>,
    /// Lower bound on any single per-device payment.
    pub payment_lower: f64,
    /// Upper bound on any single per-device payment.
    pub payment_upper: f64,
}

impl ContentCatalog {
    pub fn validate(&self) -> Result<()> {
        let m = self.count;
        if m == 0 {
            return Err(Error::invalid("catalog: count must be >= 1"));
        }
        for (name, v) in [("popularity", &self.popularity), ("importance", &self.importance)] {
            if v.len() != m {
                return Err(Error::invalid(format!("catalog: {name} length != count")));
            }
            if v.iter().any(|&p| !(p > 0.0)) {
                return Err(Error::invalid(format!(
                    "catalog: {name} entries must be strictly positive"
                )));
            }
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
                return Err(Error::invalid(format!(
                    "catalog: {name} sums to {sum}, expected 1"
                )));
            }
            if v.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "catalog: {name} must be nonincreasing in rank"
                )));
            }
        }
        if self.sizes.len() != m || self.budgets.len() != m {
            return Err(Error::invalid("catalog: sizes/budgets length != count"));
        }
        if self.sizes.iter().any(|&s| s == 0 || s > MAX_CONTENT_SIZE_MB) {
            return Err(Error::invalid(format!(
                "catalog: sizes must lie in [1, {MAX_CONTENT_SIZE_MB}] MB"
            )));
        }
        if self.budgets.iter().any(|&b| !(b >= 0.0)) {
            return Err(Error::invalid("catalog: budgets must be nonnegative"));
        }
        if !(self.payment_lower >= 0.0) || !(self.payment_upper > 0.0) {
            return Err(Error::invalid(
                "catalog: payment_lower must be >= 0 and payment_upper > 0",
            ));
        }
        if self.payment_lower > self.payment_upper {
            return Err(Error::invalid("catalog: payment_lower > payment_upper"));
        }
        for (m_idx, &b) in self.budgets.iter().enumerate() {
            if self.payment_upper > b {
                return Err(Error::invalid(format!(
                    "catalog: payment_upper {} exceeds budget {} of content {}",
                    self.payment_upper, b, m_idx
                )));
            }
        }
        Ok(())
    }
}

/// Per-device parameters of one edge device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDeviceParams {
    /// Cost of serving at the highest caching quality.
    pub cost: f64,
    /// Fixed resource loss when the device cheats.
    pub cheat_cost: f64,
    /// Storage capacity in MB.
    pub capacity: u32,
    /// Mobile users inside the device's coverage at the simulated slot.
    pub user_count: u32,
}

impl EdgeDeviceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0) {
            return Err(Error::invalid("ed: cost must be > 0"));
        }
        if !(self.cheat_cost > 0.0) {
            return Err(Error::invalid("ed: cheat_cost must be > 0"));
        }
        if self.capacity == 0 {
            return Err(Error::invalid("ed: capacity must be >= 1 MB"));
        }
        if self.user_count == 0 {
            return Err(Error::invalid("ed: user_count must be >= 1"));
        }
        Ok(())
    }
}

/// Per-provider parameters: the catalog plus the satisfaction and
/// cheat-penalty weights of the provider's utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpParams {
    pub catalog: ContentCatalog,
    /// Satisfaction weight multiplying the logarithmic quality gain.
    pub satisfaction: f64,
    /// Penalty weight applied when a device serves corrupted content.
    pub cheat_penalty: f64,
}

impl CpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.satisfaction > 0.0) {
            return Err(Error::invalid("cp: satisfaction must be > 0"));
        }
        if !(self.cheat_penalty > 0.0) {
            return Err(Error::invalid("cp: cheat_penalty must be > 0"));
        }
        self.catalog.validate()
    }
}

/// Storage provisioning regime. Light capacities never bind; strict
/// capacities force selective caching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageRegime {
    Light,
    Strict,
}

impl std::fmt::Display for StorageRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StorageRegime::Light => write!(f, "light"),
            StorageRegime::Strict => write!(f, "strict"),
        }
    }
}

impl std::str::FromStr for StorageRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "light" => Ok(StorageRegime::Light),
            "strict" => Ok(StorageRegime::Strict),
            other => Err(Error::invalid(format!(
                "unknown storage regime '{other}' (expected 'light' or 'strict')"
            ))),
        }
    }
}

/// One fully sampled game: all CPs, all EDs, the global adjustment
/// parameters, and the request table `r[cp][ed][content]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub cps: Vec<CpParams>,
    pub eds: Vec<EdgeDeviceParams>,
    /// Global payment adjustment factor.
    pub theta: f64,
    /// Global ED cost adjustment factor.
    pub nu: f64,
    /// Request ratios: for every (cp, ed) the row over contents sums to one.
    pub requests: Vec<Vec<Vec<f64>>>,
    /// Floor quality a device must provide for anything it caches.
    pub epsilon: f64,
    /// Seed the instance was sampled from.
    pub seed: u64,
}

impl GameInstance {
    pub fn cp_count(&self) -> usize {
        self.cps.len()
    }

    pub fn ed_count(&self) -> usize {
        self.eds.len()
    }

    /// Demand weight of the (cp, ed, content) triple: the satisfaction
    /// coefficient `alpha * r * N * f * p` multiplying `log(1 + q)`.
    pub fn demand_weight(&self, cp: usize, ed: usize, content: usize) -> f64 {
        let cp_params = &self.cps[cp];
        cp_params.satisfaction
            * self.requests[cp][ed][content]
            * self.eds[ed].user_count as f64
            * cp_params.catalog.popularity[content]
            * cp_params.catalog.importance[content]
    }

    /// Payment above which ED `ed` already responds with full quality.
    /// Rational CPs never pay more.
    pub fn saturation_payment(&self, ed: usize) -> f64 {
        2.0 * self.eds[ed].cost * self.nu / self.theta
    }

    pub fn validate(&self) -> Result<()> {
        if self.cps.is_empty() || self.eds.is_empty() {
            return Err(Error::invalid("instance: needs >= 1 CP and >= 1 ED"));
        }
        for cp in &self.cps {
            cp.validate()?;
        }
        for ed in &self.eds {
            ed.validate()?;
        }
        if !(self.theta > 0.0) || !(self.nu > 0.0) {
            return Err(Error::invalid("instance: theta and nu must be > 0"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.1) {
            return Err(Error::invalid("instance: epsilon must lie in (0, 0.1]"));
        }
        if self.requests.len() != self.cps.len() {
            return Err(Error::invalid("instance: requests outer length != cp count"));
        }
        for (o, per_ed) in self.requests.iter().enumerate() {
            if per_ed.len() != self.eds.len() {
                return Err(Error::invalid(format!(
                    "instance: requests[{o}] length != ed count"
                )));
            }
            for (i, row) in per_ed.iter().enumerate() {
                if row.len() != self.cps[o].catalog.count {
                    return Err(Error::invalid(format!(
                        "instance: requests[{o}][{i}] length != content count"
                    )));
                }
                if row.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
                    return Err(Error::invalid(format!(
                        "instance: requests[{o}][{i}] has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
                    return Err(Error::invalid(format!(
                        "instance: requests[{o}][{i}] sums to {sum}, expected 1"
                    )));
                }
            }
        }
        for o in 0..self.cps.len() {
            for i in 0..self.eds.len() {
                for m in 0..self.cps[o].catalog.count {
                    let a = self.demand_weight(o, i, m);
                    if !a.is_finite() || a < 0.0 {
                        return Err(Error::invalid(format!(
                            "instance: demand weight at ({o},{i},{m}) is {a}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-CP payments `g[cp][ed][content]` — the leader-side strategy profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentMatrix {
    pub values: Vec<Vec<Vec<f64>>>,
}

impl PaymentMatrix {
    /// All-zero payments shaped after the instance.
    pub fn zeros(instance: &GameInstance) -> Self {
        let values = instance
            .cps
            .iter()
            .map(|cp| vec![vec![0.0; cp.catalog.count]; instance.ed_count()])
            .collect();
        PaymentMatrix { values }
    }

    /// The uniform opening allocation: each content's budget split evenly
    /// across devices, clipped into the per-device payment bounds.
    pub fn uniform_initial(instance: &GameInstance) -> Self {
        let ed_count = instance.ed_count() as f64;
        let mut payments = PaymentMatrix::zeros(instance);
        for (o, cp) in instance.cps.iter().enumerate() {
            let cat = &cp.catalog;
            for m in 0..cat.count {
                let g = (cat.budgets[m] / ed_count).clamp(cat.payment_lower, cat.payment_upper);
                for i in 0..instance.ed_count() {
                    payments.values[o][i][m] = g;
                }
            }
        }
        payments
    }

    /// Max-norm distance to another matrix of identical shape.
    pub fn max_distance(&self, other: &PaymentMatrix) -> f64 {
        let mut d = 0.0_f64;
        for (a_cp, b_cp) in self.values.iter().zip(&other.values) {
            for (a_ed, b_ed) in a_cp.iter().zip(b_cp) {
                for (a, b) in a_ed.iter().zip(b_ed) {
                    d = d.max((a - b).abs());
                }
            }
        }
        d
    }

    pub fn validate(&self, instance: &GameInstance) -> Result<()> {
        if self.values.len() != instance.cp_count() {
            return Err(Error::invalid("payments: outer length != cp count"));
        }
        for (o, per_ed) in self.values.iter().enumerate() {
            let cat = &instance.cps[o].catalog;
            if per_ed.len() != instance.ed_count() {
                return Err(Error::invalid(format!(
                    "payments: cp {o} row count != ed count"
                )));
            }
            for (i, row) in per_ed.iter().enumerate() {
                if row.len() != cat.count {
                    return Err(Error::invalid(format!(
                        "payments: shape mismatch at cp {o}, ed {i}"
                    )));
                }
                for (m, &g) in row.iter().enumerate() {
                    if !(g >= cat.payment_lower - 1e-12 && g <= cat.payment_upper + 1e-12) {
                        return Err(Error::invalid(format!(
                            "payments: g[{o}][{i}][{m}] = {g} outside [{}, {}]",
                            cat.payment_lower, cat.payment_upper
                        )));
                    }
                }
            }
            for m in 0..cat.count {
                let spent: f64 = per_ed.iter().map(|row| row[m]).sum();
                if spent > cat.budgets[m] + BUDGET_SLACK {
                    return Err(Error::invalid(format!(
                        "payments: cp {o} content {m} spends {spent} over budget {}",
                        cat.budgets[m]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn default_cp_count() -> usize {
    5
}
fn default_ed_count() -> usize {
    10
}
fn default_contents_per_cp() -> ContentCounts {
    ContentCounts::Range { range: [5, 25] }
}
fn default_cost_range() -> [f64; 2] {
    [0.5, 1.5]
}
fn default_user_range() -> [u32; 2] {
    [50, 100]
}
fn default_adjust_range() -> [f64; 2] {
    [0.8, 1.2]
}
fn default_skew() -> f64 {
    1.2
}
fn default_alpha() -> f64 {
    20.0
}
fn default_cheat_penalty() -> f64 {
    20.0
}
fn default_cheat_cost() -> f64 {
    1.0
}
fn default_payment_lower() -> f64 {
    0.0
}
fn default_payment_upper_range() -> [f64; 2] {
    [0.5, 5.0]
}
fn default_budget_range() -> [f64; 2] {
    [2.0, 50.0]
}
fn default_size_range() -> [u32; 2] {
    [5, 15]
}
fn default_capacity_light() -> [u32; 2] {
    [1500, 2000]
}
fn default_capacity_strict() -> [u32; 2] {
    [150, 200]
}
fn default_regime() -> StorageRegime {
    StorageRegime::Light
}
fn default_epsilon() -> f64 {
    0.01
}

/// How many contents each CP offers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContentCounts {
    /// Sample each CP's count uniformly from the inclusive range.
    #[serde(rename = "range")]
    Range { range: [u32; 2] },
    /// Exact per-CP counts; the list length must equal `cp_count`.
    #[serde(rename = "explicit")]
    Explicit { explicit: Vec<u32> },
}

/// Sampling configuration: one explicit key per simulated parameter range.
/// Unknown keys are rejected when read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default = "default_cp_count")]
    pub cp_count: usize,
    #[serde(default = "default_ed_count")]
    pub ed_count: usize,
    #[serde(default = "default_contents_per_cp")]
    pub contents_per_cp: ContentCounts,
    /// Per-device unit cost range.
    #[serde(default = "default_cost_range")]
    pub c_i: [f64; 2],
    /// Covered-user count range per device.
    #[serde(default = "default_user_range")]
    pub n_i: [u32; 2],
    /// Payment adjustment factor range (one global draw).
    #[serde(default = "default_adjust_range")]
    pub theta: [f64; 2],
    /// ED cost adjustment factor range (one global draw).
    #[serde(default = "default_adjust_range")]
    pub nu: [f64; 2],
    /// Popularity Zipf skew.
    #[serde(default = "default_skew")]
    pub gamma: f64,
    /// Importance Zipf skew.
    #[serde(default = "default_skew")]
    pub beta: f64,
    /// Satisfaction weight of every CP.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Cheat-penalty weight of every CP.
    #[serde(default = "default_cheat_penalty")]
    pub cheat_penalty: f64,
    /// Fixed cheating loss of every ED.
    #[serde(default = "default_cheat_cost")]
    pub cheat_cost: f64,
    /// Per-device payment floor (scalar).
    #[serde(default = "default_payment_lower")]
    pub payment_lower: f64,
    /// Per-device payment cap range (one draw per CP).
    #[serde(default = "default_payment_upper_range")]
    pub payment_upper: [f64; 2],
    /// Per-content global budget range.
    #[serde(default = "default_budget_range")]
    pub content_budget: [f64; 2],
    /// Content size range in MB.
    #[serde(default = "default_size_range")]
    pub content_size_mb: [u32; 2],
    /// Capacity range in MB used under the light regime.
    #[serde(default = "default_capacity_light")]
    pub capacity_light_mb: [u32; 2],
    /// Capacity range in MB used under the strict regime.
    #[serde(default = "default_capacity_strict")]
    pub capacity_strict_mb: [u32; 2],
    #[serde(default = "default_regime")]
    pub storage_regime: StorageRegime,
    /// Minimum quality of anything cached.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults are total")
    }
}

impl InstanceConfig {
    /// Parse a config from JSON text; unknown keys are an error.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: InstanceConfig = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<config>".into(),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cp_count == 0 || self.ed_count == 0 {
            return Err(Error::invalid("config: cp_count and ed_count must be >= 1"));
        }
        match &self.contents_per_cp {
            ContentCounts::Range { range } => {
                if range[0] == 0 || range[0] > range[1] {
                    return Err(Error::invalid("config: contents_per_cp range invalid"));
                }
            }
            ContentCounts::Explicit { explicit } => {
                if explicit.len() != self.cp_count {
                    return Err(Error::invalid(
                        "config: explicit content counts length != cp_count",
                    ));
                }
                if explicit.iter().any(|&m| m == 0) {
                    return Err(Error::invalid("config: content counts must be >= 1"));
                }
            }
        }
        for (name, r) in [
            ("c_i", self.c_i),
            ("theta", self.theta),
            ("nu", self.nu),
            ("payment_upper", self.payment_upper),
            ("content_budget", self.content_budget),
        ] {
            if !(r[0] <= r[1]) || !r[0].is_finite() || !r[1].is_finite() {
                return Err(Error::invalid(format!("config: {name} range must be ordered")));
            }
        }
        if self.c_i[0] <= 0.0 || self.theta[0] <= 0.0 || self.nu[0] <= 0.0 {
            return Err(Error::invalid("config: c_i, theta, nu must be positive"));
        }
        if self.payment_upper[0] <= 0.0 {
            return Err(Error::invalid("config: payment_upper must be positive"));
        }
        for (name, r) in [
            ("n_i", self.n_i),
            ("content_size_mb", self.content_size_mb),
            ("capacity_light_mb", self.capacity_light_mb),
            ("capacity_strict_mb", self.capacity_strict_mb),
        ] {
            if r[0] == 0 || r[0] > r[1] {
                return Err(Error::invalid(format!(
                    "config: {name} range must be ordered and >= 1"
                )));
            }
        }
        if self.content_size_mb[1] > MAX_CONTENT_SIZE_MB {
            return Err(Error::invalid("config: content sizes above 2^20 MB"));
        }
        if self.gamma < 0.0 || self.beta < 0.0 {
            return Err(Error::invalid("config: gamma and beta must be >= 0"));
        }
        if self.alpha <= 0.0 || self.cheat_penalty <= 0.0 || self.cheat_cost <= 0.0 {
            return Err(Error::invalid(
                "config: alpha, cheat_penalty, cheat_cost must be > 0",
            ));
        }
        if self.payment_lower < 0.0 {
            return Err(Error::invalid("config: payment_lower must be >= 0"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.1) {
            return Err(Error::invalid("config: epsilon must lie in (0, 0.1]"));
        }
        Ok(())
    }

    fn capacity_range(&self) -> [u32; 2] {
        match self.storage_regime {
            StorageRegime::Light => self.capacity_light_mb,
            StorageRegime::Strict => self.capacity_strict_mb,
        }
    }
}

// Range draws consume exactly one f64 from the stream regardless of the
// bounds, so instances sampled from configs that differ only in a range
// (e.g. light vs strict capacity) agree on every other field.
fn draw_f64(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + rng.random::<f64>() * (hi - lo)
}

fn draw_u32(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> u32 {
    let span = (hi - lo) as f64 + 1.0;
    let v = lo as f64 + rng.random::<f64>() * span;
    (v as u32).min(hi)
}

/// Sample a complete game instance from `config`. The result is a pure
/// function of `(config, seed)`: identical inputs produce field-identical
/// instances.
pub fn sample_instance(config: &InstanceConfig, seed: u64) -> Result<GameInstance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let theta = draw_f64(&mut rng, config.theta[0], config.theta[1]);
    let nu = draw_f64(&mut rng, config.nu[0], config.nu[1]);

    let cap_range = config.capacity_range();
    let eds: Vec<EdgeDeviceParams> = (0..config.ed_count)
        .map(|_| EdgeDeviceParams {
            cost: draw_f64(&mut rng, config.c_i[0], config.c_i[1]),
            cheat_cost: config.cheat_cost,
            capacity: draw_u32(&mut rng, cap_range[0], cap_range[1]),
            user_count: draw_u32(&mut rng, config.n_i[0], config.n_i[1]),
        })
        .collect();

    let mut cps = Vec::with_capacity(config.cp_count);
    for o in 0..config.cp_count {
        let count = match &config.contents_per_cp {
            ContentCounts::Range { range } => draw_u32(&mut rng, range[0], range[1]) as usize,
            ContentCounts::Explicit { explicit } => explicit[o] as usize,
        };
        let mut upper = draw_f64(&mut rng, config.payment_upper[0], config.payment_upper[1]);
        let budgets: Vec<f64> = (0..count)
            .map(|_| draw_f64(&mut rng, config.content_budget[0], config.content_budget[1]))
            .collect();
        let sizes: Vec<u32> = (0..count)
            .map(|_| draw_u32(&mut rng, config.content_size_mb[0], config.content_size_mb[1]))
            .collect();
        // Keep payment_lower <= payment_upper <= every budget.
        let min_budget = budgets.iter().cloned().fold(f64::INFINITY, f64::min);
        if upper > min_budget {
            upper = min_budget;
        }
        if config.payment_lower > upper {
            return Err(Error::InfeasibleInstance {
                cp: o,
                content: 0,
                detail: format!(
                    "payment floor {} exceeds effective payment cap {upper}",
                    config.payment_lower
                ),
            });
        }
        for (m, &budget) in budgets.iter().enumerate() {
            if config.payment_lower * config.ed_count as f64 > budget {
                return Err(Error::InfeasibleInstance {
                    cp: o,
                    content: m,
                    detail: format!(
                        "payment floor {} times {} devices exceeds budget {budget}",
                        config.payment_lower, config.ed_count
                    ),
                });
            }
        }
        cps.push(CpParams {
            catalog: ContentCatalog {
                count,
                popularity: popularity(count, config.gamma)?,
                importance: importance(count, config.beta)?,
                sizes,
                budgets,
                payment_lower: config.payment_lower,
                payment_upper: upper,
            },
            satisfaction: config.alpha,
            cheat_penalty: config.cheat_penalty,
        });
    }

    let requests: Vec<Vec<Vec<f64>>> = cps
        .iter()
        .map(|cp| {
            (0..config.ed_count)
                .map(|_| {
                    // 1 - u maps the [0,1) stream into (0,1]; every ratio
                    // stays strictly positive after normalization.
                    let raw: Vec<f64> = (0..cp.catalog.count)
                        .map(|_| 1.0 - rng.random::<f64>())
                        .collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|u| u / sum).collect()
                })
                .collect()
        })
        .collect();

    let instance = GameInstance {
        cps,
        eds,
        theta,
        nu,
        requests,
        epsilon: config.epsilon,
        seed,
    };
    instance.validate()?;
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn popularity_uniform_when_flat() {
        let f = popularity(4, 0.0).unwrap();
        for &p in &f {
            assert!((p - 0.25).abs() < 1e-15, "expected 0.25, got {p}");
        }
    }

    #[test]
    fn popularity_single_content() {
        assert_eq!(popularity(1, 1.2).unwrap(), vec![1.0]);
    }

    #[test]
    fn popularity_two_contents_hand_value() {
        // m^-1 weights 1 and 1/2 normalize to 2/3 and 1/3.
        let f = popularity(2, 1.0).unwrap();
        assert!((f[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((f[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn popularity_rejects_empty() {
        assert!(popularity(0, 1.0).is_err());
    }

    #[test]
    fn importance_matches_functional_form() {
        let p = importance(3, 0.0).unwrap();
        for &v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(importance(1, 2.0).unwrap(), vec![1.0]);
        let p = importance(2, 1.0).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zipf_sums_to_one_and_nonincreasing_across_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = 1 + (rng.next_u32() as usize) % 10_000;
            let skew = rng.random::<f64>() * 5.0;
            let f = popularity(m, skew).unwrap();
            let sum: f64 = f.iter().sum();
            assert!(
                (sum - 1.0).abs() <= PROBABILITY_SUM_TOL,
                "M={m} skew={skew}: sum off by {}",
                (sum - 1.0).abs()
            );
            assert!(f.windows(2).all(|w| w[1] <= w[0]), "M={m} skew={skew}");
            assert!(f.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let config = InstanceConfig::default();
        let a = sample_instance(&config, 42).unwrap();
        let b = sample_instance(&config, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_instance(&config, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_fields_stay_in_table_ranges() {
        let config = InstanceConfig {
            cp_count: 5,
            ed_count: 50,
            contents_per_cp: ContentCounts::Range { range: [25, 25] },
            ..InstanceConfig::default()
        };
        let inst = sample_instance(&config, 11).unwrap();
        assert_eq!(inst.cp_count(), 5);
        assert_eq!(inst.ed_count(), 50);
        for ed in &inst.eds {
            assert!(ed.cost >= 0.5 && ed.cost <= 1.5);
            assert!(ed.user_count >= 50 && ed.user_count <= 100);
            assert!(ed.capacity >= 1500 && ed.capacity <= 2000);
        }
        assert!(inst.theta >= 0.8 && inst.theta <= 1.2);
        assert!(inst.nu >= 0.8 && inst.nu <= 1.2);
        for cp in &inst.cps {
            assert_eq!(cp.satisfaction, 20.0);
            assert_eq!(cp.catalog.count, 25);
            assert!(cp.catalog.payment_upper <= 5.0);
            for &b in &cp.catalog.budgets {
                assert!(b >= 2.0 && b <= 50.0);
                assert!(cp.catalog.payment_upper <= b);
            }
            for &s in &cp.catalog.sizes {
                assert!((5..=15).contains(&s));
            }
        }
        inst.validate().unwrap();
    }

    #[test]
    fn strict_regime_only_changes_capacity() {
        let light = InstanceConfig::default();
        let strict = InstanceConfig {
            storage_regime: StorageRegime::Strict,
            ..InstanceConfig::default()
        };
        let a = sample_instance(&light, 5).unwrap();
        let b = sample_instance(&strict, 5).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.requests, b.requests);
        for (x, y) in a.eds.iter().zip(&b.eds) {
            assert_eq!(x.cost, y.cost);
            assert_eq!(x.user_count, y.user_count);
            assert!(y.capacity >= 150 && y.capacity <= 200);
            assert!(x.capacity >= 1500 && x.capacity <= 2000);
        }
    }

    #[test]
    fn explicit_content_counts_shape_payment_matrix() {
        let config = InstanceConfig {
            cp_count: 2,
            ed_count: 5,
            contents_per_cp: ContentCounts::Explicit { explicit: vec![3, 4] },
            ..InstanceConfig::default()
        };
        let inst = sample_instance(&config, 1).unwrap();
        let payments = PaymentMatrix::uniform_initial(&inst);
        assert_eq!(payments.values.len(), 2);
        assert_eq!(payments.values[0].len(), 5);
        assert_eq!(payments.values[0][0].len(), 3);
        assert_eq!(payments.values[1][0].len(), 4);
        payments.validate(&inst).unwrap();
    }

    #[test]
    fn infeasible_payment_floor_names_pair() {
        let config = InstanceConfig {
            cp_count: 1,
            ed_count: 50,
            payment_lower: 1.0,
            content_budget: [2.0, 2.0],
            payment_upper: [1.0, 1.0],
            ..InstanceConfig::default()
        };
        match sample_instance(&config, 3) {
            Err(Error::InfeasibleInstance { cp, .. }) => assert_eq!(cp, 0),
            other => panic!("expected infeasible instance, got {other:?}"),
        }
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let err = InstanceConfig::from_json(r#"{"cp_count": 2, "banana": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = InstanceConfig::default();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back = InstanceConfig::from_json(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn uniform_initial_respects_bounds_and_budget() {
        let config = InstanceConfig {
            cp_count: 3,
            ed_count: 5,
            ..InstanceConfig::default()
        };
        let inst = sample_instance(&config, 9).unwrap();
        let payments = PaymentMatrix::uniform_initial(&inst);
        payments.validate(&inst).unwrap();
    }
}
