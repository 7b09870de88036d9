//! Seeded experiment sweeps: convergence scaling over the (CP, ED) grid
//! and utility response to the device cost parameter, with replication,
//! deterministic aggregation, and CSV/SVG emission.
//!
//! Machine outputs carry no wall-clock values, so re-running a sweep with
//! identical inputs reproduces every output file byte for byte. Measured
//! solver times stay in memory (`mean_wall_time_secs`) for stdout
//! summaries and the `time` figure kind.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{self, Series};
use crate::domain::{sample_instance, ContentCounts, InstanceConfig, StorageRegime};
use crate::error::{Error, Result};
use crate::game_dynamics::{run_best_response, DynamicsOptions};

/// Sweep layout: which grid cells to run and how many seeded replications
/// per cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub cp_counts: Vec<usize>,
    pub ed_counts: Vec<usize>,
    pub replications: usize,
    pub base_config: InstanceConfig,
    pub regime: StorageRegime,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn with_defaults(regime: StorageRegime, base_seed: u64) -> Self {
        SweepSpec {
            cp_counts: (1..=5).collect(),
            ed_counts: (1..=10).map(|k| 5 * k).collect(),
            replications: 10,
            base_config: InstanceConfig::default(),
            regime,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cp_counts.is_empty() || self.ed_counts.is_empty() {
            return Err(Error::invalid("sweep: cp_counts and ed_counts must be nonempty"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("sweep: replications must be >= 1"));
        }
        self.base_config.validate()
    }
}

/// Raw outcome of a single replication, kept so aggregates can be
/// recomputed independently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationRecord {
    /// Cost override of the cost sweep; absent for scale sweeps.
    pub cost: Option<f64>,
    pub cp_count: usize,
    pub ed_count: usize,
    pub replication: usize,
    pub seed: u64,
    pub infeasible: bool,
    pub converged: bool,
    pub iterations: usize,
    /// Final realized utility per provider.
    pub cp_utilities: Vec<f64>,
    /// Final realized total device utility.
    pub ed_total_utility: f64,
    #[serde(skip, default)]
    pub wall_time_secs: f64,
}

/// One aggregated sweep row. `cp_index` is set on the per-provider rows of
/// the cost sweep and absent on grid-aggregate rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub regime: StorageRegime,
    pub cost: Option<f64>,
    pub cp_count: usize,
    pub ed_count: usize,
    pub cp_index: Option<usize>,
    pub replications: usize,
    pub infeasible_count: usize,
    pub mean_iterations: f64,
    pub stddev_iterations: f64,
    pub mean_cp_utility: f64,
    pub stddev_cp_utility: f64,
    pub mean_ed_utility: f64,
    pub stddev_ed_utility: f64,
    pub convergence_rate: f64,
    #[serde(skip, default)]
    pub mean_wall_time_secs: f64,
}

/// Aggregated sweep output plus the per-replication records it was
/// reduced from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub regime: StorageRegime,
    pub replications: usize,
    pub rows: Vec<SweepRow>,
    pub records: Vec<ReplicationRecord>,
}

fn run_one(
    config: &InstanceConfig,
    seed: u64,
    regime: StorageRegime,
    cost_override: Option<f64>,
    cp_count: usize,
    ed_count: usize,
    replication: usize,
) -> ReplicationRecord {
    let mut record = ReplicationRecord {
        cost: cost_override,
        cp_count,
        ed_count,
        replication,
        seed,
        infeasible: false,
        converged: false,
        iterations: 0,
        cp_utilities: Vec::new(),
        ed_total_utility: 0.0,
        wall_time_secs: 0.0,
    };
    let mut instance = match sample_instance(config, seed) {
        Ok(instance) => instance,
        Err(_) => {
            record.infeasible = true;
            return record;
        }
    };
    if let Some(cost) = cost_override {
        for ed in &mut instance.eds {
            ed.cost = cost;
        }
    }
    match run_best_response(&instance, &DynamicsOptions::for_regime(regime)) {
        Ok(report) => {
            record.converged = report.converged;
            record.iterations = report.iterations;
            record.cp_utilities = report.cp_utilities.last().cloned().unwrap_or_default();
            record.ed_total_utility = report.ed_utilities.last().map(|row| row.iter().sum()).unwrap_or(0.0);
            record.wall_time_secs = report.wall_time.as_secs_f64();
        }
        Err(_) => record.infeasible = true,
    }
    record
}

fn aggregate_cell(
    regime: StorageRegime,
    cost: Option<f64>,
    cp_count: usize,
    ed_count: usize,
    records: &[&ReplicationRecord],
) -> SweepRow {
    let feasible: Vec<&&ReplicationRecord> = records.iter().filter(|r| !r.infeasible).collect();
    let n = feasible.len();
    let mean = |f: &dyn Fn(&ReplicationRecord) -> f64| -> f64 {
        if n == 0 {
            0.0
        } else {
            feasible.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    let stddev = |f: &dyn Fn(&ReplicationRecord) -> f64, mu: f64| -> f64 {
        if n < 2 {
            0.0
        } else {
            (feasible.iter().map(|r| (f(r) - mu).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    };
    let iter_of = |r: &ReplicationRecord| r.iterations as f64;
    let cp_of = |r: &ReplicationRecord| r.cp_utilities.iter().sum::<f64>();
    let ed_of = |r: &ReplicationRecord| r.ed_total_utility;
    let time_of = |r: &ReplicationRecord| r.wall_time_secs;
    let mean_iterations = mean(&iter_of);
    let mean_cp = mean(&cp_of);
    let mean_ed = mean(&ed_of);
    SweepRow {
        regime,
        cost,
        cp_count,
        ed_count,
        cp_index: None,
        replications: records.len(),
        infeasible_count: records.len() - n,
        mean_iterations,
        stddev_iterations: stddev(&iter_of, mean_iterations),
        mean_cp_utility: mean_cp,
        stddev_cp_utility: stddev(&cp_of, mean_cp),
        mean_ed_utility: mean_ed,
        stddev_ed_utility: stddev(&ed_of, mean_ed),
        convergence_rate: if n == 0 {
            0.0
        } else {
            feasible.iter().filter(|r| r.converged).count() as f64 / n as f64
        },
        mean_wall_time_secs: mean(&time_of),
    }
}

/// Deterministic per-replication seed for scale-sweep cell `cell_index`.
pub fn scale_seed(base_seed: u64, cell_index: usize, replications: usize, rep: usize) -> u64 {
    base_seed
        .wrapping_add((cell_index * replications) as u64)
        .wrapping_add(rep as u64)
}

/// Run the convergence-scaling sweep over the (cp_count, ed_count) grid.
/// Infeasible replications are counted per cell, never fatal.
pub fn sweep_scale(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = spec
        .cp_counts
        .iter()
        .flat_map(|&o| spec.ed_counts.iter().map(move |&i| (o, i)))
        .collect();
    let jobs: Vec<(usize, usize, usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell_index, &(o, i))| {
            (0..spec.replications).map(move |rep| (cell_index, o, i, rep))
        })
        .collect();
    let records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .map(|&(cell_index, o, i, rep)| {
            let config = InstanceConfig {
                cp_count: o,
                ed_count: i,
                storage_regime: spec.regime,
                ..spec.base_config.clone()
            };
            let seed = scale_seed(spec.base_seed, cell_index, spec.replications, rep);
            run_one(&config, seed, spec.regime, None, o, i, rep)
        })
        .collect();

    let rows = cells
        .iter()
        .enumerate()
        .map(|(cell_index, &(o, i))| {
            let cell: Vec<&ReplicationRecord> = records
                [cell_index * spec.replications..(cell_index + 1) * spec.replications]
                .iter()
                .collect();
            aggregate_cell(spec.regime, None, o, i, &cell)
        })
        .collect();
    Ok(SweepResult {
        regime: spec.regime,
        replications: spec.replications,
        rows,
        records,
    })
}

/// Run the cost sweep: five contents per provider, every device's cost
/// pinned to each sweep value in turn. Replication seeds are shared across
/// cost values so each seed yields a paired family of games differing only
/// in the cost parameter. Emits one aggregate row per (cost, cp_count)
/// plus per-provider rows for the largest provider count.
pub fn sweep_cost(values: &[f64], spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    if values.is_empty() {
        return Err(Error::invalid("cost sweep: needs at least one cost value"));
    }
    if values.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::invalid("cost sweep: cost values must be > 0"));
    }
    let config = InstanceConfig {
        contents_per_cp: ContentCounts::Range { range: [5, 5] },
        ed_count: spec.base_config.ed_count,
        storage_regime: spec.regime,
        ..spec.base_config.clone()
    };
    let jobs: Vec<(f64, usize, usize, usize)> = values
        .iter()
        .flat_map(|&c| {
            spec.cp_counts.iter().enumerate().flat_map(move |(o_index, &o)| {
                (0..spec.replications).map(move |rep| (c, o_index, o, rep))
            })
        })
        .collect();
    let records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .map(|&(c, o_index, o, rep)| {
            let config = InstanceConfig {
                cp_count: o,
                ..config.clone()
            };
            let seed = scale_seed(spec.base_seed, o_index, spec.replications, rep);
            run_one(&config, seed, spec.regime, Some(c), o, config.ed_count, rep)
        })
        .collect();

    let max_o = spec.cp_counts.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::new();
    let mut offset = 0;
    for &c in values {
        for &o in &spec.cp_counts {
            let cell: Vec<&ReplicationRecord> =
                records[offset..offset + spec.replications].iter().collect();
            rows.push(aggregate_cell(spec.regime, Some(c), o, config.ed_count, &cell));
            if o == max_o {
                for k in 0..o {
                    let feasible: Vec<&&ReplicationRecord> =
                        cell.iter().filter(|r| !r.infeasible).collect();
                    let n = feasible.len().max(1) as f64;
                    let mean_u =
                        feasible.iter().map(|r| r.cp_utilities[k]).sum::<f64>() / n;
                    let stddev_u = if feasible.len() < 2 {
                        0.0
                    } else {
                        (feasible
                            .iter()
                            .map(|r| (r.cp_utilities[k] - mean_u).powi(2))
                            .sum::<f64>()
                            / (feasible.len() - 1) as f64)
                            .sqrt()
                    };
                    let mut row =
                        aggregate_cell(spec.regime, Some(c), o, config.ed_count, &cell);
                    row.cp_index = Some(k);
                    row.mean_cp_utility = mean_u;
                    row.stddev_cp_utility = stddev_u;
                    rows.push(row);
                }
            }
            offset += spec.replications;
        }
    }
    Ok(SweepResult {
        regime: spec.regime,
        replications: spec.replications,
        rows,
        records,
    })
}

/// Format a float at six significant digits, shortest form.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        let s = format!("{v:.5e}");
        // Trim trailing zeros in the mantissa: 1.20000e7 -> 1.2e7.
        match s.split_once('e') {
            Some((mantissa, exp)) => {
                let m = mantissa.trim_end_matches('0').trim_end_matches('.');
                format!("{m}e{exp}")
            }
            None => s,
        }
    }
}

/// Fixed CSV header shared by both sweeps.
pub const CSV_HEADER: [&str; 13] = [
    "regime",
    "cost",
    "cp_count",
    "ed_count",
    "cp_index",
    "replications",
    "infeasible",
    "mean_iterations",
    "stddev_iterations",
    "mean_cp_utility",
    "stddev_cp_utility",
    "mean_ed_utility",
    "stddev_ed_utility",
];

/// Write the aggregated rows as RFC 4180 CSV (CRLF, fixed header, floats
/// at six significant digits, rows in grid order). The convergence rate
/// column is appended after the header fields above.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    header.push("convergence_rate");
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in &result.rows {
        writer
            .write_record(&[
                row.regime.to_string(),
                row.cost.map(fmt_sig).unwrap_or_default(),
                row.cp_count.to_string(),
                row.ed_count.to_string(),
                row.cp_index.map(|k| k.to_string()).unwrap_or_default(),
                row.replications.to_string(),
                row.infeasible_count.to_string(),
                fmt_sig(row.mean_iterations),
                fmt_sig(row.stddev_iterations),
                fmt_sig(row.mean_cp_utility),
                fmt_sig(row.stddev_cp_utility),
                fmt_sig(row.mean_ed_utility),
                fmt_sig(row.stddev_ed_utility),
                fmt_sig(row.convergence_rate),
            ])
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("csv error on {}: {other:?}", path.display())),
    }
}

/// What a figure plots per grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Iterations,
    Time,
    CpUtility,
    EdUtility,
}

impl std::str::FromStr for FigureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iterations" => Ok(FigureKind::Iterations),
            "time" => Ok(FigureKind::Time),
            "cp_utility" => Ok(FigureKind::CpUtility),
            "ed_utility" => Ok(FigureKind::EdUtility),
            other => Err(Error::invalid(format!(
                "unknown figure kind '{other}' (expected iterations|time|cp_utility|ed_utility)"
            ))),
        }
    }
}

impl FigureKind {
    fn y_label(self) -> &'static str {
        match self {
            FigureKind::Iterations => "Mean iterations to converge",
            FigureKind::Time => "Mean solver wall time (s)",
            FigureKind::CpUtility => "Mean total CP utility (monetary units)",
            FigureKind::EdUtility => "Mean total ED utility (monetary units)",
        }
    }

    fn value(self, row: &SweepRow) -> f64 {
        match self {
            FigureKind::Iterations => row.mean_iterations,
            FigureKind::Time => row.mean_wall_time_secs,
            FigureKind::CpUtility => row.mean_cp_utility,
            FigureKind::EdUtility => row.mean_ed_utility,
        }
    }
}

/// Render one figure from aggregate rows: one series per CP count, the
/// x-axis being the ED count (scale sweeps) or the cost value (cost
/// sweeps). Output is deterministic for a fixed result.
pub fn emit_figure(result: &SweepResult, kind: FigureKind, path: &Path) -> Result<()> {
    let aggregates: Vec<&SweepRow> =
        result.rows.iter().filter(|r| r.cp_index.is_none()).collect();
    let cost_axis = aggregates.iter().any(|r| r.cost.is_some());
    let mut cp_counts: Vec<usize> = aggregates.iter().map(|r| r.cp_count).collect();
    cp_counts.sort_unstable();
    cp_counts.dedup();

    let series: Vec<Series> = cp_counts
        .iter()
        .map(|&o| Series {
            label: if o == 1 {
                "1 CP".to_string()
            } else {
                format!("{o} CPs")
            },
            points: aggregates
                .iter()
                .filter(|r| r.cp_count == o)
                .map(|r| {
                    let x = if cost_axis {
                        r.cost.unwrap_or(0.0)
                    } else {
                        r.ed_count as f64
                    };
                    (x, kind.value(r))
                })
                .collect(),
        })
        .collect();
    let x_label = if cost_axis {
        "ED cost parameter"
    } else {
        "Edge devices"
    };
    let title = format!(
        "{} regime: {}",
        result.regime,
        kind.y_label().to_lowercase()
    );
    let svg = chart::render(&title, x_label, kind.y_label(), &series);
    fs::write(path, svg).map_err(|e| Error::io(path, e))?;
    Ok(())
}
