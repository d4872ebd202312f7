use serde::{Deserialize, Serialize};

use super::realization::RealizationOutcome;
use super::sweep::SweepResult;
use crate::algorithm::{BackhaulMode, RunStatus};
use crate::error::{Error, Result};

pub const OUTCOME_CSV_COLUMNS: [&str; 16] = [
    "seed",
    "mode",
    "status",
    "cached_requested",
    "num_groups",
    "num_cached_groups",
    "power_w",
    "power_dbm",
    "init_power_w",
    "relaxed_power_w",
    "iterations",
    "converged_at",
    "evictions",
    "min_sinr_margin",
    "loads_mbps",
    "message",
];

pub const SWEEP_CSV_COLUMNS: [&str; 14] = [
    "capacity_mbps",
    "cached_requested",
    "mode",
    "realizations",
    "feasible",
    "infeasible",
    "failed",
    "outage",
    "outage_lo",
    "outage_hi",
    "mean_power_w",
    "power_half_width_w",
    "mean_power_dbm",
    "power_half_width_db",
];

#[derive(Serialize)]
struct OutcomeRow<'a> {
    seed: u64,
    mode: BackhaulMode,
    status: RunStatus,
    cached_requested: Option<usize>,
    num_groups: usize,
    num_cached_groups: usize,
    power_w: Option<f64>,
    power_dbm: Option<f64>,
    init_power_w: Option<f64>,
    relaxed_power_w: Option<f64>,
    iterations: usize,
    converged_at: Option<usize>,
    evictions: usize,
    min_sinr_margin: Option<f64>,
    loads_mbps: String,
    message: Option<&'a str>,
}

#[derive(Serialize)]
struct SweepRow {
    capacity_mbps: Option<f64>,
    cached_requested: Option<usize>,
    mode: BackhaulMode,
    realizations: usize,
    feasible: usize,
    infeasible: usize,
    failed: usize,
    outage: f64,
    outage_lo: f64,
    outage_hi: f64,
    mean_power_w: Option<f64>,
    power_half_width_w: Option<f64>,
    mean_power_dbm: Option<f64>,
    power_half_width_db: Option<f64>,
}

fn write_rows<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Parse(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// One row per outcome; per-RU loads are `;`-separated.
pub fn outcomes_to_csv(outcomes: &[RealizationOutcome]) -> Result<String> {
    write_rows(&OUTCOME_CSV_COLUMNS, outcomes.iter().map(|o| OutcomeRow {
        seed: o.seed,
        mode: o.mode,
        status: o.status,
        cached_requested: o.cached_requested,
        num_groups: o.num_groups,
        num_cached_groups: o.num_cached_groups,
        power_w: o.power_w,
        power_dbm: o.power_dbm,
        init_power_w: o.init_power_w,
        relaxed_power_w: o.relaxed_power_w,
        iterations: o.iterations,
        converged_at: o.converged_at,
        evictions: o.evictions,
        min_sinr_margin: o.min_sinr_margin,
        loads_mbps: o.loads_mbps.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";"),
        message: o.message.as_deref(),
    }))
}

pub fn sweep_to_csv(result: &SweepResult) -> Result<String> {
    write_rows(&SWEEP_CSV_COLUMNS, result.cells.iter().map(|c| SweepRow {
        capacity_mbps: c.key.capacity_bps.map(|b| b / 1e6),
        cached_requested: c.key.cached_requested,
        mode: c.key.mode,
        realizations: c.realizations,
        feasible: c.feasible,
        infeasible: c.infeasible,
        failed: c.failed,
        outage: c.outage,
        outage_lo: c.outage_ci.0,
        outage_hi: c.outage_ci.1,
        mean_power_w: c.mean_power_w,
        power_half_width_w: c.power_half_width_w,
        mean_power_dbm: c.mean_power_dbm,
        power_half_width_db: c.power_half_width_db,
    }))
}

/// x/y data for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Per `(m, n)` power against iteration, from a traced outcome.
pub fn outcome_plot_series(outcome: &RealizationOutcome) -> Vec<PlotSeries> {
    let Some(trace) = &outcome.trace else {
        return Vec::new();
    };
    let Some(first) = trace.first() else {
        return Vec::new();
    };
    let groups = first.powers_w.len();
    let rus = first.powers_w.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for m in 0..groups {
        for n in 0..rus {
            out.push(PlotSeries {
                name: format!("group{}_ru{}", m + 1, n + 1),
                x_label: "iteration".into(),
                y_label: "power_w".into(),
                x: trace.iter().map(|t| t.iteration as f64).collect(),
                y: trace.iter().map(|t| t.powers_w[m][n]).collect(),
            });
        }
    }
    out
}

/// Mean power (dBm) and outage against capacity, one series per cached
/// count and mode. Cells with no feasible realization are skipped in the
/// power series.
pub fn sweep_plot_series(result: &SweepResult) -> Vec<PlotSeries> {
    let mut keys: Vec<(Option<usize>, BackhaulMode)> = Vec::new();
    for c in &result.cells {
        let k = (c.key.cached_requested, c.key.mode);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for (cached, mode) in keys {
        let cells: Vec<_> = result
            .cells
            .iter()
            .filter(|c| c.key.cached_requested == cached && c.key.mode == mode && c.key.capacity_bps.is_some())
            .collect();
        let label = format!(
            "{}_cached{}",
            serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            cached.map_or("any".to_string(), |c| c.to_string())
        );
        let (x, y): (Vec<f64>, Vec<f64>) = cells
            .iter()
            .filter_map(|c| Some((c.key.capacity_bps? / 1e6, c.mean_power_dbm?)))
            .unzip();
        out.push(PlotSeries {
            name: format!("power_{label}"),
            x_label: "capacity_mbps".into(),
            y_label: "mean_power_dbm".into(),
            x,
            y,
        });
        let (x, y): (Vec<f64>, Vec<f64>) =
            cells.iter().filter_map(|c| Some((c.key.capacity_bps? / 1e6, c.outage))).unzip();
        out.push(PlotSeries {
            name: format!("outage_{label}"),
            x_label: "capacity_mbps".into(),
            y_label: "outage".into(),
            x,
            y,
        });
    }
    out
}
