//! Run summaries: disagreement, conservation, event statistics and decay fits.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::engine::{EventAgent, EventRecord, Trace};

/// Samples below this disagreement are treated as numerical floor by [`fit_decay_rate`].
pub const DECAY_FLOOR: f64 = 1e-10;
/// Minimum number of samples with disagreement above 1e-12 for a fit.
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("insufficient decay to fit a rate ({usable} usable samples)")]
    InsufficientDecay { usable: usize },
}

/// `||x - mean(x) 1||`.
pub fn disagreement(x: &DVector<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.mean();
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt()
}

/// `x^T L x`.
pub fn lyapunov_edge(x: &DVector<f64>, l: &DMatrix<f64>) -> Result<f64, MetricsError> {
    if l.nrows() != x.len() || l.ncols() != x.len() {
        return Err(MetricsError::DimensionMismatch { expected: l.nrows().max(l.ncols()), found: x.len() });
    }
    Ok(x.dot(&(l * x)))
}

/// Least-squares exponential decay rate of the disagreement along `trace`.
///
/// Only samples with disagreement in `[1e-10, initial / 2]` enter the fit.
pub fn fit_decay_rate(trace: &Trace) -> Result<f64, MetricsError> {
    let d: Vec<f64> = trace.states.iter().map(disagreement).collect();
    let live = d.iter().filter(|&&v| v > 1e-12).count();
    if live < MIN_FIT_SAMPLES {
        return Err(MetricsError::InsufficientDecay { usable: live });
    }
    let upper = 0.5 * d[0];
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&d)
        .filter(|(_, &v)| v >= DECAY_FLOOR && v <= upper)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(MetricsError::InsufficientDecay { usable: pts.len() });
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    if sxx <= 0.0 || sxy >= 0.0 {
        return Err(MetricsError::InsufficientDecay { usable: pts.len() });
    }
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterEventStats {
    /// Smallest per-agent gap; `+inf` when no agent fired twice.
    pub min_gap: f64,
    /// Mean over all per-agent gaps; `+inf` when there are none.
    pub mean_gap: f64,
    pub zeno_suspect: bool,
}

fn event_times_per_agent(events: &[EventRecord], n: usize) -> Vec<Vec<f64>> {
    let mut per_agent = vec![Vec::new(); n];
    for e in events {
        match e.agent {
            EventAgent::Agent(i) => per_agent[i].push(e.t),
            EventAgent::All => per_agent.iter_mut().for_each(|v| v.push(e.t)),
        }
    }
    per_agent
}

/// Per-agent inter-event statistics. A network-wide event counts as an event of every agent.
pub fn inter_event_stats(events: &[EventRecord], n: usize, zeno_floor: f64) -> InterEventStats {
    let mut min_gap = f64::INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for times in event_times_per_agent(events, n) {
        for w in times.windows(2) {
            let gap = w[1] - w[0];
            min_gap = min_gap.min(gap);
            sum += gap;
            count += 1;
        }
    }
    InterEventStats {
        min_gap,
        mean_gap: if count == 0 { f64::INFINITY } else { sum / count as f64 },
        zeno_suspect: min_gap < zeno_floor,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub final_disagreement: f64,
    /// `max_t |1^T x(t) - 1^T x0|` over the sampled states.
    pub conservation_error: f64,
    pub events_total: usize,
    pub events_per_agent: Vec<usize>,
    pub min_gap: f64,
    pub mean_gap: f64,
    /// `None` when the trace does not decay enough to fit.
    pub decay_rate: Option<f64>,
    pub zeno_suspect: bool,
}

impl RunMetrics {
    pub fn from_trace(trace: &Trace, zeno_floor: f64) -> Self {
        let n = trace.n();
        let sum0 = trace.x0.sum();
        let conservation_error = trace.states.iter().map(|x| (x.sum() - sum0).abs()).fold(0.0, f64::max);
        let events_per_agent: Vec<usize> = event_times_per_agent(&trace.events, n).iter().map(Vec::len).collect();
        let stats = inter_event_stats(&trace.events, n, zeno_floor);
        Self {
            final_disagreement: disagreement(trace.final_state()),
            conservation_error,
            events_total: events_per_agent.iter().sum(),
            events_per_agent,
            min_gap: stats.min_gap,
            mean_gap: stats.mean_gap,
            decay_rate: fit_decay_rate(trace).ok(),
            zeno_suspect: stats.zeno_suspect || !trace.zeno_flags.is_empty(),
        }
    }

    pub const CSV_FIELDS: [&'static str; 8] = [
        "final_disagreement",
        "conservation_error",
        "events_total",
        "events_per_agent",
        "min_gap",
        "mean_gap",
        "decay_rate",
        "zeno_suspect",
    ];

    fn values(&self) -> [String; 8] {
        let per_agent: Vec<String> = self.events_per_agent.iter().map(usize::to_string).collect();
        [
            self.final_disagreement.to_string(),
            self.conservation_error.to_string(),
            self.events_total.to_string(),
            per_agent.join(";"),
            self.min_gap.to_string(),
            self.mean_gap.to_string(),
            self.decay_rate.map_or_else(|| "nan".to_string(), |r| r.to_string()),
            self.zeno_suspect.to_string(),
        ]
    }

    pub fn csv_header() -> String {
        Self::CSV_FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }

    /// One `key=value` line per field.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in Self::CSV_FIELDS.iter().zip(self.values()) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Inverse of [`RunMetrics::csv_row`] given the header it was written under.
    pub fn from_csv(header: &str, row: &str) -> Result<Self, String> {
        let keys: Vec<&str> = header.split(',').map(str::trim).collect();
        let vals: Vec<&str> = row.split(',').map(str::trim).collect();
        if keys.len() != vals.len() {
            return Err(format!("header has {} columns, row has {}", keys.len(), vals.len()));
        }
        let get = |name: &str| -> Result<&str, String> {
            keys.iter().position(|k| *k == name).map(|i| vals[i]).ok_or_else(|| format!("missing column {name}"))
        };
        let float = |name: &str| -> Result<f64, String> {
            get(name)?.parse::<f64>().map_err(|e| format!("{name}: {e}"))
        };
        let per_agent = get("events_per_agent")?;
        let events_per_agent = if per_agent.is_empty() {
            Vec::new()
        } else {
            per_agent
                .split(';')
                .map(|s| s.parse::<usize>().map_err(|e| format!("events_per_agent: {e}")))
                .collect::<Result<_, _>>()?
        };
        let decay = float("decay_rate")?;
        Ok(Self {
            final_disagreement: float("final_disagreement")?,
            conservation_error: float("conservation_error")?,
            events_total: get("events_total")?.parse().map_err(|e| format!("events_total: {e}"))?,
            events_per_agent,
            min_gap: float("min_gap")?,
            mean_gap: float("mean_gap")?,
            decay_rate: (!decay.is_nan()).then_some(decay),
            zeno_suspect: get("zeno_suspect")?.parse().map_err(|e| format!("zeno_suspect: {e}"))?,
        })
    }
}
