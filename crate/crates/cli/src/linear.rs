//! `linear-et` mode: one plant under the sample-and-hold event rule.
//!
//! ```text
//! [linear_et]
//! A = 0, 1; -2, -3
//! B = 0; 1
//! K = 1, -1
//! Q = 1, 0; 0, 1
//! R = 0.5, 0; 0, 0.5
//! x0 = 1, -1
//! horizon = 10
//! ```

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use evtrig_core::linear_et::{
    simulate_sample_and_hold, EventScanner, LinearEtError, SampleHoldTrace, DEFAULT_GRID_POINTS,
};
use evtrig_core::{DMatrix, DVector, LinearEtSystem, LyapunovData};

use crate::config::RawConfig;
use crate::report::{format_report, BoundCheck};
use crate::CliError;

const FIELDS: [&str; 12] =
    ["A", "B", "K", "Q", "R", "A_s", "x0", "horizon", "t_max", "grid_points", "samples_per_interval", "output_dir"];

#[derive(Debug, Clone)]
pub struct LinearEtConfig {
    pub system: LinearEtSystem,
    pub x0: DVector<f64>,
    pub horizon: f64,
    pub t_max: Option<f64>,
    pub grid_points: usize,
    pub samples_per_interval: usize,
    pub output_dir: Option<PathBuf>,
}

/// Field a validation failure is attributed to.
fn field_of(e: &LinearEtError) -> &'static str {
    let what = match e {
        LinearEtError::Dimension { what, .. } | LinearEtError::NotHurwitz { what, .. } => *what,
        LinearEtError::NotSpd(what) | LinearEtError::Singular(what) | LinearEtError::NonFinite(what) => *what,
        _ => "",
    };
    match what {
        "A + BK" => "K",
        "Q - R" => "R",
        "A" | "B" | "K" | "Q" | "R" | "A_s" => FIELDS.iter().find(|f| **f == what).copied().unwrap_or(""),
        _ => "",
    }
}

fn lin_err(e: LinearEtError) -> CliError {
    CliError::config("linear_et", field_of(&e), e.to_string())
}

impl LinearEtConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        if !raw.has_section("linear_et") {
            return Err(CliError::config("linear_et", "", "section missing"));
        }
        let s = raw.section("linear_et");
        s.only(&FIELDS)?;
        let matrix = |key: &str| -> Result<Option<DMatrix<f64>>, CliError> {
            Ok(s.matrix(key)?.map(|rows| DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])))
        };
        let need = |key: &str| matrix(key)?.ok_or_else(|| s.err(key, "missing"));
        let mut system = LinearEtSystem::new(need("A")?, need("B")?, need("K")?, need("Q")?, need("R")?).map_err(lin_err)?;
        if let Some(a_s) = matrix("A_s")? {
            system = system.with_performance_matrix(a_s).map_err(lin_err)?;
        }
        let x0 = DVector::from_vec(s.list("x0")?.ok_or_else(|| s.err("x0", "missing"))?);
        if x0.len() != system.dim() {
            return Err(s.err("x0", format!("{} entries for a {}-state system", x0.len(), system.dim())));
        }
        let positive = |key: &str| -> Result<Option<f64>, CliError> {
            match s.f64(key)? {
                Some(v) if v <= 0.0 => Err(s.err(key, format!("{v} must be positive"))),
                other => Ok(other),
            }
        };
        let horizon = positive("horizon")?.unwrap_or(10.0);
        let t_max = positive("t_max")?;
        let grid_points = s.usize("grid_points")?.unwrap_or(DEFAULT_GRID_POINTS);
        let samples_per_interval = s.usize("samples_per_interval")?.unwrap_or(20);
        if grid_points == 0 {
            return Err(s.err("grid_points", "must be at least 1"));
        }
        if samples_per_interval == 0 {
            return Err(s.err("samples_per_interval", "must be at least 1"));
        }
        let output_dir = s.raw("output_dir").map(|d| raw.base_dir.join(d));
        Ok(Self { system, x0, horizon, t_max, grid_points, samples_per_interval, output_dir })
    }
}

#[derive(Debug, Clone)]
pub struct LinearEtOutcome {
    pub lyap: LyapunovData,
    /// `None` when `det M(t)` has no sign change before `t_max`.
    pub t_min: Option<f64>,
    pub t_max: f64,
    pub trace: SampleHoldTrace,
    pub checks: Vec<BoundCheck>,
}

impl LinearEtOutcome {
    pub fn metrics_header() -> &'static str {
        "t_min,events_total,min_gap,mean_gap,max_excess"
    }

    pub fn metrics_row(&self) -> String {
        let gaps = self.trace.gaps();
        let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let mean_gap = if gaps.is_empty() { f64::INFINITY } else { gaps.iter().sum::<f64>() / gaps.len() as f64 };
        format!(
            "{},{},{},{},{}",
            self.t_min.unwrap_or(f64::NAN),
            self.trace.event_times.len(),
            min_gap,
            mean_gap,
            self.trace.max_excess()
        )
    }

    pub fn write(&self, dir: &std::path::Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        let n = self.lyap.dim();
        let mut trace = std::io::BufWriter::new(std::fs::File::create(dir.join("trace.csv"))?);
        let cols: Vec<String> = (0..n).map(|i| format!("x_{i}")).collect();
        writeln!(trace, "t,{},V,S", cols.join(","))?;
        for k in 0..self.trace.times.len() {
            let xs: Vec<String> = self.trace.states[k].iter().map(f64::to_string).collect();
            writeln!(trace, "{},{},{},{}", self.trace.times[k], xs.join(","), self.trace.v[k], self.trace.s[k])?;
        }
        trace.flush()?;
        let mut events = String::from("t\n");
        for t in &self.trace.event_times {
            let _ = writeln!(events, "{t}");
        }
        std::fs::write(dir.join("events.csv"), events)?;
        std::fs::write(dir.join("metrics.csv"), format!("{}\n{}\n", Self::metrics_header(), self.metrics_row()))?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "linear-et: n = {}, t_max = {}", self.lyap.dim(), self.t_max);
        match self.t_min {
            Some(t) => {
                let _ = writeln!(s, "t_min = {t}");
            }
            None => {
                let _ = writeln!(s, "t_min: no root of det M(t) in (0, {}]", self.t_max);
            }
        }
        let _ = writeln!(s, "{}", Self::metrics_header());
        let _ = writeln!(s, "{}", self.metrics_row());
        s.push_str(&format_report(&self.checks));
        s
    }
}

pub fn run_linear_et(cfg: &LinearEtConfig) -> Result<LinearEtOutcome, CliError> {
    let lyap = LyapunovData::new(&cfg.system).map_err(lin_err)?;
    let t_max = cfg.t_max.unwrap_or_else(|| lyap.default_t_max());
    let scanner = EventScanner::new(&lyap, t_max, cfg.grid_points).map_err(lin_err)?;
    let t_min = match scanner.min_inter_event_time() {
        Ok(t) => Some(t),
        Err(LinearEtError::NoRootFound { .. }) => None,
        Err(e) => return Err(lin_err(e)),
    };
    let trace = simulate_sample_and_hold(&scanner, &cfg.x0, cfg.horizon, cfg.samples_per_interval).map_err(lin_err)?;
    let v0 = trace.v.first().copied().unwrap_or(0.0);
    let mut checks = vec![BoundCheck::at_most("max(V - S)", trace.max_excess(), 1e-8 * v0.max(1.0))];
    if let Some(t) = t_min {
        let min_gap = trace.gaps().into_iter().fold(f64::INFINITY, f64::min);
        checks.push(BoundCheck::at_least("min_gap vs t_min", min_gap, t - 1e-8));
    }
    Ok(LinearEtOutcome { lyap, t_min, t_max, trace, checks })
}
