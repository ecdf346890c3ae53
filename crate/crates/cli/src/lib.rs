//! Experiment runner for event-triggered consensus simulations.
//!
//! Exit codes: 0 on success, 2 for configuration or validation errors,
//! 3 when a run aborts on an unbounded event cascade.

pub mod config;
mod error;
pub mod experiment;
pub mod linear;
pub mod report;

use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use evtrig_core::engine::{write_events_csv, write_trace_csv};
use evtrig_core::{RunMetrics, Trace};
use rayon::prelude::*;

pub use config::RawConfig;
pub use error::CliError;
pub use experiment::{sweep_points, Experiment, LawChoice, RunOutcome, SweepPoint};
pub use linear::{run_linear_et, LinearEtConfig, LinearEtOutcome};
pub use report::{check_bounds, format_report, BoundCheck};

/// Flags shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Overrides `output_dir` from the config.
    pub output_dir: Option<PathBuf>,
    pub quiet: bool,
}

fn output_dir(opts: &Options, configured: Option<&PathBuf>, raw: &RawConfig) -> PathBuf {
    opts.output_dir.clone().or_else(|| configured.cloned()).unwrap_or_else(|| raw.base_dir.join("out"))
}

fn write_trace_files(dir: &Path, trace: &Trace) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut f = BufWriter::new(std::fs::File::create(dir.join("trace.csv"))?);
    write_trace_csv(trace, &mut f)?;
    f.flush()?;
    let mut f = BufWriter::new(std::fs::File::create(dir.join("events.csv"))?);
    write_events_csv(trace, &mut f)?;
    f.flush()?;
    Ok(())
}

/// `trace.csv`, `events.csv` and a one-row `metrics.csv` in `dir`.
pub fn write_run(dir: &Path, outcome: &RunOutcome) -> Result<(), CliError> {
    write_trace_files(dir, &outcome.trace)?;
    std::fs::write(dir.join("metrics.csv"), format!("{}\n{}\n", RunMetrics::csv_header(), outcome.metrics.csv_row()))?;
    Ok(())
}

/// Human-readable summary of one run.
pub fn summarize(exp: &Experiment, outcome: &RunOutcome) -> String {
    let mut s = String::new();
    let spec = &exp.spectrum;
    let _ = writeln!(
        s,
        "graph: n = {}, {}, lambda2 = {:.6}, lambda_N = {:.6}, ||L|| = {:.6}",
        exp.graph.n(),
        if exp.graph.is_directed() { "directed" } else { "undirected" },
        spec.lambda2,
        spec.lambda_n,
        spec.laplacian_norm
    );
    let _ = writeln!(s, "law: {}   dt = {}   horizon = {}", exp.law.name(), exp.sim.dt, exp.sim.horizon);
    s.push_str(&outcome.metrics.to_key_values());
    s.push_str(&format_report(&outcome.bounds));
    s
}

/// Metrics rows for a sweep with the parameter columns in front.
pub fn merge_sweep(points: &[SweepPoint], outcomes: &[RunOutcome]) -> String {
    let mut s = String::new();
    let params: Vec<&str> = points.first().map_or(Vec::new(), |p| p.params.iter().map(|(k, _)| k.as_str()).collect());
    let mut header = params.join(",");
    if !header.is_empty() {
        header.push(',');
    }
    let _ = writeln!(s, "{header}{}", RunMetrics::csv_header());
    for (p, o) in points.iter().zip(outcomes) {
        let values: Vec<&str> = p.params.iter().map(|(_, v)| v.as_str()).collect();
        let mut prefix = values.join(",");
        if !prefix.is_empty() {
            prefix.push(',');
        }
        let _ = writeln!(s, "{prefix}{}", o.metrics.csv_row());
    }
    s
}

fn report_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// `run <config>`: a single simulation, or every point of a `[sweep]`.
pub fn run(config: &Path, opts: &Options, out: &mut dyn Write) -> Result<(), CliError> {
    let raw = RawConfig::load(config)?;
    if raw.has_section("sweep") {
        return run_sweep(&raw, opts, out);
    }
    let exp = Experiment::from_raw(&raw)?;
    report_warnings(&exp.warnings);
    let dir = output_dir(opts, exp.output_dir.as_ref(), &raw);
    let outcome = match exp.run() {
        Ok(o) => o,
        Err(CliError::Zeno { agent, t, trace }) => {
            write_trace_files(&dir, &trace)?;
            return Err(CliError::Zeno { agent, t, trace });
        }
        Err(e) => return Err(e),
    };
    write_run(&dir, &outcome)?;
    if !opts.quiet {
        write!(out, "{}", summarize(&exp, &outcome))?;
        for w in &exp.warnings {
            writeln!(out, "flagged: {w}")?;
        }
        writeln!(out, "outputs written to {}", dir.display())?;
    }
    Ok(())
}

fn run_sweep(raw: &RawConfig, opts: &Options, out: &mut dyn Write) -> Result<(), CliError> {
    let points = sweep_points(raw)?;
    let experiments: Vec<Experiment> = points.iter().map(|p| Experiment::from_raw(&p.config)).collect::<Result<_, _>>()?;
    for e in &experiments {
        report_warnings(&e.warnings);
    }
    let dir = output_dir(opts, experiments[0].output_dir.as_ref(), raw);
    let outcomes: Vec<RunOutcome> = experiments.par_iter().map(Experiment::run).collect::<Result<_, _>>()?;
    for (k, o) in outcomes.iter().enumerate() {
        write_run(&dir.join(format!("point_{k:03}")), o)?;
    }
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("metrics.csv"), merge_sweep(&points, &outcomes))?;
    if !opts.quiet {
        for (p, (e, o)) in points.iter().zip(experiments.iter().zip(&outcomes)) {
            let label: Vec<String> = p.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(out, "== {}", label.join(" "))?;
            write!(out, "{}", summarize(e, o))?;
        }
        writeln!(out, "{} sweep points written to {}", outcomes.len(), dir.display())?;
    }
    Ok(())
}

/// `bounds <metrics.csv> <config>`: re-checks stored metrics against the config's bounds.
///
/// Columns before the metric fields are treated as sweep parameters and applied to the config row by row.
pub fn bounds(metrics_path: &Path, config: &Path, opts: &Options, out: &mut dyn Write) -> Result<(), CliError> {
    let raw = RawConfig::load(config)?;
    let text = std::fs::read_to_string(metrics_path)
        .map_err(|e| CliError::config("", "", format!("cannot read {}: {e}", metrics_path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::config("", "", "metrics file is empty"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let first_metric = RunMetrics::CSV_FIELDS[0];
    let n_params = columns.iter().position(|c| *c == first_metric).ok_or_else(|| {
        CliError::config("", "", format!("{} has no {first_metric} column", metrics_path.display()))
    })?;
    let mut rows = 0;
    for row in lines.filter(|l| !l.trim().is_empty()) {
        let metrics = RunMetrics::from_csv(header, row)
            .map_err(|m| CliError::config("", "", format!("{}: {m}", metrics_path.display())))?;
        let values: Vec<&str> = row.split(',').collect();
        let mut point = raw.clone();
        for (key, value) in columns[..n_params].iter().zip(&values) {
            let (section, field) = key.split_once('.').unwrap_or(("", key));
            experiment::apply_param(&mut point, section, field, value);
        }
        let exp = Experiment::from_raw(&point)?;
        let checks = check_bounds(&metrics, &exp.law, &exp.graph, &exp.sim, &exp.x0);
        if !opts.quiet {
            let label: Vec<String> = columns[..n_params].iter().zip(&values).map(|(k, v)| format!("{k}={v}")).collect();
            if !label.is_empty() {
                writeln!(out, "== {}", label.join(" "))?;
            }
            write!(out, "{}", format_report(&checks))?;
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::config("", "", format!("{} has no data rows", metrics_path.display())));
    }
    Ok(())
}

/// `linear-et <config>`.
pub fn linear_et(config: &Path, opts: &Options, out: &mut dyn Write) -> Result<(), CliError> {
    let raw = RawConfig::load(config)?;
    let cfg = LinearEtConfig::from_raw(&raw)?;
    let outcome = run_linear_et(&cfg)?;
    let dir = output_dir(opts, cfg.output_dir.as_ref(), &raw);
    outcome.write(&dir)?;
    if outcome.t_min.is_none() {
        eprintln!("warning: det M(t) has no sign change in (0, {}]; t_min not reported", outcome.t_max);
    }
    if !opts.quiet {
        write!(out, "{}", outcome.summary())?;
        writeln!(out, "outputs written to {}", dir.display())?;
    }
    Ok(())
}
