//! Turning a [`RawConfig`] into a graph, a law, an initial state and a simulation.

use std::path::PathBuf;

use evtrig_core::engine::{simulate_ideal, simulate_triggered, EngineError};
use evtrig_core::graph::{
    complete_graph, cycle_digraph, parse_graph_file, path_graph, random_connected_undirected,
    random_weight_balanced, GraphError,
};
use evtrig_core::triggers::max_admissible_period_for;
use evtrig_core::{
    DVector, RunMetrics, Sigmas, SimConfig, SpectralInfo, Trace, TriggerError, TriggerLaw, WeightedDigraph,
    Xorshift64Star,
};

use crate::config::{parse_f64, RawConfig, Section};
use crate::report::{check_bounds, BoundCheck};
use crate::CliError;

pub const DEFAULT_HORIZON: f64 = 20.0;
pub const SIM_FIELDS: [&str; 5] = ["dt", "horizon", "event_tol", "zeno_floor", "sample_every"];

/// A trigger law, or the continuously communicating reference loop.
#[derive(Debug, Clone, PartialEq)]
pub enum LawChoice {
    Ideal,
    Triggered(TriggerLaw),
}

impl LawChoice {
    pub fn name(&self) -> &'static str {
        match self {
            LawChoice::Ideal => "ideal",
            LawChoice::Triggered(law) => law.name(),
        }
    }
}

/// Fields accepted in `[law]` for each `type`.
pub fn law_fields(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "ideal" => &["type"],
        "centralized" => &["type", "sigma"],
        "decentralized" => &["type", "sigma", "a"],
        "time_dependent" => &["type", "c0", "c1", "alpha", "alpha_factor"],
        "state_dependent" | "directed_state_dependent" => &["type", "sigma"],
        "periodic" => &["type", "sigma", "h", "h_factor"],
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub graph: WeightedDigraph,
    pub spectrum: SpectralInfo,
    pub law: LawChoice,
    pub sim: SimConfig,
    pub x0: DVector<f64>,
    pub output_dir: Option<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Trace,
    pub metrics: RunMetrics,
    pub bounds: Vec<BoundCheck>,
}

fn graph_err(field: &str, e: GraphError) -> CliError {
    CliError::config("graph", field, e.to_string())
}

fn build_graph(raw: &RawConfig) -> Result<WeightedDigraph, CliError> {
    let s = raw.section("graph");
    if let Some(file) = s.raw("file") {
        s.only(&["file"])?;
        return parse_graph_file(&raw.base_dir.join(file)).map_err(|e| graph_err("file", e));
    }
    let kind = s.raw("kind").unwrap_or("edges");
    let n = s.usize("n")?.ok_or_else(|| s.err("n", "missing"))?;
    if n == 0 {
        return Err(s.err("n", "must be at least 1"));
    }
    let weight = s.f64("weight")?.unwrap_or(1.0);
    if weight <= 0.0 {
        return Err(s.err("weight", format!("{weight} must be positive")));
    }
    let weight_range = |lo: f64, hi: f64| -> Result<Option<(f64, f64)>, CliError> {
        match (s.f64("wmin")?, s.f64("wmax")?) {
            (None, None) => Ok(None),
            (a, b) => {
                let (a, b) = (a.unwrap_or(lo), b.unwrap_or(hi));
                if !(a > 0.0 && a <= b) {
                    return Err(s.err("wmin", format!("weight range [{a}, {b}] must satisfy 0 < wmin <= wmax")));
                }
                Ok(Some((a, b)))
            }
        }
    };
    let seed = || s.u64("seed").and_then(|v| v.ok_or_else(|| s.err("seed", "missing")));
    match kind {
        "edges" => {
            s.only(&["kind", "n", "directed", "edges"])?;
            let directed = s.bool("directed")?.unwrap_or(false);
            let edges = parse_edges(&s)?;
            WeightedDigraph::from_edges(n, directed, &edges).map_err(|e| graph_err("edges", e))
        }
        "path" | "complete" | "cycle" => {
            s.only(&["kind", "n", "weight"])?;
            if n < 2 {
                return Err(s.err("n", "must be at least 2"));
            }
            Ok(match kind {
                "path" => path_graph(n, weight),
                "complete" => complete_graph(n, weight),
                _ => cycle_digraph(n, weight),
            })
        }
        "random_undirected" => {
            s.only(&["kind", "n", "seed", "p", "wmin", "wmax"])?;
            let p = s.f64("p")?.unwrap_or(0.3);
            if !(0.0..=1.0).contains(&p) {
                return Err(s.err("p", format!("{p} is not a probability")));
            }
            let w = weight_range(0.5, 2.0)?;
            Ok(random_connected_undirected(n, p, w, &mut Xorshift64Star::new(seed()?)))
        }
        "random_balanced" => {
            s.only(&["kind", "n", "seed", "cycles", "wmin", "wmax"])?;
            if n < 2 {
                return Err(s.err("n", "must be at least 2"));
            }
            let cycles = s.usize("cycles")?.unwrap_or(n);
            let w = weight_range(0.5, 2.0)?.unwrap_or((0.5, 2.0));
            Ok(random_weight_balanced(n, cycles, w, &mut Xorshift64Star::new(seed()?)))
        }
        other => Err(s.err("kind", format!("unknown graph kind `{other}`"))),
    }
}

/// `i j w` triples separated by `;`; a missing weight means 1.
fn parse_edges(s: &Section<'_>) -> Result<Vec<(usize, usize, f64)>, CliError> {
    let text = s.require("edges")?;
    let mut edges = Vec::new();
    for item in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let tok: Vec<&str> = item.split_whitespace().collect();
        if !(2..=3).contains(&tok.len()) {
            return Err(s.err("edges", format!("`{item}` is not `i j w`")));
        }
        let vertex = |v: &str| v.parse::<usize>().map_err(|_| s.err("edges", format!("`{v}` is not a vertex id")));
        let w = match tok.get(2) {
            Some(w) => w.parse::<f64>().map_err(|_| s.err("edges", format!("`{w}` is not a weight")))?,
            None => 1.0,
        };
        edges.push((vertex(tok[0])?, vertex(tok[1])?, w));
    }
    Ok(edges)
}

fn trigger_err(e: TriggerError) -> CliError {
    match e {
        TriggerError::InvalidParameter { param, msg } => CliError::config("law", param, msg),
        other => CliError::config("law", "type", other.to_string()),
    }
}

fn build_law(raw: &RawConfig, g: &WeightedDigraph, spec: &SpectralInfo, warnings: &mut Vec<String>) -> Result<LawChoice, CliError> {
    let s = raw.section("law");
    let kind = s.require("type")?;
    let fields = law_fields(kind).ok_or_else(|| s.err("type", format!("unknown law `{kind}`")))?;
    s.only(fields)?;
    let sigma = match s.list("sigma")? {
        None => Sigmas::default(),
        Some(v) if v.len() == 1 => Sigmas::Uniform(v[0]),
        Some(v) => Sigmas::PerAgent(v),
    };
    let either = |plain: &str, factor: &str, scale: f64, default: Option<f64>| -> Result<f64, CliError> {
        match (s.f64(plain)?, s.f64(factor)?) {
            (Some(_), Some(_)) => Err(s.err(plain, format!("give either {plain} or {factor}, not both"))),
            (Some(v), None) => Ok(v),
            (None, Some(f)) => Ok(f * scale),
            (None, None) => default.map(|f| f * scale).ok_or_else(|| s.err(plain, "missing")),
        }
    };
    let law = match kind {
        "ideal" => return Ok(LawChoice::Ideal),
        "centralized" => {
            let sigma = match sigma {
                Sigmas::Uniform(v) => v,
                Sigmas::PerAgent(_) => return Err(s.err("sigma", "the centralized law takes a single sigma")),
            };
            TriggerLaw::CentralizedNorm { sigma }
        }
        "decentralized" => {
            let a = match s.f64("a")? {
                Some(a) => a,
                None => 0.5 / g.max_out_neighbors().max(1) as f64,
            };
            TriggerLaw::DecentralizedState { sigma, a }
        }
        "time_dependent" => TriggerLaw::TimeDependent {
            c0: s.f64("c0")?.unwrap_or(0.0),
            c1: s.f64("c1")?.unwrap_or(0.0),
            alpha: either("alpha", "alpha_factor", spec.lambda2, None)?,
        },
        "state_dependent" => TriggerLaw::StateDependent { sigma },
        "directed_state_dependent" => TriggerLaw::DirectedStateDependent { sigma },
        _ => {
            sigma.validate(g.n()).map_err(trigger_err)?;
            let h_star = max_admissible_period_for(&sigma, g).map_err(trigger_err)?;
            let h = either("h", "h_factor", h_star, Some(0.5))?;
            if h >= h_star {
                warnings.push(format!(
                    "[law] h = {h} is not below h* = {h_star}; the sampling-period condition fails and consensus is not guaranteed"
                ));
            }
            TriggerLaw::PeriodicStateDependent { sigma, h }
        }
    };
    law.validate(g).map_err(trigger_err)?;
    Ok(LawChoice::Triggered(law))
}

fn build_sim(raw: &RawConfig, spec: &SpectralInfo) -> Result<SimConfig, CliError> {
    let s = raw.section("sim");
    s.only(&SIM_FIELDS)?;
    let horizon = s.f64("horizon")?.unwrap_or(DEFAULT_HORIZON);
    let mut cfg = SimConfig::for_spectrum(spec, horizon);
    if let Some(dt) = s.f64("dt")? {
        cfg.dt = dt;
        cfg.event_tol = dt * 1e-3;
        cfg.zeno_floor = (1e-7f64).min(0.5 * dt);
    }
    if let Some(v) = s.f64("event_tol")? {
        cfg.event_tol = v;
    }
    if let Some(v) = s.f64("zeno_floor")? {
        cfg.zeno_floor = v;
    }
    if let Some(v) = s.usize("sample_every")? {
        cfg.sample_every = v;
    }
    cfg.validate().map_err(|e| match e {
        EngineError::Config(msg) => {
            let field = SIM_FIELDS.iter().find(|f| msg.starts_with(**f)).copied().unwrap_or("");
            CliError::config("sim", field, msg)
        }
        other => CliError::config("sim", "", other.to_string()),
    })?;
    Ok(cfg)
}

/// `1, -1, 0.5` or `random(seed, lo, hi)`.
pub fn parse_initial_state(value: &str, n: usize) -> Result<DVector<f64>, String> {
    let v = value.trim();
    if let Some(args) = v.strip_prefix("random(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err("expected random(seed, lo, hi)".into());
        }
        let seed = parts[0].parse::<u64>().map_err(|_| format!("`{}` is not a seed", parts[0]))?;
        let (lo, hi) = (parse_f64(parts[1])?, parse_f64(parts[2])?);
        if !(lo < hi) {
            return Err(format!("empty range [{lo}, {hi})"));
        }
        return Ok(DVector::from_vec(Xorshift64Star::new(seed).uniform_vec(n, lo, hi)));
    }
    let x = crate::config::parse_list(v)?;
    if x.len() != n {
        return Err(format!("{} entries for {n} agents", x.len()));
    }
    Ok(DVector::from_vec(x))
}

impl Experiment {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        if !raw.has_section("graph") {
            return Err(CliError::config("graph", "", "section missing"));
        }
        if raw.has_section("linear_et") {
            return Err(CliError::config("linear_et", "", "section belongs to the linear-et command"));
        }
        let graph = build_graph(raw)?;
        graph.check_consensus_ready().map_err(|e| graph_err("", e))?;
        let spectrum = graph.spectral_info().map_err(|e| graph_err("", e))?;
        let mut warnings = Vec::new();
        let law = build_law(raw, &graph, &spectrum, &mut warnings)?;
        let sim = build_sim(raw, &spectrum)?;
        let run = raw.section("run");
        run.only(&["x0", "output_dir"])?;
        let x0 = parse_initial_state(run.require("x0")?, graph.n()).map_err(|m| run.err("x0", m))?;
        let output_dir = run.raw("output_dir").map(|d| raw.base_dir.join(d));
        Ok(Self { graph, spectrum, law, sim, x0, output_dir, warnings })
    }

    pub fn run(&self) -> Result<RunOutcome, CliError> {
        let result = match &self.law {
            LawChoice::Ideal => simulate_ideal(&self.graph, &self.x0, &self.sim),
            LawChoice::Triggered(law) => simulate_triggered(&self.graph, law, &self.x0, &self.sim),
        };
        let trace = match result {
            Ok(trace) => trace,
            Err(EngineError::ZenoAbort { agent, t, trace }) => return Err(CliError::Zeno { agent, t, trace }),
            Err(e) => return Err(CliError::config("", "", e.to_string())),
        };
        let metrics = RunMetrics::from_trace(&trace, self.sim.zeno_floor);
        let bounds = check_bounds(&metrics, &self.law, &self.graph, &self.sim, &self.x0);
        Ok(RunOutcome { trace, metrics, bounds })
    }
}

/// One sweep point: the parameter assignments and the config they produce.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub params: Vec<(String, String)>,
    pub config: RawConfig,
}

/// Sets `section.field`, dropping the alternative spelling of the same parameter.
pub fn apply_param(config: &mut RawConfig, section: &str, field: &str, value: &str) {
    config.set(section, field, value);
    for (a, b) in [("h", "h_factor"), ("alpha", "alpha_factor")] {
        if field == a {
            config.remove(section, b);
        } else if field == b {
            config.remove(section, a);
        }
    }
}

/// Cartesian product of the `[sweep]` lists, first key varying slowest.
pub fn sweep_points(raw: &RawConfig) -> Result<Vec<SweepPoint>, CliError> {
    let s = raw.section("sweep");
    let kind = raw.section("law").raw("type").unwrap_or("");
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for e in s.entries() {
        let (section, field) = e.key.split_once('.').ok_or_else(|| s.err(&e.key, "expected law.<field> or sim.<field>"))?;
        let known = match section {
            "law" => law_fields(kind).is_some_and(|f| f.contains(&field) && field != "type"),
            "sim" => SIM_FIELDS.contains(&field),
            _ => false,
        };
        if !known {
            return Err(s.err(&e.key, format!("not a field of [{section}] for law type `{kind}`")));
        }
        let values: Vec<String> = e.value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(s.err(&e.key, "no values"));
        }
        axes.push((e.key.clone(), values));
    }
    let mut points = vec![SweepPoint { params: Vec::new(), config: raw.clone() }];
    for (key, values) in &axes {
        let (section, field) = key.split_once('.').expect("checked above");
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for v in values {
                let mut config = p.config.clone();
                apply_param(&mut config, section, field, v);
                let mut params = p.params.clone();
                params.push((key.clone(), v.clone()));
                next.push(SweepPoint { params, config });
            }
        }
        points = next;
    }
    Ok(points)
}
