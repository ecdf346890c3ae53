//! Hybrid simulation of the networked closed loop `x' = -L xhat`.
//!
//! Between broadcasts `xhat` is held constant, so the flow is integrated with
//! fixed RK4 steps on a uniform grid. For continuously monitored laws every
//! step is checked at its end; when some predicate has turned true the step
//! is bisected down to `event_tol` to locate the earliest crossing, the event
//! fires there and integration resumes from the event time. Broadcasts are
//! received instantly, so one event can enable further events at the same
//! instant; those cascade in ascending agent order until no predicate holds.
//! The periodic law only looks at its predicates at `t = 0, h, 2h, ...`.

mod export;
mod integrate;

pub use export::{write_events_csv, write_trace_csv};
pub use integrate::rk4_step;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{spectral_norm, GraphError, SpectralInfo, WeightedDigraph};
use crate::triggers::{
    eval_centralized, eval_decentralized_state, eval_directed_state_dependent, eval_state_dependent,
    eval_time_dependent, AgentView, NeighborState, TriggerError, TriggerLaw,
};

/// Abort once one agent fires this many times within a single grid step.
pub const MAX_EVENTS_PER_STEP: usize = 10_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("initial state has {found} entries, graph has {expected} vertices")]
    InitialState { expected: usize, found: usize },
    #[error("Zeno abort: agent {agent} fired more than {MAX_EVENTS_PER_STEP} times within one step near t = {t}")]
    ZenoAbort { agent: usize, t: f64, trace: Box<Trace> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub event_tol: f64,
    pub zeno_floor: f64,
    pub sample_every: usize,
}

impl SimConfig {
    /// Defaults scaled to the graph: `dt = 0.01 / lambda_N`,
    /// `event_tol = 1e-3 dt`, `zeno_floor = min(1e-7, dt / 2)`.
    pub fn for_spectrum(spec: &SpectralInfo, horizon: f64) -> Self {
        let dt = 0.01 / spec.lambda_n;
        Self { dt, horizon, event_tol: dt * 1e-3, zeno_floor: (1e-7f64).min(0.5 * dt), sample_every: 1 }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon = {} must be positive", self.horizon));
        }
        if !(self.event_tol > 0.0 && self.event_tol < self.dt) {
            return bad(format!("event_tol = {} must be in (0, dt)", self.event_tol));
        }
        if !(self.zeno_floor >= 0.0 && self.zeno_floor < self.dt) {
            return bad(format!("zeno_floor = {} must be in [0, dt)", self.zeno_floor));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        Ok(())
    }
}

/// Who broadcast: one agent, or every agent at once (centralized law).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventAgent {
    Agent(usize),
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub agent: EventAgent,
    /// The broadcast value; one entry per agent for [`EventAgent::All`].
    pub values: Vec<f64>,
}

/// Network state at time `t`. The error `xhat - x` is always derived.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub t: f64,
    pub x: DVector<f64>,
    pub xhat: DVector<f64>,
    pub last_event: Vec<f64>,
}

impl NetworkState {
    pub fn error(&self) -> DVector<f64> {
        &self.xhat - &self.x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub x0: DVector<f64>,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub xhats: Vec<DVector<f64>>,
    /// `V = 1/2 ||x - xbar 1||^2` with `xbar` the initial average.
    pub lyapunov: Vec<f64>,
    pub events: Vec<EventRecord>,
    /// Events that came less than `zeno_floor` after the same agent's previous one.
    pub zeno_flags: Vec<(EventAgent, f64)>,
}

impl Trace {
    fn new(x0: &DVector<f64>) -> Self {
        Self {
            x0: x0.clone(),
            times: Vec::new(),
            states: Vec::new(),
            xhats: Vec::new(),
            lyapunov: Vec::new(),
            events: Vec::new(),
            zeno_flags: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().unwrap_or(&self.x0)
    }

    fn sample(&mut self, t: f64, x: &DVector<f64>, xhat: &DVector<f64>) {
        let mean = self.x0.mean();
        self.lyapunov.push(0.5 * x.map(|v| v - mean).norm_squared());
        self.times.push(t);
        self.states.push(x.clone());
        self.xhats.push(xhat.clone());
    }
}

fn check_initial(g: &WeightedDigraph, x0: &DVector<f64>) -> Result<(), EngineError> {
    if x0.len() != g.n() {
        return Err(EngineError::InitialState { expected: g.n(), found: x0.len() });
    }
    Ok(())
}

/// Grid time of step `k`, clamped to the horizon.
fn grid_time(k: usize, dt: f64, horizon: f64) -> f64 {
    (k as f64 * dt).min(horizon)
}

fn step_count(dt: f64, horizon: f64) -> usize {
    // Tolerate horizons that are a multiple of dt up to rounding.
    ((horizon / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates the ideal closed loop `x' = -L x` with fixed RK4 steps.
pub fn simulate_ideal(g: &WeightedDigraph, x0: &DVector<f64>, cfg: &SimConfig) -> Result<Trace, EngineError> {
    cfg.validate()?;
    g.check_consensus_ready()?;
    check_initial(g, x0)?;
    let l = g.laplacian();
    let flow = |_: f64, x: &DVector<f64>| -(&l * x);
    let mut trace = Trace::new(x0);
    let mut x = x0.clone();
    let mut t = 0.0;
    trace.sample(t, &x, &x);
    let steps = step_count(cfg.dt, cfg.horizon);
    for k in 1..=steps {
        let target = grid_time(k, cfg.dt, cfg.horizon);
        x = rk4_step(flow, t, &x, target - t);
        t = target;
        if k % cfg.sample_every == 0 || k == steps {
            trace.sample(t, &x, &x);
        }
    }
    Ok(trace)
}

/// Predicate evaluation for one law on one graph.
struct Monitor<'a> {
    law: &'a TriggerLaw,
    l: DMatrix<f64>,
    norm_l: f64,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl<'a> Monitor<'a> {
    fn new(law: &'a TriggerLaw, g: &WeightedDigraph) -> Self {
        let l = g.laplacian();
        let norm_l = spectral_norm(&l);
        Self { law, l, norm_l, neighbors: (0..g.n()).map(|i| g.out_neighbors(i)).collect() }
    }

    fn view(&self, i: usize, t: f64, x: &DVector<f64>, xhat: &DVector<f64>) -> AgentView {
        AgentView {
            id: i,
            x: x[i],
            xhat: xhat[i],
            neighbors: self.neighbors[i].iter().map(|&(j, w)| NeighborState { id: j, weight: w, xhat: xhat[j] }).collect(),
            t,
        }
    }

    /// Whether agent `i` must fire; for the centralized law `i` is ignored.
    fn fires(&self, i: usize, t: f64, x: &DVector<f64>, xhat: &DVector<f64>) -> Result<bool, TriggerError> {
        match self.law {
            TriggerLaw::CentralizedNorm { sigma } => eval_centralized(*sigma, x, xhat, &self.l, self.norm_l),
            TriggerLaw::DecentralizedState { sigma, a } => {
                let exact: Vec<(usize, f64)> = self.neighbors[i].iter().map(|&(j, _)| (j, x[j])).collect();
                eval_decentralized_state(&self.view(i, t, x, xhat), sigma.get(i), *a, &exact)
            }
            TriggerLaw::TimeDependent { c0, c1, alpha } => eval_time_dependent(xhat[i] - x[i], t, *c0, *c1, *alpha),
            TriggerLaw::StateDependent { sigma } => eval_state_dependent(&self.view(i, t, x, xhat), sigma.get(i)),
            TriggerLaw::DirectedStateDependent { sigma } | TriggerLaw::PeriodicStateDependent { sigma, .. } => {
                eval_directed_state_dependent(&self.view(i, t, x, xhat), sigma.get(i))
            }
        }
    }

    fn is_centralized(&self) -> bool {
        matches!(self.law, TriggerLaw::CentralizedNorm { .. })
    }

    /// Agents (or the single global slot 0) whose predicate holds.
    fn firing(&self, t: f64, x: &DVector<f64>, xhat: &DVector<f64>) -> Result<Vec<usize>, TriggerError> {
        let slots = if self.is_centralized() { 1 } else { x.len() };
        let mut out = Vec::new();
        for i in 0..slots {
            if self.fires(i, t, x, xhat)? {
                out.push(i);
            }
        }
        Ok(out)
    }
}

/// Mutable run state plus the growing trace.
struct Run<'a> {
    monitor: Monitor<'a>,
    cfg: &'a SimConfig,
    state: NetworkState,
    /// `-L xhat`, refreshed after every broadcast.
    drift: DVector<f64>,
    trace: Trace,
    step_events: Vec<usize>,
    /// Initial average; `state` holds deviations from it so that roundoff tracks the disagreement.
    offset: f64,
    /// Broadcast values in the caller's coordinates, reported as `xhat`.
    published: DVector<f64>,
}

impl<'a> Run<'a> {
    fn advance(&self, to: f64) -> DVector<f64> {
        let drift = &self.drift;
        rk4_step(|_, _| drift.clone(), self.state.t, &self.state.x, to - self.state.t)
    }

    fn record(&mut self) {
        let x = self.state.x.add_scalar(self.offset);
        self.trace.sample(self.state.t, &x, &self.published);
    }

    fn broadcast(&mut self, slot: usize) -> Result<(), EngineError> {
        let t = self.state.t;
        let n = self.state.x.len();
        let (agents, agent) = if self.monitor.is_centralized() {
            self.state.xhat.copy_from(&self.state.x);
            ((0..n).collect::<Vec<_>>(), EventAgent::All)
        } else {
            self.state.xhat[slot] = self.state.x[slot];
            (vec![slot], EventAgent::Agent(slot))
        };
        let values: Vec<f64> = agents.iter().map(|&i| self.state.x[i] + self.offset).collect();
        for (&i, &v) in agents.iter().zip(&values) {
            self.published[i] = v;
        }
        self.trace.events.push(EventRecord { t, agent, values });
        // Centralized updates share one clock, so agent 0 stands for all of them.
        let clock = agents[0];
        if t > 0.0 && t - self.state.last_event[clock] < self.cfg.zeno_floor {
            self.trace.zeno_flags.push((agent, t));
        }
        for &i in &agents {
            self.state.last_event[i] = t;
            self.step_events[i] += 1;
            if self.step_events[i] > MAX_EVENTS_PER_STEP {
                return Err(EngineError::ZenoAbort { agent: i, t, trace: Box::new(self.trace.clone()) });
            }
        }
        // Drop the roundoff that has leaked into the mean; L ignores it but it swamps tiny deviations.
        let c = self.state.x.mean();
        self.state.x.add_scalar_mut(-c);
        self.state.xhat.add_scalar_mut(-c);
        self.offset += c;
        self.drift = -(&self.monitor.l * &self.state.xhat);
        Ok(())
    }

    /// Fires every agent whose predicate holds at the current instant, repeating until none does.
    fn cascade(&mut self) -> Result<(), EngineError> {
        loop {
            let mut fired = false;
            let slots = if self.monitor.is_centralized() { 1 } else { self.state.x.len() };
            for i in 0..slots {
                if self.monitor.fires(i, self.state.t, &self.state.x, &self.state.xhat)? {
                    self.broadcast(i)?;
                    fired = true;
                }
            }
            if !fired {
                return Ok(());
            }
        }
    }

    /// Earliest time in `(t, target]` where `slot`'s predicate holds, to within `event_tol`.
    fn locate(&self, slot: usize, target: f64) -> Result<f64, TriggerError> {
        let (mut lo, mut hi) = (self.state.t, target);
        while hi - lo > self.cfg.event_tol {
            let mid = 0.5 * (lo + hi);
            if self.monitor.fires(slot, mid, &self.advance(mid), &self.state.xhat)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Continuous monitoring over one grid step ending at `target`.
    fn continuous_step(&mut self, target: f64) -> Result<(), EngineError> {
        loop {
            let x_end = self.advance(target);
            let firing = self.monitor.firing(target, &x_end, &self.state.xhat)?;
            if firing.is_empty() {
                self.state.x = x_end;
                self.state.t = target;
                return Ok(());
            }
            let mut t_star = target;
            for slot in firing {
                t_star = t_star.min(self.locate(slot, target)?);
            }
            self.state.x = self.advance(t_star);
            self.state.t = t_star;
            self.cascade()?;
            if t_star >= target {
                return Ok(());
            }
        }
    }
}

/// Simulates `x' = -L xhat` under an event-triggered broadcast law.
///
/// Every agent broadcasts at `t = 0`. For the periodic law `cfg.dt` is
/// shrunk to `h / ceil(h / dt)` so that sampling instants fall on the grid.
pub fn simulate_triggered(
    g: &WeightedDigraph,
    law: &TriggerLaw,
    x0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<Trace, EngineError> {
    cfg.validate()?;
    g.check_consensus_ready()?;
    law.validate(g)?;
    check_initial(g, x0)?;

    let n = g.n();
    let period = match law {
        TriggerLaw::PeriodicStateDependent { h, .. } => {
            let per_sample = (h / cfg.dt).ceil().max(1.0) as usize;
            Some((*h, per_sample))
        }
        _ => None,
    };
    let dt = period.map_or(cfg.dt, |(h, m)| h / m as f64);
    let monitor = Monitor::new(law, g);
    let offset = x0.mean();
    let dev = x0.add_scalar(-offset);
    let mut run = Run {
        drift: -(&monitor.l * &dev),
        monitor,
        cfg,
        state: NetworkState { t: 0.0, x: dev.clone(), xhat: dev, last_event: vec![0.0; n] },
        trace: Trace::new(x0),
        step_events: vec![0; n],
        offset,
        published: x0.clone(),
    };

    // Bootstrap broadcast so xhat(0) = x0.
    let slots = if run.monitor.is_centralized() { 1 } else { n };
    for i in 0..slots {
        run.broadcast(i)?;
    }
    run.record();

    let steps = step_count(dt, cfg.horizon);
    for k in 1..=steps {
        run.step_events.iter_mut().for_each(|c| *c = 0);
        match period {
            Some((h, m)) => {
                let on_sample = k % m == 0;
                let target = if on_sample { ((k / m) as f64 * h).min(cfg.horizon) } else { grid_time(k, dt, cfg.horizon) };
                run.state.x = run.advance(target);
                run.state.t = target;
                if on_sample {
                    run.cascade()?;
                }
            }
            None => run.continuous_step(grid_time(k, dt, cfg.horizon))?,
        }
        if k % cfg.sample_every == 0 || k == steps {
            run.record();
        }
    }
    Ok(run.trace)
}

/// Guaranteed lower bound `sigma / (||L|| (1 + sigma))` on the centralized law's inter-event times.
pub fn min_inter_event_bound_centralized(g: &WeightedDigraph, sigma: f64) -> Result<f64, EngineError> {
    TriggerLaw::CentralizedNorm { sigma }.validate(g)?;
    let norm = g.spectral_info()?.laplacian_norm;
    Ok(sigma / (norm * (1.0 + sigma)))
}

/// Radius `||L|| sqrt(N) c0 / lambda2` of the consensus neighborhood reached under the time-dependent law.
pub fn convergence_radius_time_trigger(g: &WeightedDigraph, c0: f64) -> Result<f64, EngineError> {
    if !(c0 >= 0.0 && c0.is_finite()) {
        return Err(TriggerError::InvalidParameter { param: "c0", msg: format!("{c0} must be >= 0") }.into());
    }
    let s = g.spectral_info()?;
    Ok(s.laplacian_norm * (g.n() as f64).sqrt() * c0 / s.lambda2)
}
