//! Trigger laws and their firing predicates.
//!
//! Every predicate answers one question for one agent at one instant: must
//! it broadcast (or, for the centralized law, must the controller update)
//! right now? Equality-form triggers are evaluated in their `>=` form so the
//! simulator can fire at the first instant the trigger function becomes
//! nonnegative. No law fires while the measurement error is exactly zero.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::WeightedDigraph;

/// Per-agent `sigma` used when a law is configured without one.
pub const DEFAULT_SIGMA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriggerError {
    #[error("invalid parameter `{param}`: {msg}")]
    InvalidParameter { param: &'static str, msg: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("agent {0} has no out-neighbors")]
    IsolatedAgent(usize),
}

fn invalid(param: &'static str, msg: impl Into<String>) -> TriggerError {
    TriggerError::InvalidParameter { param, msg: msg.into() }
}

fn check_sigma(param: &'static str, s: f64) -> Result<(), TriggerError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid(param, format!("{s} is not in (0, 1)")))
    }
}

/// Per-agent `sigma_i` values.
#[derive(Debug, Clone, PartialEq)]
pub enum Sigmas {
    Uniform(f64),
    PerAgent(Vec<f64>),
}

impl Default for Sigmas {
    fn default() -> Self {
        Sigmas::Uniform(DEFAULT_SIGMA)
    }
}

impl Sigmas {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            Sigmas::Uniform(s) => *s,
            Sigmas::PerAgent(v) => v[i],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Sigmas::Uniform(s) => *s,
            Sigmas::PerAgent(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), TriggerError> {
        match self {
            Sigmas::Uniform(s) => check_sigma("sigma", *s),
            Sigmas::PerAgent(v) => {
                if v.len() != n {
                    return Err(invalid("sigma_i", format!("{} values given for {n} agents", v.len())));
                }
                v.iter().try_for_each(|&s| check_sigma("sigma_i", s))
            }
        }
    }
}

/// One of the six trigger families, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TriggerLaw {
    /// `||e|| >= sigma ||L x|| / ||L||`, all agents update together.
    CentralizedNorm { sigma: f64 },
    /// `e_i^2 >= sigma_i a (1 - a |N_i|) / |N_i| * z_i^2` with `z = L x` from exact states.
    DecentralizedState { sigma: Sigmas, a: f64 },
    /// `|e_i| >= c0 + c1 exp(-alpha t)`.
    TimeDependent { c0: f64, c1: f64, alpha: f64 },
    /// `e_i^2 >= sigma_i / (4 |N_i|) * sum_j (xhat_i - xhat_j)^2`.
    StateDependent { sigma: Sigmas },
    /// `e_i^2 >= sigma_i / (4 d_i^out) * sum_j w_ij (xhat_i - xhat_j)^2`.
    DirectedStateDependent { sigma: Sigmas },
    /// The directed state-dependent predicate, checked only at `t = 0, h, 2h, ...`.
    PeriodicStateDependent { sigma: Sigmas, h: f64 },
}

impl TriggerLaw {
    pub fn name(&self) -> &'static str {
        match self {
            TriggerLaw::CentralizedNorm { .. } => "centralized",
            TriggerLaw::DecentralizedState { .. } => "decentralized",
            TriggerLaw::TimeDependent { .. } => "time_dependent",
            TriggerLaw::StateDependent { .. } => "state_dependent",
            TriggerLaw::DirectedStateDependent { .. } => "directed_state_dependent",
            TriggerLaw::PeriodicStateDependent { .. } => "periodic",
        }
    }

    /// Parameter checks, including the ones that depend on the graph.
    pub fn validate(&self, g: &WeightedDigraph) -> Result<(), TriggerError> {
        let n = g.n();
        let needs_neighbors = || {
            (0..n).try_for_each(|i| if g.out_neighbors(i).is_empty() { Err(TriggerError::IsolatedAgent(i)) } else { Ok(()) })
        };
        match self {
            TriggerLaw::CentralizedNorm { sigma } => check_sigma("sigma", *sigma),
            TriggerLaw::DecentralizedState { sigma, a } => {
                sigma.validate(n)?;
                needs_neighbors()?;
                let bound = 1.0 / g.max_out_neighbors() as f64;
                if !(*a > 0.0 && *a < bound) {
                    return Err(invalid("a", format!("{a} is not in (0, 1/max|N_i|) = (0, {bound})")));
                }
                Ok(())
            }
            TriggerLaw::TimeDependent { c0, c1, alpha } => check_time_params(*c0, *c1, *alpha),
            TriggerLaw::StateDependent { sigma } | TriggerLaw::DirectedStateDependent { sigma } => {
                sigma.validate(n)?;
                needs_neighbors()
            }
            TriggerLaw::PeriodicStateDependent { sigma, h } => {
                sigma.validate(n)?;
                needs_neighbors()?;
                if !(h.is_finite() && *h > 0.0) {
                    return Err(invalid("h", format!("{h} must be positive")));
                }
                Ok(())
            }
        }
    }
}

fn check_time_params(c0: f64, c1: f64, alpha: f64) -> Result<(), TriggerError> {
    if !(c0 >= 0.0 && c0.is_finite()) {
        return Err(invalid("c0", format!("{c0} must be >= 0")));
    }
    if !(c1 >= 0.0 && c1.is_finite()) {
        return Err(invalid("c1", format!("{c1} must be >= 0")));
    }
    if c0 + c1 <= 0.0 {
        return Err(invalid("c0", "c0 + c1 must be positive"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("{alpha} must be positive")));
    }
    Ok(())
}

/// Last broadcast state of one neighbor, as seen by the evaluating agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborState {
    pub id: usize,
    pub weight: f64,
    pub xhat: f64,
}

/// Everything an agent knows locally at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentView {
    pub id: usize,
    pub x: f64,
    pub xhat: f64,
    pub neighbors: Vec<NeighborState>,
    pub t: f64,
}

impl AgentView {
    /// `e_i = xhat_i - x_i`.
    pub fn error(&self) -> f64 {
        self.xhat - self.x
    }

    pub fn out_degree(&self) -> f64 {
        self.neighbors.iter().map(|nb| nb.weight).sum()
    }

    pub fn neighbor_count(&self) -> usize {
        self.neighbors.len()
    }
}

pub fn eval_centralized(
    sigma: f64,
    x: &DVector<f64>,
    xhat: &DVector<f64>,
    l: &DMatrix<f64>,
    norm_l: f64,
) -> Result<bool, TriggerError> {
    check_sigma("sigma", sigma)?;
    let n = x.len();
    for found in [xhat.len(), l.nrows(), l.ncols()] {
        if found != n {
            return Err(TriggerError::DimensionMismatch { expected: n, found });
        }
    }
    if !(norm_l > 0.0) {
        return Err(invalid("norm_l", format!("{norm_l} must be positive")));
    }
    // Both sides are scaled by max |e_i| so tiny states do not underflow when squared.
    let e = xhat - x;
    let s = e.amax();
    if s == 0.0 {
        return Ok(false);
    }
    Ok((e / s).norm() >= sigma * (l * x / s).norm() / norm_l)
}

/// `x_neighbors_exact` must list the true state of every neighbor in `view`.
pub fn eval_decentralized_state(
    view: &AgentView,
    sigma_i: f64,
    a: f64,
    x_neighbors_exact: &[(usize, f64)],
) -> Result<bool, TriggerError> {
    check_sigma("sigma_i", sigma_i)?;
    let card = view.neighbor_count();
    if card == 0 {
        return Err(TriggerError::IsolatedAgent(view.id));
    }
    if !(a > 0.0 && a * (card as f64) < 1.0) {
        return Err(invalid("a", format!("{a} is not in (0, 1/{card})")));
    }
    if x_neighbors_exact.len() != card {
        return Err(TriggerError::DimensionMismatch { expected: card, found: x_neighbors_exact.len() });
    }
    let mut z = 0.0;
    for &(j, xj) in x_neighbors_exact {
        let nb = view
            .neighbors
            .iter()
            .find(|nb| nb.id == j)
            .ok_or(TriggerError::DimensionMismatch { expected: card, found: x_neighbors_exact.len() })?;
        z += nb.weight * (view.x - xj);
    }
    let e = view.error();
    if e == 0.0 {
        return Ok(false);
    }
    let card = card as f64;
    let z = z / e.abs();
    Ok(1.0 >= sigma_i * a * (1.0 - a * card) / card * z * z)
}

pub fn eval_time_dependent(e_i: f64, t: f64, c0: f64, c1: f64, alpha: f64) -> Result<bool, TriggerError> {
    check_time_params(c0, c1, alpha)?;
    if !(t >= 0.0) {
        return Err(invalid("t", format!("{t} must be >= 0")));
    }
    if e_i == 0.0 {
        return Ok(false);
    }
    Ok(e_i.abs() >= c0 + c1 * (-alpha * t).exp())
}

pub fn eval_state_dependent(view: &AgentView, sigma_i: f64) -> Result<bool, TriggerError> {
    check_sigma("sigma_i", sigma_i)?;
    let card = view.neighbor_count();
    if card == 0 {
        return Err(TriggerError::IsolatedAgent(view.id));
    }
    let e = view.error().abs();
    if e == 0.0 {
        return Ok(false);
    }
    let spread: f64 = view.neighbors.iter().map(|nb| ((view.xhat - nb.xhat) / e).powi(2)).sum();
    Ok(1.0 >= sigma_i / (4.0 * card as f64) * spread)
}

pub fn eval_directed_state_dependent(view: &AgentView, sigma_i: f64) -> Result<bool, TriggerError> {
    check_sigma("sigma_i", sigma_i)?;
    let d_out = view.out_degree();
    if !(d_out > 0.0) {
        return Err(TriggerError::IsolatedAgent(view.id));
    }
    let e = view.error().abs();
    if e == 0.0 {
        return Ok(false);
    }
    let spread: f64 = view.neighbors.iter().map(|nb| nb.weight * ((view.xhat - nb.xhat) / e).powi(2)).sum();
    Ok(1.0 >= sigma_i / (4.0 * d_out) * spread)
}

/// Supremum `h*` of the sampling periods satisfying
/// `sigma_max + 4 h w_max |N_max^out| < 1`; every `h < h*` is admissible.
pub fn max_admissible_period(sigma_max: f64, w_max: f64, n_out_max: usize) -> Result<f64, TriggerError> {
    check_sigma("sigma_max", sigma_max)?;
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err(invalid("w_max", format!("{w_max} must be positive")));
    }
    if n_out_max == 0 {
        return Err(invalid("n_out_max", "must be at least 1"));
    }
    Ok((1.0 - sigma_max) / (4.0 * w_max * n_out_max as f64))
}

/// `h*` for a periodic law's `sigma` on graph `g`.
pub fn max_admissible_period_for(sigma: &Sigmas, g: &WeightedDigraph) -> Result<f64, TriggerError> {
    max_admissible_period(sigma.max(), g.max_weight(), g.max_out_neighbors())
}
