//! Theoretical bounds next to observed values.

use std::fmt::Write as _;

use evtrig_core::engine::{convergence_radius_time_trigger, min_inter_event_bound_centralized};
use evtrig_core::triggers::max_admissible_period_for;
use evtrig_core::{DVector, RunMetrics, SimConfig, TriggerLaw, WeightedDigraph};

use crate::experiment::LawChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtLeast,
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub observed: f64,
    pub bound: f64,
    pub relation: Relation,
}

impl BoundCheck {
    pub fn at_least(name: &'static str, observed: f64, bound: f64) -> Self {
        Self { name, observed, bound, relation: Relation::AtLeast }
    }

    pub fn at_most(name: &'static str, observed: f64, bound: f64) -> Self {
        Self { name, observed, bound, relation: Relation::AtMost }
    }

    /// Positive when the bound holds with room to spare.
    pub fn slack(&self) -> f64 {
        match self.relation {
            Relation::AtLeast if self.observed == f64::INFINITY => f64::INFINITY,
            Relation::AtLeast => self.observed - self.bound,
            Relation::AtMost => self.bound - self.observed,
        }
    }

    /// NaN observations fail.
    pub fn pass(&self) -> bool {
        self.slack() >= 0.0
    }
}

/// Every bound that applies to a finished run of `law` on `g`.
pub fn check_bounds(
    metrics: &RunMetrics,
    law: &LawChoice,
    g: &WeightedDigraph,
    sim: &SimConfig,
    x0: &DVector<f64>,
) -> Vec<BoundCheck> {
    let mut out = vec![BoundCheck::at_most("conservation_error", metrics.conservation_error, 1e-8 * x0.norm().max(1.0))];
    let Ok(spec) = g.spectral_info() else { return out };
    match law {
        LawChoice::Ideal => {
            out.push(BoundCheck::at_least("decay_rate vs 0.9 lambda2", metrics.decay_rate.unwrap_or(f64::NAN), 0.9 * spec.lambda2));
        }
        LawChoice::Triggered(TriggerLaw::CentralizedNorm { sigma }) => {
            if let Ok(tau) = min_inter_event_bound_centralized(g, *sigma) {
                out.push(BoundCheck::at_least("min_gap vs tau - event_tol", metrics.min_gap, tau - sim.event_tol));
            }
        }
        LawChoice::Triggered(TriggerLaw::TimeDependent { c0, .. }) if *c0 > 0.0 => {
            if let Ok(r) = convergence_radius_time_trigger(g, *c0) {
                out.push(BoundCheck::at_most("final_disagreement vs r", metrics.final_disagreement, r + 1e-6));
            }
        }
        LawChoice::Triggered(TriggerLaw::PeriodicStateDependent { sigma, h }) => {
            if let Ok(h_star) = max_admissible_period_for(sigma, g) {
                out.push(BoundCheck::at_most("h vs h*", *h, h_star));
            }
            out.push(BoundCheck::at_least("min_gap vs h", metrics.min_gap, h * (1.0 - 1e-9)));
        }
        LawChoice::Triggered(_) => {}
    }
    out
}

/// Fixed-width table, one line per check.
pub fn format_report(checks: &[BoundCheck]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:>14} {:>14} {:>11}  status", "bound", "observed", "bound", "slack");
    for c in checks {
        let _ = writeln!(
            s,
            "{:<28} {:>14.6e} {:>14.6e} {:>+11.3e}  {}",
            c.name,
            c.observed,
            c.bound,
            c.slack(),
            if c.pass() { "PASS" } else { "FAIL" }
        );
    }
    s
}
