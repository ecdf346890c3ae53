//! Event-triggered average consensus on weighted graphs.
//!
//! * [`graph`]: weighted digraphs, Laplacians, spectra and generators.
//! * [`triggers`]: the broadcast rules and their parameters.
//! * [`engine`]: hybrid simulation with event location.
//! * [`linear_et`]: single-plant event-triggered control toolkit.
//! * [`metrics`]: disagreement, conservation and inter-event statistics.

pub mod engine;
pub mod graph;
pub mod linear_et;
pub mod metrics;
pub mod rng;
pub mod triggers;

pub use engine::{
    simulate_ideal, simulate_triggered, EngineError, EventAgent, EventRecord, SimConfig, Trace,
};
pub use graph::{GraphError, SpectralInfo, WeightedDigraph};
pub use linear_et::{LinearEtError, LinearEtSystem, LyapunovData, NextEvent};
pub use metrics::{MetricsError, RunMetrics};
pub use rng::Xorshift64Star;
pub use triggers::{Sigmas, TriggerError, TriggerLaw};

pub use nalgebra::{DMatrix, DVector};
