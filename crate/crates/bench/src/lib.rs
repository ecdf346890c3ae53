//! Fixed workloads shared by the benchmarks.

use evtrig_core::graph::random_connected_undirected;
use evtrig_core::linear_et::{random_system, EventScanner};
use evtrig_core::{DVector, LyapunovData, SimConfig, WeightedDigraph, Xorshift64Star};

/// One graph, initial state and step configuration.
pub struct Scenario {
    pub name: String,
    pub graph: WeightedDigraph,
    pub x0: DVector<f64>,
    pub sim: SimConfig,
}

/// Random connected undirected graph on `n` vertices with a horizon of `horizon`.
pub fn consensus_scenario(n: usize, seed: u64, horizon: f64) -> Scenario {
    let mut rng = Xorshift64Star::new(seed);
    let graph = random_connected_undirected(n, 0.3, Some((0.5, 2.0)), &mut rng);
    let x0 = DVector::from_vec(rng.uniform_vec(n, -1.0, 1.0));
    let sim = SimConfig::for_spectrum(&graph.spectral_info().expect("connected graph"), horizon);
    Scenario { name: format!("n{n}"), graph, x0, sim }
}

/// Lyapunov data for a random admissible plant of dimension `n`.
pub fn linear_fixture(n: usize, seed: u64) -> LyapunovData {
    let mut rng = Xorshift64Star::new(seed);
    LyapunovData::new(&random_system(n, &mut rng)).expect("generated systems are admissible")
}

pub fn scanner(lyap: &LyapunovData, grid_points: usize) -> EventScanner<'_> {
    EventScanner::new(lyap, lyap.default_t_max(), grid_points).expect("valid scanner parameters")
}
