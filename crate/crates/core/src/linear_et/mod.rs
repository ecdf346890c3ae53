//! Event-triggered sample-and-hold control of a single linear plant.
//!
//! The plant `x' = A x + B u` runs with `u = K x(t_l)` held between update
//! times. With `P` the Lyapunov matrix of `A + BK` for weight `Q`, an update
//! is due when `V(t) = x^T P x` would exceed the performance function
//! `S(t) = x_s^T P x_s`, where `x_s' = A_s x_s` restarts from `x(t_l)` at
//! every update and `A_s^T P + P A_s = -R` with `0 < R < Q`.
//!
//! In the lifted coordinates `y = [x; e]`, `e = x(t_l) - x`, the flow is
//! `y' = F y` and the trigger function is the quadratic form
//! `f(t, y_l) = y_l^T (e^{F^T t} C^T P C e^{F t} - e^{F_s^T t} C^T P C e^{F_s t}) y_l`
//! with `y_l = [x(t_l); 0]`. Restricted to the `x` block this is
//! `x_l^T M(t) x_l`, and the first positive root of `det M(t)` is a lower
//! bound on every inter-event time.

mod expm;
mod generate;
mod lyapunov;

pub use expm::matrix_exponential;
pub use generate::random_system;
pub use lyapunov::{check_hurwitz, is_spd, lyapunov_residual, solve_lyapunov, spectral_abscissa};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default grid resolution for root bracketing.
pub const DEFAULT_GRID_POINTS: usize = 10_000;
/// Bisection stops once the bracket is this narrow.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearEtError {
    #[error("{what} has shape {found:?}, expected {expected:?}")]
    Dimension { what: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("{what} is not Hurwitz (largest real part {max_real})")]
    NotHurwitz { what: &'static str, max_real: f64 },
    #[error("{0} is not symmetric positive definite")]
    NotSpd(&'static str),
    #[error("singular {0}")]
    Singular(&'static str),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("matrix exponential overflows")]
    Overflow,
    #[error("det M(t) has no sign change in (0, {t_max}]")]
    NoRootFound { t_max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Plant, gain and performance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEtSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    k: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    a_s: Option<DMatrix<f64>>,
}

impl LinearEtSystem {
    /// Checks shapes, `A + BK` Hurwitz, and `Q`, `R`, `Q - R` positive definite.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        k: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self, LinearEtError> {
        let n = a.nrows();
        let expect = |what, m: &DMatrix<f64>, shape: (usize, usize)| {
            if m.shape() == shape {
                Ok(())
            } else {
                Err(LinearEtError::Dimension { what, expected: shape, found: m.shape() })
            }
        };
        if n == 0 {
            return Err(LinearEtError::Dimension { what: "A", expected: (1, 1), found: a.shape() });
        }
        expect("A", &a, (n, n))?;
        let m = b.ncols();
        expect("B", &b, (n, m))?;
        expect("K", &k, (m, n))?;
        expect("Q", &q, (n, n))?;
        expect("R", &r, (n, n))?;
        for (what, mat) in [("A", &a), ("B", &b), ("K", &k), ("Q", &q), ("R", &r)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(LinearEtError::NonFinite(what));
            }
        }
        check_hurwitz("A + BK", &(&a + &b * &k))?;
        lyapunov::check_spd("Q", &q)?;
        lyapunov::check_spd("R", &r)?;
        lyapunov::check_spd("Q - R", &(&q - &r))?;
        Ok(Self { a, b, k, q, r, a_s: None })
    }

    /// Uses a caller-supplied `A_s` instead of `-1/2 P^{-1} R`.
    /// It must be Hurwitz and solve `A_s^T P + P A_s = -R`; that is checked in [`LyapunovData::new`].
    pub fn with_performance_matrix(mut self, a_s: DMatrix<f64>) -> Result<Self, LinearEtError> {
        let n = self.dim();
        if a_s.shape() != (n, n) {
            return Err(LinearEtError::Dimension { what: "A_s", expected: (n, n), found: a_s.shape() });
        }
        check_hurwitz("A_s", &a_s)?;
        self.a_s = Some(a_s);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `A + BK`.
    pub fn closed_loop(&self) -> DMatrix<f64> {
        &self.a + &self.b * &self.k
    }
}

/// Everything derived from a [`LinearEtSystem`]: `P`, `A_s`, and the lifted matrices `F`, `F_s`, `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovData {
    pub system: LinearEtSystem,
    pub p: DMatrix<f64>,
    pub a_s: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub f_s: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl LyapunovData {
    pub fn new(system: &LinearEtSystem) -> Result<Self, LinearEtError> {
        let n = system.dim();
        let acl = system.closed_loop();
        let p = solve_lyapunov(&acl, &system.q)?;
        let a_s = match &system.a_s {
            Some(a_s) => {
                let residual = lyapunov_residual(a_s, &p, &system.r);
                if residual > 1e-9 {
                    return Err(LinearEtError::InvalidParameter(format!(
                        "A_s does not solve A_s^T P + P A_s = -R (residual {residual:e})"
                    )));
                }
                a_s.clone()
            }
            None => {
                let p_inv = p.clone().cholesky().ok_or(LinearEtError::NotSpd("P"))?.inverse();
                -(p_inv * &system.r) * 0.5
            }
        };
        check_hurwitz("A_s", &a_s)?;

        let bk = &system.b * &system.k;
        let mut f = DMatrix::zeros(2 * n, 2 * n);
        f.view_mut((0, 0), (n, n)).copy_from(&acl);
        f.view_mut((0, n), (n, n)).copy_from(&bk);
        f.view_mut((n, 0), (n, n)).copy_from(&(-&acl));
        f.view_mut((n, n), (n, n)).copy_from(&(-&bk));
        let mut f_s = DMatrix::zeros(2 * n, 2 * n);
        f_s.view_mut((0, 0), (n, n)).copy_from(&a_s);
        let mut c = DMatrix::zeros(n, 2 * n);
        c.view_mut((0, 0), (n, n)).fill_with_identity();

        Ok(Self { system: system.clone(), p, a_s, f, f_s, c })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// `100 / ||F||`.
    pub fn default_t_max(&self) -> f64 {
        100.0 / crate::graph::spectral_norm(&self.f)
    }

    /// Plant state after `t` time units of sample-and-hold from `x_ell`.
    pub fn held_state(&self, t: f64, x_ell: &DVector<f64>) -> Result<DVector<f64>, LinearEtError> {
        Ok(self.held_block(t)? * x_ell)
    }

    /// Comparison-system state `e^{A_s t} x_ell`.
    pub fn performance_state(&self, t: f64, x_ell: &DVector<f64>) -> Result<DVector<f64>, LinearEtError> {
        Ok(matrix_exponential(&self.a_s, t)? * x_ell)
    }

    /// `C e^{F t} [I; 0]`.
    fn held_block(&self, t: f64) -> Result<DMatrix<f64>, LinearEtError> {
        let n = self.dim();
        Ok(matrix_exponential(&self.f, t)?.view((0, 0), (n, n)).into_owned())
    }

    /// `M(t)`, the `x`-block of the trigger quadratic form.
    pub fn gap_matrix(&self, t: f64) -> Result<DMatrix<f64>, LinearEtError> {
        let g = self.held_block(t)?;
        let h = matrix_exponential(&self.a_s, t)?;
        Ok(quadratic_gap(&self.p, &g, &h))
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<(), LinearEtError> {
        if x.len() != self.dim() {
            return Err(LinearEtError::Dimension { what: "x", expected: (self.dim(), 1), found: (x.len(), 1) });
        }
        Ok(())
    }
}

fn quadratic_gap(p: &DMatrix<f64>, g: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let m = g.transpose() * p * g - h.transpose() * p * h;
    (&m + m.transpose()) * 0.5
}

/// `f(t, y_l) = V(t) - S(t)` at elapsed time `t` since an update at state `x_ell`.
pub fn trigger_gap(lyap: &LyapunovData, t: f64, x_ell: &DVector<f64>) -> Result<f64, LinearEtError> {
    lyap.check_state(x_ell)?;
    let y = DVector::from_iterator(2 * lyap.dim(), x_ell.iter().copied().chain(std::iter::repeat(0.0).take(lyap.dim())));
    let v = &lyap.c * matrix_exponential(&lyap.f, t)? * &y;
    let s = &lyap.c * matrix_exponential(&lyap.f_s, t)? * &y;
    Ok(v.dot(&(&lyap.p * &v)) - s.dot(&(&lyap.p * &s)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextEvent {
    /// Elapsed time of the next update.
    At(f64),
    /// No crossing in `(0, t_max]`.
    NoneBefore(f64),
}

/// `M(t)` tabulated on a uniform grid over `(0, t_max]`, reusable across initial states.
#[derive(Debug, Clone)]
pub struct EventScanner<'a> {
    lyap: &'a LyapunovData,
    t_max: f64,
    step: f64,
    table: Vec<DMatrix<f64>>,
}

impl<'a> EventScanner<'a> {
    pub fn new(lyap: &'a LyapunovData, t_max: f64, grid_points: usize) -> Result<Self, LinearEtError> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(LinearEtError::InvalidParameter(format!("t_max = {t_max} must be positive")));
        }
        if grid_points == 0 {
            return Err(LinearEtError::InvalidParameter("grid must have at least one point".into()));
        }
        let n = lyap.dim();
        let step = t_max / grid_points as f64;
        // Propagate the needed blocks of e^{F t} and e^{A_s t} by repeated multiplication.
        let e_f = matrix_exponential(&lyap.f, step)?;
        let e_s = matrix_exponential(&lyap.a_s, step)?;
        let mut y = DMatrix::zeros(2 * n, n);
        y.view_mut((0, 0), (n, n)).fill_with_identity();
        let mut z = DMatrix::identity(n, n);
        let mut table = Vec::with_capacity(grid_points);
        for _ in 0..grid_points {
            y = &e_f * &y;
            z = &e_s * &z;
            table.push(quadratic_gap(&lyap.p, &y.view((0, 0), (n, n)).into_owned(), &z));
        }
        if table.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(LinearEtError::Overflow);
        }
        Ok(Self { lyap, t_max, step, table })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    fn grid_time(&self, k: usize) -> f64 {
        if k + 1 == self.table.len() {
            self.t_max
        } else {
            (k + 1) as f64 * self.step
        }
    }

    /// Bisects `pred` (false at `lo`, true at `hi`) down to [`ROOT_TOL`].
    fn bisect(
        &self,
        mut lo: f64,
        mut hi: f64,
        pred: impl Fn(f64) -> Result<bool, LinearEtError>,
    ) -> Result<f64, LinearEtError> {
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            if pred(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// First elapsed time at which `f` turns positive for the update state `x_ell`.
    pub fn next_event(&self, x_ell: &DVector<f64>) -> Result<NextEvent, LinearEtError> {
        self.lyap.check_state(x_ell)?;
        let Some(k) = self.table.iter().position(|m| x_ell.dot(&(m * x_ell)) > 0.0) else {
            return Ok(NextEvent::NoneBefore(self.t_max));
        };
        let lo = if k == 0 { 0.0 } else { self.grid_time(k - 1) };
        let t = self.bisect(lo, self.grid_time(k), |t| Ok(trigger_gap(self.lyap, t, x_ell)? > 0.0))?;
        Ok(NextEvent::At(t))
    }

    /// First positive root of `det M(t)`.
    pub fn min_inter_event_time(&self) -> Result<f64, LinearEtError> {
        let dets: Vec<f64> = self.table.iter().map(|m| m.determinant()).collect();
        let reference = dets[0].signum();
        if reference == 0.0 {
            return Ok(self.grid_time(0));
        }
        let Some(k) = dets.iter().position(|d| d.signum() != reference) else {
            return Err(LinearEtError::NoRootFound { t_max: self.t_max });
        };
        if dets[k] == 0.0 {
            return Ok(self.grid_time(k));
        }
        self.bisect(self.grid_time(k - 1), self.grid_time(k), |t| {
            Ok(self.lyap.gap_matrix(t)?.determinant().signum() != reference)
        })
    }
}

/// Next update time after an update at `x_ell`, scanning `(0, t_max]` on the default grid.
pub fn next_event_time(lyap: &LyapunovData, x_ell: &DVector<f64>, t_max: f64) -> Result<NextEvent, LinearEtError> {
    EventScanner::new(lyap, t_max, DEFAULT_GRID_POINTS)?.next_event(x_ell)
}

/// Uniform lower bound `t_min` on inter-event times.
pub fn min_inter_event_time(lyap: &LyapunovData, t_max: f64) -> Result<f64, LinearEtError> {
    EventScanner::new(lyap, t_max, DEFAULT_GRID_POINTS)?.min_inter_event_time()
}

/// Sampled closed-loop run under the event-triggered update rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleHoldTrace {
    /// Update times, starting with 0.
    pub event_times: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// `V(t) = x^T P x`.
    pub v: Vec<f64>,
    /// `S(t) = x_s^T P x_s`.
    pub s: Vec<f64>,
}

impl SampleHoldTrace {
    /// Gaps between consecutive update times.
    pub fn gaps(&self) -> Vec<f64> {
        self.event_times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `max_t V(t) - S(t)` over the samples.
    pub fn max_excess(&self) -> f64 {
        self.v.iter().zip(&self.s).map(|(v, s)| v - s).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs the sample-and-hold loop from `x0` until `horizon`, recording
/// `samples_per_interval` points between consecutive updates. If no update is
/// due within the scanner's window the input is refreshed at its end.
pub fn simulate_sample_and_hold(
    scanner: &EventScanner<'_>,
    x0: &DVector<f64>,
    horizon: f64,
    samples_per_interval: usize,
) -> Result<SampleHoldTrace, LinearEtError> {
    let lyap = scanner.lyap;
    lyap.check_state(x0)?;
    if !(horizon > 0.0 && horizon.is_finite()) || samples_per_interval == 0 {
        return Err(LinearEtError::InvalidParameter("horizon and samples_per_interval must be positive".into()));
    }
    let mut out = SampleHoldTrace { event_times: vec![0.0], times: vec![], states: vec![], v: vec![], s: vec![] };
    let mut t = 0.0;
    let mut x_ell = x0.clone();
    loop {
        let gap = match scanner.next_event(&x_ell)? {
            NextEvent::At(s) => s,
            NextEvent::NoneBefore(t_max) => t_max,
        };
        let end = (t + gap).min(horizon);
        let span = end - t;
        for k in 0..samples_per_interval {
            let tau = span * k as f64 / samples_per_interval as f64;
            let x = lyap.held_state(tau, &x_ell)?;
            let xs = lyap.performance_state(tau, &x_ell)?;
            out.times.push(t + tau);
            out.v.push(x.dot(&(&lyap.p * &x)));
            out.s.push(xs.dot(&(&lyap.p * &xs)));
            out.states.push(x);
        }
        x_ell = lyap.held_state(span, &x_ell)?;
        t = end;
        if t >= horizon {
            let v = x_ell.dot(&(&lyap.p * &x_ell));
            let xs = lyap.performance_state(span, &out.states[out.states.len() - samples_per_interval])?;
            out.times.push(t);
            out.v.push(v);
            out.s.push(xs.dot(&(&lyap.p * &xs)));
            out.states.push(x_ell);
            return Ok(out);
        }
        out.event_times.push(t);
    }
}
