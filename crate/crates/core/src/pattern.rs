//! Continuous arrival patterns and their sampled time profiles.

use crate::exec::Execution;
use crate::model::{CostComponents, Scenario, VehicleClass};
use crate::quadrature;

/// The traffic state experienced by commuters arriving at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PatternState {
    pub delay: f64,
    pub flow_gv: f64,
    pub flow_ev: f64,
    /// Cost of the class arriving at this instant (or of the nearest class
    /// outside the rush window).
    pub costs: CostComponents,
}

impl PatternState {
    pub fn flow_total(&self) -> f64 {
        self.flow_gv + self.flow_ev
    }

    pub fn flow(&self, class: VehicleClass) -> f64 {
        match class {
            VehicleClass::Gv => self.flow_gv,
            VehicleClass::Ev => self.flow_ev,
        }
    }
}

/// A departure pattern that can be evaluated at any arrival time.
pub trait ArrivalPattern {
    fn scenario(&self) -> &Scenario;

    /// Rush window `[t0, t1]`, or `None` when nobody travels.
    fn window(&self) -> Option<(f64, f64)>;

    /// Sorted times at which the state is not smooth, window edges included.
    fn breakpoints(&self) -> Vec<f64>;

    fn state_at(&self, t: f64) -> PatternState;
}

/// Integrates `f(state)` over the rush window, piece by piece between breakpoints.
pub fn integrate_pattern<P, F>(pattern: &P, f: F) -> f64
where
    P: ArrivalPattern + ?Sized,
    F: Fn(&PatternState) -> f64,
{
    let tol = pattern.scenario().numerics.quad_rel_tol;
    pattern
        .breakpoints()
        .windows(2)
        .map(|w| quadrature::integrate(|t| f(&pattern.state_at(t)), w[0], w[1], tol))
        .sum()
}

/// Pattern sampled on a uniform grid of arrival times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeProfile {
    /// Grid step, hours.
    pub dt: f64,
    pub window: Option<(f64, f64)>,
    pub t: Vec<f64>,
    pub delay: Vec<f64>,
    pub flow_total: Vec<f64>,
    pub flow_gv: Vec<f64>,
    pub flow_ev: Vec<f64>,
    pub costs: Vec<CostComponents>,
}

impl TimeProfile {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn max_delay(&self) -> f64 {
        self.delay.iter().copied().fold(0.0, f64::max)
    }

    pub fn peak_flow(&self) -> f64 {
        self.flow_total.iter().copied().fold(0.0, f64::max)
    }

    /// Grid time at which the delay peaks (first one on ties).
    pub fn peak_time(&self) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for (&t, &d) in self.t.iter().zip(&self.delay) {
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((t, d));
            }
        }
        best.map(|(t, _)| t)
    }

    /// Trapezoid integral of the total flow over the grid.
    pub fn flow_integral(&self) -> f64 {
        quadrature::trapezoid(&self.t, &self.flow_total)
    }

    pub fn class_flow_integral(&self, class: VehicleClass) -> f64 {
        match class {
            VehicleClass::Gv => quadrature::trapezoid(&self.t, &self.flow_gv),
            VehicleClass::Ev => quadrature::trapezoid(&self.t, &self.flow_ev),
        }
    }

    /// Delay at `t` by linear interpolation, zero outside the grid.
    pub fn delay_at(&self, t: f64) -> f64 {
        let n = self.t.len();
        if n == 0 || t < self.t[0] || t > self.t[n - 1] {
            return 0.0;
        }
        let i = self.t.partition_point(|&x| x <= t);
        if i == 0 {
            return self.delay[0];
        }
        if i == n {
            return self.delay[n - 1];
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (t - t0) / (t1 - t0);
        self.delay[i - 1] + w * (self.delay[i] - self.delay[i - 1])
    }
}

/// Uniform grid `t* + k dt` covering `[t0 - 2dt, t1 + 2dt]`, so `t*` is always a node.
pub fn profile_grid(t_star: f64, window: Option<(f64, f64)>, dt: f64) -> Vec<f64> {
    let (t0, t1) = window.unwrap_or((t_star, t_star));
    let k_lo = ((t0 - t_star) / dt).floor() as i64 - 2;
    let k_hi = ((t1 - t_star) / dt).ceil() as i64 + 2;
    (k_lo..=k_hi).map(|k| t_star + k as f64 * dt).collect()
}

pub fn sample_profiles<P: ArrivalPattern + Sync + ?Sized>(pattern: &P, dt: f64) -> TimeProfile {
    sample_profiles_with(pattern, dt, Execution::Sequential)
}

pub fn sample_profiles_with<P: ArrivalPattern + Sync + ?Sized>(
    pattern: &P,
    dt: f64,
    exec: Execution,
) -> TimeProfile {
    assert!(dt > 0.0, "profile step must be positive, got {dt}");
    let window = pattern.window();
    let t = profile_grid(pattern.scenario().t_star, window, dt);
    let states = exec.map(&t, |&ti| pattern.state_at(ti));
    TimeProfile {
        dt,
        window,
        delay: states.iter().map(|s| s.delay).collect(),
        flow_total: states.iter().map(|s| s.flow_total()).collect(),
        flow_gv: states.iter().map(|s| s.flow_gv).collect(),
        flow_ev: states.iter().map(|s| s.flow_ev).collect(),
        costs: states.iter().map(|s| s.costs).collect(),
        t,
    }
}
