//! System optimum of a single-class corridor and the toll that supports it.
//!
//! Total cost is `int f [Phi(T(f)) + SD(t)] dt`. Since `dT/df = nu T / f`,
//! one more commuter at `t` adds `Phi(T) + nu T Phi'(T) + SD(t)` to it, and
//! at the optimum that marginal cost equals a common multiplier `lambda`
//! wherever anyone travels. The optimum is therefore an isocost pattern of
//! the steeper map `Psi(T) = Phi(T) + nu T Phi'(T)`, solved exactly like the
//! equilibrium. Charging each commuter the external part `nu T Phi'(T)`
//! makes the private cost equal `lambda` everywhere, so the optimum becomes
//! an equilibrium of the tolled road.

use crate::equilibrium::{isocost_delay, isocost_mass, solve_isocost_level};
use crate::error::Result;
use crate::model::{CostComponents, EnergyModel, Scenario, VehicleClass};
use crate::pattern::{self, ArrivalPattern, PatternState, TimeProfile};

#[derive(Clone, Debug)]
pub struct SystemOptimum {
    scenario: Scenario,
    pub model: EnergyModel,
    /// Marginal social cost of one more commuter, $.
    pub lambda: f64,
    /// `[t0, t1]`; `(t*, t*)` when nobody travels.
    pub window: (f64, f64),
    /// Flow integral, vehicles.
    pub count: f64,
    /// `int f (Phi + SD) dt`, $.
    pub total_cost: f64,
    pub profile: TimeProfile,
}

impl SystemOptimum {
    pub fn is_empty(&self) -> bool {
        self.count == 0.0 && self.lambda == 0.0
    }

    pub fn duration(&self) -> f64 {
        self.window.1 - self.window.0
    }

    pub fn delay_at(&self, t: f64) -> f64 {
        if self.is_empty() || t < self.window.0 || t > self.window.1 {
            return 0.0;
        }
        let map = self.scenario.marginal_social_map(&self.model);
        isocost_delay(&self.scenario, &map, self.lambda, t)
    }

    pub fn max_delay(&self) -> f64 {
        self.delay_at(self.scenario.t_star)
    }
}

impl ArrivalPattern for SystemOptimum {
    fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn window(&self) -> Option<(f64, f64)> {
        (!self.is_empty()).then_some(self.window)
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        vec![self.window.0, self.scenario.t_star, self.window.1]
    }

    fn state_at(&self, t: f64) -> PatternState {
        let sc = &self.scenario;
        let delay = self.delay_at(t);
        let flow = sc.flow_from_delay_unchecked(delay);
        let (flow_gv, flow_ev) = match self.model.class {
            VehicleClass::Gv => (flow, 0.0),
            VehicleClass::Ev => (0.0, flow),
        };
        PatternState {
            delay,
            flow_gv,
            flow_ev,
            costs: sc.cost_components(&self.model, t, delay, 0.0),
        }
    }
}

/// The cost-minimising arrival pattern when everyone drives `model`'s vehicles.
pub fn solve_system_optimum(scenario: &Scenario, model: &EnergyModel) -> Result<SystemOptimum> {
    scenario.validate()?;
    let mut sc = scenario.clone();
    match model.class {
        VehicleClass::Gv => {
            sc.mpr = 0.0;
            sc.gv_energy = Some(*model);
        }
        VehicleClass::Ev => {
            sc.mpr = 1.0;
            sc.ev_energy = Some(*model);
        }
    }
    let mut so = SystemOptimum {
        window: (sc.t_star, sc.t_star),
        scenario: sc,
        model: *model,
        lambda: 0.0,
        count: 0.0,
        total_cost: 0.0,
        profile: TimeProfile::default(),
    };
    let sc = &so.scenario;
    if sc.n_total > 0.0 {
        let map = sc.marginal_social_map(model);
        let lambda = solve_isocost_level("system optimum multiplier", sc, &map, sc.n_total)?;
        so.lambda = lambda;
        so.window = (sc.t_star - lambda / sc.beta, sc.t_star + lambda / sc.gamma);
        so.count = isocost_mass(sc, &map, lambda);
        so.total_cost = pattern::integrate_pattern(&so, |s| s.flow_total() * s.costs.total);
    }
    so.profile = pattern::sample_profiles(&so, so.scenario.numerics.dt_hours());
    Ok(so)
}

/// Time-varying toll sampled on the optimum's profile grid.
#[derive(Clone, Debug)]
pub struct TollSchedule {
    pub so: SystemOptimum,
    pub t: Vec<f64>,
    /// Toll at each grid time, $.
    pub toll: Vec<f64>,
    /// Optimum delay at each grid time, h.
    pub delay: Vec<f64>,
    /// Constant subtracted from every reported toll. A non-zero value turns
    /// part of the schedule into an incentive without changing who travels when.
    pub rebase: f64,
}

impl TollSchedule {
    pub fn is_empty(&self) -> bool {
        self.so.is_empty()
    }

    /// `nu T Phi'(T)` at the optimum delay of `t`; zero outside the window.
    pub fn toll_at(&self, t: f64) -> f64 {
        marginal_external_cost(&self.so.scenario, &self.so.model, self.so.delay_at(t))
    }

    /// The toll as charged, after the rebase offset.
    pub fn charged_at(&self, t: f64) -> f64 {
        self.toll_at(t) - self.rebase
    }

    pub fn with_rebase(mut self, rebase: f64) -> Self {
        self.rebase = rebase;
        self
    }

    pub fn max_toll(&self) -> f64 {
        self.toll.iter().copied().fold(0.0, f64::max)
    }

    /// `int f toll dt` over the window, $.
    pub fn revenue(&self) -> f64 {
        pattern::integrate_pattern(self, |s| s.flow_total() * s.costs.toll)
    }
}

impl ArrivalPattern for TollSchedule {
    fn scenario(&self) -> &Scenario {
        &self.so.scenario
    }

    fn window(&self) -> Option<(f64, f64)> {
        self.so.window()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.so.breakpoints()
    }

    fn state_at(&self, t: f64) -> PatternState {
        let mut s = self.so.state_at(t);
        let c = s.costs;
        s.costs = CostComponents::new(c.travel_time, c.energy, c.schedule_delay, self.charged_at(t));
        s
    }
}

fn marginal_external_cost(sc: &Scenario, model: &EnergyModel, delay: f64) -> f64 {
    sc.nu * delay * sc.congestion_map(model).derivative(delay)
}

/// Prices the optimum at its marginal external cost.
pub fn compute_toll(so: &SystemOptimum, model: &EnergyModel, scenario: &Scenario) -> TollSchedule {
    let t = so.profile.t.clone();
    let delay: Vec<f64> = t.iter().map(|&ti| so.delay_at(ti)).collect();
    let toll = delay
        .iter()
        .map(|&d| marginal_external_cost(scenario, model, d))
        .collect();
    TollSchedule {
        so: so.clone(),
        t,
        toll,
        delay,
        rebase: 0.0,
    }
}

/// Largest departure of the tolled private cost `Phi + toll + SD` from
/// `lambda` over the grid points inside the window, $.
pub fn verify_tolled_equilibrium(toll: &TollSchedule, scenario: &Scenario, model: &EnergyModel) -> f64 {
    if toll.is_empty() {
        return 0.0;
    }
    let map = scenario.congestion_map(model);
    let (t0, t1) = toll.so.window;
    toll.t
        .iter()
        .zip(&toll.toll)
        .zip(&toll.delay)
        .filter(|((&t, _), _)| t >= t0 && t <= t1)
        .map(|((&t, &tau), &d)| (map.eval(d) + tau + scenario.schedule_delay(t) - toll.so.lambda).abs())
        .fold(0.0, f64::max)
}
