//! User-equilibrium arrival patterns.
//!
//! At equilibrium every commuter of a class pays the same total cost `C`,
//! so on the active window the delay follows the isocost curve
//! `T(t) = Phi^-1(C - SD(t))` and the flow follows from the flow-speed
//! relation. `C` is pinned by requiring the flow to integrate to the number
//! of commuters.
//!
//! With two classes the fleet segregates in time. Gasoline vehicles, whose
//! congestion cost is steeper, take both shoulders of the rush hour and
//! electric vehicles take the congested centre around `t*`:
//!
//! ```text
//!   t0 ---- GV ---- a ---- EV ---- b ---- GV ---- t1
//! ```
//!
//! The delay is continuous at `a` and `b`, which ties the two class costs
//! together; `(C_GV, C_EV)` then solves the two conservation equations.

use crate::error::{Error, Result};
use crate::model::{CostMap, EnergyModel, Scenario, VehicleClass};
use crate::pattern::{self, ArrivalPattern, PatternState, TimeProfile};
use crate::quadrature;
use crate::roots::{self, Tolerance};

/// A time interval occupied by one class at one equilibrium cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassSegment {
    pub class: VehicleClass,
    pub t_lo: f64,
    pub t_hi: f64,
    /// The cost every commuter of this class pays, $.
    pub cost: f64,
}

impl ClassSegment {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_lo && t <= self.t_hi
    }
}

#[derive(Clone, Debug)]
pub struct EquilibriumSolution {
    scenario: Scenario,
    /// Rush window `[t0, t1]`; `(t*, t*)` when nobody travels.
    pub window: (f64, f64),
    /// Segments in time order. Empty for an empty solution.
    pub segments: Vec<ClassSegment>,
    pub cost_gv: Option<f64>,
    pub cost_ev: Option<f64>,
    /// Flow integrals per class, vehicles.
    pub count_gv: f64,
    pub count_ev: f64,
    /// Profile sampled at the scenario's grid step.
    pub profile: TimeProfile,
}

impl EquilibriumSolution {
    fn empty(scenario: &Scenario, classes: &[VehicleClass]) -> Self {
        let has = |c| classes.contains(&c).then_some(0.0);
        let mut sol = EquilibriumSolution {
            scenario: scenario.clone(),
            window: (scenario.t_star, scenario.t_star),
            segments: Vec::new(),
            cost_gv: has(VehicleClass::Gv),
            cost_ev: has(VehicleClass::Ev),
            count_gv: 0.0,
            count_ev: 0.0,
            profile: empty_profile(),
        };
        sol.profile = pattern::sample_profiles(&sol, scenario.numerics.dt_hours());
        sol
    }

    fn finish(mut self) -> Self {
        self.profile = pattern::sample_profiles(&self, self.scenario.numerics.dt_hours());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn cost(&self, class: VehicleClass) -> Option<f64> {
        match class {
            VehicleClass::Gv => self.cost_gv,
            VehicleClass::Ev => self.cost_ev,
        }
    }

    pub fn count(&self, class: VehicleClass) -> f64 {
        match class {
            VehicleClass::Gv => self.count_gv,
            VehicleClass::Ev => self.count_ev,
        }
    }

    pub fn duration(&self) -> f64 {
        self.window.1 - self.window.0
    }

    pub fn segment_at(&self, t: f64) -> Option<&ClassSegment> {
        self.segments.iter().find(|s| s.contains(t))
    }

    pub fn delay_at(&self, t: f64) -> f64 {
        match self.segment_at(t) {
            Some(seg) => self.segment_delay(seg, t),
            None => 0.0,
        }
    }

    /// Peak delay, reached at `t*`.
    pub fn max_delay(&self) -> f64 {
        self.delay_at(self.scenario.t_star)
    }

    fn segment_delay(&self, seg: &ClassSegment, t: f64) -> f64 {
        let model = self
            .scenario
            .energy_model(seg.class)
            .expect("segment class has an energy model");
        isocost_delay(&self.scenario, &self.scenario.congestion_map(&model), seg.cost, t)
    }
}

impl ArrivalPattern for EquilibriumSolution {
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
        let mut pts: Vec<f64> = self.segments.iter().map(|s| s.t_lo).collect();
        pts.push(self.window.1);
        pts.push(self.scenario.t_star);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn state_at(&self, t: f64) -> PatternState {
        let sc = &self.scenario;
        let (seg, inside) = match self.segment_at(t) {
            Some(s) => (Some(s), true),
            None => (nearest_segment(&self.segments, t), false),
        };
        let Some(seg) = seg else {
            return PatternState {
                costs: crate::model::CostComponents::new(0.0, 0.0, sc.schedule_delay(t), 0.0),
                ..PatternState::default()
            };
        };
        let model = sc.energy_model(seg.class).expect("segment class has an energy model");
        let delay = if inside { self.segment_delay(seg, t) } else { 0.0 };
        let flow = sc.flow_from_delay_unchecked(delay);
        let (flow_gv, flow_ev) = match seg.class {
            VehicleClass::Gv => (flow, 0.0),
            VehicleClass::Ev => (0.0, flow),
        };
        PatternState {
            delay,
            flow_gv,
            flow_ev,
            costs: sc.cost_components(&model, t, delay, 0.0),
        }
    }
}

fn nearest_segment(segments: &[ClassSegment], t: f64) -> Option<&ClassSegment> {
    segments.iter().min_by(|a, b| {
        let da = (a.t_lo - t).abs().min((a.t_hi - t).abs());
        let db = (b.t_lo - t).abs().min((b.t_hi - t).abs());
        da.total_cmp(&db)
    })
}

fn empty_profile() -> TimeProfile {
    TimeProfile {
        dt: 0.0,
        window: None,
        t: Vec::new(),
        delay: Vec::new(),
        flow_total: Vec::new(),
        flow_gv: Vec::new(),
        flow_ev: Vec::new(),
        costs: Vec::new(),
    }
}

/// Delay on the isocost curve of level `level` under `map`; zero where the
/// schedule delay alone already exceeds the level.
pub(crate) fn isocost_delay(scenario: &Scenario, map: &CostMap, level: f64, t: f64) -> f64 {
    let residual = level - scenario.schedule_delay(t);
    if residual <= 0.0 {
        0.0
    } else {
        map.inverse_unchecked(residual)
    }
}

/// Commuters carried by the isocost pattern of `level`.
pub(crate) fn isocost_mass(scenario: &Scenario, map: &CostMap, level: f64) -> f64 {
    if level <= 0.0 {
        return 0.0;
    }
    let tol = scenario.numerics.quad_rel_tol;
    let t0 = scenario.t_star - level / scenario.beta;
    let t1 = scenario.t_star + level / scenario.gamma;
    let f = |t: f64| scenario.flow_from_delay_unchecked(isocost_delay(scenario, map, level, t));
    quadrature::integrate(f, t0, scenario.t_star, tol)
        + quadrature::integrate(f, scenario.t_star, t1, tol)
}

/// The level at which the isocost pattern of `map` carries `population` commuters.
pub(crate) fn solve_isocost_level(
    what: &'static str,
    scenario: &Scenario,
    map: &CostMap,
    population: f64,
) -> Result<f64> {
    let num = &scenario.numerics;
    // The cost of a delay caused by the whole population arriving within one hour.
    let start = map
        .eval(scenario.delay_from_flow_unchecked(population))
        .max(1e-6);
    let g = |c: f64| isocost_mass(scenario, map, c) - population;
    let (lo, g_lo, hi, g_hi) = roots::bracket_upward(what, g, 0.0, start, 2.0, num.max_bracket_steps)?;
    roots::solve_bracketed(what, g, lo, g_lo, hi, g_hi, Tolerance::relative(num.root_rel_tol))
}

/// Equilibrium with every commuter driving a vehicle described by `model`.
pub fn solve_single_class(scenario: &Scenario, model: &EnergyModel) -> Result<EquilibriumSolution> {
    scenario.validate()?;
    let mut sc = scenario.clone();
    // Keep the scenario consistent with the fleet actually solved.
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
    if sc.n_total == 0.0 {
        return Ok(EquilibriumSolution::empty(&sc, &[model.class]));
    }
    let map = sc.congestion_map(model);
    let cost = solve_isocost_level("single-class equilibrium cost", &sc, &map, sc.n_total)?;
    let window = (sc.t_star - cost / sc.beta, sc.t_star + cost / sc.gamma);
    let count = isocost_mass(&sc, &map, cost);
    let (cost_gv, cost_ev, count_gv, count_ev) = match model.class {
        VehicleClass::Gv => (Some(cost), None, count, 0.0),
        VehicleClass::Ev => (None, Some(cost), 0.0, count),
    };
    Ok(EquilibriumSolution {
        scenario: sc,
        window,
        segments: vec![ClassSegment {
            class: model.class,
            t_lo: window.0,
            t_hi: window.1,
            cost,
        }],
        cost_gv,
        cost_ev,
        count_gv,
        count_ev,
        profile: empty_profile(),
    }
    .finish())
}

/// Boundaries and per-class flow integrals of the GV-EV-GV pattern for one cost pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedEvaluation {
    pub window: (f64, f64),
    /// EV segment `[a, b]`.
    pub ev_segment: (f64, f64),
    pub mass_gv: f64,
    pub mass_ev: f64,
}

struct MixedMaps {
    gv: CostMap,
    ev: CostMap,
}

impl MixedMaps {
    fn new(scenario: &Scenario) -> Result<Self> {
        let gv = scenario.energy_model(VehicleClass::Gv)?;
        let ev = scenario.energy_model(VehicleClass::Ev)?;
        if !(gv.c1 >= ev.c1 && gv.c2 >= ev.c2 && (gv.c1 > ev.c1 || gv.c2 > ev.c2)) {
            return Err(Error::Deviation(format!(
                "the GV-EV-GV segment pattern needs EV energy coefficients below GV ones, \
                 got GV ({}, {}) and EV ({}, {})",
                gv.c1, gv.c2, ev.c1, ev.c2
            )));
        }
        Ok(MixedMaps {
            gv: scenario.congestion_map(&gv),
            ev: scenario.congestion_map(&ev),
        })
    }
}

/// Evaluates the segmented pattern for `(cost_gv, cost_ev)`.
///
/// Returns `None` when the pair admits no EV segment around `t*`.
pub fn evaluate_mixed(scenario: &Scenario, cost_gv: f64, cost_ev: f64) -> Result<Option<MixedEvaluation>> {
    let maps = MixedMaps::new(scenario)?;
    Ok(evaluate_with(scenario, &maps, cost_gv, cost_ev))
}

fn evaluate_with(sc: &Scenario, maps: &MixedMaps, cost_gv: f64, cost_ev: f64) -> Option<MixedEvaluation> {
    if !(cost_ev > 0.0 && cost_gv > cost_ev) || !cost_gv.is_finite() {
        return None;
    }
    let ts = sc.t_star;
    let gap = |t: f64| {
        isocost_delay(sc, &maps.gv, cost_gv, t) - isocost_delay(sc, &maps.ev, cost_ev, t)
    };
    let at_peak = gap(ts);
    if at_peak >= 0.0 {
        return None;
    }
    let e0 = ts - cost_ev / sc.beta;
    let e1 = ts + cost_ev / sc.gamma;
    let tol = Tolerance {
        rel: 0.0,
        abs: 1e-13 * ts.abs().max(1.0),
        max_iter: 300,
    };
    let a = roots::solve_bracketed("early segment boundary", gap, e0, gap(e0), ts, at_peak, tol).ok()?;
    let b = roots::solve_bracketed("late segment boundary", gap, ts, at_peak, e1, gap(e1), tol).ok()?;
    if a >= b {
        return None;
    }
    let t0 = ts - cost_gv / sc.beta;
    let t1 = ts + cost_gv / sc.gamma;
    let q = sc.numerics.quad_rel_tol;
    let f_gv = |t: f64| sc.flow_from_delay_unchecked(isocost_delay(sc, &maps.gv, cost_gv, t));
    let f_ev = |t: f64| sc.flow_from_delay_unchecked(isocost_delay(sc, &maps.ev, cost_ev, t));
    let mass_gv = quadrature::integrate(f_gv, t0, a, q) + quadrature::integrate(f_gv, b, t1, q);
    let mass_ev = quadrature::integrate(f_ev, a, ts, q) + quadrature::integrate(f_ev, ts, b, q);
    Some(MixedEvaluation {
        window: (t0, t1),
        ev_segment: (a, b),
        mass_gv,
        mass_ev,
    })
}

/// Equilibrium for the scenario's fleet mix.
pub fn solve_mixed(scenario: &Scenario) -> Result<EquilibriumSolution> {
    scenario.validate()?;
    if scenario.mpr == 0.0 {
        return solve_single_class(scenario, &scenario.energy_model(VehicleClass::Gv)?);
    }
    if scenario.mpr == 1.0 {
        return solve_single_class(scenario, &scenario.energy_model(VehicleClass::Ev)?);
    }
    if scenario.n_total == 0.0 {
        return Ok(EquilibriumSolution::empty(
            scenario,
            &[VehicleClass::Gv, VehicleClass::Ev],
        ));
    }
    let sc = scenario;
    let maps = MixedMaps::new(sc)?;
    let (n_gv, n_ev) = sc.populations();
    let residual_tol = sc.numerics.mixed_residual_rel * sc.n_total;

    let residual = |x: [f64; 2]| -> Option<([f64; 2], MixedEvaluation)> {
        let ev = evaluate_with(sc, &maps, x[0], x[1])?;
        Some(([ev.mass_gv - n_gv, ev.mass_ev - n_ev], ev))
    };

    let mut x = initial_costs(sc, &maps)?;
    let (mut r, mut eval) = residual(x).ok_or_else(|| {
        Error::Deviation(format!("no valid starting cost pair near {x:?}"))
    })?;
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());

    let mut converged = norm(r) <= residual_tol;
    let mut iterations = 0;
    while !converged && iterations < sc.numerics.max_newton_iters {
        iterations += 1;
        // Forward-difference Jacobian; step backwards if forward leaves the valid region.
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = 1e-6 * x[j];
            let mut xp = x;
            xp[j] += h;
            let (rp, step) = match residual(xp) {
                Some((rp, _)) => (rp, h),
                None => {
                    xp[j] = x[j] - h;
                    let (rm, _) = residual(xp).ok_or_else(|| {
                        Error::Deviation(format!("cost pair {x:?} is on the edge of the valid region"))
                    })?;
                    (rm, -h)
                }
            };
            jac[0][j] = (rp[0] - r[0]) / step;
            jac[1][j] = (rp[1] - r[1]) / step;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        // Damping: halve until the iterate is valid and the residual shrinks.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = [x[0] + lambda * dx[0], x[1] + lambda * dx[1]];
            if let Some((rt, et)) = residual(trial) {
                if norm(rt) < norm(r) {
                    x = trial;
                    r = rt;
                    eval = et;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        converged = norm(r) <= residual_tol;
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "mixed equilibrium costs",
            iterations,
            residuals: r.to_vec(),
        });
    }

    let (a, b) = eval.ev_segment;
    let (t0, t1) = eval.window;
    let segments = vec![
        ClassSegment { class: VehicleClass::Gv, t_lo: t0, t_hi: a, cost: x[0] },
        ClassSegment { class: VehicleClass::Ev, t_lo: a, t_hi: b, cost: x[1] },
        ClassSegment { class: VehicleClass::Gv, t_lo: b, t_hi: t1, cost: x[0] },
    ];
    let sol = EquilibriumSolution {
        scenario: sc.clone(),
        window: (t0, t1),
        segments,
        cost_gv: Some(x[0]),
        cost_ev: Some(x[1]),
        count_gv: eval.mass_gv,
        count_ev: eval.mass_ev,
        profile: empty_profile(),
    };
    check_no_profitable_deviation(&sol, &maps)?;
    Ok(sol.finish())
}

/// Start from the all-GV cost, with the EV cost placed between the cheapest
/// value that still gives EVs the higher peak delay and the GV cost.
fn initial_costs(sc: &Scenario, maps: &MixedMaps) -> Result<[f64; 2]> {
    let c_gv = solve_isocost_level("mixed equilibrium start", sc, &maps.gv, sc.n_total)?;
    let gv_peak = maps.gv.inverse_unchecked(c_gv);
    let floor = maps.ev.eval(gv_peak);
    let mut share = sc.mpr;
    for _ in 0..60 {
        let c_ev = floor + share * (c_gv - floor);
        if evaluate_with(sc, maps, c_gv, c_ev).is_some() {
            return Ok([c_gv, c_ev]);
        }
        share = 0.5 * (share + if share < 0.5 { 1.0 } else { 0.0 });
    }
    Err(Error::Deviation(
        "could not find a cost pair with a non-empty EV segment".into(),
    ))
}

/// No GV can gain by arriving inside the EV segment, and no EV by arriving
/// in a GV segment.
fn check_no_profitable_deviation(sol: &EquilibriumSolution, maps: &MixedMaps) -> Result<()> {
    const SAMPLES: usize = 256;
    const SLACK: f64 = 1e-9;
    let sc = &sol.scenario;
    for seg in &sol.segments {
        let (other_map, other_cost, other) = match seg.class {
            VehicleClass::Gv => (&maps.ev, sol.cost_ev.unwrap_or(0.0), VehicleClass::Ev),
            VehicleClass::Ev => (&maps.gv, sol.cost_gv.unwrap_or(0.0), VehicleClass::Gv),
        };
        for k in 1..SAMPLES {
            let t = seg.t_lo + (seg.t_hi - seg.t_lo) * k as f64 / SAMPLES as f64;
            let delay = sol.segment_delay(seg, t);
            let cost = other_map.eval(delay) + sc.schedule_delay(t);
            if cost < other_cost * (1.0 - SLACK) {
                return Err(Error::Deviation(format!(
                    "{other} commuters could pay {cost:.9} < {other_cost:.9} by arriving at {t:.6} \
                     inside the {} segment",
                    seg.class
                )));
            }
        }
    }
    Ok(())
}
