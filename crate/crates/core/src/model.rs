//! Cost, energy, schedule-delay and flow-congestion formulas.
//!
//! Units throughout: clock time and delays in hours, money in dollars, flows
//! in vehicles per hour, distances in kilometres. The flow-speed relation
//! `1/s = 1/s_max + (f/R)^nu` is read with `(f/R)^nu` in h/km, so the
//! congestion delay of a trip of length `m` is `T = m (f/R)^nu` hours.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleClass {
    /// Gasoline vehicle.
    Gv,
    /// Electric vehicle.
    Ev,
}

impl VehicleClass {
    pub fn other(self) -> Self {
        match self {
            VehicleClass::Gv => VehicleClass::Ev,
            VehicleClass::Ev => VehicleClass::Gv,
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VehicleClass::Gv => f.write_str("GV"),
            VehicleClass::Ev => f.write_str("EV"),
        }
    }
}

/// Congestion-dependent energy cost `E(T) = c1 T + c2 T^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyModel {
    pub class: VehicleClass,
    /// Linear coefficient, $/h.
    pub c1: f64,
    /// Quadratic coefficient, $/h^2.
    pub c2: f64,
}

impl EnergyModel {
    pub fn new(class: VehicleClass, c1: f64, c2: f64) -> Self {
        EnergyModel { class, c1, c2 }
    }

    pub fn energy_cost(&self, delay: f64) -> Result<f64> {
        check_non_negative("energy_cost", "delay", delay)?;
        Ok(self.c1 * delay + self.c2 * delay * delay)
    }
}

/// An increasing quadratic `linear * T + quadratic * T^2` on `T >= 0`.
///
/// Both the congestion cost `alpha T + E(T)` and the marginal social cost
/// `Phi(T) + nu T Phi'(T)` have this form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostMap {
    pub linear: f64,
    pub quadratic: f64,
}

impl CostMap {
    pub fn eval(&self, delay: f64) -> f64 {
        self.linear * delay + self.quadratic * delay * delay
    }

    pub fn derivative(&self, delay: f64) -> f64 {
        self.linear + 2.0 * self.quadratic * delay
    }

    /// The unique `T >= 0` with `eval(T) = cost`.
    pub fn inverse(&self, cost: f64) -> Result<f64> {
        check_non_negative("invert_congestion_cost", "cost", cost)?;
        Ok(self.inverse_unchecked(cost))
    }

    pub(crate) fn inverse_unchecked(&self, cost: f64) -> f64 {
        if self.quadratic == 0.0 {
            return cost / self.linear;
        }
        // 2c / (A + sqrt(A^2 + 4Bc)) is the usual root without the cancellation at small c.
        let disc = self.linear * self.linear + 4.0 * self.quadratic * cost;
        2.0 * cost / (self.linear + disc.sqrt())
    }
}

/// One commuter's cost broken into its parts, in dollars.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostComponents {
    pub travel_time: f64,
    pub energy: f64,
    pub schedule_delay: f64,
    pub toll: f64,
    pub total: f64,
}

impl CostComponents {
    pub fn new(travel_time: f64, energy: f64, schedule_delay: f64, toll: f64) -> Self {
        CostComponents {
            travel_time,
            energy,
            schedule_delay,
            toll,
            total: travel_time + energy + schedule_delay + toll,
        }
    }
}

/// Solver and grid settings carried with every scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    /// Profile sampling step, minutes.
    pub dt_minutes: f64,
    /// Relative tolerance on equilibrium costs and multipliers.
    pub root_rel_tol: f64,
    /// Relative agreement between successive quadrature refinements.
    pub quad_rel_tol: f64,
    /// Per-class conservation residual of the mixed solver, as a fraction of N.
    pub mixed_residual_rel: f64,
    pub max_bracket_steps: usize,
    pub max_newton_iters: usize,
    /// Day-to-day oracle bin width, minutes.
    pub oracle_bin_minutes: f64,
    pub eta: f64,
    pub gap_tol: f64,
    pub max_days: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            dt_minutes: 1.0,
            root_rel_tol: 1e-10,
            quad_rel_tol: 1e-8,
            mixed_residual_rel: 1e-8,
            max_bracket_steps: 200,
            max_newton_iters: 60,
            oracle_bin_minutes: 1.0,
            eta: 0.05,
            gap_tol: 1e-3,
            max_days: 200_000,
        }
    }
}

impl Numerics {
    pub fn dt_hours(&self) -> f64 {
        self.dt_minutes / 60.0
    }

    pub fn oracle_bin_hours(&self) -> f64 {
        self.oracle_bin_minutes / 60.0
    }
}

/// A corridor, its commuters, and their vehicle fleet.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Value of travel time, $/h.
    pub alpha: f64,
    /// Early-arrival penalty, $/h.
    pub beta: f64,
    /// Late-arrival penalty, $/h.
    pub gamma: f64,
    /// Preferred arrival time, clock hours.
    pub t_star: f64,
    /// Elasticity exponent of the flow-speed relation.
    pub nu: f64,
    /// Commuters in the rush hour, vehicles.
    pub n_total: f64,
    /// Capacity parameter R, veh/h.
    pub capacity_r: f64,
    /// Trip length m, km.
    pub trip_km: f64,
    /// Free-flow speed, km/h. Only used for reporting speeds.
    pub s_max: f64,
    /// Share of electric vehicles in the fleet.
    pub mpr: f64,
    pub gv_energy: Option<EnergyModel>,
    pub ev_energy: Option<EnergyModel>,
    pub numerics: Numerics,
}

impl Scenario {
    /// The basic corridor: 3000 commuters on a 20 km trip with quadratic
    /// energy costs, all gasoline.
    pub fn basic() -> Self {
        Scenario {
            alpha: 8.4,
            beta: 4.2,
            gamma: 16.8,
            t_star: 8.0,
            nu: 4.1,
            n_total: 3000.0,
            capacity_r: 8000.0,
            trip_km: 20.0,
            s_max: 60.0,
            mpr: 0.0,
            gv_energy: Some(EnergyModel::new(VehicleClass::Gv, 4.0, 16.8)),
            ev_energy: Some(EnergyModel::new(VehicleClass::Ev, 0.5, 3.0)),
            numerics: Numerics::default(),
        }
    }

    pub fn with_mpr(&self, mpr: f64) -> Self {
        Scenario {
            mpr,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be > 0, got {v}")))
            }
        }
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("gamma", self.gamma)?;
        positive("nu", self.nu)?;
        positive("capacity_r", self.capacity_r)?;
        positive("trip_km", self.trip_km)?;
        positive("s_max", self.s_max)?;
        if !self.t_star.is_finite() {
            return Err(Error::validation("t_star", "must be finite"));
        }
        if !(self.n_total.is_finite() && self.n_total >= 0.0) {
            return Err(Error::validation(
                "n_total",
                format!("must be >= 0, got {}", self.n_total),
            ));
        }
        if !(0.0..=1.0).contains(&self.mpr) {
            return Err(Error::validation(
                "mpr",
                format!("must lie in [0,1], got {}", self.mpr),
            ));
        }
        if self.mpr < 1.0 && self.gv_energy.is_none() {
            return Err(Error::validation(
                "energy.gv",
                "is required when mpr < 1",
            ));
        }
        if self.mpr > 0.0 && self.ev_energy.is_none() {
            return Err(Error::validation(
                "energy.ev",
                "is required when mpr > 0",
            ));
        }
        for (name, model) in [("energy.gv", self.gv_energy), ("energy.ev", self.ev_energy)] {
            if let Some(m) = model {
                if !(m.c1.is_finite() && m.c1 >= 0.0) {
                    return Err(Error::validation(
                        format!("{name}.c1"),
                        format!("must be >= 0, got {}", m.c1),
                    ));
                }
                if !(m.c2.is_finite() && m.c2 >= 0.0) {
                    return Err(Error::validation(
                        format!("{name}.c2"),
                        format!("must be >= 0, got {}", m.c2),
                    ));
                }
            }
        }
        let n = &self.numerics;
        positive("numerics.dt_minutes", n.dt_minutes)?;
        positive("numerics.root_rel_tol", n.root_rel_tol)?;
        positive("numerics.quad_rel_tol", n.quad_rel_tol)?;
        positive("numerics.mixed_residual_rel", n.mixed_residual_rel)?;
        positive("numerics.oracle_bin_minutes", n.oracle_bin_minutes)?;
        positive("numerics.gap_tol", n.gap_tol)?;
        if !(n.eta > 0.0 && n.eta <= 1.0) {
            return Err(Error::validation(
                "numerics.eta",
                format!("must lie in (0,1], got {}", n.eta),
            ));
        }
        Ok(())
    }

    /// Soft violations of the usual modelling assumptions.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.beta >= self.alpha {
            out.push(format!(
                "beta ({}) >= alpha ({}): early arrival is not cheaper than travel time",
                self.beta, self.alpha
            ));
        }
        if let (Some(gv), Some(ev)) = (self.gv_energy, self.ev_energy) {
            if ev.c1 > gv.c1 || ev.c2 > gv.c2 {
                out.push(format!(
                    "EV energy coefficients ({}, {}) exceed GV coefficients ({}, {})",
                    ev.c1, ev.c2, gv.c1, gv.c2
                ));
            }
        }
        out
    }

    pub fn energy_model(&self, class: VehicleClass) -> Result<EnergyModel> {
        let model = match class {
            VehicleClass::Gv => self.gv_energy,
            VehicleClass::Ev => self.ev_energy,
        };
        model.ok_or_else(|| {
            Error::validation(
                match class {
                    VehicleClass::Gv => "energy.gv",
                    VehicleClass::Ev => "energy.ev",
                },
                "is missing",
            )
        })
    }

    /// `max{beta (t* - t), gamma (t - t*)}`.
    pub fn schedule_delay(&self, t: f64) -> f64 {
        if t <= self.t_star {
            self.beta * (self.t_star - t)
        } else {
            self.gamma * (t - self.t_star)
        }
    }

    /// `Phi(T) = alpha T + E(T)` as a cost map.
    pub fn congestion_map(&self, model: &EnergyModel) -> CostMap {
        CostMap {
            linear: self.alpha + model.c1,
            quadratic: model.c2,
        }
    }

    /// `Phi(T) + nu T Phi'(T)`: the cost one extra commuter adds to the
    /// system when the delay is `T`.
    pub fn marginal_social_map(&self, model: &EnergyModel) -> CostMap {
        let phi = self.congestion_map(model);
        CostMap {
            linear: (1.0 + self.nu) * phi.linear,
            quadratic: (1.0 + 2.0 * self.nu) * phi.quadratic,
        }
    }

    pub fn congestion_cost(&self, model: &EnergyModel, delay: f64) -> Result<f64> {
        check_non_negative("congestion_cost", "delay", delay)?;
        Ok(self.congestion_map(model).eval(delay))
    }

    pub fn invert_congestion_cost(&self, model: &EnergyModel, cost: f64) -> Result<f64> {
        self.congestion_map(model).inverse(cost)
    }

    pub fn delay_from_flow(&self, flow: f64) -> Result<f64> {
        check_non_negative("delay_from_flow", "flow", flow)?;
        Ok(self.delay_from_flow_unchecked(flow))
    }

    pub fn flow_from_delay(&self, delay: f64) -> Result<f64> {
        check_non_negative("flow_from_delay", "delay", delay)?;
        Ok(self.flow_from_delay_unchecked(delay))
    }

    pub(crate) fn delay_from_flow_unchecked(&self, flow: f64) -> f64 {
        self.trip_km * (flow / self.capacity_r).powf(self.nu)
    }

    pub(crate) fn flow_from_delay_unchecked(&self, delay: f64) -> f64 {
        self.capacity_r * (delay / self.trip_km).powf(1.0 / self.nu)
    }

    /// Average trip speed, km/h, given the congestion delay.
    pub fn average_speed(&self, delay: f64) -> f64 {
        self.trip_km / (self.trip_km / self.s_max + delay)
    }

    /// Cost components of a commuter of `model`'s class arriving at `t` with delay `delay`.
    pub fn cost_components(
        &self,
        model: &EnergyModel,
        t: f64,
        delay: f64,
        toll: f64,
    ) -> CostComponents {
        CostComponents::new(
            self.alpha * delay,
            model.c1 * delay + model.c2 * delay * delay,
            self.schedule_delay(t),
            toll,
        )
    }

    /// Commuters of each class, `((1 - mpr) N, mpr N)`.
    pub fn populations(&self) -> (f64, f64) {
        ((1.0 - self.mpr) * self.n_total, self.mpr * self.n_total)
    }
}

fn check_non_negative(op: &'static str, what: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { op, what, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gv() -> EnergyModel {
        Scenario::basic().gv_energy.unwrap()
    }

    fn ev() -> EnergyModel {
        Scenario::basic().ev_energy.unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn schedule_delay_examples() {
        let s = Scenario::basic();
        assert_eq!(s.schedule_delay(8.0), 0.0);
        assert!(close(s.schedule_delay(7.0), 4.2, 1e-15));
        assert!(close(s.schedule_delay(8.5), 8.4, 1e-15));
    }

    #[test]
    fn schedule_delay_slopes() {
        let s = Scenario::basic();
        let h = 1e-3;
        let left = (s.schedule_delay(7.5) - s.schedule_delay(7.5 - h)) / h;
        let right = (s.schedule_delay(8.5 + h) - s.schedule_delay(8.5)) / h;
        assert!(close(left, -s.beta, 1e-9));
        assert!(close(right, s.gamma, 1e-9));
    }

    #[test]
    fn energy_cost_examples() {
        assert_eq!(gv().energy_cost(0.0).unwrap(), 0.0);
        assert!(close(gv().energy_cost(1.0).unwrap(), 20.8, 1e-15));
        assert!(close(ev().energy_cost(1.0).unwrap(), 3.5, 1e-15));
        assert!(matches!(
            gv().energy_cost(-0.1),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn congestion_cost_examples() {
        let s = Scenario::basic();
        assert_eq!(s.congestion_cost(&gv(), 0.0).unwrap(), 0.0);
        assert!(close(s.congestion_cost(&gv(), 1.0).unwrap(), 29.2, 1e-14));
        assert!(close(s.congestion_cost(&ev(), 0.5).unwrap(), 5.2, 1e-14));
        assert!(s.congestion_cost(&ev(), -1.0).is_err());
    }

    #[test]
    fn invert_congestion_cost_examples() {
        let s = Scenario::basic();
        assert_eq!(s.invert_congestion_cost(&gv(), 0.0).unwrap(), 0.0);
        assert!(close(s.invert_congestion_cost(&gv(), 29.2).unwrap(), 1.0, 1e-14));
        for t in [0.01, 0.1, 0.5, 2.0] {
            for m in [gv(), ev()] {
                let c = s.congestion_cost(&m, t).unwrap();
                assert!(close(s.invert_congestion_cost(&m, c).unwrap(), t, 1e-14));
            }
        }
        assert!(s.invert_congestion_cost(&gv(), -1e-9).is_err());
    }

    #[test]
    fn linear_energy_model_inverts() {
        let s = Scenario::basic();
        let m = EnergyModel::new(VehicleClass::Ev, 1.6, 0.0);
        assert!(close(s.invert_congestion_cost(&m, 5.0).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn flow_delay_examples() {
        let s = Scenario::basic();
        assert_eq!(s.delay_from_flow(0.0).unwrap(), 0.0);
        assert!(close(s.delay_from_flow(8000.0).unwrap(), 20.0, 1e-15));
        let t = s.delay_from_flow(3000.0).unwrap();
        assert!(close(t, 20.0 * (4.1 * 0.375f64.ln()).exp(), 1e-14));
        assert!((t - 0.3585).abs() < 1e-4, "{t}");
        assert_eq!(s.flow_from_delay(0.0).unwrap(), 0.0);
        assert!(close(s.flow_from_delay(20.0).unwrap(), 8000.0, 1e-15));
        for f in [100.0, 1000.0, 5000.0] {
            let back = s.flow_from_delay(s.delay_from_flow(f).unwrap()).unwrap();
            assert!(close(back, f, 1e-13));
        }
        assert!(s.delay_from_flow(-1.0).is_err());
        assert!(s.flow_from_delay(-1.0).is_err());
    }

    #[test]
    fn average_speed_examples() {
        let s = Scenario::basic();
        assert_eq!(s.average_speed(0.0), 60.0);
        assert!(close(s.average_speed(20.0 / 60.0), 30.0, 1e-14));
        assert!(close(s.average_speed(1.0 / 3.0), 30.0, 1e-14));
    }

    #[test]
    fn marginal_social_map_matches_definition() {
        let s = Scenario::basic();
        let m = ev();
        let phi = s.congestion_map(&m);
        let psi = s.marginal_social_map(&m);
        for t in [0.0, 0.05, 0.3, 1.7] {
            let direct = phi.eval(t) + s.nu * t * phi.derivative(t);
            assert!((psi.eval(t) - direct).abs() <= 1e-13 * direct.max(1.0));
        }
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut s = Scenario::basic();
        s.mpr = 1.5;
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("mpr") && err.contains("[0,1]"), "{err}");

        let mut s = Scenario::basic().with_mpr(0.3);
        s.ev_energy = None;
        assert!(s.validate().unwrap_err().to_string().contains("energy.ev"));

        let mut s = Scenario::basic();
        s.capacity_r = 0.0;
        assert!(s.validate().is_err());
        assert!(Scenario::basic().validate().is_ok());
    }

    #[test]
    fn warnings_flag_soft_violations() {
        assert!(Scenario::basic().warnings().is_empty());
        let mut s = Scenario::basic();
        s.beta = 9.0;
        assert_eq!(s.warnings().len(), 1);
        s.ev_energy = Some(EnergyModel::new(VehicleClass::Ev, 5.0, 3.0));
        assert_eq!(s.warnings().len(), 2);
    }

    #[test]
    fn cost_components_sum() {
        let s = Scenario::basic();
        let c = s.cost_components(&gv(), 7.5, 0.2, 1.25);
        assert_eq!(c.total, c.travel_time + c.energy + c.schedule_delay + c.toll);
    }
}
