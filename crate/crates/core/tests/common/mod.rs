//! Independent reference computations for the solver tests.
//!
//! Along an isocost curve `dt = Phi'(T) dT / beta` on the early side and
//! `-Phi'(T) dT / gamma` on the late side, so the flow integral over a band
//! of delays `[T_lo, T_hi]` is
//!
//! `K * int_{T_lo}^{T_hi} T^p Phi'(T) dT`,  `K = R m^-p (1/beta + 1/gamma)`, `p = 1/nu`,
//!
//! which is elementary for quadratic `Phi`. None of this goes through the
//! crate's quadrature or root finders.

#![allow(dead_code)]

use ceq::{Scenario, VehicleClass};

/// Plain bisection on an increasing function.
pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub a: f64,
    pub b: f64,
}

impl Quad {
    pub fn eval(&self, t: f64) -> f64 {
        self.a * t + self.b * t * t
    }

    pub fn inv(&self, c: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        bisect(0.0, 1e3, |t| self.eval(t) - c)
    }

    /// `int_0^T s^p Phi'(s) ds`.
    pub fn moment(&self, p: f64, t: f64) -> f64 {
        self.a * t.powf(p + 1.0) / (p + 1.0) + 2.0 * self.b * t.powf(p + 2.0) / (p + 2.0)
    }
}

pub fn phi(sc: &Scenario, class: VehicleClass) -> Quad {
    let m = sc.energy_model(class).unwrap();
    Quad {
        a: sc.alpha + m.c1,
        b: m.c2,
    }
}

pub fn psi(sc: &Scenario, class: VehicleClass) -> Quad {
    let q = phi(sc, class);
    Quad {
        a: (1.0 + sc.nu) * q.a,
        b: (1.0 + 2.0 * sc.nu) * q.b,
    }
}

pub fn k_factor(sc: &Scenario) -> f64 {
    sc.capacity_r * sc.trip_km.powf(-1.0 / sc.nu) * (1.0 / sc.beta + 1.0 / sc.gamma)
}

/// Commuters carried by the isocost pattern of `level` under `map`.
pub fn level_mass(sc: &Scenario, map: Quad, level: f64) -> f64 {
    k_factor(sc) * map.moment(1.0 / sc.nu, map.inv(level))
}

pub fn level_for(sc: &Scenario, map: Quad, population: f64) -> f64 {
    bisect(0.0, 1e3, |c| level_mass(sc, map, c) - population)
}

pub fn ue_cost(sc: &Scenario, class: VehicleClass) -> f64 {
    level_for(sc, phi(sc, class), sc.n_total)
}

pub fn so_multiplier(sc: &Scenario, class: VehicleClass) -> f64 {
    level_for(sc, psi(sc, class), sc.n_total)
}

/// Mixed equilibrium in delay space: returns `(C_GV, C_EV, T_boundary, T_peak)`.
///
/// GV mass only depends on the boundary delay, so the two conservation
/// equations decouple into two scalar solves.
pub fn mixed_costs(sc: &Scenario) -> (f64, f64, f64, f64) {
    let p = 1.0 / sc.nu;
    let k = k_factor(sc);
    let (g, e) = (phi(sc, VehicleClass::Gv), phi(sc, VehicleClass::Ev));
    let (n_gv, n_ev) = sc.populations();
    let t_b = bisect(0.0, 100.0, |t| k * g.moment(p, t) - n_gv);
    let t_peak = bisect(t_b, 100.0, |t| k * (e.moment(p, t) - e.moment(p, t_b)) - n_ev);
    let c_ev = e.eval(t_peak);
    let c_gv = c_ev + g.eval(t_b) - e.eval(t_b);
    (c_gv, c_ev, t_b, t_peak)
}

/// Delay at `t` on the isocost curve of `level`.
pub fn isocost_delay(sc: &Scenario, map: Quad, level: f64, t: f64) -> f64 {
    let sd = if t <= sc.t_star {
        sc.beta * (sc.t_star - t)
    } else {
        sc.gamma * (t - sc.t_star)
    };
    map.inv(level - sd)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Projection onto `{x >= 0, sum x = total}` by bisection on the shift.
fn project(y: &[f64], total: f64) -> Vec<f64> {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min) - total;
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let theta = bisect(lo, hi, |th| total - y.iter().map(|v| (v - th).max(0.0)).sum::<f64>());
    let mut x: Vec<f64> = y.iter().map(|v| (v - theta).max(0.0)).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v *= total / s);
    x
}

/// Minimum of the binned total cost `sum_i x_i [Phi(T(x_i / h)) + SD(t_i)]`
/// over masses summing to `N`, by projected gradient. Returns the cost.
pub fn so_by_minimization(sc: &Scenario, class: VehicleClass, h: f64, iters: usize) -> f64 {
    let q = phi(sc, class);
    let s = psi(sc, class);
    let half = 3.0;
    let n = (2.0 * half / h).round() as usize + 1;
    let t: Vec<f64> = (0..n).map(|i| sc.t_star - half + i as f64 * h).collect();
    let sd: Vec<f64> = t
        .iter()
        .map(|&ti| (sc.beta * (sc.t_star - ti)).max(sc.gamma * (ti - sc.t_star)))
        .collect();
    let delay = |x: f64| sc.trip_km * (x / h / sc.capacity_r).powf(sc.nu);
    let mut x: Vec<f64> = t
        .iter()
        .map(|&ti| if (ti - sc.t_star).abs() <= 1.0 { 1.0 } else { 0.0 })
        .collect();
    let s0: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v *= sc.n_total / s0);
    let cost = |x: &[f64]| -> f64 {
        x.iter().zip(&sd).map(|(&xi, &si)| xi * (q.eval(delay(xi)) + si)).sum()
    };
    for _ in 0..iters {
        let mut lip: f64 = 0.0;
        let grad: Vec<f64> = x
            .iter()
            .zip(&sd)
            .map(|(&xi, &si)| {
                let d = delay(xi);
                if xi > 0.0 {
                    lip = lip.max((s.a + 2.0 * s.b * d) * sc.nu * d / xi);
                }
                s.eval(d) + si
            })
            .collect();
        let y: Vec<f64> = x.iter().zip(&grad).map(|(&xi, &g)| xi - g / lip).collect();
        x = project(&y, sc.n_total);
    }
    cost(&x)
}
