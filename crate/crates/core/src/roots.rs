//! Bracketed scalar root finding: geometric bracket growth, then
//! regula falsi (Illinois weighting) safeguarded by bisection.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            rel,
            abs: 0.0,
            max_iter: 500,
        }
    }

    fn width_ok(&self, a: f64, b: f64) -> bool {
        (b - a).abs() <= self.rel * a.abs().max(b.abs()) + self.abs
    }
}

/// Grows `[lo, start * factor^k]` until the increasing map `g` changes sign.
///
/// Requires `g(lo) < 0`. Returns `(lo, g(lo), hi, g(hi))` with the tightest
/// lower end seen along the way.
pub fn bracket_upward<G: FnMut(f64) -> f64>(
    what: &'static str,
    mut g: G,
    lo: f64,
    start: f64,
    factor: f64,
    max_steps: usize,
) -> Result<(f64, f64, f64, f64)> {
    let mut attempts = Vec::new();
    let mut lo = lo;
    let mut g_lo = g(lo);
    attempts.push((lo, g_lo));
    if g_lo >= 0.0 {
        return Err(Error::Bracket { what, attempts });
    }
    let mut x = start;
    for _ in 0..max_steps {
        let gx = g(x);
        attempts.push((x, gx));
        if gx.is_nan() {
            break;
        }
        if gx >= 0.0 {
            return Ok((lo, g_lo, x, gx));
        }
        lo = x;
        g_lo = gx;
        x *= factor;
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::Bracket { what, attempts })
}

/// Finds a root of `g` inside `[a, b]` where `g(a)` and `g(b)` have opposite signs.
pub fn solve_bracketed<G: FnMut(f64) -> f64>(
    what: &'static str,
    mut g: G,
    a: f64,
    ga: f64,
    b: f64,
    gb: f64,
    tol: Tolerance,
) -> Result<f64> {
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() || ga.is_nan() || gb.is_nan() {
        return Err(Error::Bracket {
            what,
            attempts: vec![(a, ga), (b, gb)],
        });
    }
    let (mut a, mut ga, mut b, mut gb) = (a, ga, b, gb);
    // Which end was kept on the previous step: -1 = a, 1 = b.
    let mut kept = 0i8;
    let mut width_checkpoint = (b - a).abs();
    let mut force_bisect = false;
    for iter in 0..tol.max_iter {
        if tol.width_ok(a, b) {
            return Ok(if ga.abs() < gb.abs() { a } else { b });
        }
        let mid = 0.5 * (a + b);
        let x = if force_bisect {
            mid
        } else {
            let s = (a * gb - b * ga) / (gb - ga);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if s > lo && s < hi {
                s
            } else {
                mid
            }
        };
        let gx = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if gx.is_nan() {
            return Err(Error::NonConvergence {
                what,
                iterations: iter,
                residuals: vec![gx],
            });
        }
        if gx.signum() == ga.signum() {
            a = x;
            ga = gx;
            if kept == 1 {
                gb *= 0.5;
            }
            kept = 1;
        } else {
            b = x;
            gb = gx;
            if kept == -1 {
                ga *= 0.5;
            }
            kept = -1;
        }
        // Every other step the bracket must at least halve, else bisect once.
        if iter % 2 == 1 {
            let w = (b - a).abs();
            force_bisect = w > 0.5 * width_checkpoint;
            width_checkpoint = w;
        } else {
            force_bisect = false;
        }
    }
    if tol.width_ok(a, b) {
        Ok(if ga.abs() < gb.abs() { a } else { b })
    } else {
        Err(Error::NonConvergence {
            what,
            iterations: tol.max_iter,
            residuals: vec![ga, gb],
        })
    }
}
