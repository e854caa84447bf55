//! Equilibria across a range of electric-vehicle shares.

use crate::equilibrium::{solve_mixed, EquilibriumSolution};
use crate::error::Result;
use crate::exec::Execution;
use crate::metrics::{extra_congested_period, pattern_cost_breakdown};
use crate::model::Scenario;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub mpr: f64,
    pub cost_gv: Option<f64>,
    pub cost_ev: Option<f64>,
    pub max_delay: f64,
    pub duration: f64,
    /// Time above the all-GV peak delay, h.
    pub ecp: f64,
    pub peak_flow: f64,
    pub social_cost: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepReport {
    /// Sorted by `mpr`.
    pub rows: Vec<SweepRow>,
}

/// `0.0, 0.1, ..., 1.0`.
pub fn default_mprs() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

/// Solves one equilibrium per share, measuring ECP against the all-GV
/// pattern of the same scenario.
pub fn run_sweep(scenario: &Scenario, mprs: &[f64], exec: Execution) -> Result<SweepReport> {
    let mut mprs = mprs.to_vec();
    mprs.sort_by(f64::total_cmp);
    for &m in &mprs {
        scenario.with_mpr(m).validate()?;
    }
    let baseline = solve_mixed(&scenario.with_mpr(0.0))?;
    let baseline_max = baseline.profile.max_delay();
    let solved: Vec<Result<EquilibriumSolution>> = exec.map(&mprs, |&m| {
        if m == 0.0 {
            Ok(baseline.clone())
        } else {
            solve_mixed(&scenario.with_mpr(m))
        }
    });
    let mut rows = Vec::with_capacity(mprs.len());
    for (mpr, sol) in mprs.into_iter().zip(solved) {
        let sol = sol?;
        rows.push(SweepRow {
            mpr,
            cost_gv: sol.cost_gv,
            cost_ev: sol.cost_ev,
            max_delay: sol.profile.max_delay(),
            duration: sol.duration(),
            ecp: extra_congested_period(&sol.profile, baseline_max),
            peak_flow: sol.profile.peak_flow(),
            social_cost: pattern_cost_breakdown(&sol).social,
        });
    }
    Ok(SweepReport { rows })
}
