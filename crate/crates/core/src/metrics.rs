//! Congestion indicators and cost totals of solved patterns.

use crate::pattern::{integrate_pattern, ArrivalPattern, TimeProfile};
use crate::quadrature::trapezoid;
use crate::toll::TollSchedule;

/// Pointwise delay difference against a baseline, by arrival time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EcdProfile {
    pub t: Vec<f64>,
    /// Delay minus baseline delay, h.
    pub delta: Vec<f64>,
}

impl EcdProfile {
    pub fn max(&self) -> f64 {
        self.delta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Time of the largest difference.
    pub fn argmax(&self) -> Option<f64> {
        let i = (0..self.delta.len()).max_by(|&i, &j| self.delta[i].total_cmp(&self.delta[j]))?;
        Some(self.t[i])
    }
}

/// Cost totals over all commuters, $.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub travel_time: f64,
    pub energy: f64,
    pub schedule_delay: f64,
    /// Collected tolls. A transfer, so not part of `social`.
    pub toll_revenue: f64,
    /// `travel_time + energy + schedule_delay`.
    pub social: f64,
}

impl CostBreakdown {
    fn new(travel_time: f64, energy: f64, schedule_delay: f64, toll_revenue: f64) -> Self {
        CostBreakdown {
            travel_time,
            energy,
            schedule_delay,
            toll_revenue,
            social: travel_time + energy + schedule_delay,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub max_delay: f64,
    pub window: Option<(f64, f64)>,
    pub duration: f64,
    pub ecp: f64,
    pub ecd: EcdProfile,
    pub peak_flow: f64,
    pub costs: CostBreakdown,
}

/// Time during which the delay exceeds `baseline_max_delay`, h.
///
/// Crossings between grid nodes are located by linear interpolation.
pub fn extra_congested_period(profile: &TimeProfile, baseline_max_delay: f64) -> f64 {
    let mut total = 0.0;
    for i in 1..profile.len() {
        let (t0, t1) = (profile.t[i - 1], profile.t[i]);
        let a = profile.delay[i - 1] - baseline_max_delay;
        let b = profile.delay[i] - baseline_max_delay;
        total += match (a > 0.0, b > 0.0) {
            (true, true) => t1 - t0,
            (false, false) => 0.0,
            (true, false) => (t1 - t0) * a / (a - b),
            (false, true) => (t1 - t0) * b / (b - a),
        };
    }
    total
}

/// `T_profile(t) - T_baseline(t)` on the union of both grids, with zero
/// delay outside each grid.
pub fn extra_congestion_delay(profile: &TimeProfile, baseline: &TimeProfile) -> EcdProfile {
    let mut t: Vec<f64> = profile.t.iter().chain(&baseline.t).copied().collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let delta = t
        .iter()
        .map(|&ti| profile.delay_at(ti) - baseline.delay_at(ti))
        .collect();
    EcdProfile { t, delta }
}

/// Trapezoid totals over the sampled profile. When `toll` is given, revenue
/// uses its charge at each grid time instead of the profile's toll column.
pub fn total_cost_breakdown(profile: &TimeProfile, toll: Option<&TollSchedule>) -> CostBreakdown {
    if profile.is_empty() {
        return CostBreakdown::default();
    }
    let weighted = |g: &dyn Fn(usize) -> f64| {
        let y: Vec<f64> = (0..profile.len()).map(|i| profile.flow_total[i] * g(i)).collect();
        trapezoid(&profile.t, &y)
    };
    CostBreakdown::new(
        weighted(&|i| profile.costs[i].travel_time),
        weighted(&|i| profile.costs[i].energy),
        weighted(&|i| profile.costs[i].schedule_delay),
        weighted(&|i| match toll {
            Some(s) => s.charged_at(profile.t[i]),
            None => profile.costs[i].toll,
        }),
    )
}

/// Totals integrated on the continuous pattern, piece by piece.
pub fn pattern_cost_breakdown<P: ArrivalPattern + ?Sized>(pattern: &P) -> CostBreakdown {
    CostBreakdown::new(
        integrate_pattern(pattern, |s| s.flow_total() * s.costs.travel_time),
        integrate_pattern(pattern, |s| s.flow_total() * s.costs.energy),
        integrate_pattern(pattern, |s| s.flow_total() * s.costs.schedule_delay),
        integrate_pattern(pattern, |s| s.flow_total() * s.costs.toll),
    )
}

fn assemble(profile: &TimeProfile, baseline: &TimeProfile, costs: CostBreakdown) -> MetricsReport {
    MetricsReport {
        max_delay: profile.max_delay(),
        window: profile.window,
        duration: profile.window.map_or(0.0, |(a, b)| b - a),
        ecp: extra_congested_period(profile, baseline.max_delay()),
        ecd: extra_congestion_delay(profile, baseline),
        peak_flow: profile.peak_flow(),
        costs,
    }
}

/// Report from sampled profiles alone.
pub fn summarize(profile: &TimeProfile, baseline: &TimeProfile, toll: Option<&TollSchedule>) -> MetricsReport {
    assemble(profile, baseline, total_cost_breakdown(profile, toll))
}

/// Report with cost totals integrated on the pattern itself.
pub fn summarize_pattern<P: ArrivalPattern + ?Sized>(
    pattern: &P,
    profile: &TimeProfile,
    baseline: &TimeProfile,
) -> MetricsReport {
    assemble(profile, baseline, pattern_cost_breakdown(pattern))
}
