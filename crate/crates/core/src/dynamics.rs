//! Day-to-day adjustment over discrete arrival bins.
//!
//! Commuters are spread over bins of width `h`; the flow in a bin is its
//! total mass over `h` and every class pays `Phi(T) + SD(t)` at the bin
//! centre. Each day every class takes a projected-gradient step
//!
//! `x <- Proj(x - (eta / L) c)`
//!
//! onto the set of non-negative masses that sum to the class population,
//! where `L` bounds how fast a bin's cost grows with its own mass. Mass
//! drifts out of expensive bins into cheap ones in proportion to the cost
//! difference, and the fixed points are exactly the assignments where every
//! used bin costs the same and no unused bin is cheaper.
//!
//! The simulator only shares the cost formulas with the analytic solvers,
//! which makes it a useful brute-force check on them.

use crate::error::Result;
use crate::model::{CostMap, Scenario, VehicleClass};

const CLASSES: [VehicleClass; 2] = [VehicleClass::Gv, VehicleClass::Ev];

/// Commuter mass per bin and class.
#[derive(Clone, Debug, PartialEq)]
pub struct BinAssignment {
    /// Bin width, hours.
    pub width: f64,
    /// Bin centres, clock hours, ascending.
    pub centers: Vec<f64>,
    pub mass_gv: Vec<f64>,
    pub mass_ev: Vec<f64>,
    pub day: usize,
}

impl BinAssignment {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn mass(&self, class: VehicleClass) -> &[f64] {
        match class {
            VehicleClass::Gv => &self.mass_gv,
            VehicleClass::Ev => &self.mass_ev,
        }
    }

    fn mass_mut(&mut self, class: VehicleClass) -> &mut Vec<f64> {
        match class {
            VehicleClass::Gv => &mut self.mass_gv,
            VehicleClass::Ev => &mut self.mass_ev,
        }
    }

    pub fn total_mass(&self, class: VehicleClass) -> f64 {
        self.mass(class).iter().sum()
    }

    /// Flow in bin `i`, veh/h.
    pub fn flow(&self, i: usize) -> f64 {
        (self.mass_gv[i] + self.mass_ev[i]) / self.width
    }

    /// Delay in every bin.
    pub fn delays(&self, scenario: &Scenario) -> Vec<f64> {
        (0..self.len())
            .map(|i| scenario.delay_from_flow_unchecked(self.flow(i)))
            .collect()
    }
}

/// How far an assignment is from equal costs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GapReport {
    /// Most expensive used bin minus cheapest bin, per class, $.
    pub gap_gv: f64,
    pub gap_ev: f64,
    /// Largest class gap over that class's cheapest bin cost.
    pub relative: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxDays,
}

/// One day of the convergence trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSample {
    pub day: usize,
    pub gap: GapReport,
}

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub assignment: BinAssignment,
    pub report: GapReport,
    pub stop: StopReason,
    /// Gap before each day's update, and the final gap.
    pub trace: Vec<GapSample>,
}

fn class_map(scenario: &Scenario, class: VehicleClass) -> Option<CostMap> {
    scenario
        .energy_model(class)
        .ok()
        .map(|m| scenario.congestion_map(&m))
}

fn population(scenario: &Scenario, class: VehicleClass) -> f64 {
    let (gv, ev) = scenario.populations();
    match class {
        VehicleClass::Gv => gv,
        VehicleClass::Ev => ev,
    }
}

/// Uniform start around `t*`.
///
/// The spread covers twice the window an all-gasoline rush hour would need
/// if everyone arrived within one hour; the bins span twice the spread so
/// mass has room to move outwards.
pub fn init_assignment(scenario: &Scenario, bin_width: f64) -> Result<BinAssignment> {
    scenario.validate()?;
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(crate::Error::validation(
            "oracle_bin_minutes",
            format!("must be > 0, got {}", bin_width * 60.0),
        ));
    }
    let heaviest = class_map(scenario, VehicleClass::Gv)
        .or_else(|| class_map(scenario, VehicleClass::Ev))
        .expect("validated scenario has an energy model");
    let t_heur = scenario.delay_from_flow_unchecked(scenario.n_total);
    let spread = 2.0 * (1.0 / scenario.beta + 1.0 / scenario.gamma) * heaviest.eval(t_heur);
    let spread = spread.max(bin_width);

    let k_max = (spread / bin_width).ceil() as i64;
    let centers: Vec<f64> = (-k_max..=k_max)
        .map(|k| scenario.t_star + k as f64 * bin_width)
        .collect();
    let inside: Vec<bool> = centers
        .iter()
        .map(|&c| (c - scenario.t_star).abs() <= 0.5 * spread)
        .collect();
    let used = inside.iter().filter(|&&b| b).count() as f64;

    let mut a = BinAssignment {
        width: bin_width,
        mass_gv: vec![0.0; centers.len()],
        mass_ev: vec![0.0; centers.len()],
        centers,
        day: 0,
    };
    for class in CLASSES {
        let pop = population(scenario, class);
        if pop > 0.0 {
            let share = pop / used;
            for (m, &on) in a.mass_mut(class).iter_mut().zip(&inside) {
                if on {
                    *m = share;
                }
            }
            conserve(a.mass_mut(class), pop);
        }
    }
    Ok(a)
}

/// Per-class bin costs; `None` for classes without commuters.
fn bin_costs(a: &BinAssignment, sc: &Scenario, delays: &[f64]) -> [Option<Vec<f64>>; 2] {
    CLASSES.map(|class| {
        if population(sc, class) <= 0.0 {
            return None;
        }
        let map = class_map(sc, class)?;
        Some(
            a.centers
                .iter()
                .zip(delays)
                .map(|(&t, &d)| map.eval(d) + sc.schedule_delay(t))
                .collect(),
        )
    })
}

fn class_gap(mass: &[f64], cost: &[f64]) -> (f64, f64) {
    let min = cost.iter().copied().fold(f64::INFINITY, f64::min);
    let max_used = mass
        .iter()
        .zip(cost)
        .filter(|(&m, _)| m > 0.0)
        .map(|(_, &c)| c)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_used == f64::NEG_INFINITY {
        return (0.0, min);
    }
    ((max_used - min).max(0.0), min)
}

pub fn gap_measure(assignment: &BinAssignment, scenario: &Scenario) -> GapReport {
    if assignment.is_empty() {
        return GapReport::default();
    }
    let delays = assignment.delays(scenario);
    gap_from_costs(assignment, &bin_costs(assignment, scenario, &delays))
}

fn gap_from_costs(a: &BinAssignment, costs: &[Option<Vec<f64>>; 2]) -> GapReport {
    let mut report = GapReport::default();
    for (class, cost) in CLASSES.iter().zip(costs) {
        let Some(cost) = cost else { continue };
        let (gap, min) = class_gap(a.mass(*class), cost);
        match class {
            VehicleClass::Gv => report.gap_gv = gap,
            VehicleClass::Ev => report.gap_ev = gap,
        }
        if min > 0.0 {
            report.relative = report.relative.max(gap / min);
        }
    }
    report
}

/// Euclidean projection of `y` onto `{x >= 0, sum x = total}`.
fn project_simplex(y: &[f64], total: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = u[0] - total;
    for (k, &v) in u.iter().enumerate() {
        cum += v;
        let t = (cum - total) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Puts the rounding residual of the class total back into the largest bin.
fn conserve(mass: &mut [f64], total: f64) {
    let Some(big) = (0..mass.len()).max_by(|&i, &j| mass[i].total_cmp(&mass[j])) else {
        return;
    };
    for _ in 0..4 {
        let sum: f64 = mass.iter().sum();
        let r = total - sum;
        if r == 0.0 {
            break;
        }
        mass[big] = (mass[big] + r).max(0.0);
    }
}

/// Moves every class one projected-gradient step along the given costs.
fn apply_step(
    a: &mut BinAssignment,
    sc: &Scenario,
    eta: f64,
    delays: &[f64],
    costs: &[Option<Vec<f64>>; 2],
) {
    for (class, cost) in CLASSES.iter().zip(costs) {
        let Some(cost) = cost else { continue };
        let map = class_map(sc, *class).expect("class with commuters has a model");
        let mass = a.mass(*class);
        let (gap, min) = class_gap(mass, cost);
        // Equal costs on used bins and nothing cheaper elsewhere: a fixed point.
        if gap <= 4.0 * f64::EPSILON * min.abs() {
            continue;
        }
        // Steepest self-response dc_i/dx_i = Phi'(T) nu T / x over used bins.
        let mut lip: f64 = 0.0;
        for i in 0..a.len() {
            let x = a.mass_gv[i] + a.mass_ev[i];
            if mass[i] > 0.0 && x > 0.0 {
                lip = lip.max(map.derivative(delays[i]) * sc.nu * delays[i] / x);
            }
        }
        if lip <= 0.0 {
            lip = map.derivative(0.0);
        }
        let y: Vec<f64> = mass
            .iter()
            .zip(cost)
            .map(|(&m, &c)| m - eta / lip * c)
            .collect();
        let pop = population(sc, *class);
        let mut next = project_simplex(&y, pop);
        conserve(&mut next, pop);
        *a.mass_mut(*class) = next;
    }
    a.day += 1;
}

/// Advances the assignment by one day with step fraction `eta`.
pub fn day_step(assignment: &BinAssignment, scenario: &Scenario, eta: f64) -> BinAssignment {
    let mut next = assignment.clone();
    if !next.is_empty() {
        let delays = next.delays(scenario);
        let costs = bin_costs(&next, scenario, &delays);
        apply_step(&mut next, scenario, eta, &delays, &costs);
    }
    next
}

/// Iterates [`day_step`] from [`init_assignment`] until the relative gap
/// drops below `gap_tol` or `max_days` pass.
pub fn run_until_converged(
    scenario: &Scenario,
    bin_width: f64,
    eta: f64,
    gap_tol: f64,
    max_days: usize,
) -> Result<OracleRun> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(crate::Error::validation("eta", format!("must lie in (0,1], got {eta}")));
    }
    if gap_tol.is_nan() || gap_tol <= 0.0 {
        return Err(crate::Error::validation("gap_tol", format!("must be > 0, got {gap_tol}")));
    }
    let mut a = init_assignment(scenario, bin_width)?;
    let mut trace = Vec::new();
    loop {
        let delays = a.delays(scenario);
        let costs = bin_costs(&a, scenario, &delays);
        let report = gap_from_costs(&a, &costs);
        trace.push(GapSample { day: a.day, gap: report });
        let stop = if report.relative < gap_tol {
            Some(StopReason::Converged)
        } else if a.day >= max_days {
            Some(StopReason::MaxDays)
        } else {
            None
        };
        if let Some(stop) = stop {
            return Ok(OracleRun { assignment: a, report, stop, trace });
        }
        apply_step(&mut a, scenario, eta, &delays, &costs);
    }
}

/// Runs the oracle with the scenario's own numerics.
pub fn run_oracle(scenario: &Scenario) -> Result<OracleRun> {
    let n = &scenario.numerics;
    run_until_converged(scenario, n.oracle_bin_hours(), n.eta, n.gap_tol, n.max_days)
}

/// Agreement between converged bin delays and a reference delay profile.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DelayComparison {
    /// Bins carrying more than the mass floor.
    pub bins: usize,
    /// Largest `|T_bin - T_ref| / T_ref` over those bins.
    pub max_relative: f64,
    /// Largest `|T_bin - T_ref|` over the reference peak.
    pub max_relative_to_peak: f64,
    /// Bins whose relative deviation exceeds `limit`.
    pub over_limit: usize,
}

/// Compares the delay of every bin holding more than `mass_floor` commuters
/// with `reference(t)` at the bin centre.
pub fn compare_delays(
    assignment: &BinAssignment,
    scenario: &Scenario,
    reference: impl Fn(f64) -> f64,
    reference_peak: f64,
    mass_floor: f64,
    limit: f64,
) -> DelayComparison {
    let delays = assignment.delays(scenario);
    let mut out = DelayComparison::default();
    for (i, &delay) in delays.iter().enumerate() {
        if assignment.mass_gv[i] + assignment.mass_ev[i] <= mass_floor {
            continue;
        }
        let r = reference(assignment.centers[i]);
        let dev = (delay - r).abs();
        let rel = if r > 0.0 { dev / r } else { f64::INFINITY };
        out.bins += 1;
        out.max_relative = out.max_relative.max(rel);
        if reference_peak > 0.0 {
            out.max_relative_to_peak = out.max_relative_to_peak.max(dev / reference_peak);
        }
        if rel > limit {
            out.over_limit += 1;
        }
    }
    out
}

/// One character per bin: `G`, `E`, `B` (both) or `.` (empty).
pub fn class_layout(assignment: &BinAssignment) -> String {
    (0..assignment.len())
        .map(|i| match (assignment.mass_gv[i] > 0.0, assignment.mass_ev[i] > 0.0) {
            (true, false) => 'G',
            (false, true) => 'E',
            (true, true) => 'B',
            (false, false) => '.',
        })
        .collect()
}

/// True when the bins used by EVs are contiguous and bins used only by
/// GVs sit on both sides of that block and nowhere inside it.
pub fn ev_block_is_central(assignment: &BinAssignment) -> bool {
    let layout: Vec<char> = class_layout(assignment).chars().collect();
    let ev: Vec<usize> = (0..layout.len()).filter(|&i| matches!(layout[i], 'E' | 'B')).collect();
    let (Some(&lo), Some(&hi)) = (ev.first(), ev.last()) else {
        return false;
    };
    let contiguous = ev.len() == hi - lo + 1;
    let gv_left = layout[..lo].contains(&'G');
    let gv_right = layout[hi + 1..].contains(&'G');
    contiguous && gv_left && gv_right
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_minute() -> f64 {
        1.0 / 60.0
    }

    #[test]
    fn empty_population_converges_immediately() {
        let mut sc = Scenario::basic();
        sc.n_total = 0.0;
        let a = init_assignment(&sc, one_minute()).unwrap();
        assert!(a.mass_gv.iter().all(|&m| m == 0.0));
        let run = run_until_converged(&sc, one_minute(), 0.05, 1e-3, 10).unwrap();
        assert_eq!(run.stop, StopReason::Converged);
        assert_eq!(run.assignment.day, 0);
        assert_eq!(run.report.relative, 0.0);
    }

    #[test]
    fn init_conserves_each_class() {
        let sc = Scenario::basic().with_mpr(0.3);
        let a = init_assignment(&sc, one_minute()).unwrap();
        assert!((a.total_mass(VehicleClass::Gv) - 2100.0).abs() <= 1e-12 * 3000.0);
        assert!((a.total_mass(VehicleClass::Ev) - 900.0).abs() <= 1e-12 * 3000.0);
        assert!(a.mass_gv.iter().chain(&a.mass_ev).all(|&m| m >= 0.0));
        assert!(a.centers.contains(&sc.t_star));
    }

    #[test]
    fn simplex_projection() {
        let x = project_simplex(&[0.5, 0.2, -1.0], 1.0);
        assert!((x[0] - 0.65).abs() < 1e-15 && (x[1] - 0.35).abs() < 1e-15 && x[2] == 0.0);
        let y = project_simplex(&[0.25, 0.75], 1.0);
        assert_eq!(y, vec![0.25, 0.75]);
    }

    #[test]
    fn loaded_bin_sheds_mass() {
        let sc = Scenario::basic();
        let mut a = init_assignment(&sc, one_minute()).unwrap();
        let mid = a.len() / 2;
        a.mass_gv.iter_mut().for_each(|m| *m = 0.0);
        a.mass_gv[mid] = 3000.0;
        let b = day_step(&a, &sc, 0.05);
        assert!(b.mass_gv[mid] < 3000.0);
        assert!((b.total_mass(VehicleClass::Gv) - 3000.0).abs() <= 1e-12 * 3000.0);
    }

    #[test]
    fn equal_cost_assignment_is_fixed() {
        // Two bins with mass tuned so both cost the same, every other bin dearer.
        let mut sc = Scenario::basic();
        sc.n_total = 100.0;
        let h = one_minute();
        let a0 = init_assignment(&sc, h).unwrap();
        let mid = a0.len() / 2;
        let map = class_map(&sc, VehicleClass::Gv).unwrap();
        // Bins at t* and t* - h: SD differs by beta h, so the later bin carries more delay.
        let cost_of = |x: f64, t: f64| {
            map.eval(sc.delay_from_flow_unchecked(x / h)) + sc.schedule_delay(t)
        };
        let (t_early, t_late) = (a0.centers[mid - 1], a0.centers[mid]);
        let x_late = crate::roots::solve_bracketed(
            "split",
            |x| cost_of(x, t_late) - cost_of(100.0 - x, t_early),
            50.0,
            cost_of(50.0, t_late) - cost_of(50.0, t_early),
            100.0,
            cost_of(100.0, t_late) - cost_of(0.0, t_early),
            crate::roots::Tolerance::relative(1e-15),
        )
        .unwrap();
        let mut a = a0.clone();
        a.mass_gv.iter_mut().for_each(|m| *m = 0.0);
        a.mass_gv[mid] = x_late;
        a.mass_gv[mid - 1] = 100.0 - x_late;
        let c = cost_of(x_late, t_late);
        // Only a fixed point if no empty bin is cheaper.
        let cheapest_empty = a
            .centers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != mid && *i != mid - 1)
            .map(|(_, &t)| sc.schedule_delay(t))
            .fold(f64::INFINITY, f64::min);
        if cheapest_empty >= c {
            let b = day_step(&a, &sc, 0.05);
            assert_eq!(b.mass_gv, a.mass_gv);
        } else {
            let b = day_step(&a, &sc, 0.05);
            assert_ne!(b.mass_gv, a.mass_gv);
        }
    }

    #[test]
    fn gap_of_a_single_used_bin_is_against_cheapest_empty_bin() {
        let mut sc = Scenario::basic();
        let mut a = init_assignment(&sc, one_minute()).unwrap();
        sc.n_total = 10.0;
        a.mass_gv.iter_mut().for_each(|m| *m = 0.0);
        let mid = a.len() / 2;
        a.mass_gv[mid + 5] = 10.0;
        let g = gap_measure(&a, &sc);
        // The empty bin at t* costs nothing.
        let map = class_map(&sc, VehicleClass::Gv).unwrap();
        let d = sc.delay_from_flow_unchecked(10.0 * 60.0);
        let used = map.eval(d) + sc.schedule_delay(a.centers[mid + 5]);
        assert!((g.gap_gv - used).abs() < 1e-12);
        assert_eq!(g.relative, 0.0);

        // Light enough that the t* bin beats every empty one: a fixed point.
        a.mass_gv[mid + 5] = 0.0;
        a.mass_gv[mid] = 10.0;
        assert_eq!(gap_measure(&a, &sc).gap_gv, 0.0);
        assert_eq!(day_step(&a, &sc, 0.05).mass_gv, a.mass_gv);
    }
}
