//! The `solve`, `sweep`, `toll` and `oracle` runs behind the command line.
//!
//! Each run writes its files into an output directory and returns a
//! [`Summary`] that is also saved as `summary.txt`.

use std::path::{Path, PathBuf};

use crate::dynamics::{class_layout, compare_delays, ev_block_is_central, run_oracle, StopReason};
use crate::equilibrium::solve_mixed;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{extra_congestion_delay, pattern_cost_breakdown, summarize_pattern};
use crate::model::{Scenario, VehicleClass};
use crate::report::{self, Summary};
use crate::sweep::{run_sweep, SweepReport};
use crate::toll::{compute_toll, solve_system_optimum, verify_tolled_equilibrium};

/// Oracle bins lighter than this share of all commuters are left out of the comparison.
pub const ORACLE_MASS_FLOOR: f64 = 1e-3;
/// Relative bin-delay agreement reported by the oracle run.
pub const ORACLE_DELAY_LIMIT: f64 = 0.02;

#[derive(Clone, Debug, Default)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

fn prepare(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })
}

fn finish(out_dir: &Path, mut files: Vec<PathBuf>, summary: Summary) -> Result<CommandOutput> {
    files.push(report::write_file(&out_dir.join("summary.txt"), summary.render().as_bytes())?);
    Ok(CommandOutput { files, summary })
}

fn scenario_lines(s: &mut Summary, sc: &Scenario) {
    s.num("mpr", sc.mpr).num("n_total", sc.n_total).num("dt_minutes", sc.numerics.dt_minutes);
}

/// Equilibrium profile and its metrics against the all-GV baseline.
pub fn cmd_solve(scenario: &Scenario, out_dir: &Path) -> Result<CommandOutput> {
    prepare(out_dir)?;
    let sol = solve_mixed(scenario)?;
    let baseline = solve_mixed(&scenario.with_mpr(0.0))?;
    let m = summarize_pattern(&sol, &sol.profile, &baseline.profile);

    let mut s = Summary::default();
    scenario_lines(&mut s, scenario);
    for class in [VehicleClass::Gv, VehicleClass::Ev] {
        if let Some(c) = sol.cost(class) {
            s.num(&format!("cost_{}", class.to_string().to_lowercase()), c);
        }
    }
    if let Some((t0, t1)) = m.window {
        s.num("window_start", t0).num("window_end", t1);
    }
    for seg in &sol.segments {
        s.text(
            &format!("segment_{}", seg.class.to_string().to_lowercase()),
            format!("{} .. {}", report::fmt_num(seg.t_lo), report::fmt_num(seg.t_hi)),
        );
    }
    s.num("duration_hours", m.duration)
        .num("max_delay_hours", m.max_delay)
        .num("peak_flow", m.peak_flow)
        .num("baseline_max_delay_hours", baseline.profile.max_delay())
        .num("ecp_hours", m.ecp)
        .num("max_ecd_hours", m.ecd.max().max(0.0))
        .num("cost_traveltime", m.costs.travel_time)
        .num("cost_energy", m.costs.energy)
        .num("cost_schedule", m.costs.schedule_delay)
        .num("social_cost", m.costs.social);

    let files = vec![report::write_file(&out_dir.join("profile.csv"), &report::profile_csv(&sol.profile))?];
    finish(out_dir, files, s)
}

pub fn cmd_sweep(
    scenario: &Scenario,
    mprs: &[f64],
    out_dir: &Path,
    exec: Execution,
) -> Result<(SweepReport, CommandOutput)> {
    prepare(out_dir)?;
    let rep = run_sweep(scenario, mprs, exec)?;
    let mut s = Summary::default();
    s.num("rows", rep.rows.len() as f64);
    let ecp_monotone = rep.rows.windows(2).all(|w| w[1].ecp >= w[0].ecp);
    s.text("ecp_nondecreasing", ecp_monotone.to_string());
    if let (Some(first), Some(last)) = (rep.rows.first(), rep.rows.last()) {
        if first.max_delay > 0.0 {
            s.num("max_delay_ratio_last_first", last.max_delay / first.max_delay);
        }
    }
    let files = vec![report::write_file(&out_dir.join("sweep.csv"), &report::sweep_csv(&rep))?];
    let out = finish(out_dir, files, s)?;
    Ok((rep, out))
}

/// System optimum and toll for a single-class fleet, compared with that
/// fleet's untolled equilibrium and the all-GV baseline.
pub fn cmd_toll(scenario: &Scenario, class: VehicleClass, rebase: f64, out_dir: &Path) -> Result<CommandOutput> {
    prepare(out_dir)?;
    let mpr = match class {
        VehicleClass::Gv => 0.0,
        VehicleClass::Ev => 1.0,
    };
    let sc = scenario.with_mpr(mpr);
    let model = sc.energy_model(class)?;
    let so = solve_system_optimum(&sc, &model)?;
    let toll = compute_toll(&so, &model, &sc).with_rebase(rebase);
    let residual = verify_tolled_equilibrium(&toll, &sc, &model);
    let ue = solve_mixed(&sc)?;
    let baseline = solve_mixed(&scenario.with_mpr(0.0))?;
    let tolled_profile = crate::pattern::sample_profiles(&toll, sc.numerics.dt_hours());

    let ecd_ue = extra_congestion_delay(&ue.profile, &baseline.profile);
    let ecd_so = extra_congestion_delay(&so.profile, &baseline.profile);
    let ue_cost = pattern_cost_breakdown(&ue).social;
    let so_costs = pattern_cost_breakdown(&toll);

    let mut s = Summary::default();
    s.text("class", class.to_string());
    s.num("lambda", so.lambda)
        .num("residual", residual)
        .num("residual_over_lambda", if so.lambda > 0.0 { residual / so.lambda } else { 0.0 })
        .num("rebase", rebase)
        .num("so_window_start", so.window.0)
        .num("so_window_end", so.window.1)
        .num("so_duration_hours", so.duration())
        .num("ue_duration_hours", ue.duration())
        .num("so_max_delay_hours", so.max_delay())
        .num("ue_max_delay_hours", ue.max_delay())
        .num("max_toll", toll.max_toll())
        .num("toll_revenue", so_costs.toll_revenue)
        .num("so_social_cost", so_costs.social)
        .num("ue_social_cost", ue_cost);
    if ue_cost > 0.0 {
        s.num("social_cost_saving", 1.0 - so_costs.social / ue_cost);
    }
    let (ecd_ue_max, ecd_so_max) = (ecd_ue.max(), ecd_so.max());
    s.num("max_ecd_untolled_hours", ecd_ue_max)
        .num("max_ecd_tolled_hours", ecd_so_max);
    if ecd_ue_max > 0.0 {
        s.num("max_ecd_reduction", 1.0 - ecd_so_max / ecd_ue_max);
    }
    s.text("ecd_tolled_nonpositive", (ecd_so_max <= 0.0).to_string());
    if let Some(t) = ecd_so.argmax() {
        s.num("max_ecd_tolled_at", t);
    }

    let t = &ecd_so.t;
    let col = |p: &crate::pattern::TimeProfile| t.iter().map(|&ti| p.delay_at(ti)).collect::<Vec<f64>>();
    let (d_base, d_ue, d_so) = (col(&baseline.profile), col(&ue.profile), col(&so.profile));
    let e_ue: Vec<f64> = d_ue.iter().zip(&d_base).map(|(a, b)| a - b).collect();
    let ecd = report::columns_csv(&[
        ("t_hours", t),
        ("delay_baseline_hours", &d_base),
        ("delay_untolled_hours", &d_ue),
        ("delay_tolled_hours", &d_so),
        ("ecd_untolled_hours", &e_ue),
        ("ecd_tolled_hours", &ecd_so.delta),
    ]);
    let files = vec![
        report::write_file(&out_dir.join("toll.csv"), &report::profile_csv(&tolled_profile))?,
        report::write_file(&out_dir.join("ecd.csv"), &ecd)?,
    ];
    finish(out_dir, files, s)
}

/// Day-to-day run and its agreement with the analytic equilibrium.
pub fn cmd_oracle(scenario: &Scenario, out_dir: &Path) -> Result<CommandOutput> {
    prepare(out_dir)?;
    let run = run_oracle(scenario)?;
    let sol = solve_mixed(scenario)?;
    let a = &run.assignment;
    let cmp = compare_delays(
        a,
        scenario,
        |t| sol.delay_at(t),
        sol.max_delay(),
        ORACLE_MASS_FLOOR * scenario.n_total,
        ORACLE_DELAY_LIMIT,
    );
    let (n_gv, n_ev) = scenario.populations();

    let mut s = Summary::default();
    scenario_lines(&mut s, scenario);
    s.num("bin_minutes", scenario.numerics.oracle_bin_minutes)
        .num("eta", scenario.numerics.eta)
        .num("days", a.day as f64)
        .text(
            "stop",
            match run.stop {
                StopReason::Converged => "converged",
                StopReason::MaxDays => "max_days",
            },
        )
        .num("relative_gap", run.report.relative)
        .num("gap_gv", run.report.gap_gv)
        .num("gap_ev", run.report.gap_ev)
        .num("mass_error_gv", (a.total_mass(VehicleClass::Gv) - n_gv).abs())
        .num("mass_error_ev", (a.total_mass(VehicleClass::Ev) - n_ev).abs())
        .num("bins_compared", cmp.bins as f64)
        .num("max_relative_delay_deviation", cmp.max_relative)
        .num("max_deviation_over_peak_delay", cmp.max_relative_to_peak)
        .num("bins_over_2pct", cmp.over_limit as f64)
        .num("oracle_peak_delay_hours", a.delays(scenario).iter().copied().fold(0.0, f64::max))
        .num("analytic_peak_delay_hours", sol.max_delay());
    if n_gv > 0.0 && n_ev > 0.0 {
        s.text("ev_block_central", ev_block_is_central(a).to_string());
        s.text("layout", class_layout(a).trim_matches('.').to_string());
    }

    let files = vec![
        report::write_file(&out_dir.join("oracle_profile.csv"), &report::oracle_csv(&run, scenario))?,
        report::write_file(&out_dir.join("gap_trace.csv"), &report::gap_trace_csv(&run.trace))?,
    ];
    finish(out_dir, files, s)
}
