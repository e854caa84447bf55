//! CSV tables and plain-text summaries.

use std::path::{Path, PathBuf};

use crate::dynamics::{GapSample, OracleRun};
use crate::error::{Error, Result};
use crate::model::{CostComponents, Scenario, VehicleClass};
use crate::pattern::TimeProfile;
use crate::sweep::SweepReport;

pub const PROFILE_HEADER: [&str; 10] = [
    "t_hours",
    "delay_hours",
    "flow_total",
    "flow_gv",
    "flow_ev",
    "cost_traveltime",
    "cost_energy",
    "cost_schedule",
    "toll",
    "cost_total",
];

/// Ten significant digits, `%.10g` style.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..10).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (9 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn to_csv<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.as_ref()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn cost_cells(c: &CostComponents) -> [String; 5] {
    [c.travel_time, c.energy, c.schedule_delay, c.toll, c.total].map(fmt_num)
}

pub fn profile_csv(profile: &TimeProfile) -> Vec<u8> {
    let rows = (0..profile.len()).map(|i| {
        let mut row = vec![
            fmt_num(profile.t[i]),
            fmt_num(profile.delay[i]),
            fmt_num(profile.flow_total[i]),
            fmt_num(profile.flow_gv[i]),
            fmt_num(profile.flow_ev[i]),
        ];
        row.extend(cost_cells(&profile.costs[i]));
        row
    });
    to_csv(&PROFILE_HEADER, rows)
}

pub fn sweep_csv(report: &SweepReport) -> Vec<u8> {
    let header = [
        "mpr",
        "cost_gv",
        "cost_ev",
        "max_delay_hours",
        "duration_hours",
        "ecp_hours",
        "peak_flow",
        "social_cost",
    ];
    let rows = report.rows.iter().map(|r| {
        vec![
            fmt_num(r.mpr),
            fmt_opt(r.cost_gv),
            fmt_opt(r.cost_ev),
            fmt_num(r.max_delay),
            fmt_num(r.duration),
            fmt_num(r.ecp),
            fmt_num(r.peak_flow),
            fmt_num(r.social_cost),
        ]
    });
    to_csv(&header, rows)
}

pub fn gap_trace_csv(trace: &[GapSample]) -> Vec<u8> {
    let rows = trace.iter().map(|s| {
        vec![
            s.day.to_string(),
            fmt_num(s.gap.gap_gv),
            fmt_num(s.gap.gap_ev),
            fmt_num(s.gap.relative),
        ]
    });
    to_csv(&["day", "gap_gv", "gap_ev", "relative_gap"], rows)
}

/// Converged bins in the profile column layout. Costs are those of the
/// class holding more mass in the bin.
pub fn oracle_csv(run: &OracleRun, scenario: &Scenario) -> Vec<u8> {
    let a = &run.assignment;
    let delays = a.delays(scenario);
    let rows = (0..a.len()).map(|i| {
        let (gv, ev) = (a.mass_gv[i] / a.width, a.mass_ev[i] / a.width);
        let class = if ev > gv { VehicleClass::Ev } else { VehicleClass::Gv };
        let model = scenario
            .energy_model(class)
            .or_else(|_| scenario.energy_model(class.other()))
            .expect("scenario has an energy model");
        let costs = scenario.cost_components(&model, a.centers[i], delays[i], 0.0);
        let mut row = vec![
            fmt_num(a.centers[i]),
            fmt_num(delays[i]),
            fmt_num(gv + ev),
            fmt_num(gv),
            fmt_num(ev),
        ];
        row.extend(cost_cells(&costs));
        row
    });
    to_csv(&PROFILE_HEADER, rows)
}

/// Named columns of equal length.
pub fn columns_csv(columns: &[(&str, &[f64])]) -> Vec<u8> {
    let header: Vec<&str> = columns.iter().map(|(h, _)| *h).collect();
    let n = columns.first().map_or(0, |(_, c)| c.len());
    let rows = (0..n).map(|i| columns.iter().map(|(_, c)| fmt_num(c[i])).collect::<Vec<_>>());
    to_csv(&header, rows)
}

/// Ordered `key: value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub lines: Vec<(String, String)>,
}

impl Summary {
    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, fmt_num(value))
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.lines.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }
}
