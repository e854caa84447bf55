//! Sectioned TOML scenario files.
//!
//! ```toml
//! [corridor]
//! trip_km = 20.0
//! capacity_r = 8000.0
//! nu = 4.1
//!
//! [demand]
//! n_total = 3000.0
//! t_star = 8.0
//! alpha = 8.4
//! beta = 4.2
//! gamma = 16.8
//! mpr = 0.5
//!
//! [energy.gv]
//! c1 = 4.0
//! c2 = 16.8
//!
//! [energy.ev]
//! c1 = 0.5
//! c2 = 3.0
//! ```
//!
//! `[numerics]` is optional, as are `s_max` (60 km/h) and `mpr` (0).
//! Environment variables `CEQ_<SECTION>_<KEY>` override any key, e.g.
//! `CEQ_DEMAND_MPR=0.3` or `CEQ_ENERGY_EV_C2=2.5`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EnergyModel, Numerics, Scenario, VehicleClass};

/// The basic corridor as shipped with the crate.
pub const BASIC_SCENARIO: &str = include_str!("../scenarios/basic.toml");

const ENV_PREFIX: &str = "CEQ_";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    corridor: Corridor,
    demand: Demand,
    #[serde(default)]
    energy: Energy,
    #[serde(default)]
    numerics: NumericsSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Corridor {
    trip_km: f64,
    capacity_r: f64,
    nu: f64,
    #[serde(default = "default_s_max")]
    s_max: f64,
}

fn default_s_max() -> f64 {
    60.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Demand {
    n_total: f64,
    t_star: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    #[serde(default)]
    mpr: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Energy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gv: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ev: Option<Coefficients>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Coefficients {
    c1: f64,
    c2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NumericsSection {
    dt_minutes: f64,
    root_rel_tol: f64,
    quad_rel_tol: f64,
    mixed_residual_rel: f64,
    max_bracket_steps: usize,
    max_newton_iters: usize,
    oracle_bin_minutes: f64,
    eta: f64,
    gap_tol: f64,
    max_days: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Numerics::default().into()
    }
}

impl From<Numerics> for NumericsSection {
    fn from(n: Numerics) -> Self {
        NumericsSection {
            dt_minutes: n.dt_minutes,
            root_rel_tol: n.root_rel_tol,
            quad_rel_tol: n.quad_rel_tol,
            mixed_residual_rel: n.mixed_residual_rel,
            max_bracket_steps: n.max_bracket_steps,
            max_newton_iters: n.max_newton_iters,
            oracle_bin_minutes: n.oracle_bin_minutes,
            eta: n.eta,
            gap_tol: n.gap_tol,
            max_days: n.max_days,
        }
    }
}

impl From<NumericsSection> for Numerics {
    fn from(n: NumericsSection) -> Self {
        Numerics {
            dt_minutes: n.dt_minutes,
            root_rel_tol: n.root_rel_tol,
            quad_rel_tol: n.quad_rel_tol,
            mixed_residual_rel: n.mixed_residual_rel,
            max_bracket_steps: n.max_bracket_steps,
            max_newton_iters: n.max_newton_iters,
            oracle_bin_minutes: n.oracle_bin_minutes,
            eta: n.eta,
            gap_tol: n.gap_tol,
            max_days: n.max_days,
        }
    }
}

enum Kind {
    Real,
    Count,
}

/// Every overridable key: (table path, key, value kind).
const KEYS: &[(&[&str], &str, Kind)] = &[
    (&["corridor"], "trip_km", Kind::Real),
    (&["corridor"], "capacity_r", Kind::Real),
    (&["corridor"], "nu", Kind::Real),
    (&["corridor"], "s_max", Kind::Real),
    (&["demand"], "n_total", Kind::Real),
    (&["demand"], "t_star", Kind::Real),
    (&["demand"], "alpha", Kind::Real),
    (&["demand"], "beta", Kind::Real),
    (&["demand"], "gamma", Kind::Real),
    (&["demand"], "mpr", Kind::Real),
    (&["energy", "gv"], "c1", Kind::Real),
    (&["energy", "gv"], "c2", Kind::Real),
    (&["energy", "ev"], "c1", Kind::Real),
    (&["energy", "ev"], "c2", Kind::Real),
    (&["numerics"], "dt_minutes", Kind::Real),
    (&["numerics"], "root_rel_tol", Kind::Real),
    (&["numerics"], "quad_rel_tol", Kind::Real),
    (&["numerics"], "mixed_residual_rel", Kind::Real),
    (&["numerics"], "max_bracket_steps", Kind::Count),
    (&["numerics"], "max_newton_iters", Kind::Count),
    (&["numerics"], "oracle_bin_minutes", Kind::Real),
    (&["numerics"], "eta", Kind::Real),
    (&["numerics"], "gap_tol", Kind::Real),
    (&["numerics"], "max_days", Kind::Count),
];

fn env_name(path: &[&str], key: &str) -> String {
    let mut name = String::from(ENV_PREFIX);
    for part in path {
        name.push_str(&part.to_ascii_uppercase());
        name.push('_');
    }
    name.push_str(&key.to_ascii_uppercase());
    name
}

fn apply_override(doc: &mut toml::Table, var: &str, raw: &str) -> Result<()> {
    let Some((path, key, kind)) = KEYS.iter().find(|(p, k, _)| env_name(p, k) == var) else {
        return Err(Error::validation(var, "is not a recognised scenario key"));
    };
    let value = match kind {
        Kind::Real => raw.trim().parse::<f64>().map(toml::Value::Float).ok(),
        Kind::Count => raw.trim().parse::<i64>().map(toml::Value::Integer).ok(),
    }
    .ok_or_else(|| Error::validation(var, format!("has an unreadable value {raw:?}")))?;
    let mut table = doc;
    for part in path.iter() {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("`{part}` is not a section")))?;
    }
    table.insert(key.to_string(), value);
    Ok(())
}

/// Parses scenario text, applies `CEQ_*` overrides from `vars`, and validates.
pub fn parse_scenario<I>(text: &str, vars: I) -> Result<Scenario>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let mut overrides: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    overrides.sort();
    for (k, v) in &overrides {
        apply_override(&mut table, k, v)?;
    }
    let doc: Document = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let scenario = Scenario {
        alpha: doc.demand.alpha,
        beta: doc.demand.beta,
        gamma: doc.demand.gamma,
        t_star: doc.demand.t_star,
        nu: doc.corridor.nu,
        n_total: doc.demand.n_total,
        capacity_r: doc.corridor.capacity_r,
        trip_km: doc.corridor.trip_km,
        s_max: doc.corridor.s_max,
        mpr: doc.demand.mpr,
        gv_energy: doc.energy.gv.map(|c| EnergyModel::new(VehicleClass::Gv, c.c1, c.c2)),
        ev_energy: doc.energy.ev.map(|c| EnergyModel::new(VehicleClass::Ev, c.c1, c.c2)),
        numerics: doc.numerics.into(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Reads and validates a scenario file, without environment overrides.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    load_scenario_with_env(path, std::iter::empty())
}

pub fn load_scenario_with_env<I>(path: &Path, vars: I) -> Result<Scenario>
where
    I: IntoIterator<Item = (String, String)>,
{
    let text = std::fs::read_to_string(path).map_err(|source| Error::ScenarioRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, vars)
}

/// The bundled basic scenario.
pub fn basic_scenario() -> Scenario {
    parse_scenario(BASIC_SCENARIO, std::iter::empty()).expect("bundled scenario is valid")
}

/// Scenario as TOML text; parsing it back gives the same scenario.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let coeffs = |m: Option<EnergyModel>| m.map(|m| Coefficients { c1: m.c1, c2: m.c2 });
    let doc = Document {
        corridor: Corridor {
            trip_km: scenario.trip_km,
            capacity_r: scenario.capacity_r,
            nu: scenario.nu,
            s_max: scenario.s_max,
        },
        demand: Demand {
            n_total: scenario.n_total,
            t_star: scenario.t_star,
            alpha: scenario.alpha,
            beta: scenario.beta,
            gamma: scenario.gamma,
            mpr: scenario.mpr,
        },
        energy: Energy {
            gv: coeffs(scenario.gv_energy),
            ev: coeffs(scenario.ev_energy),
        },
        numerics: scenario.numerics.clone().into(),
    };
    toml::to_string(&doc).expect("scenario serialises")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> std::iter::Empty<(String, String)> {
        std::iter::empty()
    }

    #[test]
    fn bundled_file_is_the_basic_scenario() {
        assert_eq!(basic_scenario(), Scenario::basic());
    }

    #[test]
    fn round_trip() {
        let sc = Scenario::basic().with_mpr(0.37);
        assert_eq!(parse_scenario(&emit_scenario(&sc), no_env()).unwrap(), sc);
        let mut odd = sc.clone();
        odd.gv_energy = None;
        odd.mpr = 1.0;
        odd.alpha = 0.1 + 0.2;
        assert_eq!(parse_scenario(&emit_scenario(&odd), no_env()).unwrap(), odd);
    }

    #[test]
    fn out_of_range_mpr_names_the_field() {
        let text = BASIC_SCENARIO.replace("mpr = 0.0", "mpr = 1.5");
        let err = parse_scenario(&text, no_env()).unwrap_err().to_string();
        assert!(err.contains("mpr") && err.contains("[0,1]"), "{err}");
    }

    #[test]
    fn missing_ev_section_with_electric_share() {
        let text = BASIC_SCENARIO
            .replace("[energy.ev]\nc1 = 0.5\nc2 = 3.0\n", "")
            .replace("mpr = 0.0", "mpr = 0.2");
        let err = parse_scenario(&text, no_env()).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
        assert!(err.to_string().contains("energy.ev"));
    }

    #[test]
    fn unknown_key_is_named() {
        let text = BASIC_SCENARIO.replace("nu = 4.1", "nu = 4.1\nlanes = 2");
        let err = parse_scenario(&text, no_env()).unwrap_err().to_string();
        assert!(err.contains("lanes"), "{err}");
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_scenario("[corridor]\ntrip_km = = 3\n", no_env())
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn missing_required_field() {
        let text = BASIC_SCENARIO.replace("alpha = 8.4", "");
        let err = parse_scenario(&text, no_env()).unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
    }

    #[test]
    fn env_overrides() {
        let vars = vec![
            ("CEQ_DEMAND_MPR".to_string(), "0.3".to_string()),
            ("CEQ_ENERGY_EV_C2".to_string(), "2.5".to_string()),
            ("CEQ_NUMERICS_MAX_DAYS".to_string(), "17".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ];
        let sc = parse_scenario(BASIC_SCENARIO, vars).unwrap();
        assert_eq!(sc.mpr, 0.3);
        assert_eq!(sc.ev_energy.unwrap().c2, 2.5);
        assert_eq!(sc.numerics.max_days, 17);

        let bad = vec![("CEQ_DEMAND_LANES".to_string(), "2".to_string())];
        let err = parse_scenario(BASIC_SCENARIO, bad).unwrap_err().to_string();
        assert!(err.contains("CEQ_DEMAND_LANES"), "{err}");
    }
}
