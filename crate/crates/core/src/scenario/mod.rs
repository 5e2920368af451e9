//! Community scenario: horizon, tariffs, members and their devices.
//!
//! A scenario is the single input document of every planner. It is read from JSON
//! (see [`load_scenario`]), checked against the domain invariants by
//! [`validate_scenario`], or produced by the deterministic generator in [`synthetic`].

mod flags;
pub mod synthetic;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use validate::validate_scenario;

/// Version tag every scenario document must carry.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub steps_per_day: usize,
    /// Timestep length in hours.
    pub dt_hours: f64,
    pub num_days: usize,
}

impl Horizon {
    pub fn total_steps(&self) -> usize {
        self.steps_per_day * self.num_days
    }

    /// Global timestep indices of `day` (zero-based).
    pub fn day_range(&self, day: usize) -> Range<usize> {
        day * self.steps_per_day..(day + 1) * self.steps_per_day
    }
}

/// Flat per-timestep tariffs in €/kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prices {
    pub import_price: Vec<f64>,
    pub export_price: Vec<f64>,
    pub community_fee: Vec<f64>,
}

impl Prices {
    pub fn flat(import: f64, export: f64, fee: f64, len: usize) -> Self {
        Self {
            import_price: vec![import; len],
            export_price: vec![export; len],
            community_fee: vec![fee; len],
        }
    }

    /// Restriction to a range of timesteps.
    pub fn slice(&self, range: Range<usize>) -> Prices {
        Prices {
            import_price: self.import_price[range.clone()].to_vec(),
            export_price: self.export_price[range.clone()].to_vec(),
            community_fee: self.community_fee[range].to_vec(),
        }
    }
}

/// Stationary battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BssParams {
    pub capacity_kwh: f64,
    /// Same bound for charge and discharge.
    pub max_power_kw: f64,
    pub efficiency: f64,
    pub soc_init: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

/// Electric vehicle seen from its home charger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvParams {
    pub capacity_kwh: f64,
    pub max_charge_kw: f64,
    pub efficiency: f64,
    #[serde(with = "flags")]
    pub plugged: Vec<bool>,
    #[serde(with = "flags")]
    pub arrival: Vec<bool>,
    #[serde(with = "flags")]
    pub departure: Vec<bool>,
    /// State of charge on arrival; read only where `arrival` is set.
    pub soc_arrival: Vec<f64>,
    pub soc_ref: Vec<f64>,
    pub soc_init: f64,
    pub power_ref_kw: Vec<f64>,
    pub reluctance_eur: f64,
}

/// Electric water boiler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WbDoc")]
pub struct WbParams {
    /// °C gained per kWh of net heat.
    pub thermal_coeff: f64,
    pub max_power_kw: f64,
    pub temp_init: f64,
    pub temp_max: Vec<f64>,
    pub temp_limit: Vec<f64>,
    #[serde(with = "flags")]
    pub usage_event: Vec<bool>,
    pub usage_loss_kw: Vec<f64>,
    pub envelope_loss_kw: Vec<f64>,
    pub power_ref_kw: Vec<f64>,
    pub reluctance_eur: f64,
}

/// Space-heating heat pump; the state is the indoor temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HpDoc")]
pub struct HpParams {
    /// °C gained per kWh of net heat.
    pub thermal_coeff: f64,
    /// Electrical rating.
    pub max_power_kw: f64,
    pub cop: f64,
    pub temp_init: f64,
    pub temp_limit: Vec<f64>,
    pub wall_loss_kw: Vec<f64>,
    pub power_ref_kw: Vec<f64>,
    pub reluctance_eur: f64,
}

/// Flexible-energy totals carried for reporting only; never a constraint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlexEnergyCap {
    pub total: f64,
    pub ev: f64,
    pub wb: f64,
    pub hp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Member {
    pub id: String,
    pub fixed_load_kw: Vec<f64>,
    /// Available PV power, already scaled by the installed capacity.
    pub pv_max_kw: Vec<f64>,
    #[serde(default)]
    pub pv_capacity_kwp: f64,
    #[serde(default)]
    pub bss: Option<BssParams>,
    #[serde(default)]
    pub ev: Option<EvParams>,
    #[serde(default)]
    pub wb: Option<WbParams>,
    #[serde(default)]
    pub hp: Option<HpParams>,
    #[serde(default)]
    pub flexible_energy_cap_kwh: FlexEnergyCap,
}

impl Member {
    /// A member with only fixed load and PV.
    pub fn passive(id: impl Into<String>, fixed_load_kw: Vec<f64>, pv_max_kw: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            fixed_load_kw,
            pv_max_kw,
            pv_capacity_kwp: 0.0,
            bss: None,
            ev: None,
            wb: None,
            hp: None,
            flexible_energy_cap_kwh: FlexEnergyCap::default(),
        }
    }

    pub fn has_flexibility(&self) -> bool {
        self.bss.is_some() || self.ev.is_some() || self.wb.is_some() || self.hp.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub horizon: Horizon,
    pub prices: Prices,
    pub members: Vec<Member>,
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn member(&self, id: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.id == id)
    }

    /// The scenario restricted to its first `days` days.
    pub fn first_days(&self, days: usize) -> Result<Scenario, ScenarioError> {
        if days == 0 || days > self.horizon.num_days {
            return Err(ScenarioError::Config(format!(
                "cannot keep {days} day(s) of a {}-day scenario",
                self.horizon.num_days
            )));
        }
        let len = days * self.horizon.steps_per_day;
        let mut s = self.clone();
        s.horizon.num_days = days;
        s.prices.import_price.truncate(len);
        s.prices.export_price.truncate(len);
        s.prices.community_fee.truncate(len);
        for m in &mut s.members {
            m.fixed_load_kw.truncate(len);
            m.pv_max_kw.truncate(len);
            if let Some(e) = &mut m.ev {
                e.plugged.truncate(len);
                e.arrival.truncate(len);
                e.departure.truncate(len);
                e.soc_arrival.truncate(len);
                e.soc_ref.truncate(len);
                e.power_ref_kw.truncate(len);
            }
            if let Some(w) = &mut m.wb {
                w.temp_max.truncate(len);
                w.temp_limit.truncate(len);
                w.usage_event.truncate(len);
                w.usage_loss_kw.truncate(len);
                w.envelope_loss_kw.truncate(len);
                w.power_ref_kw.truncate(len);
            }
            if let Some(h) = &mut m.hp {
                h.temp_limit.truncate(len);
                h.wall_loss_kw.truncate(len);
                h.power_ref_kw.truncate(len);
            }
        }
        Ok(s)
    }
}

/// One failed invariant, located by member, field and timestep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub member: Option<String>,
    pub field: String,
    pub timestep: Option<usize>,
    pub message: String,
}

impl Violation {
    /// Machine-readable location, e.g. `members/u03/ev.power_ref_kw[17]`.
    pub fn path(&self) -> String {
        let mut p = match &self.member {
            Some(id) => format!("members/{id}/{}", self.field),
            None => self.field.clone(),
        };
        if let Some(t) = self.timestep {
            p.push_str(&format!("[{t}]"));
        }
        p
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path(), self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported scenario schema {found} (expected {SCHEMA_VERSION})")]
    UnsupportedSchema { found: u32 },
    #[error("invalid scenario: {} ({} violation(s))", .0[0], .0.len())]
    Invalid(Vec<Violation>),
    #[error("invalid generator config: {0}")]
    Config(String),
}

/// Parses and validates a scenario document.
pub fn load_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_slice(bytes)?;
    if scenario.schema != SCHEMA_VERSION {
        return Err(ScenarioError::UnsupportedSchema { found: scenario.schema });
    }
    let violations = validate_scenario(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

// Thermal limits may be given directly or as a (reference, setpoint) pair whose
// elementwise minimum is the limit.
fn resolve_limit(
    limit: Option<Vec<f64>>,
    reference: Option<Vec<f64>>,
    setpoint: Option<Vec<f64>>,
) -> Result<Vec<f64>, String> {
    match (limit, reference, setpoint) {
        (Some(l), None, None) => Ok(l),
        (None, Some(r), Some(s)) => {
            if r.len() != s.len() {
                return Err("temp_ref and temp_set differ in length".into());
            }
            Ok(r.iter().zip(&s).map(|(a, b)| a.min(*b)).collect())
        }
        (Some(_), _, _) => Err("give either temp_limit or temp_ref/temp_set, not both".into()),
        _ => Err("missing temp_limit (or the temp_ref/temp_set pair)".into()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WbDoc {
    thermal_coeff: f64,
    max_power_kw: f64,
    temp_init: f64,
    temp_max: Vec<f64>,
    temp_limit: Option<Vec<f64>>,
    temp_ref: Option<Vec<f64>>,
    temp_set: Option<Vec<f64>>,
    #[serde(with = "flags")]
    usage_event: Vec<bool>,
    usage_loss_kw: Vec<f64>,
    envelope_loss_kw: Vec<f64>,
    power_ref_kw: Vec<f64>,
    reluctance_eur: f64,
}

impl TryFrom<WbDoc> for WbParams {
    type Error = String;

    fn try_from(d: WbDoc) -> Result<Self, Self::Error> {
        Ok(WbParams {
            thermal_coeff: d.thermal_coeff,
            max_power_kw: d.max_power_kw,
            temp_init: d.temp_init,
            temp_max: d.temp_max,
            temp_limit: resolve_limit(d.temp_limit, d.temp_ref, d.temp_set)?,
            usage_event: d.usage_event,
            usage_loss_kw: d.usage_loss_kw,
            envelope_loss_kw: d.envelope_loss_kw,
            power_ref_kw: d.power_ref_kw,
            reluctance_eur: d.reluctance_eur,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HpDoc {
    thermal_coeff: f64,
    max_power_kw: f64,
    cop: f64,
    temp_init: f64,
    temp_limit: Option<Vec<f64>>,
    temp_ref: Option<Vec<f64>>,
    temp_set: Option<Vec<f64>>,
    wall_loss_kw: Vec<f64>,
    power_ref_kw: Vec<f64>,
    reluctance_eur: f64,
}

impl TryFrom<HpDoc> for HpParams {
    type Error = String;

    fn try_from(d: HpDoc) -> Result<Self, Self::Error> {
        Ok(HpParams {
            thermal_coeff: d.thermal_coeff,
            max_power_kw: d.max_power_kw,
            cop: d.cop,
            temp_init: d.temp_init,
            temp_limit: resolve_limit(d.temp_limit, d.temp_ref, d.temp_set)?,
            wall_loss_kw: d.wall_loss_kw,
            power_ref_kw: d.power_ref_kw,
            reluctance_eur: d.reluctance_eur,
        })
    }
}

/// Device counts, for summaries and sanity checks.
pub fn device_counts(s: &Scenario) -> BTreeMap<&'static str, usize> {
    let mut c = BTreeMap::new();
    c.insert("bss", s.members.iter().filter(|m| m.bss.is_some()).count());
    c.insert("ev", s.members.iter().filter(|m| m.ev.is_some()).count());
    c.insert("wb", s.members.iter().filter(|m| m.wb.is_some()).count());
    c.insert("hp", s.members.iter().filter(|m| m.hp.is_some()).count());
    c.insert("pv", s.members.iter().filter(|m| m.pv_capacity_kwp > 0.0).count());
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_doc() -> String {
        r#"{
            "schema": 1,
            "horizon": {"steps_per_day": 4, "dt_hours": 6.0, "num_days": 1},
            "prices": {
                "import_price": [0.4, 0.4, 0.4, 0.4],
                "export_price": [0.1, 0.1, 0.1, 0.1],
                "community_fee": [0.01, 0.01, 0.01, 0.01]
            },
            "members": [
                {"id": "a", "fixed_load_kw": [1, 1, 1, 1], "pv_max_kw": [0, 2, 1, 0]}
            ]
        }"#
        .to_string()
    }

    #[test]
    fn minimal_document_loads() {
        let s = load_scenario(minimal_doc().as_bytes()).unwrap();
        assert_eq!(s.members.len(), 1);
        assert_eq!(s.horizon.total_steps(), 4);
        assert!(s.members[0].bss.is_none());
    }

    #[test]
    fn null_devices_are_absent() {
        let doc = minimal_doc().replace(r#""pv_max_kw": [0, 2, 1, 0]"#, r#""pv_max_kw": [0, 2, 1, 0], "ev": null"#);
        let s = load_scenario(doc.as_bytes()).unwrap();
        assert!(s.members[0].ev.is_none());
    }

    #[test]
    fn schema_is_mandatory() {
        let doc = minimal_doc().replace(r#""schema": 1,"#, "");
        assert!(matches!(load_scenario(doc.as_bytes()), Err(ScenarioError::Parse(_))));
        let doc = minimal_doc().replace(r#""schema": 1"#, r#""schema": 2"#);
        assert!(matches!(
            load_scenario(doc.as_bytes()),
            Err(ScenarioError::UnsupportedSchema { found: 2 })
        ));
    }

    #[test]
    fn battery_soc_out_of_window() {
        let doc = minimal_doc().replace(
            r#""pv_max_kw": [0, 2, 1, 0]"#,
            r#""pv_max_kw": [0, 2, 1, 0], "bss": {"capacity_kwh": 10, "max_power_kw": 5,
               "efficiency": 0.95, "soc_init": 1.2, "soc_min": 0.1, "soc_max": 0.9}"#,
        );
        match load_scenario(doc.as_bytes()) {
            Err(ScenarioError::Invalid(v)) => {
                assert!(v.iter().any(|x| x.message == "soc_init out of [soc_min,soc_max]"
                    && x.member.as_deref() == Some("a")
                    && x.field == "bss.soc_init"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn garbage_is_a_parse_error() {
        assert!(matches!(load_scenario(b"{not json"), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn thermal_limit_from_reference_and_setpoint() {
        let wb = r#"{"thermal_coeff": 4, "max_power_kw": 2, "temp_init": 55,
            "temp_max": [80, 80, 80, 80], "temp_ref": [50, 52, 50, 49], "temp_set": [51, 50, 50, 60],
            "usage_event": [0, 1, 0, 0], "usage_loss_kw": [0, 0.1, 0, 0],
            "envelope_loss_kw": [0.01, 0.01, 0.01, 0.01], "power_ref_kw": [0, 0, 0, 0.2],
            "reluctance_eur": 1}"#;
        let p: WbParams = serde_json::from_str(wb).unwrap();
        assert_eq!(p.temp_limit, vec![50.0, 50.0, 50.0, 49.0]);
        assert_eq!(p.usage_event, vec![false, true, false, false]);

        let both = wb.replace(r#""temp_ref""#, r#""temp_limit": [1,1,1,1], "temp_ref""#);
        assert!(serde_json::from_str::<WbParams>(&both).is_err());
    }

    #[test]
    fn violation_paths() {
        let v = Violation {
            member: Some("u03".into()),
            field: "ev.power_ref_kw".into(),
            timestep: Some(17),
            message: "x".into(),
        };
        assert_eq!(v.path(), "members/u03/ev.power_ref_kw[17]");
    }
}
