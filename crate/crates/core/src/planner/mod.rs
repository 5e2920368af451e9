//! Centralized day-ahead planning: the community problem and its benchmark variants.

mod model;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices;
use crate::lp::{Backend, LpProblem, LpSolution, LpStatus, VarId};
use crate::scenario::Scenario;

pub use model::{DayModel, DevicePin, ModelOptions};
pub(crate) use model::{add_device_block, build_model, DeviceVars};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlannerMode {
    SoloFix,
    SoloFlex,
    ECFix,
    ECFlex,
}

impl PlannerMode {
    pub const ALL: [PlannerMode; 4] =
        [PlannerMode::SoloFix, PlannerMode::SoloFlex, PlannerMode::ECFix, PlannerMode::ECFlex];

    /// No community exchanges.
    pub fn forbids_sharing(self) -> bool {
        matches!(self, PlannerMode::SoloFix | PlannerMode::SoloFlex)
    }

    /// EV, WB and HP follow their reference powers.
    pub fn pins_flexible_loads(self) -> bool {
        matches!(self, PlannerMode::SoloFix | PlannerMode::ECFix)
    }

    pub fn name(self) -> &'static str {
        match self {
            PlannerMode::SoloFix => "SoloFix",
            PlannerMode::SoloFlex => "SoloFlex",
            PlannerMode::ECFix => "ECFix",
            PlannerMode::ECFlex => "ECFlex",
        }
    }
}

impl fmt::Display for PlannerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown planner mode `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("{stage}, day {day}: solver returned {status}")]
    Solve { stage: String, day: usize, status: LpStatus },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("day {day} is outside the {days}-day horizon")]
    DayOutOfRange { day: usize, days: usize },
}

/// Day-local reference powers (kW) of one member's flexible loads.
///
/// A series is empty when the member does not own the device.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceRefs {
    pub ev: Vec<f64>,
    pub wb: Vec<f64>,
    pub hp: Vec<f64>,
}

impl DeviceRefs {
    /// The scenario's reference powers for `day`, one entry per member.
    pub fn from_scenario(s: &Scenario, day: usize) -> Vec<DeviceRefs> {
        let w = s.horizon.day_range(day);
        s.members
            .iter()
            .map(|m| DeviceRefs {
                ev: m.ev.as_ref().map(|e| e.power_ref_kw[w.clone()].to_vec()).unwrap_or_default(),
                wb: m.wb.as_ref().map(|e| e.power_ref_kw[w.clone()].to_vec()).unwrap_or_default(),
                hp: m.hp.as_ref().map(|e| e.power_ref_kw[w.clone()].to_vec()).unwrap_or_default(),
            })
            .collect()
    }

    /// EV + WB + HP reference at local step `k`.
    pub fn flex_at(&self, k: usize) -> f64 {
        [&self.ev, &self.wb, &self.hp].iter().filter_map(|v| v.get(k)).sum()
    }
}

/// Device states entering a day. Unused fields are ignored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MemberStart {
    pub ev: f64,
    pub wb: f64,
    pub hp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayStart {
    pub members: Vec<MemberStart>,
}

impl DayStart {
    /// The scenario's initial states.
    pub fn initial(s: &Scenario) -> DayStart {
        DayStart {
            members: s
                .members
                .iter()
                .map(|m| MemberStart {
                    ev: m.ev.as_ref().map_or(0.0, |e| e.soc_init),
                    wb: m.wb.as_ref().map_or(0.0, |e| e.temp_init),
                    hp: m.hp.as_ref().map_or(0.0, |e| e.temp_init),
                })
                .collect(),
        }
    }

    /// States at the start of `day` when every earlier day followed the references.
    ///
    /// Thermal end-of-day states do not depend on the schedule (daily energy is
    /// conserved), so this matches any feasible history for WB and HP.
    pub fn from_references(s: &Scenario, day: usize) -> DayStart {
        let mut start = DayStart::initial(s);
        if day == 0 {
            return start;
        }
        let w = 0..s.horizon.day_range(day).start;
        let dt = s.horizon.dt_hours;
        for (m, st) in s.members.iter().zip(&mut start.members) {
            if let Some(e) = &m.ev {
                let tr = devices::simulate_ev_window(e, w.clone(), &e.power_ref_kw[w.clone()], dt, e.soc_init);
                st.ev = tr.last().unwrap_or(e.soc_init);
            }
            if let Some(e) = &m.wb {
                let tr = devices::simulate_wb_window(e, w.clone(), &e.power_ref_kw[w.clone()], dt, e.temp_init);
                st.wb = tr.last().unwrap_or(e.temp_init);
            }
            if let Some(e) = &m.hp {
                let tr = devices::simulate_hp_window(e, w.clone(), &e.power_ref_kw[w.clone()], dt, e.temp_init);
                st.hp = tr.last().unwrap_or(e.temp_init);
            }
        }
        start
    }
}

/// One member's day: exchanges, device powers, states and discomfort.
///
/// Power series of devices the member does not own are all zero; their state and
/// discomfort series are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberDay {
    pub id: String,
    pub i_ret: Vec<f64>,
    pub e_ret: Vec<f64>,
    pub i_com: Vec<f64>,
    pub e_com: Vec<f64>,
    pub pv: Vec<f64>,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    pub ev: Vec<f64>,
    pub wb: Vec<f64>,
    pub hp: Vec<f64>,
    pub inj: Vec<f64>,
    pub soc_bss: Option<Vec<f64>>,
    pub soc_ev: Option<Vec<f64>>,
    pub temp_wb: Option<Vec<f64>>,
    pub temp_hp: Option<Vec<f64>>,
    pub j_ev: Option<Vec<f64>>,
    pub j_wb: Option<Vec<f64>>,
    pub j_hp: Option<Vec<f64>>,
    /// B_u in €.
    pub bill: f64,
    /// J^flex_u in €.
    pub discomfort: f64,
    /// Reference powers this schedule was planned against.
    pub refs: DeviceRefs,
    /// Flexibility reward earned in the decentralized loop (€); zero otherwise.
    pub flex_revenue: f64,
}

impl MemberDay {
    pub fn discomfort_of(series: &Option<Vec<f64>>) -> f64 {
        series.as_ref().map_or(0.0, |v| v.iter().sum())
    }

    /// EV + WB + HP + charge − discharge at local step `k`.
    pub fn controllable_at(&self, k: usize) -> f64 {
        self.ev[k] + self.wb[k] + self.hp[k] + self.charge[k] - self.discharge[k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySchedule {
    pub day: usize,
    pub dt_hours: f64,
    pub members: Vec<MemberDay>,
    pub total_bill: f64,
    pub total_discomfort: f64,
    pub objective: f64,
}

impl DaySchedule {
    pub fn steps(&self) -> usize {
        self.members.first().map_or(0, |m| m.i_ret.len())
    }

    /// Device states at the end of the day, used to start the next one.
    pub fn end_state(&self, previous: &DayStart) -> DayStart {
        let members = self
            .members
            .iter()
            .zip(&previous.members)
            .map(|(m, prev)| {
                let last = |v: &Option<Vec<f64>>, fallback: f64| {
                    v.as_ref().and_then(|x| x.last().copied()).unwrap_or(fallback)
                };
                MemberStart {
                    ev: last(&m.soc_ev, prev.ev),
                    wb: last(&m.temp_wb, prev.wb),
                    hp: last(&m.temp_hp, prev.hp),
                }
            })
            .collect();
        DayStart { members }
    }
}

/// Settings shared by every centralized solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlanOptions {
    pub model: ModelOptions,
    pub backend: Backend,
}

fn check_inputs(s: &Scenario, day: usize, refs: &[DeviceRefs], start: &DayStart) -> Result<(), PlanError> {
    check_day(s, day)?;
    let n = s.horizon.steps_per_day;
    if refs.len() != s.members.len() || start.members.len() != s.members.len() {
        return Err(PlanError::Dimension(format!(
            "{} members, {} reference sets, {} start states",
            s.members.len(),
            refs.len(),
            start.members.len()
        )));
    }
    for (m, r) in s.members.iter().zip(refs) {
        for (name, owned, series) in
            [("ev", m.ev.is_some(), &r.ev), ("wb", m.wb.is_some(), &r.wb), ("hp", m.hp.is_some(), &r.hp)]
        {
            let want = if owned { n } else { 0 };
            if series.len() != want {
                return Err(PlanError::Dimension(format!(
                    "member {}: {name} reference has {} entries, expected {want}",
                    m.id,
                    series.len()
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_day(s: &Scenario, day: usize) -> Result<(), PlanError> {
    if day >= s.horizon.num_days {
        return Err(PlanError::DayOutOfRange { day, days: s.horizon.num_days });
    }
    Ok(())
}

/// The community day problem for `mode`, starting from reference-consistent states.
///
/// `refs` defaults to the scenario's reference powers.
pub fn build_day_problem(
    s: &Scenario,
    day: usize,
    mode: PlannerMode,
    refs: Option<&[DeviceRefs]>,
) -> Result<LpProblem, PlanError> {
    check_day(s, day)?;
    let default_refs;
    let refs = match refs {
        Some(r) => r,
        None => {
            default_refs = DeviceRefs::from_scenario(s, day);
            &default_refs
        }
    };
    let start = DayStart::from_references(s, day);
    check_inputs(s, day, refs, &start)?;
    Ok(build_model(s, day, mode, refs, &start, None, ModelOptions::default()).into_problem())
}

/// Solves one day of `mode` with explicit references, start states and pins.
#[allow(clippy::too_many_arguments)]
pub fn solve_day(
    s: &Scenario,
    day: usize,
    mode: PlannerMode,
    refs: &[DeviceRefs],
    start: &DayStart,
    pins: Option<&[DevicePin]>,
    opts: PlanOptions,
    stage: &str,
) -> Result<DaySchedule, PlanError> {
    check_inputs(s, day, refs, start)?;
    let model = build_model(s, day, mode, refs, start, pins, opts.model);
    let sol = opts.backend.solve(&model.problem);
    if !sol.is_optimal() {
        return Err(PlanError::Solve { stage: stage.to_string(), day, status: sol.status });
    }
    Ok(extract(s, day, &model, &sol, refs))
}

/// Solves `mode` for one day with the scenario's references and states.
pub fn solve_centralized(s: &Scenario, day: usize, mode: PlannerMode) -> Result<DaySchedule, PlanError> {
    check_day(s, day)?;
    let refs = DeviceRefs::from_scenario(s, day);
    let start = DayStart::from_references(s, day);
    let opts = PlanOptions { backend: Backend::from_env().unwrap_or_default(), ..Default::default() };
    solve_day(s, day, mode, &refs, &start, None, opts, mode.name())
}

/// SoloFlex flexible-load powers of `day`, to be used as new references.
///
/// Discomfort references (SoC targets, temperature limits) are left unchanged.
pub fn prioritize_self_consumption(s: &Scenario, day: usize) -> Result<Vec<DeviceRefs>, PlanError> {
    let sched = solve_centralized(s, day, PlannerMode::SoloFlex)?;
    Ok(prioritized_refs(s, &sched))
}

pub(crate) fn prioritized_refs(s: &Scenario, soloflex: &DaySchedule) -> Vec<DeviceRefs> {
    s.members
        .iter()
        .zip(&soloflex.members)
        .map(|(m, d)| DeviceRefs {
            ev: if m.ev.is_some() { d.ev.clone() } else { Vec::new() },
            wb: if m.wb.is_some() { d.wb.clone() } else { Vec::new() },
            hp: if m.hp.is_some() { d.hp.clone() } else { Vec::new() },
        })
        .collect()
}

/// Runs `mode` over the whole horizon, carrying EV and thermal states across days.
pub fn run_centralized(s: &Scenario, mode: PlannerMode, opts: PlanOptions) -> Result<Vec<DaySchedule>, PlanError> {
    let mut start = DayStart::initial(s);
    let mut out = Vec::with_capacity(s.horizon.num_days);
    for day in 0..s.horizon.num_days {
        let sched = solve_centralized_from(s, day, mode, &start, opts)?;
        start = sched.end_state(&start);
        out.push(sched);
    }
    Ok(out)
}

/// One day of `mode` from the given start states.
pub fn solve_centralized_from(
    s: &Scenario,
    day: usize,
    mode: PlannerMode,
    start: &DayStart,
    opts: PlanOptions,
) -> Result<DaySchedule, PlanError> {
    check_day(s, day)?;
    let refs = DeviceRefs::from_scenario(s, day);
    solve_day(s, day, mode, &refs, start, None, opts, mode.name())
}

fn values(sol: &LpSolution, vars: &[VarId]) -> Vec<f64> {
    vars.iter().map(|&v| sol.value(v)).collect()
}

fn opt_values(sol: &LpSolution, vars: &Option<Vec<VarId>>) -> Option<Vec<f64>> {
    vars.as_ref().map(|v| values(sol, v))
}

fn extract(s: &Scenario, day: usize, model: &DayModel, sol: &LpSolution, refs: &[DeviceRefs]) -> DaySchedule {
    let n = model.window.len();
    let zeros = || vec![0.0; n];
    let members: Vec<MemberDay> = model
        .members
        .iter()
        .zip(&s.members)
        .zip(refs)
        .map(|((mv, m), r)| {
            let d = &mv.devices;
            MemberDay {
                id: m.id.clone(),
                i_ret: values(sol, &mv.i_ret),
                e_ret: values(sol, &mv.e_ret),
                i_com: values(sol, &mv.i_com),
                e_com: values(sol, &mv.e_com),
                pv: values(sol, &mv.pv),
                charge: opt_values(sol, &d.charge).unwrap_or_else(zeros),
                discharge: opt_values(sol, &d.discharge).unwrap_or_else(zeros),
                ev: opt_values(sol, &d.ev).unwrap_or_else(zeros),
                wb: opt_values(sol, &d.wb).unwrap_or_else(zeros),
                hp: opt_values(sol, &d.hp).unwrap_or_else(zeros),
                inj: values(sol, &mv.inj),
                soc_bss: opt_values(sol, &d.soc_bss),
                soc_ev: opt_values(sol, &d.soc_ev),
                temp_wb: opt_values(sol, &d.temp_wb),
                temp_hp: opt_values(sol, &d.temp_hp),
                j_ev: opt_values(sol, &d.j_ev),
                j_wb: opt_values(sol, &d.j_wb),
                j_hp: opt_values(sol, &d.j_hp),
                bill: sol.value(mv.bill),
                discomfort: sol.value(d.j_flex),
                refs: r.clone(),
                flex_revenue: 0.0,
            }
        })
        .collect();
    let total_bill = members.iter().map(|m| m.bill).sum();
    let total_discomfort = members.iter().map(|m| m.discomfort).sum();
    DaySchedule {
        day,
        dt_hours: s.horizon.dt_hours,
        members,
        total_bill,
        total_discomfort,
        objective: sol.objective,
    }
}
