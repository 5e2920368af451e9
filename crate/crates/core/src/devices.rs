//! Forward simulation of the equivalent-battery device models.
//!
//! These are plain recurrences over power schedules. The planners never call them to
//! build a model; they exist to re-derive states and discomfort from a schedule, so an
//! LP solution can be checked against arithmetic that shares no code with the LP.
//!
//! Thermal coefficients are in °C/kWh and multiply the net heat flow.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::scenario::{BssParams, EvParams, HpParams, Scenario, Violation, WbParams};

/// State after each timestep: SoC fraction for BSS/EV, °C for WB/HP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrajectory(pub Vec<f64>);

impl StateTrajectory {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.0.last().copied()
    }
}

/// Per-timestep hinge penalty in € and its sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discomfort {
    pub per_step: Vec<f64>,
    pub total: f64,
}

impl Discomfort {
    fn from_steps(per_step: Vec<f64>) -> Self {
        let total = per_step.iter().sum();
        Self { per_step, total }
    }
}

/// `s_t = s_{t-1} + dt·(η·charge_t − discharge_t/η)/C`, starting from `soc_init`.
pub fn simulate_bss(p: &BssParams, charge_kw: &[f64], discharge_kw: &[f64], dt: f64) -> StateTrajectory {
    assert_eq!(charge_kw.len(), discharge_kw.len(), "charge/discharge length mismatch");
    let mut s = p.soc_init;
    let out = charge_kw
        .iter()
        .zip(discharge_kw)
        .map(|(&c, &d)| {
            s += dt * (p.efficiency * c - d / p.efficiency) / p.capacity_kwh;
            s
        })
        .collect();
    StateTrajectory(out)
}

/// EV state from `soc_init` over the first `power_kw.len()` timesteps.
pub fn simulate_ev(p: &EvParams, power_kw: &[f64], dt: f64) -> StateTrajectory {
    simulate_ev_window(p, 0..power_kw.len(), power_kw, dt, p.soc_init)
}

/// EV state over the global timesteps `window`, starting from `initial`.
///
/// On an arrival step the previous state is replaced by the arrival SoC before the
/// step's charging is added.
pub fn simulate_ev_window(
    p: &EvParams,
    window: Range<usize>,
    power_kw: &[f64],
    dt: f64,
    initial: f64,
) -> StateTrajectory {
    assert_eq!(window.len(), power_kw.len(), "window/schedule length mismatch");
    let mut s = initial;
    let out = window
        .zip(power_kw)
        .map(|(t, &pw)| {
            if p.arrival[t] {
                s = p.soc_arrival[t];
            }
            s += dt * p.efficiency * pw / p.capacity_kwh;
            s
        })
        .collect();
    StateTrajectory(out)
}

pub fn simulate_wb(p: &WbParams, power_kw: &[f64], dt: f64) -> StateTrajectory {
    simulate_wb_window(p, 0..power_kw.len(), power_kw, dt, p.temp_init)
}

/// `T_t = T_{t-1} + dt·(P_t − usage_t − envelope_t)·coeff`.
pub fn simulate_wb_window(
    p: &WbParams,
    window: Range<usize>,
    power_kw: &[f64],
    dt: f64,
    initial: f64,
) -> StateTrajectory {
    assert_eq!(window.len(), power_kw.len(), "window/schedule length mismatch");
    let mut temp = initial;
    let out = window
        .zip(power_kw)
        .map(|(t, &pw)| {
            temp += dt * (pw - p.usage_loss_kw[t] - p.envelope_loss_kw[t]) * p.thermal_coeff;
            temp
        })
        .collect();
    StateTrajectory(out)
}

pub fn simulate_hp(p: &HpParams, power_kw: &[f64], dt: f64) -> StateTrajectory {
    simulate_hp_window(p, 0..power_kw.len(), power_kw, dt, p.temp_init)
}

/// `T_t = T_{t-1} + dt·(COP·P_t − wall_loss_t)·coeff`.
pub fn simulate_hp_window(
    p: &HpParams,
    window: Range<usize>,
    power_kw: &[f64],
    dt: f64,
    initial: f64,
) -> StateTrajectory {
    assert_eq!(window.len(), power_kw.len(), "window/schedule length mismatch");
    let mut temp = initial;
    let out = window
        .zip(power_kw)
        .map(|(t, &pw)| {
            temp += dt * (p.cop * pw - p.wall_loss_kw[t]) * p.thermal_coeff;
            temp
        })
        .collect();
    StateTrajectory(out)
}

/// `α·max(0, soc_ref_t − s_t)` per step.
pub fn discomfort_ev(traj: &StateTrajectory, soc_ref: &[f64], reluctance: f64) -> Discomfort {
    hinge(traj, soc_ref, reluctance)
}

/// `α·max(0, limit_t − T_t)` per step.
pub fn discomfort_thermal(traj: &StateTrajectory, temp_limit: &[f64], reluctance: f64) -> Discomfort {
    hinge(traj, temp_limit, reluctance)
}

fn hinge(traj: &StateTrajectory, reference: &[f64], reluctance: f64) -> Discomfort {
    assert_eq!(traj.len(), reference.len(), "trajectory/reference length mismatch");
    Discomfort::from_steps(
        traj.0.iter().zip(reference).map(|(s, r)| reluctance * (r - s).max(0.0)).collect(),
    )
}

/// Hard-constraint violations of the reference profiles themselves, simulated over
/// the whole horizon.
///
/// A scenario whose reference schedule breaks a hard device bound has no feasible
/// pinned-load plan, so generators and the CLI use this as a pre-flight check.
pub fn reference_violations(s: &Scenario) -> Vec<Violation> {
    const TOL: f64 = 1e-9;
    let dt = s.horizon.dt_hours;
    let mut out = Vec::new();
    let mut push = |id: &str, field: &str, t: usize, message: &str| {
        out.push(Violation {
            member: Some(id.to_string()),
            field: field.to_string(),
            timestep: Some(t),
            message: message.to_string(),
        })
    };
    for m in &s.members {
        if let Some(ev) = &m.ev {
            let traj = simulate_ev(ev, &ev.power_ref_kw, dt);
            for (t, &x) in traj.values().iter().enumerate() {
                if !(-TOL..=1.0 + TOL).contains(&x) {
                    push(&m.id, "ev.power_ref_kw", t, "reference SoC leaves [0,1]");
                }
                if ev.departure[t] && x < ev.soc_ref[t] - TOL {
                    push(&m.id, "ev.power_ref_kw", t, "reference misses departure target");
                }
            }
        }
        if let Some(wb) = &m.wb {
            let traj = simulate_wb(wb, &wb.power_ref_kw, dt);
            for (t, &x) in traj.values().iter().enumerate() {
                if x > wb.temp_max[t] + TOL {
                    push(&m.id, "wb.power_ref_kw", t, "reference temperature above temp_max");
                }
                if wb.usage_event[t] && x < wb.temp_limit[t] - TOL {
                    push(&m.id, "wb.power_ref_kw", t, "reference temperature below limit at usage");
                }
                if x < -TOL {
                    push(&m.id, "wb.power_ref_kw", t, "reference temperature negative");
                }
            }
        }
        if let Some(hp) = &m.hp {
            let traj = simulate_hp(hp, &hp.power_ref_kw, dt);
            for (t, &x) in traj.values().iter().enumerate() {
                if x < -TOL {
                    push(&m.id, "hp.power_ref_kw", t, "reference temperature negative");
                }
            }
        }
    }
    out
}
