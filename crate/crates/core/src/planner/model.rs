//! LP assembly for one day: per-member device blocks and the community layer.

use std::ops::Range;

use crate::lp::{LpProblem, Relation, VarId};
use crate::scenario::{Member, Scenario};

use super::{DayStart, DeviceRefs, MemberStart, PlannerMode};

const INF: f64 = f64::INFINITY;

/// Fixed power schedules (day-local) for some or all devices of one member.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DevicePin {
    pub charge: Option<Vec<f64>>,
    pub discharge: Option<Vec<f64>>,
    pub ev: Option<Vec<f64>>,
    pub wb: Option<Vec<f64>>,
    pub hp: Option<Vec<f64>>,
}

/// Columns of one member's device models.
#[derive(Debug, Clone)]
pub(crate) struct DeviceVars {
    pub charge: Option<Vec<VarId>>,
    pub discharge: Option<Vec<VarId>>,
    pub soc_bss: Option<Vec<VarId>>,
    pub ev: Option<Vec<VarId>>,
    pub soc_ev: Option<Vec<VarId>>,
    pub j_ev: Option<Vec<VarId>>,
    pub wb: Option<Vec<VarId>>,
    pub temp_wb: Option<Vec<VarId>>,
    pub j_wb: Option<Vec<VarId>>,
    pub hp: Option<Vec<VarId>>,
    pub temp_hp: Option<Vec<VarId>>,
    pub j_hp: Option<Vec<VarId>>,
    /// Daily discomfort total of the member.
    pub j_flex: VarId,
}

impl DeviceVars {
    /// EV + WB + HP power at local step `k`.
    pub fn flex_terms(&self, k: usize) -> Vec<(VarId, f64)> {
        [&self.ev, &self.wb, &self.hp].into_iter().flatten().map(|v| (v[k], 1.0)).collect()
    }

    /// Flexible loads plus battery charging minus discharging at local step `k`.
    pub fn controllable_terms(&self, k: usize) -> Vec<(VarId, f64)> {
        let mut terms = self.flex_terms(k);
        if let (Some(c), Some(d)) = (&self.charge, &self.discharge) {
            terms.push((c[k], 1.0));
            terms.push((d[k], -1.0));
        }
        terms
    }
}

fn pinned(pin: Option<&Vec<f64>>, k: usize) -> Option<f64> {
    pin.map(|p| p[k])
}

/// Adds the device constraints of `member` for the global steps `window`.
///
/// `tag` prefixes every column and row name. `discomfort_cost` is the objective
/// weight of the member's discomfort total (1 for all problems in the crate).
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_device_block(
    lp: &mut LpProblem,
    tag: &str,
    member: &Member,
    window: Range<usize>,
    dt: f64,
    refs: &DeviceRefs,
    start: &MemberStart,
    pin: Option<&DevicePin>,
    discomfort_cost: f64,
) -> DeviceVars {
    let n = window.len();
    let steps: Vec<usize> = window.clone().collect();
    let name = |var: &str, k: usize| format!("{var}[{tag},{k}]");
    let pin = pin.cloned().unwrap_or_default();
    let mut discomfort_terms: Vec<(VarId, f64)> = Vec::new();
    let j_flex = lp.add_var(format!("j_flex[{tag}]"), 0.0, INF, discomfort_cost);

    let mut vars = DeviceVars {
        charge: None,
        discharge: None,
        soc_bss: None,
        ev: None,
        soc_ev: None,
        j_ev: None,
        wb: None,
        temp_wb: None,
        j_wb: None,
        hp: None,
        temp_hp: None,
        j_hp: None,
        j_flex,
    };

    if let Some(b) = &member.bss {
        let power = |lp: &mut LpProblem, var: &str, pin: Option<&Vec<f64>>| -> Vec<VarId> {
            (0..n)
                .map(|k| match pinned(pin, k) {
                    Some(x) => lp.add_var(name(var, k), x, x, 0.0),
                    None => lp.add_var(name(var, k), 0.0, b.max_power_kw, 0.0),
                })
                .collect()
        };
        let cha = power(lp, "p_cha", pin.charge.as_ref());
        let dis = power(lp, "p_dis", pin.discharge.as_ref());
        let soc: Vec<VarId> =
            (0..n).map(|k| lp.add_var(name("soc_bss", k), b.soc_min, b.soc_max, 0.0)).collect();
        for k in 0..n {
            let mut row = vec![
                (soc[k], 1.0),
                (cha[k], -dt * b.efficiency / b.capacity_kwh),
                (dis[k], dt / (b.efficiency * b.capacity_kwh)),
            ];
            // The battery re-anchors to its initial SoC every day.
            let rhs = if k == 0 {
                b.soc_init
            } else {
                row.push((soc[k - 1], -1.0));
                0.0
            };
            lp.add_constraint(name("bss_dyn", k), row, Relation::Eq, rhs);
        }
        lp.add_constraint(name("bss_end", n - 1), vec![(soc[n - 1], 1.0)], Relation::Eq, b.soc_init);
        vars.charge = Some(cha);
        vars.discharge = Some(dis);
        vars.soc_bss = Some(soc);
    }

    if let Some(e) = &member.ev {
        let p: Vec<VarId> = steps
            .iter()
            .enumerate()
            .map(|(k, &t)| match pinned(pin.ev.as_ref(), k) {
                Some(x) => lp.add_var(name("p_ev", k), x, x, 0.0),
                None => {
                    let ub = if e.plugged[t] { e.max_charge_kw } else { 0.0 };
                    lp.add_var(name("p_ev", k), 0.0, ub, 0.0)
                }
            })
            .collect();
        let soc: Vec<VarId> = steps
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let lb = if e.departure[t] { e.soc_ref[t].max(0.0) } else { 0.0 };
                lp.add_var(name("soc_ev", k), lb, 1.0, 0.0)
            })
            .collect();
        for (k, &t) in steps.iter().enumerate() {
            let mut row = vec![(soc[k], 1.0), (p[k], -dt * e.efficiency / e.capacity_kwh)];
            let rhs = if e.arrival[t] {
                e.soc_arrival[t]
            } else if k == 0 {
                start.ev
            } else {
                row.push((soc[k - 1], -1.0));
                0.0
            };
            lp.add_constraint(name("ev_dyn", k), row, Relation::Eq, rhs);
        }
        let energy: f64 = refs.ev.iter().sum();
        lp.add_constraint(name("ev_total", 0), p.iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, energy);
        let j = hinge_block(lp, &name, "j_ev", &soc, &e.soc_ref[window.clone()], e.reluctance_eur);
        discomfort_terms.extend(j.iter().map(|&v| (v, 1.0)));
        vars.ev = Some(p);
        vars.soc_ev = Some(soc);
        vars.j_ev = Some(j);
    }

    if let Some(w) = &member.wb {
        let p = power_vars(lp, &name, "p_wb", n, w.max_power_kw, pin.wb.as_ref());
        let temp: Vec<VarId> = steps
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let lb = if w.usage_event[t] { w.temp_limit[t].max(0.0) } else { 0.0 };
                lp.add_var(name("temp_wb", k), lb, w.temp_max[t], 0.0)
            })
            .collect();
        let losses: Vec<f64> = steps.iter().map(|&t| w.usage_loss_kw[t] + w.envelope_loss_kw[t]).collect();
        thermal_dynamics(lp, &name, "wb_dyn", &temp, &p, 1.0, w.thermal_coeff, dt, &losses, start.wb);
        let energy: f64 = refs.wb.iter().sum();
        lp.add_constraint(name("wb_total", 0), p.iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, energy);
        let j = hinge_block(lp, &name, "j_wb", &temp, &w.temp_limit[window.clone()], w.reluctance_eur);
        discomfort_terms.extend(j.iter().map(|&v| (v, 1.0)));
        vars.wb = Some(p);
        vars.temp_wb = Some(temp);
        vars.j_wb = Some(j);
    }

    if let Some(h) = &member.hp {
        let p = power_vars(lp, &name, "p_hp", n, h.max_power_kw, pin.hp.as_ref());
        let temp: Vec<VarId> = (0..n).map(|k| lp.add_var(name("temp_hp", k), 0.0, INF, 0.0)).collect();
        let losses: Vec<f64> = steps.iter().map(|&t| h.wall_loss_kw[t]).collect();
        thermal_dynamics(lp, &name, "hp_dyn", &temp, &p, h.cop, h.thermal_coeff, dt, &losses, start.hp);
        let energy: f64 = refs.hp.iter().sum();
        lp.add_constraint(name("hp_total", 0), p.iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, energy);
        let j = hinge_block(lp, &name, "j_hp", &temp, &h.temp_limit[window.clone()], h.reluctance_eur);
        discomfort_terms.extend(j.iter().map(|&v| (v, 1.0)));
        vars.hp = Some(p);
        vars.temp_hp = Some(temp);
        vars.j_hp = Some(j);
    }

    let mut row = vec![(j_flex, 1.0)];
    row.extend(discomfort_terms.iter().map(|&(v, c)| (v, -c)));
    lp.add_constraint(format!("j_flex_def[{tag}]"), row, Relation::Eq, 0.0);
    vars
}

fn power_vars(
    lp: &mut LpProblem,
    name: &impl Fn(&str, usize) -> String,
    var: &str,
    n: usize,
    max_kw: f64,
    pin: Option<&Vec<f64>>,
) -> Vec<VarId> {
    (0..n)
        .map(|k| match pinned(pin, k) {
            Some(x) => lp.add_var(name(var, k), x, x, 0.0),
            None => lp.add_var(name(var, k), 0.0, max_kw, 0.0),
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn thermal_dynamics(
    lp: &mut LpProblem,
    name: &impl Fn(&str, usize) -> String,
    row_name: &str,
    temp: &[VarId],
    power: &[VarId],
    gain: f64,
    coeff: f64,
    dt: f64,
    losses: &[f64],
    initial: f64,
) {
    for k in 0..temp.len() {
        let mut row = vec![(temp[k], 1.0), (power[k], -dt * coeff * gain)];
        let mut rhs = -dt * coeff * losses[k];
        if k == 0 {
            rhs += initial;
        } else {
            row.push((temp[k - 1], -1.0));
        }
        lp.add_constraint(name(row_name, k), row, Relation::Eq, rhs);
    }
}

/// `j_k ≥ α·(reference_k − state_k)` with `j_k ≥ 0`.
fn hinge_block(
    lp: &mut LpProblem,
    name: &impl Fn(&str, usize) -> String,
    var: &str,
    state: &[VarId],
    reference: &[f64],
    reluctance: f64,
) -> Vec<VarId> {
    (0..state.len())
        .map(|k| {
            let j = lp.add_var(name(var, k), 0.0, INF, 0.0);
            if reluctance > 0.0 {
                lp.add_constraint(
                    name(&format!("{var}_hinge"), k),
                    vec![(j, 1.0), (state[k], reluctance)],
                    Relation::Ge,
                    reluctance * reference[k],
                );
            }
            j
        })
        .collect()
}

/// Columns of one member in the community problem.
#[derive(Debug, Clone)]
pub(crate) struct MemberVars {
    pub i_ret: Vec<VarId>,
    pub e_ret: Vec<VarId>,
    pub i_com: Vec<VarId>,
    pub e_com: Vec<VarId>,
    pub pv: Vec<VarId>,
    pub inj: Vec<VarId>,
    pub bill: VarId,
    pub devices: DeviceVars,
}

/// A day problem together with its column map.
#[derive(Debug, Clone)]
pub struct DayModel {
    pub(crate) problem: LpProblem,
    pub(crate) members: Vec<MemberVars>,
    pub(crate) window: Range<usize>,
}

impl DayModel {
    pub fn problem(&self) -> &LpProblem {
        &self.problem
    }

    pub fn into_problem(self) -> LpProblem {
        self.problem
    }
}

/// Options shared by all community-level day problems.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModelOptions {
    /// Let PV output drop below its available power.
    pub allow_curtailment: bool,
}

/// Builds the community day problem for `mode`.
///
/// `pins`, when given, fixes device schedules per member (used for settlement of a
/// schedule decided elsewhere). Flexible loads are additionally pinned to `refs` in
/// the fixed-load modes.
pub(crate) fn build_model(
    s: &Scenario,
    day: usize,
    mode: PlannerMode,
    refs: &[DeviceRefs],
    start: &DayStart,
    pins: Option<&[DevicePin]>,
    opts: ModelOptions,
) -> DayModel {
    let window = s.horizon.day_range(day);
    let dt = s.horizon.dt_hours;
    let n = window.len();
    let prices = &s.prices;
    let mut lp = LpProblem::new();
    let mut members = Vec::with_capacity(s.members.len());

    for (u, m) in s.members.iter().enumerate() {
        let tag = u.to_string();
        let name = |var: &str, k: usize| format!("{var}[{tag},{k}]");
        let no_sharing = mode.forbids_sharing();

        let mut pin = pins.map(|p| p[u].clone()).unwrap_or_default();
        if mode.pins_flexible_loads() {
            pin.ev = m.ev.as_ref().map(|_| refs[u].ev.clone());
            pin.wb = m.wb.as_ref().map(|_| refs[u].wb.clone());
            pin.hp = m.hp.as_ref().map(|_| refs[u].hp.clone());
        }
        let devices = add_device_block(&mut lp, &tag, m, window.clone(), dt, &refs[u], &start.members[u], Some(&pin), 1.0);

        let nonneg = |lp: &mut LpProblem, var: &str, ub: f64| -> Vec<VarId> {
            (0..n).map(|k| lp.add_var(name(var, k), 0.0, ub, 0.0)).collect()
        };
        let i_ret = nonneg(&mut lp, "i_ret", INF);
        let e_ret = nonneg(&mut lp, "e_ret", INF);
        let com_ub = if no_sharing { 0.0 } else { INF };
        let i_com = nonneg(&mut lp, "i_com", com_ub);
        let e_com = nonneg(&mut lp, "e_com", com_ub);
        let pv: Vec<VarId> = window
            .clone()
            .enumerate()
            .map(|(k, t)| {
                let avail = m.pv_max_kw[t];
                let lb = if opts.allow_curtailment { 0.0 } else { avail };
                lp.add_var(name("p_pv", k), lb, avail, 0.0)
            })
            .collect();
        let inj: Vec<VarId> = (0..n).map(|k| lp.add_var(name("p_inj", k), -INF, INF, 0.0)).collect();
        let flex: Vec<VarId> = (0..n).map(|k| lp.add_var(name("p_flex", k), 0.0, INF, 0.0)).collect();

        for (k, t) in window.clone().enumerate() {
            let mut row = vec![(flex[k], 1.0)];
            row.extend(devices.flex_terms(k).into_iter().map(|(v, c)| (v, -c)));
            lp.add_constraint(name("flex_def", k), row, Relation::Eq, 0.0);

            // Physical balance at the connection point.
            let mut row = vec![(inj[k], 1.0), (pv[k], -1.0), (flex[k], 1.0)];
            if let (Some(c), Some(d)) = (&devices.charge, &devices.discharge) {
                row.push((c[k], 1.0));
                row.push((d[k], -1.0));
            }
            lp.add_constraint(name("phys_bal", k), row, Relation::Eq, -m.fixed_load_kw[t]);

            // Virtual balance: the injection is split between retailer and community.
            let row = vec![(inj[k], 1.0), (e_ret[k], -1.0), (e_com[k], -1.0), (i_ret[k], 1.0), (i_com[k], 1.0)];
            lp.add_constraint(name("virt_bal", k), row, Relation::Eq, 0.0);
        }

        let bill = lp.add_var(format!("bill[{tag}]"), -INF, INF, 1.0);
        let mut row = vec![(bill, 1.0)];
        for (k, t) in window.clone().enumerate() {
            row.push((i_ret[k], -dt * prices.import_price[t]));
            row.push((e_ret[k], dt * prices.export_price[t]));
            if !no_sharing {
                row.push((i_com[k], -dt * prices.community_fee[t]));
                row.push((e_com[k], -dt * prices.community_fee[t]));
            }
        }
        row.retain(|&(_, c)| c != 0.0);
        lp.add_constraint(format!("bill_def[{tag}]"), row, Relation::Eq, 0.0);

        members.push(MemberVars { i_ret, e_ret, i_com, e_com, pv, inj, bill, devices });
    }

    if !mode.forbids_sharing() {
        for k in 0..n {
            let mut row: Vec<(VarId, f64)> = members.iter().map(|mv| (mv.e_com[k], 1.0)).collect();
            row.extend(members.iter().map(|mv| (mv.i_com[k], -1.0)));
            if !row.is_empty() {
                lp.add_constraint(format!("com_bal[{k}]"), row, Relation::Eq, 0.0);
            }
        }
    }

    DayModel { problem: lp, members, window }
}
