//! Independent checks of a day schedule.
//!
//! Nothing here looks at an LP. Balances are recomputed with plain arithmetic, device
//! states are re-simulated with [`crate::devices`], and bills with
//! [`crate::billing::compute_bill`].

use crate::billing::{compute_bill, Exchanges};
use crate::devices::{self, StateTrajectory};
use crate::planner::{DaySchedule, DayStart, MemberDay};
use crate::scenario::Scenario;

/// Absolute tolerance for balances, states, discomfort and bills.
pub const VERIFY_TOL: f64 = 1e-6;

struct Checker<'a> {
    issues: Vec<String>,
    day: usize,
    member: &'a str,
}

impl Checker<'_> {
    fn near(&mut self, what: &str, k: usize, got: f64, want: f64) {
        if !((got - want).abs() <= VERIFY_TOL) {
            self.issues.push(format!("day {} member {} {what}[{k}]: {got} vs {want}", self.day, self.member));
        }
    }

    fn within(&mut self, what: &str, k: usize, x: f64, lo: f64, hi: f64) {
        if !(x >= lo - VERIFY_TOL && x <= hi + VERIFY_TOL) {
            self.issues.push(format!(
                "day {} member {} {what}[{k}] = {x} outside [{lo}, {hi}]",
                self.day, self.member
            ));
        }
    }

    fn states(&mut self, what: &str, lp: Option<&Vec<f64>>, sim: &StateTrajectory) {
        match lp {
            Some(v) => {
                for (k, (a, b)) in v.iter().zip(sim.values()).enumerate() {
                    self.near(what, k, *a, *b);
                }
            }
            None => self.issues.push(format!("day {} member {} has no {what} series", self.day, self.member)),
        }
    }

    fn hinge(&mut self, what: &str, lp: Option<&Vec<f64>>, sim: &[f64]) {
        if let Some(v) = lp {
            for (k, (a, b)) in v.iter().zip(sim).enumerate() {
                self.near(what, k, *a, *b);
            }
        }
    }
}

/// Every issue found in `sched`, given the device states it started from.
///
/// An empty list means: balances hold, device energies are conserved, re-simulated
/// states match and respect their bounds, and the stored bills and discomforts match
/// recomputed ones.
pub fn verify_day(s: &Scenario, sched: &DaySchedule, start: &DayStart) -> Vec<String> {
    let w = s.horizon.day_range(sched.day);
    let n = w.len();
    let dt = s.horizon.dt_hours;
    let prices = s.prices.slice(w.clone());
    let mut all = Vec::new();
    if sched.members.len() != s.members.len() {
        return vec![format!("{} members scheduled, {} in scenario", sched.members.len(), s.members.len())];
    }

    for k in 0..n {
        let exp: f64 = sched.members.iter().map(|m| m.e_com[k]).sum();
        let imp: f64 = sched.members.iter().map(|m| m.i_com[k]).sum();
        if !((exp - imp).abs() <= VERIFY_TOL) {
            all.push(format!("day {} community balance [{k}]: export {exp} vs import {imp}", sched.day));
        }
    }

    for ((m, d), st) in s.members.iter().zip(&sched.members).zip(&start.members) {
        let mut c = Checker { issues: Vec::new(), day: sched.day, member: &m.id };
        let series = [
            &d.i_ret, &d.e_ret, &d.i_com, &d.e_com, &d.pv, &d.charge, &d.discharge, &d.ev, &d.wb, &d.hp, &d.inj,
        ];
        if series.iter().any(|v| v.len() != n) {
            all.push(format!("day {} member {}: series length differs from {n}", sched.day, m.id));
            continue;
        }
        for (k, t) in w.clone().enumerate() {
            let flex = d.ev[k] + d.wb[k] + d.hp[k];
            let phys = d.pv[k] + d.discharge[k] - m.fixed_load_kw[t] - flex - d.charge[k];
            c.near("physical balance", k, d.inj[k], phys);
            let virt = d.e_ret[k] + d.e_com[k] - d.i_ret[k] - d.i_com[k];
            c.near("virtual balance", k, d.inj[k], virt);
            for (name, x) in [("i_ret", d.i_ret[k]), ("e_ret", d.e_ret[k]), ("i_com", d.i_com[k]), ("e_com", d.e_com[k])]
            {
                c.within(name, k, x, 0.0, f64::INFINITY);
            }
            c.within("pv", k, d.pv[k], 0.0, m.pv_max_kw[t]);
        }

        let conserve = |c: &mut Checker, name: &str, p: &[f64], r: &[f64]| {
            c.near(&format!("{name} daily energy"), 0, p.iter().sum::<f64>(), r.iter().sum::<f64>());
        };

        if let Some(b) = &m.bss {
            for k in 0..n {
                c.within("charge", k, d.charge[k], 0.0, b.max_power_kw);
                c.within("discharge", k, d.discharge[k], 0.0, b.max_power_kw);
            }
            let sim = devices::simulate_bss(b, &d.charge, &d.discharge, dt);
            c.states("soc_bss", d.soc_bss.as_ref(), &sim);
            for (k, &x) in sim.values().iter().enumerate() {
                c.within("soc_bss", k, x, b.soc_min, b.soc_max);
            }
            c.near("soc_bss end", n - 1, sim.last().unwrap_or(b.soc_init), b.soc_init);
        }
        if let Some(e) = &m.ev {
            for (k, t) in w.clone().enumerate() {
                let ub = if e.plugged[t] { e.max_charge_kw } else { 0.0 };
                c.within("ev", k, d.ev[k], 0.0, ub);
            }
            conserve(&mut c, "ev", &d.ev, &d.refs.ev);
            let sim = devices::simulate_ev_window(e, w.clone(), &d.ev, dt, st.ev);
            c.states("soc_ev", d.soc_ev.as_ref(), &sim);
            for (k, t) in w.clone().enumerate() {
                let x = sim.values()[k];
                let lo = if e.departure[t] { e.soc_ref[t] } else { 0.0 };
                c.within("soc_ev", k, x, lo.max(0.0), 1.0);
            }
            let j = devices::discomfort_ev(&sim, &e.soc_ref[w.clone()], e.reluctance_eur);
            c.hinge("j_ev", d.j_ev.as_ref(), &j.per_step);
        }
        if let Some(h) = &m.wb {
            for k in 0..n {
                c.within("wb", k, d.wb[k], 0.0, h.max_power_kw);
            }
            conserve(&mut c, "wb", &d.wb, &d.refs.wb);
            let sim = devices::simulate_wb_window(h, w.clone(), &d.wb, dt, st.wb);
            c.states("temp_wb", d.temp_wb.as_ref(), &sim);
            for (k, t) in w.clone().enumerate() {
                let lo = if h.usage_event[t] { h.temp_limit[t].max(0.0) } else { 0.0 };
                c.within("temp_wb", k, sim.values()[k], lo, h.temp_max[t]);
            }
            let j = devices::discomfort_thermal(&sim, &h.temp_limit[w.clone()], h.reluctance_eur);
            c.hinge("j_wb", d.j_wb.as_ref(), &j.per_step);
        }
        if let Some(h) = &m.hp {
            for k in 0..n {
                c.within("hp", k, d.hp[k], 0.0, h.max_power_kw);
            }
            conserve(&mut c, "hp", &d.hp, &d.refs.hp);
            let sim = devices::simulate_hp_window(h, w.clone(), &d.hp, dt, st.hp);
            c.states("temp_hp", d.temp_hp.as_ref(), &sim);
            for (k, &x) in sim.values().iter().enumerate() {
                c.within("temp_hp", k, x, 0.0, f64::INFINITY);
            }
            let j = devices::discomfort_thermal(&sim, &h.temp_limit[w.clone()], h.reluctance_eur);
            c.hinge("j_hp", d.j_hp.as_ref(), &j.per_step);
        }

        let total_j = MemberDay::discomfort_of(&d.j_ev) + MemberDay::discomfort_of(&d.j_wb) + MemberDay::discomfort_of(&d.j_hp);
        c.near("discomfort total", 0, d.discomfort, total_j);
        match compute_bill(&m.id, Exchanges::of(d), &prices, dt) {
            Ok(b) => c.near("bill", 0, d.bill, b.total),
            Err(e) => c.issues.push(e.to_string()),
        }
        all.extend(c.issues);
    }
    all
}

/// Checks consecutive days, starting each from the states the previous one ended in.
pub fn verify_run(s: &Scenario, days: &[DaySchedule]) -> Vec<String> {
    let mut start = DayStart::initial(s);
    let mut issues = Vec::new();
    for d in days {
        issues.extend(verify_day(s, d, &start));
        start = d.end_state(&start);
    }
    issues
}
