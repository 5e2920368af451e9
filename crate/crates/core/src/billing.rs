//! Bills, the activation reward, per-member benefits and cross-mode summaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{DaySchedule, MemberDay};
use crate::scenario::Prices;

/// Rewards at or below this (€/kWh) are rejected.
pub const MIN_ACTIVATION_REWARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BillingError {
    #[error("series length mismatch: {0}")]
    Length(String),
    #[error("non-positive activation reward {value} at timestep {timestep}")]
    NonPositiveReward { timestep: usize, value: f64 },
    #[error("mode `{0}` not present in results")]
    MissingMode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bill {
    pub member: String,
    pub retailer_cost: f64,
    pub retailer_revenue: f64,
    pub community_fees: f64,
    pub total: f64,
}

/// Retailer and community exchanges of one member, in kW per timestep.
#[derive(Debug, Clone, Copy)]
pub struct Exchanges<'a> {
    pub i_ret: &'a [f64],
    pub e_ret: &'a [f64],
    pub i_com: &'a [f64],
    pub e_com: &'a [f64],
}

impl<'a> Exchanges<'a> {
    pub fn of(m: &'a MemberDay) -> Self {
        Exchanges { i_ret: &m.i_ret, e_ret: &m.e_ret, i_com: &m.i_com, e_com: &m.e_com }
    }
}

/// `B = dt·Σ(π^i·i_ret − π^e·e_ret + γ·(i_com + e_com))`; `prices` aligned with the series.
pub fn compute_bill(member: &str, ex: Exchanges<'_>, prices: &Prices, dt: f64) -> Result<Bill, BillingError> {
    let n = ex.i_ret.len();
    let lens = [
        ex.e_ret.len(),
        ex.i_com.len(),
        ex.e_com.len(),
        prices.import_price.len(),
        prices.export_price.len(),
        prices.community_fee.len(),
    ];
    if lens.iter().any(|&l| l != n) {
        return Err(BillingError::Length(format!("expected {n} entries, got {lens:?}")));
    }
    let mut cost = 0.0;
    let mut revenue = 0.0;
    let mut fees = 0.0;
    for t in 0..n {
        cost += dt * prices.import_price[t] * ex.i_ret[t];
        revenue += dt * prices.export_price[t] * ex.e_ret[t];
        fees += dt * prices.community_fee[t] * (ex.i_com[t] + ex.e_com[t]);
    }
    Ok(Bill {
        member: member.to_string(),
        retailer_cost: cost,
        retailer_revenue: revenue,
        community_fees: fees,
        total: cost - revenue + fees,
    })
}

/// Bills of every member of a day schedule.
pub fn day_bills(sched: &DaySchedule, prices: &Prices) -> Result<Vec<Bill>, BillingError> {
    sched.members.iter().map(|m| compute_bill(&m.id, Exchanges::of(m), prices, sched.dt_hours)).collect()
}

/// `π^act = π^i − π^e − 2γ` per timestep.
///
/// Results are snapped to a 1e-12 €/kWh grid so that tariffs quoted in decimals give
/// the decimal answer (0.4, 0.1, 0.01 → 0.28 exactly).
pub fn activation_price(prices: &Prices) -> Result<Vec<f64>, BillingError> {
    let n = prices.import_price.len();
    if prices.export_price.len() != n || prices.community_fee.len() != n {
        return Err(BillingError::Length("price series differ in length".into()));
    }
    (0..n)
        .map(|t| {
            let raw = prices.import_price[t] - prices.export_price[t] - 2.0 * prices.community_fee[t];
            let value = (raw * 1e12).round() / 1e12;
            if value > MIN_ACTIVATION_REWARD {
                Ok(value)
            } else {
                Err(BillingError::NonPositiveReward { timestep: t, value })
            }
        })
        .collect()
}

/// One mode's results over all simulated days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: String,
    pub days: Vec<DaySchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benefit {
    pub member: String,
    pub mode: String,
    pub baseline_bill: f64,
    pub bill: f64,
    /// `baseline_bill − bill`; positive means the member saves.
    pub delta: f64,
    pub discomfort: f64,
    pub flex_revenue: f64,
}

fn member_totals(r: &ModeResult) -> Vec<(String, f64, f64, f64)> {
    let Some(first) = r.days.first() else {
        return Vec::new();
    };
    first
        .members
        .iter()
        .enumerate()
        .map(|(u, m)| {
            let (mut bill, mut disc, mut rev) = (0.0, 0.0, 0.0);
            for d in &r.days {
                bill += d.members[u].bill;
                disc += d.members[u].discomfort;
                rev += d.members[u].flex_revenue;
            }
            (m.id.clone(), bill, disc, rev)
        })
        .collect()
}

/// Per-member bill deltas of every mode against `baseline`.
pub fn individual_benefits(results: &[ModeResult], baseline: &str) -> Result<Vec<Benefit>, BillingError> {
    let base = results
        .iter()
        .find(|r| r.mode == baseline)
        .ok_or_else(|| BillingError::MissingMode(baseline.to_string()))?;
    let base_totals = member_totals(base);
    let mut out = Vec::new();
    for r in results {
        for ((id, bill, disc, rev), (_, base_bill, _, _)) in member_totals(r).into_iter().zip(&base_totals) {
            out.push(Benefit {
                member: id,
                mode: r.mode.clone(),
                baseline_bill: *base_bill,
                bill,
                delta: base_bill - bill,
                discomfort: disc,
                flex_revenue: rev,
            });
        }
    }
    Ok(out)
}

/// Aggregates of one mode; energies in kWh, money in €.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: String,
    pub bill: f64,
    pub discomfort: f64,
    pub j_ev: f64,
    pub j_wb: f64,
    pub j_hp: f64,
    pub e_act: f64,
    pub e_act_ev: f64,
    pub e_act_wb: f64,
    pub e_act_hp: f64,
    pub e_dis_bss: f64,
    pub objective: f64,
    /// `(B − B_ECFlex)/(B_SoloFix − B_ECFlex)`, when both benchmarks were run.
    pub gap: Option<f64>,
    /// `(B − B_ECFlex)/B_ECFlex`, when ECFlex was run.
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub modes: Vec<ModeSummary>,
}

impl Report {
    pub fn mode(&self, name: &str) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == name)
    }
}

/// Half the L1 distance between a schedule and its reference, in kWh.
pub fn activated_energy(power: &[f64], reference: &[f64], dt: f64) -> f64 {
    if reference.is_empty() {
        return 0.0;
    }
    power.iter().zip(reference).map(|(p, r)| (p - r).abs()).sum::<f64>() * dt / 2.0
}

fn summarize_mode(r: &ModeResult) -> ModeSummary {
    let mut s = ModeSummary { mode: r.mode.clone(), ..Default::default() };
    for d in &r.days {
        s.objective += d.objective;
        for m in &d.members {
            s.bill += m.bill;
            s.discomfort += m.discomfort;
            s.j_ev += MemberDay::discomfort_of(&m.j_ev);
            s.j_wb += MemberDay::discomfort_of(&m.j_wb);
            s.j_hp += MemberDay::discomfort_of(&m.j_hp);
            s.e_act_ev += activated_energy(&m.ev, &m.refs.ev, d.dt_hours);
            s.e_act_wb += activated_energy(&m.wb, &m.refs.wb, d.dt_hours);
            s.e_act_hp += activated_energy(&m.hp, &m.refs.hp, d.dt_hours);
            s.e_dis_bss += m.discharge.iter().sum::<f64>() * d.dt_hours;
        }
    }
    s.e_act = s.e_act_ev + s.e_act_wb + s.e_act_hp;
    s
}

/// Summary rows per mode, with gap metrics for every mode when the benchmarks exist.
pub fn summarize(results: &[ModeResult]) -> Report {
    let mut modes: Vec<ModeSummary> = results.iter().map(summarize_mode).collect();
    let central = modes.iter().find(|m| m.mode == "ECFlex").map(|m| m.bill);
    let solo = modes.iter().find(|m| m.mode == "SoloFix").map(|m| m.bill);
    for m in &mut modes {
        if let Some(c) = central {
            if c != 0.0 {
                m.deviation = Some((m.bill - c) / c);
            }
            if let Some(sf) = solo {
                if sf != c {
                    m.gap = Some((m.bill - c) / (sf - c));
                }
            }
        }
    }
    Report { modes }
}
