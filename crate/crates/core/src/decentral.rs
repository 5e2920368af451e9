//! Iterative decentralized coordination.
//!
//! The operator derives upward and downward flexibility requests from the community's
//! residual retailer exchanges. Each round, every member answers the current request
//! with a capacity offer computed from its own devices, the operator splits the
//! request over the offers with a key of repartition, and members re-plan within the
//! resulting bounds. Activated volume is taken off the request and the round repeats
//! until nothing is left to ask for or nothing more is activated.
//!
//! The operator side only handles [`FlexRequest`], [`CapacityOffer`],
//! [`ActivationBounds`] and [`Activation`] values; device parameters stay inside
//! [`MemberAgent`].

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billing::{activation_price, BillingError};
use crate::kor::Key;
use crate::lp::{Backend, LpProblem, LpStatus, Relation, VarId};
use crate::planner::{
    add_device_block, check_day, prioritized_refs, solve_day, DaySchedule, DayStart, DevicePin, DeviceRefs, DeviceVars,
    MemberStart, PlanError, PlanOptions, PlannerMode,
};
use crate::scenario::{Member, Prices, Scenario};

/// Termination threshold on remaining request and activated volume (kWh).
pub const EPSILON_KWH: f64 = 1e-6;
/// Offer and activation entries below this (kW) are treated as zero.
pub const SNAP_KW: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexRequest {
    pub up_kw: Vec<f64>,
    pub down_kw: Vec<f64>,
    /// €/kWh paid per upward kWh.
    pub activation_price: Vec<f64>,
}

impl FlexRequest {
    /// True when some entry still exceeds [`EPSILON_KWH`] of energy.
    pub fn is_open(&self, dt: f64) -> bool {
        self.up_kw.iter().chain(&self.down_kw).any(|&x| x * dt > EPSILON_KWH)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityOffer {
    pub member: String,
    pub up_kw: Vec<f64>,
    pub down_kw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationBounds {
    pub member: String,
    pub up_kw: Vec<f64>,
    pub down_kw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub member: String,
    pub up_kw: Vec<f64>,
    pub down_kw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub day: usize,
    pub iteration: usize,
    pub offers: Vec<CapacityOffer>,
    pub bounds: Vec<ActivationBounds>,
    pub activations: Vec<Activation>,
    /// Request left after this iteration.
    pub remaining_up_kw: Vec<f64>,
    pub remaining_down_kw: Vec<f64>,
    /// Energy activated in this iteration over both directions (kWh).
    pub activated_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Start from the scenario's reference powers.
    Plain,
    /// Start from each member's own self-consumption optimum.
    Primed,
}

impl Variant {
    pub fn mode_name(self) -> &'static str {
        match self {
            Variant::Plain => "ECFlexIt",
            Variant::Primed => "ECFlexItPrimed",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mode_name())
    }
}

#[derive(Debug, Error)]
pub enum DecentralError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Billing(#[from] BillingError),
    #[error("member {member}, day {day}, iteration {iteration}: {stage} problem returned {status}")]
    Member { member: String, day: usize, iteration: usize, stage: &'static str, status: LpStatus },
    #[error("day {day}: no convergence within {cap} iterations")]
    IterationCap { day: usize, cap: usize, traces: Vec<IterationTrace> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcflexitOptions {
    pub max_iters: usize,
    /// Order in which member problems are evaluated; `None` is scenario order.
    pub member_order: Option<Vec<usize>>,
    pub plan: PlanOptions,
}

impl Default for EcflexitOptions {
    fn default() -> Self {
        Self { max_iters: DEFAULT_MAX_ITERS, member_order: None, plan: PlanOptions::default() }
    }
}

/// Device powers of one member over a day.
#[derive(Debug, Clone, PartialEq, Default)]
struct DevicePlan {
    charge: Vec<f64>,
    discharge: Vec<f64>,
    ev: Vec<f64>,
    wb: Vec<f64>,
    hp: Vec<f64>,
}

impl DevicePlan {
    fn pin(&self, m: &Member) -> DevicePin {
        DevicePin {
            charge: m.bss.as_ref().map(|_| self.charge.clone()),
            discharge: m.bss.as_ref().map(|_| self.discharge.clone()),
            ev: m.ev.as_ref().map(|_| self.ev.clone()),
            wb: m.wb.as_ref().map(|_| self.wb.clone()),
            hp: m.hp.as_ref().map(|_| self.hp.clone()),
        }
    }

    fn controllable(&self) -> Vec<f64> {
        (0..self.ev.len())
            .map(|k| self.ev[k] + self.wb[k] + self.hp[k] + self.charge[k] - self.discharge[k])
            .collect()
    }
}

/// One member's private side of the protocol.
#[derive(Debug, Clone)]
pub struct MemberAgent<'a> {
    member: &'a Member,
    window: Range<usize>,
    dt: f64,
    device_refs: DeviceRefs,
    start: MemberStart,
    /// Total controllable reference: flexible loads plus charge minus discharge (kW).
    refs_total: Vec<f64>,
    plan: DevicePlan,
}

impl<'a> MemberAgent<'a> {
    fn from_schedule(
        member: &'a Member,
        s: &Scenario,
        day: usize,
        device_refs: DeviceRefs,
        start: MemberStart,
        sched: &crate::planner::MemberDay,
    ) -> Self {
        let plan = DevicePlan {
            charge: sched.charge.clone(),
            discharge: sched.discharge.clone(),
            ev: sched.ev.clone(),
            wb: sched.wb.clone(),
            hp: sched.hp.clone(),
        };
        MemberAgent {
            member,
            window: s.horizon.day_range(day),
            dt: s.horizon.dt_hours,
            device_refs,
            start,
            refs_total: plan.controllable(),
            plan,
        }
    }

    /// Member `u` following `refs` with an idle battery.
    pub fn new(s: &'a Scenario, u: usize, day: usize, refs: DeviceRefs, start: MemberStart) -> Self {
        let n = s.horizon.steps_per_day;
        let member = &s.members[u];
        let or_zero = |v: &Vec<f64>| if v.is_empty() { vec![0.0; n] } else { v.clone() };
        let plan = DevicePlan {
            charge: vec![0.0; n],
            discharge: vec![0.0; n],
            ev: or_zero(&refs.ev),
            wb: or_zero(&refs.wb),
            hp: or_zero(&refs.hp),
        };
        MemberAgent {
            member,
            window: s.horizon.day_range(day),
            dt: s.horizon.dt_hours,
            device_refs: refs,
            start,
            refs_total: plan.controllable(),
            plan,
        }
    }

    pub fn id(&self) -> &str {
        &self.member.id
    }

    pub fn refs_total(&self) -> &[f64] {
        &self.refs_total
    }
}

struct MemberLp {
    up: Vec<f64>,
    down: Vec<f64>,
    plan: DevicePlan,
}

fn snap(x: f64, cap: f64) -> f64 {
    if x < SNAP_KW {
        0.0
    } else {
        x.min(cap)
    }
}

/// Maximizes the member's flexibility reward minus discomfort, shifting its total
/// controllable power by `up − down` within the given caps.
fn solve_member_lp(
    agent: &MemberAgent<'_>,
    up_cap: &[f64],
    down_cap: &[f64],
    price: &[f64],
    backend: Backend,
) -> Result<MemberLp, LpStatus> {
    let n = agent.window.len();
    let mut lp = LpProblem::new();
    let vars: DeviceVars = add_device_block(
        &mut lp,
        &agent.member.id,
        agent.member,
        agent.window.clone(),
        agent.dt,
        &agent.device_refs,
        &agent.start,
        None,
        1.0,
    );
    let up: Vec<VarId> =
        (0..n).map(|k| lp.add_var(format!("cap_up[{k}]"), 0.0, up_cap[k], -price[k] * agent.dt)).collect();
    let down: Vec<VarId> = (0..n).map(|k| lp.add_var(format!("cap_down[{k}]"), 0.0, down_cap[k], 0.0)).collect();
    for k in 0..n {
        let mut row = vars.controllable_terms(k);
        row.push((up[k], -1.0));
        row.push((down[k], 1.0));
        lp.add_constraint(format!("shift[{k}]"), row, Relation::Eq, agent.refs_total[k]);
    }
    let mut row: Vec<(VarId, f64)> = up.iter().map(|&v| (v, 1.0)).collect();
    row.extend(down.iter().map(|&v| (v, -1.0)));
    lp.add_constraint("neutral", row, Relation::Eq, 0.0);

    let sol = backend.solve(&lp);
    if !sol.is_optimal() {
        return Err(sol.status);
    }
    let get = |v: &Option<Vec<VarId>>| match v {
        Some(v) => v.iter().map(|&x| sol.value(x)).collect(),
        None => vec![0.0; n],
    };
    Ok(MemberLp {
        up: up.iter().zip(up_cap).map(|(&v, &c)| snap(sol.value(v), c)).collect(),
        down: down.iter().zip(down_cap).map(|(&v, &c)| snap(sol.value(v), c)).collect(),
        plan: DevicePlan {
            charge: get(&vars.charge),
            discharge: get(&vars.discharge),
            ev: get(&vars.ev),
            wb: get(&vars.wb),
            hp: get(&vars.hp),
        },
    })
}

/// Requests from the community's residual retailer exchanges: upward where it exports,
/// downward where it imports.
pub fn initial_request(ecfix: &DaySchedule, prices: &Prices) -> Result<FlexRequest, BillingError> {
    let n = ecfix.steps();
    let sum = |f: &dyn Fn(&crate::planner::MemberDay) -> &Vec<f64>, k: usize| -> f64 {
        ecfix.members.iter().map(|m| f(m)[k]).sum::<f64>().max(0.0)
    };
    Ok(FlexRequest {
        up_kw: (0..n).map(|k| sum(&|m| &m.e_ret, k)).collect(),
        down_kw: (0..n).map(|k| sum(&|m| &m.i_ret, k)).collect(),
        activation_price: activation_price(prices)?,
    })
}

/// The member's best offer against `request`.
pub fn member_offer(agent: &MemberAgent<'_>, request: &FlexRequest, backend: Backend) -> Result<CapacityOffer, LpStatus> {
    let r = solve_member_lp(agent, &request.up_kw, &request.down_kw, &request.activation_price, backend)?;
    Ok(CapacityOffer { member: agent.member.id.clone(), up_kw: r.up, down_kw: r.down })
}

/// Splits the request over the offers, per timestep and direction.
pub fn refine_bounds(offers: &[CapacityOffer], request: &FlexRequest, key: Key) -> Vec<ActivationBounds> {
    let n = request.up_kw.len();
    let mut bounds: Vec<ActivationBounds> = offers
        .iter()
        .map(|o| ActivationBounds { member: o.member.clone(), up_kw: vec![0.0; n], down_kw: vec![0.0; n] })
        .collect();
    for k in 0..n {
        let up: Vec<f64> = offers.iter().map(|o| o.up_kw[k]).collect();
        for (b, a) in bounds.iter_mut().zip(key.apply(&up, request.up_kw[k])) {
            b.up_kw[k] = a;
        }
        let down: Vec<f64> = offers.iter().map(|o| o.down_kw[k]).collect();
        for (b, a) in bounds.iter_mut().zip(key.apply(&down, request.down_kw[k])) {
            b.down_kw[k] = a;
        }
    }
    bounds
}

/// Outcome of a member's re-plan within its activation bounds.
pub struct ActivationOutcome {
    pub activation: Activation,
    plan: DevicePlan,
}

/// Re-solves the member problem with the offer caps replaced by `bounds`.
pub fn member_activate(
    agent: &MemberAgent<'_>,
    bounds: &ActivationBounds,
    price: &[f64],
    backend: Backend,
) -> Result<ActivationOutcome, LpStatus> {
    let r = solve_member_lp(agent, &bounds.up_kw, &bounds.down_kw, price, backend)?;
    Ok(ActivationOutcome {
        activation: Activation { member: agent.member.id.clone(), up_kw: r.up, down_kw: r.down },
        plan: r.plan,
    })
}

impl MemberAgent<'_> {
    /// Adopts an activation: the re-planned devices become the new reference.
    ///
    /// A member with nothing activated keeps its current plan, so degenerate
    /// re-plans of an unchanged total do not leak into the result.
    pub fn apply(&mut self, outcome: ActivationOutcome) {
        let moved = outcome.activation.up_kw.iter().chain(&outcome.activation.down_kw).any(|&x| x > 0.0);
        if moved {
            self.refs_total = outcome.plan.controllable();
            self.plan = outcome.plan;
        }
    }
}

fn evaluation_order(n: usize, order: &Option<Vec<usize>>) -> Vec<usize> {
    match order {
        Some(o) if o.len() == n => o.clone(),
        _ => (0..n).collect(),
    }
}

/// Runs the coordination loop for one day starting from `start`.
///
/// Returns the settled schedule and one trace per iteration.
pub fn run_ecflexit(
    s: &Scenario,
    day: usize,
    key: Key,
    variant: Variant,
    start: &DayStart,
    opts: &EcflexitOptions,
) -> Result<(DaySchedule, Vec<IterationTrace>), DecentralError> {
    check_day(s, day)?;
    let plan_opts = opts.plan;
    let w = s.horizon.day_range(day);
    let dt = s.horizon.dt_hours;
    let backend = plan_opts.backend;
    let stage = variant.mode_name();

    let refs = match variant {
        Variant::Plain => DeviceRefs::from_scenario(s, day),
        Variant::Primed => {
            let scenario_refs = DeviceRefs::from_scenario(s, day);
            let solo = solve_day(s, day, PlannerMode::SoloFlex, &scenario_refs, start, None, plan_opts, stage)?;
            prioritized_refs(s, &solo)
        }
    };
    let ecfix = solve_day(s, day, PlannerMode::ECFix, &refs, start, None, plan_opts, stage)?;
    let mut request = initial_request(&ecfix, &s.prices.slice(w.clone()))?;
    let price = request.activation_price.clone();

    let mut agents: Vec<MemberAgent> = s
        .members
        .iter()
        .enumerate()
        .map(|(u, m)| MemberAgent::from_schedule(m, s, day, refs[u].clone(), start.members[u], &ecfix.members[u]))
        .collect();
    let mut revenue = vec![0.0; agents.len()];
    let order = evaluation_order(agents.len(), &opts.member_order);
    let mut traces = Vec::new();

    let member_err = |u: usize, iteration: usize, stage: &'static str, status: LpStatus| DecentralError::Member {
        member: s.members[u].id.clone(),
        day,
        iteration,
        stage,
        status,
    };

    let mut iteration = 0;
    while request.is_open(dt) {
        if iteration == opts.max_iters {
            return Err(DecentralError::IterationCap { day, cap: opts.max_iters, traces });
        }
        let mut offers: Vec<Option<CapacityOffer>> = vec![None; agents.len()];
        for &u in &order {
            let o = member_offer(&agents[u], &request, backend).map_err(|st| member_err(u, iteration, "offer", st))?;
            offers[u] = Some(o);
        }
        let offers: Vec<CapacityOffer> = offers.into_iter().map(|o| o.expect("every member offered")).collect();
        let bounds = refine_bounds(&offers, &request, key);

        let mut outcomes: Vec<Option<ActivationOutcome>> = (0..agents.len()).map(|_| None).collect();
        for &u in &order {
            let o = member_activate(&agents[u], &bounds[u], &price, backend)
                .map_err(|st| member_err(u, iteration, "activation", st))?;
            outcomes[u] = Some(o);
        }

        let mut activations = Vec::with_capacity(agents.len());
        let mut activated_kwh = 0.0;
        for (u, o) in outcomes.into_iter().enumerate() {
            let o = o.expect("every member activated");
            let a = o.activation.clone();
            for k in 0..w.len() {
                request.up_kw[k] = (request.up_kw[k] - a.up_kw[k]).max(0.0);
                request.down_kw[k] = (request.down_kw[k] - a.down_kw[k]).max(0.0);
                activated_kwh += (a.up_kw[k] + a.down_kw[k]) * dt;
                revenue[u] += a.up_kw[k] * price[k] * dt;
            }
            agents[u].apply(o);
            activations.push(a);
        }
        traces.push(IterationTrace {
            day,
            iteration,
            offers,
            bounds,
            activations,
            remaining_up_kw: request.up_kw.clone(),
            remaining_down_kw: request.down_kw.clone(),
            activated_kwh,
        });
        iteration += 1;
        if activated_kwh <= EPSILON_KWH {
            break;
        }
    }

    // Settlement: fix every device and let one netting problem allocate exchanges.
    let pins: Vec<DevicePin> = agents.iter().map(|a| a.plan.pin(a.member)).collect();
    let mut sched = solve_day(s, day, PlannerMode::ECFlex, &refs, start, Some(&pins), plan_opts, stage)?;
    for (m, r) in sched.members.iter_mut().zip(revenue) {
        m.flex_revenue = r;
    }
    Ok((sched, traces))
}

/// Runs every day of the horizon, carrying device states between days.
pub fn run_ecflexit_days(
    s: &Scenario,
    key: Key,
    variant: Variant,
    opts: &EcflexitOptions,
) -> Result<(Vec<DaySchedule>, Vec<IterationTrace>), DecentralError> {
    let mut start = DayStart::initial(s);
    let mut days = Vec::with_capacity(s.horizon.num_days);
    let mut traces = Vec::new();
    for day in 0..s.horizon.num_days {
        let (sched, tr) = run_ecflexit(s, day, key, variant, &start, opts)?;
        start = sched.end_state(&start);
        days.push(sched);
        traces.extend(tr);
    }
    Ok((days, traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(id: &str, up: &[f64], down: &[f64]) -> CapacityOffer {
        CapacityOffer { member: id.into(), up_kw: up.to_vec(), down_kw: down.to_vec() }
    }

    fn request(up: &[f64], down: &[f64]) -> FlexRequest {
        FlexRequest { up_kw: up.to_vec(), down_kw: down.to_vec(), activation_price: vec![0.28; up.len()] }
    }

    #[test]
    fn single_member_bounds_are_min_of_offer_and_request() {
        let offers = [offer("a", &[3.0, 1.0], &[0.5, 4.0])];
        let req = request(&[2.0, 2.0], &[1.0, 1.0]);
        for key in Key::ALL {
            let b = refine_bounds(&offers, &req, key);
            assert_eq!(b[0].up_kw, vec![2.0, 1.0], "{key}");
            assert_eq!(b[0].down_kw, vec![0.5, 1.0], "{key}");
        }
    }

    #[test]
    fn cascade_bounds_follow_the_key() {
        let offers = [offer("a", &[2.0], &[0.0]), offer("b", &[8.0], &[0.0]), offer("c", &[8.0], &[0.0])];
        let b = refine_bounds(&offers, &request(&[10.0], &[0.0]), Key::Cascade);
        let ups: Vec<f64> = b.iter().map(|x| x.up_kw[0]).collect();
        assert_eq!(ups, vec![2.0, 4.0, 4.0]);
    }

    #[test]
    fn zero_request_gives_zero_bounds() {
        let offers = [offer("a", &[2.0], &[1.0]), offer("b", &[3.0], &[1.0])];
        for key in Key::ALL {
            for b in refine_bounds(&offers, &request(&[0.0], &[0.0]), key) {
                assert_eq!((b.up_kw[0], b.down_kw[0]), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn open_request_uses_energy_threshold() {
        assert!(!request(&[1e-7], &[0.0]).is_open(1.0));
        assert!(request(&[1e-5], &[0.0]).is_open(1.0));
        assert!(!request(&[3e-6], &[0.0]).is_open(0.25));
    }
}
