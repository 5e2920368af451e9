//! Deterministic synthetic communities.
//!
//! Profiles are shaped by hand (base load with morning and evening peaks, a sine PV
//! curve with a daily cloud factor) and randomized with a seeded ChaCha stream, so a
//! `(config, seed)` pair always yields the same document.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    validate_scenario, BssParams, EvParams, FlexEnergyCap, Horizon, HpParams, Member, Prices, Scenario,
    ScenarioError, WbParams, SCHEMA_VERSION,
};
use crate::devices::reference_violations;

/// Installed PV per member when no total is given (kWp).
pub const DEFAULT_KWP_PER_MEMBER: f64 = 7.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub members: usize,
    pub wb_rate: f64,
    pub ev_rate: f64,
    pub hp_rate: f64,
    pub bss_rate: f64,
    pub pv_rate: f64,
    /// Total installed PV; defaults to `DEFAULT_KWP_PER_MEMBER` per member.
    pub pv_total_kwp: Option<f64>,
    pub steps_per_day: usize,
    pub num_days: usize,
    pub import_price: f64,
    pub export_price: f64,
    pub community_fee: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            members: 20,
            wb_rate: 0.7,
            ev_rate: 0.6,
            hp_rate: 0.5,
            bss_rate: 0.25,
            pv_rate: 0.75,
            pv_total_kwp: None,
            steps_per_day: 96,
            num_days: 7,
            import_price: 0.4,
            export_price: 0.1,
            community_fee: 0.01,
        }
    }
}

impl SyntheticConfig {
    /// Number of owners for a penetration rate.
    pub fn count(&self, rate: f64) -> usize {
        ((rate * self.members as f64) + 1e-9).floor() as usize
    }

    pub fn total_kwp(&self) -> f64 {
        self.pv_total_kwp.unwrap_or(DEFAULT_KWP_PER_MEMBER * self.members as f64)
    }

    /// Applies `key=value` overrides, e.g. `members=4,ev_rate=0.5`.
    pub fn apply_overrides(&mut self, overrides: &str) -> Result<(), ScenarioError> {
        for pair in overrides.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| ScenarioError::Config(format!("expected key=value, got `{pair}`")))?;
            let bad = |e: &dyn std::fmt::Display| ScenarioError::Config(format!("{key}: {e}"));
            let float = || value.trim().parse::<f64>().map_err(|e| bad(&e));
            let int = || value.trim().parse::<usize>().map_err(|e| bad(&e));
            match key.trim() {
                "members" => self.members = int()?,
                "wb_rate" | "wb" => self.wb_rate = float()?,
                "ev_rate" | "ev" => self.ev_rate = float()?,
                "hp_rate" | "hp" => self.hp_rate = float()?,
                "bss_rate" | "bss" => self.bss_rate = float()?,
                "pv_rate" => self.pv_rate = float()?,
                "pv_total_kwp" | "pv" => self.pv_total_kwp = Some(float()?),
                "steps_per_day" | "steps" => self.steps_per_day = int()?,
                "num_days" | "days" => self.num_days = int()?,
                "import_price" => self.import_price = float()?,
                "export_price" => self.export_price = float()?,
                "community_fee" => self.community_fee = float()?,
                other => return Err(ScenarioError::Config(format!("unknown generator key `{other}`"))),
            }
        }
        Ok(())
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::Config(m));
        if self.members == 0 {
            return err("members must be positive".into());
        }
        for (name, r) in [
            ("wb_rate", self.wb_rate),
            ("ev_rate", self.ev_rate),
            ("hp_rate", self.hp_rate),
            ("bss_rate", self.bss_rate),
            ("pv_rate", self.pv_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return err(format!("{name} = {r} is outside [0,1]"));
            }
        }
        if !(self.total_kwp() >= 0.0 && self.total_kwp().is_finite()) {
            return err("pv_total_kwp must be a nonnegative number".into());
        }
        if self.steps_per_day < 24 {
            return err(format!("steps_per_day = {} is below 24", self.steps_per_day));
        }
        if self.num_days == 0 {
            return err("num_days must be positive".into());
        }
        Ok(())
    }
}

fn round4(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn floor6(x: f64) -> f64 {
    (x * 1e6).floor() / 1e6
}

/// Members chosen to own a device, as a membership mask.
fn owners(rng: &mut ChaCha8Rng, members: usize, count: usize) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..members).collect();
    idx.shuffle(rng);
    let mut mask = vec![false; members];
    for &u in &idx[..count] {
        mask[u] = true;
    }
    mask
}

struct Grid {
    n: usize,
    days: usize,
    dt: f64,
}

impl Grid {
    fn total(&self) -> usize {
        self.n * self.days
    }

    /// Midpoint hour of local step `k`.
    fn hour(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }

    /// Local step containing hour `h`.
    fn step_at(&self, h: f64) -> usize {
        ((h / self.dt).floor() as usize).min(self.n - 1)
    }
}

fn bump(h: f64, centre: f64, width: f64) -> f64 {
    (-((h - centre) / width).powi(2)).exp()
}

fn fixed_load(rng: &mut ChaCha8Rng, g: &Grid) -> Vec<f64> {
    let base = rng.gen_range(0.15..0.4);
    let morning = rng.gen_range(0.3..1.0);
    let evening = rng.gen_range(0.8..2.0);
    let mut out = Vec::with_capacity(g.total());
    for _ in 0..g.days {
        let day_factor = rng.gen_range(0.85..1.15);
        for k in 0..g.n {
            let h = g.hour(k);
            let shape = base + morning * bump(h, 7.5, 1.0) + evening * bump(h, 19.5, 1.5);
            let noise = rng.gen_range(0.9..1.1);
            out.push(round4(shape * day_factor * noise).max(0.0));
        }
    }
    out
}

fn pv_shape(h: f64) -> f64 {
    if (7.5..18.5).contains(&h) {
        (PI * (h - 7.5) / 11.0).sin()
    } else {
        0.0
    }
}

/// Places `energy` kWh at up to `max_kw`, filling `order` steps in turn.
fn place_energy(profile: &mut [f64], order: impl Iterator<Item = usize>, mut energy: f64, max_kw: f64, dt: f64) {
    for k in order {
        if energy <= 1e-12 {
            break;
        }
        let room = max_kw - profile[k];
        let p = (energy / dt).min(room);
        if p > 0.0 {
            profile[k] += p;
            energy -= p * dt;
        }
    }
}

fn water_boiler(rng: &mut ChaCha8Rng, g: &Grid) -> WbParams {
    let total = g.total();
    let coeff = round4(rng.gen_range(3.5..5.0));
    let max_power = round4(rng.gen_range(2.0..3.0));
    let envelope = 0.05;
    let mut usage_event = vec![false; total];
    let mut usage_loss = vec![0.0; total];
    let mut power_ref = vec![0.0; total];
    let usage_steps = [g.step_at(7.0), g.step_at(20.0)];
    for d in 0..g.days {
        let off = d * g.n;
        let mut day_ref = vec![0.0; g.n];
        for &u in &usage_steps {
            let energy = rng.gen_range(0.8..1.5);
            let loss_kw = round4(energy / g.dt);
            usage_event[off + u] = true;
            usage_loss[off + u] = loss_kw;
            // Reheat right after the draw: the drawn energy plus half a day of losses.
            let need = loss_kw * g.dt + envelope * 12.0;
            let order = (u + 1..g.n).chain((0..u).rev());
            place_energy(&mut day_ref, order, need, max_power, g.dt);
        }
        for (k, p) in day_ref.into_iter().enumerate() {
            power_ref[off + k] = round4(p).min(max_power);
        }
    }
    WbParams {
        thermal_coeff: coeff,
        max_power_kw: max_power,
        temp_init: 60.0,
        temp_max: vec![80.0; total],
        temp_limit: vec![50.0; total],
        usage_event,
        usage_loss_kw: usage_loss,
        envelope_loss_kw: vec![envelope; total],
        power_ref_kw: power_ref,
        reluctance_eur: 1.0,
    }
}

fn heat_pump(rng: &mut ChaCha8Rng, g: &Grid) -> HpParams {
    let total = g.total();
    let cop = 3.0;
    let coeff = round4(rng.gen_range(0.1..0.2));
    let max_power = round4(rng.gen_range(2.0..4.0));
    let base = rng.gen_range(1.0..2.5);
    let mut power_ref = Vec::with_capacity(total);
    let mut wall_loss = Vec::with_capacity(total);
    let mut temp_limit = Vec::with_capacity(total);
    for _ in 0..g.days {
        let day_factor = rng.gen_range(0.3..1.2);
        for k in 0..g.n {
            let h = g.hour(k);
            let loss = base * day_factor * (1.0 + 0.2 * (2.0 * PI * (h - 4.0) / 24.0).cos());
            // Reference holds the indoor temperature: electrical power = loss / COP.
            let p = round4((loss / cop).min(max_power));
            power_ref.push(p);
            wall_loss.push(round4(cop * p));
            temp_limit.push(if (7.0..22.0).contains(&h) { 19.0 } else { 17.0 });
        }
    }
    HpParams {
        thermal_coeff: coeff,
        max_power_kw: max_power,
        cop,
        temp_init: 20.0,
        temp_limit,
        wall_loss_kw: wall_loss,
        power_ref_kw: power_ref,
        reluctance_eur: 1.0,
    }
}

fn electric_vehicle(rng: &mut ChaCha8Rng, g: &Grid) -> EvParams {
    let total = g.total();
    let capacity = round4(rng.gen_range(40.0..75.0));
    let max_charge = *[3.7, 7.4, 11.0].choose(rng).expect("non-empty");
    let efficiency = 0.9;
    let midday = rng.gen_bool(0.5);
    let mut ev = EvParams {
        capacity_kwh: capacity,
        max_charge_kw: max_charge,
        efficiency,
        plugged: vec![false; total],
        arrival: vec![false; total],
        departure: vec![false; total],
        soc_arrival: vec![0.0; total],
        soc_ref: vec![0.0; total],
        soc_init: 0.5,
        power_ref_kw: vec![0.0; total],
        reluctance_eur: round4(rng.gen_range(0.5..2.0)),
    };
    for d in 0..g.days {
        let off = d * g.n;
        let (arrive, leave) = if midday {
            (rng.gen_range(9.0..12.0), rng.gen_range(16.0..19.0))
        } else {
            (rng.gen_range(17.0..19.5), rng.gen_range(22.0..23.0))
        };
        let a = g.step_at(arrive);
        let l = g.step_at(leave).max(a + 1).min(g.n - 2);
        let soc_arr = round4(rng.gen_range(0.2..0.6));
        let plugged = l - a + 1;
        let charge_steps = ((0.7 * plugged as f64).round() as usize).max(1);
        let needed = (0.9 - soc_arr) * capacity / efficiency;
        let p = round4((needed / (charge_steps as f64 * g.dt)).min(max_charge));
        let mut soc = soc_arr;
        for k in a..=l {
            let t = off + k;
            ev.plugged[t] = true;
            if k - a < charge_steps {
                ev.power_ref_kw[t] = p;
            }
            soc += g.dt * efficiency * ev.power_ref_kw[t] / capacity;
            ev.soc_ref[t] = floor6(soc).min(1.0);
        }
        ev.arrival[off + a] = true;
        ev.soc_arrival[off + a] = soc_arr;
        ev.departure[off + l] = true;
    }
    ev
}

fn battery(rng: &mut ChaCha8Rng) -> BssParams {
    let capacity = round4(rng.gen_range(5.0..13.5));
    BssParams {
        capacity_kwh: capacity,
        max_power_kw: round4((capacity / 2.0).min(5.0)),
        efficiency: 0.95,
        soc_init: 0.5,
        soc_min: 0.1,
        soc_max: 0.95,
    }
}

fn pv_sizes(rng: &mut ChaCha8Rng, owners: usize, total: f64) -> Vec<f64> {
    if owners == 0 {
        return Vec::new();
    }
    let raw: Vec<f64> = (0..owners).map(|_| rng.gen_range(2.0..20.0)).collect();
    let sum: f64 = raw.iter().sum();
    let mut sizes: Vec<f64> = raw.iter().map(|r| round4(r / sum * total)).collect();
    let head: f64 = sizes[..owners - 1].iter().sum();
    sizes[owners - 1] = round4(total - head);
    sizes
}

/// Builds a community from `config`, deterministic in `seed`.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<Scenario, ScenarioError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Grid { n: config.steps_per_day, days: config.num_days, dt: 24.0 / config.steps_per_day as f64 };
    let n_members = config.members;

    let pv_mask = owners(&mut rng, n_members, config.count(config.pv_rate));
    let wb_mask = owners(&mut rng, n_members, config.count(config.wb_rate));
    let ev_mask = owners(&mut rng, n_members, config.count(config.ev_rate));
    let hp_mask = owners(&mut rng, n_members, config.count(config.hp_rate));
    let bss_mask = owners(&mut rng, n_members, config.count(config.bss_rate));
    let mut sizes = pv_sizes(&mut rng, pv_mask.iter().filter(|&&b| b).count(), config.total_kwp()).into_iter();
    let clouds: Vec<f64> = (0..g.days).map(|_| rng.gen_range(0.2..0.8)).collect();

    let width = if n_members >= 100 { 3 } else { 2 };
    let mut members = Vec::with_capacity(n_members);
    for u in 0..n_members {
        let id = format!("m{:0width$}", u + 1);
        let fixed = fixed_load(&mut rng, &g);
        let kwp = if pv_mask[u] { sizes.next().unwrap_or(0.0) } else { 0.0 };
        let pv: Vec<f64> = (0..g.total())
            .map(|t| round4(kwp * 0.75 * clouds[t / g.n] * pv_shape(g.hour(t % g.n))))
            .collect();
        let mut m = Member::passive(id, fixed, pv);
        m.pv_capacity_kwp = kwp;
        m.wb = wb_mask[u].then(|| water_boiler(&mut rng, &g));
        m.ev = ev_mask[u].then(|| electric_vehicle(&mut rng, &g));
        m.hp = hp_mask[u].then(|| heat_pump(&mut rng, &g));
        m.bss = bss_mask[u].then(|| battery(&mut rng));
        let energy = |p: Option<&Vec<f64>>| round4(p.map_or(0.0, |v| v.iter().sum::<f64>() * g.dt));
        let ev = energy(m.ev.as_ref().map(|e| &e.power_ref_kw));
        let wb = energy(m.wb.as_ref().map(|e| &e.power_ref_kw));
        let hp = energy(m.hp.as_ref().map(|e| &e.power_ref_kw));
        m.flexible_energy_cap_kwh = FlexEnergyCap { total: round4(ev + wb + hp), ev, wb, hp };
        members.push(m);
    }

    let scenario = Scenario {
        schema: SCHEMA_VERSION,
        horizon: Horizon { steps_per_day: g.n, dt_hours: g.dt, num_days: g.days },
        prices: Prices::flat(config.import_price, config.export_price, config.community_fee, g.total()),
        members,
    };
    let mut violations = validate_scenario(&scenario);
    violations.extend(reference_violations(&scenario));
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}
