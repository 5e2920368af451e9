use std::collections::HashSet;

use super::{BssParams, EvParams, HpParams, Member, Scenario, Violation, WbParams};

/// Smallest activation reward still accepted as positive (€/kWh).
pub(crate) const MIN_ACTIVATION_REWARD: f64 = 1e-12;

struct Checker<'a> {
    out: Vec<Violation>,
    member: Option<&'a str>,
    len: usize,
    steps_per_day: usize,
}

impl<'a> Checker<'a> {
    fn push(&mut self, field: &str, t: Option<usize>, message: impl Into<String>) {
        self.out.push(Violation {
            member: self.member.map(str::to_string),
            field: field.to_string(),
            timestep: t,
            message: message.into(),
        });
    }

    /// Returns false (and records it) when the series has the wrong length.
    fn series(&mut self, field: &str, v: &[f64]) -> bool {
        if v.len() != self.len {
            self.push(field, None, format!("length {} != {}", v.len(), self.len));
            return false;
        }
        for (t, x) in v.iter().enumerate() {
            if !x.is_finite() {
                self.push(field, Some(t), "not a finite number");
            }
        }
        true
    }

    fn nonneg_series(&mut self, field: &str, v: &[f64]) -> bool {
        if !self.series(field, v) {
            return false;
        }
        for (t, &x) in v.iter().enumerate() {
            if x < 0.0 {
                self.push(field, Some(t), "negative value");
            }
        }
        true
    }

    fn flag_series(&mut self, field: &str, v: &[bool]) -> bool {
        if v.len() != self.len {
            self.push(field, None, format!("length {} != {}", v.len(), self.len));
            return false;
        }
        true
    }

    fn unit_interval(&mut self, field: &str, x: f64) {
        if !(0.0..=1.0).contains(&x) {
            self.push(field, None, "out of [0,1]");
        }
    }

    fn positive(&mut self, field: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.push(field, None, "must be positive");
        }
    }

    fn nonneg(&mut self, field: &str, x: f64) {
        if !(x >= 0.0 && x.is_finite()) {
            self.push(field, None, "must be nonnegative");
        }
    }

    fn efficiency(&mut self, field: &str, x: f64) {
        if !(x > 0.0 && x <= 1.0) {
            self.push(field, None, "out of (0,1]");
        }
    }

    fn bss(&mut self, b: &BssParams) {
        self.positive("bss.capacity_kwh", b.capacity_kwh);
        self.nonneg("bss.max_power_kw", b.max_power_kw);
        self.efficiency("bss.efficiency", b.efficiency);
        self.unit_interval("bss.soc_min", b.soc_min);
        self.unit_interval("bss.soc_max", b.soc_max);
        if b.soc_min > b.soc_max {
            self.push("bss.soc_min", None, "soc_min above soc_max");
        }
        if !(b.soc_min <= b.soc_init && b.soc_init <= b.soc_max) {
            self.push("bss.soc_init", None, "soc_init out of [soc_min,soc_max]");
        }
    }

    fn ev(&mut self, e: &EvParams) {
        self.positive("ev.capacity_kwh", e.capacity_kwh);
        self.nonneg("ev.max_charge_kw", e.max_charge_kw);
        self.efficiency("ev.efficiency", e.efficiency);
        self.nonneg("ev.reluctance_eur", e.reluctance_eur);
        self.unit_interval("ev.soc_init", e.soc_init);
        let flags_ok = self.flag_series("ev.plugged", &e.plugged)
            & self.flag_series("ev.arrival", &e.arrival)
            & self.flag_series("ev.departure", &e.departure);
        let arr_ok = self.series("ev.soc_arrival", &e.soc_arrival);
        let ref_ok = self.series("ev.soc_ref", &e.soc_ref);
        let pow_ok = self.nonneg_series("ev.power_ref_kw", &e.power_ref_kw);
        if !flags_ok {
            return;
        }
        for t in 0..self.len {
            if e.arrival[t] && !e.plugged[t] {
                self.push("ev.arrival", Some(t), "arrival while unplugged");
            }
            if e.departure[t] {
                if !e.plugged[t] {
                    self.push("ev.departure", Some(t), "departure while unplugged");
                }
                let same_day = (t + 1) % self.steps_per_day != 0;
                if same_day && t + 1 < self.len && e.plugged[t + 1] {
                    self.push("ev.departure", Some(t), "still plugged after departure");
                }
            }
            if arr_ok && e.arrival[t] && !(0.0..=1.0).contains(&e.soc_arrival[t]) {
                self.push("ev.soc_arrival", Some(t), "out of [0,1]");
            }
            if ref_ok && !(0.0..=1.0).contains(&e.soc_ref[t]) {
                self.push("ev.soc_ref", Some(t), "out of [0,1]");
            }
            if pow_ok {
                let p = e.power_ref_kw[t];
                if p > 0.0 && !e.plugged[t] {
                    self.push("ev.power_ref_kw", Some(t), "reference power while unplugged");
                }
                if p > e.max_charge_kw {
                    self.push("ev.power_ref_kw", Some(t), "reference power above max_charge_kw");
                }
            }
        }
    }

    fn wb(&mut self, w: &WbParams) {
        self.positive("wb.thermal_coeff", w.thermal_coeff);
        self.nonneg("wb.max_power_kw", w.max_power_kw);
        self.nonneg("wb.reluctance_eur", w.reluctance_eur);
        if !w.temp_init.is_finite() {
            self.push("wb.temp_init", None, "not a finite number");
        }
        let max_ok = self.series("wb.temp_max", &w.temp_max);
        let lim_ok = self.series("wb.temp_limit", &w.temp_limit);
        self.flag_series("wb.usage_event", &w.usage_event);
        self.nonneg_series("wb.usage_loss_kw", &w.usage_loss_kw);
        self.nonneg_series("wb.envelope_loss_kw", &w.envelope_loss_kw);
        let pow_ok = self.nonneg_series("wb.power_ref_kw", &w.power_ref_kw);
        for t in 0..self.len {
            if max_ok && lim_ok && w.temp_limit[t] > w.temp_max[t] {
                self.push("wb.temp_limit", Some(t), "temp_limit above temp_max");
            }
            if pow_ok && w.power_ref_kw[t] > w.max_power_kw {
                self.push("wb.power_ref_kw", Some(t), "reference power above max_power_kw");
            }
        }
    }

    fn hp(&mut self, h: &HpParams) {
        self.positive("hp.thermal_coeff", h.thermal_coeff);
        self.nonneg("hp.max_power_kw", h.max_power_kw);
        self.positive("hp.cop", h.cop);
        self.nonneg("hp.reluctance_eur", h.reluctance_eur);
        if !h.temp_init.is_finite() {
            self.push("hp.temp_init", None, "not a finite number");
        }
        self.series("hp.temp_limit", &h.temp_limit);
        self.nonneg_series("hp.wall_loss_kw", &h.wall_loss_kw);
        if self.nonneg_series("hp.power_ref_kw", &h.power_ref_kw) {
            for (t, &p) in h.power_ref_kw.iter().enumerate() {
                if p > h.max_power_kw {
                    self.push("hp.power_ref_kw", Some(t), "reference power above max_power_kw");
                }
            }
        }
    }

    fn member(&mut self, m: &'a Member) {
        self.member = Some(&m.id);
        self.nonneg_series("fixed_load_kw", &m.fixed_load_kw);
        self.nonneg_series("pv_max_kw", &m.pv_max_kw);
        self.nonneg("pv_capacity_kwp", m.pv_capacity_kwp);
        if let Some(b) = &m.bss {
            self.bss(b);
        }
        if let Some(e) = &m.ev {
            self.ev(e);
        }
        if let Some(w) = &m.wb {
            self.wb(w);
        }
        if let Some(h) = &m.hp {
            self.hp(h);
        }
        self.member = None;
    }
}

/// Lists every violated domain invariant; empty when the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let h = &s.horizon;
    let mut c = Checker { out: Vec::new(), member: None, len: h.total_steps(), steps_per_day: h.steps_per_day };

    if h.steps_per_day == 0 {
        c.push("horizon.steps_per_day", None, "must be positive");
    }
    if h.num_days == 0 {
        c.push("horizon.num_days", None, "must be positive");
    }
    if !(h.dt_hours > 0.0 && h.dt_hours.is_finite()) {
        c.push("horizon.dt_hours", None, "must be positive");
    } else if (h.steps_per_day as f64 * h.dt_hours - 24.0).abs() > 1e-9 {
        c.push("horizon.dt_hours", None, "steps_per_day × dt_hours must equal 24");
    }
    if c.len == 0 {
        return c.out;
    }

    let p = &s.prices;
    let ok = c.nonneg_series("prices.import_price", &p.import_price)
        & c.nonneg_series("prices.export_price", &p.export_price)
        & c.nonneg_series("prices.community_fee", &p.community_fee);
    if ok {
        for t in 0..c.len {
            let reward = p.import_price[t] - p.export_price[t] - 2.0 * p.community_fee[t];
            if reward <= MIN_ACTIVATION_REWARD {
                c.push("prices", Some(t), "non-positive activation reward");
            }
        }
    }

    let mut seen = HashSet::new();
    for m in &s.members {
        if !seen.insert(m.id.as_str()) {
            c.push("members", None, format!("duplicate member id `{}`", m.id));
        }
        c.member(m);
    }
    c.out
}
