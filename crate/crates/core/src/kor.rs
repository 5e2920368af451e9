//! Keys of repartition: how the community operator splits a requested flexible
//! volume across the capacities members offered for one timestep and direction.
//!
//! All three keys are rule-based and price-agnostic. Each returns an activation
//! vector aligned with the offer vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Remaining request or capacity below this (kW) is treated as exhausted.
pub const CASCADE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Key {
    Equal,
    Prorate,
    Cascade,
}

impl Key {
    pub const ALL: [Key; 3] = [Key::Equal, Key::Prorate, Key::Cascade];

    pub fn apply(self, offers: &[f64], request: f64) -> Vec<f64> {
        match self {
            Key::Equal => equal_key(offers, request),
            Key::Prorate => prorate_key(offers, request),
            Key::Cascade => cascade_key(offers, request),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Key::Equal => "equal",
            Key::Prorate => "prorate",
            Key::Cascade => "cascade",
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Key {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" => Ok(Key::Equal),
            "prorate" => Ok(Key::Prorate),
            "cascade" => Ok(Key::Cascade),
            other => Err(format!("unknown key `{other}` (expected equal, prorate or cascade)")),
        }
    }
}

/// Each member with a positive offer gets `request / n`, capped at its offer.
///
/// Volume a capped member cannot take is not re-offered to the others.
pub fn equal_key(offers: &[f64], request: f64) -> Vec<f64> {
    let providers = offers.iter().filter(|&&c| c > 0.0).count();
    if providers == 0 {
        return vec![0.0; offers.len()];
    }
    let share = request / providers as f64;
    offers.iter().map(|&c| if c > 0.0 { share.min(c) } else { 0.0 }).collect()
}

/// Shares proportional to the offers, capped at the offers.
pub fn prorate_key(offers: &[f64], request: f64) -> Vec<f64> {
    let total: f64 = offers.iter().sum();
    if total <= 0.0 {
        return vec![0.0; offers.len()];
    }
    if request >= total {
        return offers.to_vec();
    }
    offers.iter().map(|&c| (c / total * request).min(c)).collect()
}

/// Repeated equal splits over the members that still have capacity, until the
/// request or the capacity runs out.
///
/// Each round either saturates at least one member or places the whole remaining
/// request, so the loop ends after at most `offers.len() + 1` rounds.
///
/// Members still providing after a round all hold the same cumulative share, so a
/// round is computed as that common level, `(request − Σ saturated offers) / n`,
/// rather than by adding increments. This is the same split without the rounding
/// drift of repeated additions.
pub fn cascade_key(offers: &[f64], request: f64) -> Vec<f64> {
    let mut act = vec![0.0; offers.len()];
    let mut saturated = vec![false; offers.len()];
    for _ in 0..=offers.len() {
        let providers: Vec<usize> =
            (0..offers.len()).filter(|&u| !saturated[u] && offers[u] > CASCADE_EPS).collect();
        if providers.is_empty() {
            break;
        }
        let placed: f64 = (0..offers.len()).filter(|&u| saturated[u]).map(|u| act[u]).sum();
        let remaining = (request - placed).max(0.0);
        let level = remaining / providers.len() as f64;
        let mut newly_saturated = false;
        for &u in &providers {
            if offers[u] <= level {
                act[u] = offers[u];
                saturated[u] = true;
                newly_saturated = true;
            } else {
                act[u] = level;
            }
        }
        if !newly_saturated || remaining <= CASCADE_EPS {
            break;
        }
    }
    act
}
