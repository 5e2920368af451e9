#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reccoord::devices::reference_violations;
use reccoord::scenario::{
    generate_synthetic, load_scenario, validate_scenario, Horizon, HpParams, Member, Prices, Scenario, SyntheticConfig,
    WbParams,
};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn bundled(name: &str) -> Scenario {
    let bytes = std::fs::read(data_path(name)).expect("bundled scenario");
    load_scenario(&bytes).expect("bundled scenario parses")
}

/// A random small community: 2 to 6 members, one day of 24 hourly steps.
pub fn small_synthetic(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let cfg = SyntheticConfig {
        members: rng.gen_range(2..=6),
        wb_rate: rng.gen_range(0.0..=1.0),
        ev_rate: rng.gen_range(0.0..=1.0),
        hp_rate: rng.gen_range(0.0..=1.0),
        bss_rate: rng.gen_range(0.0..=1.0),
        pv_rate: rng.gen_range(0.2..=1.0),
        steps_per_day: 24,
        num_days: 1,
        ..SyntheticConfig::default()
    };
    generate_synthetic(&cfg, seed).expect("synthetic scenario")
}

fn hourly(f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..24).map(f).collect()
}

/// Two hourly members: a PV producer, and a neighbour whose water boiler and heat
/// pump are scheduled for the evening. Both thermal loads can move to midday without
/// any temperature dropping below its limit.
pub fn thermal_shift_scenario() -> Scenario {
    let pv = hourly(|h| if (8..=16).contains(&h) { 6.0 * (1.0 - ((h as f64 - 12.0) / 5.0).powi(2)) } else { 0.0 });
    let producer = Member::passive("producer", vec![0.3; 24], pv);

    let mut consumer = Member::passive("consumer", vec![0.3; 24], vec![0.0; 24]);
    consumer.wb = Some(WbParams {
        thermal_coeff: 4.3,
        max_power_kw: 2.0,
        temp_init: 60.0,
        temp_max: vec![85.0; 24],
        temp_limit: vec![45.0; 24],
        usage_event: (0..24).map(|h| h == 20).collect(),
        usage_loss_kw: hourly(|h| if h == 20 { 6.0 } else { 0.0 }),
        envelope_loss_kw: vec![0.05; 24],
        power_ref_kw: hourly(|h| if h == 18 || h == 19 { 2.0 } else { 0.0 }),
        reluctance_eur: 1.0,
    });
    consumer.hp = Some(HpParams {
        thermal_coeff: 0.5,
        max_power_kw: 2.0,
        cop: 3.0,
        temp_init: 21.0,
        temp_limit: vec![17.0; 24],
        wall_loss_kw: vec![0.3; 24],
        power_ref_kw: hourly(|h| if h == 18 || h == 19 { 1.2 } else { 0.0 }),
        reluctance_eur: 1.0,
    });

    let s = Scenario {
        schema: reccoord::scenario::SCHEMA_VERSION,
        horizon: Horizon { steps_per_day: 24, dt_hours: 1.0, num_days: 1 },
        prices: Prices::flat(0.4, 0.1, 0.01, 24),
        members: vec![producer, consumer],
    };
    assert!(validate_scenario(&s).is_empty(), "{:?}", validate_scenario(&s));
    assert!(reference_violations(&s).is_empty(), "{:?}", reference_violations(&s));
    s
}
