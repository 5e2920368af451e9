mod common;

use proptest::prelude::*;
use reccoord::devices::reference_violations;
use reccoord::scenario::{device_counts, generate_synthetic, load_scenario, validate_scenario, SyntheticConfig};

#[test]
fn bundled_community_matches_its_generator() {
    let s = common::bundled("community20.json");
    assert_eq!(s.members.len(), 20);
    assert_eq!((s.horizon.steps_per_day, s.horizon.num_days), (96, 7));
    assert_eq!(s.horizon.dt_hours, 0.25);
    let c = device_counts(&s);
    assert_eq!((c["wb"], c["ev"], c["hp"], c["bss"], c["pv"]), (14, 12, 10, 5, 15));
    let kwp: f64 = s.members.iter().map(|m| m.pv_capacity_kwp).sum();
    assert!((kwp - 147.0).abs() < 1e-9, "{kwp}");
    assert!(validate_scenario(&s).is_empty());
    assert!(reference_violations(&s).is_empty());
    assert_eq!(s, generate_synthetic(&SyntheticConfig::default(), 42).unwrap());
}

#[test]
fn toy_scenario_is_valid() {
    let s = common::bundled("toy4.json");
    assert_eq!(s.members.len(), 4);
    assert!(validate_scenario(&s).is_empty());
    assert!(reference_violations(&s).is_empty());
}

#[test]
fn first_days_truncates_every_series() {
    let s = common::bundled("community20.json");
    let two = s.first_days(2).unwrap();
    assert_eq!(two.horizon.num_days, 2);
    assert_eq!(two.prices.import_price.len(), 192);
    for m in &two.members {
        assert_eq!(m.fixed_load_kw.len(), 192);
        if let Some(ev) = &m.ev {
            assert_eq!((ev.plugged.len(), ev.soc_ref.len()), (192, 192));
        }
    }
    assert!(validate_scenario(&two).is_empty());
    assert!(s.first_days(8).is_err());
    assert!(s.first_days(0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generated_scenarios_are_valid_and_round_trip(
        members in 1usize..8,
        rates in prop::array::uniform5(0.0..=1.0f64),
        steps in prop_oneof![Just(24usize), Just(48), Just(96)],
        days in 1usize..3,
        seed in any::<u64>(),
    ) {
        let cfg = SyntheticConfig {
            members,
            wb_rate: rates[0],
            ev_rate: rates[1],
            hp_rate: rates[2],
            bss_rate: rates[3],
            pv_rate: rates[4],
            steps_per_day: steps,
            num_days: days,
            ..SyntheticConfig::default()
        };
        let s = generate_synthetic(&cfg, seed).unwrap();
        prop_assert!(validate_scenario(&s).is_empty());
        prop_assert!(reference_violations(&s).is_empty());
        let c = device_counts(&s);
        prop_assert_eq!(c["wb"], cfg.count(cfg.wb_rate));
        prop_assert_eq!(c["ev"], cfg.count(cfg.ev_rate));
        prop_assert_eq!(c["hp"], cfg.count(cfg.hp_rate));
        prop_assert_eq!(c["bss"], cfg.count(cfg.bss_rate));
        let back = load_scenario(s.to_json().as_bytes()).unwrap();
        prop_assert_eq!(&back, &s);
        let compact = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(load_scenario(compact.as_bytes()).unwrap(), s);
    }
}
