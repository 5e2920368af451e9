mod common;

use reccoord::billing::activation_price;
use reccoord::decentral::{
    member_activate, member_offer, run_ecflexit, run_ecflexit_days, ActivationBounds, DecentralError, EcflexitOptions,
    FlexRequest, MemberAgent, Variant,
};
use reccoord::kor::Key;
use reccoord::lp::Backend;
use reccoord::planner::{run_centralized, DayStart, DeviceRefs, PlanOptions, PlannerMode};
use reccoord::scenario::{validate_scenario, EvParams, Horizon, Member, Prices, Scenario, SCHEMA_VERSION};
use reccoord::verify::verify_run;

const PRICE: f64 = 0.28;

fn request(up: &[(usize, f64)], down: &[(usize, f64)]) -> FlexRequest {
    let mut r = FlexRequest { up_kw: vec![0.0; 24], down_kw: vec![0.0; 24], activation_price: vec![PRICE; 24] };
    for &(k, x) in up {
        r.up_kw[k] = x;
    }
    for &(k, x) in down {
        r.down_kw[k] = x;
    }
    r
}

fn agent(s: &Scenario, u: usize) -> MemberAgent<'_> {
    let refs = DeviceRefs::from_scenario(s, 0).swap_remove(u);
    MemberAgent::new(s, u, 0, refs, DayStart::initial(s).members[u])
}

fn total(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// An always-plugged EV whose reference charges 4 kW at 18 h and 19 h.
fn ev_day(reluctance: f64) -> Scenario {
    let power: Vec<f64> = (0..24).map(|h| if h == 18 || h == 19 { 4.0 } else { 0.0 }).collect();
    let mut soc = 0.5;
    let soc_ref = power
        .iter()
        .map(|p| {
            soc += p / 40.0;
            soc
        })
        .collect();
    let mut m = Member::passive("driver", vec![0.2; 24], vec![0.0; 24]);
    m.ev = Some(EvParams {
        capacity_kwh: 40.0,
        max_charge_kw: 7.0,
        efficiency: 1.0,
        plugged: vec![true; 24],
        arrival: vec![false; 24],
        departure: vec![false; 24],
        soc_arrival: vec![0.0; 24],
        soc_ref,
        soc_init: 0.5,
        power_ref_kw: power,
        reluctance_eur: reluctance,
    });
    let s = Scenario {
        schema: SCHEMA_VERSION,
        horizon: Horizon { steps_per_day: 24, dt_hours: 1.0, num_days: 1 },
        prices: Prices::flat(0.4, 0.1, 0.01, 24),
        members: vec![m],
    };
    assert!(validate_scenario(&s).is_empty());
    s
}

#[test]
fn no_request_no_offer() {
    let s = common::thermal_shift_scenario();
    let o = member_offer(&agent(&s, 1), &request(&[], &[]), Backend::Highs).unwrap();
    assert!(o.up_kw.iter().chain(&o.down_kw).all(|&x| x == 0.0));
    assert_eq!(o.member, "consumer");
}

#[test]
fn thermal_loads_move_to_the_requested_hours() {
    let s = common::thermal_shift_scenario();
    let a = agent(&s, 1);
    let req = request(&[(11, 5.0), (12, 5.0)], &[(18, 5.0), (19, 5.0)]);
    let o = member_offer(&a, &req, Backend::Highs).unwrap();
    // Boiler 2 kW and heat pump 1.2 kW, both hours.
    assert!((total(&o.up_kw) - 6.4).abs() < 1e-6, "{:?}", o.up_kw);
    assert!((total(&o.down_kw) - 6.4).abs() < 1e-6, "{:?}", o.down_kw);
    assert!(o.up_kw.iter().enumerate().all(|(k, &x)| x == 0.0 || k == 11 || k == 12));

    // The producer has nothing to move.
    let p = member_offer(&agent(&s, 0), &req, Backend::Highs).unwrap();
    assert!(p.up_kw.iter().chain(&p.down_kw).all(|&x| x == 0.0));
}

#[test]
fn activation_within_bounds() {
    let s = common::thermal_shift_scenario();
    let a = agent(&s, 1);
    let price = vec![PRICE; 24];
    let zero = ActivationBounds { member: "consumer".into(), up_kw: vec![0.0; 24], down_kw: vec![0.0; 24] };
    let out = member_activate(&a, &zero, &price, Backend::Highs).unwrap();
    assert!(out.activation.up_kw.iter().chain(&out.activation.down_kw).all(|&x| x == 0.0));

    let req = request(&[(11, 5.0), (12, 5.0)], &[(18, 5.0), (19, 5.0)]);
    let offer = member_offer(&a, &req, Backend::Highs).unwrap();
    let full = ActivationBounds { member: offer.member.clone(), up_kw: offer.up_kw.clone(), down_kw: offer.down_kw.clone() };
    let out = member_activate(&a, &full, &price, Backend::Highs).unwrap();
    assert!((total(&out.activation.up_kw) - total(&offer.up_kw)).abs() < 1e-6);

    // Unbalanced bounds: only as much up as down can be matched.
    let mut half = full.clone();
    half.down_kw[19] = 0.0;
    let out = member_activate(&a, &half, &price, Backend::Highs).unwrap();
    let (up, down) = (total(&out.activation.up_kw), total(&out.activation.down_kw));
    assert!((up - down).abs() < 1e-9);
    assert!((up - 3.2).abs() < 1e-6, "{up}");
    for k in 0..24 {
        assert!(out.activation.up_kw[k] <= half.up_kw[k] + 1e-9);
        assert!(out.activation.down_kw[k] <= half.down_kw[k] + 1e-9);
    }
}

#[test]
fn reluctant_driver_only_charges_earlier() {
    let earlier = request(&[(10, 8.0), (11, 8.0)], &[(18, 8.0), (19, 8.0)]);
    let later = request(&[(21, 8.0), (22, 8.0)], &[(18, 8.0), (19, 8.0)]);

    let keen = ev_day(0.0);
    let o = member_offer(&agent(&keen, 0), &later, Backend::Highs).unwrap();
    assert!((total(&o.up_kw) - 8.0).abs() < 1e-6, "{:?}", o.up_kw);

    let reluctant = ev_day(100.0);
    let o = member_offer(&agent(&reluctant, 0), &later, Backend::Highs).unwrap();
    assert!(total(&o.up_kw) < 1e-9, "{:?}", o.up_kw);
    let o = member_offer(&agent(&reluctant, 0), &earlier, Backend::Highs).unwrap();
    assert!((total(&o.up_kw) - 8.0).abs() < 1e-6, "{:?}", o.up_kw);
}

fn bills(days: &[reccoord::DaySchedule]) -> f64 {
    days.iter().map(|d| d.total_bill).sum()
}

#[test]
fn without_flexibility_it_is_ecfix() {
    let mut s = common::small_synthetic(3);
    for m in &mut s.members {
        m.ev = None;
        m.wb = None;
        m.hp = None;
    }
    let ecfix = bills(&run_centralized(&s, PlannerMode::ECFix, PlanOptions::default()).unwrap());
    for key in Key::ALL {
        let (days, traces) = run_ecflexit_days(&s, key, Variant::Plain, &EcflexitOptions::default()).unwrap();
        assert!((bills(&days) - ecfix).abs() < 1e-6, "{key}");
        assert!(traces.len() <= 1);
    }
}

#[test]
fn without_pv_it_is_ecfix() {
    let mut s = common::small_synthetic(11);
    for m in &mut s.members {
        m.pv_max_kw.iter_mut().for_each(|x| *x = 0.0);
        m.pv_capacity_kwp = 0.0;
    }
    let ecfix = bills(&run_centralized(&s, PlannerMode::ECFix, PlanOptions::default()).unwrap());
    let (days, _) = run_ecflexit_days(&s, Key::Cascade, Variant::Plain, &EcflexitOptions::default()).unwrap();
    assert!((bills(&days) - ecfix).abs() < 1e-6);
}

#[test]
fn toy_community_gap() {
    let s = common::bundled("toy4.json");
    let central = bills(&run_centralized(&s, PlannerMode::ECFlex, PlanOptions::default()).unwrap());
    for variant in [Variant::Plain, Variant::Primed] {
        for key in Key::ALL {
            let (days, traces) = run_ecflexit_days(&s, key, variant, &EcflexitOptions::default()).unwrap();
            let b = bills(&days);
            assert!(b >= central - 1e-6, "{variant} {key}: {b} < {central}");
            assert!((b - central) / central <= 0.10, "{variant} {key}: {b} vs {central}");
            assert!(verify_run(&s, &days).is_empty());

            // Revenue is what the traces say was paid for upward activation.
            let price = activation_price(&s.prices).unwrap();
            for (u, m) in days[0].members.iter().enumerate() {
                let paid: f64 = traces
                    .iter()
                    .map(|t| t.activations[u].up_kw.iter().zip(&price).map(|(a, p)| a * p).sum::<f64>())
                    .sum::<f64>()
                    * s.horizon.dt_hours;
                assert!((m.flex_revenue - paid).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn remaining_request_never_grows() {
    let s = common::thermal_shift_scenario();
    let (_, traces) = run_ecflexit(&s, 0, Key::Equal, Variant::Plain, &DayStart::initial(&s), &EcflexitOptions::default())
        .unwrap();
    assert!(!traces.is_empty());
    for pair in traces.windows(2) {
        for k in 0..24 {
            assert!(pair[1].remaining_up_kw[k] <= pair[0].remaining_up_kw[k]);
            assert!(pair[1].remaining_down_kw[k] <= pair[0].remaining_down_kw[k]);
        }
    }
}

#[test]
fn iteration_cap_is_an_error() {
    let s = common::thermal_shift_scenario();
    let opts = EcflexitOptions { max_iters: 0, ..EcflexitOptions::default() };
    match run_ecflexit(&s, 0, Key::Equal, Variant::Plain, &DayStart::initial(&s), &opts) {
        Err(DecentralError::IterationCap { day: 0, cap: 0, traces }) => assert!(traces.is_empty()),
        other => panic!("expected an iteration cap error, got {:?}", other.map(|r| r.1.len())),
    }
    assert!(run_ecflexit(&s, 1, Key::Equal, Variant::Plain, &DayStart::initial(&s), &opts).is_err());
}
