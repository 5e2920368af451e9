mod common;

use reccoord::lp::Backend;
use reccoord::planner::{
    build_day_problem, prioritize_self_consumption, run_centralized, solve_centralized, solve_day, DayStart, DeviceRefs,
    PlanOptions, PlannerMode,
};
use reccoord::scenario::{Horizon, Member, Prices, Scenario, WbParams, SCHEMA_VERSION};
use reccoord::verify::verify_run;

/// One member, four 6-hour steps, a boiler whose reference heats in the last step.
fn boiler_day() -> Scenario {
    let mut m = Member::passive("solo", vec![0.25; 4], vec![0.0, 1.0, 0.5, 0.0]);
    m.wb = Some(WbParams {
        thermal_coeff: 1.0,
        max_power_kw: 1.0,
        temp_init: 60.0,
        temp_max: vec![100.0; 4],
        temp_limit: vec![40.0; 4],
        usage_event: vec![false, false, false, true],
        usage_loss_kw: vec![0.0, 0.0, 0.0, 1.0],
        envelope_loss_kw: vec![0.0; 4],
        power_ref_kw: vec![0.0, 0.0, 0.0, 1.0],
        reluctance_eur: 1.0,
    });
    Scenario {
        schema: SCHEMA_VERSION,
        horizon: Horizon { steps_per_day: 4, dt_hours: 6.0, num_days: 1 },
        prices: Prices::flat(0.4, 0.1, 0.01, 4),
        members: vec![m],
    }
}

/// Cheapest boiler schedule on a 0.25 kW grid, priced by hand.
fn grid_optimum(s: &Scenario) -> f64 {
    let m = &s.members[0];
    let wb = m.wb.as_ref().unwrap();
    let dt = s.horizon.dt_hours;
    let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut best = f64::INFINITY;
    for a in levels {
        for b in levels {
            for c in levels {
                for d in levels {
                    let p = [a, b, c, d];
                    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                        continue;
                    }
                    let mut temp = wb.temp_init;
                    let mut cost = 0.0;
                    for k in 0..4 {
                        temp += dt * (p[k] - wb.usage_loss_kw[k] - wb.envelope_loss_kw[k]) * wb.thermal_coeff;
                        cost += wb.reluctance_eur * (wb.temp_limit[k] - temp).max(0.0);
                        let net = m.fixed_load_kw[k] + p[k] - m.pv_max_kw[k];
                        cost += if net > 0.0 { net * 0.4 * dt } else { net * 0.1 * dt };
                    }
                    best = best.min(cost);
                }
            }
        }
    }
    best
}

#[test]
fn boiler_matches_grid_search() {
    let s = boiler_day();
    let oracle = grid_optimum(&s);
    for mode in [PlannerMode::SoloFlex, PlannerMode::ECFlex] {
        let d = solve_centralized(&s, 0, mode).unwrap();
        assert!((d.objective - oracle).abs() < 1e-6, "{mode}: {} vs {oracle}", d.objective);
        assert!(verify_run(&s, &[d]).is_empty());
    }
    // Pinned, the boiler heats in the dark and imports its 6 kWh.
    let fixed = solve_centralized(&s, 0, PlannerMode::SoloFix).unwrap();
    assert_eq!(fixed.members[0].wb, vec![0.0, 0.0, 0.0, 1.0]);
    assert!(fixed.objective > oracle + 1.0);
}

#[test]
fn problem_shape_depends_on_mode_not_on_solver() {
    let s = boiler_day();
    let flex = build_day_problem(&s, 0, PlannerMode::ECFlex, None).unwrap();
    let fix = build_day_problem(&s, 0, PlannerMode::ECFix, None).unwrap();
    assert_eq!(flex.num_vars(), fix.num_vars());
    assert!(flex.vars().iter().zip(fix.vars()).any(|(a, b)| a.lower != b.lower || a.upper != b.upper));
    assert!(build_day_problem(&s, 1, PlannerMode::ECFlex, None).is_err());
}

#[test]
fn every_mode_verifies_on_the_toy_community() {
    let s = common::bundled("toy4.json");
    for mode in PlannerMode::ALL {
        let days = run_centralized(&s, mode, PlanOptions::default()).unwrap();
        let issues = verify_run(&s, &days);
        assert!(issues.is_empty(), "{mode}: {issues:?}");
    }
}

#[test]
fn states_carry_across_days() {
    let s = common::bundled("community20.json").first_days(2).unwrap();
    for mode in [PlannerMode::ECFix, PlannerMode::ECFlex] {
        let days = run_centralized(&s, mode, PlanOptions::default()).unwrap();
        assert_eq!(days.len(), 2);
        let issues = verify_run(&s, &days);
        assert!(issues.is_empty(), "{mode}: {:?}", &issues[..issues.len().min(5)]);
    }
}

#[test]
fn backends_agree() {
    let s = common::bundled("toy4.json");
    let start = DayStart::initial(&s);
    let refs = DeviceRefs::from_scenario(&s, 0);
    let mut objectives = Vec::new();
    for backend in [Backend::Highs, Backend::Microlp] {
        let opts = PlanOptions { backend, ..PlanOptions::default() };
        let d = solve_day(&s, 0, PlannerMode::ECFlex, &refs, &start, None, opts, "test").unwrap();
        assert!(verify_run(&s, std::slice::from_ref(&d)).is_empty(), "{}", backend.name());
        objectives.push(d.objective);
    }
    assert!((objectives[0] - objectives[1]).abs() <= 1e-6 * objectives[0].abs().max(1.0), "{objectives:?}");
}

#[test]
fn self_consumption_refs_conserve_energy_and_move_into_pv_hours() {
    let s = common::thermal_shift_scenario();
    let refs = prioritize_self_consumption(&s, 0).unwrap();
    let base = DeviceRefs::from_scenario(&s, 0);
    assert!(refs[0].wb.is_empty() && refs[0].hp.is_empty() && refs[0].ev.is_empty());
    let consumer = &refs[1];
    assert!((consumer.wb.iter().sum::<f64>() - base[1].wb.iter().sum::<f64>()).abs() < 1e-9);
    assert!((consumer.hp.iter().sum::<f64>() - base[1].hp.iter().sum::<f64>()).abs() < 1e-9);

    // With its own PV the consumer moves its boiler into daylight.
    let mut own = s.clone();
    own.members[1].pv_max_kw = own.members[0].pv_max_kw.clone();
    let refs = prioritize_self_consumption(&own, 0).unwrap();
    let daylight: f64 = (8..=16).map(|h| refs[1].wb[h]).sum();
    assert!((daylight - 4.0).abs() < 1e-9, "{:?}", refs[1].wb);
}
