mod common;

use common::{inject, mm1_delay, one_rb_each, rb_rate, EMBB_FLOOR_BPS, URLLC_DMAX_S};
use ranslice::model::{build_model, Allocation, Family, VarLabel};
use ranslice::net::{generate_scenario, Scenario, ScenarioConfig, SliceKind};
use ranslice::qubo::{to_qubo, PenaltyConfig};
use ranslice::solve::{solve_sa, AnnealSchedule};
use ranslice::verify::{user_delay, verify_allocation, Delay, VerificationReport};

fn mutation_scenario(seed: u64) -> Scenario {
    let mut cfg = ScenarioConfig::with_cells(vec![8, 6], vec![2, 2]);
    cfg.k_max = 3;
    generate_scenario(&cfg, seed).unwrap()
}

#[test]
fn base_allocation_is_clean() {
    for seed in 0..10 {
        let sc = mutation_scenario(seed);
        let r = verify_allocation(&one_rb_each(&sc), &sc).unwrap();
        assert!(r.feasible, "seed {seed}\n{}", r.summary());
    }
}

#[test]
fn each_injection_is_flagged_under_its_own_family() {
    for seed in 0..10 {
        let sc = mutation_scenario(seed);
        let base = one_rb_each(&sc);
        for f in [Family::C1, Family::C2, Family::C3, Family::C4, Family::C5] {
            let r = verify_allocation(&inject(&sc, &base, f), &sc).unwrap();
            assert!(!r.feasible);
            assert_eq!(r.failed_families(), vec![f], "seed {seed}\n{}", r.summary());
        }
    }
}

#[test]
fn non_binary_value_is_a_domain_violation() {
    let sc = mutation_scenario(1);
    let r = verify_allocation(&inject(&sc, &one_rb_each(&sc), Family::C6), &sc).unwrap();
    assert!(r.failed_families().contains(&Family::C6));
}

#[test]
fn violations_name_the_culprit() {
    let sc = mutation_scenario(2);
    let base = one_rb_each(&sc);
    let r = verify_allocation(&inject(&sc, &base, Family::C2), &sc).unwrap();
    let v = &r.family(Family::C2).violations[0];
    assert!(v.rb_id.is_some());
    let r = verify_allocation(&inject(&sc, &base, Family::C5), &sc).unwrap();
    let v = &r.family(Family::C5).violations[0];
    let u = sc.user(v.user_id.unwrap()).unwrap();
    assert_eq!(u.slice, SliceKind::Urllc);
    assert_eq!(r.user(u.id).unwrap().delay, Delay::Unstable);
}

fn check_qos_independently(sc: &Scenario, alloc: &Allocation, r: &VerificationReport) {
    for u in &sc.users {
        let n = alloc.iter().filter(|(l, v)| l.user == u.id && *v == 1).count() as f64;
        let rate = rb_rate(sc, u.id) * n;
        let m = r.user(u.id).unwrap();
        assert!((m.rate_bps - rate).abs() <= 1e-9 * rate.max(1.0));
        match u.slice {
            SliceKind::Embb => assert!(rate >= EMBB_FLOOR_BPS),
            SliceKind::Urllc => {
                let d = mm1_delay(rate, 120.0, 100.0).expect("stable queue");
                assert!(d <= URLLC_DMAX_S * (1.0 + 1e-12), "{}: {d}", u.id);
            }
        }
    }
}

#[test]
fn feasible_reports_hold_up_against_direct_qos_evaluation() {
    for seed in 0..4 {
        let sc = generate_scenario(&ScenarioConfig::uniform(2, 12, 8), seed).unwrap();
        let m = build_model(&sc).unwrap();
        let q = to_qubo(&m, &PenaltyConfig::for_model(&m)).unwrap();
        let s = solve_sa(&q, &AnnealSchedule::default_for(&q, seed).with_reads(5)).unwrap();
        let r = verify_allocation(&s.allocation, &sc).unwrap();
        assert!(r.feasible);
        check_qos_independently(&sc, &s.allocation, &r);
    }
}

#[test]
fn delay_classification_matches_rate_floor() {
    let sc = mutation_scenario(0);
    let urllc = &sc.slices.urllc;
    for r in [0.0, 11_999.0, 12_000.0, 12_001.0, 23_999.0, 24_000.0, 24_001.0, 1e6] {
        let ok = user_delay(r, urllc).within(URLLC_DMAX_S);
        assert_eq!(ok, r >= 24_000.0, "rate {r}");
    }
    assert_eq!(user_delay(12_000.0, urllc), Delay::Unstable);
}

#[test]
fn report_metrics_are_consistent() {
    let sc = generate_scenario(&ScenarioConfig::four_cell_reference(), 0).unwrap();
    let base = one_rb_each(&sc);
    let mut a = base.clone();
    // fill gnb0's whole pool with its own users
    let g0 = &sc.gnbs[0];
    let home: Vec<_> = sc.users_of(g0.id).map(|u| u.id).collect();
    for (i, rb) in g0.rb_ids.iter().enumerate() {
        a.set(VarLabel::new(*rb, g0.id, home[i % home.len()]));
    }
    let r = verify_allocation(&a, &sc).unwrap();
    let gm = &r.gnbs[0];
    assert_eq!(gm.pool_size, g0.rb_ids.len());
    assert_eq!(gm.rbs_in_use, g0.rb_ids.len());
    assert_eq!(gm.utilization, 1.0);
    let total: f64 = r.users.iter().map(|u| u.rate_bps).sum();
    assert!((total - r.objective_bps).abs() <= 1e-9 * total);
    let json = r.to_json();
    let back: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(back["feasible"], serde_json::Value::Bool(r.feasible));
}
