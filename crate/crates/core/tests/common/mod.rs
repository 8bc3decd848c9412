//! Independent oracles shared by the integration tests. Nothing here goes
//! through the model builder: rates come straight from geometry and
//! feasibility straight from the allocation rules.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ranslice::model::Allocation;
use ranslice::net::{generate_scenario, GnbId, RbId, Scenario, ScenarioConfig, SliceKind, UserId};

pub const EMBB_FLOOR_BPS: f64 = 100_000.0;
pub const URLLC_DMAX_S: f64 = 0.010;
pub const URLLC_PACKET_BITS: f64 = 120.0;
pub const URLLC_ARRIVALS_PPS: f64 = 100.0;

/// Per-RB rate from first principles: free space, Shannon, scenario power
/// and noise.
pub fn rb_rate(sc: &Scenario, user: UserId) -> f64 {
    let u = sc.user(user).expect("user");
    let g = sc.gnb(u.home_gnb).expect("home");
    let d = ((g.position.x - u.position.x).powi(2) + (g.position.y - u.position.y).powi(2)).sqrt();
    let wavelength = 3.0e8 / sc.carrier_freq_hz;
    let gain = (wavelength / (4.0 * PI * d)).powi(2);
    let p = 10f64.powf((g.tx_power_dbm - 30.0) / 10.0);
    let n = 10f64.powf((sc.noise_dbm - 30.0) / 10.0);
    sc.rb_bandwidth_hz * (1.0 + p * gain / n).log2()
}

/// M/M/1 sojourn time, `None` when the queue is unstable.
pub fn mm1_delay(rate_bps: f64, packet_bits: f64, arrivals: f64) -> Option<f64> {
    let mu = rate_bps / packet_bits;
    (mu > arrivals).then(|| 1.0 / (mu - arrivals))
}

/// Rule-by-rule feasibility of a set of `(rb, user)` pairs.
pub fn oracle_feasible(sc: &Scenario, pairs: &[(RbId, UserId)]) -> bool {
    let owner = sc.rb_owner();
    let mut per_user: BTreeMap<UserId, u32> = BTreeMap::new();
    let mut per_rb: BTreeMap<RbId, u32> = BTreeMap::new();
    for &(rb, u) in pairs {
        *per_user.entry(u).or_default() += 1;
        *per_rb.entry(rb).or_default() += 1;
    }
    if per_user.values().any(|&n| n > sc.k_max) || per_rb.values().any(|&n| n > 1) {
        return false;
    }
    let home = |u: UserId| sc.user(u).unwrap().home_gnb;
    // a gNodeB may borrow only once every native RB serves one of its users
    for &(rb, u) in pairs {
        let g = home(u);
        if owner[&rb] != g {
            let pool = &sc.gnb(g).unwrap().rb_ids;
            let saturated = pool.iter().all(|k| pairs.iter().any(|&(r, v)| r == *k && home(v) == g));
            if !saturated {
                return false;
            }
        }
    }
    sc.users.iter().all(|u| {
        let r = rb_rate(sc, u.id) * f64::from(per_user.get(&u.id).copied().unwrap_or(0));
        match u.slice {
            SliceKind::Embb => r >= EMBB_FLOOR_BPS,
            SliceKind::Urllc => {
                mm1_delay(r, URLLC_PACKET_BITS, URLLC_ARRIVALS_PPS).is_some_and(|d| d <= URLLC_DMAX_S)
            }
        }
    })
}

/// Exhaustive optimum over every subset of `(rb, user)` pairs, `None` if
/// nothing is feasible. Only meant for a couple dozen pairs.
pub fn brute_force(sc: &Scenario) -> Option<f64> {
    let pairs: Vec<(RbId, UserId)> =
        sc.rb_ids().into_iter().flat_map(|rb| sc.users.iter().map(move |u| (rb, u.id))).collect();
    assert!(pairs.len() <= 24, "{} pairs is too many to enumerate", pairs.len());
    let rates: Vec<f64> = pairs.iter().map(|&(_, u)| rb_rate(sc, u)).collect();
    let mut best: Option<f64> = None;
    let mut chosen = Vec::with_capacity(pairs.len());
    for mask in 0u32..1 << pairs.len() {
        chosen.clear();
        chosen.extend((0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]));
        if !oracle_feasible(sc, &chosen) {
            continue;
        }
        let v: f64 = (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| rates[i]).sum();
        if best.is_none_or(|b| v > b) {
            best = Some(v);
        }
    }
    best
}

pub fn pairs_of(alloc: &Allocation) -> Vec<(RbId, UserId)> {
    alloc.iter().filter(|(_, v)| *v == 1).map(|(l, _)| (l.rb, l.user)).collect()
}

pub fn objective_of(sc: &Scenario, alloc: &Allocation) -> f64 {
    pairs_of(alloc).iter().map(|&(_, u)| rb_rate(sc, u)).sum()
}

/// Distinct home users holding at least one RB of their own gNodeB's pool.
pub fn native_served(sc: &Scenario, alloc: &Allocation, g: GnbId) -> usize {
    let owner = sc.rb_owner();
    let mut users: Vec<UserId> =
        pairs_of(alloc).into_iter().filter(|&(rb, u)| owner[&rb] == g && sc.user(u).unwrap().home_gnb == g).map(|p| p.1).collect();
    users.sort();
    users.dedup();
    users.len()
}

/// Seeded small instance with at most `max_vars` (rb, user) pairs. Some
/// draws raise the noise floor far enough that QoS needs several RBs.
pub fn small_scenario(seed: u64, max_vars: u32) -> Scenario {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_5ca1e);
    loop {
        let gnbs = rng.gen_range(1..=2u32);
        let rbs: Vec<u32> = (0..gnbs).map(|_| rng.gen_range(1..=4)).collect();
        let users: Vec<u32> = (0..gnbs).map(|_| rng.gen_range(0..=3)).collect();
        let n = rbs.iter().sum::<u32>() * users.iter().sum::<u32>();
        if n == 0 || n > max_vars {
            continue;
        }
        let mut cfg = ScenarioConfig::with_cells(rbs, users);
        cfg.k_max = rng.gen_range(1..=3);
        cfg.noise_dbm = [-117.0, -60.0, -55.0][rng.gen_range(0..3)];
        return generate_scenario(&cfg, seed).expect("scenario");
    }
}

/// Every value each row's slack register can take, found by enumerating
/// all of its bit patterns.
pub fn reachable_slack(q: &ranslice::qubo::QuboModel) -> Vec<Vec<i64>> {
    q.rows()
        .iter()
        .map(|r| {
            assert!(r.slack.len() <= 20, "slack register too wide to enumerate");
            let mut v: Vec<i64> = (0u32..1 << r.slack.len())
                .map(|m| r.slack.iter().enumerate().filter(|(j, _)| m >> j & 1 == 1).map(|(_, s)| s.1).sum())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect()
}

/// Minimum QUBO energy over all slack settings for a decision vector, with
/// the penalty written out from the row data rather than the coefficient map.
pub fn min_energy_over_slack(q: &ranslice::qubo::QuboModel, reach: &[Vec<i64>], x: &[bool]) -> f64 {
    let mut penalty = 0.0;
    for (r, values) in q.rows().iter().zip(reach) {
        let lhs: i64 = r.terms.iter().filter(|(i, _)| x[*i]).map(|t| t.1).sum();
        let want = r.rhs - lhs;
        let pos = values.partition_point(|&s| s < want);
        let mut best = i64::MAX;
        for s in [pos.checked_sub(1).map(|p| values[p]), values.get(pos).copied()].into_iter().flatten() {
            best = best.min((lhs + s - r.rhs).abs());
        }
        penalty += q.penalty_weight() * (best as f64) * (best as f64);
    }
    -q.objective_value(x) + penalty
}

pub fn all_bits(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << n).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
}

/// One native RB per user, lowest ids first. Feasible whenever every pool
/// has at least as many RBs as home users and one RB meets each floor.
pub fn one_rb_each(sc: &Scenario) -> Allocation {
    use ranslice::model::VarLabel;
    let mut a = Allocation::new();
    for g in &sc.gnbs {
        for (u, rb) in sc.users_of(g.id).zip(&g.rb_ids) {
            a.set(VarLabel::new(*rb, g.id, u.id));
        }
    }
    a
}

/// Breaks exactly one constraint family of a [`one_rb_each`] allocation.
/// Needs two gNodeBs, each with at least `k_max + 1` spare native RBs,
/// and at least one user of each slice.
pub fn inject(sc: &Scenario, base: &Allocation, family: ranslice::model::Family) -> Allocation {
    use ranslice::model::{Family, VarLabel};
    let mut a = base.clone();
    let used: Vec<RbId> = pairs_of(base).into_iter().map(|p| p.0).collect();
    let free = |g: &ranslice::net::GNodeB| -> Vec<RbId> {
        g.rb_ids.iter().copied().filter(|rb| !used.contains(rb)).collect()
    };
    let g0 = &sc.gnbs[0];
    let g1 = &sc.gnbs[1];
    let u0 = sc.users_of(g0.id).next().expect("user at first gNodeB");
    match family {
        Family::C1 => {
            for rb in free(g0).into_iter().take(sc.k_max as usize) {
                a.set(VarLabel::new(rb, g0.id, u0.id));
            }
        }
        Family::C2 => {
            let u = sc.users_of(g0.id).nth(1).expect("second user at first gNodeB");
            let (rb, _) = pairs_of(base).into_iter().find(|p| p.1 == u0.id).unwrap();
            a.set(VarLabel::new(rb, g0.id, u.id));
        }
        Family::C3 => {
            let u = sc.users_of(g1.id).next().expect("user at second gNodeB");
            a.set(VarLabel::new(free(g0)[0], g1.id, u.id));
        }
        Family::C4 | Family::C5 => {
            let slice = if family == Family::C4 { SliceKind::Embb } else { SliceKind::Urllc };
            let u = sc.users.iter().find(|u| u.slice == slice).expect("user of the slice");
            for (rb, _) in pairs_of(base).into_iter().filter(|p| p.1 == u.id) {
                a.clear(&VarLabel::new(rb, u.home_gnb, u.id));
            }
        }
        Family::C6 => {
            let (rb, user) = pairs_of(base)[0];
            a.insert(VarLabel::new(rb, sc.user(user).unwrap().home_gnb, user), 2);
        }
    }
    a
}
