//! Independent checking of an allocation against a scenario.
//!
//! Rates are recomputed here from geometry with a decibel link budget
//! rather than taken from the model, and the URLLC requirement is checked
//! on the queueing delay itself instead of its equivalent rate floor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{feasibility_tol, Allocation, Family};
use crate::net::{GnbId, RbId, Scenario, SliceKind, SliceParams, UserEquipment, UserId, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("allocation references unknown {0}")]
    UnknownId(String),
    #[error("{label} names {given} but the user's home gNodeB is {home}")]
    GnbMismatch { label: String, given: GnbId, home: GnbId },
    #[error("invalid geometry for {0}: zero distance to its gNodeB")]
    Geometry(UserId),
}

/// Queueing delay of an M/M/1 user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delay {
    Seconds(f64),
    /// Service rate at or below the arrival rate; the queue grows without bound.
    Unstable,
}

impl Delay {
    pub fn seconds(self) -> Option<f64> {
        match self {
            Delay::Seconds(s) => Some(s),
            Delay::Unstable => None,
        }
    }

    /// Unstable never meets a cap.
    pub fn within(self, cap: f64) -> bool {
        matches!(self, Delay::Seconds(d) if d <= cap)
    }
}

/// `1 / (r/δ − λ)`, or `Unstable` when `r/δ ≤ λ`.
pub fn user_delay(rate_bps: f64, slice: &SliceParams) -> Delay {
    let service = rate_bps / slice.packet_len() - slice.packet_rate();
    if service > 0.0 {
        Delay::Seconds(1.0 / service)
    } else {
        Delay::Unstable
    }
}

/// Single-RB rate from the decibel link budget.
pub fn link_rate(scenario: &Scenario, user: &UserEquipment) -> Result<f64, VerifyError> {
    let gnb = scenario
        .gnb(user.home_gnb)
        .ok_or_else(|| VerifyError::UnknownId(format!("{} (home of {})", user.home_gnb, user.id)))?;
    let d = (gnb.position.x - user.position.x).hypot(gnb.position.y - user.position.y);
    if !(d > 0.0) {
        return Err(VerifyError::Geometry(user.id));
    }
    let fspl_db = 20.0 * d.log10()
        + 20.0 * scenario.carrier_freq_hz.log10()
        + 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT).log10();
    let snr_db = gnb.tx_power_dbm - fspl_db - scenario.noise_dbm;
    Ok(scenario.rb_bandwidth_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2())
}

/// Total rate of `user` under `alloc`.
pub fn user_rate(alloc: &Allocation, scenario: &Scenario, user: UserId) -> Result<f64, VerifyError> {
    let u = scenario.user(user).ok_or_else(|| VerifyError::UnknownId(user.to_string()))?;
    let count: i64 = alloc.iter().filter(|(l, _)| l.user == user).map(|(_, v)| v).sum();
    if count == 0 {
        return Ok(0.0);
    }
    Ok(count as f64 * link_rate(scenario, u)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: Family,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb_id: Option<RbId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<UserId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gnb_id: Option<GnbId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub family: Family,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user_id: UserId,
    pub home_gnb: GnbId,
    pub slice: SliceKind,
    pub rate_bps: f64,
    pub delay: Delay,
    pub rbs_assigned: i64,
    pub borrowed_rbs: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbMetrics {
    pub gnb_id: GnbId,
    pub pool_size: usize,
    /// Home users holding at least one RB.
    pub served_users: usize,
    /// Home users holding at least one RB from this gNodeB's own pool.
    pub native_served_users: usize,
    /// Pool RBs assigned to anyone.
    pub rbs_in_use: usize,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub feasible: bool,
    pub objective_bps: f64,
    pub families: Vec<FamilyResult>,
    pub users: Vec<UserMetrics>,
    pub gnbs: Vec<GnbMetrics>,
}

impl VerificationReport {
    pub fn family(&self, f: Family) -> &FamilyResult {
        self.families.iter().find(|r| r.family == f).expect("every family is reported")
    }

    /// Families with at least one violation.
    pub fn failed_families(&self) -> Vec<Family> {
        self.families.iter().filter(|r| !r.passed).map(|r| r.family).collect()
    }

    pub fn user(&self, id: UserId) -> Option<&UserMetrics> {
        self.users.iter().find(|u| u.user_id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "feasible: {}\nobjective: {:.6e} bit/s\n",
            self.feasible, self.objective_bps
        );
        for f in &self.families {
            s.push_str(&format!(
                "{}: {} ({} violations)\n",
                f.family,
                if f.passed { "pass" } else { "FAIL" },
                f.violations.len()
            ));
        }
        for g in &self.gnbs {
            s.push_str(&format!(
                "{}: served {} (native {}), {}/{} RBs in use\n",
                g.gnb_id, g.served_users, g.native_served_users, g.rbs_in_use, g.pool_size
            ));
        }
        s
    }
}

pub fn verify_allocation(alloc: &Allocation, scenario: &Scenario) -> Result<VerificationReport, VerifyError> {
    let owner = scenario.rb_owner();
    for (label, _) in alloc.iter() {
        if !owner.contains_key(&label.rb) {
            return Err(VerifyError::UnknownId(label.rb.to_string()));
        }
        let u = scenario.user(label.user).ok_or_else(|| VerifyError::UnknownId(label.user.to_string()))?;
        if u.home_gnb != label.gnb {
            return Err(VerifyError::GnbMismatch { label: label.to_string(), given: label.gnb, home: u.home_gnb });
        }
    }
    let mut v: BTreeMap<Family, Vec<Violation>> = Family::ALL.iter().map(|f| (*f, Vec::new())).collect();
    let mut push = |family: Family, message: String, rb: Option<RbId>, user: Option<UserId>, gnb: Option<GnbId>| {
        v.get_mut(&family)
            .expect("all families present")
            .push(Violation { family, message, rb_id: rb, user_id: user, gnb_id: gnb })
    };

    for (label, value) in alloc.iter() {
        if value != 0 && value != 1 {
            push(Family::C6, format!("{label} = {value}"), Some(label.rb), Some(label.user), Some(label.gnb));
        }
    }

    let mut per_user: BTreeMap<UserId, i64> = BTreeMap::new();
    let mut per_rb: BTreeMap<RbId, i64> = BTreeMap::new();
    let mut borrowed: BTreeMap<UserId, i64> = BTreeMap::new();
    let mut native_use: BTreeMap<GnbId, i64> = BTreeMap::new();
    for (label, value) in alloc.iter() {
        *per_user.entry(label.user).or_default() += value;
        *per_rb.entry(label.rb).or_default() += value;
        if owner[&label.rb] != label.gnb {
            *borrowed.entry(label.user).or_default() += value;
        } else {
            *native_use.entry(label.gnb).or_default() += value;
        }
    }

    let mut users: Vec<&UserEquipment> = scenario.users.iter().collect();
    users.sort_by_key(|u| u.id);
    let k_max = i64::from(scenario.k_max);
    for u in &users {
        let n = per_user.get(&u.id).copied().unwrap_or(0);
        if n > k_max {
            push(Family::C1, format!("{} holds {n} RBs, cap {k_max}", u.id), None, Some(u.id), Some(u.home_gnb));
        }
    }
    for (rb, n) in &per_rb {
        if *n > 1 {
            push(Family::C2, format!("{rb} assigned {n} times"), Some(*rb), None, Some(owner[rb]));
        }
    }
    let mut gnbs: Vec<_> = scenario.gnbs.iter().collect();
    gnbs.sort_by_key(|g| g.id);
    for g in &gnbs {
        let pool = g.rb_ids.len() as i64;
        let used = native_use.get(&g.id).copied().unwrap_or(0);
        for (label, value) in alloc.iter() {
            if label.gnb == g.id && owner[&label.rb] != g.id && value * pool - used > 0 {
                push(
                    Family::C3,
                    format!("{} borrows {} while only {used} of {pool} native RBs are in use", label.user, label.rb),
                    Some(label.rb),
                    Some(label.user),
                    Some(g.id),
                );
            }
        }
    }

    let mut metrics = Vec::with_capacity(users.len());
    let mut objective = 0.0;
    for u in &users {
        let rate = user_rate(alloc, scenario, u.id)?;
        objective += rate;
        let slice = scenario.slices.get(u.slice);
        let delay = user_delay(rate, slice);
        match u.slice {
            SliceKind::Embb => {
                let floor = slice.rate_floor().unwrap_or(0.0);
                if rate + feasibility_tol(floor) < floor {
                    push(
                        Family::C4,
                        format!("{} rate {rate:.1} bit/s below floor {floor}", u.id),
                        None,
                        Some(u.id),
                        Some(u.home_gnb),
                    );
                }
            }
            SliceKind::Urllc => {
                let cap = slice.delay_cap().unwrap_or(f64::INFINITY);
                if !delay.within(cap * (1.0 + 1e-9)) {
                    let shown = match delay {
                        Delay::Seconds(d) => format!("{d:.3e} s"),
                        Delay::Unstable => "unstable".into(),
                    };
                    push(
                        Family::C5,
                        format!("{} delay {shown} exceeds cap {cap} s", u.id),
                        None,
                        Some(u.id),
                        Some(u.home_gnb),
                    );
                }
            }
        }
        metrics.push(UserMetrics {
            user_id: u.id,
            home_gnb: u.home_gnb,
            slice: u.slice,
            rate_bps: rate,
            delay,
            rbs_assigned: per_user.get(&u.id).copied().unwrap_or(0),
            borrowed_rbs: borrowed.get(&u.id).copied().unwrap_or(0),
        });
    }

    let gnb_metrics = gnbs
        .iter()
        .map(|g| {
            let home: Vec<&UserMetrics> = metrics.iter().filter(|m| m.home_gnb == g.id).collect();
            let in_use = g.rb_ids.iter().filter(|rb| per_rb.get(rb).copied().unwrap_or(0) > 0).count();
            GnbMetrics {
                gnb_id: g.id,
                pool_size: g.rb_ids.len(),
                served_users: home.iter().filter(|m| m.rbs_assigned > 0).count(),
                native_served_users: home.iter().filter(|m| m.rbs_assigned > m.borrowed_rbs).count(),
                rbs_in_use: in_use,
                utilization: if g.rb_ids.is_empty() { 0.0 } else { in_use as f64 / g.rb_ids.len() as f64 },
            }
        })
        .collect();

    let families: Vec<FamilyResult> = v
        .into_iter()
        .map(|(family, violations)| FamilyResult { family, passed: violations.is_empty(), violations })
        .collect();
    Ok(VerificationReport {
        feasible: families.iter().all(|f| f.passed),
        objective_bps: objective,
        families,
        users: metrics,
        gnbs: gnb_metrics,
    })
}
