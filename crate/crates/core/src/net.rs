//! Physical-layer and topology model.
//!
//! A [`Scenario`] is a set of gNodeBs, each owning a disjoint pool of
//! resource blocks, plus users that each request one slice from one home
//! gNodeB. Channel gains follow free-space path loss and per-RB rates
//! follow the Shannon bound over an AWGN channel with no interference.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light used by the channel model, in m/s (rounded, not CODATA).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Users are never placed closer than this to their home gNodeB.
pub const MIN_USER_DISTANCE_M: f64 = 1.0;

/// Current version of the scenario document.
pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unsupported scenario version {0}")]
    Version(u32),
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
}

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(GnbId, "gnb");
id_type!(RbId, "rb");
id_type!(UserId, "ue");

/// Converts a power level from dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// Free-space path gain `(λ / 4πd)²` with `λ = c / f`.
pub fn channel_gain_fspl(distance_m: f64, freq_hz: f64) -> Result<f64, NetError> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(NetError::Domain(format!(
            "distance must be positive and finite, got {distance_m}"
        )));
    }
    if !(freq_hz > 0.0) || !freq_hz.is_finite() {
        return Err(NetError::Domain(format!(
            "frequency must be positive and finite, got {freq_hz}"
        )));
    }
    let wavelength = SPEED_OF_LIGHT / freq_hz;
    let ratio = wavelength / (4.0 * PI * distance_m);
    Ok(ratio * ratio)
}

/// Shannon rate of one resource block, `W log₂(1 + P·G / N)`, in bits/s.
pub fn per_rb_rate(bandwidth_hz: f64, tx_power_w: f64, gain: f64, noise_w: f64) -> f64 {
    bandwidth_hz * (1.0 + tx_power_w * gain / noise_w).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceKind {
    Urllc,
    Embb,
}

impl fmt::Display for SliceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceKind::Urllc => f.write_str("urllc"),
            SliceKind::Embb => f.write_str("embb"),
        }
    }
}

/// The QoS requirement attached to a slice. URLLC carries a delay cap,
/// eMBB a rate floor; the type makes the other one unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QosTarget {
    RateFloor { bps: f64 },
    DelayCap { seconds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceParams {
    kind: SliceKind,
    packet_rate_pps: f64,
    packet_len_bits: f64,
    qos: QosTarget,
}

impl SliceParams {
    pub fn urllc(packet_rate_pps: f64, packet_len_bits: f64, dmax_s: f64) -> Result<Self, NetError> {
        Self::checked(
            SliceKind::Urllc,
            packet_rate_pps,
            packet_len_bits,
            QosTarget::DelayCap { seconds: dmax_s },
        )
    }

    pub fn embb(packet_rate_pps: f64, packet_len_bits: f64, rmin_bps: f64) -> Result<Self, NetError> {
        Self::checked(
            SliceKind::Embb,
            packet_rate_pps,
            packet_len_bits,
            QosTarget::RateFloor { bps: rmin_bps },
        )
    }

    fn checked(
        kind: SliceKind,
        packet_rate_pps: f64,
        packet_len_bits: f64,
        qos: QosTarget,
    ) -> Result<Self, NetError> {
        if !(packet_rate_pps > 0.0 && packet_rate_pps.is_finite()) {
            return Err(NetError::Config(format!("{kind}: packet rate must be positive")));
        }
        if !(packet_len_bits > 0.0 && packet_len_bits.is_finite()) {
            return Err(NetError::Config(format!("{kind}: packet length must be positive")));
        }
        match qos {
            QosTarget::RateFloor { bps } if !(bps >= 0.0) || bps.is_nan() => {
                return Err(NetError::Config(format!("{kind}: rate floor must be nonnegative")))
            }
            // An infinite cap is allowed; it degenerates to the queue-stability bound.
            QosTarget::DelayCap { seconds } if !(seconds > 0.0) => {
                return Err(NetError::Config(format!("{kind}: delay cap must be positive")))
            }
            _ => {}
        }
        Ok(Self { kind, packet_rate_pps, packet_len_bits, qos })
    }

    pub fn kind(&self) -> SliceKind {
        self.kind
    }

    /// Packet arrival rate λ_s in packets per second.
    pub fn packet_rate(&self) -> f64 {
        self.packet_rate_pps
    }

    /// Packet length δ_s in bits.
    pub fn packet_len(&self) -> f64 {
        self.packet_len_bits
    }

    pub fn qos(&self) -> QosTarget {
        self.qos
    }

    pub fn rate_floor(&self) -> Option<f64> {
        match self.qos {
            QosTarget::RateFloor { bps } => Some(bps),
            QosTarget::DelayCap { .. } => None,
        }
    }

    pub fn delay_cap(&self) -> Option<f64> {
        match self.qos {
            QosTarget::DelayCap { seconds } => Some(seconds),
            QosTarget::RateFloor { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceTable {
    pub urllc: SliceParams,
    pub embb: SliceParams,
}

impl SliceTable {
    /// 100 packets/s for both slices, 120/400 bit packets, 10 ms URLLC cap,
    /// 100 kbps eMBB floor.
    pub fn reference() -> Self {
        Self {
            urllc: SliceParams::urllc(100.0, 120.0, 0.010).expect("static parameters"),
            embb: SliceParams::embb(100.0, 400.0, 100_000.0).expect("static parameters"),
        }
    }

    pub fn get(&self, kind: SliceKind) -> &SliceParams {
        match kind {
            SliceKind::Urllc => &self.urllc,
            SliceKind::Embb => &self.embb,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GNodeB {
    pub id: GnbId,
    pub position: Point,
    /// This gNodeB's RB pool K_m, ascending.
    pub rb_ids: Vec<RbId>,
    pub coverage_radius_m: f64,
    pub tx_power_dbm: f64,
}

impl GNodeB {
    pub fn tx_power_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEquipment {
    pub id: UserId,
    pub position: Point,
    pub slice: SliceKind,
    pub home_gnb: GnbId,
}

/// A complete physical network instance. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gnbs: Vec<GNodeB>,
    pub users: Vec<UserEquipment>,
    pub carrier_freq_hz: f64,
    pub rb_bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub slices: SliceTable,
    pub k_max: u32,
    pub seed: u64,
}

impl Scenario {
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn gnb(&self, id: GnbId) -> Option<&GNodeB> {
        self.gnbs.iter().find(|g| g.id == id)
    }

    pub fn user(&self, id: UserId) -> Option<&UserEquipment> {
        self.users.iter().find(|u| u.id == id)
    }

    /// All RB ids in ascending order.
    pub fn rb_ids(&self) -> Vec<RbId> {
        let mut ids: Vec<RbId> = self.gnbs.iter().flat_map(|g| g.rb_ids.iter().copied()).collect();
        ids.sort_unstable();
        ids
    }

    pub fn rb_owner(&self) -> BTreeMap<RbId, GnbId> {
        self.gnbs
            .iter()
            .flat_map(|g| g.rb_ids.iter().map(move |&rb| (rb, g.id)))
            .collect()
    }

    pub fn total_rbs(&self) -> usize {
        self.gnbs.iter().map(|g| g.rb_ids.len()).sum()
    }

    pub fn users_of(&self, gnb: GnbId) -> impl Iterator<Item = &UserEquipment> {
        self.users.iter().filter(move |u| u.home_gnb == gnb)
    }

    /// Rate r_kmn a user gets from any single RB. Borrowed RBs are
    /// transmitted by the home gNodeB and FSPL is frequency-flat, so the
    /// value does not depend on k.
    pub fn user_rb_rate(&self, user: &UserEquipment) -> Result<f64, NetError> {
        let home = self
            .gnb(user.home_gnb)
            .ok_or_else(|| NetError::Invalid(format!("{} has unknown home {}", user.id, user.home_gnb)))?;
        let gain = channel_gain_fspl(home.position.distance(&user.position), self.carrier_freq_hz)?;
        Ok(per_rb_rate(self.rb_bandwidth_hz, home.tx_power_watts(), gain, self.noise_watts()))
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let invalid = |msg: String| Err(NetError::Invalid(msg));
        if !(self.rb_bandwidth_hz > 0.0 && self.rb_bandwidth_hz.is_finite()) {
            return invalid("rb bandwidth must be positive".into());
        }
        if !(self.carrier_freq_hz > 0.0 && self.carrier_freq_hz.is_finite()) {
            return invalid("carrier frequency must be positive".into());
        }
        if !self.noise_dbm.is_finite() {
            return invalid("noise power must be finite".into());
        }
        if self.k_max < 1 {
            return invalid("k_max must be at least 1".into());
        }
        if self.slices.urllc.kind() != SliceKind::Urllc || self.slices.embb.kind() != SliceKind::Embb {
            return invalid("slice table entries are swapped".into());
        }
        let mut gnb_ids = BTreeSet::new();
        let mut rbs = BTreeSet::new();
        for g in &self.gnbs {
            if !gnb_ids.insert(g.id) {
                return invalid(format!("duplicate gNodeB id {}", g.id));
            }
            if !(g.coverage_radius_m > 0.0 && g.coverage_radius_m.is_finite()) {
                return invalid(format!("{}: coverage radius must be positive", g.id));
            }
            if !g.tx_power_dbm.is_finite() {
                return invalid(format!("{}: transmit power must be finite", g.id));
            }
            for &rb in &g.rb_ids {
                if !rbs.insert(rb) {
                    return invalid(format!("{rb} appears in more than one pool"));
                }
            }
        }
        let mut user_ids = BTreeSet::new();
        for u in &self.users {
            if !user_ids.insert(u.id) {
                return invalid(format!("duplicate user id {}", u.id));
            }
            let Some(home) = self.gnb(u.home_gnb) else {
                return invalid(format!("{} references unknown {}", u.id, u.home_gnb));
            };
            let d = home.position.distance(&u.position);
            if !(d > 0.0) {
                return invalid(format!("{} sits on top of {}", u.id, home.id));
            }
            // Small slack for positions that went through a text round trip.
            if d > home.coverage_radius_m * (1.0 + 1e-12) {
                return invalid(format!(
                    "{} is {d:.3} m from {}, outside its {} m coverage",
                    u.id, home.id, home.coverage_radius_m
                ));
            }
        }
        Ok(())
    }
}

/// Inputs for [`generate_scenario`]. Defaults follow the reference
/// simulation parameters (n77 carrier, 180 kHz RBs, 30 dBm per RB,
/// -117 dBm noise, 300 m cells in a 1 km square).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// RB pool size per gNodeB; its length is the gNodeB count.
    pub rbs_per_gnb: Vec<u32>,
    pub users_per_gnb: Vec<u32>,
    pub urllc_fraction: f64,
    pub area_side_m: f64,
    pub coverage_radius_m: f64,
    pub carrier_freq_hz: f64,
    pub rb_bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub tx_power_dbm: f64,
    pub slices: SliceTable,
    pub k_max: u32,
    /// Fixed gNodeB coordinates; a seeded jittered grid when absent.
    pub gnb_positions: Option<Vec<Point>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            rbs_per_gnb: vec![10],
            users_per_gnb: vec![5],
            urllc_fraction: 0.5,
            area_side_m: 1000.0,
            coverage_radius_m: 300.0,
            carrier_freq_hz: 3.7e9,
            rb_bandwidth_hz: 180e3,
            noise_dbm: -117.0,
            tx_power_dbm: 30.0,
            slices: SliceTable::reference(),
            k_max: 3,
            gnb_positions: None,
        }
    }
}

impl ScenarioConfig {
    pub fn with_cells(rbs_per_gnb: Vec<u32>, users_per_gnb: Vec<u32>) -> Self {
        Self { rbs_per_gnb, users_per_gnb, ..Self::default() }
    }

    /// The four-cell layout with pools of 9, 12, 11 and 10 RBs serving 8,
    /// 7, 6 and 7 users.
    pub fn four_cell_reference() -> Self {
        Self::with_cells(vec![9, 12, 11, 10], vec![8, 7, 6, 7])
    }

    /// Splits totals as evenly as possible, remainders going to the
    /// lowest-numbered gNodeBs.
    pub fn uniform(gnbs: u32, total_rbs: u32, total_users: u32) -> Self {
        Self::with_cells(split_even(total_rbs, gnbs), split_even(total_users, gnbs))
    }
}

pub fn split_even(total: u32, parts: u32) -> Vec<u32> {
    if parts == 0 {
        return Vec::new();
    }
    (0..parts).map(|i| total / parts + u32::from(i < total % parts)).collect()
}

/// Builds a reproducible scenario: identical `(config, seed)` gives a
/// bit-identical result.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario, NetError> {
    let m = config.rbs_per_gnb.len();
    if m == 0 {
        return Err(NetError::Config("at least one gNodeB is required".into()));
    }
    if config.users_per_gnb.len() != m {
        return Err(NetError::Config(format!(
            "{} RB pool sizes but {} user counts",
            m,
            config.users_per_gnb.len()
        )));
    }
    if !(0.0..=1.0).contains(&config.urllc_fraction) {
        return Err(NetError::Config("urllc fraction must lie in [0, 1]".into()));
    }
    if !(config.coverage_radius_m >= MIN_USER_DISTANCE_M) {
        return Err(NetError::Config(format!(
            "coverage radius must be at least {MIN_USER_DISTANCE_M} m"
        )));
    }
    if config.k_max < 1 {
        return Err(NetError::Config("k_max must be at least 1".into()));
    }
    let r = config.coverage_radius_m;
    let (lo, hi) = (r, config.area_side_m - r);
    if !(hi >= lo) {
        return Err(NetError::Config(format!(
            "a {r} m coverage disc does not fit in a {} m square",
            config.area_side_m
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = match &config.gnb_positions {
        Some(p) => {
            if p.len() != m {
                return Err(NetError::Config(format!("{} positions for {m} gNodeBs", p.len())));
            }
            for q in p {
                if !(lo..=hi).contains(&q.x) || !(lo..=hi).contains(&q.y) {
                    return Err(NetError::Config(format!(
                        "gNodeB at ({}, {}) puts its coverage disc outside the area",
                        q.x, q.y
                    )));
                }
            }
            p.clone()
        }
        None => jittered_grid(m, lo, hi, &mut rng),
    };

    let mut gnbs = Vec::with_capacity(m);
    let mut next_rb = 0u32;
    for (i, (&pool, pos)) in config.rbs_per_gnb.iter().zip(positions).enumerate() {
        let rb_ids = (next_rb..next_rb + pool).map(RbId).collect();
        next_rb += pool;
        gnbs.push(GNodeB {
            id: GnbId(i as u32),
            position: pos,
            rb_ids,
            coverage_radius_m: r,
            tx_power_dbm: config.tx_power_dbm,
        });
    }

    let mut users = Vec::new();
    let min_u = (MIN_USER_DISTANCE_M / r).powi(2);
    for (g, &count) in gnbs.iter().zip(&config.users_per_gnb) {
        let n_urllc = (config.urllc_fraction * count as f64).round() as usize;
        let mut kinds: Vec<SliceKind> = (0..count as usize)
            .map(|i| if i < n_urllc { SliceKind::Urllc } else { SliceKind::Embb })
            .collect();
        kinds.shuffle(&mut rng);
        for slice in kinds {
            // Uniform over the annulus [1 m, r] by inverting the area CDF.
            let radius = r * rng.gen_range(min_u..=1.0f64).sqrt();
            let angle = rng.gen_range(0.0..2.0 * PI);
            let position = Point::new(g.position.x + radius * angle.cos(), g.position.y + radius * angle.sin());
            users.push(UserEquipment {
                id: UserId(users.len() as u32),
                position,
                slice,
                home_gnb: g.id,
            });
        }
    }

    let scenario = Scenario {
        gnbs,
        users,
        carrier_freq_hz: config.carrier_freq_hz,
        rb_bandwidth_hz: config.rb_bandwidth_hz,
        noise_dbm: config.noise_dbm,
        slices: config.slices,
        k_max: config.k_max,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn jittered_grid(m: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let cols = (m as f64).sqrt().ceil() as usize;
    let rows = m.div_ceil(cols);
    let (cw, ch) = ((hi - lo) / cols as f64, (hi - lo) / rows as f64);
    (0..m)
        .map(|i| {
            let (c, r) = ((i % cols) as f64, (i / cols) as f64);
            let jx = rng.gen_range(-0.25..=0.25) * cw;
            let jy = rng.gen_range(-0.25..=0.25) * ch;
            Point::new(
                (lo + (c + 0.5) * cw + jx).clamp(lo, hi),
                (lo + (r + 0.5) * ch + jy).clamp(lo, hi),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Scenario document
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioDocument {
    version: u32,
    seed: u64,
    carrier_freq_hz: f64,
    rb_bandwidth_hz: f64,
    noise_dbm: f64,
    k_max: u32,
    slices: SlicesDoc,
    gnbs: Vec<GnbDoc>,
    users: Vec<UserDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SlicesDoc {
    urllc: UrllcDoc,
    embb: EmbbDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct UrllcDoc {
    lambda_pps: f64,
    delta_bits: f64,
    dmax_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbbDoc {
    lambda_pps: f64,
    delta_bits: f64,
    rmin_bps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GnbDoc {
    id: GnbId,
    x_m: f64,
    y_m: f64,
    radius_m: f64,
    tx_dbm: f64,
    rb_ids: Vec<RbId>,
}

#[derive(Debug, Serialize, Deserialize)]
struct UserDoc {
    id: UserId,
    x_m: f64,
    y_m: f64,
    slice: SliceKind,
    home_gnb: GnbId,
}

impl Scenario {
    pub fn to_json(&self) -> String {
        let s = &self.slices;
        let doc = ScenarioDocument {
            version: SCENARIO_VERSION,
            seed: self.seed,
            carrier_freq_hz: self.carrier_freq_hz,
            rb_bandwidth_hz: self.rb_bandwidth_hz,
            noise_dbm: self.noise_dbm,
            k_max: self.k_max,
            slices: SlicesDoc {
                urllc: UrllcDoc {
                    lambda_pps: s.urllc.packet_rate(),
                    delta_bits: s.urllc.packet_len(),
                    dmax_s: s.urllc.delay_cap().expect("urllc carries a delay cap"),
                },
                embb: EmbbDoc {
                    lambda_pps: s.embb.packet_rate(),
                    delta_bits: s.embb.packet_len(),
                    rmin_bps: s.embb.rate_floor().expect("embb carries a rate floor"),
                },
            },
            gnbs: self
                .gnbs
                .iter()
                .map(|g| GnbDoc {
                    id: g.id,
                    x_m: g.position.x,
                    y_m: g.position.y,
                    radius_m: g.coverage_radius_m,
                    tx_dbm: g.tx_power_dbm,
                    rb_ids: g.rb_ids.clone(),
                })
                .collect(),
            users: self
                .users
                .iter()
                .map(|u| UserDoc {
                    id: u.id,
                    x_m: u.position.x,
                    y_m: u.position.y,
                    slice: u.slice,
                    home_gnb: u.home_gnb,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        let doc: ScenarioDocument = serde_json::from_str(text)?;
        if doc.version != SCENARIO_VERSION {
            return Err(NetError::Version(doc.version));
        }
        let slices = SliceTable {
            urllc: SliceParams::urllc(
                doc.slices.urllc.lambda_pps,
                doc.slices.urllc.delta_bits,
                doc.slices.urllc.dmax_s,
            )?,
            embb: SliceParams::embb(
                doc.slices.embb.lambda_pps,
                doc.slices.embb.delta_bits,
                doc.slices.embb.rmin_bps,
            )?,
        };
        let scenario = Scenario {
            gnbs: doc
                .gnbs
                .into_iter()
                .map(|g| {
                    let mut rb_ids = g.rb_ids;
                    rb_ids.sort_unstable();
                    GNodeB {
                        id: g.id,
                        position: Point::new(g.x_m, g.y_m),
                        rb_ids,
                        coverage_radius_m: g.radius_m,
                        tx_power_dbm: g.tx_dbm,
                    }
                })
                .collect(),
            users: doc
                .users
                .into_iter()
                .map(|u| UserEquipment {
                    id: u.id,
                    position: Point::new(u.x_m, u.y_m),
                    slice: u.slice,
                    home_gnb: u.home_gnb,
                })
                .collect(),
            carrier_freq_hz: doc.carrier_freq_hz,
            rb_bandwidth_hz: doc.rb_bandwidth_hz,
            noise_dbm: doc.noise_dbm,
            slices,
            k_max: doc.k_max,
            seed: doc.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
