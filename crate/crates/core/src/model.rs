//! The constrained binary model: decision variables `x[rb, gnb, user]`,
//! a linear rate-maximization objective and the constraint families
//! C1 (per-user RB cap), C2 (RB uniqueness), C3 (borrow only after the
//! native pool is exhausted), C4 (eMBB rate floor) and C5 (URLLC delay
//! cap, linearized to a rate floor). C6 is the binary domain itself.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{GnbId, NetError, RbId, Scenario, SliceKind, SliceParams, UserId};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("malformed model: {0}")]
    Malformed(String),
}

/// Identifies `x[rb, gnb, user]`. `gnb` is always the user's home gNodeB,
/// i.e. the gNodeB that transmits on the RB, not the RB's owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarLabel {
    pub rb: RbId,
    pub gnb: GnbId,
    pub user: UserId,
}

impl VarLabel {
    pub fn new(rb: RbId, gnb: GnbId, user: UserId) -> Self {
        Self { rb, gnb, user }
    }
}

// Ties everywhere break on (rb, user).
impl Ord for VarLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.rb, self.user, self.gnb).cmp(&(other.rb, other.user, other.gnb))
    }
}

impl PartialOrd for VarLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x[{},{},{}]", self.rb, self.gnb, self.user)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    C1,
    C2,
    C3,
    C4,
    C5,
    /// Binary domain. Never attached to a [`LinearConstraint`]; only the
    /// verifier reports on it.
    C6,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::C1, Family::C2, Family::C3, Family::C4, Family::C5, Family::C6];

    /// Families whose coefficients are small integers by construction.
    pub fn is_integral(self) -> bool {
        matches!(self, Family::C1 | Family::C2 | Family::C3)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "==",
        })
    }
}

/// Feasibility slack used for all real-valued comparisons.
pub fn feasibility_tol(rhs: f64) -> f64 {
    1e-9 * (1.0 + rhs.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub family: Family,
    /// `(variable index, coefficient)`, ascending by index.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, x: &[bool]) -> f64 {
        self.terms.iter().filter(|(i, _)| x[*i]).map(|(_, a)| a).sum()
    }

    pub fn is_satisfied_by(&self, x: &[bool]) -> bool {
        let lhs = self.activity(x);
        let tol = feasibility_tol(self.rhs);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Provenance of a model built from a scenario. Generic models leave it
/// empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelMeta {
    pub k_max: Option<u32>,
    pub rb_owner: BTreeMap<RbId, GnbId>,
    pub scenario_seed: Option<u64>,
    pub n_gnbs: usize,
    pub n_rbs: usize,
    pub n_users: usize,
}

/// A binary program: maximize `c·x + Σ q_ij x_i x_j` subject to linear
/// constraints. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ConstrainedModel {
    variables: Vec<VarLabel>,
    objective: Vec<f64>,
    quadratic: Vec<(usize, usize, f64)>,
    constraints: Vec<LinearConstraint>,
    meta: ModelMeta,
    index: HashMap<VarLabel, usize>,
}

impl PartialEq for ConstrainedModel {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
            && self.objective == other.objective
            && self.quadratic == other.quadratic
            && self.constraints == other.constraints
            && self.meta == other.meta
    }
}

impl ConstrainedModel {
    pub fn new(
        variables: Vec<VarLabel>,
        objective: Vec<f64>,
        constraints: Vec<LinearConstraint>,
    ) -> Result<Self, ModelError> {
        if variables.len() != objective.len() {
            return Err(ModelError::Malformed(format!(
                "{} variables but {} objective coefficients",
                variables.len(),
                objective.len()
            )));
        }
        let mut index = HashMap::with_capacity(variables.len());
        for (i, v) in variables.iter().enumerate() {
            if index.insert(*v, i).is_some() {
                return Err(ModelError::Malformed(format!("duplicate variable {v}")));
            }
        }
        if let Some(c) = objective.iter().find(|c| !c.is_finite()) {
            return Err(ModelError::Malformed(format!("non-finite objective coefficient {c}")));
        }
        let n = variables.len();
        for (ci, c) in constraints.iter().enumerate() {
            if c.family == Family::C6 {
                return Err(ModelError::Malformed(format!("constraint {ci} tagged C6")));
            }
            if !c.rhs.is_finite() {
                return Err(ModelError::Malformed(format!("constraint {ci} has non-finite rhs")));
            }
            let mut seen = HashSet::with_capacity(c.terms.len());
            for &(i, a) in &c.terms {
                if i >= n {
                    return Err(ModelError::Malformed(format!(
                        "constraint {ci} references undeclared variable {i}"
                    )));
                }
                if !seen.insert(i) {
                    return Err(ModelError::Malformed(format!(
                        "constraint {ci} repeats {}",
                        variables[i]
                    )));
                }
                if !a.is_finite() {
                    return Err(ModelError::Malformed(format!("constraint {ci} has non-finite coefficient")));
                }
            }
        }
        Ok(Self {
            variables,
            objective,
            quadratic: Vec::new(),
            constraints,
            meta: ModelMeta::default(),
            index,
        })
    }

    pub fn with_quadratic(mut self, quadratic: Vec<(usize, usize, f64)>) -> Result<Self, ModelError> {
        let n = self.variables.len();
        for &(i, j, q) in &quadratic {
            if i >= n || j >= n || i == j || !q.is_finite() {
                return Err(ModelError::Malformed(format!("bad quadratic term ({i}, {j}, {q})")));
            }
        }
        self.quadratic = quadratic;
        Ok(self)
    }

    pub fn with_meta(mut self, meta: ModelMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn variables(&self) -> &[VarLabel] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Per-variable objective coefficients; for scenario models these are
    /// the per-RB rates r_kmn in bits/s.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn index_of(&self, label: &VarLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn count_family(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn objective_value(&self, x: &[bool]) -> f64 {
        let linear: f64 = self.objective.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| c).sum();
        let quad: f64 = self.quadratic.iter().filter(|(i, j, _)| x[*i] && x[*j]).map(|(_, _, q)| q).sum();
        linear + quad
    }

    /// Indices of violated constraints.
    pub fn violated(&self, x: &[bool]) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_satisfied_by(x))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        self.constraints.iter().all(|c| c.is_satisfied_by(x))
    }

    pub fn allocation_of(&self, x: &[bool]) -> Allocation {
        let mut a = Allocation::new();
        for (label, _) in self.variables.iter().zip(x).filter(|(_, &b)| b) {
            a.set(*label);
        }
        a
    }

    /// Projects an allocation onto this model's variable order. Entries
    /// outside the model or with non-binary values are rejected.
    pub fn bits_of(&self, alloc: &Allocation) -> Result<Vec<bool>, ModelError> {
        let mut x = vec![false; self.variables.len()];
        for (label, value) in alloc.iter() {
            let i = self
                .index_of(label)
                .ok_or_else(|| ModelError::Malformed(format!("{label} is not a model variable")))?;
            match value {
                0 => {}
                1 => x[i] = true,
                v => return Err(ModelError::Malformed(format!("{label} = {v} is not binary"))),
            }
        }
        Ok(x)
    }

    /// Plain-text dump for debugging.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "variables {}", self.variables.len());
        for (i, (v, c)) in self.variables.iter().zip(&self.objective).enumerate() {
            let _ = writeln!(out, "v {i} {} {} {} obj {c:?}", v.rb, v.gnb, v.user);
        }
        for &(i, j, q) in &self.quadratic {
            let _ = writeln!(out, "q {i} {j} {q:?}");
        }
        let _ = writeln!(out, "constraints {}", self.constraints.len());
        for (ci, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, "c {ci} {} {} {:?} :", c.family, c.sense, c.rhs);
            for (i, a) in &c.terms {
                let _ = write!(out, " {i}:{a:?}");
            }
            out.push('\n');
        }
        out
    }
}

/// A (possibly partial, possibly invalid) assignment of values to
/// variables. Missing entries read as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allocation {
    entries: BTreeMap<VarLabel, i64>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, label: VarLabel) {
        self.entries.insert(label, 1);
    }

    pub fn clear(&mut self, label: &VarLabel) {
        self.entries.remove(label);
    }

    /// Stores an arbitrary value; zero removes the entry.
    pub fn insert(&mut self, label: VarLabel, value: i64) {
        if value == 0 {
            self.entries.remove(&label);
        } else {
            self.entries.insert(label, value);
        }
    }

    pub fn value(&self, label: &VarLabel) -> i64 {
        self.entries.get(label).copied().unwrap_or(0)
    }

    pub fn is_set(&self, label: &VarLabel) -> bool {
        self.value(label) != 0
    }

    /// Nonzero entries in label order.
    pub fn iter(&self) -> impl Iterator<Item = (&VarLabel, i64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<VarLabel> for Allocation {
    fn from_iter<I: IntoIterator<Item = VarLabel>>(iter: I) -> Self {
        let mut a = Allocation::new();
        for l in iter {
            a.set(l);
        }
        a
    }
}

#[derive(Serialize, Deserialize)]
struct AllocationEntry {
    rb_id: RbId,
    gnb_id: GnbId,
    user_id: UserId,
    value: i64,
}

impl Serialize for Allocation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.entries.iter().map(|(l, &value)| AllocationEntry {
            rb_id: l.rb,
            gnb_id: l.gnb,
            user_id: l.user,
            value,
        }))
    }
}

impl<'de> Deserialize<'de> for Allocation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<AllocationEntry>::deserialize(d)?;
        let mut a = Allocation::new();
        for e in entries {
            a.insert(VarLabel::new(e.rb_id, e.gnb_id, e.user_id), e.value);
        }
        Ok(a)
    }
}

/// Minimum rate that meets a slice's QoS. For URLLC this inverts the
/// M/M/1 delay `d = 1 / (r/δ − λ)` at `d = D_max`, giving `δ(λ + 1/D_max)`;
/// for eMBB it is the rate floor itself.
pub fn qos_rate_floor(slice: &SliceParams) -> Result<f64, ModelError> {
    match slice.kind() {
        SliceKind::Urllc => {
            let dmax = slice
                .delay_cap()
                .ok_or_else(|| ModelError::Domain("urllc slice without delay cap".into()))?;
            if !(dmax > 0.0) {
                return Err(ModelError::Domain(format!("delay cap must be positive, got {dmax}")));
            }
            Ok(slice.packet_len() * (slice.packet_rate() + 1.0 / dmax))
        }
        SliceKind::Embb => slice
            .rate_floor()
            .ok_or_else(|| ModelError::Domain("embb slice without rate floor".into())),
    }
}

/// Builds the full model. Variables are ordered rb-major: index
/// `rb_pos * N + user_pos` over ascending RB and user ids.
pub fn build_model(scenario: &Scenario) -> Result<ConstrainedModel, ModelError> {
    scenario.validate()?;
    let rbs = scenario.rb_ids();
    let mut users: Vec<_> = scenario.users.iter().collect();
    users.sort_by_key(|u| u.id);
    let n_users = users.len();
    let rates = users
        .iter()
        .map(|u| scenario.user_rb_rate(u))
        .collect::<Result<Vec<f64>, _>>()?;
    let var = |rb_pos: usize, u_pos: usize| rb_pos * n_users + u_pos;

    let mut variables = Vec::with_capacity(rbs.len() * n_users);
    let mut objective = Vec::with_capacity(rbs.len() * n_users);
    for &rb in &rbs {
        for (u, &r) in users.iter().zip(&rates) {
            variables.push(VarLabel::new(rb, u.home_gnb, u.id));
            objective.push(r);
        }
    }

    let owner = scenario.rb_owner();
    let rb_pos: HashMap<RbId, usize> = rbs.iter().enumerate().map(|(i, &rb)| (rb, i)).collect();
    let mut constraints = Vec::new();

    for u_pos in 0..n_users {
        constraints.push(LinearConstraint {
            family: Family::C1,
            terms: (0..rbs.len()).map(|k| (var(k, u_pos), 1.0)).collect(),
            sense: Sense::Le,
            rhs: f64::from(scenario.k_max),
        });
    }
    for k in 0..rbs.len() {
        constraints.push(LinearConstraint {
            family: Family::C2,
            terms: (0..n_users).map(|u| (var(k, u), 1.0)).collect(),
            sense: Sense::Le,
            rhs: 1.0,
        });
    }

    let mut gnbs: Vec<_> = scenario.gnbs.iter().collect();
    gnbs.sort_by_key(|g| g.id);
    for g in gnbs {
        let home: Vec<usize> = (0..n_users).filter(|&u| users[u].home_gnb == g.id).collect();
        let pool = g.rb_ids.len() as f64;
        let native: Vec<usize> = g.rb_ids.iter().map(|rb| rb_pos[rb]).collect();
        for &u in &home {
            for (k, &rb) in rbs.iter().enumerate() {
                if owner[&rb] == g.id {
                    continue;
                }
                // x[k',m,n]·|K_m| − Σ_{n'∈U_m} Σ_{k∈K_m} x[k,m,n'] ≤ 0
                let mut terms = vec![(var(k, u), pool)];
                for &nk in &native {
                    for &nu in &home {
                        terms.push((var(nk, nu), -1.0));
                    }
                }
                terms.sort_by_key(|t| t.0);
                constraints.push(LinearConstraint { family: Family::C3, terms, sense: Sense::Le, rhs: 0.0 });
            }
        }
    }

    for (u_pos, u) in users.iter().enumerate() {
        let slice = scenario.slices.get(u.slice);
        let family = match u.slice {
            SliceKind::Embb => Family::C4,
            SliceKind::Urllc => Family::C5,
        };
        constraints.push(LinearConstraint {
            family,
            terms: (0..rbs.len()).map(|k| (var(k, u_pos), rates[u_pos])).collect(),
            sense: Sense::Ge,
            rhs: qos_rate_floor(slice)?,
        });
    }

    let meta = ModelMeta {
        k_max: Some(scenario.k_max),
        rb_owner: owner,
        scenario_seed: Some(scenario.seed),
        n_gnbs: scenario.gnbs.len(),
        n_rbs: rbs.len(),
        n_users,
    };
    Ok(ConstrainedModel::new(variables, objective, constraints)?.with_meta(meta))
}

/// The knapsack relaxation: same variables and objective, only C1 and C2.
pub fn relaxed_knapsack_model(scenario: &Scenario) -> Result<ConstrainedModel, ModelError> {
    let full = build_model(scenario)?;
    let kept = full
        .constraints
        .iter()
        .filter(|c| matches!(c.family, Family::C1 | Family::C2))
        .cloned()
        .collect();
    let meta = full.meta.clone();
    Ok(ConstrainedModel::new(full.variables, full.objective, kept)?.with_meta(meta))
}
