//! Lowering of a [`ConstrainedModel`] to an unconstrained QUBO.
//!
//! Every constraint `Σ a_i x_i ≤ b` (`≥` rows are negated first) becomes a
//! penalty `λ (Σ a_i x_i + s − b)²` where `s` is a binary slack register
//! covering exactly `[0, b − min Σ a_i x_i]`. Rows with non-integral
//! coefficients are first expressed in units of `rate_quantum`, rounding
//! the coefficients up and the right-hand side down so that any point
//! feasible for the quantized row is feasible for the original one.
//!
//! The model keeps the penalty rows themselves; the upper-triangular
//! coefficient map is expanded from them on first use.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use thiserror::Error;

use crate::model::{Allocation, ConstrainedModel, Family, Sense, VarLabel};

/// Slack ranges above this are rejected as unbounded.
const MAX_SLACK_RANGE: i64 = 1 << 50;

#[derive(Debug, Error)]
pub enum QuboError {
    #[error("penalty weight {given} is below the separation bound {bound}")]
    PenaltyTooSmall { given: f64, bound: f64 },
    #[error("invalid penalty configuration: {0}")]
    Config(String),
    #[error("unsupported constraint {constraint}: {reason}")]
    Unsupported { constraint: usize, reason: String },
    #[error("constraint {0} has an unbounded slack range")]
    UnboundedSlack(usize),
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed QUBO text: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub penalty_weight: f64,
    /// Quantization step, in bits/s, for rows with real coefficients.
    pub rate_quantum: f64,
}

impl PenaltyConfig {
    pub const DEFAULT_RATE_QUANTUM: f64 = 1000.0;

    /// The smallest admissible penalty with the default 1 kbps quantum.
    pub fn for_model(model: &ConstrainedModel) -> Self {
        Self { penalty_weight: min_penalty_bound(model), rate_quantum: Self::DEFAULT_RATE_QUANTUM }
    }
}

/// `U + 1`, where `U` bounds the attainable objective from above. A unit
/// violation of any row then costs more than the whole objective.
pub fn min_penalty_bound(model: &ConstrainedModel) -> f64 {
    let linear: f64 = model.objective().iter().map(|c| c.max(0.0)).sum();
    let quad: f64 = model.quadratic().iter().map(|(_, _, q)| q.max(0.0)).sum();
    linear + quad + 1.0
}

/// Number of slack bits for an integer range `r` (0 when `r ≤ 0`).
pub fn slack_bit_count(range: i64) -> usize {
    if range <= 0 {
        0
    } else {
        (64 - (range as u64).leading_zeros()) as usize
    }
}

/// Power-of-two weights plus one residual weight, summing to `range`.
pub fn slack_weights(range: i64) -> Vec<i64> {
    let n = slack_bit_count(range);
    if n == 0 {
        return Vec::new();
    }
    let mut w: Vec<i64> = (0..n - 1).map(|j| 1i64 << j).collect();
    w.push(range - ((1i64 << (n - 1)) - 1));
    w
}

/// One lowered constraint, in integer units.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyRow {
    /// Index of the source constraint in the model.
    pub constraint: usize,
    pub family: Family,
    /// `(decision bit, coefficient)`.
    pub terms: Vec<(usize, i64)>,
    pub rhs: i64,
    /// Size of one integer unit in the source row's units (1 or the quantum).
    pub unit: f64,
    /// `(slack bit, weight)`.
    pub slack: Vec<(usize, i64)>,
    /// Largest representable slack value; equals the sum of the weights.
    pub range: i64,
}

impl PenaltyRow {
    pub fn lhs(&self, bits: &[bool]) -> i64 {
        self.terms.iter().filter(|(i, _)| bits[*i]).map(|(_, a)| a).sum()
    }

    pub fn slack_value(&self, bits: &[bool]) -> i64 {
        self.slack.iter().filter(|(i, _)| bits[*i]).map(|(_, w)| w).sum()
    }

    /// Slack value minimizing the penalty for a given left-hand side.
    pub fn best_slack(&self, lhs: i64) -> i64 {
        (self.rhs - lhs).clamp(0, self.range.max(0))
    }

    /// Squared residual at the best slack; zero iff the row is satisfied.
    pub fn min_residual_sq(&self, lhs: i64) -> f64 {
        let r = (lhs + self.best_slack(lhs) - self.rhs) as f64;
        r * r
    }

    /// Bit pattern for a slack value in `[0, range]`.
    pub fn encode_slack(&self, value: i64) -> Vec<bool> {
        let n = self.slack.len();
        let mut out = vec![false; n];
        if n == 0 {
            return out;
        }
        let mut rest = value.clamp(0, self.range);
        let low_max = (1i64 << (n - 1)) - 1;
        if rest > low_max {
            out[n - 1] = true;
            rest -= self.slack[n - 1].1;
        }
        for (j, bit) in out.iter_mut().take(n - 1).enumerate() {
            *bit = rest >> j & 1 == 1;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct QuboModel {
    num_bits: usize,
    labels: Vec<VarLabel>,
    objective: Vec<f64>,
    quadratic_objective: Vec<(usize, usize, f64)>,
    rows: Vec<PenaltyRow>,
    penalty_weight: f64,
    rate_quantum: f64,
    offset: f64,
    coefficients: OnceLock<Vec<(usize, usize, f64)>>,
}

pub fn to_qubo(model: &ConstrainedModel, cfg: &PenaltyConfig) -> Result<QuboModel, QuboError> {
    let bound = min_penalty_bound(model);
    if !cfg.penalty_weight.is_finite() || !(cfg.rate_quantum > 0.0 && cfg.rate_quantum.is_finite()) {
        return Err(QuboError::Config(format!("{cfg:?}")));
    }
    if cfg.penalty_weight < bound {
        return Err(QuboError::PenaltyTooSmall { given: cfg.penalty_weight, bound });
    }
    let n = model.num_vars();
    let mut next_bit = n;
    let mut rows = Vec::with_capacity(model.constraints().len());
    let mut offset = 0.0;
    for (ci, c) in model.constraints().iter().enumerate() {
        let sign = match c.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => {
                return Err(QuboError::Unsupported { constraint: ci, reason: "equality rows".into() })
            }
        };
        let coeffs: Vec<(usize, f64)> = c.terms.iter().map(|&(i, a)| (i, sign * a)).collect();
        let rhs = sign * c.rhs;
        let integral = coeffs.iter().all(|(_, a)| is_integral(*a)) && is_integral(rhs);
        let (terms, rhs_int, unit) = if integral {
            (
                coeffs.iter().map(|&(i, a)| (i, a.round() as i64)).filter(|t| t.1 != 0).collect::<Vec<_>>(),
                rhs.round() as i64,
                1.0,
            )
        } else {
            let q = cfg.rate_quantum;
            let terms = coeffs
                .iter()
                .map(|&(i, a)| to_units((a / q).ceil(), ci).map(|v| (i, v)))
                .collect::<Result<Vec<_>, _>>()?;
            (terms.into_iter().filter(|t| t.1 != 0).collect(), to_units((rhs / q).floor(), ci)?, q)
        };
        let min_lhs: i64 = terms.iter().map(|t| t.1.min(0)).sum();
        let range = rhs_int
            .checked_sub(min_lhs)
            .filter(|r| *r <= MAX_SLACK_RANGE)
            .ok_or(QuboError::UnboundedSlack(ci))?;
        let slack: Vec<(usize, i64)> = slack_weights(range)
            .into_iter()
            .map(|w| {
                next_bit += 1;
                (next_bit - 1, w)
            })
            .collect();
        offset += cfg.penalty_weight * (rhs_int as f64) * (rhs_int as f64);
        rows.push(PenaltyRow {
            constraint: ci,
            family: c.family,
            terms,
            rhs: rhs_int,
            unit,
            slack,
            range: range.max(0),
        });
    }
    Ok(QuboModel {
        num_bits: next_bit,
        labels: model.variables().to_vec(),
        objective: model.objective().to_vec(),
        quadratic_objective: model.quadratic().to_vec(),
        rows,
        penalty_weight: cfg.penalty_weight,
        rate_quantum: cfg.rate_quantum,
        offset,
        coefficients: OnceLock::new(),
    })
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

fn is_integral(a: f64) -> bool {
    (a - a.round()).abs() <= 1e-9 && a.abs() < MAX_SLACK_RANGE as f64
}

fn to_units(v: f64, ci: usize) -> Result<i64, QuboError> {
    if v.is_finite() && v.abs() <= MAX_SLACK_RANGE as f64 {
        Ok(v as i64)
    } else {
        Err(QuboError::UnboundedSlack(ci))
    }
}

impl QuboModel {
    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn num_decision_bits(&self) -> usize {
        self.labels.len()
    }

    pub fn num_slack_bits(&self) -> usize {
        self.num_bits - self.labels.len()
    }

    /// Decision bit `i` encodes `labels()[i]`.
    pub fn labels(&self) -> &[VarLabel] {
        &self.labels
    }

    /// Maximization coefficients of the source objective.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn quadratic_objective(&self) -> &[(usize, usize, f64)] {
        &self.quadratic_objective
    }

    pub fn rows(&self) -> &[PenaltyRow] {
        &self.rows
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }

    pub fn rate_quantum(&self) -> f64 {
        self.rate_quantum
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Per-constraint slack bits and weights.
    pub fn slack_registry(&self) -> Vec<(usize, &[(usize, i64)])> {
        self.rows.iter().map(|r| (r.constraint, r.slack.as_slice())).collect()
    }

    /// Source objective value of the decision part of `bits`.
    pub fn objective_value(&self, bits: &[bool]) -> f64 {
        let linear: f64 = self.objective.iter().zip(bits).filter(|(_, &b)| b).map(|(c, _)| c).sum();
        let quad: f64 = self
            .quadratic_objective
            .iter()
            .filter(|(i, j, _)| bits[*i] && bits[*j])
            .map(|(_, _, q)| q)
            .sum();
        linear + quad
    }

    /// Total penalty of a full bit vector.
    pub fn penalty(&self, bits: &[bool]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let v = (r.lhs(bits) + r.slack_value(bits) - r.rhs) as f64;
                self.penalty_weight * v * v
            })
            .sum()
    }

    /// `xᵀQx + offset` evaluated row by row.
    pub fn energy(&self, bits: &[bool]) -> f64 {
        -self.objective_value(bits) + self.penalty(bits)
    }

    /// `xᵀQx + offset` evaluated from the expanded coefficient map. The
    /// terms cancel down to roughly the objective while being many orders
    /// of magnitude larger, so the sum is compensated.
    pub fn energy_from_coefficients(&self, bits: &[bool]) -> f64 {
        let active = self.coefficients().iter().filter(|(i, j, _)| bits[*i] && bits[*j]).map(|t| t.2);
        compensated_sum(std::iter::once(self.offset).chain(active))
    }

    /// True when every row has zero residual.
    pub fn is_penalty_free(&self, bits: &[bool]) -> bool {
        self.rows.iter().all(|r| r.lhs(bits) + r.slack_value(bits) == r.rhs)
    }

    /// True when the decision part satisfies every lowered row for some slack.
    pub fn decision_feasible(&self, decision: &[bool]) -> bool {
        self.rows.iter().all(|r| r.min_residual_sq(r.lhs(decision)) == 0.0)
    }

    /// Full bit vector for a decision assignment, slack set to its best value.
    pub fn complete(&self, decision: &[bool]) -> Vec<bool> {
        let mut bits = decision[..self.labels.len()].to_vec();
        bits.resize(self.num_bits, false);
        for r in &self.rows {
            let pattern = r.encode_slack(r.best_slack(r.lhs(&bits)));
            for ((bit, _), v) in r.slack.iter().zip(pattern) {
                bits[*bit] = v;
            }
        }
        bits
    }

    /// Encodes an allocation (ones only) with consistent slack bits.
    pub fn encode(&self, alloc: &Allocation) -> Vec<bool> {
        let decision: Vec<bool> = self.labels.iter().map(|l| alloc.value(l) == 1).collect();
        self.complete(&decision)
    }

    /// Upper-triangular `(i, j, Q_ij)` with `i ≤ j`, sorted, zeros dropped.
    pub fn coefficients(&self) -> &[(usize, usize, f64)] {
        self.coefficients.get_or_init(|| self.expand())
    }

    fn expand(&self) -> Vec<(usize, usize, f64)> {
        let mut q: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                *q.entry((i, i)).or_default() -= c;
            }
        }
        for &(i, j, v) in &self.quadratic_objective {
            *q.entry((i.min(j), i.max(j))).or_default() -= v;
        }
        let lam = self.penalty_weight;
        let mut z = Vec::new();
        for r in &self.rows {
            z.clear();
            z.extend(r.terms.iter().map(|&(i, a)| (i, a as f64)));
            z.extend(r.slack.iter().map(|&(i, w)| (i, w as f64)));
            let b = r.rhs as f64;
            for (t, &(i, a)) in z.iter().enumerate() {
                *q.entry((i, i)).or_default() += lam * (a * a - 2.0 * b * a);
                for &(j, c) in &z[t + 1..] {
                    *q.entry((i.min(j), i.max(j))).or_default() += 2.0 * lam * a * c;
                }
            }
        }
        let mut out: Vec<(usize, usize, f64)> =
            q.into_iter().filter(|(_, v)| *v != 0.0).map(|((i, j), v)| (i, j, v)).collect();
        out.sort_by_key(|&(i, j, _)| (i, j));
        out
    }

    /// Flat coefficient list: `num_bits`/`offset` header lines followed by
    /// one `i j value` line per nonzero upper-triangular entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "num_bits {}", self.num_bits);
        let _ = writeln!(out, "offset {:?}", self.offset);
        for (i, j, v) in self.coefficients() {
            let _ = writeln!(out, "{i} {j} {v:?}");
        }
        out
    }
}

/// Parsed form of [`QuboModel::to_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuboText {
    pub num_bits: usize,
    pub offset: f64,
    pub entries: Vec<(usize, usize, f64)>,
}

impl QuboText {
    pub fn parse(text: &str) -> Result<Self, QuboError> {
        let bad = |l: &str| QuboError::Parse(format!("unexpected line `{l}`"));
        let (mut num_bits, mut offset, mut entries) = (None, None, Vec::new());
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["num_bits", n] => num_bits = Some(n.parse().map_err(|_| bad(line))?),
                ["offset", v] => offset = Some(v.parse().map_err(|_| bad(line))?),
                [i, j, v] => {
                    let (i, j): (usize, usize) =
                        (i.parse().map_err(|_| bad(line))?, j.parse().map_err(|_| bad(line))?);
                    if i > j {
                        return Err(QuboError::Parse(format!("entry ({i}, {j}) is below the diagonal")));
                    }
                    entries.push((i, j, v.parse().map_err(|_| bad(line))?));
                }
                _ => return Err(bad(line)),
            }
        }
        let num_bits = num_bits.ok_or_else(|| QuboError::Parse("missing num_bits".into()))?;
        if let Some(&(_, j, _)) = entries.iter().find(|e| e.1 >= num_bits) {
            return Err(QuboError::Parse(format!("index {j} out of range")));
        }
        Ok(Self { num_bits, offset: offset.unwrap_or(0.0), entries })
    }

    pub fn energy(&self, bits: &[bool]) -> f64 {
        let active = self.entries.iter().filter(|(i, j, _)| bits[*i] && bits[*j]).map(|e| e.2);
        compensated_sum(std::iter::once(self.offset).chain(active))
    }
}

/// Projects a sample onto its decision bits. Slack bits are discarded and
/// no feasibility claim is made.
pub fn decode_sample(bits: &[bool], qubo: &QuboModel) -> Result<Allocation, QuboError> {
    if bits.len() != qubo.num_bits {
        return Err(QuboError::LengthMismatch { expected: qubo.num_bits, got: bits.len() });
    }
    Ok(qubo.labels.iter().zip(bits).filter(|(_, &b)| b).map(|(l, _)| *l).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearConstraint;
    use crate::net::{GnbId, RbId, UserId};

    fn label(i: u32) -> VarLabel {
        VarLabel::new(RbId(i), GnbId(0), UserId(0))
    }

    /// max x1 + 2 x2 s.t. x1 + x2 ≤ 1
    fn tiny() -> ConstrainedModel {
        ConstrainedModel::new(
            vec![label(0), label(1)],
            vec![1.0, 2.0],
            vec![LinearConstraint { family: Family::C2, terms: vec![(0, 1.0), (1, 1.0)], sense: Sense::Le, rhs: 1.0 }],
        )
        .unwrap()
    }

    fn all_bits(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << n).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
    }

    #[test]
    fn penalty_bounds() {
        assert_eq!(min_penalty_bound(&tiny()), 4.0);
        let empty = ConstrainedModel::new(vec![], vec![], vec![]).unwrap();
        assert_eq!(min_penalty_bound(&empty), 1.0);
    }

    #[test]
    fn slack_counts_and_weights() {
        for r in 0..300i64 {
            let w = slack_weights(r);
            let expected = if r == 0 { 0 } else { ((r + 1) as f64).log2().ceil() as usize };
            assert_eq!(w.len(), expected, "range {r}");
            assert_eq!(w.iter().sum::<i64>(), r);
            let reach: std::collections::BTreeSet<i64> = (0..1u32 << w.len())
                .map(|m| w.iter().enumerate().filter(|(j, _)| m >> j & 1 == 1).map(|(_, x)| x).sum())
                .collect();
            assert_eq!(reach, (0..=r).collect());
        }
    }

    #[test]
    fn slack_encoding_hits_every_value() {
        let q = to_qubo(&tiny(), &PenaltyConfig::for_model(&tiny())).unwrap();
        let row = PenaltyRow { range: 13, slack: slack_weights(13).into_iter().enumerate().collect(), ..q.rows[0].clone() };
        for v in 0..=13 {
            let bits = row.encode_slack(v);
            let sum: i64 = row.slack.iter().zip(&bits).filter(|(_, b)| **b).map(|(s, _)| s.1).sum();
            assert_eq!(sum, v);
        }
    }

    #[test]
    fn tiny_ground_state_by_enumeration() {
        let m = tiny();
        let q = to_qubo(&m, &PenaltyConfig::for_model(&m)).unwrap();
        assert_eq!(q.num_bits(), 3);
        let mut energies: Vec<(f64, Vec<bool>)> = all_bits(3).map(|b| (q.energy_from_coefficients(&b), b)).collect();
        energies.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(energies[0].1, vec![false, true, false]);
        assert!(energies[1].0 > energies[0].0);
        let alloc = decode_sample(&energies[0].1, &q).unwrap();
        assert_eq!(alloc.iter().map(|(l, _)| *l).collect::<Vec<_>>(), vec![label(1)]);
    }

    #[test]
    fn feasible_points_have_zero_penalty() {
        let m = tiny();
        let q = to_qubo(&m, &PenaltyConfig::for_model(&m)).unwrap();
        for x in all_bits(2).filter(|x| m.is_feasible(x)) {
            let bits = q.complete(&x);
            assert!(q.is_penalty_free(&bits));
            assert_eq!(q.energy(&bits), -m.objective_value(&x));
            assert!((q.energy_from_coefficients(&bits) + m.objective_value(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_violation_sits_above_every_feasible_level() {
        // three items, one C2 row, violate by one unit
        let m = ConstrainedModel::new(
            vec![label(0), label(1), label(2)],
            vec![3.0, 5.0, 7.0],
            vec![LinearConstraint {
                family: Family::C2,
                terms: vec![(0, 1.0), (1, 1.0), (2, 1.0)],
                sense: Sense::Le,
                rhs: 1.0,
            }],
        )
        .unwrap();
        let q = to_qubo(&m, &PenaltyConfig::for_model(&m)).unwrap();
        let best = |x: &Vec<bool>| {
            all_bits(q.num_slack_bits())
                .map(|s| {
                    let mut b = x.clone();
                    b.extend(s);
                    q.energy_from_coefficients(&b)
                })
                .fold(f64::INFINITY, f64::min)
        };
        let feasible_max = all_bits(3).filter(|x| m.is_feasible(x)).map(|x| best(&x)).fold(f64::MIN, f64::max);
        for x in all_bits(3).filter(|x| x.iter().filter(|b| **b).count() == 2) {
            assert!(best(&x) > feasible_max);
        }
    }

    #[test]
    fn quantization_rounds_conservatively() {
        let m = ConstrainedModel::new(
            vec![label(0), label(1)],
            vec![1500.0, 2600.0],
            vec![LinearConstraint { family: Family::C4, terms: vec![(0, 1500.0), (1, 2600.0)], sense: Sense::Ge, rhs: 2500.5 }],
        )
        .unwrap();
        let q = to_qubo(&m, &PenaltyConfig::for_model(&m)).unwrap();
        let row = &q.rows()[0];
        // −1500 → −1, −2600 → −2 (ceil of negatives), −2500.5 → −3 (floor)
        assert_eq!(row.terms, vec![(0, -1), (1, -2)]);
        assert_eq!(row.rhs, -3);
        assert_eq!(row.unit, 1000.0);
        // 2600 alone meets 2500.5 but fails the quantized row; 1500 + 2600 passes both
        assert!(!q.decision_feasible(&[false, true]));
        assert!(q.decision_feasible(&[true, true]));
    }

    #[test]
    fn rejects_bad_configs_and_rows() {
        let m = tiny();
        let low = PenaltyConfig { penalty_weight: 3.0, rate_quantum: 1000.0 };
        assert!(matches!(to_qubo(&m, &low), Err(QuboError::PenaltyTooSmall { .. })));
        let zero_q = PenaltyConfig { penalty_weight: 10.0, rate_quantum: 0.0 };
        assert!(matches!(to_qubo(&m, &zero_q), Err(QuboError::Config(_))));
        let eq = ConstrainedModel::new(
            vec![label(0)],
            vec![1.0],
            vec![LinearConstraint { family: Family::C1, terms: vec![(0, 1.0)], sense: Sense::Eq, rhs: 1.0 }],
        )
        .unwrap();
        assert!(matches!(to_qubo(&eq, &PenaltyConfig::for_model(&eq)), Err(QuboError::Unsupported { .. })));
        let huge = ConstrainedModel::new(
            vec![label(0)],
            vec![1.0],
            vec![LinearConstraint { family: Family::C1, terms: vec![(0, 1.0)], sense: Sense::Le, rhs: 1e300 }],
        )
        .unwrap();
        assert!(matches!(to_qubo(&huge, &PenaltyConfig::for_model(&huge)), Err(QuboError::UnboundedSlack(0))));
    }

    #[test]
    fn decode_checks_length_and_drops_slack() {
        let m = tiny();
        let q = to_qubo(&m, &PenaltyConfig::for_model(&m)).unwrap();
        assert!(decode_sample(&[false, true], &q).is_err());
        assert!(decode_sample(&[false; 3], &q).unwrap().is_empty());
        assert!(decode_sample(&[false, false, true], &q).unwrap().is_empty());
    }

    #[test]
    fn text_round_trip() {
        let m = tiny();
        let q = to_qubo(&m, &PenaltyConfig::for_model(&m)).unwrap();
        let t = QuboText::parse(&q.to_text()).unwrap();
        assert_eq!(t.num_bits, 3);
        for b in all_bits(3) {
            assert_eq!(t.energy(&b), q.energy_from_coefficients(&b));
        }
        assert!(QuboText::parse("1 0 2.0\nnum_bits 2").is_err());
        assert!(QuboText::parse("offset 1").is_err());
    }
}
