//! Simulated annealing over a [`QuboModel`].
//!
//! Each read starts from a random state and performs `sweeps` passes of
//! single-bit Metropolis flips while the temperature decays geometrically.
//! Read `r` draws from its own ChaCha stream seeded by `mix_seed(seed, r)`
//! and the winner is the lowest energy, then the lowest read index, so the
//! result does not depend on how reads are scheduled.
//!
//! Two slack treatments are available. `Explicit` flips every QUBO bit,
//! slack included, using the expanded coefficient map. `Marginal` flips
//! decision bits only and charges every row its penalty at the best slack
//! value, which is what the explicit chain converges to once slack bits
//! equilibrate. Both report energies of the full bit vector.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, Solution, SolveError, SolverStats, Status};
use crate::qubo::{decode_sample, QuboModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlackMode {
    Explicit,
    #[default]
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub sweeps: usize,
    pub reads: usize,
    pub seed: u64,
    pub slack_mode: SlackMode,
}

impl AnnealSchedule {
    pub const DEFAULT_SWEEPS: usize = 1000;
    pub const DEFAULT_READS: usize = 20;

    pub fn new(initial: f64, fin: f64, sweeps: usize, reads: usize, seed: u64) -> Result<Self, SolveError> {
        let s = Self {
            initial_temperature: initial,
            final_temperature: fin,
            sweeps,
            reads,
            seed,
            slack_mode: SlackMode::default(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Starts at the penalty weight and ends at 1e-3 of the smallest
    /// nonzero objective coefficient.
    pub fn default_for(qubo: &QuboModel, seed: u64) -> Self {
        let smallest = qubo
            .objective()
            .iter()
            .map(|c| c.abs())
            .filter(|c| *c > 0.0)
            .fold(f64::INFINITY, f64::min);
        let smallest = if smallest.is_finite() { smallest } else { 1.0 };
        let initial = qubo.penalty_weight().max(smallest);
        let fin = (1e-3 * smallest).min(initial * 0.5);
        Self {
            initial_temperature: initial,
            final_temperature: fin,
            sweeps: Self::DEFAULT_SWEEPS,
            reads: Self::DEFAULT_READS,
            seed,
            slack_mode: SlackMode::default(),
        }
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }

    pub fn with_reads(mut self, reads: usize) -> Self {
        self.reads = reads;
        self
    }

    pub fn with_slack_mode(mut self, mode: SlackMode) -> Self {
        self.slack_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let (t0, t1) = (self.initial_temperature, self.final_temperature);
        if !(t0.is_finite() && t1 > 0.0 && t0 > t1) {
            return Err(SolveError::Schedule(format!("need initial > final > 0, got {t0} and {t1}")));
        }
        if self.sweeps == 0 || self.reads == 0 {
            return Err(SolveError::Schedule("sweeps and reads must be at least 1".into()));
        }
        Ok(())
    }

    /// Temperature of sweep `s`, geometric from initial to final.
    pub fn temperature(&self, s: usize) -> f64 {
        if self.sweeps == 1 {
            return self.final_temperature;
        }
        let frac = s as f64 / (self.sweeps - 1) as f64;
        self.initial_temperature * (self.final_temperature / self.initial_temperature).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutcome {
    /// Best full bit vector seen (decision and slack).
    pub bits: Vec<bool>,
    /// Energy of `bits`, recomputed from the rows.
    pub energy: f64,
    /// Best-so-far energy after each sweep, when requested.
    pub trace: Vec<f64>,
}

pub fn solve_sa(qubo: &QuboModel, schedule: &AnnealSchedule) -> Result<Solution, SolveError> {
    schedule.validate()?;
    let start = Instant::now();
    let sampler = Sampler::new(qubo, schedule.slack_mode);
    let mut best: Option<(f64, usize, Vec<bool>)> = None;
    for r in 0..schedule.reads {
        let out = sampler.read(schedule, r, false);
        if best.as_ref().is_none_or(|b| out.energy < b.0) {
            best = Some((out.energy, r, out.bits));
        }
    }
    let (energy, read, bits) = best.expect("at least one read");
    let n = qubo.num_decision_bits();
    let decision = bits[..n].to_vec();
    let status = if qubo.decision_feasible(&decision) { Status::Feasible } else { Status::Infeasible };
    let allocation = decode_sample(&bits, qubo)?;
    Ok(Solution {
        solver: "sa".into(),
        status,
        objective: qubo.objective_value(&decision),
        allocation,
        bits: decision,
        wall_time: start.elapsed(),
        stats: SolverStats {
            reads: schedule.reads,
            sweeps: schedule.sweeps,
            best_energy: Some(energy),
            best_read: Some(read),
            ..SolverStats::default()
        },
    })
}

/// Runs read `read` of the schedule.
pub fn anneal_read(qubo: &QuboModel, schedule: &AnnealSchedule, read: usize, trace: bool) -> ReadOutcome {
    Sampler::new(qubo, schedule.slack_mode).read(schedule, read, trace)
}

enum Sampler<'a> {
    Marginal(Marginal<'a>),
    Explicit(Explicit<'a>),
}

impl<'a> Sampler<'a> {
    fn new(qubo: &'a QuboModel, mode: SlackMode) -> Self {
        match mode {
            SlackMode::Marginal => Sampler::Marginal(Marginal::new(qubo)),
            SlackMode::Explicit => Sampler::Explicit(Explicit::new(qubo)),
        }
    }

    fn read(&self, schedule: &AnnealSchedule, read: usize, trace: bool) -> ReadOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(schedule.seed, read as u64));
        let (bits, trace, qubo) = match self {
            Sampler::Marginal(m) => {
                let (b, t) = m.run(schedule, &mut rng, trace);
                (b, t, m.qubo)
            }
            Sampler::Explicit(e) => {
                let (b, t) = e.run(schedule, &mut rng, trace);
                (b, t, e.qubo)
            }
        };
        ReadOutcome { energy: qubo.energy(&bits), bits, trace }
    }
}

#[inline]
fn accept(de: f64, t: f64, rng: &mut ChaCha8Rng) -> bool {
    de <= 0.0 || rng.gen::<f64>() < (-de / t).exp()
}

/// Rows that are identical except for one "private" term with a common
/// coefficient, e.g. one borrowing row per (user, foreign RB) over the same
/// native-pool sum. Their penalties depend only on the shared activity and
/// on how many private bits are set, so they are tracked together.
struct RowBundle {
    rep: usize,
    coef: i64,
    size: i64,
    shared_lhs: i64,
    ones: i64,
}

struct Marginal<'a> {
    qubo: &'a QuboModel,
    /// Rows tracked individually, per decision bit: `(row, coefficient)`.
    rows_of: Vec<Vec<(usize, i64)>>,
    /// Bundles whose shared part contains the bit: `(bundle, coefficient)`.
    shared_of: Vec<Vec<(usize, i64)>>,
    /// Bundles in which the bit is the private term.
    private_of: Vec<Vec<usize>>,
    bundles: Vec<RowBundle>,
    /// Per decision bit: `(other bit, q)` from the quadratic objective.
    quad_of: Vec<Vec<(usize, f64)>>,
}

impl<'a> Marginal<'a> {
    fn new(qubo: &'a QuboModel) -> Self {
        let n = qubo.num_decision_bits();
        let rows = qubo.rows();
        let mut keyed: HashMap<(Vec<(usize, i64)>, i64, i64, i64), Vec<(usize, usize)>> = HashMap::new();
        let mut plain = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            let top = row.terms.iter().map(|t| t.1).max();
            let private: Vec<usize> = (0..row.terms.len()).filter(|&k| Some(row.terms[k].1) == top).collect();
            if row.terms.len() < 2 || private.len() != 1 {
                plain.push(r);
                continue;
            }
            let k = private[0];
            let mut shared = row.terms.clone();
            let (bit, coef) = shared.remove(k);
            keyed.entry((shared, coef, row.rhs, row.range)).or_default().push((r, bit));
        }
        let mut rows_of = vec![Vec::new(); n];
        let mut shared_of = vec![Vec::new(); n];
        let mut private_of = vec![Vec::new(); n];
        let mut bundles = Vec::new();
        let mut groups: Vec<_> = keyed.into_iter().collect();
        groups.sort_by_key(|(_, members)| members[0].0);
        for ((shared, coef, _, _), members) in groups {
            let in_shared = |b: usize| shared.iter().any(|t| t.0 == b);
            if members.len() < 2 || members.iter().any(|&(_, b)| in_shared(b)) {
                plain.extend(members.iter().map(|m| m.0));
                continue;
            }
            let id = bundles.len();
            for &(i, a) in &shared {
                shared_of[i].push((id, a));
            }
            for &(_, b) in &members {
                private_of[b].push(id);
            }
            bundles.push(RowBundle { rep: members[0].0, coef, size: members.len() as i64, shared_lhs: 0, ones: 0 });
        }
        for r in plain {
            for &(i, a) in &rows[r].terms {
                rows_of[i].push((r, a));
            }
        }
        let mut quad_of = vec![Vec::new(); n];
        for &(i, j, q) in qubo.quadratic_objective() {
            quad_of[i].push((j, q));
            quad_of[j].push((i, q));
        }
        Self { qubo, rows_of, shared_of, private_of, bundles, quad_of }
    }

    fn run(&self, s: &AnnealSchedule, rng: &mut ChaCha8Rng, trace: bool) -> (Vec<bool>, Vec<f64>) {
        let q = self.qubo;
        let n = q.num_decision_bits();
        let lam = q.penalty_weight();
        let rows = q.rows();
        let obj = q.objective();
        let mut x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let mut lhs: Vec<i64> = rows.iter().map(|r| r.lhs(&x)).collect();
        let mut bundles: Vec<(i64, i64)> = self.bundles.iter().map(|b| (b.shared_lhs, b.ones)).collect();
        for i in (0..n).filter(|&i| x[i]) {
            for &(g, a) in &self.shared_of[i] {
                bundles[g].0 += a;
            }
            for &g in &self.private_of[i] {
                bundles[g].1 += 1;
            }
        }
        let mut energy = q.energy(&q.complete(&x));
        let mut best = (energy, x.clone());
        let mut best_trace = Vec::with_capacity(if trace { s.sweeps } else { 0 });
        for sweep in 0..s.sweeps {
            let t = s.temperature(sweep);
            for i in 0..n {
                let up = !x[i];
                let sign: i64 = if up { 1 } else { -1 };
                let mut gain = obj[i];
                for &(j, qv) in &self.quad_of[i] {
                    if x[j] {
                        gain += qv;
                    }
                }
                let mut dpen = 0.0;
                for &(r, a) in &self.rows_of[i] {
                    let row = &rows[r];
                    dpen += row.min_residual_sq(lhs[r] + sign * a) - row.min_residual_sq(lhs[r]);
                }
                for &(g, a) in &self.shared_of[i] {
                    let b = &self.bundles[g];
                    let row = &rows[b.rep];
                    let (sh, ones) = bundles[g];
                    let next = sh + sign * a;
                    let set = row.min_residual_sq(next + b.coef) - row.min_residual_sq(sh + b.coef);
                    let unset = row.min_residual_sq(next) - row.min_residual_sq(sh);
                    dpen += ones as f64 * set + (b.size - ones) as f64 * unset;
                }
                for &g in &self.private_of[i] {
                    let b = &self.bundles[g];
                    let row = &rows[b.rep];
                    let sh = bundles[g].0;
                    let (before, after) = if up { (sh, sh + b.coef) } else { (sh + b.coef, sh) };
                    dpen += row.min_residual_sq(after) - row.min_residual_sq(before);
                }
                let de = -(sign as f64) * gain + lam * dpen;
                if accept(de, t, rng) {
                    x[i] = up;
                    for &(r, a) in &self.rows_of[i] {
                        lhs[r] += sign * a;
                    }
                    for &(g, a) in &self.shared_of[i] {
                        bundles[g].0 += sign * a;
                    }
                    for &g in &self.private_of[i] {
                        bundles[g].1 += sign;
                    }
                    energy += de;
                }
            }
            if energy < best.0 {
                best = (energy, x.clone());
            }
            if trace {
                best_trace.push(best.0);
            }
        }
        (q.complete(&best.1), best_trace)
    }
}

struct Explicit<'a> {
    qubo: &'a QuboModel,
    diag: Vec<f64>,
    start: Vec<usize>,
    nbr: Vec<(usize, f64)>,
}

impl<'a> Explicit<'a> {
    fn new(qubo: &'a QuboModel) -> Self {
        let n = qubo.num_bits();
        let mut diag = vec![0.0; n];
        let mut deg = vec![0usize; n];
        for &(i, j, v) in qubo.coefficients() {
            if i == j {
                diag[i] += v;
            } else {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + deg[i];
        }
        let mut fill = start.clone();
        let mut nbr = vec![(0usize, 0.0); start[n]];
        for &(i, j, v) in qubo.coefficients().iter().filter(|e| e.0 != e.1) {
            nbr[fill[i]] = (j, v);
            fill[i] += 1;
            nbr[fill[j]] = (i, v);
            fill[j] += 1;
        }
        Self { qubo, diag, start, nbr }
    }

    fn run(&self, s: &AnnealSchedule, rng: &mut ChaCha8Rng, trace: bool) -> (Vec<bool>, Vec<f64>) {
        let n = self.qubo.num_bits();
        let mut x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        // field[i] = Q_ii + Σ_j Q_ij x_j
        let mut field = self.diag.clone();
        for i in (0..n).filter(|&i| x[i]) {
            for &(j, v) in &self.nbr[self.start[i]..self.start[i + 1]] {
                field[j] += v;
            }
        }
        let mut energy = self.qubo.energy(&x);
        let mut best = (energy, x.clone());
        let mut best_trace = Vec::with_capacity(if trace { s.sweeps } else { 0 });
        for sweep in 0..s.sweeps {
            let t = s.temperature(sweep);
            for i in 0..n {
                let d = if x[i] { -1.0 } else { 1.0 };
                let de = d * field[i];
                if accept(de, t, rng) {
                    x[i] = !x[i];
                    energy += de;
                    for &(j, v) in &self.nbr[self.start[i]..self.start[i + 1]] {
                        field[j] += d * v;
                    }
                }
            }
            if energy < best.0 {
                best = (energy, x.clone());
            }
            if trace {
                best_trace.push(best.0);
            }
        }
        (best.1, best_trace)
    }
}
