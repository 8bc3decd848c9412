//! Depth-first branch and bound for linear binary programs.
//!
//! Rows are kept in `≤` form with their minimum attainable activity, which
//! drives both conflict detection and fixing by propagation. The node bound
//! combines the per-user caps (C1 rows) and per-RB uniqueness (C2 rows):
//! each C1 group is priced at `c_g − θ` and each C2 column at its best
//! remaining reduced gain, minimized over a few candidate `θ`. At `θ = 0`
//! this is the "best remaining gains within the caps" bound.

use std::time::{Duration, Instant};

use super::{greedy, Solution, SolveError, SolverStats, Status};
use crate::model::{feasibility_tol, ConstrainedModel, Family, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExactLimits {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl ExactLimits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn seconds(s: f64) -> Self {
        Self { max_nodes: None, max_time: Some(Duration::from_secs_f64(s)) }
    }
}

/// Exact search warm-started from the greedy allocation when that is
/// feasible.
pub fn solve_exact(model: &ConstrainedModel, limits: &ExactLimits) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let warm = greedy::solve_greedy(model);
    let warm = warm.status.is_feasible().then_some(warm.bits);
    let mut sol = solve_exact_from(model, limits, warm.as_deref())?;
    sol.wall_time = start.elapsed();
    Ok(sol)
}

/// Exact search from an optional feasible starting point.
pub fn solve_exact_from(
    model: &ConstrainedModel,
    limits: &ExactLimits,
    warm: Option<&[bool]>,
) -> Result<Solution, SolveError> {
    if !model.quadratic().is_empty() {
        return Err(SolveError::Unsupported("exact search handles linear objectives only".into()));
    }
    let start = Instant::now();
    let mut search = Search::new(model, limits, start);
    if let Some(w) = warm {
        if w.len() == model.num_vars() && model.is_feasible(w) {
            search.incumbent = Some((model.objective_value(w), w.to_vec()));
            search.stats.incumbent_trace.push((0, model.objective_value(w)));
        }
    }
    let completed = search.run();
    let mut stats = std::mem::take(&mut search.stats);
    stats.nodes = search.nodes;
    let status = match (&search.incumbent, completed) {
        (Some(_), true) => Status::Optimal,
        (None, true) => Status::Infeasible,
        (Some(_), false) => Status::Feasible,
        (None, false) => Status::Unknown,
    };
    let bits = search.incumbent.take().map(|(_, b)| b).unwrap_or_else(|| vec![false; model.num_vars()]);
    debug_assert!(!status.is_feasible() || model.is_feasible(&bits));
    Ok(Solution::with_status(model, "exact", bits, status, start.elapsed(), stats))
}

const FREE: u8 = 2;

struct Row {
    terms: Vec<(usize, f64)>,
    /// `b + tol`
    limit: f64,
    max_abs: f64,
}

enum Undo {
    Var(usize),
    Row(usize, f64),
}

struct Frame {
    mark: usize,
    var: usize,
    second: bool,
}

/// Disjoint `Σ x ≤ cap` rows used by the bound.
struct Partition {
    of_var: Vec<Option<usize>>,
    cap: Vec<f64>,
}

struct Search<'a> {
    model: &'a ConstrainedModel,
    limits: ExactLimits,
    start: Instant,
    rows: Vec<Row>,
    cols: Vec<Vec<(usize, f64)>>,
    min_act: Vec<f64>,
    state: Vec<u8>,
    fixed_obj: f64,
    order: Vec<usize>,
    trail: Vec<Undo>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    groups: Partition,
    columns: Partition,
    /// Minimum number of ones each group must contain.
    group_lo: Vec<usize>,
    incumbent: Option<(f64, Vec<bool>)>,
    nodes: u64,
    stats: SolverStats,
}

impl<'a> Search<'a> {
    fn new(model: &'a ConstrainedModel, limits: &ExactLimits, start: Instant) -> Self {
        let n = model.num_vars();
        let mut rows = Vec::new();
        for c in model.constraints() {
            let mut push = |sign: f64| {
                let terms: Vec<(usize, f64)> =
                    c.terms.iter().filter(|t| t.1 != 0.0).map(|&(i, a)| (i, sign * a)).collect();
                let max_abs = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
                rows.push(Row { terms, limit: sign * c.rhs + feasibility_tol(c.rhs), max_abs });
            };
            match c.sense {
                Sense::Le => push(1.0),
                Sense::Ge => push(-1.0),
                Sense::Eq => {
                    push(1.0);
                    push(-1.0);
                }
            }
        }
        let mut cols = vec![Vec::new(); n];
        let mut min_act = vec![0.0; rows.len()];
        for (r, row) in rows.iter().enumerate() {
            for &(i, a) in &row.terms {
                cols[i].push((r, a));
                if a < 0.0 {
                    min_act[r] += a;
                }
            }
        }
        let obj = model.objective();
        let mut order: Vec<usize> = (0..n).collect();
        let labels = model.variables();
        order.sort_by(|&a, &b| obj[b].total_cmp(&obj[a]).then(labels[a].cmp(&labels[b])));

        let groups = partition(model, Family::C1);
        let columns = partition(model, Family::C2);
        let mut group_lo = vec![0usize; groups.cap.len()];
        for c in model.constraints().iter().filter(|c| c.sense == Sense::Ge && !c.terms.is_empty()) {
            let g = groups.of_var[c.terms[0].0];
            let Some(g) = g else { continue };
            if !c.terms.iter().all(|&(i, a)| groups.of_var[i] == Some(g) && a >= 0.0) {
                continue;
            }
            let mut a: Vec<f64> = c.terms.iter().map(|t| t.1).collect();
            a.sort_by(|x, y| y.total_cmp(x));
            let need = c.rhs - feasibility_tol(c.rhs);
            let mut acc = 0.0;
            let mut t = 0;
            while acc < need && t < a.len() {
                acc += a[t];
                t += 1;
            }
            group_lo[g] = group_lo[g].max(t);
        }

        let n_rows = rows.len();
        Self {
            model,
            limits: *limits,
            start,
            rows,
            cols,
            min_act,
            state: vec![FREE; n],
            fixed_obj: 0.0,
            order,
            trail: Vec::new(),
            queue: Vec::new(),
            queued: vec![false; n_rows],
            groups,
            columns,
            group_lo,
            incumbent: None,
            nodes: 0,
            stats: SolverStats::default(),
        }
    }

    fn out_of_budget(&self) -> bool {
        if self.limits.max_nodes.is_some_and(|m| self.nodes >= m) {
            return true;
        }
        self.nodes % 256 == 0 && self.limits.max_time.is_some_and(|t| self.start.elapsed() >= t)
    }

    /// Returns true when the search space was exhausted.
    fn run(&mut self) -> bool {
        // root: any row already violated, or propagation conflict
        if (0..self.rows.len()).any(|r| self.min_act[r] > self.rows[r].limit) {
            return true;
        }
        for r in 0..self.rows.len() {
            self.enqueue(r);
        }
        if !self.propagate() {
            return true;
        }
        self.stats.root_bound = Some(self.bound());
        self.dive();
        let mut stack: Vec<Frame> = Vec::new();
        let mut descend = true;
        loop {
            if descend {
                self.nodes += 1;
                if self.out_of_budget() {
                    return false;
                }
                let b = self.bound();
                if self.prunable(b) {
                    descend = false;
                    continue;
                }
                match self.order.iter().copied().find(|&v| self.state[v] == FREE) {
                    None => {
                        let bits: Vec<bool> = self.state.iter().map(|&s| s == 1).collect();
                        let obj = self.model.objective_value(&bits);
                        self.stats.incumbent_trace.push((self.nodes, obj));
                        self.incumbent = Some((obj, bits));
                        descend = false;
                    }
                    Some(v) => {
                        stack.push(Frame { mark: self.trail.len(), var: v, second: false });
                        descend = self.assign(v, true);
                    }
                }
            } else {
                let Some(f) = stack.last_mut() else { return true };
                let (mark, var, second) = (f.mark, f.var, f.second);
                self.undo_to(mark);
                if second {
                    stack.pop();
                } else {
                    f.second = true;
                    descend = self.assign(var, false);
                }
            }
        }
    }

    /// Propagating dive from the root: every group with a minimum first
    /// receives that many ones, weakest group first and native RBs first,
    /// then the remaining variables are tried at 1 in branching order,
    /// native RBs before borrowed ones. A
    /// completed dive becomes the incumbent if it beats the current one.
    fn dive(&mut self) {
        let mark = self.trail.len();
        let obj = self.model.objective();
        let labels = self.model.variables();
        let owner = &self.model.meta().rb_owner;
        let native = |v: usize| owner.get(&labels[v].rb).is_none_or(|g| *g == labels[v].gnb);
        let ng = self.groups.cap.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); ng];
        for &v in &self.order {
            if let Some(g) = self.groups.of_var[v] {
                members[g].push(v);
            }
        }
        for m in &mut members {
            m.sort_by_key(|&v| !native(v));
        }
        let rate = |g: usize| members[g].iter().map(|&v| obj[v]).fold(f64::NEG_INFINITY, f64::max);
        let mut needy: Vec<usize> = (0..ng).filter(|&g| self.group_lo[g] > 0).collect();
        needy.sort_by(|&a, &b| rate(a).total_cmp(&rate(b)).then(a.cmp(&b)));
        for g in needy {
            for &v in &members[g] {
                let have = members[g].iter().filter(|&&w| self.state[w] == 1).count();
                if have >= self.group_lo[g] {
                    break;
                }
                if self.state[v] != FREE {
                    continue;
                }
                let m = self.trail.len();
                if !self.assign(v, true) {
                    self.undo_to(m);
                }
            }
        }
        let fill: Vec<usize> = self
            .order
            .iter()
            .filter(|&&v| native(v))
            .chain(self.order.iter().filter(|&&v| !native(v)))
            .copied()
            .collect();
        for v in fill {
            if self.state[v] != FREE {
                continue;
            }
            let m = self.trail.len();
            if !self.assign(v, true) {
                self.undo_to(m);
                if !self.assign(v, false) {
                    self.undo_to(mark);
                    return;
                }
            }
        }
        let bits: Vec<bool> = self.state.iter().map(|&s| s == 1).collect();
        let value = self.model.objective_value(&bits);
        if self.incumbent.as_ref().is_none_or(|(inc, _)| value > *inc) {
            self.stats.incumbent_trace.push((self.nodes, value));
            self.incumbent = Some((value, bits));
        }
        self.undo_to(mark);
    }

    fn prunable(&self, bound: f64) -> bool {
        if bound == f64::NEG_INFINITY {
            return true;
        }
        match &self.incumbent {
            Some((inc, _)) => bound <= inc + 1e-9 * inc.abs().max(1.0),
            None => false,
        }
    }

    fn enqueue(&mut self, r: usize) {
        if !self.queued[r] {
            self.queued[r] = true;
            self.queue.push(r);
        }
    }

    fn assign(&mut self, v: usize, value: bool) -> bool {
        self.fix(v, value) && self.propagate()
    }

    fn fix(&mut self, v: usize, value: bool) -> bool {
        self.state[v] = value as u8;
        self.trail.push(Undo::Var(v));
        if value {
            self.fixed_obj += self.model.objective()[v];
        }
        for k in 0..self.cols[v].len() {
            let (r, a) = self.cols[v][k];
            if (value && a > 0.0) || (!value && a < 0.0) {
                self.trail.push(Undo::Row(r, self.min_act[r]));
                self.min_act[r] += a.abs();
                let row = &self.rows[r];
                if self.min_act[r] > row.limit {
                    return false;
                }
                if row.limit - self.min_act[r] < row.max_abs {
                    self.enqueue(r);
                }
            }
        }
        true
    }

    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            let slack = self.rows[r].limit - self.min_act[r];
            if slack >= self.rows[r].max_abs {
                continue;
            }
            for k in 0..self.rows[r].terms.len() {
                let (j, a) = self.rows[r].terms[k];
                if self.state[j] != FREE {
                    continue;
                }
                let ok = if a > slack {
                    self.fix(j, false)
                } else if -a > slack {
                    self.fix(j, true)
                } else {
                    true
                };
                if !ok {
                    for q in self.queue.drain(..) {
                        self.queued[q] = false;
                    }
                    return false;
                }
            }
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail not empty") {
                Undo::Var(v) => {
                    if self.state[v] == 1 {
                        self.fixed_obj -= self.model.objective()[v];
                    }
                    self.state[v] = FREE;
                }
                Undo::Row(r, old) => self.min_act[r] = old,
            }
        }
    }

    /// Upper bound on the objective over the current subtree, or −∞ when the
    /// caps cannot meet the per-group minimums.
    fn bound(&self) -> f64 {
        let obj = self.model.objective();
        let ng = self.groups.cap.len();
        let nc = self.columns.cap.len();
        let mut g_used = vec![0.0; ng];
        let mut c_used = vec![0.0; nc];
        let mut g_best = vec![f64::NEG_INFINITY; ng];
        for (v, &s) in self.state.iter().enumerate() {
            let g = self.groups.of_var[v];
            if s == 1 {
                if let Some(g) = g {
                    g_used[g] += 1.0;
                }
                if let Some(c) = self.columns.of_var[v] {
                    c_used[c] += 1.0;
                }
            } else if s == FREE {
                if let Some(g) = g {
                    g_best[g] = g_best[g].max(obj[v]);
                }
            }
        }
        let g_cap: Vec<f64> = (0..ng).map(|g| (self.groups.cap[g] - g_used[g]).max(0.0)).collect();
        let g_lo: Vec<f64> = (0..ng).map(|g| (self.group_lo[g] as f64 - g_used[g]).max(0.0)).collect();
        let c_cap: Vec<f64> = (0..nc).map(|c| (self.columns.cap[c] - c_used[c]).max(0.0)).collect();

        // per column: best free reduced gain of grouped vars (shifted by θ)
        // and best free gain of ungrouped vars
        let mut c_grouped = vec![f64::NEG_INFINITY; nc];
        let mut c_plain = vec![0.0f64; nc];
        let mut loose_grouped: Vec<f64> = Vec::new();
        let mut loose_plain = 0.0;
        let mut slope = 0.0;
        for (v, _) in self.state.iter().enumerate().filter(|(_, &s)| s == FREE) {
            let g = self.groups.of_var[v];
            match (g, self.columns.of_var[v]) {
                (Some(g), Some(c)) => c_grouped[c] = c_grouped[c].max(obj[v] - g_best[g]),
                (None, Some(c)) => c_plain[c] = c_plain[c].max(obj[v]),
                (Some(g), None) => {
                    loose_grouped.push(obj[v] - g_best[g]);
                    slope += 1.0;
                }
                (None, None) => loose_plain += obj[v].max(0.0),
            }
        }
        for c in 0..nc {
            if c_grouped[c] > f64::NEG_INFINITY && c_cap[c] > 0.0 {
                slope += c_cap[c];
            }
        }
        if slope < g_lo.iter().sum::<f64>() - 1e-9 {
            return f64::NEG_INFINITY;
        }

        let eval = |theta: f64| {
            let mut b = self.fixed_obj + loose_plain;
            for g in 0..ng {
                if g_best[g] == f64::NEG_INFINITY {
                    continue;
                }
                let p = g_best[g] - theta;
                b += if p >= 0.0 { g_cap[g] * p } else { g_lo[g] * p };
            }
            for c in 0..nc {
                let best = (c_grouped[c] + theta).max(c_plain[c]).max(0.0);
                b += c_cap[c] * best;
            }
            b + loose_grouped.iter().map(|r| (r + theta).max(0.0)).sum::<f64>()
        };
        let mut best = eval(0.0);
        for g in 0..ng {
            if g_best[g] > 0.0 {
                best = best.min(eval(g_best[g]));
            }
        }
        best
    }
}

/// Disjoint all-ones `≤` rows of one family; overlapping rows are skipped.
fn partition(model: &ConstrainedModel, family: Family) -> Partition {
    let mut of_var = vec![None; model.num_vars()];
    let mut cap = Vec::new();
    for c in model.constraints().iter().filter(|c| c.family == family && c.sense == Sense::Le) {
        if c.terms.iter().any(|&(i, a)| a != 1.0 || of_var[i].is_some()) {
            continue;
        }
        let id = cap.len();
        cap.push(c.rhs.floor().max(0.0));
        for &(i, _) in &c.terms {
            of_var[i] = Some(id);
        }
    }
    Partition { of_var, cap }
}
