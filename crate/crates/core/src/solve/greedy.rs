//! Highest-rate-first allocation.
//!
//! Pairs are taken in descending objective coefficient (ties on rb, then
//! user) as long as every C1–C3 row stays satisfied. Pairs on RBs owned by
//! the user's home gNodeB are placed first; borrowed pairs are only
//! considered afterwards. QoS rows are not enforced, only reported through
//! the final status.

use std::time::Instant;

use super::{Solution, SolverStats};
use crate::model::{feasibility_tol, ConstrainedModel, Family, Sense};

pub fn solve_greedy(model: &ConstrainedModel) -> Solution {
    let start = Instant::now();
    let n = model.num_vars();
    let labels = model.variables();
    let obj = model.objective();

    // ≤-normalized C1–C3 rows
    let mut limit = Vec::new();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut unblocks = vec![false; n];
    for c in model.constraints().iter().filter(|c| matches!(c.family, Family::C1 | Family::C2 | Family::C3)) {
        let signs: &[f64] = match c.sense {
            Sense::Le => &[1.0],
            Sense::Ge => &[-1.0],
            Sense::Eq => &[1.0, -1.0],
        };
        for &s in signs {
            let r = limit.len();
            limit.push(s * c.rhs + feasibility_tol(c.rhs));
            for &(i, a) in &c.terms {
                cols[i].push((r, s * a));
                if s * a < 0.0 {
                    unblocks[i] = true;
                }
            }
        }
    }
    let mut act = vec![0.0; limit.len()];

    let owner = &model.meta().rb_owner;
    let native = |i: usize| owner.get(&labels[i].rb).is_none_or(|g| *g == labels[i].gnb);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| obj[b].total_cmp(&obj[a]).then(labels[a].cmp(&labels[b])));
    let (first, second): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| native(i));

    let mut x = vec![false; n];
    for pass in [first, second] {
        let mut k = 0;
        while k < pass.len() {
            let i = pass[k];
            k += 1;
            if x[i] || !cols[i].iter().all(|&(r, a)| a <= 0.0 || act[r] + a <= limit[r]) {
                continue;
            }
            x[i] = true;
            for &(r, a) in &cols[i] {
                act[r] += a;
            }
            // a negative coefficient may have freed an earlier, higher-rate pair
            if unblocks[i] {
                k = 0;
            }
        }
    }
    let stats = SolverStats::default();
    Solution::judged(model, "greedy", x, start.elapsed(), stats)
}
