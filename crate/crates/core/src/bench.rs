//! Benchmark harness: generate instances over a size list, run solvers and
//! collect one [`BenchRecord`] per (instance, solver, trial).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::model::build_model;
use crate::net::{generate_scenario, Scenario, ScenarioConfig};
use crate::qubo::{to_qubo, PenaltyConfig};
use crate::solve::{mix_seed, solve_exact, solve_greedy, solve_sa, AnnealSchedule, ExactLimits, Solution, Status};
use crate::verify::verify_allocation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance_id: String,
    pub n_gnbs: usize,
    pub n_rbs: usize,
    pub n_users: usize,
    pub n_vars: usize,
    pub solver: String,
    pub seed: u64,
    pub wall_ms: f64,
    pub objective_bps: f64,
    pub feasible: bool,
    pub gap_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchSolver {
    Exact,
    Greedy,
    Sa,
}

impl BenchSolver {
    pub fn name(self) -> &'static str {
        match self {
            BenchSolver::Exact => "exact",
            BenchSolver::Greedy => "greedy",
            BenchSolver::Sa => "sa",
        }
    }
}

impl FromStr for BenchSolver {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(BenchSolver::Exact),
            "greedy" => Ok(BenchSolver::Greedy),
            "sa" => Ok(BenchSolver::Sa),
            other => Err(format!("unknown bench solver `{other}` (expected exact, greedy or sa)")),
        }
    }
}

/// `gnbs x rbs x users`, with RBs and users split evenly across gNodeBs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeSpec {
    pub gnbs: u32,
    pub rbs: u32,
    pub users: u32,
}

impl SizeSpec {
    pub fn new(gnbs: u32, rbs: u32, users: u32) -> Self {
        Self { gnbs, rbs, users }
    }

    pub fn n_vars(&self) -> usize {
        self.rbs as usize * self.users as usize
    }
}

impl fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.gnbs, self.rbs, self.users)
    }
}

impl FromStr for SizeSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.trim().split('x').collect();
        let bad = || format!("size `{s}` is not of the form GNBSxRBSxUSERS");
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: Vec<u32> = parts.iter().map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        if n[0] == 0 || n[1] < n[0] {
            return Err(format!("size `{s}` needs at least one gNodeB and one RB per gNodeB"));
        }
        Ok(Self::new(n[0], n[1], n[2]))
    }
}

/// Parses a comma-separated size list or a preset name.
pub fn parse_sizes(spec: &str) -> Result<Vec<SizeSpec>, String> {
    if let Some(p) = preset(spec) {
        return Ok(p);
    }
    spec.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Named size lists: `reference` (the four-cell layout), `sweep5k`
/// (up to 5000 variables) and `oru550` (one radio unit with 550 RBs).
pub fn preset(name: &str) -> Option<Vec<SizeSpec>> {
    let s = SizeSpec::new;
    match name {
        "reference" => Some(vec![s(4, 42, 28)]),
        "sweep5k" => Some(vec![s(2, 10, 6), s(2, 20, 12), s(3, 30, 20), s(4, 50, 25), s(4, 70, 36), s(4, 100, 50)]),
        "oru550" => Some(vec![s(1, 550, 2), s(1, 550, 4), s(1, 550, 9), s(1, 550, 18)]),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<SizeSpec>,
    pub solvers: Vec<BenchSolver>,
    pub trials: usize,
    pub seed: u64,
    pub exact_time_limit_s: f64,
    pub sa_reads: Option<usize>,
    pub sa_sweeps: Option<usize>,
}

impl BenchConfig {
    pub fn new(sizes: Vec<SizeSpec>, solvers: Vec<BenchSolver>) -> Self {
        Self { sizes, solvers, trials: 1, seed: 0, exact_time_limit_s: 10.0, sa_reads: None, sa_sweeps: None }
    }
}

/// Scenario for instance `index`. The reference size uses the reference
/// per-cell layout; everything else is split evenly.
pub fn bench_scenario(size: &SizeSpec, seed: u64, index: usize) -> Result<Scenario, String> {
    let cfg = if *size == SizeSpec::new(4, 42, 28) {
        ScenarioConfig::four_cell_reference()
    } else {
        ScenarioConfig::uniform(size.gnbs, size.rbs, size.users)
    };
    generate_scenario(&cfg, mix_seed(seed, index as u64)).map_err(|e| e.to_string())
}

/// Runs every (instance, trial, solver) combination in order, handing each
/// record to `sink` as soon as it exists. Exact runs first within a trial
/// so its optimum can fill the other records' gaps.
pub fn run_bench(cfg: &BenchConfig, mut sink: impl FnMut(&BenchRecord)) -> Vec<BenchRecord> {
    let mut solvers = cfg.solvers.clone();
    solvers.sort();
    solvers.dedup();
    let mut out = Vec::new();
    for (index, size) in cfg.sizes.iter().enumerate() {
        let instance_id = format!("i{index}-{size}");
        let scenario = bench_scenario(size, cfg.seed, index);
        for trial in 0..cfg.trials.max(1) {
            let seed = cfg.seed.wrapping_add(trial as u64);
            let mut optimum: Option<f64> = None;
            for &solver in &solvers {
                let mut rec = BenchRecord {
                    instance_id: instance_id.clone(),
                    n_gnbs: size.gnbs as usize,
                    n_rbs: size.rbs as usize,
                    n_users: size.users as usize,
                    n_vars: size.n_vars(),
                    solver: solver.name().into(),
                    seed,
                    wall_ms: 0.0,
                    objective_bps: 0.0,
                    feasible: false,
                    gap_pct: None,
                };
                if let Ok(sc) = &scenario {
                    if let Ok((sol, ms)) = run_one(sc, solver, cfg, seed) {
                        rec.wall_ms = ms;
                        rec.objective_bps = sol.objective;
                        rec.feasible = verify_allocation(&sol.allocation, sc).map(|r| r.feasible).unwrap_or(false);
                        if solver == BenchSolver::Exact && sol.status == Status::Optimal {
                            optimum = Some(sol.objective);
                        }
                        if rec.feasible {
                            rec.gap_pct = optimum.map(|opt| gap_pct(opt, sol.objective));
                        }
                    }
                }
                sink(&rec);
                out.push(rec);
            }
        }
    }
    out
}

fn gap_pct(optimum: f64, value: f64) -> f64 {
    if optimum == 0.0 {
        0.0
    } else {
        100.0 * (optimum - value) / optimum.abs()
    }
}

/// Times the backend call; for annealing this includes the QUBO lowering.
fn run_one(sc: &Scenario, solver: BenchSolver, cfg: &BenchConfig, seed: u64) -> Result<(Solution, f64), String> {
    let model = build_model(sc).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let sol = match solver {
        BenchSolver::Exact => {
            solve_exact(&model, &ExactLimits::seconds(cfg.exact_time_limit_s)).map_err(|e| e.to_string())?
        }
        BenchSolver::Greedy => solve_greedy(&model),
        BenchSolver::Sa => {
            let qubo = to_qubo(&model, &PenaltyConfig::for_model(&model)).map_err(|e| e.to_string())?;
            let mut sch = AnnealSchedule::default_for(&qubo, seed);
            if let Some(r) = cfg.sa_reads {
                sch.reads = r;
            }
            if let Some(s) = cfg.sa_sweeps {
                sch.sweeps = s;
            }
            solve_sa(&qubo, &sch).map_err(|e| e.to_string())?
        }
    };
    Ok((sol, start.elapsed().as_secs_f64() * 1e3))
}

pub fn write_csv<W: Write>(records: &[BenchRecord], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    if records.is_empty() {
        wtr.write_record(CSV_HEADER)?;
    }
    wtr.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 11] = [
    "instance_id",
    "n_gnbs",
    "n_rbs",
    "n_users",
    "n_vars",
    "solver",
    "seed",
    "wall_ms",
    "objective_bps",
    "feasible",
    "gap_pct",
];

pub fn read_csv<R: std::io::Read>(r: R) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// Median wall time per variable count for one solver, ascending in
/// variable count.
pub fn median_wall_by_size(records: &[BenchRecord], solver: &str) -> Vec<(usize, f64)> {
    let mut by: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.solver == solver) {
        by.entry(r.n_vars).or_default().push(r.wall_ms);
    }
    by.into_iter()
        .map(|(n, mut v)| {
            v.sort_by(f64::total_cmp);
            let m = if v.len() % 2 == 1 { v[v.len() / 2] } else { 0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2]) };
            (n, m)
        })
        .collect()
}
