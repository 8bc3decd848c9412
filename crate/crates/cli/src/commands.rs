use std::collections::BTreeMap;
use std::fs::File;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use ranslice::bench::{self, BenchConfig, BenchRecord, BenchSolver};
use ranslice::model::build_model;
use ranslice::net::{generate_scenario, split_even, ScenarioConfig};
use ranslice::qubo::{to_qubo, PenaltyConfig};
use ranslice::solve::remote::{LoopbackServer, RemoteClient, WireParams};
use ranslice::solve::{solve_exact, solve_greedy, solve_sa, AnnealSchedule, ExactLimits, Solution};
use ranslice::verify::{verify_allocation, Delay};

use crate::docs::{read_scenario, read_solution, write_text, SolutionDocument, SOLUTION_VERSION};
use crate::{BenchArgs, GenArgs, QuboArgs, ReportArgs, SolveArgs, SolverArg, VerifyArgs};

pub const EXIT_OK: ExitCode = ExitCode::SUCCESS;
pub const EXIT_INFEASIBLE: ExitCode = ExitCode::FAILURE;
pub const EXIT_INPUT: u8 = 2;

fn per_gnb(values: Option<&[u32]>, reference: &[u32], fallback: u32, gnbs: u32, what: &str) -> Result<Vec<u32>> {
    let Some(values) = values else {
        return Ok(if gnbs as usize == reference.len() {
            reference.to_vec()
        } else {
            vec![fallback; gnbs as usize]
        });
    };
    match values.len() {
        1 => Ok(split_even(values[0], gnbs)),
        n if n == gnbs as usize => Ok(values.to_vec()),
        n => bail!("--{what} has {n} entries; expected 1 or {gnbs}"),
    }
}

pub fn gen(a: GenArgs) -> Result<ExitCode> {
    if a.gnbs == 0 {
        bail!("--gnbs must be at least 1");
    }
    let reference = ScenarioConfig::four_cell_reference();
    let mut cfg = ScenarioConfig {
        rbs_per_gnb: per_gnb(a.rbs.as_deref(), &reference.rbs_per_gnb, 10, a.gnbs, "rbs")?,
        users_per_gnb: per_gnb(a.users.as_deref(), &reference.users_per_gnb, 5, a.gnbs, "users")?,
        ..reference
    };
    cfg.urllc_fraction = a.urllc_frac;
    cfg.k_max = a.kmax;
    cfg.area_side_m = a.area;
    cfg.coverage_radius_m = a.radius;
    let sc = generate_scenario(&cfg, a.seed)?;
    write_text(&a.out, &sc.to_json())?;
    println!(
        "gnbs {} rbs {} users {} variables {}",
        sc.gnbs.len(),
        sc.total_rbs(),
        sc.users.len(),
        sc.total_rbs() * sc.users.len()
    );
    Ok(EXIT_OK)
}

pub fn solve(a: SolveArgs) -> Result<ExitCode> {
    let sc = read_scenario(&a.scenario)?;
    let model = build_model(&sc)?;
    if !(a.time_limit > 0.0 && a.time_limit.is_finite()) {
        bail!("--time-limit must be positive");
    }
    let (sol, elapsed): (Solution, Duration) = match a.solver {
        SolverArg::Exact => {
            let s = solve_exact(&model, &ExactLimits::seconds(a.time_limit))?;
            let t = s.wall_time;
            (s, t)
        }
        SolverArg::Greedy => {
            let s = solve_greedy(&model);
            let t = s.wall_time;
            (s, t)
        }
        SolverArg::Sa => {
            let start = Instant::now();
            let qubo = to_qubo(&model, &PenaltyConfig::for_model(&model))?;
            let mut sch = AnnealSchedule::default_for(&qubo, a.seed);
            if let Some(r) = a.reads {
                sch.reads = r;
            }
            if let Some(s) = a.sweeps {
                sch.sweeps = s;
            }
            let s = solve_sa(&qubo, &sch)?;
            (s, start.elapsed())
        }
        SolverArg::Remote => {
            let params = WireParams { time_limit_s: a.time_limit, seed: a.seed, reads: a.reads, sweeps: a.sweeps };
            let timeout = Duration::from_secs_f64(a.time_limit);
            let interval = Duration::from_millis(20);
            let s = match &a.endpoint {
                Some(ep) => RemoteClient::new(ep).solve(&model, &params, interval, timeout)?,
                None => {
                    let server = LoopbackServer::start().context("starting loopback sampler")?;
                    RemoteClient::new(&server.endpoint()).solve(&model, &params, interval, timeout)?
                }
            };
            let t = s.wall_time;
            (s, t)
        }
    };
    let report = verify_allocation(&sol.allocation, &sc)?;
    let doc = SolutionDocument {
        version: SOLUTION_VERSION,
        solver: sol.solver.clone(),
        status: sol.status,
        feasible: report.feasible,
        objective_bps: sol.objective,
        wall_ms: elapsed.as_secs_f64() * 1e3,
        seed: a.seed,
        assignment: sol.allocation.clone(),
        report,
    };
    write_text(&a.out, &serde_json::to_string_pretty(&doc)?)?;
    println!(
        "solver {} status {} feasible {} objective {:.6e} bit/s wall {:.1} ms",
        doc.solver, doc.status, doc.feasible, doc.objective_bps, doc.wall_ms
    );
    if !doc.feasible {
        eprint!("{}", doc.report.summary());
    }
    Ok(if doc.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let sc = read_scenario(&a.scenario)?;
    let doc = read_solution(&a.solution)?;
    let report = verify_allocation(&doc.assignment, &sc)?;
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.summary());
        for f in report.families.iter().filter(|f| !f.passed) {
            for v in &f.violations {
                println!("  {}: {}", v.family, v.message);
            }
        }
    }
    Ok(if report.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn report(a: ReportArgs) -> Result<ExitCode> {
    if let Some(path) = a.solution {
        let doc = read_solution(&path)?;
        let r = &doc.report;
        println!("solver {}  status {}  feasible {}  objective {:.6e} bit/s  wall {:.1} ms", doc.solver, doc.status, doc.feasible, doc.objective_bps, doc.wall_ms);
        println!();
        println!("{:<8} {:>5} {:>7} {:>7} {:>7} {:>6}", "gnb", "pool", "in_use", "served", "native", "util");
        for g in &r.gnbs {
            println!(
                "{:<8} {:>5} {:>7} {:>7} {:>7} {:>6.2}",
                g.gnb_id.to_string(),
                g.pool_size,
                g.rbs_in_use,
                g.served_users,
                g.native_served_users,
                g.utilization
            );
        }
        println!();
        println!("{:<8} {:<8} {:<6} {:>4} {:>8} {:>14} {:>12}", "user", "home", "slice", "rbs", "borrowed", "rate_bps", "delay_s");
        for u in &r.users {
            let delay = match u.delay {
                Delay::Seconds(d) => format!("{d:.3e}"),
                Delay::Unstable => "unstable".into(),
            };
            println!(
                "{:<8} {:<8} {:<6} {:>4} {:>8} {:>14.1} {:>12}",
                u.user_id.to_string(),
                u.home_gnb.to_string(),
                u.slice.to_string(),
                u.rbs_assigned,
                u.borrowed_rbs,
                u.rate_bps,
                delay
            );
        }
        return Ok(EXIT_OK);
    }
    let path = a.csv.ok_or_else(|| anyhow!("either --solution or --csv is required"))?;
    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let records = bench::read_csv(file).with_context(|| format!("parsing {}", path.display()))?;
    print_bench_table(&records);
    Ok(EXIT_OK)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn print_bench_table(records: &[BenchRecord]) {
    let mut groups: BTreeMap<(String, usize), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.solver.clone(), r.n_vars)).or_default().push(r);
    }
    println!("{:<8} {:>7} {:>5} {:>12} {:>14} {:>9} {:>8}", "solver", "n_vars", "runs", "median_ms", "median_obj", "feasible", "gap_pct");
    for ((solver, n_vars), rs) in groups {
        let ms = median(rs.iter().map(|r| r.wall_ms).collect()).unwrap_or(0.0);
        let obj = median(rs.iter().map(|r| r.objective_bps).collect()).unwrap_or(0.0);
        let feasible = rs.iter().filter(|r| r.feasible).count();
        let gap = median(rs.iter().filter_map(|r| r.gap_pct).collect())
            .map(|g| format!("{g:.3}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<8} {:>7} {:>5} {:>12.2} {:>14.6e} {:>9} {:>8}",
            solver,
            n_vars,
            rs.len(),
            ms,
            obj,
            format!("{feasible}/{}", rs.len()),
            gap
        );
    }
}

pub fn bench(a: BenchArgs) -> Result<ExitCode> {
    let sizes = bench::parse_sizes(&a.sizes).map_err(|e| anyhow!(e))?;
    let solvers = a
        .solvers
        .iter()
        .map(|s| s.parse::<BenchSolver>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow!(e))?;
    let cfg = BenchConfig {
        sizes,
        solvers,
        trials: a.trials.max(1),
        seed: a.seed,
        exact_time_limit_s: a.time_limit,
        sa_reads: a.reads,
        sa_sweeps: a.sweeps,
    };
    // fail on an unwritable path before spending time on solves
    let file = File::create(&a.csv).with_context(|| format!("creating {}", a.csv.display()))?;
    let records = bench::run_bench(&cfg, |r| {
        eprintln!(
            "{} {} n_vars={} wall_ms={:.2} feasible={}",
            r.instance_id, r.solver, r.n_vars, r.wall_ms, r.feasible
        )
    });
    bench::write_csv(&records, file).with_context(|| format!("writing {}", a.csv.display()))?;
    println!("{} records written to {}", records.len(), a.csv.display());
    Ok(EXIT_OK)
}

pub fn qubo(a: QuboArgs) -> Result<ExitCode> {
    let sc = read_scenario(&a.scenario)?;
    let model = build_model(&sc)?;
    let mut cfg = PenaltyConfig::for_model(&model);
    cfg.rate_quantum = a.rate_quantum;
    if let Some(p) = a.penalty {
        cfg.penalty_weight = p;
    }
    let q = to_qubo(&model, &cfg)?;
    write_text(&a.out, &q.to_text())?;
    println!(
        "bits {} (decision {}, slack {}) entries {} penalty {:.6e}",
        q.num_bits(),
        q.num_decision_bits(),
        q.num_slack_bits(),
        q.coefficients().len(),
        q.penalty_weight()
    );
    Ok(EXIT_OK)
}
