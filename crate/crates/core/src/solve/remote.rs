//! Fire-and-poll sampler protocol over HTTP, with an in-process loopback
//! server backed by [`solve_sa`](super::solve_sa).
//!
//! ```text
//! POST /v1/jobs        {model, params}          -> {job_id}
//! GET  /v1/jobs/{id}                            -> {status, solution?, error?}
//! ```

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{solve_sa, AnnealSchedule, Solution, SolverStats, Status};
use crate::model::{Allocation, ConstrainedModel, Family, LinearConstraint, Sense, VarLabel};
use crate::qubo::{to_qubo, PenaltyConfig};

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("unknown job {0}")]
    NotFound(String),
    #[error("job failed: {0}")]
    Failed(String),
    #[error("job did not finish within {0:?}")]
    Timeout(Duration),
}

impl RemoteError {
    /// Transport failures may succeed on retry; everything else will not.
    pub fn is_retryable(&self) -> bool {
        matches!(self, RemoteError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireConstraint {
    pub family: Family,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireModel {
    pub variables: Vec<VarLabel>,
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<WireConstraint>,
}

impl WireModel {
    pub fn from_model(model: &ConstrainedModel) -> Result<Self, RemoteError> {
        if !model.quadratic().is_empty() {
            return Err(RemoteError::Protocol("the wire format carries linear objectives only".into()));
        }
        Ok(Self {
            variables: model.variables().to_vec(),
            objective: model.objective().iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect(),
            constraints: model
                .constraints()
                .iter()
                .map(|c| WireConstraint { family: c.family, terms: c.terms.clone(), sense: c.sense, rhs: c.rhs })
                .collect(),
        })
    }

    pub fn to_model(&self) -> Result<ConstrainedModel, String> {
        let n = self.variables.len();
        let mut obj = vec![0.0; n];
        for &(i, c) in &self.objective {
            if i >= n {
                return Err(format!("objective index {i} out of range"));
            }
            obj[i] += c;
        }
        let cons = self
            .constraints
            .iter()
            .map(|c| LinearConstraint { family: c.family, terms: c.terms.clone(), sense: c.sense, rhs: c.rhs })
            .collect();
        ConstrainedModel::new(self.variables.clone(), obj, cons).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireParams {
    pub time_limit_s: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
}

impl WireParams {
    pub fn new(seed: u64) -> Self {
        Self { time_limit_s: 60.0, seed, reads: None, sweeps: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub model: WireModel,
    pub params: WireParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub job_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSolution {
    pub assignments: Allocation,
    pub objective: f64,
    /// Submission to completion, queueing included.
    pub wall_time_s: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResponse {
    pub status: JobState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<WireSolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Poll {
    Pending(JobState),
    Done(WireSolution),
}

impl WireSolution {
    /// Re-projects the returned assignment onto `model`.
    pub fn to_solution(&self, model: &ConstrainedModel) -> Result<Solution, RemoteError> {
        let bits = model.bits_of(&self.assignments).map_err(|e| RemoteError::Protocol(e.to_string()))?;
        Ok(Solution {
            solver: "remote".into(),
            status: self.status,
            objective: model.objective_value(&bits),
            allocation: model.allocation_of(&bits),
            bits,
            wall_time: Duration::from_secs_f64(self.wall_time_s.max(0.0)),
            stats: SolverStats::default(),
        })
    }
}

pub struct RemoteClient {
    base: String,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(endpoint: &str) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self { base: endpoint.trim_end_matches('/').to_string(), agent }
    }

    pub fn submit(&self, model: &ConstrainedModel, params: &WireParams) -> Result<String, RemoteError> {
        let body = SubmitRequest { model: WireModel::from_model(model)?, params: params.clone() };
        let mut resp = self
            .agent
            .post(&format!("{}/v1/jobs", self.base))
            .send_json(&body)
            .map_err(|e| map_err(e, ""))?;
        let r: SubmitResponse = resp.body_mut().read_json().map_err(|e| map_err(e, ""))?;
        Ok(r.job_id)
    }

    pub fn poll(&self, job_id: &str) -> Result<Poll, RemoteError> {
        let mut resp = self
            .agent
            .get(&format!("{}/v1/jobs/{job_id}", self.base))
            .call()
            .map_err(|e| map_err(e, job_id))?;
        let r: JobResponse = resp.body_mut().read_json().map_err(|e| map_err(e, job_id))?;
        match (r.status, r.solution) {
            (JobState::Done, Some(s)) => Ok(Poll::Done(s)),
            (JobState::Done, None) => Err(RemoteError::Protocol("done without a solution".into())),
            (JobState::Failed, _) => Err(RemoteError::Failed(r.error.unwrap_or_default())),
            (state, _) => Ok(Poll::Pending(state)),
        }
    }

    /// Submits and polls until the job finishes or `timeout` elapses.
    pub fn solve(
        &self,
        model: &ConstrainedModel,
        params: &WireParams,
        interval: Duration,
        timeout: Duration,
    ) -> Result<Solution, RemoteError> {
        let start = Instant::now();
        let id = self.submit(model, params)?;
        loop {
            if let Poll::Done(s) = self.poll(&id)? {
                return s.to_solution(model);
            }
            if start.elapsed() >= timeout {
                return Err(RemoteError::Timeout(timeout));
            }
            thread::sleep(interval);
        }
    }
}

fn map_err(e: ureq::Error, job: &str) -> RemoteError {
    match e {
        ureq::Error::StatusCode(404) => RemoteError::NotFound(job.to_string()),
        ureq::Error::StatusCode(code) => RemoteError::Protocol(format!("HTTP status {code}")),
        ureq::Error::Json(e) => RemoteError::Protocol(e.to_string()),
        ureq::Error::Protocol(e) => RemoteError::Protocol(e.to_string()),
        other => RemoteError::Transport(other.to_string()),
    }
}

struct Job {
    state: JobState,
    solution: Option<WireSolution>,
    error: Option<String>,
}

type JobTable = Arc<Mutex<HashMap<String, Job>>>;

/// In-process sampler service on `127.0.0.1`. Jobs run one at a time on a
/// worker thread; the server shuts down when dropped.
pub struct LoopbackServer {
    addr: SocketAddr,
    server: Arc<tiny_http::Server>,
    listener: Option<JoinHandle<()>>,
    worker: Option<JoinHandle<()>>,
}

impl LoopbackServer {
    pub fn start() -> std::io::Result<Self> {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("loopback server has no IP address"))?;
        let jobs: JobTable = Arc::default();
        let (tx, rx) = channel::<(String, SubmitRequest, Instant)>();

        let worker_jobs = Arc::clone(&jobs);
        let worker = thread::spawn(move || {
            for (id, req, submitted) in rx {
                set_state(&worker_jobs, &id, JobState::Running);
                let outcome = run_job(&req, submitted);
                let mut table = worker_jobs.lock().expect("job table poisoned");
                let job = table.get_mut(&id).expect("job registered before dispatch");
                match outcome {
                    Ok(s) => {
                        job.state = JobState::Done;
                        job.solution = Some(s);
                    }
                    Err(e) => {
                        job.state = JobState::Failed;
                        job.error = Some(e);
                    }
                }
            }
        });

        let srv = Arc::clone(&server);
        let listener = thread::spawn(move || {
            let mut next = 0u64;
            for mut request in srv.incoming_requests() {
                let (code, body) = route(&mut request, &jobs, &tx, &mut next);
                let resp = tiny_http::Response::from_string(body).with_status_code(code).with_header(
                    "Content-Type: application/json".parse::<tiny_http::Header>().expect("static header"),
                );
                let _ = request.respond(resp);
            }
        });
        Ok(Self { addr, server, listener: Some(listener), worker: Some(worker) })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for LoopbackServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.listener.take() {
            let _ = h.join();
        }
        // the listener owned the sender; the worker exits once it drains
        if let Some(h) = self.worker.take() {
            let _ = h.join();
        }
    }
}

fn set_state(jobs: &JobTable, id: &str, state: JobState) {
    if let Some(j) = jobs.lock().expect("job table poisoned").get_mut(id) {
        j.state = state;
    }
}

fn error_body(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn route(
    request: &mut tiny_http::Request,
    jobs: &JobTable,
    tx: &Sender<(String, SubmitRequest, Instant)>,
    next: &mut u64,
) -> (u16, String) {
    let url = request.url().to_string();
    match (request.method(), url.as_str()) {
        (tiny_http::Method::Post, "/v1/jobs") => {
            let mut body = String::new();
            if let Err(e) = request.as_reader().read_to_string(&mut body) {
                return (400, error_body(&e.to_string()));
            }
            let req: SubmitRequest = match serde_json::from_str(&body) {
                Ok(r) => r,
                Err(e) => return (400, error_body(&e.to_string())),
            };
            let id = format!("job-{next}");
            *next += 1;
            jobs.lock()
                .expect("job table poisoned")
                .insert(id.clone(), Job { state: JobState::Queued, solution: None, error: None });
            if tx.send((id.clone(), req, Instant::now())).is_err() {
                return (503, error_body("worker stopped"));
            }
            (200, serde_json::to_string(&SubmitResponse { job_id: id }).expect("serializable"))
        }
        (tiny_http::Method::Get, path) if path.starts_with("/v1/jobs/") => {
            let id = &path["/v1/jobs/".len()..];
            let table = jobs.lock().expect("job table poisoned");
            match table.get(id) {
                Some(j) => {
                    let resp = JobResponse { status: j.state, solution: j.solution.clone(), error: j.error.clone() };
                    (200, serde_json::to_string(&resp).expect("serializable"))
                }
                None => (404, error_body(&format!("unknown job {id}"))),
            }
        }
        _ => (404, error_body("no such route")),
    }
}

fn run_job(req: &SubmitRequest, submitted: Instant) -> Result<WireSolution, String> {
    let model = req.model.to_model()?;
    let qubo = to_qubo(&model, &PenaltyConfig::for_model(&model)).map_err(|e| e.to_string())?;
    let mut schedule = AnnealSchedule::default_for(&qubo, req.params.seed);
    if let Some(r) = req.params.reads {
        schedule.reads = r;
    }
    if let Some(s) = req.params.sweeps {
        schedule.sweeps = s;
    }
    let sol = solve_sa(&qubo, &schedule).map_err(|e| e.to_string())?;
    Ok(WireSolution {
        assignments: sol.allocation,
        objective: sol.objective,
        wall_time_s: submitted.elapsed().as_secs_f64(),
        status: sol.status,
    })
}
