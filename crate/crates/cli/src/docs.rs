use std::path::Path;

use anyhow::{bail, Context, Result};
use ranslice::model::Allocation;
use ranslice::net::Scenario;
use ranslice::solve::Status;
use ranslice::verify::VerificationReport;
use serde::{Deserialize, Serialize};

pub const SOLUTION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub version: u32,
    pub solver: String,
    pub status: Status,
    /// Verdict of the embedded report.
    pub feasible: bool,
    pub objective_bps: f64,
    pub wall_ms: f64,
    pub seed: u64,
    pub assignment: Allocation,
    pub report: VerificationReport,
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing scenario {}", path.display()))
}

pub fn read_solution(path: &Path) -> Result<SolutionDocument> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: SolutionDocument =
        serde_json::from_str(&text).with_context(|| format!("parsing solution {}", path.display()))?;
    if doc.version != SOLUTION_VERSION {
        bail!("unsupported solution document version {}", doc.version);
    }
    Ok(doc)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}
