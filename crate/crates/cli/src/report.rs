//! Run reports as TOML text and per-step CSV.
//!
//! Both writers are byte-stable: sections and keys come out in a fixed order
//! and every float is printed with 17 significant digits. The text form is
//! read back with the `toml` crate.

use crate::error::{CliError, Result};
use crate::format::{f17, f17_list};
use drds_core::drds::Scenario;
use drds_core::noise_sim::{violation_risk, MonteCarloReport, Trajectories};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub tool_version: String,
    pub scenario_digest: String,
    pub controller: String,
    pub mode: String,
    pub noise: String,
    pub samples: usize,
    pub seed: u64,
    pub state_dim: usize,
    pub halfspaces: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSummary>,
    pub timing: Timing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloSummary>,
    #[serde(default)]
    pub steps: Vec<StepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSummary {
    pub status: String,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSummary {
    pub joint_violation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<TerminalSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalSummary {
    pub mean: Vec<f64>,
    pub cov_eigenvalues: Vec<f64>,
    pub distance: f64,
    pub eta: f64,
    pub relative_excess: f64,
    pub contained: bool,
}

/// Moments of the sampled states at one step and the constraints active there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRow {
    pub step: usize,
    pub mean: Vec<f64>,
    /// Decreasing; their square roots are the covariance ellipse semi-axes.
    pub cov_eigenvalues: Vec<f64>,
    #[serde(default)]
    pub constraints: Vec<StepConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConstraint {
    pub halfspace: usize,
    pub risk: f64,
    pub frequency: f64,
    pub cvar: f64,
}

fn sorted_eigenvalues(cov: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

/// Per-step rows; empty with fewer than two samples.
pub fn step_rows(traj: &Trajectories, scenario: &Scenario) -> Result<Vec<StepRow>> {
    if traj.count < 2 {
        return Ok(Vec::new());
    }
    let stats = violation_risk(traj, &scenario.halfspaces)?;
    (0..=traj.horizon)
        .map(|k| {
            let (mean, cov) = traj.moments(k)?;
            let constraints = stats
                .per_constraint
                .iter()
                .filter(|c| c.step == k)
                .map(|c| StepConstraint { halfspace: c.halfspace, risk: c.risk, frequency: c.frequency, cvar: c.cvar })
                .collect();
            Ok(StepRow { step: k, mean: mean.iter().copied().collect(), cov_eigenvalues: sorted_eigenvalues(&cov), constraints })
        })
        .collect()
}

pub fn summarize(mc: &MonteCarloReport) -> MonteCarloSummary {
    MonteCarloSummary {
        joint_violation: mc.violations.joint,
        terminal: mc.terminal.as_ref().map(|t| TerminalSummary {
            mean: t.mean.iter().copied().collect(),
            cov_eigenvalues: sorted_eigenvalues(&t.cov),
            distance: t.distance,
            eta: t.eta,
            relative_excess: t.relative_excess,
            contained: t.contained,
        }),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if c.is_control() => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Diagnostic names become bare TOML keys.
fn bare_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool_version = {}", quote(&self.tool_version));
        let _ = writeln!(s, "scenario_digest = {}", quote(&self.scenario_digest));
        let _ = writeln!(s, "controller = {}", quote(&self.controller));
        let _ = writeln!(s, "mode = {}", quote(&self.mode));
        let _ = writeln!(s, "noise = {}", quote(&self.noise));
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "state_dim = {}", self.state_dim);
        let _ = writeln!(s, "halfspaces = {}", self.halfspaces);
        if let Some(sv) = &self.solver {
            let _ = writeln!(s, "\n[solver]\nstatus = {}", quote(&sv.status));
            let _ = writeln!(s, "\n[solver.diagnostics]");
            for (k, v) in &sv.diagnostics {
                let key = if bare_key(k) { k.clone() } else { quote(k) };
                let _ = writeln!(s, "{key} = {}", f17(*v));
            }
        }
        let _ = writeln!(s, "\n[timing]");
        if let Some(t) = self.timing.solve_seconds {
            let _ = writeln!(s, "solve_seconds = {}", f17(t));
        }
        if let Some(t) = self.timing.simulate_seconds {
            let _ = writeln!(s, "simulate_seconds = {}", f17(t));
        }
        if let Some(mc) = &self.montecarlo {
            let _ = writeln!(s, "\n[montecarlo]\njoint_violation = {}", f17(mc.joint_violation));
            if let Some(t) = &mc.terminal {
                let _ = writeln!(s, "\n[montecarlo.terminal]");
                let _ = writeln!(s, "mean = {}", f17_list(&t.mean));
                let _ = writeln!(s, "cov_eigenvalues = {}", f17_list(&t.cov_eigenvalues));
                let _ = writeln!(s, "distance = {}", f17(t.distance));
                let _ = writeln!(s, "eta = {}", f17(t.eta));
                let _ = writeln!(s, "relative_excess = {}", f17(t.relative_excess));
                let _ = writeln!(s, "contained = {}", t.contained);
            }
        }
        for row in &self.steps {
            let _ = writeln!(s, "\n[[steps]]\nstep = {}", row.step);
            let _ = writeln!(s, "mean = {}", f17_list(&row.mean));
            let _ = writeln!(s, "cov_eigenvalues = {}", f17_list(&row.cov_eigenvalues));
            for c in &row.constraints {
                let _ = writeln!(s, "\n[[steps.constraints]]\nhalfspace = {}", c.halfspace);
                let _ = writeln!(s, "risk = {}\nfrequency = {}\ncvar = {}", f17(c.risk), f17(c.frequency), f17(c.cvar));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse { file: "<report>".into(), msg: e.to_string() })
    }

    /// `step, mean_i, eig_i, cvar_hj, freq_hj`; cells of halfspaces inactive at a step are empty.
    pub fn to_csv(&self) -> String {
        let n = self.state_dim;
        let mut header = vec!["step".to_string()];
        header.extend((0..n).map(|i| format!("mean_{i}")));
        header.extend((0..n).map(|i| format!("eig_{i}")));
        for j in 0..self.halfspaces {
            header.push(format!("cvar_h{j}"));
            header.push(format!("freq_h{j}"));
        }
        let mut s = header.join(",");
        s.push('\n');
        for row in &self.steps {
            let mut cells = vec![row.step.to_string()];
            cells.extend(row.mean.iter().map(|&v| f17(v)));
            cells.extend(row.cov_eigenvalues.iter().map(|&v| f17(v)));
            for j in 0..self.halfspaces {
                match row.constraints.iter().find(|c| c.halfspace == j) {
                    Some(c) => {
                        cells.push(f17(c.cvar));
                        cells.push(f17(c.frequency));
                    }
                    None => cells.extend([String::new(), String::new()]),
                }
            }
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}
