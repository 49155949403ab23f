//! TOML scenario files.
//!
//! A file is parsed into [`ScenarioFile`], then resolved: matrix shorthands
//! and data files are expanded, every field is validated with its path, and
//! the result is a core [`Scenario`] plus the run settings. The resolved file,
//! with all matrices inline, is the canonical form that gets hashed.

use crate::error::{CliError, Result};
use drds_conic::Settings;
use drds_core::ambiguity::PushforwardMode;
use drds_core::drds::{CostWeights, Halfspace, Scenario, TerminalTarget};
use drds_core::linalg::{block_diag, check_pd, check_psd};
use drds_core::noise_sim::{dryden_covariance, DrydenChannel, DrydenParams, NoiseKind, Quadrature};
use drds_core::system::LtiModel;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// A matrix written inline, as a scaled identity or diagonal, or as a data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MatrixSpec {
    Rows(Vec<Vec<f64>>),
    Identity { identity: f64 },
    Diag { diag: Vec<f64> },
    /// Whitespace or comma separated rows; relative paths start at the scenario's directory.
    File { file: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Steps {
    List(Vec<usize>),
    /// Inclusive on both ends.
    Range { from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub initial_state: Vec<f64>,
    pub model: ModelSection,
    pub cost: CostSection,
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintSection>,
    pub terminal: TerminalSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub montecarlo: MonteCarloSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<MatrixSpec>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixSpec>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d_matrix: Option<MatrixSpec>,
    #[serde(rename = "A_steps", default, skip_serializing_if = "Option::is_none")]
    pub a_steps: Option<Vec<MatrixSpec>>,
    #[serde(rename = "B_steps", default, skip_serializing_if = "Option::is_none")]
    pub b_steps: Option<Vec<MatrixSpec>>,
    #[serde(rename = "D_steps", default, skip_serializing_if = "Option::is_none")]
    pub d_steps: Option<Vec<MatrixSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub beta: f64,
    #[serde(rename = "Q")]
    pub q: MatrixSpec,
    #[serde(rename = "R")]
    pub r: MatrixSpec,
    /// Weights switched on from a given step to the end of the horizon.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<CostStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostStage {
    pub from: usize,
    #[serde(rename = "Q")]
    pub q: MatrixSpec,
    #[serde(rename = "R")]
    pub r: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Degrees of freedom of the student-t regime.
    #[serde(default = "default_dof")]
    pub dof: f64,
    /// Per-step `d x d` covariance of i.i.d. steps, or the full `Nd x Nd` matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_w: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dryden: Option<DrydenSection>,
    /// Covariance of the `custom` regime, sized like `sigma_w`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_cov: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrydenSection {
    #[serde(rename = "V0")]
    pub mean_wind: f64,
    pub z: f64,
    pub b: f64,
    pub channels: Vec<String>,
    #[serde(default)]
    pub scale_angular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub alpha: Vec<f64>,
    pub offset: f64,
    pub gamma: f64,
    pub steps: Steps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalSection {
    pub mu_f: Vec<f64>,
    #[serde(rename = "Sigma_f")]
    pub sigma_f: MatrixSpec,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub mode: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = Settings::default();
        Self { tol: s.feas_tol, max_iter: s.max_iter, mode: PushforwardMode::default().name().into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(rename = "T")]
    pub samples: usize,
    pub noise_kind: String,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { samples: 1000, noise_kind: "nominal".into() }
    }
}

fn default_dof() -> f64 {
    3.0
}

/// Everything a run needs besides the scenario itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub settings: Settings,
    pub mode: PushforwardMode,
    pub samples: usize,
    pub noise_kind: String,
    pub seed: u64,
    pub dof: f64,
    pub custom_cov: Option<DMatrix<f64>>,
}

impl RunConfig {
    /// Disturbance regime by name, as accepted by `--noise`.
    pub fn noise(&self, name: &str, scenario: &Scenario) -> Result<NoiseKind> {
        match name {
            "nominal" => Ok(NoiseKind::Nominal),
            "maximal" => Ok(NoiseKind::MaximalInBall { radius: scenario.epsilon() }),
            "student-t" => Ok(NoiseKind::StudentT { dof: self.dof }),
            "custom" => match &self.custom_cov {
                Some(c) => Ok(NoiseKind::Custom(c.clone())),
                None => Err(CliError::invalid("noise.custom_cov", "the custom regime needs a covariance")),
            },
            other => Err(CliError::invalid(
                "noise",
                format!("unknown disturbance regime {other:?}; expected nominal, maximal, student-t or custom"),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub run: RunConfig,
    /// The file with every matrix inline.
    pub canonical: ScenarioFile,
}

impl LoadedScenario {
    pub fn canonical_text(&self) -> Result<String> {
        write_scenario(&self.canonical)
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> Result<String> {
        let hash = Sha256::digest(self.canonical_text()?.as_bytes());
        Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
    }
}

pub fn write_scenario(file: &ScenarioFile) -> Result<String> {
    toml::to_string(file).map_err(|e| CliError::Parse { file: "<scenario>".into(), msg: e.to_string() })
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base).map_err(|e| match e {
        CliError::Parse { msg, .. } => CliError::Parse { file: path.display().to_string(), msg },
        other => other,
    })
}

/// Parses and resolves; data files are looked up relative to `base`.
pub fn parse_scenario(text: &str, base: &Path) -> Result<LoadedScenario> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| CliError::Parse { file: "<scenario>".into(), msg: e.to_string() })?;
    resolve(file, base)
}

fn read_matrix_file(path: &Path) -> std::result::Result<Vec<Vec<f64>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        rows.push(row.map_err(|e| format!("{} line {}: {e}", path.display(), i + 1))?);
    }
    Ok(rows)
}

struct Resolver<'a> {
    base: &'a Path,
}

impl Resolver<'_> {
    /// Expands `spec` to a `rows x cols` matrix and rewrites it inline.
    fn matrix(&self, spec: &mut MatrixSpec, rows: usize, cols: usize, path: &str) -> Result<DMatrix<f64>> {
        let data = match spec {
            MatrixSpec::Rows(r) => r.clone(),
            MatrixSpec::File { file } => {
                let full: PathBuf = self.base.join(file.as_str());
                read_matrix_file(&full).map_err(|e| CliError::invalid(path, e))?
            }
            MatrixSpec::Identity { identity } => {
                if rows != cols {
                    return Err(CliError::invalid(path, format!("identity shorthand needs a square matrix, this one is {rows}x{cols}")));
                }
                let s = *identity;
                (0..rows).map(|i| (0..cols).map(|j| if i == j { s } else { 0.0 }).collect()).collect()
            }
            MatrixSpec::Diag { diag } => {
                if rows != cols || diag.len() != rows {
                    return Err(CliError::invalid(path, format!("diagonal has {} entries, expected {rows}x{cols}", diag.len())));
                }
                (0..rows).map(|i| (0..cols).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect()
            }
        };
        if data.len() != rows || data.iter().any(|r| r.len() != cols) {
            let got = data.first().map_or(0, Vec::len);
            return Err(CliError::invalid(path, format!("expected {rows}x{cols}, got {}x{got}", data.len())));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::invalid(path, "entries must be finite"));
        }
        *spec = MatrixSpec::Rows(data.clone());
        Ok(DMatrix::from_fn(rows, cols, |i, j| data[i][j]))
    }

    fn per_step(
        &self,
        single: &mut Option<MatrixSpec>,
        steps: &mut Option<Vec<MatrixSpec>>,
        name: &str,
        rows: usize,
        cols: usize,
        horizon: usize,
    ) -> Result<Vec<DMatrix<f64>>> {
        match (single.as_mut(), steps.as_mut()) {
            (Some(spec), None) => {
                let m = self.matrix(spec, rows, cols, &format!("model.{name}"))?;
                Ok(vec![m; horizon])
            }
            (None, Some(list)) => {
                if list.len() != horizon {
                    return Err(CliError::invalid(format!("model.{name}_steps"), format!("{} matrices for horizon {horizon}", list.len())));
                }
                list.iter_mut()
                    .enumerate()
                    .map(|(k, s)| self.matrix(s, rows, cols, &format!("model.{name}_steps[{k}]")))
                    .collect()
            }
            _ => Err(CliError::invalid(format!("model.{name}"), format!("give exactly one of {name} and {name}_steps"))),
        }
    }

    fn stacked_cov(&self, spec: &mut MatrixSpec, d: usize, horizon: usize, path: &str) -> Result<DMatrix<f64>> {
        let nd = d * horizon;
        let size = match spec {
            MatrixSpec::Rows(r) => r.len(),
            MatrixSpec::Diag { diag } => diag.len(),
            MatrixSpec::File { file } => read_matrix_file(&self.base.join(file.as_str())).map_err(|e| CliError::invalid(path, e))?.len(),
            MatrixSpec::Identity { .. } => d,
        };
        let m = if size == nd { self.matrix(spec, nd, nd, path)? } else { self.matrix(spec, d, d, path)? };
        let full = if m.nrows() == nd { m } else { block_diag(&vec![m; horizon]) };
        check_pd(&full, "Sigma_w").map_err(|e| CliError::invalid(path, e.to_string()))?;
        Ok(full)
    }
}

fn resolve(mut file: ScenarioFile, base: &Path) -> Result<LoadedScenario> {
    let r = Resolver { base };
    let md = &mut file.model;
    let (n, m, d, nh) = (md.n, md.m, md.d, md.horizon);
    for (name, v) in [("n", n), ("m", m), ("d", d), ("N", nh)] {
        if v == 0 {
            return Err(CliError::invalid(format!("model.{name}"), "must be positive"));
        }
    }
    if let Some(dt) = md.dt {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CliError::invalid("model.dt", format!("must be positive, got {dt}")));
        }
    }
    let a = r.per_step(&mut md.a, &mut md.a_steps, "A", n, n, nh)?;
    let b = r.per_step(&mut md.b, &mut md.b_steps, "B", n, m, nh)?;
    let dm = r.per_step(&mut md.d_matrix, &mut md.d_steps, "D", n, d, nh)?;
    let model = LtiModel::time_varying(a, b, dm).map_err(|e| CliError::invalid("model", e.to_string()))?;

    if file.initial_state.len() != n {
        return Err(CliError::invalid("initial_state", format!("{} entries, expected {n}", file.initial_state.len())));
    }
    if file.initial_state.iter().any(|v| !v.is_finite()) {
        return Err(CliError::invalid("initial_state", "entries must be finite"));
    }
    let x0 = DVector::from_column_slice(&file.initial_state);

    let cost = &mut file.cost;
    let mut q = vec![r.matrix(&mut cost.q, n, n, "cost.Q")?; nh];
    let mut rw = vec![r.matrix(&mut cost.r, m, m, "cost.R")?; nh];
    check_psd(&q[0], "Q", 1e-10).map_err(|e| CliError::invalid("cost.Q", e.to_string()))?;
    check_pd(&rw[0], "R").map_err(|e| CliError::invalid("cost.R", e.to_string()))?;
    let mut last = 0;
    for (i, stage) in cost.schedule.iter_mut().enumerate() {
        let path = format!("cost.schedule[{i}]");
        if stage.from >= nh || stage.from < last {
            return Err(CliError::invalid(format!("{path}.from"), format!("must increase and stay below the horizon {nh}")));
        }
        last = stage.from;
        let qs = r.matrix(&mut stage.q, n, n, &format!("{path}.Q"))?;
        let rs = r.matrix(&mut stage.r, m, m, &format!("{path}.R"))?;
        check_psd(&qs, "Q", 1e-10).map_err(|e| CliError::invalid(format!("{path}.Q"), e.to_string()))?;
        check_pd(&rs, "R").map_err(|e| CliError::invalid(format!("{path}.R"), e.to_string()))?;
        for k in stage.from..nh {
            q[k] = qs.clone();
            rw[k] = rs.clone();
        }
    }
    let weights = CostWeights::new(q, rw, cost.beta).map_err(|e| CliError::invalid("cost.beta", e.to_string()))?;

    let noise = &mut file.noise;
    if !(noise.epsilon >= 0.0) || !noise.epsilon.is_finite() {
        return Err(CliError::invalid("noise.epsilon", format!("must be finite and nonnegative, got {}", noise.epsilon)));
    }
    if !(noise.dof > 2.0) {
        return Err(CliError::invalid("noise.dof", format!("must exceed 2 for a finite covariance, got {}", noise.dof)));
    }
    let sigma_w = match (noise.sigma_w.as_mut(), noise.dryden.as_ref()) {
        (Some(spec), None) => r.stacked_cov(spec, d, nh, "noise.sigma_w")?,
        (None, Some(dr)) => {
            let dt = md.dt.ok_or_else(|| CliError::invalid("model.dt", "the Dryden model needs the sample period"))?;
            let channels = dr
                .channels
                .iter()
                .enumerate()
                .map(|(i, c)| DrydenChannel::from_name(c).map_err(|e| CliError::invalid(format!("noise.dryden.channels[{i}]"), e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if channels.len() != d {
                return Err(CliError::invalid("noise.dryden.channels", format!("{} channels for d = {d}", channels.len())));
            }
            let mut p = DrydenParams::new(dr.mean_wind, dr.z, dr.b, dt, channels)
                .map_err(|e| CliError::invalid("noise.dryden", e.to_string()))?;
            p.scale_angular = dr.scale_angular;
            let s = dryden_covariance(&p, nh, Quadrature::default())?;
            check_pd(&s, "Sigma_w").map_err(|e| CliError::invalid("noise.dryden", e.to_string()))?;
            s
        }
        _ => return Err(CliError::invalid("noise", "give exactly one of sigma_w and dryden")),
    };
    let custom_cov = match noise.custom_cov.as_mut() {
        Some(spec) => Some(r.stacked_cov(spec, d, nh, "noise.custom_cov")?),
        None => None,
    };

    let mut halfspaces = Vec::new();
    for (i, c) in file.constraints.iter_mut().enumerate() {
        let path = format!("constraints[{i}]");
        if c.alpha.len() != n {
            return Err(CliError::invalid(format!("{path}.alpha"), format!("{} entries, expected {n}", c.alpha.len())));
        }
        let steps: Vec<usize> = match &c.steps {
            Steps::List(s) => s.clone(),
            Steps::Range { from, to } => (*from..=*to).collect(),
        };
        if steps.is_empty() {
            return Err(CliError::invalid(format!("{path}.steps"), "no steps"));
        }
        if let Some(k) = steps.iter().find(|&&k| k > nh) {
            return Err(CliError::invalid(format!("{path}.steps"), format!("step {k} is beyond the horizon {nh}")));
        }
        let h = Halfspace::new(DVector::from_column_slice(&c.alpha), c.offset, c.gamma, steps.clone()).map_err(|e| match e {
            drds_core::Error::Parameter { name, msg } => CliError::invalid(format!("{path}.{name}"), msg),
            other => CliError::invalid(path.clone(), other.to_string()),
        })?;
        c.steps = Steps::List(h.steps.clone());
        halfspaces.push(h);
    }

    let t = &mut file.terminal;
    if t.mu_f.len() != n {
        return Err(CliError::invalid("terminal.mu_f", format!("{} entries, expected {n}", t.mu_f.len())));
    }
    let sigma_f = r.matrix(&mut t.sigma_f, n, n, "terminal.Sigma_f")?;
    check_pd(&sigma_f, "Sigma_f").map_err(|e| CliError::invalid("terminal.Sigma_f", e.to_string()))?;
    if !(t.delta >= 0.0) || !t.delta.is_finite() {
        return Err(CliError::invalid("terminal.delta", format!("must be finite and nonnegative, got {}", t.delta)));
    }
    let terminal = TerminalTarget { mean: DVector::from_column_slice(&t.mu_f), cov: sigma_f, radius: t.delta };

    let scenario = Scenario::new(model, x0, weights, halfspaces, sigma_w, noise.epsilon, terminal)
        .map_err(|e| CliError::invalid("scenario", e.to_string()))?;

    let sv = &file.solver;
    if !(sv.tol > 0.0 && sv.tol < 1.0) {
        return Err(CliError::invalid("solver.tol", format!("must lie in (0, 1), got {}", sv.tol)));
    }
    if sv.max_iter == 0 {
        return Err(CliError::invalid("solver.max_iter", "must be positive"));
    }
    let mode = PushforwardMode::from_name(&sv.mode)
        .ok_or_else(|| CliError::invalid("solver.mode", format!("expected paper or opnorm, got {:?}", sv.mode)))?;
    let settings = Settings { feas_tol: sv.tol, gap_tol: sv.tol, max_iter: sv.max_iter, verbose: false };
    let run = RunConfig {
        settings,
        mode,
        samples: file.montecarlo.samples,
        noise_kind: file.montecarlo.noise_kind.clone(),
        seed: noise.seed,
        dof: noise.dof,
        custom_cov,
    };
    run.noise(&run.noise_kind, &scenario).map_err(|e| match e {
        CliError::Invalid { msg, .. } => CliError::invalid("montecarlo.noise_kind", msg),
        other => other,
    })?;
    Ok(LoadedScenario { scenario, run, canonical: file })
}
