//! Scenario configuration: the JSON schema and its validation into domain
//! objects.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays of them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use collapse_lab::coherence::{qubit_x, qubit_y};
use collapse_lab::protocols::{default_t_grid, validate_t_grid};
use collapse_lab::{
    random, ClassicalSystem, ComplexMatrix, DensityMatrix, Error, Flow, Observable, QubitParams,
    C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub type ComplexPair = [f64; 2];
pub type MatrixSpec = Vec<Vec<ComplexPair>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    CmoProbe,
    TwoMeasurement,
    ClassicalCheck,
    CoherenceAudit,
    QubitSweep,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::CmoProbe => "cmo-probe",
            Self::TwoMeasurement => "two-measurement",
            Self::ClassicalCheck => "classical-check",
            Self::CoherenceAudit => "coherence-audit",
            Self::QubitSweep => "qubit-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Qubit(QubitStateSpec),
    Matrix(MatrixSpec),
}

/// `ρ = [[1-p, γ√(p(1-p))], [γ*√(p(1-p)), p]]`; `theta` and `phi` select the
/// default second observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitStateSpec {
    pub p: f64,
    pub gamma: ComplexPair,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Matrix(MatrixSpec),
    Qubit(Angles),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Parameter axes of a qubit sweep. Missing axes take the default grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_p_axis")]
    pub p: Vec<f64>,
    #[serde(default = "default_gamma_abs_axis")]
    pub gamma_abs: Vec<f64>,
    #[serde(default = "default_gamma_arg_axis")]
    pub gamma_arg: Vec<f64>,
    #[serde(default = "default_theta_axis")]
    pub theta: Vec<f64>,
    #[serde(default = "default_phi_axis")]
    pub phi: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            p: default_p_axis(),
            gamma_abs: default_gamma_abs_axis(),
            gamma_arg: default_gamma_arg_axis(),
            theta: default_theta_axis(),
            phi: default_phi_axis(),
        }
    }
}

fn default_p_axis() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_gamma_abs_axis() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_gamma_arg_axis() -> Vec<f64> {
    vec![0.0, PI / 3.0, PI]
}

fn default_theta_axis() -> Vec<f64> {
    (0..=6).map(|j| j as f64 * PI / 6.0).collect()
}

fn default_phi_axis() -> Vec<f64> {
    (0..=8).map(|k| k as f64 * PI / 4.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassicalSpec {
    /// Drawn from the scenario seed.
    Random {
        size: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_cells: Option<usize>,
    },
    Explicit {
        distribution: Vec<f64>,
        x_labels: Vec<f64>,
        y_labels: Vec<f64>,
        /// `(t, permutation)` breakpoints; empty means the identity flow.
        #[serde(default)]
        flow: Vec<(f64, Vec<usize>)>,
    },
}

fn default_seed() -> u64 {
    42
}

fn default_shots() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    /// Named observables; `x` is measured first, `y` second.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observables: BTreeMap<String, ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    /// Free evolution between the two measurements.
    #[serde(default)]
    pub wait: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Domain objects built from a validated config. Fields a scenario kind does
/// not use are `None`.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub state: Option<DensityMatrix>,
    pub x: Option<Observable>,
    pub y: Option<Observable>,
    pub hamiltonian: Option<ComplexMatrix>,
    pub t_grid: Vec<f64>,
    pub classical: Option<ClassicalSystem>,
    pub sweep: Vec<QubitParams>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Checks everything the scenario kind needs and builds the domain objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let state = self.state.as_ref().map(parse_state).transpose()?;
        let dim = state.as_ref().map(|s| s.dim());
        if let Some(name) = self
            .observables
            .keys()
            .find(|k| !matches!(k.as_str(), "x" | "y"))
        {
            return Err(CliError::validation(
                format!("observables.{name}"),
                "unknown observable name (expected `x` or `y`)",
            ));
        }
        let x = self.observable("x", dim)?;
        let y = self.observable("y", dim)?;
        let hamiltonian = self
            .hamiltonian
            .as_ref()
            .map(|rows| parse_hamiltonian(rows, dim))
            .transpose()?;
        let t_grid = match &self.t_grid {
            Some(grid) => {
                validate_t_grid(grid).map_err(|e| CliError::validation("t_grid", e))?;
                grid.clone()
            }
            None => default_t_grid(),
        };
        if let Some(tol) = self.tolerance {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(CliError::validation(
                    "tolerance",
                    "must be finite and non-negative",
                ));
            }
        }
        if !(self.wait.is_finite() && self.wait >= 0.0) {
            return Err(CliError::validation(
                "wait",
                "must be finite and non-negative",
            ));
        }

        let mut resolved = Resolved {
            state,
            x,
            y,
            hamiltonian,
            t_grid,
            classical: None,
            sweep: Vec::new(),
        };
        match self.kind {
            ScenarioKind::CmoProbe => {
                require(&resolved.state, "state")?;
                require(&resolved.x, "observables.x")?;
                require(&resolved.hamiltonian, "hamiltonian")?;
            }
            ScenarioKind::TwoMeasurement => {
                require(&resolved.state, "state")?;
                require(&resolved.x, "observables.x")?;
                require(&resolved.y, "observables.y")?;
                if self.shots == 0 {
                    return Err(CliError::validation("shots", "must be at least 1"));
                }
                if self.wait > 0.0 {
                    require(&resolved.hamiltonian, "hamiltonian")?;
                }
            }
            ScenarioKind::CoherenceAudit => {
                require(&resolved.state, "state")?;
                require(&resolved.x, "observables.x")?;
                require(&resolved.y, "observables.y")?;
            }
            ScenarioKind::ClassicalCheck => {
                let spec = self.classical.as_ref().ok_or_else(|| {
                    CliError::validation("classical", "required for classical-check")
                })?;
                resolved.classical = Some(build_classical(spec, self.seed)?);
                if let Some(grid) = &self.t_grid {
                    resolved.t_grid = grid.clone();
                }
            }
            ScenarioKind::QubitSweep => {
                resolved.sweep = build_sweep(&self.sweep.clone().unwrap_or_default())?;
            }
        }
        Ok(resolved)
    }

    /// Named observable, falling back to `x̂` and `ŷ(θ, φ)` for qubit states.
    fn observable(&self, name: &str, dim: Option<usize>) -> Result<Option<Observable>> {
        let field = format!("observables.{name}");
        let observable = match self.observables.get(name) {
            Some(ObservableSpec::Matrix(rows)) => {
                let m = parse_matrix(rows, &field)?;
                Some(Observable::new(m).map_err(|e| CliError::validation(&field, e))?)
            }
            Some(ObservableSpec::Qubit(a)) => {
                check_angles(a.theta, a.phi, &field)?;
                Some(qubit_y(a.theta, a.phi))
            }
            None => match (&self.state, name) {
                (Some(StateSpec::Qubit(_)), "x") => Some(qubit_x()),
                (Some(StateSpec::Qubit(q)), "y") => Some(qubit_y(q.theta, q.phi)),
                _ => None,
            },
        };
        if let (Some(o), Some(d)) = (&observable, dim) {
            if o.dim() != d {
                return Err(CliError::validation(
                    field,
                    format!(
                        "dimension {} does not match the state dimension {d}",
                        o.dim()
                    ),
                ));
            }
        }
        Ok(observable)
    }
}

fn require<T>(value: &Option<T>, field: &str) -> Result<()> {
    match value {
        Some(_) => Ok(()),
        None => Err(CliError::validation(
            field,
            "required for this scenario kind",
        )),
    }
}

fn check_angles(theta: f64, phi: f64, field: &str) -> Result<()> {
    if theta.is_finite() && phi.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(field, "angles must be finite"))
    }
}

pub fn parse_matrix(rows: &MatrixSpec, field: &str) -> Result<ComplexMatrix> {
    let rows = rows
        .iter()
        .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(rows).map_err(|e| CliError::validation(field, e))
}

fn parse_state(spec: &StateSpec) -> Result<DensityMatrix> {
    let built = match spec {
        StateSpec::Qubit(q) => {
            QubitParams::new(q.p, C64::new(q.gamma[0], q.gamma[1]), q.theta, q.phi)
                .and_then(|params| params.state())
        }
        StateSpec::Matrix(rows) => DensityMatrix::new(parse_matrix(rows, "state")?),
    };
    built.map_err(|e| CliError::validation("state", e))
}

fn parse_hamiltonian(rows: &MatrixSpec, dim: Option<usize>) -> Result<ComplexMatrix> {
    let h = parse_matrix(rows, "hamiltonian")?;
    if !h.is_hermitian() {
        return Err(CliError::validation(
            "hamiltonian",
            Error::NotHermitian {
                residual: h.hermiticity_residual(),
            },
        ));
    }
    if let Some(d) = dim {
        h.check_dim(d)
            .map_err(|e| CliError::validation("hamiltonian", e))?;
    }
    Ok(h)
}

fn build_classical(spec: &ClassicalSpec, seed: u64) -> Result<ClassicalSystem> {
    let built = match spec {
        ClassicalSpec::Random { size, max_cells } => {
            if *size == 0 {
                return Err(CliError::validation(
                    "classical.random.size",
                    "must be at least 1",
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            return Ok(random::classical_system(
                &mut rng,
                *size,
                max_cells.unwrap_or(*size),
            ));
        }
        ClassicalSpec::Explicit {
            distribution,
            x_labels,
            y_labels,
            flow,
        } => Flow::piecewise(flow.clone()).and_then(|flow| {
            ClassicalSystem::new(
                distribution.clone(),
                x_labels.clone(),
                y_labels.clone(),
                flow,
            )
        }),
    };
    built.map_err(|e| CliError::validation("classical", e))
}

fn build_sweep(spec: &SweepSpec) -> Result<Vec<QubitParams>> {
    let mut points = Vec::new();
    for &p in &spec.p {
        for &modulus in &spec.gamma_abs {
            for &arg in &spec.gamma_arg {
                for &theta in &spec.theta {
                    for &phi in &spec.phi {
                        let params = QubitParams::new(p, C64::from_polar(modulus, arg), theta, phi)
                            .map_err(|e| CliError::validation("sweep", e))?;
                        points.push(params);
                    }
                }
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::validation(
            "sweep",
            "every axis needs at least one value",
        ));
    }
    Ok(points)
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let config = ScenarioConfig::from_json(&text, path)?;
    config.resolve()?;
    Ok(config)
}
