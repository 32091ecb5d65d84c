//! Scenario configuration: one JSON document per run. Complex numbers are
//! `[re, im]` pairs, matrices are row-major nested arrays.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::Deserialize;

use gausspace::linalg::{cr, CMatrix, CVector};
use gausspace::schema::{matrix_from_schema, vector_from_schema, ComplexPair};
use gausspace::{factory, GaussianParams, LindbladSpec, LossOperator, WeightedEnsemble};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub modes: usize,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub initial_state: Option<InitialStateConfig>,
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub engine: Option<EngineChoice>,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Maximum |gaussian - oracle| accepted by `engine = both`.
    #[serde(default = "default_comparison_tolerance")]
    pub comparison_tolerance: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Start of the imaginary-time characteristic (thermal_equilibrium).
    #[serde(default = "default_tau0")]
    pub tau0: f64,
}

fn default_comparison_tolerance() -> f64 {
    1e-4
}

fn default_tau0() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Bogoliubov,
    LossyTrap,
    ParametricAmplifier,
    ThermalEquilibrium,
    CustomLindblad,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Bogoliubov => "bogoliubov",
            Scenario::LossyTrap => "lossy_trap",
            Scenario::ParametricAmplifier => "parametric_amplifier",
            Scenario::ThermalEquilibrium => "thermal_equilibrium",
            Scenario::CustomLindblad => "custom_lindblad",
        }
    }

    pub fn default_oracle_nmax(&self) -> usize {
        match self {
            Scenario::Bogoliubov => 60,
            Scenario::LossyTrap => 20,
            Scenario::ParametricAmplifier => 40,
            Scenario::ThermalEquilibrium => 200,
            Scenario::CustomLindblad => 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum EngineChoice {
    ClosedForm,
    Ode,
    Oracle,
    Both,
}

impl EngineChoice {
    pub fn name(&self) -> &'static str {
        match self {
            EngineChoice::ClosedForm => "closed_form",
            EngineChoice::Ode => "ode",
            EngineChoice::Oracle => "oracle",
            EngineChoice::Both => "both",
        }
    }
}

/// Scalar-or-matrix coefficient; scalars broadcast to `value * I`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex(ComplexPair),
    Matrix(Vec<Vec<ComplexPair>>),
}

impl Coefficient {
    pub fn into_matrix(&self, modes: usize, field: &str) -> Result<CMatrix, CliError> {
        match self {
            Coefficient::Real(x) => Ok(CMatrix::identity(modes, modes) * cr(*x)),
            Coefficient::Complex(p) => {
                Ok(CMatrix::identity(modes, modes) * Complex64::from(*p))
            }
            Coefficient::Matrix(rows) => {
                let m = matrix_from_schema(rows)
                    .map_err(|e| CliError::Config(format!("{field}: {e}")))?;
                if m.nrows() != modes || m.ncols() != modes {
                    return Err(CliError::Config(format!(
                        "{field}: expected a {modes}x{modes} matrix, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(m)
            }
        }
    }

    pub fn into_scalar(&self, field: &str) -> Result<Complex64, CliError> {
        match self {
            Coefficient::Real(x) => Ok(cr(*x)),
            Coefficient::Complex(p) => Ok(Complex64::from(*p)),
            Coefficient::Matrix(_) => Err(CliError::Config(format!(
                "{field}: expected a scalar, got a matrix"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    /// Down-conversion strength (bogoliubov, parametric_amplifier).
    #[serde(default)]
    pub chi: Option<Coefficient>,
    /// Loss rates (lossy_trap, parametric_amplifier).
    #[serde(default)]
    pub gamma: Option<Coefficient>,
    /// Mode coupling/frequency matrix (lossy_trap).
    #[serde(default)]
    pub omega: Option<Coefficient>,
    /// Diagonal mode frequencies (thermal_equilibrium).
    #[serde(default)]
    pub omega_modes: Option<Vec<f64>>,
    /// Raw Lindblad data (custom_lindblad).
    #[serde(default)]
    pub h1: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default)]
    pub h2: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default)]
    pub loss_ops: Option<Vec<LossOpConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossOpConfig {
    pub o1: Vec<ComplexPair>,
    #[serde(default)]
    pub o2: Option<Vec<ComplexPair>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        if self.samples == 0 {
            return Err(CliError::Config(
                "time_grid.samples: must be at least 1".into(),
            ));
        }
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err(CliError::Config("time_grid: bounds must be finite".into()));
        }
        if self.samples > 1 && self.end <= self.start {
            return Err(CliError::Config(
                "time_grid: end must exceed start for a strictly increasing grid".into(),
            ));
        }
        if self.samples == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.end - self.start) / (self.samples - 1) as f64;
        Ok((0..self.samples)
            .map(|i| self.start + step * i as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub nmax: Option<usize>,
    #[serde(default = "default_edge_tol")]
    pub edge_tol: f64,
}

fn default_edge_tol() -> f64 {
    1e-8
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            nmax: None,
            edge_tol: default_edge_tol(),
        }
    }
}

/// Initial-state descriptor in the constructor vocabulary.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    pub kind: StateKind,
    #[serde(default)]
    pub alpha: Option<Vec<ComplexPair>>,
    #[serde(default)]
    pub alpha_plus: Option<Vec<ComplexPair>>,
    #[serde(default)]
    pub nbar: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default)]
    pub xi: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default)]
    pub xi_plus: Option<Vec<Vec<ComplexPair>>>,
    /// Ordering parameter for `s_ordered`.
    #[serde(default)]
    pub s: Option<f64>,
    /// Target boson number for `number_ensemble`.
    #[serde(default)]
    pub n0: Option<u32>,
    /// Quadrature radius for `number_ensemble` (default 1).
    #[serde(default)]
    pub r: Option<f64>,
    /// Quadrature point count for `number_ensemble` (default 32).
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Vacuum,
    Coherent,
    Thermal,
    Squeezed,
    SqueezedThermal,
    NumberEnsemble,
    Wigner,
    Q,
    P,
    PlusP,
    SOrdered,
}

/// A single kernel or a finite weighted ensemble of kernels.
#[derive(Debug, Clone)]
pub enum GaussianInitial {
    Single(GaussianParams),
    Ensemble(WeightedEnsemble),
}

impl GaussianInitial {
    pub fn members(&self) -> Vec<&GaussianParams> {
        match self {
            GaussianInitial::Single(g) => vec![g],
            GaussianInitial::Ensemble(e) => e.members().iter().collect(),
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            GaussianInitial::Single(g) => g.modes(),
            GaussianInitial::Ensemble(e) => e.modes(),
        }
    }
}

impl InitialStateConfig {
    fn displacement(&self, modes: usize) -> Result<(CVector, CVector), CliError> {
        let alpha = match &self.alpha {
            Some(v) => {
                if v.len() != modes {
                    return Err(CliError::Config(format!(
                        "initial_state.alpha: expected {modes} entries, got {}",
                        v.len()
                    )));
                }
                vector_from_schema(v)
            }
            None => CVector::zeros(modes),
        };
        let alpha_plus = match &self.alpha_plus {
            Some(v) => {
                if v.len() != modes {
                    return Err(CliError::Config(format!(
                        "initial_state.alpha_plus: expected {modes} entries, got {}",
                        v.len()
                    )));
                }
                vector_from_schema(v)
            }
            None => alpha.conjugate(),
        };
        Ok((alpha, alpha_plus))
    }

    fn matrix_field(
        &self,
        field: &'static str,
        value: &Option<Vec<Vec<ComplexPair>>>,
        modes: usize,
    ) -> Result<Option<CMatrix>, CliError> {
        match value {
            None => Ok(None),
            Some(rows) => {
                let m = matrix_from_schema(rows)
                    .map_err(|e| CliError::Config(format!("initial_state.{field}: {e}")))?;
                if m.nrows() != modes || m.ncols() != modes {
                    return Err(CliError::Config(format!(
                        "initial_state.{field}: expected {modes}x{modes}, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(Some(m))
            }
        }
    }

    pub fn build(&self, modes: usize) -> Result<GaussianInitial, CliError> {
        let (alpha, alpha_plus) = self.displacement(modes)?;
        let state = match self.kind {
            StateKind::Vacuum => factory::vacuum(modes),
            StateKind::Coherent => {
                factory::coherent_projector(cr(1.0), alpha, alpha_plus)
                    .map_err(|e| CliError::Config(format!("initial_state: {e}")))?
            }
            StateKind::Thermal => {
                let nbar = self
                    .matrix_field("nbar", &self.nbar, modes)?
                    .ok_or_else(|| {
                        CliError::Config("initial_state.nbar: required for kind=thermal".into())
                    })?;
                let spec = factory::ThermalSpec::from_occupation(nbar)
                    .map_err(|e| CliError::Config(format!("initial_state.nbar: {e}")))?;
                factory::thermal(cr(1.0), &spec)
            }
            StateKind::Squeezed | StateKind::SqueezedThermal => {
                let xi = self.matrix_field("xi", &self.xi, modes)?.ok_or_else(|| {
                    CliError::Config(format!(
                        "initial_state.xi: required for kind={}",
                        if self.kind == StateKind::Squeezed {
                            "squeezed"
                        } else {
                            "squeezed_thermal"
                        }
                    ))
                })?;
                let xi_plus = self
                    .matrix_field("xi_plus", &self.xi_plus, modes)?
                    .unwrap_or_else(|| xi.conjugate());
                let squeeze = factory::SqueezeSpec::new(xi, xi_plus)
                    .map_err(|e| CliError::Config(format!("initial_state.xi: {e}")))?;
                if self.kind == StateKind::Squeezed {
                    factory::squeezed_vacuum(alpha, alpha_plus, &squeeze)
                        .map_err(|e| CliError::Numeric(format!("initial_state: {e}")))?
                } else {
                    let nbar = self
                        .matrix_field("nbar", &self.nbar, modes)?
                        .ok_or_else(|| {
                            CliError::Config(
                                "initial_state.nbar: required for kind=squeezed_thermal".into(),
                            )
                        })?;
                    let spec = factory::ThermalSpec::from_occupation(nbar)
                        .map_err(|e| CliError::Config(format!("initial_state.nbar: {e}")))?;
                    factory::squeezed_thermal(&squeeze, &spec, alpha, alpha_plus)
                        .map_err(|e| CliError::Numeric(format!("initial_state: {e}")))?
                }
            }
            StateKind::NumberEnsemble => {
                if modes != 1 {
                    return Err(CliError::Config(
                        "initial_state: number_ensemble requires modes = 1".into(),
                    ));
                }
                let n0 = self.n0.ok_or_else(|| {
                    CliError::Config("initial_state.n0: required for kind=number_ensemble".into())
                })?;
                let ensemble =
                    factory::number_state_ensemble(n0, self.r.unwrap_or(1.0), self.k.unwrap_or(32))
                        .map_err(|e| CliError::Config(format!("initial_state: {e}")))?;
                return Ok(GaussianInitial::Ensemble(ensemble));
            }
            StateKind::Wigner => classical(factory::ClassicalKind::Wigner, alpha, alpha_plus)?,
            StateKind::Q => classical(factory::ClassicalKind::Q, alpha, alpha_plus)?,
            StateKind::P => classical(factory::ClassicalKind::P, alpha, alpha_plus)?,
            StateKind::PlusP => classical(factory::ClassicalKind::PlusP, alpha, alpha_plus)?,
            StateKind::SOrdered => {
                let s = self.s.ok_or_else(|| {
                    CliError::Config("initial_state.s: required for kind=s_ordered".into())
                })?;
                classical(factory::ClassicalKind::SOrdered(s), alpha, alpha_plus)?
            }
        };
        Ok(GaussianInitial::Single(state))
    }
}

fn classical(
    kind: factory::ClassicalKind,
    alpha: CVector,
    beta: CVector,
) -> Result<GaussianParams, CliError> {
    factory::classical_basis(kind, alpha, beta)
        .map_err(|e| CliError::Config(format!("initial_state: {e}")))
}

impl ScenarioConfig {
    pub fn engine(&self) -> EngineChoice {
        self.engine.unwrap_or(EngineChoice::ClosedForm)
    }

    pub fn oracle_nmax(&self) -> usize {
        self.oracle.nmax.unwrap_or(self.scenario.default_oracle_nmax())
    }

    /// The initial kernel/ensemble; vacuum when unspecified.
    pub fn initial(&self) -> Result<GaussianInitial, CliError> {
        match &self.initial_state {
            Some(cfg) => cfg.build(self.modes),
            None => Ok(GaussianInitial::Single(factory::vacuum(self.modes))),
        }
    }

    /// The Lindblad data of the scenario; `None` for imaginary time.
    pub fn lindblad(&self) -> Result<Option<LindbladSpec>, CliError> {
        let modes = self.modes;
        if modes == 0 {
            return Err(CliError::Config("modes: must be at least 1".into()));
        }
        let spec = match self.scenario {
            Scenario::ThermalEquilibrium => return Ok(None),
            Scenario::Bogoliubov => {
                let chi = self
                    .parameters
                    .chi
                    .as_ref()
                    .ok_or_else(|| CliError::Config("parameters.chi: required".into()))?
                    .into_matrix(modes, "parameters.chi")?;
                LindbladSpec::bogoliubov(&chi)
                    .map_err(|e| CliError::Config(format!("parameters.chi: {e}")))?
            }
            Scenario::LossyTrap => {
                let omega = self
                    .parameters
                    .omega
                    .as_ref()
                    .ok_or_else(|| CliError::Config("parameters.omega: required".into()))?
                    .into_matrix(modes, "parameters.omega")?;
                let gamma = self
                    .parameters
                    .gamma
                    .as_ref()
                    .ok_or_else(|| CliError::Config("parameters.gamma: required".into()))?
                    .into_matrix(modes, "parameters.gamma")?;
                LindbladSpec::lossy_trap(&omega, &gamma)
                    .map_err(|e| CliError::Config(format!("parameters: {e}")))?
            }
            Scenario::ParametricAmplifier => {
                if modes != 1 {
                    return Err(CliError::Config(
                        "modes: parametric_amplifier is single-mode".into(),
                    ));
                }
                let chi = self
                    .parameters
                    .chi
                    .as_ref()
                    .ok_or_else(|| CliError::Config("parameters.chi: required".into()))?
                    .into_scalar("parameters.chi")?;
                let gamma = self
                    .parameters
                    .gamma
                    .as_ref()
                    .ok_or_else(|| CliError::Config("parameters.gamma: required".into()))?
                    .into_scalar("parameters.gamma")?;
                if gamma.im != 0.0 {
                    return Err(CliError::Config("parameters.gamma: must be real".into()));
                }
                LindbladSpec::parametric_amplifier(chi, gamma.re)
                    .map_err(|e| CliError::Config(format!("parameters: {e}")))?
            }
            Scenario::CustomLindblad => {
                let h1 = match &self.parameters.h1 {
                    Some(rows) => matrix_from_schema(rows)
                        .map_err(|e| CliError::Config(format!("parameters.h1: {e}")))?,
                    None => CMatrix::zeros(modes, modes),
                };
                let h2 = match &self.parameters.h2 {
                    Some(rows) => matrix_from_schema(rows)
                        .map_err(|e| CliError::Config(format!("parameters.h2: {e}")))?,
                    None => CMatrix::zeros(modes, modes),
                };
                let mut ops = Vec::new();
                for (idx, op) in self.parameters.loss_ops.iter().flatten().enumerate() {
                    let o1 = vector_from_schema(&op.o1);
                    let o2 = match &op.o2 {
                        Some(v) => vector_from_schema(v),
                        None => CVector::zeros(modes),
                    };
                    if o1.len() != modes || o2.len() != modes {
                        return Err(CliError::Config(format!(
                            "parameters.loss_ops[{idx}]: expected {modes} entries"
                        )));
                    }
                    ops.push(LossOperator { o1, o2 });
                }
                LindbladSpec::new(h1, h2, ops)
                    .map_err(|e| CliError::Config(format!("parameters: {e}")))?
            }
        };
        if spec.modes() != modes {
            return Err(CliError::Config(format!(
                "parameters: coefficients are {}x{} but modes = {modes}",
                spec.modes(),
                spec.modes()
            )));
        }
        Ok(Some(spec))
    }

    /// Diagonal mode frequencies for imaginary-time runs.
    pub fn omega_modes(&self) -> Result<Vec<f64>, CliError> {
        let w = self
            .parameters
            .omega_modes
            .clone()
            .ok_or_else(|| CliError::Config("parameters.omega_modes: required".into()))?;
        if w.len() != self.modes {
            return Err(CliError::Config(format!(
                "parameters.omega_modes: expected {} entries, got {}",
                self.modes,
                w.len()
            )));
        }
        Ok(w)
    }
}
