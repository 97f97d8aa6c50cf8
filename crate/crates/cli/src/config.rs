use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Deserialize;

use resqec::hilbert::{parse_bits, PureState, TensorSpace};
use resqec::integrator::{liouvillian_gap, GapOptions, Method, Observable, PropagationConfig, TrajectoryConfig};
use resqec::models::{self, LindbladModel, Params, Scheme};

use crate::CliError;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
pub enum SchemeName {
    #[serde(rename = "effective3q")]
    Effective3q,
    #[serde(rename = "tierB3q")]
    TierB3q,
    #[serde(rename = "tierC3q")]
    TierC3q,
    #[serde(rename = "singleCavity3q")]
    SingleCavity3q,
    #[serde(rename = "starEffective")]
    StarEffective,
    #[serde(rename = "starMultiplexed")]
    StarMultiplexed,
    #[serde(rename = "unprotectedQubit")]
    UnprotectedQubit,
}

impl SchemeName {
    pub fn scheme(self) -> Scheme {
        match self {
            Self::Effective3q => Scheme::Effective3q,
            Self::TierB3q => Scheme::TierB3q,
            Self::TierC3q => Scheme::TierC3q,
            Self::SingleCavity3q => Scheme::SingleCavity3q,
            Self::StarEffective => Scheme::StarEffective,
            Self::StarMultiplexed => Scheme::StarMultiplexed,
            Self::UnprotectedQubit => Scheme::UnprotectedQubit,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub omega_p: Option<f64>,
    pub chi: Option<f64>,
    pub j_circ: Option<f64>,
    pub gamma_c_central: Option<f64>,
    pub gamma_c_outer: Option<f64>,
    pub switch_period: Option<f64>,
    pub cavity_dim: Option<usize>,
}

impl ParamsSection {
    pub fn to_params(&self) -> Params {
        let d = Params::default();
        Params {
            gamma: self.gamma.unwrap_or(d.gamma),
            kappa: self.kappa.unwrap_or(d.kappa),
            omega_p: self.omega_p.unwrap_or(d.omega_p),
            chi: self.chi,
            j_circ: self.j_circ,
            gamma_c_central: self.gamma_c_central,
            gamma_c_outer: self.gamma_c_outer,
            switch_period: self.switch_period,
            cavity_dim: self.cavity_dim.unwrap_or(d.cavity_dim),
        }
    }
}

/// Names accepted by `sweep --param`.
pub const SWEEP_PARAMS: &[&str] =
    &["gamma", "kappa", "omega_p", "chi", "j_circ", "gamma_c_central", "gamma_c_outer", "switch_period"];

pub fn set_param(p: &mut Params, name: &str, value: f64) -> Result<(), CliError> {
    match name {
        "gamma" => p.gamma = value,
        "kappa" => p.kappa = value,
        "omega_p" => p.omega_p = value,
        "chi" => p.chi = Some(value),
        "j_circ" => p.j_circ = Some(value),
        "gamma_c_central" => p.gamma_c_central = Some(value),
        "gamma_c_outer" => p.gamma_c_outer = Some(value),
        "switch_period" => p.switch_period = Some(value),
        other => {
            return Err(CliError::Config(format!(
                "unknown sweep parameter `{other}` (expected one of {})",
                SWEEP_PARAMS.join(", ")
            )))
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `(|0…0⟩ − |1…1⟩)/√2`; `|0⟩` for the unprotected qubit.
    #[default]
    Psi0,
    Codeword0,
    Codeword1,
    /// One flipped qubit, 1-based index in factor order.
    SingleFlip { qubit: usize },
    Pattern { bits: String },
    Superposition { a: String, b: String, c0: [f64; 2], c1: [f64; 2] },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Adaptive,
    Rk4,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub t_final: f64,
    pub n_samples: Option<usize>,
    pub sample_times: Option<Vec<f64>>,
    #[serde(default)]
    pub method: MethodName,
    pub step: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_step: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    pub jump_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GapSection {
    pub n_eigs: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub block_size: Option<usize>,
    pub krylov_dim: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasinsSection {
    pub k_max: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: Option<String>,
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: SchemeName,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub initial_state: InitialState,
    pub propagation: Option<PropagationSection>,
    pub trajectories: Option<TrajectorySection>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub gap: GapSection,
    #[serde(default)]
    pub basins: BasinsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub compare: CompareSection,
}

fn default_outputs() -> Vec<String> {
    vec!["fidelity".into()]
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn params(&self) -> Params {
        self.params.to_params()
    }

    pub fn propagation(&self) -> Result<PropagationConfig, CliError> {
        let p = self
            .propagation
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [propagation] section".into()))?;
        let mut cfg = match (&p.sample_times, p.n_samples) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either propagation.sample_times or n_samples, not both".into()))
            }
            (Some(times), None) => {
                let mut c = PropagationConfig::uniform(p.t_final, 2);
                c.sample_times = times.clone();
                c
            }
            (None, n) => PropagationConfig::uniform(p.t_final, n.unwrap_or(101)),
        };
        if let Some(a) = p.abs_tol {
            cfg.abs_tol = a;
        }
        if let Some(r) = p.rel_tol {
            cfg.rel_tol = r;
        }
        if let Some(m) = p.max_step {
            cfg.max_step = m;
        }
        cfg.method = match p.method {
            MethodName::Adaptive => Method::Adaptive,
            MethodName::Rk4 => Method::Rk4 {
                step: p.step.ok_or_else(|| CliError::Config("propagation.method = \"rk4\" needs `step`".into()))?,
            },
        };
        cfg.validate().map_err(|e| CliError::Config(format!("[propagation]: {e}")))?;
        Ok(cfg)
    }

    pub fn trajectory_config(&self, seed_override: Option<u64>) -> Option<TrajectoryConfig> {
        self.trajectories.as_ref().map(|t| {
            let mut c = TrajectoryConfig::new(t.n_traj, seed_override.unwrap_or(t.seed));
            if let Some(j) = t.jump_tol {
                c.jump_tol = j;
            }
            c
        })
    }

    pub fn gap_options(&self) -> GapOptions {
        let d = GapOptions::default();
        GapOptions {
            n_eigs: self.gap.n_eigs.unwrap_or(d.n_eigs),
            tol: self.gap.tol.unwrap_or(d.tol),
            max_iter: self.gap.max_iter.unwrap_or(d.max_iter),
            block_size: self.gap.block_size.unwrap_or(d.block_size),
            krylov_dim: self.gap.krylov_dim.unwrap_or(d.krylov_dim),
            ..d
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<(), CliError> {
        let params = self.params();
        params.validate().map_err(|e| CliError::Config(format!("[params]: {e}")))?;
        build_model(self.scheme, &params).map_err(|e| CliError::Config(format!("[params]: {e}")))?;
        if self.propagation.is_some() {
            self.propagation()?;
        }
        if let Some(t) = &self.trajectories {
            if t.n_traj == 0 {
                return Err(CliError::Config("trajectories.n_traj must be ≥ 1".into()));
            }
        }
        Ok(())
    }
}

pub fn build_model(scheme: SchemeName, params: &Params) -> resqec::Result<LindbladModel> {
    match scheme {
        SchemeName::Effective3q => models::build_effective_3q(params),
        SchemeName::TierB3q => models::build_tier_b_3q(params),
        SchemeName::TierC3q => models::build_tier_c_3q(params),
        SchemeName::SingleCavity3q => models::build_single_cavity_3q(params),
        SchemeName::StarEffective => models::build_star_effective(params),
        SchemeName::StarMultiplexed => models::build_star_multiplexed(params),
        SchemeName::UnprotectedQubit => models::build_unprotected_qubit(params),
    }
}

fn bits_on(space: &TensorSpace, bits: &str) -> Result<usize, CliError> {
    let digits = parse_bits(bits).map_err(|e| CliError::Config(format!("initial_state: {e}")))?;
    space.index_of(&digits).map_err(|e| CliError::Config(format!("initial_state `{bits}`: {e}")))
}

/// Qubit-register amplitudes of the configured preset.
pub fn qubit_state(init: &InitialState, qubits: &TensorSpace, scheme: SchemeName) -> Result<PureState, CliError> {
    let d = qubits.total_dim();
    let n = qubits.factors().len();
    let mut v = DVector::<Complex64>::zeros(d);
    let one = Complex64::new(1.0, 0.0);
    match init {
        InitialState::Psi0 if scheme == SchemeName::UnprotectedQubit => v[0] = one,
        InitialState::Psi0 => {
            v[0] = one;
            v[d - 1] = -one;
        }
        InitialState::Codeword0 => v[0] = one,
        InitialState::Codeword1 => v[d - 1] = one,
        InitialState::SingleFlip { qubit } => {
            if *qubit == 0 || *qubit > n {
                return Err(CliError::Config(format!("initial_state.qubit must lie in 1..={n}")));
            }
            v[1 << (n - qubit)] = one;
        }
        InitialState::Pattern { bits } => v[bits_on(qubits, bits)?] = one,
        InitialState::Superposition { a, b, c0, c1 } => {
            let (ia, ib) = (bits_on(qubits, a)?, bits_on(qubits, b)?);
            if ia == ib {
                return Err(CliError::Config("superposition needs two different patterns".into()));
            }
            v[ia] = Complex64::new(c0[0], c0[1]);
            v[ib] = Complex64::new(c1[0], c1[1]);
        }
    }
    PureState::normalized(qubits, v).map_err(|e| CliError::Config(format!("initial_state: {e}")))
}

/// Configured initial state on the full model space (cavities in vacuum).
pub fn initial_state(cfg: &ExperimentConfig, model: &LindbladModel) -> Result<(PureState, PureState), CliError> {
    let space = model.space();
    let qubits = resqec::integrator::qubit_space(space).map_err(|e| CliError::Runtime(e.to_string()))?;
    let q = qubit_state(&cfg.initial_state, &qubits, cfg.scheme)?;
    if &qubits == space {
        return Ok((q.clone(), q));
    }
    let cav_labels = space.cavity_labels();
    let cav = space.subspace(&cav_labels).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut vac = DVector::<Complex64>::zeros(cav.total_dim());
    vac[0] = Complex64::new(1.0, 0.0);
    let vac = PureState::new(&cav, vac).map_err(|e| CliError::Runtime(e.to_string()))?;
    // cavities follow the qubits in every cavity scheme
    let full = q.tensor(&vac).map_err(|e| CliError::Runtime(e.to_string()))?;
    if full.space() != space {
        return Err(CliError::Runtime("unexpected factor order in model space".into()));
    }
    Ok((full, q))
}

/// Observables named in `outputs`.
pub fn observables(names: &[String], model: &LindbladModel, qubit_ref: &PureState) -> Result<Vec<Observable>, CliError> {
    let space = model.space();
    let cfg = |e: resqec::Error| CliError::Config(format!("outputs: {e}"));
    names
        .iter()
        .map(|name| match name.as_str() {
            "fidelity" => Observable::fidelity("fidelity", &qubit_ref.to_density(), space).map_err(cfg),
            "codespace_distance" => Observable::codespace_distance("codespace_distance", space).map_err(cfg),
            "logical_coherence" => Observable::logical_coherence("logical_coherence", space).map_err(cfg),
            "photon_number" => Observable::photon_number("photon_number", space).map_err(cfg),
            other => match other.strip_prefix("population:") {
                Some(bits) => {
                    let digits = parse_bits(bits).map_err(cfg)?;
                    Observable::qubit_population(other, &digits, space).map_err(cfg)
                }
                None => Err(CliError::Config(format!(
                    "unknown output `{other}` (expected fidelity, codespace_distance, logical_coherence, \
                     photon_number or population:<bits>)"
                ))),
            },
        })
        .collect()
}

/// Runs the configured gap computation; kept here so `gap` and tests share it.
pub fn run_gap(cfg: &ExperimentConfig) -> Result<(resqec::integrator::GapReport, f64), CliError> {
    let params = cfg.params();
    let model = build_model(cfg.scheme, &params).map_err(|e| CliError::Config(e.to_string()))?;
    if !model.is_time_independent() {
        return Err(CliError::Config(format!("gap needs a time-independent scheme, `{}` switches", model.scheme())));
    }
    let report = liouvillian_gap(&model, &cfg.gap_options()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let min_rate = model
        .channels()
        .iter()
        .filter(|c| c.kind == models::ChannelKind::Correction && c.rate > 0.0)
        .map(|c| c.rate)
        .fold(f64::INFINITY, f64::min);
    Ok((report, min_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_errors_with_line_numbers() {
        let text = "scheme = \"effective3q\"\n[params]\ngamma = 1.0\nomgea_p = 3.0\n";
        let err = ExperimentConfig::parse(text, Path::new("x.toml")).unwrap_err();
        let CliError::Config(msg) = err else { panic!("wrong class") };
        assert!(msg.contains("line 4"), "{msg}");
        assert!(msg.contains("omgea_p"), "{msg}");
    }

    #[test]
    fn presets_on_three_qubits() {
        let s = TensorSpace::qubits(3);
        let psi = qubit_state(&InitialState::Psi0, &s, SchemeName::Effective3q).unwrap();
        assert!((psi.amplitudes()[7].re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let f = qubit_state(&InitialState::SingleFlip { qubit: 1 }, &s, SchemeName::Effective3q).unwrap();
        assert_eq!(f.amplitudes()[4].re, 1.0);
        let base = qubit_state(&InitialState::Psi0, &TensorSpace::qubits(1), SchemeName::UnprotectedQubit).unwrap();
        assert_eq!(base.amplitudes()[0].re, 1.0);
    }

    #[test]
    fn superposition_preset_parses() {
        let text = "scheme = \"effective3q\"\n[initial_state]\npreset = \"superposition\"\na = \"100\"\nb = \"011\"\nc0 = [1.0, 0.0]\nc1 = [1.0, 0.0]\n";
        let cfg = ExperimentConfig::parse(text, Path::new("x.toml")).unwrap();
        let s = TensorSpace::qubits(3);
        let psi = qubit_state(&cfg.initial_state, &s, cfg.scheme).unwrap();
        assert!((psi.amplitudes()[3].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
