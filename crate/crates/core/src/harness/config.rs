use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhaseSource;
use crate::numeric::{AngleVector, RealMatrix, RngSeed};
use crate::priors::{
    precision_from_mvm, precision_markov, MarkovChainParams, MvmParams, PhasePrecision,
};
use crate::solvers::BcdSettings;

/// Prior used both to draw the true phases and to build the informed Q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Vm1d {
        kappa: f64,
    },
    Markov {
        a: f64,
        sigma_theta_sq: f64,
    },
    Custom {
        kappa: Vec<f64>,
        delta: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<Vec<f64>>,
    },
    Uniform,
}

impl PriorSpec {
    /// κ = 1, as in the i.i.d. Von Mises experiment.
    pub fn vm1d_unit() -> Self {
        PriorSpec::Vm1d { kappa: 1.0 }
    }

    /// a = 0.8, σ_θ² = 0.1, as in the Markov-chain experiment.
    pub fn markov_default() -> Self {
        PriorSpec::Markov {
            a: 0.8,
            sigma_theta_sq: 0.1,
        }
    }

    fn mvm_params(kappa: &[f64], delta: &[Vec<f64>], mu: Option<&Vec<f64>>) -> Result<MvmParams> {
        let m = kappa.len();
        if delta.len() != m || delta.iter().any(|row| row.len() != m) {
            return Err(Error::Config(format!("custom delta must be {m}x{m}")));
        }
        let delta = RealMatrix::from_fn(m, m, |i, k| delta[i][k]);
        let mu = match mu {
            Some(v) => AngleVector::new(v.clone())?,
            None => AngleVector::zeros(m),
        };
        MvmParams::new(kappa.to_vec(), delta, mu).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn phase_source(&self, m: usize) -> Result<PhaseSource> {
        Ok(match self {
            PriorSpec::Vm1d { kappa } => PhaseSource::Vm1d { kappa: *kappa },
            PriorSpec::Markov { a, sigma_theta_sq } => PhaseSource::Markov {
                a: *a,
                sigma_theta_sq: *sigma_theta_sq,
            },
            PriorSpec::Custom { kappa, delta, mu } => {
                let params = Self::mvm_params(kappa, delta, mu.as_ref())?;
                if params.dim() != m {
                    return Err(Error::Config(format!(
                        "custom prior has dimension {}, M = {m}",
                        params.dim()
                    )));
                }
                PhaseSource::Mvm(params)
            }
            PriorSpec::Uniform => PhaseSource::Uniform,
        })
    }

    /// Γ_φ⁻¹ handed to informed PhaseCut. Uniform gives the zero matrix.
    pub fn precision(&self, m: usize) -> Result<PhasePrecision> {
        match self {
            PriorSpec::Vm1d { kappa } => Ok(precision_from_mvm(&MvmParams::independent(*kappa, m))),
            PriorSpec::Markov { a, sigma_theta_sq } => {
                precision_markov(&MarkovChainParams::new(*a, *sigma_theta_sq, m)?)
            }
            PriorSpec::Custom { kappa, delta, mu } => Ok(precision_from_mvm(&Self::mvm_params(
                kappa,
                delta,
                mu.as_ref(),
            )?)),
            PriorSpec::Uniform => Ok(PhasePrecision::zeros(m)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Phasecut,
    InformedPhasecut,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Phasecut => "phasecut",
            Method::InformedPhasecut => "informed_phasecut",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "phasecut" => Some(Method::Phasecut),
            "informed_phasecut" => Some(Method::InformedPhasecut),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// 0.0, 0.05, ..., 0.6.
pub fn default_sigma_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.05).collect()
}

fn default_methods() -> Vec<Method> {
    vec![Method::Phasecut, Method::InformedPhasecut]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "M", default = "ExperimentConfig::default_m")]
    pub m: usize,
    #[serde(rename = "K", default = "ExperimentConfig::default_k")]
    pub k: usize,
    #[serde(default = "ExperimentConfig::default_trials")]
    pub trials: usize,
    #[serde(default = "default_sigma_grid")]
    pub sigma_n_sq_grid: Vec<f64>,
    #[serde(default = "PriorSpec::vm1d_unit")]
    pub prior_spec: PriorSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub solver: BcdSettings,
    #[serde(default)]
    pub master_seed: RngSeed,
    #[serde(default = "ExperimentConfig::default_output")]
    pub output_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: Self::default_m(),
            k: Self::default_k(),
            trials: Self::default_trials(),
            sigma_n_sq_grid: default_sigma_grid(),
            prior_spec: PriorSpec::vm1d_unit(),
            methods: default_methods(),
            solver: BcdSettings::default(),
            master_seed: RngSeed(0),
            output_path: Self::default_output(),
        }
    }
}

impl ExperimentConfig {
    fn default_m() -> usize {
        256
    }

    fn default_k() -> usize {
        64
    }

    fn default_trials() -> usize {
        50
    }

    fn default_output() -> PathBuf {
        PathBuf::from("priorcut_results.csv")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.m < self.k {
            return Err(Error::Config(format!(
                "need M >= K >= 1, got M = {}, K = {}",
                self.m, self.k
            )));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sigma_n_sq_grid.is_empty() {
            return Err(Error::Config("sigma_n_sq_grid must not be empty".into()));
        }
        if self
            .sigma_n_sq_grid
            .iter()
            .any(|s| !s.is_finite() || *s < 0.0)
        {
            return Err(Error::Config(
                "sigma_n_sq_grid entries must be finite and >= 0".into(),
            ));
        }
        if self.sigma_n_sq_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "sigma_n_sq_grid must be strictly ascending".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods must not repeat".into()));
        }
        self.solver.validate()?;
        self.prior_spec.phase_source(self.m)?;
        self.prior_spec
            .precision(self.m)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
