//! Experiment configuration.
//!
//! Files are flat `key = value` lines with `#` comments and dotted keys for
//! nesting (`kernel.family = "gaussian"`), which is valid TOML; strings are
//! quoted. Unknown keys, a missing `dimension` and type mismatches are
//! errors that name the offending line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use pamfk::moments::{InitialCondition, McConfig, DEFAULT_DT_OVER_EPS2, DEFAULT_LAMBDA_HAT, DEFAULT_THETA};
use pamfk::{MollifierKernel, RenormSpec};

pub const DEFAULT_N_PATHS: usize = 10_000;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<pamfk::Error> for ConfigError {
    fn from(e: pamfk::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub family: KernelFamily,
    /// Per-coordinate variance of the Gaussian mollifier.
    pub sigma2: f64,
    /// Support radius of the bump mollifier.
    pub support_radius: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            sigma2: 0.5,
            support_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub n_paths: usize,
    /// Lower bound on the step count; the count otherwise follows
    /// Δt = dt_over_eps2·ε².
    pub n_steps: usize,
    pub dt_over_eps2: f64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_paths: DEFAULT_N_PATHS,
            n_steps: 1,
            dt_over_eps2: DEFAULT_DT_OVER_EPS2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum U0Form {
    #[default]
    Constant,
    GaussianBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct U0Config {
    pub form: U0Form,
    pub c: f64,
    pub center: Option<Vec<f64>>,
    pub width: f64,
}

impl Default for U0Config {
    fn default() -> Self {
        Self {
            form: U0Form::Constant,
            c: 1.0,
            center: None,
            width: 1.0,
        }
    }
}

/// Overrides of the d = 3 constant C_ε = c₁/ε + c₂·log(1/ε).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenormConfig {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpConfig {
    pub which: Vec<Which>,
    pub lambda_list: Vec<f64>,
}

impl Default for ExpConfig {
    fn default() -> Self {
        Self {
            which: vec![Which::X, Which::Y],
            lambda_list: vec![0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IltCheck {
    Means,
    Scaling,
    Dyadic,
    Area,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IltConfig {
    /// Which parts of the suite to run.
    pub checks: Vec<IltCheck>,
    /// Paths for the exact-mean checks.
    pub mean_samples: usize,
    pub mean_steps: usize,
    /// Time horizon and sample count for the scaling KS tests.
    pub scaling_t: f64,
    pub scaling_samples: usize,
    pub scaling_steps: usize,
    /// Paths and level for the dyadic box checks.
    pub dyadic_samples: usize,
    pub dyadic_level: u32,
    pub dyadic_steps: usize,
    /// Deepest level of the covered-area identity.
    pub area_level: u32,
}

impl Default for IltConfig {
    fn default() -> Self {
        Self {
            checks: vec![IltCheck::Means, IltCheck::Scaling, IltCheck::Dyadic, IltCheck::Area],
            mean_samples: 10_000,
            mean_steps: 4000,
            scaling_t: 0.5,
            scaling_samples: 2000,
            scaling_steps: 400,
            dyadic_samples: 10_000,
            dyadic_level: 2,
            dyadic_steps: 2048,
            area_level: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XvalConfig {
    pub h: f64,
    /// Half-width of the periodic box; by default the smallest multiple of
    /// h that clears |x| + 4√t + 4ε.
    pub extent: Option<f64>,
    /// PDE time step; defaults to h²/4.
    pub dt: Option<f64>,
    /// Noise draws; defaults to mc.n_paths.
    pub n_draws: Option<usize>,
}

impl Default for XvalConfig {
    fn default() -> Self {
        Self {
            h: 0.1,
            extent: None,
            dt: None,
            n_draws: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplosionConfig {
    /// Small-ball constant; defaults to the principal Dirichlet eigenvalue
    /// of −½Δ on the unit ball.
    pub c_prime: Option<f64>,
}

/// Moment orders: a single integer or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Orders {
    One(usize),
    Many(Vec<usize>),
}

impl Orders {
    pub fn list(&self) -> Vec<usize> {
        match self {
            Orders::One(n) => vec![*n],
            Orders::Many(v) => v.clone(),
        }
    }
}

impl Default for Orders {
    fn default() -> Self {
        Orders::One(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(default)]
    pub kernel: KernelConfig,
    /// Subcommands supply their own defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    #[serde(default)]
    pub n: Orders,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Evaluation point; the origin by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub u0: U0Config,
    #[serde(default)]
    pub renorm: RenormConfig,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_lambda_hat")]
    pub lambda_hat: f64,
    #[serde(default)]
    pub exp: ExpConfig,
    #[serde(default)]
    pub ilt: IltConfig,
    #[serde(default)]
    pub xval: XvalConfig,
    #[serde(default)]
    pub explosion: ExplosionConfig,
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_lambda_hat() -> f64 {
    DEFAULT_LAMBDA_HAT
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }

    /// Serializes to the same flat format; reparsing gives an equal config.
    pub fn to_text(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        lines.join("\n") + "\n"
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=3).contains(&self.dimension) {
            return Err(ConfigError(format!(
                "dimension must be 1, 2 or 3, got {}",
                self.dimension
            )));
        }
        if self.n.list().is_empty() || self.n.list().contains(&0) {
            return Err(ConfigError("n must hold moment orders ≥ 1".into()));
        }
        for (name, list) in [("eps_list", &self.eps_list), ("t_list", &self.t_list)] {
            if let Some(v) = list {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(ConfigError(format!(
                        "{name} must be a nonempty list of nonnegative numbers"
                    )));
                }
            }
        }
        if let Some(x) = &self.x {
            if x.len() != self.dimension {
                return Err(ConfigError(format!(
                    "x has {} coordinates, dimension is {}",
                    x.len(),
                    self.dimension
                )));
            }
        }
        if self.ilt.checks.is_empty() {
            return Err(ConfigError("ilt.checks must name at least one check".into()));
        }
        self.kernel()?;
        self.initial_condition()?.validate(self.dimension)?;
        Ok(())
    }

    pub fn kernel(&self) -> Result<MollifierKernel, ConfigError> {
        Ok(match self.kernel.family {
            KernelFamily::Gaussian => MollifierKernel::gaussian(self.kernel.sigma2, self.dimension)?,
            KernelFamily::Bump => MollifierKernel::bump(self.kernel.support_radius, self.dimension)?,
        })
    }

    pub fn renorm(&self) -> Result<RenormSpec, ConfigError> {
        let mut spec = RenormSpec::for_kernel(&self.kernel()?)?;
        if let Some(c1) = self.renorm.c1 {
            spec.c1 = c1;
        }
        if let Some(c2) = self.renorm.c2 {
            spec.c2 = c2;
        }
        Ok(spec)
    }

    pub fn initial_condition(&self) -> Result<InitialCondition, ConfigError> {
        Ok(match self.u0.form {
            U0Form::Constant => InitialCondition::Constant { c: self.u0.c },
            U0Form::GaussianBump => InitialCondition::GaussianBump {
                center: self.u0.center.clone().unwrap_or_else(|| vec![0.0; self.dimension]),
                width: self.u0.width,
            },
        })
    }

    pub fn point(&self) -> Vec<f64> {
        self.x.clone().unwrap_or_else(|| vec![0.0; self.dimension])
    }

    pub fn mc(&self) -> McConfig {
        McConfig {
            n_paths: self.mc.n_paths,
            n_steps: self.mc.n_steps.max(1),
            dt_over_eps2: self.mc.dt_over_eps2,
        }
    }

    pub fn eps_list_or(&self, default: &[f64]) -> Vec<f64> {
        self.eps_list.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn t_list_or(&self, default: &[f64]) -> Vec<f64> {
        self.t_list.clone().unwrap_or_else(|| default.to_vec())
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<String>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => out.push(format!("{prefix} = {other}")),
    }
}
