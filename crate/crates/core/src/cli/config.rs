use crate::error::{Error, Result};
use crate::wave::LleParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    #[default]
    Standard,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    /// Newton continuation from the small-amplitude seed.
    #[default]
    Periodic,
    /// The selected constant state, carried on the seed period.
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FieldFamily {
    /// One Gaussian bump per NT window.
    #[default]
    Bump,
    /// Smooth random field drawn from `seed`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Pump strength; derived from `mu` when omitted.
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
}

fn default_beta() -> f64 {
    -1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiGridConfig {
    pub n: usize,
    pub refine: usize,
}

impl Default for XiGridConfig {
    fn default() -> Self {
        XiGridConfig { n: 201, refine: 4 }
    }
}

/// Either explicit times or a log-spaced grid on [t_min, t_max] plus t = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_t_min() -> f64 {
    1.0
}
fn default_t_max() -> f64 {
    600.0
}
fn default_count() -> usize {
    60
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        TimeGridConfig {
            values: None,
            t_min: default_t_min(),
            t_max: default_t_max(),
            count: default_count(),
        }
    }
}

impl TimeGridConfig {
    pub fn times(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let mut out = vec![0.0];
        let r = self.t_max / self.t_min;
        let k = self.count.max(2) - 1;
        out.extend((0..=k).map(|i| self.t_min * r.powf(i as f64 / k as f64)));
        out
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        match &self.values {
            Some(v) => {
                if v.is_empty() || v.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
                    return Err(Error::InvalidParams(format!("{what}: times must be finite and >= 0")));
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParams(format!("{what}: times must increase")));
                }
            }
            None => {
                if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite() && self.count >= 2) {
                    return Err(Error::InvalidParams(format!(
                        "{what}: need 0 < t_min < t_max and count >= 2"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessConfig {
    #[serde(rename = "T", default = "default_two_pi")]
    pub period: f64,
    /// Diffusion coefficient; the fitted curve value when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(rename = "N_list", default = "default_sharp_n")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_sharp_t")]
    pub t_list: Vec<f64>,
}

fn default_two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}
fn default_sharp_n() -> Vec<usize> {
    (2..=8).map(|k| 1usize << k).collect()
}
fn default_sharp_t() -> Vec<f64> {
    vec![1.0, 4.0, 16.0, 64.0]
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        SharpnessConfig {
            period: default_two_pi(),
            d: None,
            n_list: default_sharp_n(),
            t_list: default_sharp_t(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizedConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(rename = "N_win", default = "default_n_win")]
    pub n_win: usize,
    /// Standard deviation of the Gaussian data, in units of T.
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_true() -> bool {
    true
}
fn default_n_win() -> usize {
    64
}
fn default_width() -> f64 {
    2.0 / (2.0 * std::f64::consts::PI)
}

impl Default for LocalizedConfig {
    fn default() -> Self {
        LocalizedConfig {
            enabled: true,
            n_win: default_n_win(),
            width: default_width(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub wave_kind: WaveKind,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default)]
    pub xi_grid: XiGridConfig,
    #[serde(rename = "N_list", default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub t_grid: TimeGridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_xi1: Option<f64>,
    #[serde(default = "default_curve_samples")]
    pub curve_samples: usize,
    #[serde(default)]
    pub family: FieldFamily,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub precision_mode: PrecisionMode,
    #[serde(default)]
    pub sharpness: SharpnessConfig,
    #[serde(default)]
    pub localized: LocalizedConfig,
}

fn default_m() -> usize {
    32
}
fn default_tol() -> f64 {
    1e-11
}
fn default_n_list() -> Vec<usize> {
    vec![1, 2, 4, 8, 16]
}
fn default_curve_samples() -> usize {
    32
}

pub const TEMPLATE: &str = r#"# Run configuration. Every key except [params].alpha and output_dir is optional;
# the values shown are the defaults.

output_dir = "run"
# seed for random perturbation fields (ChaCha8)
seed = 0
# standard | extended (extended also checks the lattice sums in 192-bit arithmetic)
precision_mode = "standard"

# distance above the pump threshold, F^2 = (1-alpha)^2 + 1 + mu; ignored when F is given
mu = 0.01
# Fourier half-width of the Newton seed (doubled adaptively)
M = 32
newton_tol = 1e-11
# periodic | constant
wave_kind = "periodic"
curve_samples = 32
# bump | random
family = "bump"
N_list = [1, 2, 4, 8, 16]
# cutoff_xi1 = 0.1    (default: separation radius of the critical curve)

[params]
alpha = 1.0
beta = -1.0
# F = 1.005

[xi_grid]
n = 201
refine = 4

[t_grid]
# values = [0.0, 1.0, 10.0]   (overrides the log grid)
t_min = 1.0
t_max = 600.0
count = 60

[sharpness]
T = 6.283185307179586
# d = 1.0   (default: fitted d of the critical curve)
N_list = [4, 8, 16, 32, 64, 128, 256]
t_list = [1.0, 4.0, 16.0, 64.0]

[localized]
enabled = true
N_win = 64
width = 0.3183098861837907
"#;

impl RunConfig {
    /// Defaults for everything except the parameters and the output directory.
    pub fn new(params: ParamsConfig, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            params,
            mu: None,
            m: default_m(),
            wave_kind: WaveKind::default(),
            newton_tol: default_tol(),
            xi_grid: XiGridConfig::default(),
            n_list: default_n_list(),
            t_grid: TimeGridConfig::default(),
            cutoff_xi1: None,
            curve_samples: default_curve_samples(),
            family: FieldFamily::default(),
            output_dir: output_dir.into(),
            seed: 0,
            precision_mode: PrecisionMode::default(),
            sharpness: SharpnessConfig::default(),
            localized: LocalizedConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Pump strength from `F` or from `mu`.
    pub fn pump(&self) -> Result<f64> {
        match (self.params.f, self.mu) {
            (Some(f), _) => Ok(f),
            (None, Some(mu)) => Ok(crate::wave::BifurcationSeed::new(self.params.alpha, mu)?.pump()),
            (None, None) => Err(Error::InvalidParams("either params.F or mu is required".into())),
        }
    }

    pub fn lle_params(&self) -> Result<LleParams> {
        LleParams::new(self.params.alpha, self.params.beta, self.pump()?)
    }

    /// Fail-fast check of every sub-configuration.
    pub fn validate(&self) -> Result<()> {
        self.lle_params()?;
        if self.wave_kind == WaveKind::Periodic {
            let mu = self.mu.ok_or_else(|| {
                Error::InvalidParams("periodic waves are continued from the seed and need mu".into())
            })?;
            crate::wave::BifurcationSeed::new(self.params.alpha, mu)?;
            if self.params.beta != -1.0 {
                return Err(Error::InvalidParams("the periodic seed needs beta = -1".into()));
            }
        }
        if self.m < 1 {
            return Err(Error::InvalidParams("M must be at least 1".into()));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParams("newton_tol must be positive".into()));
        }
        if self.xi_grid.n < 3 {
            return Err(Error::InvalidParams("xi_grid.n must be at least 3".into()));
        }
        if self.n_list.iter().any(|&n| n < 1) {
            return Err(Error::InvalidParams("N_list entries must be >= 1".into()));
        }
        self.t_grid.validate("t_grid")?;
        if let Some(x) = self.cutoff_xi1 {
            if !(x > 0.0) {
                return Err(Error::InvalidParams("cutoff_xi1 must be positive".into()));
            }
        }
        if self.curve_samples < 8 {
            return Err(Error::InvalidParams("curve_samples must be at least 8".into()));
        }
        let s = &self.sharpness;
        if !(s.period > 0.0) || s.d.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::InvalidParams("sharpness needs T > 0 and d > 0".into()));
        }
        if s.n_list.iter().any(|&n| n < 1) || s.t_list.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidParams("sharpness grids need N >= 1 and t > 0".into()));
        }
        if self.localized.enabled && (self.localized.n_win < 4 || !(self.localized.width > 0.0)) {
            return Err(Error::InvalidParams("localized needs N_win >= 4 and width > 0".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::InvalidParams("output_dir is empty".into()));
        }
        Ok(())
    }
}
