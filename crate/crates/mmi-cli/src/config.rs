//! Flat JSON run configuration. Unknown keys are rejected so experiment
//! typos fail loudly.

use serde::Deserialize;

use mmi_core::model::ModelConstants;
use mmi_core::pipeline::FitMode;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub k: usize,
    #[serde(rename = "sStar")]
    pub s_star: usize,
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub b: f64,
    pub eta: f64,
    /// Moment bound for the schedules; defaults to `(b + eta)^6`.
    #[serde(default)]
    pub theta: Option<f64>,

    /// Dataset size (total; the fit splits it in half).
    #[serde(default)]
    pub n: Option<usize>,
    /// Near-net size.
    #[serde(default = "default_n0")]
    pub n0: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: FitMode,

    /// Schedule overrides.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,

    /// Monte-Carlo evaluation size.
    #[serde(rename = "nMc", default = "default_n_mc")]
    pub n_mc: usize,

    /// Sweep grids (`n` x `d` x seeds).
    #[serde(rename = "nGrid", default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(rename = "dGrid", default)]
    pub d_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,

    /// Coverage-experiment inputs.
    #[serde(rename = "epsList", default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_n0() -> usize {
    32
}

fn default_mode() -> FitMode {
    FitMode::Step
}

fn default_n_mc() -> usize {
    100_000
}

fn default_eps_list() -> Vec<f64> {
    vec![0.3, 0.6, 1.0]
}

fn default_trials() -> usize {
    1000
}

impl RunConfig {
    pub fn constants(&self) -> ModelConstants {
        self.constants_for_d(self.d)
    }

    /// Constants with the ambient dimension replaced (sweep grids vary d).
    pub fn constants_for_d(&self, d: usize) -> ModelConstants {
        let mut constants =
            ModelConstants::new(d, self.k, self.s_star, self.r, self.c, self.b, self.eta);
        if let Some(theta) = self.theta {
            constants.theta = theta;
        }
        constants
    }
}
