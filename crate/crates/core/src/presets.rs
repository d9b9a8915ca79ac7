//! Named model and data settings for the standard experiments.

use serde::{Deserialize, Serialize};

use crate::ddp::DdpHyperparams;
use crate::dp::DpHyperparams;
use crate::error::{Error, Result};
use crate::model::Group;
use crate::sim::{GeneratorSpec, LogNormalComponent, LogNormalMixture};

/// Priors for one of the two model families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelPriors {
    Dp(DpHyperparams),
    Ddp(DdpHyperparams),
}

/// A named setting: priors, and for simulated scenarios the generators
/// (one per group, in group order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub priors: ModelPriors,
    pub generators: Vec<GeneratorSpec>,
    pub contrast_times: Vec<f64>,
}

pub const PRESET_NAMES: [&str; 5] = ["example1", "example2", "example3", "liver", "lung"];

fn component(weight: f64, mu: f64, sigma: f64) -> LogNormalComponent {
    LogNormalComponent { weight, mu, sigma }
}

/// `0.4 LN(1, 0.4) + 0.6 LN(2, 0.2)`, `n = 200`.
pub fn example1_truth() -> LogNormalMixture {
    LogNormalMixture {
        components: vec![component(0.4, 1.0, 0.4), component(0.6, 2.0, 0.2)],
    }
}

/// `LN(5, 0.6)`: the example 2 truth and the example 3 control group.
pub fn example2_truth() -> LogNormalMixture {
    LogNormalMixture::single(5.0, 0.6)
}

/// `0.4 LN(5, 0.4) + 0.6 LN(6, 0.2)`: the example 3 treatment group.
pub fn example3_treatment_truth() -> LogNormalMixture {
    LogNormalMixture {
        components: vec![component(0.4, 5.0, 0.4), component(0.6, 6.0, 0.2)],
    }
}

/// Censoring fractions used with example 2.
pub const EXAMPLE2_CENSORING: [f64; 2] = [0.12, 0.335];

/// Follow-up times (days) for the lung data contrasts.
pub const LUNG_CONTRAST_TIMES: [f64; 6] = [100.0, 300.0, 500.0, 700.0, 1000.0, 1500.0];

fn scaled_identity(s: f64) -> [[f64; 2]; 2] {
    [[s, 0.0], [0.0, s]]
}

/// Look up a preset. `censoring` applies to example 2 only.
pub fn preset(name: &str, censoring: Option<f64>) -> Result<Preset> {
    let p = match name {
        "example1" => Preset {
            name: name.into(),
            priors: ModelPriors::Dp(DpHyperparams {
                a_alpha: 2.0,
                b_alpha: 1.0,
                a_zeta: 3.0,
                b_zeta: 4.0,
                a_theta: 1.0,
                b_theta: 1.0,
                m1: 13.0,
                m2: 39.0,
            }),
            generators: vec![GeneratorSpec {
                mixture: example1_truth(),
                n: 200,
                group: None,
                censoring_target: None,
            }],
            contrast_times: vec![],
        },
        "example2" => Preset {
            name: name.into(),
            priors: ModelPriors::Dp(DpHyperparams {
                a_alpha: 2.0,
                b_alpha: 1.0,
                a_zeta: 3.0,
                b_zeta: 1000.0,
                a_theta: 2.0,
                b_theta: 25.0,
                m1: 1000.0,
                m2: 3000.0,
            }),
            generators: vec![GeneratorSpec {
                mixture: example2_truth(),
                n: 200,
                group: None,
                censoring_target: censoring,
            }],
            contrast_times: vec![],
        },
        "example3" => Preset {
            name: name.into(),
            priors: ModelPriors::Ddp(DdpHyperparams {
                a_theta: [2.0, 2.0],
                b_theta: [50.0, 50.0],
                m1: [1000.0, 1000.0],
                m2: [4000.0, 4000.0],
                mu_bar: [5.0, 5.5],
                sigma0: scaled_identity(10.0),
                sigma: scaled_identity(3.0),
                a_alpha: 5.0,
                b_alpha: 1.0,
            }),
            generators: vec![
                GeneratorSpec {
                    mixture: example2_truth(),
                    n: 100,
                    group: Some(Group::Control),
                    censoring_target: None,
                },
                GeneratorSpec {
                    mixture: example3_treatment_truth(),
                    n: 100,
                    group: Some(Group::Treatment),
                    censoring_target: None,
                },
            ],
            contrast_times: vec![],
        },
        "liver" => Preset {
            name: name.into(),
            priors: ModelPriors::Dp(DpHyperparams {
                a_alpha: 5.0,
                b_alpha: 1.0,
                a_zeta: 3.0,
                b_zeta: 80.0,
                a_theta: 2.0,
                b_theta: 2.0,
                m1: 100.0,
                m2: 300.0,
            }),
            generators: vec![],
            contrast_times: vec![],
        },
        "lung" => Preset {
            name: name.into(),
            priors: ModelPriors::Ddp(DdpHyperparams {
                a_theta: [2.0, 2.0],
                b_theta: [50.0, 50.0],
                m1: [2500.0, 2500.0],
                m2: [10000.0, 10000.0],
                mu_bar: [6.7, 6.3],
                sigma0: scaled_identity(10.0),
                sigma: scaled_identity(3.0),
                a_alpha: 5.0,
                b_alpha: 1.0,
            }),
            generators: vec![],
            contrast_times: LUNG_CONTRAST_TIMES.to_vec(),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    if censoring.is_some() && name != "example2" {
        return Err(Error::Config(format!("preset `{name}` takes no censoring target")));
    }
    Ok(p)
}

/// One prior-study setting: `ω ~ Dir(α G₀(B_1), .., α G₀(B_M))`, `G₀ = Exp(mean ζ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSetting {
    pub alpha: f64,
    pub zeta: f64,
    pub m: usize,
    pub theta: f64,
}

/// Varying total mass at a fixed basis: `α ∈ {1, 10, 100}`, `M = 50`,
/// `θ = 0.5`, `G₀ = Exp(5)`.
pub fn prior_alpha_study() -> Vec<PriorSetting> {
    [1.0, 10.0, 100.0]
        .into_iter()
        .map(|alpha| PriorSetting {
            alpha,
            zeta: 5.0,
            m: 50,
            theta: 0.5,
        })
        .collect()
}

/// Varying basis at `α = 10`: `(M, θ) ∈ {(10, 2), (40, 0.5), (10, 0.5)}`.
pub fn prior_basis_study() -> Vec<PriorSetting> {
    [(10, 2.0), (40, 0.5), (10, 0.5)]
        .into_iter()
        .map(|(m, theta)| PriorSetting {
            alpha: 10.0,
            zeta: 5.0,
            m,
            theta,
        })
        .collect()
}

pub const PRIOR_STUDY_NAMES: [&str; 2] = ["alpha", "basis"];

pub fn prior_study(name: &str) -> Result<Vec<PriorSetting>> {
    match name {
        "alpha" => Ok(prior_alpha_study()),
        "basis" => Ok(prior_basis_study()),
        other => Err(Error::Config(format!(
            "unknown prior study `{other}`; expected alpha or basis"
        ))),
    }
}
