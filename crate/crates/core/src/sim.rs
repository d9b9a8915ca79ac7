//! Synthetic survival data: lognormal-mixture event times with optional
//! exponential censoring calibrated to a target censoring fraction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::std_normal;
use crate::model::{Group, Record, SurvivalDataset};
use crate::special::{log_sum_exp, LogNormalParams};

/// Largest censoring mean returned by [`calibrate_kappa`].
pub const KAPPA_CAP: f64 = 1e9;
/// Targets below this are treated as "no censoring" by the calibration.
pub const MIN_CENSORING_TARGET: f64 = 1e-4;

/// One mixture component: weight and lognormal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalComponent {
    pub weight: f64,
    pub mu: f64,
    /// Standard deviation of `log t`.
    pub sigma: f64,
}

impl LogNormalComponent {
    pub fn params(&self) -> LogNormalParams {
        LogNormalParams {
            mu: self.mu,
            sigma2: self.sigma * self.sigma,
        }
    }
}

/// Finite mixture of lognormal laws; the data-generating truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNormalMixture {
    pub components: Vec<LogNormalComponent>,
}

impl LogNormalMixture {
    pub fn single(mu: f64, sigma: f64) -> Self {
        Self {
            components: vec![LogNormalComponent {
                weight: 1.0,
                mu,
                sigma,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config("mixture needs at least one component".into()));
        }
        for c in &self.components {
            if !(c.weight > 0.0 && c.sigma > 0.0 && c.sigma.is_finite() && c.mu.is_finite()) {
                return Err(Error::Config(
                    "mixture weights and standard deviations must be positive".into(),
                ));
            }
        }
        let s: f64 = self.components.iter().map(|c| c.weight).sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("mixture weights sum to {s}, not 1")));
        }
        Ok(())
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.log_pdf(t).exp()
    }

    pub fn log_pdf(&self, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.params().ln_pdf(t))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.params().cdf(t)).sum()
    }

    pub fn sf(&self, t: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.params().sf(t)).sum()
    }

    pub fn hazard(&self, t: f64) -> f64 {
        self.pdf(t) / self.sf(t)
    }

    pub fn mean(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.params().mean())
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.last().expect("non-empty mixture");
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                pick = c;
                break;
            }
        }
        (pick.mu + pick.sigma * std_normal(rng)).exp()
    }

    /// `E[exp(-T/κ)]` by quadrature over the standard-normal scale of each
    /// component.
    pub fn laplace(&self, kappa: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let f = |z: f64| {
                    let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                    phi * (-(c.mu + c.sigma * z).exp() / kappa).exp()
                };
                c.weight * quadrature::integrate(f, -12.0, 12.0, 1e-14).integral
            })
            .sum()
    }

    /// Probability `P(c < T)` that an exponential censoring time with mean
    /// `κ` falls strictly before the event time.
    pub fn censoring_probability(&self, kappa: f64) -> f64 {
        1.0 - self.laplace(kappa)
    }
}

/// How to draw one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub mixture: LogNormalMixture,
    pub n: usize,
    #[serde(default)]
    pub group: Option<Group>,
    /// Target censoring fraction in `[0, 1)`.
    #[serde(default)]
    pub censoring_target: Option<f64>,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        self.mixture.validate()?;
        if self.n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        if let Some(g) = self.censoring_target {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::Config(format!(
                    "censoring target must lie in [0, 1), got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Bisection in `log κ` so that `P(c < T)` equals the target. Targets
/// below `1e-4` return the cap `1e9` with a warning.
pub fn calibrate_kappa(spec: &GeneratorSpec) -> Result<f64> {
    spec.validate()?;
    let target = spec
        .censoring_target
        .ok_or_else(|| Error::Config("no censoring target to calibrate".into()))?;
    let mix = &spec.mixture;
    if target < MIN_CENSORING_TARGET {
        log::warn!("censoring target {target} is below {MIN_CENSORING_TARGET}; using κ = {KAPPA_CAP}");
        return Ok(KAPPA_CAP);
    }
    let mut lo = (mix.mean() * 1e-12).ln();
    let mut hi = KAPPA_CAP.ln();
    if mix.censoring_probability(hi.exp()) > target {
        log::warn!("censoring target {target} needs κ above the cap {KAPPA_CAP}");
        return Ok(KAPPA_CAP);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mix.censoring_probability(mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Dataset together with the latent event and censoring times behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub data: SurvivalDataset,
    pub event_times: Vec<f64>,
    /// Infinite when no censoring is applied.
    pub censoring_times: Vec<f64>,
    pub kappa: Option<f64>,
}

/// Draw a dataset and keep the latent times.
pub fn generate_instrumented<R: Rng + ?Sized>(spec: &GeneratorSpec, rng: &mut R) -> Result<GeneratedData> {
    spec.validate()?;
    let kappa = match spec.censoring_target {
        Some(g) if g > 0.0 => Some(calibrate_kappa(spec)?),
        _ => None,
    };
    let mut records = Vec::with_capacity(spec.n);
    let mut event_times = Vec::with_capacity(spec.n);
    let mut censoring_times = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let t = spec.mixture.sample(rng);
        let c = match kappa {
            Some(k) => -k * (1.0 - rng.random::<f64>()).ln(),
            None => f64::INFINITY,
        };
        let t = t.max(f64::MIN_POSITIVE);
        records.push(Record {
            time: t.min(c).max(f64::MIN_POSITIVE),
            event: t <= c,
            group: spec.group,
        });
        event_times.push(t);
        censoring_times.push(c);
    }
    Ok(GeneratedData {
        data: SurvivalDataset::new(records)?,
        event_times,
        censoring_times,
        kappa,
    })
}

pub fn generate<R: Rng + ?Sized>(spec: &GeneratorSpec, rng: &mut R) -> Result<SurvivalDataset> {
    Ok(generate_instrumented(spec, rng)?.data)
}

/// Draw each group from its own spec and concatenate (specs in order).
pub fn generate_groups<R: Rng + ?Sized>(specs: &[GeneratorSpec], rng: &mut R) -> Result<SurvivalDataset> {
    let mut records = Vec::new();
    for s in specs {
        if s.group.is_none() && specs.len() > 1 {
            return Err(Error::Config("multi-group generation needs group labels".into()));
        }
        records.extend_from_slice(generate(s, rng)?.records());
    }
    SurvivalDataset::new(records)
}
