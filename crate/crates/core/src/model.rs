//! The Erlang mixture data model: survival data, weight vectors obtained by
//! discretizing a distribution function, and the mixture density, survival
//! and hazard functions with their censored likelihoods.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{
    erlang_log_pdf, erlang_log_sf, log_sum_exp, ErlangLadder, ErlangParams, LogNormalParams,
};

/// Relative nudge applied before rounding `φ/θ` up to a bin index, so that a
/// value sitting on a right-closed edge `kθ` stays in bin `k`.
pub const BIN_EDGE_EPS: f64 = 1e-12;

/// Experimental arm of a two-group study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "C")]
    Control,
    #[serde(rename = "T")]
    Treatment,
}

impl Group {
    pub fn index(self) -> usize {
        match self {
            Group::Control => 0,
            Group::Treatment => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Group::Control => "C",
            Group::Treatment => "T",
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::Control => Group::Treatment,
            Group::Treatment => Group::Control,
        }
    }

    pub const BOTH: [Group; 2] = [Group::Control, Group::Treatment];
}

/// One subject: observed time `y = min(t, c)` and whether the event was seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub time: f64,
    pub event: bool,
    pub group: Option<Group>,
}

/// Right-censored survival data, optionally labelled by group.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurvivalDataset {
    records: Vec<Record>,
}

impl SurvivalDataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !(r.time > 0.0 && r.time.is_finite()) {
                return Err(Error::Data(format!(
                    "record {i}: time must be positive and finite, got {}",
                    r.time
                )));
            }
        }
        let labelled = records.iter().filter(|r| r.group.is_some()).count();
        if labelled != 0 && labelled != records.len() {
            return Err(Error::Data(
                "either every record carries a group label or none does".into(),
            ));
        }
        Ok(Self { records })
    }

    /// Unlabelled dataset from parallel slices of times and event flags.
    pub fn from_times(times: &[f64], events: &[bool]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::Data("times and events differ in length".into()));
        }
        Self::new(
            times
                .iter()
                .zip(events)
                .map(|(&time, &event)| Record {
                    time,
                    event,
                    group: None,
                })
                .collect(),
        )
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_grouped(&self) -> bool {
        self.records.first().is_some_and(|r| r.group.is_some())
    }

    pub fn group_count(&self, g: Group) -> usize {
        self.records.iter().filter(|r| r.group == Some(g)).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| !r.event).count() as f64 / self.records.len() as f64
    }

    /// Records of one group, labels dropped.
    pub fn subset(&self, g: Group) -> SurvivalDataset {
        SurvivalDataset {
            records: self
                .records
                .iter()
                .filter(|r| r.group == Some(g))
                .map(|r| Record { group: None, ..*r })
                .collect(),
        }
    }

    pub fn max_time(&self) -> f64 {
        self.records.iter().map(|r| r.time).fold(0.0, f64::max)
    }
}

/// Mixture weights `ω_1..ω_M` over the Erlang basis with common scale `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    theta: f64,
    omega: Vec<f64>,
}

impl WeightVector {
    pub fn new(theta: f64, omega: Vec<f64>) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return domain(format!("scale must be positive, got {theta}"));
        }
        if omega.is_empty() {
            return domain("weight vector needs at least one component");
        }
        if omega.iter().any(|w| !(*w >= 0.0 && *w <= 1.0 + 1e-12)) {
            return domain("weights must lie in [0, 1]");
        }
        let s: f64 = omega.iter().sum();
        if (s - 1.0).abs() > 1e-12 * omega.len().max(10) as f64 {
            return domain(format!("weights sum to {s}, not 1"));
        }
        Ok(Self { theta, omega })
    }

    /// Build from non-negative masses by normalization.
    pub fn from_masses(theta: f64, masses: Vec<f64>) -> Result<Self> {
        let s: f64 = masses.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numeric("weight masses are all zero".into()));
        }
        Self::new(theta, masses.into_iter().map(|w| w / s).collect())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn m(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// One past the last component with positive weight.
    fn support_end(&self) -> usize {
        self.omega.iter().rposition(|&w| w > 0.0).map_or(0, |i| i + 1)
    }
}

/// An evaluable distribution function on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CdfHandle {
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    LogNormal(LogNormalParams),
    /// `(α·base + Σ δ_atoms) / (α + n)`.
    Mixture {
        alpha: f64,
        base: Box<CdfHandle>,
        atoms: Vec<f64>,
    },
}

impl CdfHandle {
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            CdfHandle::Exponential { mean } => -(-t / mean).exp_m1(),
            CdfHandle::LogNormal(p) => p.cdf(t),
            CdfHandle::Mixture { alpha, base, atoms } => {
                let below = atoms.iter().filter(|&&a| a <= t).count() as f64;
                (alpha * base.cdf(t) + below) / (alpha + atoms.len() as f64)
            }
        }
    }

    /// Mass of `(lo, hi]`, `hi` possibly infinite.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self {
            CdfHandle::Exponential { mean } => {
                let head = (-lo.max(0.0) / mean).exp();
                if hi.is_infinite() {
                    head
                } else {
                    -head * (-(hi - lo.max(0.0)) / mean).exp_m1()
                }
            }
            CdfHandle::LogNormal(p) => p.interval_mass(lo, hi),
            CdfHandle::Mixture { alpha, base, atoms } => {
                let inside = atoms.iter().filter(|&&a| a > lo && a <= hi).count() as f64;
                let base_mass = if *alpha > 0.0 {
                    alpha * base.interval_mass(lo, hi)
                } else {
                    0.0
                };
                (base_mass + inside) / (alpha + atoms.len() as f64)
            }
        }
    }
}

/// Bin index `m ∈ 1..=M` of a latent value: bins are `((m-1)θ, mθ]`, with
/// everything beyond `(M-1)θ` in bin `M`.
pub fn component_of(phi: f64, m_max: usize, theta: f64) -> Result<usize> {
    if !(phi > 0.0) || phi.is_nan() {
        return domain(format!("latent value must be positive, got {phi}"));
    }
    if m_max == 0 || !(theta > 0.0) {
        return domain("component_of needs M >= 1 and θ > 0");
    }
    Ok(bin_index(phi, theta).min(m_max))
}

/// Uncapped bin index `⌈φ/θ⌉` with the edge nudge, saturating at `usize::MAX`.
pub(crate) fn bin_index(phi: f64, theta: f64) -> usize {
    let r = phi / theta;
    let k = (r * (1.0 - BIN_EDGE_EPS)).ceil();
    if k.is_nan() || k < 1.0 {
        1
    } else if k >= usize::MAX as f64 {
        usize::MAX
    } else {
        k as usize
    }
}

/// `ω_m = G(mθ) - G((m-1)θ)` with the last bin absorbing the tail.
pub fn weights_from_cdf(g: &CdfHandle, m: usize, theta: f64) -> Result<WeightVector> {
    if m == 0 || !(theta > 0.0 && theta.is_finite()) {
        return domain("weights_from_cdf needs M >= 1 and θ > 0");
    }
    let mut masses: Vec<f64> = match g {
        CdfHandle::Mixture { alpha, base, atoms } => {
            let mut w: Vec<f64> = bin_masses(base, m, theta)
                .into_iter()
                .map(|b| if *alpha > 0.0 { alpha * b } else { 0.0 })
                .collect();
            for &a in atoms {
                w[component_of(a, m, theta)? - 1] += 1.0;
            }
            w
        }
        _ => bin_masses(g, m, theta),
    };
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("distribution puts no mass on any bin".into()));
    }
    for w in &mut masses {
        *w /= total;
    }
    WeightVector::new(theta, masses)
}

/// Masses of the `M` bins under a parametric distribution function.
pub(crate) fn bin_masses(g: &CdfHandle, m: usize, theta: f64) -> Vec<f64> {
    (1..=m)
        .map(|k| {
            let lo = (k - 1) as f64 * theta;
            let hi = if k == m { f64::INFINITY } else { k as f64 * theta };
            g.interval_mass(lo, hi)
        })
        .collect()
}

/// Density, survival and hazard of a mixture at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixturePoint {
    pub log_density: f64,
    pub log_survival: f64,
    pub hazard: f64,
}

/// Evaluate all three functionals at `t >= 0` in one pass over the basis.
pub fn mixture_point(t: f64, w: &WeightVector) -> MixturePoint {
    let end = w.support_end();
    if t <= 0.0 {
        let h = w.omega[0] / w.theta;
        return MixturePoint {
            log_density: h.ln(),
            log_survival: 0.0,
            hazard: h,
        };
    }
    let ladder = ErlangLadder::new(t, w.theta, end);
    let mut lf = Vec::with_capacity(end);
    let mut ls = Vec::with_capacity(end);
    for (k, &om) in w.omega[..end].iter().enumerate() {
        if om > 0.0 {
            let lw = om.ln();
            lf.push(lw + ladder.log_pdf[k]);
            ls.push(lw + ladder.log_sf[k]);
        }
    }
    let log_density = log_sum_exp(&lf);
    let log_survival = log_sum_exp(&ls).min(0.0);
    MixturePoint {
        log_density,
        log_survival,
        hazard: (log_density - log_survival).exp(),
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be positive, got {t}"));
    }
    Ok(())
}

/// `log Σ ω_m Ga(t | m, θ)`.
pub fn mixture_log_density(t: f64, w: &WeightVector) -> Result<f64> {
    check_t(t)?;
    Ok(mixture_point(t, w).log_density)
}

/// `log Σ ω_m S_Ga(t | m, θ)`.
pub fn mixture_log_survival(t: f64, w: &WeightVector) -> Result<f64> {
    check_t(t)?;
    Ok(mixture_point(t, w).log_survival)
}

/// Hazard of the mixture together with the time-dependent weights
/// `ω★_m(t) = ω_m S_Ga(t|m,θ) / Σ ω_k S_Ga(t|k,θ)`.
pub fn mixture_hazard(t: f64, w: &WeightVector) -> Result<(f64, Vec<f64>)> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok((w.omega[0] / w.theta, w.omega.clone()));
    }
    let end = w.support_end();
    let ladder = ErlangLadder::new(t, w.theta, end);
    let mut log_tdw = vec![f64::NEG_INFINITY; w.m()];
    for k in 0..end {
        if w.omega[k] > 0.0 {
            log_tdw[k] = w.omega[k].ln() + ladder.log_sf[k];
        }
    }
    let norm = log_sum_exp(&log_tdw[..end]);
    let mut hazard = 0.0;
    let tdw: Vec<f64> = log_tdw
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            if l == f64::NEG_INFINITY {
                return 0.0;
            }
            let wk = (l - norm).exp();
            hazard += wk * (ladder.log_pdf[k] - ladder.log_sf[k]).exp();
            wk
        })
        .collect();
    Ok((hazard, tdw))
}

/// Right-censored log likelihood: densities for events, survival for censored.
pub fn censored_log_likelihood(data: &SurvivalDataset, w: &WeightVector) -> Result<f64> {
    let mut ll = 0.0;
    for r in data.records() {
        let p = mixture_point(r.time, w);
        ll += if r.event { p.log_density } else { p.log_survival };
    }
    Ok(ll)
}

/// Log kernel of one observation under the Erlang component `m`.
pub fn erlang_log_kernel(y: f64, event: bool, m: usize, theta: f64) -> Result<f64> {
    let p = ErlangParams::new(m, theta)?;
    if event {
        erlang_log_pdf(y, p)
    } else {
        erlang_log_sf(y, p)
    }
}

/// Likelihood of the augmented model: each observation enters through the
/// single component whose bin contains its latent value.
pub fn augmented_log_likelihood(
    data: &SurvivalDataset,
    phi: &[f64],
    m: usize,
    theta: f64,
) -> Result<f64> {
    if phi.len() != data.len() {
        return domain("latent vector length differs from the dataset size");
    }
    let mut ll = 0.0;
    for (r, &p) in data.records().iter().zip(phi) {
        let k = component_of(p, m, theta)?;
        ll += erlang_log_kernel(r.time, r.event, k, theta)?;
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_two_bins() {
        let w = weights_from_cdf(&CdfHandle::Exponential { mean: 1.0 }, 2, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((w.omega()[0] - (1.0 - e)).abs() < 1e-15);
        assert!((w.omega()[1] - e).abs() < 1e-15);
    }

    #[test]
    fn single_bin_takes_everything() {
        let w = weights_from_cdf(&CdfHandle::Exponential { mean: 3.0 }, 1, 0.2).unwrap();
        assert_eq!(w.omega(), &[1.0]);
    }

    #[test]
    fn point_mass_in_second_bin() {
        let g = CdfHandle::Mixture {
            alpha: 0.0,
            base: Box::new(CdfHandle::Exponential { mean: 1.0 }),
            atoms: vec![1.5],
        };
        let w = weights_from_cdf(&g, 3, 1.0).unwrap();
        assert_eq!(w.omega(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn component_edges() {
        assert_eq!(component_of(0.5, 5, 1.0).unwrap(), 1);
        assert_eq!(component_of(3.0, 5, 1.0).unwrap(), 3);
        assert_eq!(component_of(100.0, 5, 1.0).unwrap(), 5);
        assert_eq!(component_of(0.3, 10, 0.1).unwrap(), 3);
        assert_eq!(component_of(1e300, 5, 1e-10).unwrap(), 5);
        assert!(component_of(0.0, 5, 1.0).is_err());
    }

    #[test]
    fn single_component_functionals() {
        let w = WeightVector::new(2.0, vec![1.0]).unwrap();
        let t = 1.7;
        let lf = mixture_log_density(t, &w).unwrap();
        assert!((lf - (-(2.0f64).ln() - t / 2.0)).abs() < 1e-14);
        let w1 = WeightVector::new(1.0, vec![1.0]).unwrap();
        assert!((mixture_log_survival(t, &w1).unwrap() + t).abs() < 1e-14);
        let (h, tdw) = mixture_hazard(t, &w).unwrap();
        assert!((h - 0.5).abs() < 1e-14);
        assert_eq!(tdw, vec![1.0]);
    }

    #[test]
    fn equal_kernels_at_coincidence() {
        let w = WeightVector::new(1.0, vec![0.5, 0.5]).unwrap();
        assert!((mixture_log_density(1.0, &w).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hazard_at_origin() {
        let w = WeightVector::new(0.5, vec![0.2, 0.3, 0.5]).unwrap();
        let (h, tdw) = mixture_hazard(0.0, &w).unwrap();
        assert!((h - 0.4).abs() < 1e-15);
        assert_eq!(tdw, w.omega());
        let p = mixture_point(1e-9, &w);
        assert!((p.hazard - 0.4).abs() < 1e-6);
        assert!(p.log_survival.abs() < 1e-8);
    }

    #[test]
    fn empty_likelihood_is_zero() {
        let w = WeightVector::new(1.0, vec![1.0]).unwrap();
        let d = SurvivalDataset::default();
        assert_eq!(censored_log_likelihood(&d, &w).unwrap(), 0.0);
        assert_eq!(augmented_log_likelihood(&d, &[], 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn all_events_is_sum_of_log_densities() {
        let w = WeightVector::new(0.8, vec![0.3, 0.0, 0.7]).unwrap();
        let times = [0.4, 1.1, 2.9];
        let d = SurvivalDataset::from_times(&times, &[true; 3]).unwrap();
        let expected: f64 = times
            .iter()
            .map(|&t| mixture_log_density(t, &w).unwrap())
            .sum();
        assert_eq!(censored_log_likelihood(&d, &w).unwrap(), expected);
    }

    #[test]
    fn augmented_in_first_bin() {
        let theta = 0.7;
        let times = [0.3, 2.0, 4.1];
        let events = [true, false, true];
        let d = SurvivalDataset::from_times(&times, &events).unwrap();
        let phi = [0.1, 0.7, 0.2];
        let got = augmented_log_likelihood(&d, &phi, 4, theta).unwrap();
        let mut want = 0.0;
        for (&t, &e) in times.iter().zip(&events) {
            want += if e {
                -theta.ln() - t / theta
            } else {
                -t / theta
            };
        }
        assert!((got - want).abs() < 1e-13);
        // M = 1: everything is component 1 regardless of φ
        let far = [10.0, 20.0, 30.0];
        let got = augmented_log_likelihood(&d, &far, 1, theta).unwrap();
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn dataset_validation() {
        assert!(SurvivalDataset::from_times(&[1.0, 0.0], &[true, true]).is_err());
        let mixed = vec![
            Record {
                time: 1.0,
                event: true,
                group: Some(Group::Control),
            },
            Record {
                time: 2.0,
                event: true,
                group: None,
            },
        ];
        assert!(SurvivalDataset::new(mixed).is_err());
    }

    #[test]
    fn weight_validation() {
        assert!(WeightVector::new(1.0, vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(1.0, vec![]).is_err());
        assert!(WeightVector::new(0.0, vec![1.0]).is_err());
    }
}
