//! Pieces shared by the one-group and two-group samplers: run schedules,
//! Pólya-urn cluster bookkeeping, the auxiliary-variable update for the DP
//! total mass, adaptive step sizes and the categorical update for `M`.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{
    erlang_log_kernels, erlang_log_pdf, erlang_log_sf, log_sum_exp, ErlangParams,
    NEGLIGIBLE_LOG_RATIO,
};

/// Upper bound on the number of Erlang components a proposal may imply.
/// Scales small enough to exceed it are treated as having zero prior mass.
pub const MAX_COMPONENTS: usize = 2_000_000;

/// Iterations, burn-in and thinning of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub iterations: usize,
    pub burn_in_fraction: f64,
    pub thin: usize,
}

impl Schedule {
    /// 20,000 iterations, 25% burn-in, every 8th kept.
    pub fn desk() -> Self {
        Self {
            iterations: 20_000,
            burn_in_fraction: 0.25,
            thin: 8,
        }
    }

    /// 100,000 iterations, 25% burn-in, every 38th kept.
    pub fn full() -> Self {
        Self {
            iterations: 100_000,
            burn_in_fraction: 0.25,
            thin: 38,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::Config(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thinning interval must be at least 1".into()));
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        (self.iterations as f64 * self.burn_in_fraction).floor() as usize
    }

    /// Whether the state after (0-based) iteration `it` is kept.
    pub fn keeps(&self, it: usize) -> bool {
        let b = self.burn_in();
        it >= b && (it - b + 1) % self.thin == 0
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in()) / self.thin
    }
}

/// Value type usable as a Pólya-urn atom; equality is bitwise.
pub trait Atom: Copy {
    fn key(&self) -> [u64; 2];
}

impl Atom for f64 {
    fn key(&self) -> [u64; 2] {
        [self.to_bits(), 0]
    }
}

impl Atom for [f64; 2] {
    fn key(&self) -> [u64; 2] {
        [self[0].to_bits(), self[1].to_bits()]
    }
}

/// Distinct latent values and their multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterView<A> {
    pub atoms: Vec<A>,
    pub counts: Vec<usize>,
}

impl<A: Atom> ClusterView<A> {
    pub fn from_values(values: &[A]) -> Self {
        let mut index: HashMap<[u64; 2], usize> = HashMap::new();
        let mut atoms = Vec::new();
        let mut counts = Vec::new();
        for v in values {
            match index.get(&v.key()) {
                Some(&j) => counts[j] += 1,
                None => {
                    index.insert(v.key(), atoms.len());
                    atoms.push(*v);
                    counts.push(1);
                }
            }
        }
        Self { atoms, counts }
    }

    pub fn n_star(&self) -> usize {
        self.atoms.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Mutable cluster labelling of `n` latent values.
#[derive(Debug, Clone)]
pub(crate) struct Clusters<A> {
    values: Vec<A>,
    counts: Vec<usize>,
    assign: Vec<usize>,
    free: Vec<usize>,
}

impl<A: Atom> Clusters<A> {
    pub fn from_values(values: &[A]) -> Self {
        let mut index: HashMap<[u64; 2], usize> = HashMap::new();
        let mut vals = Vec::new();
        let mut counts = Vec::new();
        let mut assign = Vec::with_capacity(values.len());
        for v in values {
            let j = *index.entry(v.key()).or_insert_with(|| {
                vals.push(*v);
                counts.push(0);
                vals.len() - 1
            });
            counts[j] += 1;
            assign.push(j);
        }
        Self {
            values: vals,
            counts,
            assign,
            free: Vec::new(),
        }
    }

    pub fn value_of(&self, i: usize) -> A {
        self.values[self.assign[i]]
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assign[i]
    }

    /// `(slot, value, count)` of every non-empty cluster, in slot order.
    pub fn active(&self) -> impl Iterator<Item = (usize, A, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j, self.values[j], c))
    }

    pub fn remove(&mut self, i: usize) {
        let j = self.assign[i];
        self.counts[j] -= 1;
        if self.counts[j] == 0 {
            self.free.push(j);
        }
        self.assign[i] = usize::MAX;
    }

    pub fn join(&mut self, i: usize, j: usize) {
        debug_assert!(self.counts[j] > 0);
        self.counts[j] += 1;
        self.assign[i] = j;
    }

    pub fn open(&mut self, i: usize, value: A) {
        let j = match self.free.pop() {
            Some(j) => {
                self.values[j] = value;
                j
            }
            None => {
                self.values.push(value);
                self.counts.push(0);
                self.values.len() - 1
            }
        };
        self.counts[j] = 1;
        self.assign[i] = j;
    }

    pub fn values(&self) -> Vec<A> {
        self.assign.iter().map(|&j| self.values[j]).collect()
    }

    /// Distinct atoms in order of first appearance among observations.
    pub fn view(&self) -> ClusterView<A> {
        let mut seen = vec![usize::MAX; self.values.len()];
        let mut atoms = Vec::new();
        let mut counts = Vec::new();
        for &j in &self.assign {
            if seen[j] == usize::MAX {
                seen[j] = atoms.len();
                atoms.push(self.values[j]);
                counts.push(0);
            }
            counts[seen[j]] += 1;
        }
        ClusterView { atoms, counts }
    }

    pub fn n_star(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Weight of the `Ga(a_α + n★, ·)` component in the auxiliary-variable
/// mixture for the DP total mass; `b_alpha` is a gamma scale.
pub fn alpha_mixture_weight(eta: f64, n: usize, n_star: usize, a_alpha: f64, b_alpha: f64) -> f64 {
    let rate = 1.0 / b_alpha - eta.ln();
    let odds = a_alpha + n_star as f64 - 1.0;
    odds / (n as f64 * rate + odds)
}

/// Draw `η ~ Beta(α + 1, n)` and then `α` from the two-component gamma
/// mixture.
pub fn sample_alpha<R: Rng + ?Sized>(
    alpha: f64,
    n: usize,
    n_star: usize,
    a_alpha: f64,
    b_alpha: f64,
    rng: &mut R,
) -> f64 {
    let eta: f64 = Beta::new(alpha + 1.0, n as f64)
        .expect("valid beta parameters")
        .sample(rng);
    let eta = eta.max(f64::MIN_POSITIVE);
    let rate = 1.0 / b_alpha - eta.ln();
    let pi = alpha_mixture_weight(eta, n, n_star, a_alpha, b_alpha);
    let shape = if rng.random::<f64>() < pi {
        a_alpha + n_star as f64
    } else {
        a_alpha + n_star as f64 - 1.0
    };
    let a: f64 = Gamma::new(shape, 1.0 / rate)
        .expect("valid gamma parameters")
        .sample(rng);
    a.max(f64::MIN_POSITIVE)
}

/// Draw from `inv-Ga(shape, scale)`, density `∝ x^{-shape-1} e^{-scale/x}`.
pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / scale)
        .expect("valid gamma parameters")
        .sample(rng);
    1.0 / g
}

/// Normalized probabilities from unnormalized log weights.
pub fn normalize_log_weights(logs: &[f64]) -> Vec<f64> {
    let norm = log_sum_exp(logs);
    logs.iter()
        .map(|l| {
            let d = l - norm;
            if d < NEGLIGIBLE_LOG_RATIO {
                0.0
            } else {
                d.exp()
            }
        })
        .collect()
}

/// Categorical draw from unnormalized log weights.
pub fn sample_log_categorical<R: Rng + ?Sized>(logs: &[f64], rng: &mut R) -> Result<usize> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric(
            "all categorical weights underflowed".into(),
        ));
    }
    let w: Vec<f64> = logs
        .iter()
        .map(|l| {
            let d = l - max;
            if d < NEGLIGIBLE_LOG_RATIO {
                0.0
            } else {
                d.exp()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, wk) in w.iter().enumerate() {
        if u < *wk {
            return Ok(k);
        }
        u -= wk;
    }
    // rounding: fall back to the last positive entry
    Ok(w.iter().rposition(|v| *v > 0.0).unwrap_or(0))
}

/// Candidate range `⌈M1/θ⌉..=⌈M2/θ⌉`, or `None` if it exceeds
/// [`MAX_COMPONENTS`].
pub fn m_range(m1: f64, m2: f64, theta: f64) -> Option<(usize, usize)> {
    let lo = (m1 / theta).ceil();
    let hi = (m2 / theta).ceil();
    if !(hi.is_finite()) || hi > MAX_COMPONENTS as f64 {
        return None;
    }
    Some(((lo as usize).max(1), (hi as usize).max(1)))
}

/// `log p(M | θ)` under the discrete uniform prior.
pub fn log_m_prior(m: usize, m1: f64, m2: f64, theta: f64) -> f64 {
    match m_range(m1, m2, theta) {
        Some((lo, hi)) if m >= lo && m <= hi => -((hi - lo + 1) as f64).ln(),
        _ => f64::NEG_INFINITY,
    }
}

/// Log gamma density up to its normalizing constant (shape/scale form).
pub fn log_gamma_kernel(x: f64, shape: f64, scale: f64) -> f64 {
    (shape - 1.0) * x.ln() - x / scale
}

/// One observation as seen by the `M` update: its time, event flag and the
/// uncapped bin index of its latent value.
#[derive(Debug, Clone, Copy)]
pub struct BinnedObs {
    pub time: f64,
    pub event: bool,
    pub bin: usize,
}

/// Augmented log likelihood for every `M` in `lo..=hi`. Observation `i`
/// uses component `min(bin_i, M)`, so only those with `bin_i >= lo` vary
/// across candidates.
pub fn log_lik_over_m(obs: &[BinnedObs], theta: f64, lo: usize, hi: usize) -> Vec<f64> {
    let width = hi - lo + 1;
    let mut out = vec![0.0; width];
    let mut constant = 0.0;
    for o in obs {
        if o.bin < lo {
            let p = ErlangParams::new(o.bin, theta).expect("valid Erlang parameters");
            constant += if o.event {
                erlang_log_pdf(o.time, p)
            } else {
                erlang_log_sf(o.time, p)
            }
            .unwrap_or(f64::NEG_INFINITY);
            continue;
        }
        let ks = erlang_log_kernels(o.time, theta, o.bin.min(hi), o.event);
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += ks[(lo + k).min(o.bin) - 1];
        }
    }
    for v in &mut out {
        *v += constant;
    }
    out
}

/// Proposal kernel `q(M★ = j | M_prev) ∝ 1 / ((j - M_prev)² + 1)` over
/// `lo..=hi`, returned as log probabilities.
pub fn m_jump_log_probs(m_prev: usize, lo: usize, hi: usize) -> Vec<f64> {
    let raw: Vec<f64> = (lo..=hi)
        .map(|j| {
            let d = j as f64 - m_prev as f64;
            -(d * d + 1.0).ln()
        })
        .collect();
    let norm = log_sum_exp(&raw);
    raw.into_iter().map(|l| l - norm).collect()
}

/// Batch-wise adaptation of a log-scale random-walk step toward a target
/// acceptance rate, with step changes `min(0.01, k^{-1/2})`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveStep {
    pub log_step: f64,
    pub target: f64,
    batch: usize,
    accepted: usize,
    proposed: usize,
    frozen: bool,
}

pub const ADAPT_BATCH: usize = 50;

impl AdaptiveStep {
    pub fn new(step: f64, target: f64) -> Self {
        Self {
            log_step: step.ln(),
            target,
            batch: 0,
            accepted: 0,
            proposed: 0,
            frozen: false,
        }
    }

    pub fn step(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn record(&mut self, accepted: bool) {
        if self.frozen {
            return;
        }
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
        if self.proposed == ADAPT_BATCH {
            self.batch += 1;
            let delta = (1.0 / (self.batch as f64).sqrt()).min(0.01);
            if (self.accepted as f64 / self.proposed as f64) > self.target {
                self.log_step += delta;
            } else {
                self.log_step -= delta;
            }
            self.accepted = 0;
            self.proposed = 0;
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

/// Proposal and acceptance counts of a Metropolis–Hastings move.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Metropolis–Hastings accept/reject on a log ratio.
pub(crate) fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}
