//! Marginal (Pólya urn) sampler for the one-group DP-based Erlang mixture.
//!
//! The random distribution `G` is integrated out. The chain state holds the
//! common scale `θ`, the number of components `M`, the DP total mass `α`,
//! the mean `ζ` of the exponential centering distribution and one latent
//! value `φ_i` per observation; observation `i` is explained by the Erlang
//! component whose bin `((m-1)θ, mθ]` contains `φ_i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{
    accept, log_gamma_kernel, log_lik_over_m, log_m_prior, m_jump_log_probs, m_range,
    normalize_log_weights, sample_alpha, sample_inv_gamma, sample_log_categorical, std_normal,
    AdaptiveStep, BinnedObs, ClusterView, Clusters, MoveStats, Schedule,
};
use crate::model::{bin_index, bin_masses, erlang_log_kernel, CdfHandle, SurvivalDataset};
use crate::special::{erlang_log_kernels, log_sum_exp, truncated_exp_sample};

/// Target acceptance rate of the adaptive random-walk moves.
pub const TARGET_ACCEPTANCE: f64 = 0.44;
const INITIAL_STEP: f64 = 0.1;

/// Prior hyperparameters. Gamma and inverse-gamma laws use the
/// shape/scale convention: `θ ~ Ga(a_θ, b_θ)` has mean `a_θ b_θ`,
/// `ζ ~ inv-Ga(a_ζ, b_ζ)` has density `∝ ζ^{-a_ζ-1} e^{-b_ζ/ζ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpHyperparams {
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub a_zeta: f64,
    pub b_zeta: f64,
    pub a_theta: f64,
    pub b_theta: f64,
    /// `M | θ ~ Unif(⌈m1/θ⌉..⌈m2/θ⌉)`.
    pub m1: f64,
    pub m2: f64,
}

impl DpHyperparams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a_alpha,
            self.b_alpha,
            self.a_zeta,
            self.b_zeta,
            self.a_theta,
            self.b_theta,
            self.m1,
            self.m2,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("hyperparameters must be positive".into()));
        }
        if self.m2 < self.m1 {
            return Err(Error::Config(format!(
                "M range needs m2 >= m1, got m1 = {}, m2 = {}",
                self.m1, self.m2
            )));
        }
        Ok(())
    }
}

/// Which updates a sweep performs; everything is on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpMoves {
    pub phi: bool,
    pub zeta: bool,
    pub alpha: bool,
    pub m: bool,
    pub theta: bool,
    pub joint: bool,
}

impl Default for DpMoves {
    fn default() -> Self {
        Self {
            phi: true,
            zeta: true,
            alpha: true,
            m: true,
            theta: true,
            joint: true,
        }
    }
}

/// Full state of the one-group chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpChainState {
    pub theta: f64,
    pub m: usize,
    pub alpha: f64,
    pub zeta: f64,
    pub phi: Vec<f64>,
    /// Log-scale random-walk step of the θ move.
    pub rw_step: f64,
    /// Log-scale random-walk step of the joint (M, θ) move.
    pub joint_step: f64,
    pub iteration: usize,
}

/// Acceptance statistics per Metropolis–Hastings move.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DpMoveStats {
    pub theta: MoveStats,
    pub joint: MoveStats,
}

/// A retained chain state, with the latent values stored as clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpDraw {
    pub iteration: usize,
    pub theta: f64,
    pub m: usize,
    pub alpha: f64,
    pub zeta: f64,
    pub clusters: ClusterView<f64>,
}

/// Output of [`run_chain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpRun {
    pub draws: Vec<DpDraw>,
    pub stats: DpMoveStats,
    pub final_state: Option<DpChainState>,
}

/// Pólya-urn quantities of the `φ_i` full conditional, kept in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyaUrnWeights<A = f64> {
    /// `log q₀`: the kernel integrated against the centering distribution.
    pub log_q0: f64,
    /// Leave-one-out distinct atoms with their multiplicities `n_j⁻`.
    pub atoms: Vec<A>,
    pub counts: Vec<usize>,
    /// `log q_j`: the kernel at each atom's bin.
    pub log_qj: Vec<f64>,
    /// Bin probabilities `Ω_m` of a fresh draw (normalized).
    pub omega: Vec<f64>,
    /// Probability of a fresh draw `α q₀ / A`, then `n_j⁻ q_j / A`.
    pub choice: Vec<f64>,
}

/// Draw one value in bin `m` of `M` (scale `θ`) from a sampler that
/// inverts a CDF on `(lo, hi]`, then settle floating-point edge hits so
/// that the bin of the result is exactly `m`.
pub(crate) fn draw_in_bin<F>(m: usize, m_max: usize, theta: f64, draw: F) -> Result<f64>
where
    F: FnOnce(f64, f64) -> Result<f64>,
{
    let lo = (m - 1) as f64 * theta * (1.0 + 4.0 * crate::model::BIN_EDGE_EPS);
    let hi = if m == m_max {
        f64::INFINITY
    } else {
        m as f64 * theta
    };
    let mut x = draw(lo, hi)?;
    let cap = |b: usize| b.min(m_max);
    for _ in 0..64 {
        let b = cap(bin_index(x, theta));
        if b == m {
            return Ok(x);
        }
        x = if b < m { x.next_up() } else { x.next_down() };
    }
    Err(Error::Numeric(format!(
        "could not place a latent value in bin {m} at scale {theta}"
    )))
}

/// The one-group sampler: data, priors and a mutable chain state.
#[derive(Debug, Clone)]
pub struct DpSampler<'a> {
    data: &'a SurvivalDataset,
    hp: DpHyperparams,
    moves: DpMoves,
    theta: f64,
    m: usize,
    alpha: f64,
    zeta: f64,
    clusters: Clusters<f64>,
    rw: AdaptiveStep,
    joint: AdaptiveStep,
    iteration: usize,
    stats: DpMoveStats,
}

impl<'a> DpSampler<'a> {
    /// Start from the default initial state: `θ` at its prior mean, `M` at the
    /// midpoint of its range, `ζ` at the sample mean, `α` at its prior mean,
    /// and each `φ_i = y_i` clipped to `M θ (1 + 1e-6)`.
    pub fn new(data: &'a SurvivalDataset, hp: DpHyperparams) -> Result<Self> {
        hp.validate()?;
        if data.is_empty() {
            return Err(Error::Config("the DP sampler needs at least one observation".into()));
        }
        if data.is_grouped() {
            log::warn!("group labels are ignored by the one-group sampler");
        }
        let theta = hp.a_theta * hp.b_theta;
        let (lo, hi) = m_range(hp.m1, hp.m2, theta).ok_or_else(|| {
            Error::Config("initial scale implies too many components".into())
        })?;
        let m = (lo + hi) / 2;
        let cap = m as f64 * theta * (1.0 + 1e-6);
        let phi: Vec<f64> = data.records().iter().map(|r| r.time.min(cap)).collect();
        let zeta = data.records().iter().map(|r| r.time).sum::<f64>() / data.len() as f64;
        let state = DpChainState {
            theta,
            m,
            alpha: hp.a_alpha * hp.b_alpha,
            zeta,
            phi,
            rw_step: INITIAL_STEP,
            joint_step: INITIAL_STEP,
            iteration: 0,
        };
        Self::from_state(data, hp, state)
    }

    pub fn from_state(data: &'a SurvivalDataset, hp: DpHyperparams, state: DpChainState) -> Result<Self> {
        hp.validate()?;
        if state.phi.len() != data.len() {
            return Err(Error::Config("latent vector length differs from data".into()));
        }
        if state.phi.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Config("latent values must be positive".into()));
        }
        if !(state.theta > 0.0 && state.alpha > 0.0 && state.zeta > 0.0) || state.m == 0 {
            return Err(Error::Config("invalid chain state".into()));
        }
        Ok(Self {
            data,
            hp,
            moves: DpMoves::default(),
            theta: state.theta,
            m: state.m,
            alpha: state.alpha,
            zeta: state.zeta,
            clusters: Clusters::from_values(&state.phi),
            rw: AdaptiveStep::new(state.rw_step, TARGET_ACCEPTANCE),
            joint: AdaptiveStep::new(state.joint_step, TARGET_ACCEPTANCE),
            iteration: state.iteration,
            stats: DpMoveStats::default(),
        })
    }

    pub fn with_moves(mut self, moves: DpMoves) -> Self {
        self.moves = moves;
        self
    }

    pub fn state(&self) -> DpChainState {
        DpChainState {
            theta: self.theta,
            m: self.m,
            alpha: self.alpha,
            zeta: self.zeta,
            phi: self.clusters.values(),
            rw_step: self.rw.step(),
            joint_step: self.joint.step(),
            iteration: self.iteration,
        }
    }

    pub fn clusters(&self) -> ClusterView<f64> {
        self.clusters.view()
    }

    pub fn stats(&self) -> DpMoveStats {
        self.stats
    }

    pub fn hyperparams(&self) -> &DpHyperparams {
        &self.hp
    }

    fn draw(&self) -> DpDraw {
        DpDraw {
            iteration: self.iteration,
            theta: self.theta,
            m: self.m,
            alpha: self.alpha,
            zeta: self.zeta,
            clusters: self.clusters.view(),
        }
    }

    /// Stop adapting the random-walk step sizes.
    pub fn freeze_adaptation(&mut self) {
        self.rw.freeze();
        self.joint.freeze();
    }

    fn centering(&self) -> CdfHandle {
        CdfHandle::Exponential { mean: self.zeta }
    }

    /// Log kernels of observation `i` for components `1..=M` at the current θ.
    fn kernel_row(&self, i: usize) -> Vec<f64> {
        let r = &self.data.records()[i];
        erlang_log_kernels(r.time, self.theta, self.m, r.event)
    }

    /// Urn quantities for observation `i` given all other latent values.
    pub fn urn_weights(&self, i: usize) -> PolyaUrnWeights {
        let log_bins: Vec<f64> = bin_masses(&self.centering(), self.m, self.theta)
            .into_iter()
            .map(f64::ln)
            .collect();
        self.urn_weights_with(i, &self.kernel_row(i), &log_bins)
    }

    fn urn_weights_with(&self, i: usize, log_k: &[f64], log_bins: &[f64]) -> PolyaUrnWeights {
        let log_terms: Vec<f64> = log_k.iter().zip(log_bins).map(|(k, g)| k + g).collect();
        let log_q0 = log_sum_exp(&log_terms);
        let own = self.clusters.cluster_of(i);
        let mut atoms = Vec::new();
        let mut counts = Vec::new();
        let mut log_qj = Vec::new();
        for (slot, value, count) in self.clusters.active() {
            let c = if slot == own { count - 1 } else { count };
            if c == 0 {
                continue;
            }
            atoms.push(value);
            counts.push(c);
            let b = bin_index(value, self.theta).min(self.m);
            log_qj.push(log_k[b - 1]);
        }
        let mut logs = Vec::with_capacity(atoms.len() + 1);
        logs.push(self.alpha.ln() + log_q0);
        for (c, q) in counts.iter().zip(&log_qj) {
            logs.push((*c as f64).ln() + q);
        }
        PolyaUrnWeights {
            log_q0,
            omega: normalize_log_weights(&log_terms),
            choice: normalize_log_weights(&logs),
            atoms,
            counts,
            log_qj,
        }
    }

    /// One Gibbs update of `φ_i`.
    pub fn update_phi_i<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<f64> {
        let log_bins: Vec<f64> = bin_masses(&self.centering(), self.m, self.theta)
            .into_iter()
            .map(f64::ln)
            .collect();
        let row = self.kernel_row(i);
        self.update_phi_with(i, &row, &log_bins, rng)
    }

    fn update_phi_with<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        log_k: &[f64],
        log_bins: &[f64],
        rng: &mut R,
    ) -> Result<f64> {
        let own = self.clusters.cluster_of(i);
        // choice weights over (fresh, active clusters other than a singleton i)
        let mut logs = Vec::new();
        let mut slots = Vec::new();
        let log_terms: Vec<f64> = log_k.iter().zip(log_bins).map(|(k, g)| k + g).collect();
        logs.push(self.alpha.ln() + log_sum_exp(&log_terms));
        slots.push(usize::MAX);
        for (slot, value, count) in self.clusters.active() {
            let c = if slot == own { count - 1 } else { count };
            if c == 0 {
                continue;
            }
            let b = bin_index(value, self.theta).min(self.m);
            logs.push((c as f64).ln() + log_k[b - 1]);
            slots.push(slot);
        }
        let pick = sample_log_categorical(&logs, rng)
            .map_err(|_| Error::Numeric(format!("urn weights of observation {i} underflowed")))?;
        self.clusters.remove(i);
        if pick == 0 {
            let bin = sample_log_categorical(&log_terms, rng)? + 1;
            let zeta = self.zeta;
            let u: f64 = rng.random();
            let x = draw_in_bin(bin, self.m, self.theta, |lo, hi| {
                truncated_exp_sample(zeta, lo, hi, u)
            })?;
            self.clusters.open(i, x);
            Ok(x)
        } else {
            self.clusters.join(i, slots[pick]);
            Ok(self.clusters.value_of(i))
        }
    }

    fn sweep_phi<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let log_bins: Vec<f64> = bin_masses(&self.centering(), self.m, self.theta)
            .into_iter()
            .map(f64::ln)
            .collect();
        for i in 0..self.data.len() {
            let row = self.kernel_row(i);
            self.update_phi_with(i, &row, &log_bins, rng)?;
        }
        Ok(())
    }

    /// Conjugate draw `ζ ~ inv-Ga(a_ζ + n★, b_ζ + Σ φ★_j)` over distinct atoms.
    pub fn update_zeta<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let (shape, scale) = self.zeta_conditional();
        self.zeta = sample_inv_gamma(shape, scale, rng);
        self.zeta
    }

    /// Shape and scale of the inverse-gamma full conditional of `ζ`.
    pub fn zeta_conditional(&self) -> (f64, f64) {
        let mut n_star = 0usize;
        let mut sum = 0.0;
        for (_, v, _) in self.clusters.active() {
            n_star += 1;
            sum += v;
        }
        (self.hp.a_zeta + n_star as f64, self.hp.b_zeta + sum)
    }

    pub fn update_alpha<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.alpha = sample_alpha(
            self.alpha,
            self.data.len(),
            self.clusters.n_star(),
            self.hp.a_alpha,
            self.hp.b_alpha,
            rng,
        );
        self.alpha
    }

    fn binned(&self, theta: f64) -> Vec<BinnedObs> {
        self.data
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| BinnedObs {
                time: r.time,
                event: r.event,
                bin: bin_index(self.clusters.value_of(i), theta),
            })
            .collect()
    }

    /// Candidate range and full-conditional probabilities of `M`.
    pub fn m_conditional(&self) -> Result<(usize, Vec<f64>)> {
        let (lo, hi) = m_range(self.hp.m1, self.hp.m2, self.theta)
            .ok_or_else(|| Error::Numeric("M range too large".into()))?;
        let logs = log_lik_over_m(&self.binned(self.theta), self.theta, lo, hi);
        Ok((lo, normalize_log_weights(&logs)))
    }

    pub fn update_m<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let (lo, hi) = m_range(self.hp.m1, self.hp.m2, self.theta)
            .ok_or_else(|| Error::Numeric("M range too large".into()))?;
        let logs = log_lik_over_m(&self.binned(self.theta), self.theta, lo, hi);
        self.m = lo + sample_log_categorical(&logs, rng)?;
        Ok(self.m)
    }

    /// Augmented log likelihood at `(M, θ)` with the current latent values.
    pub fn augmented_log_lik(&self, m: usize, theta: f64) -> f64 {
        let mut ll = 0.0;
        for (i, r) in self.data.records().iter().enumerate() {
            let k = bin_index(self.clusters.value_of(i), theta).min(m);
            ll += erlang_log_kernel(r.time, r.event, k, theta).unwrap_or(f64::NEG_INFINITY);
        }
        ll
    }

    fn log_prior_theta(&self, theta: f64) -> f64 {
        log_gamma_kernel(theta, self.hp.a_theta, self.hp.b_theta)
    }

    /// Log acceptance ratio of the θ random walk for a given proposal,
    /// including the log-scale Jacobian `θ★/θ` and the prior `p(M | θ)`.
    pub fn theta_log_ratio(&self, theta_star: f64) -> f64 {
        let lp_m_star = log_m_prior(self.m, self.hp.m1, self.hp.m2, theta_star);
        if lp_m_star == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let num = theta_star.ln()
            + self.log_prior_theta(theta_star)
            + lp_m_star
            + self.augmented_log_lik(self.m, theta_star);
        let den = self.theta.ln()
            + self.log_prior_theta(self.theta)
            + log_m_prior(self.m, self.hp.m1, self.hp.m2, self.theta)
            + self.augmented_log_lik(self.m, self.theta);
        num - den
    }

    /// Accept or reject a specific θ proposal.
    pub fn step_theta_to<R: Rng + ?Sized>(&mut self, theta_star: f64, rng: &mut R) -> bool {
        let ok = accept(self.theta_log_ratio(theta_star), rng);
        if ok {
            self.theta = theta_star;
        }
        ok
    }

    pub fn update_theta_rw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let theta_star = self.theta * (self.rw.step() * std_normal(rng)).exp();
        let ok = self.step_theta_to(theta_star, rng);
        self.stats.theta.record(ok);
        self.rw.record(ok);
        ok
    }

    /// Log acceptance ratio of the joint move to `(M★, θ★)`, with the
    /// inverse-quadratic `M` proposal correction.
    pub fn joint_log_ratio(&self, m_star: usize, theta_star: f64) -> f64 {
        let hp = &self.hp;
        let (Some((lo_s, hi_s)), Some((lo, hi))) = (
            m_range(hp.m1, hp.m2, theta_star),
            m_range(hp.m1, hp.m2, self.theta),
        ) else {
            return f64::NEG_INFINITY;
        };
        if m_star < lo_s || m_star > hi_s {
            return f64::NEG_INFINITY;
        }
        let q_fwd = m_jump_log_probs(self.m, lo_s, hi_s)[m_star - lo_s];
        let q_rev = if self.m >= lo && self.m <= hi {
            m_jump_log_probs(m_star, lo, hi)[self.m - lo]
        } else {
            f64::NEG_INFINITY
        };
        let num = theta_star.ln()
            + self.log_prior_theta(theta_star)
            + log_m_prior(m_star, hp.m1, hp.m2, theta_star)
            + self.augmented_log_lik(m_star, theta_star)
            + q_rev;
        let den = self.theta.ln()
            + self.log_prior_theta(self.theta)
            + log_m_prior(self.m, hp.m1, hp.m2, self.theta)
            + self.augmented_log_lik(self.m, self.theta)
            + q_fwd;
        num - den
    }

    pub fn update_joint<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        let theta_star = self.theta * (self.joint.step() * std_normal(rng)).exp();
        let ok = match m_range(self.hp.m1, self.hp.m2, theta_star) {
            None => false,
            Some((lo, hi)) => {
                let q = m_jump_log_probs(self.m, lo, hi);
                let m_star = lo + sample_log_categorical(&q, rng)?;
                let ok = accept(self.joint_log_ratio(m_star, theta_star), rng);
                if ok {
                    self.theta = theta_star;
                    self.m = m_star;
                }
                ok
            }
        };
        self.stats.joint.record(ok);
        self.joint.record(ok);
        Ok(ok)
    }

    /// One full sweep: every `φ_i`, then `ζ`, `α`, `M`, θ and the joint move.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.moves.phi {
            self.sweep_phi(rng)?;
        }
        if self.moves.zeta {
            self.update_zeta(rng);
        }
        if self.moves.alpha {
            self.update_alpha(rng);
        }
        if self.moves.m {
            self.update_m(rng)?;
        }
        if self.moves.theta {
            self.update_theta_rw(rng);
        }
        if self.moves.joint {
            self.update_joint(rng)?;
        }
        self.iteration += 1;
        Ok(())
    }

    /// Run a schedule, adapting step sizes during burn-in only.
    pub fn run<R: Rng + ?Sized>(&mut self, schedule: &Schedule, rng: &mut R) -> Result<DpRun> {
        schedule.validate()?;
        let burn = schedule.burn_in();
        let mut draws = Vec::with_capacity(schedule.retained());
        for it in 0..schedule.iterations {
            if it == burn {
                self.freeze_adaptation();
            }
            self.sweep(rng)?;
            if schedule.keeps(it) {
                draws.push(self.draw());
            }
        }
        Ok(DpRun {
            draws,
            stats: self.stats,
            final_state: Some(self.state()),
        })
    }
}

/// Initialize and run a one-group chain.
pub fn run_chain<R: Rng + ?Sized>(
    data: &SurvivalDataset,
    hp: &DpHyperparams,
    schedule: &Schedule,
    rng: &mut R,
) -> Result<DpRun> {
    schedule.validate()?;
    if schedule.iterations == 0 {
        return Ok(DpRun {
            draws: Vec::new(),
            stats: DpMoveStats::default(),
            final_state: None,
        });
    }
    DpSampler::new(data, *hp)?.run(schedule, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hp() -> DpHyperparams {
        DpHyperparams {
            a_alpha: 2.0,
            b_alpha: 1.0,
            a_zeta: 3.0,
            b_zeta: 4.0,
            a_theta: 1.0,
            b_theta: 1.0,
            m1: 13.0,
            m2: 39.0,
        }
    }

    fn toy() -> SurvivalDataset {
        SurvivalDataset::from_times(&[0.8, 2.5, 4.0], &[true, false, true]).unwrap()
    }

    #[test]
    fn zeta_uses_distinct_atoms() {
        let data = toy();
        let state = DpChainState {
            theta: 1.0,
            m: 20,
            alpha: 1.0,
            zeta: 1.0,
            phi: vec![2.0, 2.0, 2.0],
            rw_step: 0.1,
            joint_step: 0.1,
            iteration: 0,
        };
        let s = DpSampler::from_state(&data, hp(), state).unwrap();
        assert_eq!(s.zeta_conditional(), (4.0, 6.0));
    }

    #[test]
    fn zeta_closed_form() {
        let data = SurvivalDataset::from_times(&[1.0, 3.0], &[true, true]).unwrap();
        let state = DpChainState {
            theta: 1.0,
            m: 20,
            alpha: 1.0,
            zeta: 1.0,
            phi: vec![1.0, 3.0],
            rw_step: 0.1,
            joint_step: 0.1,
            iteration: 0,
        };
        let s = DpSampler::from_state(&data, hp(), state).unwrap();
        assert_eq!(s.zeta_conditional(), (5.0, 8.0));
    }

    #[test]
    fn single_observation_always_fresh() {
        let data = SurvivalDataset::from_times(&[1.2], &[true]).unwrap();
        let s = DpSampler::new(&data, hp()).unwrap();
        let u = s.urn_weights(0);
        assert!(u.atoms.is_empty());
        assert_eq!(u.choice, vec![1.0]);
    }

    #[test]
    fn single_m_candidate() {
        let data = toy();
        let hp = DpHyperparams {
            m1: 20.0,
            m2: 20.0,
            ..hp()
        };
        let mut s = DpSampler::new(&data, hp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (lo, p) = s.m_conditional().unwrap();
        assert_eq!((lo, p), (20, vec![1.0]));
        assert_eq!(s.update_m(&mut rng).unwrap(), 20);
    }

    #[test]
    fn flat_m_when_all_in_first_bin() {
        let data = toy();
        let state = DpChainState {
            theta: 1.0,
            m: 20,
            alpha: 1.0,
            zeta: 1.0,
            phi: vec![0.5, 0.2, 0.9],
            rw_step: 0.1,
            joint_step: 0.1,
            iteration: 0,
        };
        let s = DpSampler::from_state(&data, hp(), state).unwrap();
        let (_, p) = s.m_conditional().unwrap();
        let u = 1.0 / p.len() as f64;
        assert!(p.iter().all(|x| (x - u).abs() < 1e-12));
    }

    #[test]
    fn out_of_range_theta_rejected() {
        let data = toy();
        let s = DpSampler::new(&data, hp()).unwrap();
        // current M = 26 at θ = 1; at θ = 0.1 the range starts at 130
        assert_eq!(s.theta_log_ratio(0.1), f64::NEG_INFINITY);
        assert_eq!(s.theta_log_ratio(s.state().theta), 0.0);
    }

    #[test]
    fn seeded_runs_repeat() {
        let data = toy();
        let sched = Schedule {
            iterations: 200,
            burn_in_fraction: 0.5,
            thin: 5,
        };
        let a = run_chain(&data, &hp(), &sched, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = run_chain(&data, &hp(), &sched, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.draws.len(), 20);
        let empty = Schedule {
            iterations: 0,
            ..sched
        };
        let e = run_chain(&data, &hp(), &empty, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(e.draws.is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        let data = toy();
        let bad = DpHyperparams { m2: 5.0, ..hp() };
        assert!(DpSampler::new(&data, bad).is_err());
        let empty = SurvivalDataset::default();
        assert!(DpSampler::new(&empty, hp()).is_err());
    }
}
