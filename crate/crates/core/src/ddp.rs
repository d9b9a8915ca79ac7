//! Marginal sampler for the two-group common-weights DDP Erlang mixture.
//!
//! Both groups share the DP weights; atom `ℓ` is a pair `(φ_C, φ_T)` drawn
//! from a bivariate lognormal centering law `LN₂(μ, Σ)` with `Σ` fixed and
//! `μ ~ N₂(μ̄, Σ₀)`. Group `x` has its own scale `θ_x` and component count
//! `M_x`; an observation in group `x` is explained by the bin of the `x`
//! coordinate of its latent pair.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dp::{draw_in_bin, PolyaUrnWeights};
use crate::error::{Error, Result};
use crate::mcmc::{
    accept, log_gamma_kernel, log_lik_over_m, log_m_prior, m_range, normalize_log_weights,
    sample_alpha, sample_log_categorical, std_normal, BinnedObs, ClusterView, Clusters,
    MoveStats, Schedule,
};
use crate::model::{bin_index, bin_masses, erlang_log_kernel, CdfHandle, Group, SurvivalDataset};
use crate::special::{
    bln_conditional, erlang_log_kernels, inv2, log_sum_exp, truncated_lognormal_sample, validate_cov,
    BivariateNormalParams, Coord, LogNormalParams,
};

/// Number of adaptation samples before the empirical covariance is used.
pub const ADAPT_WARMUP: usize = 100;
/// Weight of the empirical-covariance component of the θ-pair proposal.
const ADAPTIVE_WEIGHT: f64 = 0.95;

/// Prior hyperparameters; array entries are indexed by group (C = 0, T = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdpHyperparams {
    /// `θ_x ~ Ga(a_theta[x], b_theta[x])`, shape/scale.
    pub a_theta: [f64; 2],
    pub b_theta: [f64; 2],
    /// `M_x | θ_x ~ Unif(⌈m1[x]/θ_x⌉..⌈m2[x]/θ_x⌉)`.
    pub m1: [f64; 2],
    pub m2: [f64; 2],
    pub mu_bar: [f64; 2],
    pub sigma0: [[f64; 2]; 2],
    pub sigma: [[f64; 2]; 2],
    pub a_alpha: f64,
    pub b_alpha: f64,
}

impl DdpHyperparams {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.a_theta[0],
            self.a_theta[1],
            self.b_theta[0],
            self.b_theta[1],
            self.m1[0],
            self.m1[1],
            self.m2[0],
            self.m2[1],
            self.a_alpha,
            self.b_alpha,
        ];
        if scalars.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("hyperparameters must be positive".into()));
        }
        for g in Group::BOTH {
            let x = g.index();
            if self.m2[x] < self.m1[x] {
                return Err(Error::Config(format!(
                    "M range of group {} needs m2 >= m1",
                    g.label()
                )));
            }
        }
        if !(self.mu_bar[0].is_finite() && self.mu_bar[1].is_finite()) {
            return Err(Error::Config("mu_bar must be finite".into()));
        }
        validate_cov(&self.sigma0).map_err(|e| Error::Config(format!("sigma0: {e}")))?;
        validate_cov(&self.sigma).map_err(|e| Error::Config(format!("sigma: {e}")))?;
        Ok(())
    }
}

/// Which updates a sweep performs; everything is on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DdpMoves {
    pub phi: bool,
    pub mu: bool,
    pub alpha: bool,
    pub m: bool,
    pub theta: bool,
}

impl Default for DdpMoves {
    fn default() -> Self {
        Self {
            phi: true,
            mu: true,
            alpha: true,
            m: true,
            theta: true,
        }
    }
}

/// Running mean and covariance of `(log θ_C, log θ_T)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LogThetaMoments {
    pub count: usize,
    pub mean: [f64; 2],
    /// Sum of centered cross products.
    pub comoment: [[f64; 2]; 2],
}

impl LogThetaMoments {
    pub fn push(&mut self, x: [f64; 2]) {
        self.count += 1;
        let n = self.count as f64;
        let d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        self.mean[0] += d[0] / n;
        self.mean[1] += d[1] / n;
        let d2 = [x[0] - self.mean[0], x[1] - self.mean[1]];
        for a in 0..2 {
            for b in 0..2 {
                self.comoment[a][b] += d[a] * d2[b];
            }
        }
    }

    /// Sample covariance; zero with fewer than two samples.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        if self.count < 2 {
            return [[0.0; 2]; 2];
        }
        let k = 1.0 / (self.count - 1) as f64;
        let off = 0.5 * (self.comoment[0][1] + self.comoment[1][0]) * k;
        [[self.comoment[0][0] * k, off], [off, self.comoment[1][1] * k]]
    }
}

/// Lower Cholesky factor of a 2×2 positive semi-definite matrix, or `None`
/// when the matrix is numerically zero.
pub(crate) fn chol2_psd(a: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let tiny = 1e-300;
    if a[0][0] > tiny {
        let l00 = a[0][0].sqrt();
        let l10 = a[1][0] / l00;
        let l11 = (a[1][1] - l10 * l10).max(0.0).sqrt();
        Some([[l00, 0.0], [l10, l11]])
    } else if a[1][1] > tiny {
        Some([[0.0, 0.0], [0.0, a[1][1].sqrt()]])
    } else {
        None
    }
}

/// Draw from `N₂(mean, cov)`.
pub(crate) fn sample_bvn<R: Rng + ?Sized>(mean: [f64; 2], cov: &[[f64; 2]; 2], rng: &mut R) -> [f64; 2] {
    let z = [std_normal(rng), std_normal(rng)];
    match chol2_psd(cov) {
        Some(l) => [
            mean[0] + l[0][0] * z[0],
            mean[1] + l[1][0] * z[0] + l[1][1] * z[1],
        ],
        None => mean,
    }
}

fn coord(x: usize) -> Coord {
    if x == 0 {
        Coord::First
    } else {
        Coord::Second
    }
}

/// Full state of the two-group chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpChainState {
    pub theta: [f64; 2],
    pub m: [usize; 2],
    pub alpha: f64,
    pub mu: [f64; 2],
    pub phi: Vec<[f64; 2]>,
    pub adapt: LogThetaMoments,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DdpMoveStats {
    pub theta: MoveStats,
}

/// A retained chain state, with the latent pairs stored as clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpDraw {
    pub iteration: usize,
    pub theta: [f64; 2],
    pub m: [usize; 2],
    pub alpha: f64,
    pub mu: [f64; 2],
    pub clusters: ClusterView<[f64; 2]>,
}

/// Output of [`run_chain_ddp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpRun {
    pub draws: Vec<DdpDraw>,
    pub stats: DdpMoveStats,
    pub final_state: Option<DdpChainState>,
}

/// The two-group sampler.
#[derive(Debug, Clone)]
pub struct DdpSampler<'a> {
    data: &'a SurvivalDataset,
    groups: Vec<usize>,
    hp: DdpHyperparams,
    moves: DdpMoves,
    theta: [f64; 2],
    m: [usize; 2],
    alpha: f64,
    mu: [f64; 2],
    clusters: Clusters<[f64; 2]>,
    adapt: LogThetaMoments,
    adapting: bool,
    iteration: usize,
    stats: DdpMoveStats,
}

impl<'a> DdpSampler<'a> {
    /// Start from the default initial state: `θ_x` at its prior mean, `M_x`
    /// at the midpoint of its range, `α` at its prior mean, `μ = μ̄`; the
    /// observed coordinate of each latent pair is `y_i` clipped to
    /// `M_x θ_x (1 + 1e-6)`, the other coordinate is `exp(μ̄)`.
    pub fn new(data: &'a SurvivalDataset, hp: DdpHyperparams) -> Result<Self> {
        hp.validate()?;
        if !data.is_grouped() || Group::BOTH.iter().any(|&g| data.group_count(g) == 0) {
            return Err(Error::Config(
                "the DDP sampler needs both groups represented; use the one-group sampler".into(),
            ));
        }
        let mut theta = [0.0; 2];
        let mut m = [0; 2];
        for x in 0..2 {
            theta[x] = hp.a_theta[x] * hp.b_theta[x];
            let (lo, hi) = m_range(hp.m1[x], hp.m2[x], theta[x]).ok_or_else(|| {
                Error::Config("initial scale implies too many components".into())
            })?;
            m[x] = (lo + hi) / 2;
        }
        let phi = data
            .records()
            .iter()
            .map(|r| {
                let g = r.group.map_or(0, Group::index);
                let mut p = [hp.mu_bar[0].exp(), hp.mu_bar[1].exp()];
                p[g] = r.time.min(m[g] as f64 * theta[g] * (1.0 + 1e-6));
                p
            })
            .collect();
        let state = DdpChainState {
            theta,
            m,
            alpha: hp.a_alpha * hp.b_alpha,
            mu: hp.mu_bar,
            phi,
            adapt: LogThetaMoments::default(),
            iteration: 0,
        };
        Self::from_state(data, hp, state)
    }

    pub fn from_state(data: &'a SurvivalDataset, hp: DdpHyperparams, state: DdpChainState) -> Result<Self> {
        hp.validate()?;
        if !data.is_grouped() {
            return Err(Error::Config("the DDP sampler needs group labels".into()));
        }
        if state.phi.len() != data.len() {
            return Err(Error::Config("latent vector length differs from data".into()));
        }
        if state.phi.iter().flatten().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Config("latent values must be positive".into()));
        }
        let bad_theta = state.theta.iter().any(|t| !(*t > 0.0 && t.is_finite()));
        if bad_theta || state.m.contains(&0) || !(state.alpha > 0.0) {
            return Err(Error::Config("invalid chain state".into()));
        }
        let groups = data
            .records()
            .iter()
            .map(|r| r.group.map_or(0, Group::index))
            .collect();
        Ok(Self {
            data,
            groups,
            hp,
            moves: DdpMoves::default(),
            theta: state.theta,
            m: state.m,
            alpha: state.alpha,
            mu: state.mu,
            clusters: Clusters::from_values(&state.phi),
            adapt: state.adapt,
            adapting: true,
            iteration: state.iteration,
            stats: DdpMoveStats::default(),
        })
    }

    pub fn with_moves(mut self, moves: DdpMoves) -> Self {
        self.moves = moves;
        self
    }

    pub fn state(&self) -> DdpChainState {
        DdpChainState {
            theta: self.theta,
            m: self.m,
            alpha: self.alpha,
            mu: self.mu,
            phi: self.clusters.values(),
            adapt: self.adapt,
            iteration: self.iteration,
        }
    }

    pub fn clusters(&self) -> ClusterView<[f64; 2]> {
        self.clusters.view()
    }

    pub fn stats(&self) -> DdpMoveStats {
        self.stats
    }

    pub fn hyperparams(&self) -> &DdpHyperparams {
        &self.hp
    }

    /// Stop updating the proposal covariance.
    pub fn freeze_adaptation(&mut self) {
        self.adapting = false;
    }

    fn draw(&self) -> DdpDraw {
        DdpDraw {
            iteration: self.iteration,
            theta: self.theta,
            m: self.m,
            alpha: self.alpha,
            mu: self.mu,
            clusters: self.clusters.view(),
        }
    }

    fn base(&self) -> BivariateNormalParams {
        BivariateNormalParams {
            mean: self.mu,
            cov: self.hp.sigma,
        }
    }

    fn kernel_row(&self, i: usize) -> Vec<f64> {
        let r = &self.data.records()[i];
        let g = self.groups[i];
        erlang_log_kernels(r.time, self.theta[g], self.m[g], r.event)
    }

    /// Log bin masses of coordinate `g` given the other coordinate's value.
    fn log_bin_masses(&self, g: usize, other_value: f64) -> Result<Vec<f64>> {
        let cond = bln_conditional(&self.base(), coord(1 - g), other_value)?;
        Ok(bin_masses(&CdfHandle::LogNormal(cond), self.m[g], self.theta[g])
            .into_iter()
            .map(f64::ln)
            .collect())
    }

    /// Urn quantities for observation `i`, using the current value of the
    /// unobserved coordinate of its latent pair to form `q₀`.
    pub fn urn_weights(&self, i: usize) -> Result<PolyaUrnWeights<[f64; 2]>> {
        let g = self.groups[i];
        let log_k = self.kernel_row(i);
        let log_bins = self.log_bin_masses(g, self.clusters.value_of(i)[1 - g])?;
        let log_terms: Vec<f64> = log_k.iter().zip(&log_bins).map(|(k, b)| k + b).collect();
        let log_q0 = log_sum_exp(&log_terms);
        let own = self.clusters.cluster_of(i);
        let (mut atoms, mut counts, mut log_qj) = (Vec::new(), Vec::new(), Vec::new());
        for (slot, value, count) in self.clusters.active() {
            let c = if slot == own { count - 1 } else { count };
            if c == 0 {
                continue;
            }
            atoms.push(value);
            counts.push(c);
            log_qj.push(log_k[bin_index(value[g], self.theta[g]).min(self.m[g]) - 1]);
        }
        let mut logs = vec![self.alpha.ln() + log_q0];
        logs.extend(counts.iter().zip(&log_qj).map(|(c, q)| (*c as f64).ln() + q));
        Ok(PolyaUrnWeights {
            log_q0,
            omega: normalize_log_weights(&log_terms),
            choice: normalize_log_weights(&logs),
            atoms,
            counts,
            log_qj,
        })
    }

    /// One Gibbs update of the latent pair of observation `i`.
    pub fn update_phi_pair<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<[f64; 2]> {
        let g = self.groups[i];
        let o = 1 - g;
        let log_k = self.kernel_row(i);
        let log_bins = self.log_bin_masses(g, self.clusters.value_of(i)[o])?;
        let log_terms: Vec<f64> = log_k.iter().zip(&log_bins).map(|(k, b)| k + b).collect();
        let own = self.clusters.cluster_of(i);
        let mut logs = vec![self.alpha.ln() + log_sum_exp(&log_terms)];
        let mut slots = vec![usize::MAX];
        for (slot, value, count) in self.clusters.active() {
            let c = if slot == own { count - 1 } else { count };
            if c == 0 {
                continue;
            }
            let b = bin_index(value[g], self.theta[g]).min(self.m[g]);
            logs.push((c as f64).ln() + log_k[b - 1]);
            slots.push(slot);
        }
        let pick = sample_log_categorical(&logs, rng)
            .map_err(|_| Error::Numeric(format!("urn weights of observation {i} underflowed")))?;
        self.clusters.remove(i);
        if pick > 0 {
            self.clusters.join(i, slots[pick]);
            return Ok(self.clusters.value_of(i));
        }
        let marginal = LogNormalParams {
            mu: self.mu[o],
            sigma2: self.hp.sigma[o][o],
        };
        let other = marginal.inverse_cdf(rng.random::<f64>().clamp(1e-300, 1.0 - 1e-16));
        let other = other.clamp(f64::MIN_POSITIVE, f64::MAX);
        let cond = bln_conditional(&self.base(), coord(o), other)?;
        let fresh_bins: Vec<f64> = bin_masses(&CdfHandle::LogNormal(cond), self.m[g], self.theta[g])
            .into_iter()
            .zip(&log_k)
            .map(|(mass, k)| mass.ln() + k)
            .collect();
        let bin = sample_log_categorical(&fresh_bins, rng)? + 1;
        let u: f64 = rng.random();
        let own_coord = draw_in_bin(bin, self.m[g], self.theta[g], |lo, hi| {
            truncated_lognormal_sample(cond, lo, hi, u)
        })?;
        let mut pair = [0.0; 2];
        pair[g] = own_coord;
        pair[o] = other;
        self.clusters.open(i, pair);
        Ok(pair)
    }

    /// Mean and covariance of the normal full conditional of `μ`.
    pub fn mu_conditional(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let s0i = inv2(&self.hp.sigma0);
        let si = inv2(&self.hp.sigma);
        let mut n_star = 0.0;
        let mut sum_log = [0.0; 2];
        for (_, v, _) in self.clusters.active() {
            n_star += 1.0;
            sum_log[0] += v[0].ln();
            sum_log[1] += v[1].ln();
        }
        let mut prec = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                prec[a][b] = s0i[a][b] + n_star * si[a][b];
            }
        }
        let mut cov = inv2(&prec);
        let sym = 0.5 * (cov[0][1] + cov[1][0]);
        cov[0][1] = sym;
        cov[1][0] = sym;
        let mut lin = [0.0; 2];
        for a in 0..2 {
            for b in 0..2 {
                lin[a] += s0i[a][b] * self.hp.mu_bar[b] + si[a][b] * sum_log[b];
            }
        }
        let mean = [
            cov[0][0] * lin[0] + cov[0][1] * lin[1],
            cov[1][0] * lin[0] + cov[1][1] * lin[1],
        ];
        (mean, cov)
    }

    pub fn update_mu<R: Rng + ?Sized>(&mut self, rng: &mut R) -> [f64; 2] {
        let (mean, cov) = self.mu_conditional();
        self.mu = sample_bvn(mean, &cov, rng);
        self.mu
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

    fn binned(&self, g: Group) -> Vec<BinnedObs> {
        let x = g.index();
        self.data
            .records()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.groups[*i] == x)
            .map(|(i, r)| BinnedObs {
                time: r.time,
                event: r.event,
                bin: bin_index(self.clusters.value_of(i)[x], self.theta[x]),
            })
            .collect()
    }

    /// Candidate range start and full-conditional probabilities of `M_x`.
    pub fn m_conditional(&self, g: Group) -> Result<(usize, Vec<f64>)> {
        let x = g.index();
        let (lo, hi) = m_range(self.hp.m1[x], self.hp.m2[x], self.theta[x])
            .ok_or_else(|| Error::Numeric("M range too large".into()))?;
        let logs = log_lik_over_m(&self.binned(g), self.theta[x], lo, hi);
        Ok((lo, normalize_log_weights(&logs)))
    }

    pub fn update_m<R: Rng + ?Sized>(&mut self, g: Group, rng: &mut R) -> Result<usize> {
        let x = g.index();
        let (lo, hi) = m_range(self.hp.m1[x], self.hp.m2[x], self.theta[x])
            .ok_or_else(|| Error::Numeric("M range too large".into()))?;
        let logs = log_lik_over_m(&self.binned(g), self.theta[x], lo, hi);
        self.m[x] = lo + sample_log_categorical(&logs, rng)?;
        Ok(self.m[x])
    }

    /// Augmented log likelihood over all observations at the given scales.
    pub fn augmented_log_lik(&self, m: [usize; 2], theta: [f64; 2]) -> f64 {
        let mut ll = 0.0;
        for (i, r) in self.data.records().iter().enumerate() {
            let g = self.groups[i];
            let k = bin_index(self.clusters.value_of(i)[g], theta[g]).min(m[g]);
            ll += erlang_log_kernel(r.time, r.event, k, theta[g]).unwrap_or(f64::NEG_INFINITY);
        }
        ll
    }

    fn log_target(&self, theta: [f64; 2]) -> f64 {
        let mut lp = 0.0;
        for x in 0..2 {
            let lm = log_m_prior(self.m[x], self.hp.m1[x], self.hp.m2[x], theta[x]);
            if lm == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            lp += theta[x].ln() + log_gamma_kernel(theta[x], self.hp.a_theta[x], self.hp.b_theta[x]) + lm;
        }
        lp + self.augmented_log_lik(self.m, theta)
    }

    /// Log acceptance ratio of a θ-pair proposal: both Jacobians, both gamma
    /// priors, both `p(M_x | θ_x)` and the augmented likelihood.
    pub fn theta_log_ratio(&self, theta_star: [f64; 2]) -> f64 {
        let num = self.log_target(theta_star);
        if num == f64::NEG_INFINITY {
            return num;
        }
        num - self.log_target(self.theta)
    }

    /// Log-scale increment from the two-component proposal.
    fn propose_log_step<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let z = [std_normal(rng), std_normal(rng)];
        if self.adapt.count < ADAPT_WARMUP {
            let s = 0.01f64.sqrt();
            return [s * z[0], s * z[1]];
        }
        if rng.random::<f64>() < ADAPTIVE_WEIGHT {
            let c = self.adapt.covariance();
            let k = 2.38 * 2.38 / 2.0;
            let scaled = [[k * c[0][0], k * c[0][1]], [k * c[1][0], k * c[1][1]]];
            match chol2_psd(&scaled) {
                Some(l) => [l[0][0] * z[0], l[1][0] * z[0] + l[1][1] * z[1]],
                None => [0.0, 0.0],
            }
        } else {
            let s = (0.01f64 / 2.0).sqrt();
            [s * z[0], s * z[1]]
        }
    }

    /// Accept or reject a specific θ-pair proposal.
    pub fn step_theta_to<R: Rng + ?Sized>(&mut self, theta_star: [f64; 2], rng: &mut R) -> bool {
        let ok = accept(self.theta_log_ratio(theta_star), rng);
        if ok {
            self.theta = theta_star;
        }
        ok
    }

    pub fn update_theta_pair<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let d = self.propose_log_step(rng);
        let theta_star = [self.theta[0] * d[0].exp(), self.theta[1] * d[1].exp()];
        let ok = self.step_theta_to(theta_star, rng);
        self.stats.theta.record(ok);
        if self.adapting {
            self.adapt.push([self.theta[0].ln(), self.theta[1].ln()]);
        }
        ok
    }

    /// One full sweep: every latent pair, then `μ`, `α`, `M_C`, `M_T` and the
    /// θ pair.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.moves.phi {
            for i in 0..self.data.len() {
                self.update_phi_pair(i, rng)?;
            }
        }
        if self.moves.mu {
            self.update_mu(rng);
        }
        if self.moves.alpha {
            self.update_alpha(rng);
        }
        if self.moves.m {
            for g in Group::BOTH {
                self.update_m(g, rng)?;
            }
        }
        if self.moves.theta {
            self.update_theta_pair(rng);
        }
        self.iteration += 1;
        Ok(())
    }

    /// Run a schedule; the proposal covariance adapts during burn-in only.
    pub fn run<R: Rng + ?Sized>(&mut self, schedule: &Schedule, rng: &mut R) -> Result<DdpRun> {
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
        Ok(DdpRun {
            draws,
            stats: self.stats,
            final_state: Some(self.state()),
        })
    }
}

/// Initialize and run a two-group chain.
pub fn run_chain_ddp<R: Rng + ?Sized>(
    data: &SurvivalDataset,
    hp: &DdpHyperparams,
    schedule: &Schedule,
    rng: &mut R,
) -> Result<DdpRun> {
    schedule.validate()?;
    let mut sampler = DdpSampler::new(data, *hp)?;
    if schedule.iterations == 0 {
        return Ok(DdpRun {
            draws: Vec::new(),
            stats: DdpMoveStats::default(),
            final_state: None,
        });
    }
    sampler.run(schedule, rng)
}
