//! Posterior functionals: weight draws given chain states, pointwise
//! summaries of density, survival and hazard curves, group contrasts and
//! prior realizations.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::ddp::{sample_bvn, DdpDraw};
use crate::diagnostics::{mean, quantile, quantile_sorted};
use crate::dp::DpDraw;
use crate::error::{Error, Result};
use crate::mcmc::normalize_log_weights;
use crate::model::{bin_index, bin_masses, mixture_point, CdfHandle, Group, SurvivalDataset, WeightVector};
use crate::special::BivariateNormalParams;

/// Survival below this makes the hazard numerically meaningless.
pub const HAZARD_SURVIVAL_FLOOR: f64 = 1e-12;
/// Mass left in the stick-breaking remainder of a fresh DP draw.
const STICK_TOLERANCE: f64 = 1e-10;
const MAX_STICKS: usize = 1_000_000;

/// Conditional posterior of the mixing distribution given one DP chain
/// state: `G | φ ~ DP(α + n, (α Exp(ζ) + Σ δ_φ) / (α + n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GStarSpec {
    pub alpha: f64,
    pub zeta: f64,
    /// Distinct atoms and their multiplicities.
    pub atoms: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GStarSpec {
    pub fn from_draw(d: &DpDraw) -> Self {
        Self {
            alpha: d.alpha,
            zeta: d.zeta,
            atoms: d.clusters.atoms.clone(),
            counts: d.clusters.counts.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Updated total mass `α★ = α + n`.
    pub fn alpha_star(&self) -> f64 {
        self.alpha + self.n() as f64
    }

    pub fn base_weight(&self) -> f64 {
        self.alpha / self.alpha_star()
    }

    /// Weight of one observation's atom in the updated base measure.
    pub fn atom_weight(&self) -> f64 {
        1.0 / self.alpha_star()
    }

    /// Dirichlet parameters `α★ G₀★(B_m)`.
    pub fn dirichlet_params(&self, m: usize, theta: f64) -> Vec<f64> {
        let base = CdfHandle::Exponential { mean: self.zeta };
        let mut p: Vec<f64> = bin_masses(&base, m, theta)
            .into_iter()
            .map(|b| self.alpha * b)
            .collect();
        for (a, c) in self.atoms.iter().zip(&self.counts) {
            p[bin_index(*a, theta).min(m) - 1] += *c as f64;
        }
        p
    }
}

/// `log X` for `X ~ Ga(shape, 1)`, stable for small shapes.
fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("valid shape").sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid shape").sample(rng);
        let u = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

/// Dirichlet draw by normalized gamma variates in log space; zero
/// parameters get exactly zero weight.
pub fn sample_dirichlet<R: Rng + ?Sized>(params: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if params.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(Error::Domain("Dirichlet parameters must be finite and non-negative".into()));
    }
    let logs: Vec<f64> = params
        .iter()
        .map(|&a| {
            if a > 0.0 {
                log_gamma_variate(a, rng)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    if logs.iter().all(|l| *l == f64::NEG_INFINITY) {
        return Err(Error::Numeric("all Dirichlet parameters are zero".into()));
    }
    Ok(normalize_log_weights(&logs))
}

/// Draw `ω ~ Dir(α★ G₀★(B_1), ..., α★ G₀★(B_M))`.
pub fn sample_weights_posterior<R: Rng + ?Sized>(
    gstar: &GStarSpec,
    m: usize,
    theta: f64,
    rng: &mut R,
) -> Result<WeightVector> {
    if m == 0 || !(theta > 0.0) {
        return Err(Error::Domain("weights need M >= 1 and θ > 0".into()));
    }
    let w = sample_dirichlet(&gstar.dirichlet_params(m, theta), rng)?;
    WeightVector::new(theta, w)
}

/// One posterior weight vector per retained DP draw, in draw order.
pub fn dp_weight_draws<R: Rng + ?Sized>(draws: &[DpDraw], rng: &mut R) -> Result<Vec<WeightVector>> {
    draws
        .iter()
        .map(|d| sample_weights_posterior(&GStarSpec::from_draw(d), d.m, d.theta, rng))
        .collect()
}

/// Weight vectors of both groups induced by one realization of the shared
/// mixing distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupWeightPair {
    pub control: WeightVector,
    pub treatment: WeightVector,
}

impl GroupWeightPair {
    pub fn get(&self, g: Group) -> &WeightVector {
        match g {
            Group::Control => &self.control,
            Group::Treatment => &self.treatment,
        }
    }
}

/// Draw the shared mixing distribution given a DDP chain state and bin it
/// for both groups. The posterior is `W₀ G_new + Σ_j W_j δ_{φ★_j}` with
/// `(W₀, W_1..) ~ Dir(α, n_1, ..)` and `G_new ~ DP(α, LN₂(μ, Σ))`; `G_new`
/// is represented by stick breaking until the remaining mass is below
/// `1e-10`.
pub fn sample_group_weights<R: Rng + ?Sized>(
    draw: &DdpDraw,
    sigma: &[[f64; 2]; 2],
    rng: &mut R,
) -> Result<GroupWeightPair> {
    let base = BivariateNormalParams::new(draw.mu, *sigma)?;
    let mut params = vec![draw.alpha];
    params.extend(draw.clusters.counts.iter().map(|&c| c as f64));
    let w = sample_dirichlet(&params, rng)?;
    let mut omega = [vec![0.0; draw.m[0]], vec![0.0; draw.m[1]]];
    let mut add = |pair: [f64; 2], mass: f64| {
        for x in 0..2 {
            let b = bin_index(pair[x], draw.theta[x]).min(draw.m[x]);
            omega[x][b - 1] += mass;
        }
    };
    for (atom, wj) in draw.clusters.atoms.iter().zip(&w[1..]) {
        add(*atom, *wj);
    }
    if w[0] > 0.0 {
        let mut log_rest = 0.0f64;
        let mut sticks = 0;
        loop {
            let z = sample_bvn(base.mean, &base.cov, rng);
            let atom = [z[0].exp(), z[1].exp()];
            let u = 1.0 - rng.random::<f64>();
            let next = log_rest + u.ln() / draw.alpha;
            sticks += 1;
            if next.exp() < STICK_TOLERANCE || sticks >= MAX_STICKS {
                add(atom, w[0] * log_rest.exp());
                break;
            }
            add(atom, w[0] * (log_rest.exp() - next.exp()));
            log_rest = next;
        }
    }
    let [c, t] = omega;
    Ok(GroupWeightPair {
        control: WeightVector::from_masses(draw.theta[0], c)?,
        treatment: WeightVector::from_masses(draw.theta[1], t)?,
    })
}

/// One weight pair per retained DDP draw, in draw order.
pub fn ddp_weight_draws<R: Rng + ?Sized>(
    draws: &[DdpDraw],
    sigma: &[[f64; 2]; 2],
    rng: &mut R,
) -> Result<Vec<GroupWeightPair>> {
    draws.iter().map(|d| sample_group_weights(d, sigma, rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalKind {
    Density,
    Survival,
    Hazard,
}

impl FunctionalKind {
    pub const ALL: [FunctionalKind; 3] = [Self::Density, Self::Survival, Self::Hazard];

    pub fn name(self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Survival => "survival",
            Self::Hazard => "hazard",
        }
    }
}

/// Density, survival and hazard of one weight vector on a grid. Hazard
/// values where the survival is below `1e-12` are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub density: Vec<f64>,
    pub survival: Vec<f64>,
    pub hazard: Vec<f64>,
}

impl Curves {
    pub fn get(&self, kind: FunctionalKind) -> &[f64] {
        match kind {
            FunctionalKind::Density => &self.density,
            FunctionalKind::Survival => &self.survival,
            FunctionalKind::Hazard => &self.hazard,
        }
    }
}

pub fn evaluate_curves(w: &WeightVector, grid: &[f64]) -> Curves {
    let mut c = Curves {
        density: Vec::with_capacity(grid.len()),
        survival: Vec::with_capacity(grid.len()),
        hazard: Vec::with_capacity(grid.len()),
    };
    for &t in grid {
        let p = mixture_point(t, w);
        let s = p.log_survival.exp();
        c.density.push(p.log_density.exp());
        c.survival.push(s);
        c.hazard.push(if s < HAZARD_SURVIVAL_FLOOR { f64::NAN } else { p.hazard });
    }
    c
}

/// Evaluate curves for many weight vectors on all available cores; the
/// result is in input order.
pub fn evaluate_curves_many(weights: &[&WeightVector], grid: &[f64]) -> Vec<Curves> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    if threads <= 1 || weights.len() < 2 * threads {
        return weights.iter().map(|w| evaluate_curves(w, grid)).collect();
    }
    let chunk = weights.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = weights
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|w| evaluate_curves(w, grid)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("curve worker panicked"))
            .collect()
    })
}

/// Pointwise posterior mean and equal-tailed credible band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSummary {
    pub kind: FunctionalKind,
    pub level: f64,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Summarize per-draw curves pointwise. A grid point where any draw is NaN
/// is reported as NaN. With `level = 0` the band collapses onto the mean.
pub fn summarize_curves(
    grid: &[f64],
    curves: &[Curves],
    kind: FunctionalKind,
    level: f64,
) -> Result<FunctionalSummary> {
    if curves.is_empty() {
        return Err(Error::Config("cannot summarize an empty chain".into()));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Config(format!("credible level must lie in [0, 1), got {level}")));
    }
    let mut out = FunctionalSummary {
        kind,
        level,
        grid: grid.to_vec(),
        mean: Vec::with_capacity(grid.len()),
        lower: Vec::with_capacity(grid.len()),
        upper: Vec::with_capacity(grid.len()),
    };
    let mut column = Vec::with_capacity(curves.len());
    for k in 0..grid.len() {
        column.clear();
        column.extend(curves.iter().map(|c| c.get(kind)[k]));
        if column.iter().any(|v| v.is_nan()) {
            out.mean.push(f64::NAN);
            out.lower.push(f64::NAN);
            out.upper.push(f64::NAN);
            continue;
        }
        let m = mean(&column);
        out.mean.push(m);
        if level == 0.0 {
            out.lower.push(m);
            out.upper.push(m);
        } else {
            column.sort_by(f64::total_cmp);
            out.lower.push(quantile_sorted(&column, 0.5 - level / 2.0));
            out.upper.push(quantile_sorted(&column, 0.5 + level / 2.0));
        }
    }
    Ok(out)
}

/// Draw weights for every retained DP state and summarize one functional.
pub fn summarize_functional<R: Rng + ?Sized>(
    draws: &[DpDraw],
    kind: FunctionalKind,
    grid: &[f64],
    level: f64,
    rng: &mut R,
) -> Result<FunctionalSummary> {
    if draws.is_empty() {
        return Err(Error::Config("cannot summarize an empty chain".into()));
    }
    let weights = dp_weight_draws(draws, rng)?;
    let refs: Vec<&WeightVector> = weights.iter().collect();
    summarize_curves(grid, &evaluate_curves_many(&refs, grid), kind, level)
}

/// Number of weights above `threshold` (0.01 by convention).
pub fn effective_components(w: &WeightVector, threshold: f64) -> usize {
    w.omega().iter().filter(|&&o| o > threshold).count()
}

/// `n` equally spaced positive grid points up to 110% of the 99.5th
/// percentile of the observed times.
pub fn default_grid(data: &SurvivalDataset, n: usize) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Data("cannot build a grid from an empty dataset".into()));
    }
    let times: Vec<f64> = data.records().iter().map(|r| r.time).collect();
    Ok(linear_grid(1.1 * quantile(&times, 0.995), n))
}

/// `n` points `upper·k/n`, `k = 1..=n`.
pub fn linear_grid(upper: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| upper * k as f64 / n as f64).collect()
}

/// Posterior draws of `S_T(t) - S_C(t)` and `h_T(t) - h_C(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSummary {
    pub time_points: Vec<f64>,
    /// `survival_draws[k][d]`: draw `d` at time point `k`.
    pub survival_draws: Vec<Vec<f64>>,
    pub hazard_draws: Vec<Vec<f64>>,
    /// 2.5% and 97.5% percentiles per time point.
    pub survival_interval: Vec<(f64, f64)>,
    pub hazard_interval: Vec<(f64, f64)>,
}

pub fn contrast_at_times(pairs: &[GroupWeightPair], times: &[f64]) -> Result<ContrastSummary> {
    if pairs.is_empty() {
        return Err(Error::Config("cannot form contrasts from an empty chain".into()));
    }
    if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Config("contrast times must be positive".into()));
    }
    let n = times.len();
    let mut sd = vec![Vec::with_capacity(pairs.len()); n];
    let mut hd = vec![Vec::with_capacity(pairs.len()); n];
    for p in pairs {
        let c = evaluate_curves(&p.control, times);
        let t = evaluate_curves(&p.treatment, times);
        for k in 0..n {
            sd[k].push(t.survival[k] - c.survival[k]);
            hd[k].push(t.hazard[k] - c.hazard[k]);
        }
    }
    let interval = |v: &Vec<f64>| (quantile(v, 0.025), quantile(v, 0.975));
    Ok(ContrastSummary {
        time_points: times.to_vec(),
        survival_interval: sd.iter().map(interval).collect(),
        hazard_interval: hd.iter().map(interval).collect(),
        survival_draws: sd,
        hazard_draws: hd,
    })
}

/// A prior draw of the weights and its density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorRealization {
    pub weights: WeightVector,
    pub density: Vec<f64>,
}

/// Draw `ω ~ Dir(α G₀(B_1), ..., α G₀(B_M))` with `G₀ = Exp(mean ζ)`,
/// `count` times.
pub fn prior_realizations<R: Rng + ?Sized>(
    alpha: f64,
    zeta: f64,
    m: usize,
    theta: f64,
    count: usize,
    grid: &[f64],
    rng: &mut R,
) -> Result<Vec<PriorRealization>> {
    if !(alpha > 0.0 && zeta > 0.0 && theta > 0.0) || m == 0 {
        return Err(Error::Config("prior study needs α, ζ, θ > 0 and M >= 1".into()));
    }
    let params: Vec<f64> = bin_masses(&CdfHandle::Exponential { mean: zeta }, m, theta)
        .into_iter()
        .map(|b| alpha * b)
        .collect();
    (0..count)
        .map(|_| {
            let weights = WeightVector::new(theta, sample_dirichlet(&params, rng)?)?;
            let density = evaluate_curves(&weights, grid).density;
            Ok(PriorRealization { weights, density })
        })
        .collect()
}

/// `∫₀^upper |f_w(t) - g(t)| dt`, by piecewise double-exponential quadrature.
pub fn density_l1_distance<F: Fn(f64) -> f64>(w: &WeightVector, g: F, upper: f64) -> f64 {
    let pieces = 200;
    let h = upper / pieces as f64;
    (0..pieces)
        .map(|k| {
            let a = k as f64 * h;
            let f = |t: f64| (mixture_point(t, w).log_density.exp() - g(t)).abs();
            quadrature::integrate(f, a, a + h, 1e-12).integral
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::ClusterView;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draw(alpha: f64, atoms: Vec<f64>, counts: Vec<usize>) -> DpDraw {
        DpDraw {
            iteration: 0,
            theta: 1.0,
            m: 5,
            alpha,
            zeta: 2.0,
            clusters: ClusterView { atoms, counts },
        }
    }

    #[test]
    fn tiny_alpha_concentrates_on_atom_bin() {
        let d = draw(1e-300, vec![2.5], vec![4]);
        let w = sample_weights_posterior(&GStarSpec::from_draw(&d), 5, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(w.omega(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn prior_case_params() {
        let g = GStarSpec {
            alpha: 3.0,
            zeta: 2.0,
            atoms: vec![],
            counts: vec![],
        };
        let p = g.dirichlet_params(3, 1.0);
        assert!((p[0] - 3.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-14);
        assert!((p.iter().sum::<f64>() - 3.0).abs() < 1e-14);
        assert_eq!(g.base_weight(), 1.0);
    }

    #[test]
    fn zero_params_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(sample_dirichlet(&[0.0, 0.0], &mut rng).is_err());
        let w = sample_dirichlet(&[0.0, 1e-3, 2.0], &mut rng).unwrap();
        assert_eq!(w[0], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_draw_and_level_zero() {
        let d = draw(1.0, vec![1.5, 3.2], vec![2, 1]);
        let grid = linear_grid(6.0, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = summarize_functional(&[d.clone()], FunctionalKind::Density, &grid, 0.95, &mut rng).unwrap();
        assert_eq!(s.mean, s.lower);
        assert_eq!(s.mean, s.upper);
        let ds = vec![d.clone(), d.clone(), d];
        let s0 = summarize_functional(&ds, FunctionalKind::Survival, &grid, 0.0, &mut rng).unwrap();
        assert_eq!(s0.mean, s0.lower);
        assert!(summarize_functional(&[], FunctionalKind::Survival, &grid, 0.9, &mut rng).is_err());
    }

    #[test]
    fn effective_component_counts() {
        let e = WeightVector::new(1.0, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(effective_components(&e, 0.01), 1);
        let u = WeightVector::new(1.0, vec![1.0 / 200.0; 200]).unwrap();
        assert_eq!(effective_components(&u, 0.01), 0);
    }

    #[test]
    fn empty_prior_study() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = prior_realizations(1.0, 5.0, 50, 0.5, 0, &[1.0], &mut rng).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn identical_groups_give_symmetric_contrast() {
        let w = WeightVector::new(1.0, vec![0.3, 0.7]).unwrap();
        let pair = GroupWeightPair {
            control: w.clone(),
            treatment: w,
        };
        let c = contrast_at_times(&[pair], &[0.5, 2.0]).unwrap();
        assert_eq!(c.survival_interval, vec![(0.0, 0.0), (0.0, 0.0)]);
    }

    #[test]
    fn ddp_weights_sum_to_one() {
        let d = DdpDraw {
            iteration: 0,
            theta: [1.0, 2.0],
            m: [6, 4],
            alpha: 2.0,
            mu: [0.5, 1.0],
            clusters: ClusterView {
                atoms: vec![[1.5, 2.5], [4.0, 0.2]],
                counts: vec![3, 1],
            },
        };
        let sigma = [[1.0, 0.3], [0.3, 1.0]];
        let p = sample_group_weights(&d, &sigma, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for g in Group::BOTH {
            let s: f64 = p.get(g).omega().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(p.control.m(), 6);
        assert_eq!(p.treatment.theta(), 2.0);
    }
}
