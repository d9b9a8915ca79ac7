//! Scalar kernels for the Erlang basis and the lognormal base measures.
//!
//! Everything is evaluated in log-space: shapes in the tens of thousands are
//! routine under the wide priors used for real data, and `Γ(m)` overflows long
//! before that.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Relative size below which a series term no longer changes the sum.
const SERIES_EPS: f64 = 1e-18;

/// Erlang (integer-shape gamma) parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangParams {
    shape: usize,
    scale: f64,
}

impl ErlangParams {
    pub fn new(shape: usize, scale: f64) -> Result<Self> {
        if shape == 0 {
            return domain("Erlang shape must be at least 1");
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return domain(format!("Erlang scale must be positive, got {scale}"));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> usize {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape as f64 * self.scale
    }
}

/// Lognormal law given by the mean and variance of `log t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma2: f64,
}

impl LogNormalParams {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() {
            return domain("lognormal location must be finite");
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return domain(format!("lognormal variance must be positive, got {sigma2}"));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    fn z(&self, t: f64) -> f64 {
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else if t == f64::INFINITY {
            f64::INFINITY
        } else {
            (t.ln() - self.mu) / self.sigma()
        }
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = self.z(t);
        -0.5 * z * z - t.ln() - 0.5 * (LN_2PI + self.sigma2.ln())
    }

    pub fn cdf(&self, t: f64) -> f64 {
        normal_cdf(self.z(t))
    }

    pub fn sf(&self, t: f64) -> f64 {
        normal_sf(self.z(t))
    }

    /// `P(lo < T <= hi)`, evaluated on the tail that avoids cancellation.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        normal_interval_mass(self.z(lo), self.z(hi))
    }

    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma2).exp()
    }

    pub fn inverse_cdf(&self, p: f64) -> f64 {
        (self.mu + self.sigma() * normal_quantile(p)).exp()
    }
}

/// Bivariate normal parameters; used on the log scale for the bivariate
/// lognormal base measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateNormalParams {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl BivariateNormalParams {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        validate_cov(&cov)?;
        if !(mean[0].is_finite() && mean[1].is_finite()) {
            return domain("bivariate mean must be finite");
        }
        Ok(Self { mean, cov })
    }

    /// Log density of the bivariate lognormal at a positive pair.
    pub fn ln_pdf_lognormal(&self, x: [f64; 2]) -> f64 {
        if x[0] <= 0.0 || x[1] <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let l = [x[0].ln(), x[1].ln()];
        self.ln_pdf_normal(l) - l[0] - l[1]
    }

    /// Log density of the bivariate normal.
    pub fn ln_pdf_normal(&self, x: [f64; 2]) -> f64 {
        let d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        let det = det2(&self.cov);
        let inv = inv2(&self.cov);
        let q = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1])
            + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
        -LN_2PI - 0.5 * det.ln() - 0.5 * q
    }

    /// Marginal lognormal law of one coordinate (0 or 1).
    pub fn marginal(&self, coord: usize) -> LogNormalParams {
        LogNormalParams {
            mu: self.mean[coord],
            sigma2: self.cov[coord][coord],
        }
    }
}

pub(crate) fn det2(a: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub(crate) fn inv2(a: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = det2(a);
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

pub(crate) fn validate_cov(cov: &[[f64; 2]; 2]) -> Result<()> {
    let finite = cov.iter().flatten().all(|v| v.is_finite());
    if !finite {
        return domain("covariance entries must be finite");
    }
    if (cov[0][1] - cov[1][0]).abs() > 1e-12 * (cov[0][1].abs() + 1.0) {
        return domain("covariance must be symmetric");
    }
    if !(cov[0][0] > 0.0 && cov[1][1] > 0.0 && det2(cov) > 0.0) {
        return domain("covariance must be positive definite");
    }
    Ok(())
}

/// `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Terms this far (in log units) below the largest one are dropped from
/// log-space sums; their relative contribution is below `1e-34`.
pub const NEGLIGIBLE_LOG_RATIO: f64 = -80.0;

/// `log Σ exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs
        .iter()
        .map(|&x| {
            let d = x - max;
            if d < NEGLIGIBLE_LOG_RATIO {
                0.0
            } else {
                d.exp()
            }
        })
        .sum();
    max + sum.ln()
}

/// `log(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `Φ(b) - Φ(a)` for `a <= b`.
pub fn normal_interval_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if a >= 0.0 {
        (normal_sf(a) - normal_sf(b)).max(0.0)
    } else if b <= 0.0 {
        (normal_cdf(b) - normal_cdf(a)).max(0.0)
    } else {
        (1.0 - normal_cdf(a) - normal_sf(b)).max(0.0)
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        return domain(format!("time must be a finite non-negative number, got {t}"));
    }
    Ok(())
}

/// `log Ga(t | m, θ)`.
pub fn erlang_log_pdf(t: f64, p: ErlangParams) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("Erlang density needs t > 0, got {t}"));
    }
    let m = p.shape as f64;
    Ok((m - 1.0) * t.ln() - t / p.scale - m * p.scale.ln() - ln_gamma(m))
}

/// Log of the Poisson pmf `e^{-x} x^k / k!` for `x > 0`.
fn ln_poisson_pmf(k: usize, x: f64) -> f64 {
    let k = k as f64;
    -x + k * x.ln() - ln_gamma(k + 1.0)
}

/// `log Q(m, t/θ)`, the log survival function of the Erlang law.
///
/// For `x = t/θ < m` the upper Poisson tail `P(N >= m)` is small-ish and
/// `log S = log1p(-P)`; otherwise the partial sum `Σ_{k<m}` is summed downward
/// from its largest term. Both series have positive terms only.
pub fn erlang_log_sf(t: f64, p: ErlangParams) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let x = t / p.scale;
    let m = p.shape;
    if m == 1 {
        return Ok(-x);
    }
    if x < m as f64 {
        // upper tail Σ_{k>=m} pmf(k), terms decrease from k = m
        let lead = ln_poisson_pmf(m, x);
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut k = m as f64;
        loop {
            k += 1.0;
            term *= x / k;
            sum += term;
            if term < SERIES_EPS * sum {
                break;
            }
        }
        Ok(log1m_exp((lead + sum.ln()).min(0.0)))
    } else {
        // Σ_{k<m} pmf(k), terms decrease going down from k = m - 1
        let lead = ln_poisson_pmf(m - 1, x);
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut k = (m - 1) as f64;
        while k > 0.0 {
            term *= k / x;
            sum += term;
            if term < SERIES_EPS * sum {
                break;
            }
            k -= 1.0;
        }
        Ok((lead + sum.ln()).min(0.0))
    }
}

/// Erlang hazard `f/S`. Extended continuously to `t = 0`: `1/θ` for `m = 1`,
/// zero otherwise.
pub fn erlang_hazard(t: f64, p: ErlangParams) -> Result<f64> {
    check_time(t)?;
    if p.shape == 1 {
        return Ok(1.0 / p.scale);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok((erlang_log_pdf(t, p)? - erlang_log_sf(t, p)?).exp())
}

/// Log densities and log survival values of the Erlang kernels `m = 1..=m_max`
/// at a single time, built by the Poisson recurrences in `m`.
///
/// `log_pdf[m-1]` and `log_sf[m-1]` hold the values for shape `m`.
#[derive(Debug, Clone)]
pub struct ErlangLadder {
    pub log_pdf: Vec<f64>,
    pub log_sf: Vec<f64>,
}

thread_local! {
    static LN_INT: std::cell::RefCell<Vec<f64>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Run `f` with a table whose entry `k` is `ln k`, for `k <= n`.
fn with_ln_table<T>(n: usize, f: impl FnOnce(&[f64]) -> T) -> T {
    LN_INT.with(|cell| {
        let mut table = cell.borrow_mut();
        if table.len() <= n {
            let start = table.len();
            table.extend((start..=n).map(|k| (k as f64).ln()));
        }
        f(&table)
    })
}

/// Log kernels `m = 1..=m_max` at one time: densities if `observed`,
/// survival values otherwise. Same values as [`ErlangLadder`] at lower cost.
pub fn erlang_log_kernels(t: f64, scale: f64, m_max: usize, observed: bool) -> Vec<f64> {
    if !observed {
        return ErlangLadder::new(t, scale, m_max).log_sf;
    }
    let mut out = Vec::with_capacity(m_max);
    if m_max == 0 {
        return out;
    }
    if t <= 0.0 {
        out.push(-scale.ln());
        out.resize(m_max, f64::NEG_INFINITY);
        return out;
    }
    let x = t / scale;
    let ln_x = x.ln();
    let mut ln_pdf = -x - scale.ln();
    with_ln_table(m_max, |ln_k| {
        for m in 1..=m_max {
            out.push(ln_pdf);
            ln_pdf += ln_x - ln_k[m];
        }
    });
    out
}

impl ErlangLadder {
    pub fn new(t: f64, scale: f64, m_max: usize) -> Self {
        let mut log_pdf = Vec::with_capacity(m_max);
        let mut log_sf = Vec::with_capacity(m_max);
        if m_max == 0 {
            return Self { log_pdf, log_sf };
        }
        if t <= 0.0 {
            log_pdf.push(-scale.ln());
            log_sf.push(0.0);
            log_pdf.resize(m_max, f64::NEG_INFINITY);
            log_sf.resize(m_max, 0.0);
            return Self { log_pdf, log_sf };
        }
        let x = t / scale;
        let ln_x = x.ln();
        let ln_scale = scale.ln();
        // pmf(k) = e^{-x} x^k / k!, pdf(m) = pmf(m-1)/θ, sf(m) = Σ_{k<m} pmf(k)
        let mut ln_pmf = -x;
        let mut ln_sf = -x;
        with_ln_table(m_max, |ln_k| {
            for m in 1..=m_max {
                log_pdf.push(ln_pmf - ln_scale);
                log_sf.push(ln_sf.min(0.0));
                ln_pmf += ln_x - ln_k[m];
                ln_sf = log_add_exp(ln_sf, ln_pmf);
            }
        });
        Self { log_pdf, log_sf }
    }

    /// Censoring-aware log kernel: the density for an observed event, the
    /// survival function for a censored one.
    pub fn log_kernel(&self, m: usize, observed: bool) -> f64 {
        if observed {
            self.log_pdf[m - 1]
        } else {
            self.log_sf[m - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.log_pdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_pdf.is_empty()
    }
}

/// Clamp `x` into the half-open interval `(lo, hi]`.
fn clamp_open_closed(x: f64, lo: f64, hi: f64) -> f64 {
    if x > hi {
        hi
    } else if x > lo {
        x
    } else {
        let up = lo.next_up();
        if up <= hi {
            up
        } else {
            hi
        }
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo >= 0.0 && lo.is_finite()) || hi.is_nan() || lo >= hi {
        return domain(format!("truncation interval ({lo}, {hi}] is invalid"));
    }
    Ok(())
}

/// Inverse-CDF draw from `Exp(mean ζ)` restricted to `(lo, hi]`.
pub fn truncated_exp_sample(zeta: f64, lo: f64, hi: f64, u: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return domain(format!("exponential mean must be positive, got {zeta}"));
    }
    check_interval(lo, hi)?;
    let u = u.clamp(0.0, 1.0);
    // memoryless: shift to zero, width d
    let width_mass = if hi.is_infinite() {
        -1.0
    } else {
        (-(hi - lo) / zeta).exp_m1()
    };
    let x = lo - zeta * (u * width_mass).ln_1p();
    Ok(clamp_open_closed(x, lo, hi))
}

/// Inverse-CDF draw from the lognormal law restricted to `(lo, hi]`.
pub fn truncated_lognormal_sample(p: LogNormalParams, lo: f64, hi: f64, u: f64) -> Result<f64> {
    check_interval(lo, hi)?;
    let u = u.clamp(0.0, 1.0);
    let sigma = p.sigma();
    let a = p.z(lo);
    let b = p.z(hi);
    let z = truncated_std_normal(a, b, u);
    Ok(clamp_open_closed((p.mu + sigma * z).exp(), lo, hi))
}

/// Standard normal restricted to `(a, b]`, by inversion on whichever tail
/// keeps the probabilities representable.
fn truncated_std_normal(a: f64, b: f64, u: f64) -> f64 {
    if a >= 0.0 {
        let qa = normal_sf(a);
        let qb = normal_sf(b);
        if qa > 1e-290 && qa - qb > qa * 1e-12 {
            let q = qa - u * (qa - qb);
            return -normal_quantile(q);
        }
        // far tail: Z - a is close to Exp(rate a)
        let rate = a.max(1.0);
        return a + exp_tail(rate, b - a, u);
    }
    if b <= 0.0 {
        let pa = normal_cdf(a);
        let pb = normal_cdf(b);
        if pb > 1e-290 && pb - pa > pb * 1e-12 {
            return normal_quantile(pa + u * (pb - pa));
        }
        let rate = (-b).max(1.0);
        return b - exp_tail(rate, b - a, 1.0 - u);
    }
    let pa = normal_cdf(a);
    let pb = normal_cdf(b);
    normal_quantile(pa + u * (pb - pa))
}

/// Exponential with the given rate truncated to `(0, width]`.
fn exp_tail(rate: f64, width: f64, u: f64) -> f64 {
    let m = if width.is_infinite() {
        -1.0
    } else {
        (-rate * width).exp_m1()
    };
    -(u * m).ln_1p() / rate
}

/// Which coordinate of a pair is being conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coord {
    First,
    Second,
}

impl Coord {
    pub fn index(self) -> usize {
        match self {
            Coord::First => 0,
            Coord::Second => 1,
        }
    }

    pub fn other(self) -> Coord {
        match self {
            Coord::First => Coord::Second,
            Coord::Second => Coord::First,
        }
    }
}

/// Conditional lognormal law of one coordinate of a bivariate lognormal,
/// given the value (on the natural scale) of the other.
pub fn bln_conditional(
    params: &BivariateNormalParams,
    given: Coord,
    given_value: f64,
) -> Result<LogNormalParams> {
    if !(given_value > 0.0 && given_value.is_finite()) {
        return domain(format!("conditioning value must be positive, got {given_value}"));
    }
    validate_cov(&params.cov)?;
    let g = given.index();
    let o = given.other().index();
    let s = &params.cov;
    let mu = params.mean[o] + s[o][g] / s[g][g] * (given_value.ln() - params.mean[g]);
    let var = s[o][o] - s[o][g] * s[g][o] / s[g][g];
    LogNormalParams::new(mu, var)
}
