mod common;

use common::{integrate, ks_critical_99, ks_statistic, rel_err, rng};
use erlmix::special::*;
use proptest::prelude::*;
use rand::Rng;

const ORACLE: &str = include_str!("data/erlang_oracle.csv");

struct OracleRow {
    m: usize,
    theta: f64,
    t: f64,
    log_pdf: f64,
    log_sf: f64,
    hazard: f64,
}

fn oracle_rows() -> Vec<OracleRow> {
    let mut rdr = csv::Reader::from_reader(ORACLE.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            OracleRow {
                m: r[0].parse().unwrap(),
                theta: f(1),
                t: f(2),
                log_pdf: f(3),
                log_sf: f(4),
                hazard: f(5),
            }
        })
        .collect()
}

// Log values are compared absolutely: an absolute error in log space is the
// relative error of the density or survival value itself.
#[test]
fn kernels_match_high_precision_table() {
    let rows = oracle_rows();
    assert_eq!(rows.len(), 352);
    for r in rows {
        let p = ErlangParams::new(r.m, r.theta).unwrap();
        let lp = erlang_log_pdf(r.t, p).unwrap();
        let ls = erlang_log_sf(r.t, p).unwrap();
        let h = erlang_hazard(r.t, p).unwrap();
        let ctx = format!("m={} θ={} t={}", r.m, r.theta, r.t);
        assert!((lp - r.log_pdf).abs() < 1e-8, "log pdf {ctx}: {lp} vs {}", r.log_pdf);
        assert!((ls - r.log_sf).abs() < 1e-8, "log sf {ctx}: {ls} vs {}", r.log_sf);
        assert!(rel_err(h, r.hazard) < 1e-8, "hazard {ctx}: {h} vs {}", r.hazard);
    }
}

#[test]
fn extreme_shape_density() {
    let row = oracle_rows()
        .into_iter()
        .find(|r| r.m == 10_000 && r.theta == 0.5 && r.t == 5000.0)
        .unwrap();
    let v = erlang_log_pdf(5000.0, ErlangParams::new(10_000, 0.5).unwrap()).unwrap();
    assert!(rel_err(v, row.log_pdf) < 1e-8, "{v} vs {}", row.log_pdf);
}

#[test]
fn tail_matches_quadrature() {
    let p = ErlangParams::new(400, 0.5).unwrap();
    let tail = integrate(|s| erlang_log_pdf(s, p).unwrap().exp(), 250.0, 600.0, 50);
    let ls = erlang_log_sf(250.0, p).unwrap();
    assert!(rel_err(ls.exp(), tail) < 1e-8, "{} vs {tail}", ls.exp());
}

#[test]
fn densities_integrate_to_one() {
    for m in [1usize, 2, 17, 500] {
        for theta in [0.01, 1.0, 50.0] {
            let p = ErlangParams::new(m, theta).unwrap();
            let mf = m as f64;
            let upper = theta * (mf + 40.0 * mf.sqrt() + 60.0);
            let total = integrate(|s| if s > 0.0 { erlang_log_pdf(s, p).unwrap().exp() } else { 0.0 }, 0.0, upper, 200);
            assert!((total - 1.0).abs() < 1e-6, "m={m} θ={theta}: {total}");
        }
    }
}

#[test]
fn survival_derivative_is_minus_density() {
    for (m, theta) in [(1usize, 1.0), (3, 0.5), (40, 2.0), (500, 0.1)] {
        let p = ErlangParams::new(m, theta).unwrap();
        let mean = m as f64 * theta;
        for k in 1..40 {
            let t = mean * k as f64 / 20.0;
            let h = 1e-4 * t;
            let s = |x: f64| erlang_log_sf(x, p).unwrap().exp();
            let d = (s(t + h) - s(t - h)) / (2.0 * h);
            let f = erlang_log_pdf(t, p).unwrap().exp();
            assert!((d + f).abs() < 1e-6, "m={m} θ={theta} t={t}: {d} vs {f}");
        }
    }
}

#[test]
fn hazard_times_survival_is_density() {
    for (m, theta) in [(1usize, 3.0), (2, 0.2), (90, 1.0), (20_000, 0.01)] {
        let p = ErlangParams::new(m, theta).unwrap();
        for r in [0.1, 0.7, 1.0, 1.3, 3.0] {
            let t = r * m as f64 * theta;
            let lhs = erlang_hazard(t, p).unwrap().ln() + erlang_log_sf(t, p).unwrap();
            let rhs = erlang_log_pdf(t, p).unwrap();
            assert!(rel_err(lhs.exp(), rhs.exp()) < 1e-12, "m={m} t={t}");
        }
    }
}

#[test]
fn truncated_exponential_ks() {
    let mut r = rng(11);
    let (zeta, lo, hi) = (1.0, 1.0, 2.0);
    let mut xs: Vec<f64> = (0..100_000)
        .map(|_| truncated_exp_sample(zeta, lo, hi, r.random()).unwrap())
        .collect();
    let z = (-lo).exp() - (-hi).exp();
    let d = ks_statistic(&mut xs, |x| ((-lo).exp() - (-x).exp()) / z);
    assert!(d < ks_critical_99(xs.len()), "D = {d}");
}

#[test]
fn truncated_lognormal_ks() {
    let mut r = rng(12);
    let p = LogNormalParams::new(1.0, 0.25).unwrap();
    let (lo, hi) = (2.0, 4.0);
    let mut xs: Vec<f64> = (0..100_000)
        .map(|_| truncated_lognormal_sample(p, lo, hi, r.random()).unwrap())
        .collect();
    let z = p.cdf(hi) - p.cdf(lo);
    let d = ks_statistic(&mut xs, |x| (p.cdf(x) - p.cdf(lo)) / z);
    assert!(d < ks_critical_99(xs.len()), "D = {d}");
}

/// Intervals chosen to stress the samplers: far tails, adjacent doubles,
/// unbounded right ends and extreme uniforms.
fn adversarial_triple<R: Rng>(r: &mut R) -> (f64, f64, f64) {
    let lo: f64 = 10f64.powf(r.random_range(-300.0..300.0));
    let hi = match r.random_range(0..4) {
        0 => lo.next_up(),
        1 => f64::INFINITY,
        2 => lo * (1.0 + 10f64.powf(r.random_range(-15.0..0.0))),
        _ => lo * 10f64.powf(r.random_range(0.0..10.0)),
    };
    let u = match r.random_range(0..4) {
        0 => 0.0,
        1 => 1.0f64.next_down(),
        _ => r.random(),
    };
    (lo, hi, u)
}

#[test]
fn truncated_samplers_stay_inside() {
    let mut r = rng(13);
    for _ in 0..500_000 {
        let (lo, hi, u) = adversarial_triple(&mut r);
        let zeta = 10f64.powf(r.random_range(-5.0..5.0));
        let x = truncated_exp_sample(zeta, lo, hi, u).unwrap();
        assert!(lo < x && x <= hi, "exp ζ={zeta} ({lo}, {hi}] u={u}: {x}");
        let p = LogNormalParams::new(r.random_range(-50.0..50.0), 10f64.powf(r.random_range(-4.0..2.0))).unwrap();
        let x = truncated_lognormal_sample(p, lo, hi, u).unwrap();
        assert!(lo < x && x <= hi, "lognormal {p:?} ({lo}, {hi}] u={u}: {x}");
    }
}

fn random_pd<R: Rng>(r: &mut R) -> [[f64; 2]; 2] {
    let a = r.random_range(0.05..3.0);
    let b = r.random_range(0.05..3.0);
    let rho: f64 = r.random_range(-0.95..0.95);
    let c = rho * (a * b as f64).sqrt();
    [[a, c], [c, b]]
}

#[test]
fn conditional_factorizes_joint_density() {
    let mut r = rng(14);
    for _ in 0..1000 {
        let params = BivariateNormalParams::new([r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)], random_pd(&mut r)).unwrap();
        let x = [r.random_range(0.05..20.0), r.random_range(0.05..20.0)];
        let joint = params.ln_pdf_lognormal(x);
        for given in [Coord::First, Coord::Second] {
            let g = given.index();
            let o = given.other().index();
            let cond = bln_conditional(&params, given, x[g]).unwrap();
            let lhs = cond.ln_pdf(x[o]) + params.marginal(g).ln_pdf(x[g]);
            assert!(rel_err(lhs.exp(), joint.exp()) < 1e-10, "{lhs} vs {joint}");
        }
    }
}

proptest! {
    #[test]
    fn ladder_agrees_with_direct(m in 1usize..300, theta in 0.01f64..50.0, r in 0.01f64..5.0) {
        let t = r * m as f64 * theta;
        let ladder = ErlangLadder::new(t, theta, m);
        let p = ErlangParams::new(m, theta).unwrap();
        prop_assert!((ladder.log_pdf[m - 1] - erlang_log_pdf(t, p).unwrap()).abs() < 1e-9);
        prop_assert!((ladder.log_sf[m - 1] - erlang_log_sf(t, p).unwrap()).abs() < 1e-9);
        let fast = erlang_log_kernels(t, theta, m, true);
        prop_assert!((fast[m - 1] - ladder.log_pdf[m - 1]).abs() < 1e-9);
    }

    #[test]
    fn survival_decreases_in_time_and_increases_in_shape(m in 1usize..200, theta in 0.01f64..50.0, r in 0.01f64..4.0) {
        let t = r * m as f64 * theta;
        let p = ErlangParams::new(m, theta).unwrap();
        let q = ErlangParams::new(m + 1, theta).unwrap();
        prop_assert!(erlang_log_sf(t * 1.01, p).unwrap() <= erlang_log_sf(t, p).unwrap());
        prop_assert!(erlang_log_sf(t, q).unwrap() >= erlang_log_sf(t, p).unwrap());
    }

    #[test]
    fn log_sum_exp_is_shift_invariant(xs in prop::collection::vec(-50.0f64..50.0, 1..20), c in -500.0f64..500.0) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        prop_assert!((log_sum_exp(&shifted) - log_sum_exp(&xs) - c).abs() < 1e-9);
    }
}
