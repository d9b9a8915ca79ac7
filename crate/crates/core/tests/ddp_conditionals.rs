mod common;

use common::{ks_critical_99, ks_statistic, rel_err, rng};
use erlmix::ddp::*;
use erlmix::mcmc::Schedule;
use erlmix::model::{component_of, erlang_log_kernel, Group, Record, SurvivalDataset};
use erlmix::posterior::{ddp_weight_draws, evaluate_curves, linear_grid};
use erlmix::special::{log_sum_exp, LogNormalParams};
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Gamma as GammaDist, Normal};

fn hp() -> DdpHyperparams {
    DdpHyperparams {
        a_theta: [2.0, 3.0],
        b_theta: [0.5, 0.4],
        m1: [2.0, 2.0],
        m2: [6.0, 8.0],
        mu_bar: [0.2, 0.4],
        sigma0: [[4.0, 1.0], [1.0, 3.0]],
        sigma: [[1.0, 0.6], [0.6, 2.0]],
        a_alpha: 5.0,
        b_alpha: 1.0,
    }
}

fn dataset(rows: &[(f64, bool, Group)]) -> SurvivalDataset {
    SurvivalDataset::new(
        rows.iter()
            .map(|&(time, event, g)| Record { time, event, group: Some(g) })
            .collect(),
    )
    .unwrap()
}

fn state(theta: [f64; 2], m: [usize; 2], alpha: f64, mu: [f64; 2], phi: Vec<[f64; 2]>) -> DdpChainState {
    DdpChainState {
        theta,
        m,
        alpha,
        mu,
        phi,
        adapt: LogThetaMoments::default(),
        iteration: 0,
    }
}

fn toy() -> SurvivalDataset {
    use Group::*;
    dataset(&[(1.2, true, Control), (2.0, true, Treatment), (0.7, false, Control), (3.1, true, Treatment)])
}

fn toy_phi() -> Vec<[f64; 2]> {
    vec![[1.0, 2.5], [0.5, 1.7], [0.5, 1.7], [2.2, 3.4]]
}

fn kernel(y: f64, event: bool, phi: f64, m: usize, theta: f64) -> f64 {
    erlang_log_kernel(y, event, component_of(phi, m, theta).unwrap(), theta).unwrap()
}

#[test]
fn urn_weights_match_bin_quadrature() {
    let h = hp();
    let mu = [0.1, 0.3];
    let alpha = 1.3;
    for event in [true, false] {
        use Group::*;
        let data = dataset(&[(1.2, event, Control), (2.0, true, Treatment)]);
        let s = DdpSampler::from_state(&data, h, state([1.0, 1.0], [3, 4], alpha, mu, vec![[1.0, 2.5], [0.5, 1.7]])).unwrap();
        let u = s.urn_weights(0).unwrap();
        // conditional law of log φ_C given the current φ_T = 2.5
        let sg = h.sigma;
        let m = mu[0] + sg[0][1] / sg[1][1] * (2.5f64.ln() - mu[1]);
        let sd = (sg[0][0] - sg[0][1] * sg[0][1] / sg[1][1]).sqrt();
        let normal = Normal::new(m, sd).unwrap();
        let integrand = |z: f64| kernel(1.2, event, z.exp(), 3, 1.0).exp() * normal.pdf(z);
        let bins = [(m - 14.0 * sd, 0.0), (0.0, 2.0f64.ln()), (2.0f64.ln(), m + 14.0 * sd)];
        let per_bin: Vec<f64> = bins
            .iter()
            .map(|&(a, b)| common::integrate(integrand, a, b, 60))
            .collect();
        let q0: f64 = per_bin.iter().sum();
        assert!(rel_err(u.log_q0.exp(), q0) < 1e-8, "{} vs {q0}", u.log_q0.exp());
        for (o, b) in u.omega.iter().zip(&per_bin) {
            assert!(rel_err(*o, b / q0) < 1e-8, "{o} vs {}", b / q0);
        }
        let q1 = kernel(1.2, event, 0.5, 3, 1.0).exp();
        assert!(rel_err(u.log_qj[0].exp(), q1) < 1e-8);
        let a = alpha * q0 + q1;
        assert!(rel_err(u.choice[0], alpha * q0 / a) < 1e-8);
        assert!((u.omega.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((u.choice.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

fn ln_uniform_m(m1: f64, m2: f64, theta: f64, m: usize) -> f64 {
    let lo = (m1 / theta).ceil() as usize;
    let hi = (m2 / theta).ceil() as usize;
    if m < lo || m > hi {
        f64::NEG_INFINITY
    } else {
        -((hi - lo + 1) as f64).ln()
    }
}

fn manual_lik(data: &SurvivalDataset, phi: &[[f64; 2]], m: [usize; 2], theta: [f64; 2]) -> f64 {
    data.records()
        .iter()
        .zip(phi)
        .map(|(r, p)| {
            let g = r.group.unwrap().index();
            kernel(r.time, r.event, p[g], m[g], theta[g])
        })
        .sum()
}

#[test]
fn theta_pair_ratio_recomputed() {
    let h = hp();
    let data = toy();
    let phi = toy_phi();
    let (theta, m) = ([1.0, 1.0], [4, 5]);
    let s = DdpSampler::from_state(&data, h, state(theta, m, 1.0, [0.0, 0.0], phi.clone())).unwrap();
    for ts in [[0.9, 1.1], [1.2, 0.95], [1.0, 1.0], [0.7, 1.4]] {
        let mut expect = manual_lik(&data, &phi, m, ts) - manual_lik(&data, &phi, m, theta);
        for x in 0..2 {
            let g = GammaDist::new(h.a_theta[x], 1.0 / h.b_theta[x]).unwrap();
            expect += ts[x].ln() - theta[x].ln() + g.ln_pdf(ts[x]) - g.ln_pdf(theta[x])
                + ln_uniform_m(h.m1[x], h.m2[x], ts[x], m[x])
                - ln_uniform_m(h.m1[x], h.m2[x], theta[x], m[x]);
        }
        let got = s.theta_log_ratio(ts);
        if expect == f64::NEG_INFINITY {
            assert_eq!(got, expect);
        } else {
            assert!((got - expect).abs() < 1e-12, "{ts:?}: {got} vs {expect}");
        }
    }
}

#[test]
fn m_conditional_matches_enumeration() {
    let h = hp();
    let data = toy();
    let phi = toy_phi();
    let s = DdpSampler::from_state(&data, h, state([0.6, 0.9], [6, 6], 1.0, [0.0, 0.0], phi.clone())).unwrap();
    for g in Group::BOTH {
        let x = g.index();
        let (lo, probs) = s.m_conditional(g).unwrap();
        let hi = (h.m2[x] / s.state().theta[x]).ceil() as usize;
        let logs: Vec<f64> = (lo..=hi)
            .map(|mx| {
                let mut m = [6, 6];
                m[x] = mx;
                data.records()
                    .iter()
                    .zip(&phi)
                    .filter(|(r, _)| r.group == Some(g))
                    .map(|(r, p)| kernel(r.time, r.event, p[x], m[x], s.state().theta[x]))
                    .sum::<f64>()
            })
            .collect();
        let norm = log_sum_exp(&logs);
        assert_eq!(probs.len(), logs.len());
        for (p, l) in probs.iter().zip(&logs) {
            assert!((p - (l - norm).exp()).abs() < 1e-12);
        }
    }
}

fn inv(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

#[test]
fn mu_conditional_worked_case() {
    let h = hp();
    let data = toy();
    // four observations, three distinct pairs
    let phi = toy_phi();
    let s = DdpSampler::from_state(&data, h, state([1.0, 1.0], [4, 5], 1.0, [0.0, 0.0], phi)).unwrap();
    let (mean, cov) = s.mu_conditional();
    let s0 = inv(h.sigma0);
    let si = inv(h.sigma);
    let atoms = [[1.0f64, 2.5f64], [0.5, 1.7], [2.2, 3.4]];
    let sum = [
        atoms.iter().map(|a| a[0].ln()).sum::<f64>(),
        atoms.iter().map(|a| a[1].ln()).sum::<f64>(),
    ];
    let mut prec = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            prec[a][b] = s0[a][b] + 3.0 * si[a][b];
        }
    }
    let c1 = inv(prec);
    let rhs = [
        s0[0][0] * h.mu_bar[0] + s0[0][1] * h.mu_bar[1] + si[0][0] * sum[0] + si[0][1] * sum[1],
        s0[1][0] * h.mu_bar[0] + s0[1][1] * h.mu_bar[1] + si[1][0] * sum[0] + si[1][1] * sum[1],
    ];
    let m1 = [c1[0][0] * rhs[0] + c1[0][1] * rhs[1], c1[1][0] * rhs[0] + c1[1][1] * rhs[1]];
    for a in 0..2 {
        assert!((mean[a] - m1[a]).abs() < 1e-12);
        for b in 0..2 {
            assert!((cov[a][b] - c1[a][b]).abs() < 1e-12);
        }
    }
}

#[test]
fn mu_draws_follow_conditional() {
    let data = toy();
    let mut s = DdpSampler::from_state(&data, hp(), state([1.0, 1.0], [4, 5], 1.0, [0.0, 0.0], toy_phi())).unwrap();
    let (mean, cov) = s.mu_conditional();
    let mut r = rng(41);
    let draws: Vec<[f64; 2]> = (0..100_000).map(|_| s.update_mu(&mut r)).collect();
    let checks: [([f64; 2], f64); 3] = [([1.0, 0.0], cov[0][0]), ([0.0, 1.0], cov[1][1]), ([1.0, 1.0], cov[0][0] + cov[1][1] + 2.0 * cov[0][1])];
    for (w, var) in checks {
        let law = Normal::new(w[0] * mean[0] + w[1] * mean[1], var.sqrt()).unwrap();
        let mut xs: Vec<f64> = draws.iter().map(|d| w[0] * d[0] + w[1] * d[1]).collect();
        let d = ks_statistic(&mut xs, |x| law.cdf(x));
        assert!(d < ks_critical_99(xs.len()), "{w:?}: D = {d}");
    }
}

#[test]
fn fresh_pair_other_coordinate_follows_marginal() {
    use Group::*;
    let data = dataset(&[(1.2, true, Control), (2.0, true, Treatment)]);
    let mu = [0.1, 0.3];
    let mut s = DdpSampler::from_state(&data, hp(), state([1.0, 1.0], [3, 4], 1.0, mu, vec![[1.0, 2.5], [0.5, 1.7]]))
        .unwrap()
        .with_moves(DdpMoves::default());
    let mut r = rng(42);
    let marginal = LogNormalParams::new(mu[1], hp().sigma[1][1]).unwrap();
    let mut xs = Vec::new();
    while xs.len() < 20_000 {
        let before = s.clusters();
        let p = s.update_phi_pair(0, &mut r).unwrap();
        if !before.atoms.contains(&p) {
            xs.push(p[1]);
        }
    }
    let d = ks_statistic(&mut xs, |x| marginal.cdf(x));
    assert!(d < ks_critical_99(xs.len()), "D = {d}");
}

#[test]
fn emitted_states_respect_group_ranges() {
    let mut r = rng(43);
    let rows: Vec<(f64, bool, Group)> = (0..40)
        .map(|i| {
            let g = if i % 2 == 0 { Group::Control } else { Group::Treatment };
            (r.random_range(0.2..6.0), r.random_bool(0.8), g)
        })
        .collect();
    let data = dataset(&rows);
    let h = hp();
    let schedule = Schedule {
        iterations: 1500,
        burn_in_fraction: 0.25,
        thin: 1,
    };
    let run = run_chain_ddp(&data, &h, &schedule, &mut r).unwrap();
    assert_eq!(run.draws.len(), schedule.retained());
    for d in &run.draws {
        for x in 0..2 {
            let lo = (h.m1[x] / d.theta[x]).ceil() as usize;
            let hi = (h.m2[x] / d.theta[x]).ceil() as usize;
            assert!(lo <= d.m[x] && d.m[x] <= hi);
        }
        assert!(d.clusters.atoms.iter().flatten().all(|v| *v > 0.0 && v.is_finite()));
    }
    let single = SurvivalDataset::from_times(&[1.0, 2.0], &[true, true]).unwrap();
    assert!(run_chain_ddp(&single, &h, &schedule, &mut r).is_err());
}

/// Posterior mean density of the control group, with α held fixed.
fn control_density(data: &SurvivalDataset, h: &DdpHyperparams, alpha: f64, grid: &[f64], seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut s = DdpSampler::new(data, *h).unwrap().with_moves(DdpMoves {
        alpha: false,
        ..DdpMoves::default()
    });
    let mut st = s.state();
    st.alpha = alpha;
    s = DdpSampler::from_state(data, *h, st).unwrap().with_moves(DdpMoves {
        alpha: false,
        ..DdpMoves::default()
    });
    let schedule = Schedule {
        iterations: 10_000,
        burn_in_fraction: 0.25,
        thin: 4,
    };
    let run = s.run(&schedule, &mut r).unwrap();
    let pairs = ddp_weight_draws(&run.draws, &h.sigma, &mut r).unwrap();
    let mut mean = vec![0.0; grid.len()];
    for p in &pairs {
        for (m, v) in mean.iter_mut().zip(evaluate_curves(&p.control, grid).density) {
            *m += v / pairs.len() as f64;
        }
    }
    mean
}

#[test]
fn diagonal_base_with_large_mass_decouples_groups() {
    let mut r = rng(44);
    let control: Vec<f64> = (0..40).map(|_| (0.5 + 0.4 * r.sample::<f64, _>(rand_distr::StandardNormal)).exp()).collect();
    let build = |t_times: &[f64]| {
        let mut rows: Vec<(f64, bool, Group)> = control.iter().map(|&t| (t, true, Group::Control)).collect();
        rows.extend(t_times.iter().map(|&t| (t, true, Group::Treatment)));
        dataset(&rows)
    };
    let short: Vec<f64> = (0..40).map(|_| (0.2 * r.sample::<f64, _>(rand_distr::StandardNormal) - 0.5).exp()).collect();
    let long: Vec<f64> = (0..40).map(|_| (1.5 + 0.3 * r.sample::<f64, _>(rand_distr::StandardNormal)).exp()).collect();
    let mut h = hp();
    h.sigma = [[1.0, 0.0], [0.0, 1.0]];
    // a tight prior on μ removes the slow μ mode, leaving atom sharing as
    // the only channel between the groups
    h.sigma0 = [[0.01, 0.0], [0.0, 0.01]];
    h.mu_bar = [0.5, 0.5];
    let grid = linear_grid(8.0, 200);
    let a = control_density(&build(&short), &h, 200.0, &grid, 45);
    let b = control_density(&build(&long), &h, 200.0, &grid, 46);
    let dx = grid[1] - grid[0];
    let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs() * dx).sum();
    assert!(l1 < 0.05, "L1 = {l1}");
}

