//! Summary statistics for chain output.

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Type-7 quantile of unsorted data; NaN if any value is NaN.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    if values.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Effective sample size by Geyer's initial monotone sequence estimator.
/// NaN for constant or too-short series.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return f64::NAN;
    }
    let mu = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let acov = |lag: usize| -> f64 {
        c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let g0 = acov(0);
    if !(g0 > 0.0) {
        return f64::NAN;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = acov(2 * m) + acov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    let sigma2 = -g0 + 2.0 * sum;
    if sigma2 <= 0.0 {
        return n as f64;
    }
    n as f64 * g0 / sigma2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-15);
        assert!(quantile(&[1.0, f64::NAN], 0.5).is_nan());
    }

    #[test]
    fn ess_of_alternating_and_constant() {
        assert!(effective_sample_size(&[1.0; 50]).is_nan());
        // an AR(1) chain with coefficient 0.9 has ESS near n (1-0.9)/(1+0.9)
        let mut x = vec![0.0; 20000];
        let mut s: u64 = 7;
        for i in 1..x.len() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            x[i] = 0.9 * x[i - 1] + u;
        }
        let ess = effective_sample_size(&x);
        let expect = 20000.0 * 0.1 / 1.9;
        assert!((ess / expect - 1.0).abs() < 0.3, "{ess} vs {expect}");
    }
}
