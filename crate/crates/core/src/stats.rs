//! Descriptive statistics shared by the estimators and the panel pipeline.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Median-unbiased sample quantile (Hyndman–Fan type 8) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 + 1.0 / 3.0) * q + 1.0 / 3.0;
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor();
    let i = lo as usize - 1;
    sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i])
}

/// Type-8 quantiles for several probabilities without fully sorting.
///
/// `probs` must be ascending. `data` is reordered in place.
pub fn quantiles_unsorted(data: &mut [f64], probs: &[f64]) -> Vec<f64> {
    let n = data.len();
    debug_assert!(n > 0);
    let mut out = Vec::with_capacity(probs.len());
    for &q in probs {
        let h = (n as f64 + 1.0 / 3.0) * q + 1.0 / 3.0;
        let v = if n == 1 || h <= 1.0 {
            *data.iter().min_by(|a, b| a.total_cmp(b)).unwrap()
        } else if h >= n as f64 {
            *data.iter().max_by(|a, b| a.total_cmp(b)).unwrap()
        } else {
            let lo = h.floor();
            let i = lo as usize - 1;
            let (_, a, right) = data.select_nth_unstable_by(i, |a, b| a.total_cmp(b));
            let a = *a;
            let b = right.iter().copied().min_by(|a, b| a.total_cmp(b)).unwrap_or(a);
            a + (h - lo) * (b - a)
        };
        out.push(v);
    }
    out
}

pub fn sort(data: &mut [f64]) {
    data.sort_unstable_by(|a, b| a.total_cmp(b));
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation with the `n − 1` denominator (two-pass).
pub fn std_dev(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

pub fn skewness(x: &[f64]) -> f64 {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Kolmogorov–Smirnov distance between the sample and a continuous CDF.
pub fn ks_distance<F: FnMut(f64) -> f64>(sample: &[f64], mut cdf: F) -> f64 {
    let mut s = sample.to_vec();
    sort(&mut s);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort(&mut a);
    sort(&mut b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Ordinary least squares fit `y = a + b·x`, returning `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: x.len().min(y.len()) });
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateSample("regressor has zero variance"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}
