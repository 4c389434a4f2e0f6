//! Growth of the sample standard deviation with sample size under heavy
//! tails: the `N^(1/α − 1/2)` law and the subsampling experiment behind it.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from_seed};
use crate::stable::{self, StableParams};
use crate::stats;
use crate::{Error, Result};

/// Sample size at which the theory curve is pinned to simulated data.
pub const REFERENCE_N: usize = 20_000;

pub fn theoretical_exponent(alpha: f64) -> f64 {
    1.0 / alpha - 0.5
}

/// Typical size of the sample maximum, `n^(1/α)`.
pub fn typical_max(alpha: f64, n: f64) -> f64 {
    n.powf(1.0 / alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsampling {
    WithoutReplacement,
    WithReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdPoint {
    pub n: usize,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

/// `n` log-spaced integer sizes from `lo` to `hi`, deduplicated.
pub fn log_spaced_sizes(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    if n < 2 || hi <= lo {
        return alloc::vec![lo.max(hi)];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

/// Mean and 5%/95% quantiles of the standard deviation of `reps` random
/// subsamples of each size.
pub fn subsample_std_curve(data: &[f64], sizes: &[usize], reps: usize, seed: u64, mode: Subsampling) -> Result<Vec<StdPoint>> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replicate"));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    if let Some(&n) = sizes.iter().find(|&&n| n > data.len()) {
        return Err(Error::SampleTooSmall {
            needed: n,
            got: data.len(),
        });
    }
    let mut work = data.to_vec();
    let mut sub = Vec::new();
    let mut stds = Vec::with_capacity(reps);
    let mut out = Vec::with_capacity(sizes.len());
    for (k, &n) in sizes.iter().enumerate() {
        let size_seed = derive_seed(seed, k as u64);
        stds.clear();
        for rep in 0..reps {
            let mut rng = rng_from_seed(derive_seed(size_seed, rep as u64));
            let s = match mode {
                Subsampling::WithoutReplacement => {
                    // partial Fisher–Yates; any starting order gives a uniform subset
                    let len = work.len();
                    for i in 0..n {
                        let j = rng.random_range(i..len);
                        work.swap(i, j);
                    }
                    stats::std_dev(&work[..n])
                }
                Subsampling::WithReplacement => {
                    sub.clear();
                    sub.extend((0..n).map(|_| data[rng.random_range(0..data.len())]));
                    stats::std_dev(&sub)
                }
            };
            stds.push(s);
        }
        out.push(summarize(n, &mut stds));
    }
    Ok(out)
}

/// Same summary as [`subsample_std_curve`], but every replicate is a fresh
/// i.i.d. stable sample instead of a draw from one finite pool.
pub fn iid_std_curve(p: &StableParams, sizes: &[usize], reps: usize, seed: u64) -> Result<Vec<StdPoint>> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replicate"));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    p.validate()?;
    let mut stds = Vec::with_capacity(reps);
    let mut out = Vec::with_capacity(sizes.len());
    for (k, &n) in sizes.iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(seed, k as u64));
        stds.clear();
        for _ in 0..reps {
            stds.push(stats::std_dev(&stable::sample_with(p, n, &mut rng)?));
        }
        out.push(summarize(n, &mut stds));
    }
    Ok(out)
}

fn summarize(n: usize, stds: &mut [f64]) -> StdPoint {
    let mean = stats::mean(stds);
    let q = stats::quantiles_unsorted(stds, &[0.05, 0.95]);
    StdPoint {
        n,
        mean,
        q05: q[0],
        q95: q[1],
    }
}

/// Least-squares slope of `ln mean` on `ln N`, skipping the `skip`
/// smallest sizes.
pub fn fitted_slope(curve: &[StdPoint], skip: usize) -> Result<f64> {
    let mut pts: Vec<&StdPoint> = curve.iter().collect();
    pts.sort_by_key(|p| p.n);
    let pts = pts.get(skip..).unwrap_or(&[]);
    let x: Vec<f64> = pts.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.mean.ln()).collect();
    Ok(stats::linear_fit(&x, &y)?.1)
}

/// Constant `c` such that `c · N^(1/α − 1/2)` equals the mean standard
/// deviation of i.i.d. stable samples of size `n_ref`.
pub fn calibrate_intercept(p: &StableParams, n_ref: usize, reps: usize, seed: u64) -> Result<f64> {
    if reps == 0 || n_ref < 2 {
        return Err(Error::InvalidConfig("need n_ref >= 2 and at least one replicate"));
    }
    let mut total = 0.0;
    for rep in 0..reps {
        let x = stable::sample(p, n_ref, derive_seed(seed, rep as u64))?;
        total += stats::std_dev(&x);
    }
    Ok(total / reps as f64 / (n_ref as f64).powf(theoretical_exponent(p.alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents() {
        assert!((theoretical_exponent(1.3) - 0.269_230_769_230_769_2).abs() < 1e-15);
        assert_eq!(theoretical_exponent(2.0), 0.0);
        assert_eq!(theoretical_exponent(1.0), 0.5);
        assert_eq!(typical_max(1.0, 200.0) / typical_max(1.0, 100.0), 2.0);
        assert!((typical_max(2.0, 1e4) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn sizes_and_errors() {
        assert_eq!(log_spaced_sizes(100, 100_000, 4), [100, 1000, 10_000, 100_000]);
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        assert!(subsample_std_curve(&x, &[1], 10, 0, Subsampling::WithoutReplacement).is_err());
        assert!(subsample_std_curve(&x, &[51], 10, 0, Subsampling::WithoutReplacement).is_err());
        let full = subsample_std_curve(&x, &[50], 3, 0, Subsampling::WithoutReplacement).unwrap();
        assert!((full[0].mean - stats::std_dev(&x)).abs() < 1e-12);
    }
}
