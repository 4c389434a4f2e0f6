//! Goodness of fit and model comparison: Soofi information
//! distinguishability against a binned empirical density, AIC, and
//! repeated K-fold cross-validation.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::aep::{self, AepParams};
use crate::estimators::{self, McCullochGrid};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stable::{self, LnPdfTable, StableParams};
use crate::stats;
use crate::{Error, Result};

pub const DEFAULT_TRIM: f64 = 0.0025;
pub const MIN_N: usize = 1_000;
pub const MAX_BINS: usize = 500;

/// A fitted model that can be scored.
pub trait Density {
    fn ln_pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;

    fn n_params(&self) -> usize {
        4
    }

    fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

/// Something that fits a [`Density`] to a sample.
pub trait Fitter {
    fn name(&self) -> &str;
    fn fit(&self, sample: &[f64]) -> Result<Box<dyn Density>>;
}

impl Density for AepParams {
    fn ln_pdf(&self, x: f64) -> f64 {
        AepParams::ln_pdf(self, x)
    }

    fn cdf(&self, x: f64) -> f64 {
        AepParams::cdf(self, x)
    }

    fn log_likelihood(&self, xs: &[f64]) -> f64 {
        aep::log_likelihood(self, xs)
    }
}

/// A stable law with a log-density spline covering the fitting range.
#[derive(Debug, Clone)]
pub struct StableDensity {
    table: LnPdfTable,
}

impl StableDensity {
    pub fn new(p: &StableParams, lo: f64, hi: f64) -> Result<Self> {
        Ok(StableDensity {
            table: LnPdfTable::new(p, lo, hi)?,
        })
    }

    /// Table spanning the range of `sample`.
    pub fn for_sample(p: &StableParams, sample: &[f64]) -> Result<Self> {
        let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(p, lo, hi)
    }

    pub fn params(&self) -> &StableParams {
        self.table.params()
    }
}

impl Density for StableDensity {
    fn ln_pdf(&self, x: f64) -> f64 {
        self.table.ln_pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        stable::cdf(self.table.params(), x).unwrap_or(f64::NAN)
    }
}

/// McCulloch quantile fit, as a [`Fitter`].
pub struct StableQuantileFitter<'a> {
    pub grid: &'a McCullochGrid,
    pub min_n: usize,
}

impl Fitter for StableQuantileFitter<'_> {
    fn name(&self) -> &str {
        "levy"
    }

    fn fit(&self, sample: &[f64]) -> Result<Box<dyn Density>> {
        let f = estimators::fit_quantile_min_n(sample, self.grid, self.min_n)?;
        Ok(Box::new(StableDensity::for_sample(&f.params, sample)?))
    }
}

/// AEP L-moment fit, as a [`Fitter`].
pub struct AepLMomentFitter {
    pub min_n: usize,
}

impl Fitter for AepLMomentFitter {
    fn name(&self) -> &str {
        "aep"
    }

    fn fit(&self, sample: &[f64]) -> Result<Box<dyn Density>> {
        Ok(Box::new(aep::aep_fit_lmoments_min_n(sample, self.min_n)?.params))
    }
}

/// Equal-width histogram density over a (trimmed) range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Observations inside the range.
    pub n: usize,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i == self.counts.len() {
            self.hi
        } else {
            self.lo + i as f64 * self.width()
        }
    }

    /// Density per bin, integrating to one over the range.
    pub fn densities(&self) -> Vec<f64> {
        let norm = 1.0 / (self.n as f64 * self.width());
        self.counts.iter().map(|&c| c as f64 * norm).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }
}

impl Density for Histogram {
    fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return f64::NEG_INFINITY;
        }
        let i = (((x - self.lo) / self.width()) as usize).min(self.bins() - 1);
        (self.counts[i] as f64 / (self.n as f64 * self.width())).ln()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let pos = (x - self.lo) / self.width();
        let i = (pos as usize).min(self.bins() - 1);
        let below: u64 = self.counts[..i].iter().sum();
        (below as f64 + (pos - i as f64) * self.counts[i] as f64) / self.n as f64
    }
}

/// Default bin count: `⌈√n⌉` clamped to `[10, 500]`.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(10, MAX_BINS)
}

/// Order statistics left after cutting `⌊n·fraction⌋` from each side.
pub fn trimmed_sorted(sample: &[f64], fraction: f64) -> Result<Vec<f64>> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(Error::InvalidConfig("trim fraction must be in [0, 0.5)"));
    }
    let mut x = sample.to_vec();
    stats::sort(&mut x);
    let k = (x.len() as f64 * fraction).floor() as usize;
    Ok(x[k..x.len() - k].to_vec())
}

/// Histogram density of the trimmed sample.
pub fn empirical_density(sample: &[f64], trim: f64, bins: usize) -> Result<Histogram> {
    if sample.len() < MIN_N {
        return Err(Error::SampleTooSmall {
            needed: MIN_N,
            got: sample.len(),
        });
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("bin count must be positive"));
    }
    let x = trimmed_sorted(sample, trim)?;
    let lo = x[0];
    let hi = x[x.len() - 1];
    if !(hi > lo) {
        return Err(Error::DegenerateSample("histogram range is empty"));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0u64; bins];
    for &v in &x {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram {
        lo,
        hi,
        counts,
        n: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoofiScore {
    /// 100·exp(−KL), in [0, 100].
    pub id: f64,
    pub kl: f64,
    /// Set when the model puts no mass on an occupied bin (KL infinite).
    pub zero_model_mass: bool,
}

/// Soofi information distinguishability of `model` against the histogram.
///
/// Model bin probabilities come from CDF differences, renormalized over
/// the histogram range.
pub fn soofi_id(hist: &Histogram, model: &dyn Density) -> SoofiScore {
    let edges: Vec<f64> = (0..=hist.bins()).map(|i| model.cdf(hist.edge(i))).collect();
    let total = edges[hist.bins()] - edges[0];
    let mut kl = 0.0;
    let mut zero = !(total > 0.0);
    for (i, &c) in hist.counts.iter().enumerate() {
        if c == 0 || zero {
            continue;
        }
        let p = c as f64 / hist.n as f64;
        let q = (edges[i + 1] - edges[i]) / total;
        if !(q > 0.0) {
            zero = true;
            break;
        }
        kl += p * (p / q).ln();
    }
    if zero {
        return SoofiScore {
            id: 0.0,
            kl: f64::INFINITY,
            zero_model_mass: true,
        };
    }
    let kl = kl.max(0.0);
    SoofiScore {
        id: 100.0 * (-kl).exp(),
        kl,
        zero_model_mass: false,
    }
}

/// Soofi ID of `model` on `sample` with the default trim and bin rule.
pub fn soofi_id_sample(sample: &[f64], model: &dyn Density) -> Result<SoofiScore> {
    let hist = empirical_density(sample, DEFAULT_TRIM, default_bins(sample.len()))?;
    Ok(soofi_id(&hist, model))
}

pub fn aic(loglik: f64, k_params: usize) -> f64 {
    2.0 * k_params as f64 - 2.0 * loglik
}

/// Relative likelihood per observation from AICs, `exp((AIC_a − AIC_b)/2N)`.
/// Below one when `a` is the better model.
pub fn aic_relative_likelihood(aic_a: f64, aic_b: f64, n: usize) -> f64 {
    ((aic_a - aic_b) / (2.0 * n as f64)).exp()
}

/// Relative likelihood per observation from cross-validated log-likelihood
/// totals, `exp((CV_b − CV_a)/N)`. Below one when `a` is the better model.
pub fn cv_relative_likelihood(cv_a: f64, cv_b: f64, n: usize) -> f64 {
    ((cv_b - cv_a) / n as f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCv {
    pub model: String,
    /// Holdout log-likelihood summed over all observations, averaged over
    /// repetitions.
    pub cv_total: f64,
    /// Holdout log-likelihood per observation.
    pub cv_loglik: f64,
    pub folds_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldResult {
    pub k: usize,
    pub reps: usize,
    pub n: usize,
    pub seed: u64,
    pub models: Vec<ModelCv>,
}

impl KFoldResult {
    /// CV relative likelihood of model `a` against model `b`; below one
    /// when `a` predicts better.
    pub fn relative_likelihood(&self, a: usize, b: usize) -> f64 {
        cv_relative_likelihood(self.models[a].cv_total, self.models[b].cv_total, self.n)
    }
}

/// Repeated K-fold cross-validation. Every model sees the same partitions.
pub fn kfold_cv(sample: &[f64], fitters: &[&dyn Fitter], k: usize, reps: usize, seed: u64) -> Result<KFoldResult> {
    let n = sample.len();
    if k < 2 || reps < 1 {
        return Err(Error::InvalidConfig("need k >= 2 folds and at least one repetition"));
    }
    if n < 10 * k {
        return Err(Error::SampleTooSmall { needed: 10 * k, got: n });
    }
    let mut sums = alloc::vec![0.0f64; fitters.len()];
    let mut counted = alloc::vec![0usize; fitters.len()];
    let mut skipped = alloc::vec![0usize; fitters.len()];
    let mut idx: Vec<usize> = (0..n).collect();
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(n / k + 1);
    for m in 0..reps {
        for (i, v) in idx.iter_mut().enumerate() {
            *v = i;
        }
        idx.shuffle(&mut rng_from_seed(derive_seed(seed, m as u64)));
        for fold in 0..k {
            let (a, b) = (fold * n / k, (fold + 1) * n / k);
            train.clear();
            test.clear();
            train.extend(idx[..a].iter().chain(&idx[b..]).map(|&i| sample[i]));
            test.extend(idx[a..b].iter().map(|&i| sample[i]));
            for (j, f) in fitters.iter().enumerate() {
                let ll = f.fit(&train).map(|d| d.log_likelihood(&test));
                match ll {
                    Ok(v) if v.is_finite() => {
                        sums[j] += v;
                        counted[j] += test.len();
                    }
                    _ => skipped[j] += 1,
                }
            }
        }
    }
    let total_folds = k * reps;
    let mut models = Vec::with_capacity(fitters.len());
    for (j, f) in fitters.iter().enumerate() {
        if skipped[j] * 10 > total_folds || counted[j] == 0 {
            return Err(Error::TooManyFailures {
                failed: skipped[j],
                total: total_folds,
            });
        }
        let per_obs = sums[j] / counted[j] as f64;
        models.push(ModelCv {
            model: String::from(f.name()),
            cv_total: per_obs * n as f64,
            cv_loglik: per_obs,
            folds_skipped: skipped[j],
        });
    }
    Ok(KFoldResult {
        k,
        reps,
        n,
        seed,
        models,
    })
}

/// In-sample and out-of-sample scores of one model on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub soofi_id: f64,
    pub aic: f64,
    pub mean_loglik: f64,
    pub cv_loglik: Option<f64>,
    pub n: usize,
    pub k_params: usize,
}

pub fn gof_report(sample: &[f64], model: &dyn Density, hist: &Histogram) -> GofReport {
    let ll = model.log_likelihood(sample);
    GofReport {
        soofi_id: soofi_id(hist, model).id,
        aic: aic(ll, model.n_params()),
        mean_loglik: ll / sample.len() as f64,
        cv_loglik: None,
        n: sample.len(),
        k_params: model.n_params(),
    }
}
