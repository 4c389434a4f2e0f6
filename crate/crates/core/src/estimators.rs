//! Estimation of stable parameters: McCulloch's quantile method on a
//! numerically generated lookup grid, maximum likelihood refinement, and
//! bootstrap standard errors.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stable::{self, LnPdfTable, StableParams};
use crate::stats;
use crate::{Error, Result};

/// Lower bound applied to the sample Φ1 ratio; the Gaussian value.
pub const PHI1_FLOOR: f64 = 2.439;

pub const DEFAULT_MIN_N_QUANTILE: usize = 1_000;
pub const DEFAULT_MIN_N_MLE: usize = 500;

const QUANTILE_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// The five quantiles McCulloch's estimator needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub n: usize,
}

impl QuantileSummary {
    /// Median-unbiased sample quantiles. Does not reorder `sample`.
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::SampleTooSmall { needed: 1, got: 0 });
        }
        let mut work = sample.to_vec();
        Ok(Self::from_scratch(&mut work))
    }

    /// As [`from_sample`](Self::from_sample) but reorders the buffer in place.
    pub fn from_scratch(work: &mut [f64]) -> Self {
        let q = stats::quantiles_unsorted(work, &QUANTILE_PROBS);
        QuantileSummary {
            q05: q[0],
            q25: q[1],
            q50: q[2],
            q75: q[3],
            q95: q[4],
            n: work.len(),
        }
    }

    /// Theoretical quantiles of a stable law.
    pub fn theoretical(p: &StableParams) -> Result<Self> {
        let mut q = [0.0; 5];
        for (v, &pr) in q.iter_mut().zip(&QUANTILE_PROBS) {
            *v = stable::quantile(p, pr)?;
        }
        Ok(QuantileSummary {
            q05: q[0],
            q25: q[1],
            q50: q[2],
            q75: q[3],
            q95: q[4],
            n: usize::MAX,
        })
    }

    /// Unfloored (Φ1, Φ2).
    pub fn phi12(&self) -> (f64, f64) {
        let spread = self.q95 - self.q05;
        (spread / (self.q75 - self.q25), (self.q95 + self.q05 - 2.0 * self.q50) / spread)
    }
}

/// Φ1–Φ4 tabulated over (α, β ≥ 0). Negative β follows by symmetry: Φ1, Φ3
/// are even in β and Φ2, Φ4 are odd.
///
/// Φ4 is stored in the S0 convention as `(δ − x₀.₅)/γ`; the printed
/// `β·tan(πα/2)` correction of the S1 form is absorbed because
/// `δ₀ = δ₁ + βγ·tan(πα/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCullochGrid {
    pub alpha_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    /// Row-major `[alpha][beta]`.
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi3: Vec<f64>,
    pub phi4: Vec<f64>,
}

/// α ∈ {0.5, 0.6, …, 2.0}.
pub fn default_alpha_axis() -> Vec<f64> {
    (5..=20).map(|i| i as f64 / 10.0).collect()
}

/// β ∈ {0, 0.25, 0.5, 0.75, 1}.
pub fn default_beta_axis() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn check_axis(axis: &[f64], lo: f64, hi: f64, name: &'static str) -> Result<()> {
    if axis.len() < 2 || axis.windows(2).any(|w| w[1] <= w[0]) || axis[0] < lo || axis[axis.len() - 1] > hi {
        return Err(Error::InvalidConfig(name));
    }
    Ok(())
}

/// Tabulates Φ1–Φ4 from theoretical stable quantiles.
pub fn build_grid(alpha_axis: &[f64], beta_axis: &[f64]) -> Result<McCullochGrid> {
    check_axis(alpha_axis, 0.1, 2.0, "alpha axis must be increasing within (0, 2]")?;
    check_axis(beta_axis, 0.0, 1.0, "beta axis must be increasing within [0, 1]")?;
    let cells = alpha_axis.len() * beta_axis.len();
    let mut g = McCullochGrid {
        alpha_axis: alpha_axis.to_vec(),
        beta_axis: beta_axis.to_vec(),
        phi1: Vec::with_capacity(cells),
        phi2: Vec::with_capacity(cells),
        phi3: Vec::with_capacity(cells),
        phi4: Vec::with_capacity(cells),
    };
    for &a in alpha_axis {
        for &b in beta_axis {
            let q = QuantileSummary::theoretical(&StableParams::standard(a, b)?)?;
            let (p1, p2) = q.phi12();
            g.phi1.push(p1);
            g.phi2.push(p2);
            g.phi3.push(q.q75 - q.q25);
            g.phi4.push(-q.q50);
        }
    }
    Ok(g)
}

/// Locates `x` on `axis`: segment index and fractional position, clamped.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    let i = axis.partition_point(|&v| v <= x) - 1;
    let i = i.min(n - 2);
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

impl McCullochGrid {
    fn at(table: &[f64], nb: usize, i: usize, j: usize) -> f64 {
        table[i * nb + j]
    }

    fn bilinear(&self, table: &[f64], alpha: f64, beta: f64) -> f64 {
        let nb = self.beta_axis.len();
        let (i, ta) = locate(&self.alpha_axis, alpha);
        let (j, tb) = locate(&self.beta_axis, beta);
        let v00 = Self::at(table, nb, i, j);
        let v01 = Self::at(table, nb, i, j + 1);
        let v10 = Self::at(table, nb, i + 1, j);
        let v11 = Self::at(table, nb, i + 1, j + 1);
        (1.0 - ta) * ((1.0 - tb) * v00 + tb * v01) + ta * ((1.0 - tb) * v10 + tb * v11)
    }

    pub fn phi1_at(&self, alpha: f64, beta: f64) -> f64 {
        self.bilinear(&self.phi1, alpha, beta.abs())
    }

    pub fn phi2_at(&self, alpha: f64, beta: f64) -> f64 {
        beta.signum() * self.bilinear(&self.phi2, alpha, beta.abs())
    }

    pub fn phi3_at(&self, alpha: f64, beta: f64) -> f64 {
        self.bilinear(&self.phi3, alpha, beta.abs())
    }

    pub fn phi4_at(&self, alpha: f64, beta: f64) -> f64 {
        let v = self.bilinear(&self.phi4, alpha, beta.abs());
        if beta < 0.0 {
            -v
        } else {
            v
        }
    }

    /// Solves `f(x) = target` for a piecewise-linear `f` sampled on `axis`,
    /// taking the first crossing and clamping to the axis ends.
    fn solve_axis<F: Fn(f64) -> f64>(axis: &[f64], f: F, target: f64) -> f64 {
        let vals: Vec<f64> = axis.iter().map(|&x| f(x)).collect();
        let increasing = vals[vals.len() - 1] >= vals[0];
        for k in 0..axis.len() - 1 {
            let (lo, hi) = (vals[k], vals[k + 1]);
            let inside = if lo <= hi { target >= lo && target <= hi } else { target <= lo && target >= hi };
            if inside {
                if hi == lo {
                    return axis[k];
                }
                return axis[k] + (target - lo) / (hi - lo) * (axis[k + 1] - axis[k]);
            }
        }
        let below_start = if increasing { target < vals[0] } else { target > vals[0] };
        if below_start {
            axis[0]
        } else {
            axis[axis.len() - 1]
        }
    }

    /// Inverts the interpolated map (α, β) ↦ (Φ1, Φ2). `phi1` is the
    /// floored ratio.
    pub fn invert(&self, phi1: f64, phi2: f64) -> (f64, f64) {
        let a_max = self.alpha_axis[self.alpha_axis.len() - 1];
        if phi1 <= PHI1_FLOOR {
            return (a_max, 0.0);
        }
        let target2 = phi2.abs();
        let mut alpha = a_max;
        let mut beta = 0.0;
        for _ in 0..500 {
            let a_new = Self::solve_axis(&self.alpha_axis, |a| self.phi1_at(a, beta), phi1);
            let b_new = Self::solve_axis(&self.beta_axis, |b| self.phi2_at(a_new, b), target2);
            let done = (a_new - alpha).abs() < 1e-14 && (b_new - beta).abs() < 1e-14;
            alpha = a_new;
            beta = b_new;
            if done {
                break;
            }
        }
        (alpha, if phi2 < 0.0 { -beta } else { beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Quantile,
    Mle,
}

/// Fitted stable parameters for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: StableParams,
    /// Bootstrap standard errors of (α, β, γ, δ), when computed.
    pub se: Option<[f64; 4]>,
    pub method: FitMethod,
    pub n: usize,
    /// Seed used for the bootstrap, if any.
    pub seed: Option<u64>,
    /// False when the optimizer stopped on its evaluation budget.
    pub converged: bool,
    pub loglik: Option<f64>,
}

impl FitResult {
    pub fn as_array(&self) -> [f64; 4] {
        let p = &self.params;
        [p.alpha, p.beta, p.gamma, p.delta]
    }
}

/// Estimates from a quantile summary.
pub fn fit_from_quantiles(q: &QuantileSummary, grid: &McCullochGrid) -> Result<StableParams> {
    let iqr = q.q75 - q.q25;
    if !(iqr > 0.0) || !(q.q95 > q.q05) {
        return Err(Error::DegenerateSample("interquartile range is zero"));
    }
    let (p1, p2) = q.phi12();
    let (alpha, beta) = grid.invert(p1.max(PHI1_FLOOR), p2);
    let alpha = alpha.min(2.0);
    let beta = beta.clamp(-1.0, 1.0);
    let gamma = iqr / grid.phi3_at(alpha, beta);
    let delta = q.q50 + gamma * grid.phi4_at(alpha, beta);
    StableParams::new(alpha, beta, gamma, delta)
}

/// McCulloch's quantile estimator with the default minimum sample size.
pub fn fit_quantile(sample: &[f64], grid: &McCullochGrid) -> Result<FitResult> {
    fit_quantile_min_n(sample, grid, DEFAULT_MIN_N_QUANTILE)
}

pub fn fit_quantile_min_n(sample: &[f64], grid: &McCullochGrid, min_n: usize) -> Result<FitResult> {
    if sample.len() < min_n.max(5) {
        return Err(Error::SampleTooSmall {
            needed: min_n.max(5),
            got: sample.len(),
        });
    }
    let q = QuantileSummary::from_sample(sample)?;
    Ok(FitResult {
        params: fit_from_quantiles(&q, grid)?,
        se: None,
        method: FitMethod::Quantile,
        n: sample.len(),
        seed: None,
        converged: true,
        loglik: None,
    })
}

const MLE_ALPHA_MIN: f64 = 0.4;

struct Transform {
    delta0: f64,
    gamma0: f64,
}

impl Transform {
    fn to_params(&self, v: &[f64]) -> Option<StableParams> {
        let alpha = MLE_ALPHA_MIN + (2.0 - MLE_ALPHA_MIN) / (1.0 + (-v[0]).exp());
        let beta = v[1].tanh();
        let gamma = self.gamma0 * v[2].exp();
        let delta = self.delta0 + self.gamma0 * v[3];
        StableParams::new(alpha, beta, gamma, delta).ok()
    }

    fn from_params(&self, p: &StableParams) -> [f64; 4] {
        let t = ((p.alpha - MLE_ALPHA_MIN) / (2.0 - MLE_ALPHA_MIN)).clamp(1e-9, 1.0 - 1e-9);
        [
            (t / (1.0 - t)).ln(),
            p.beta.clamp(-0.999_999, 0.999_999).atanh(),
            (p.gamma / self.gamma0).ln(),
            (p.delta - self.delta0) / self.gamma0,
        ]
    }
}

/// Fast approximate log-likelihood through a log-density spline; falls back
/// to exact evaluation when the table cannot be built.
pub fn approx_log_likelihood(p: &StableParams, sample: &[f64], lo: f64, hi: f64) -> f64 {
    match LnPdfTable::new(p, lo, hi) {
        Ok(t) => t.log_likelihood(sample),
        Err(_) => stable::log_likelihood(p, sample).unwrap_or(f64::NEG_INFINITY),
    }
}

/// Maximum likelihood over all four parameters, started from `init`.
///
/// The result never has a lower exact log-likelihood than `init`.
pub fn fit_mle(sample: &[f64], init: &StableParams) -> Result<FitResult> {
    fit_mle_with(sample, init, DEFAULT_MIN_N_MLE, NelderMeadOptions {
        max_evals: 1500,
        f_tol: 1e-10,
        x_tol: 1e-6,
    })
}

pub fn fit_mle_with(sample: &[f64], init: &StableParams, min_n: usize, opts: NelderMeadOptions) -> Result<FitResult> {
    init.validate()?;
    if sample.len() < min_n {
        return Err(Error::SampleTooSmall {
            needed: min_n,
            got: sample.len(),
        });
    }
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tr = Transform {
        delta0: init.delta,
        gamma0: init.gamma,
    };
    let x0 = tr.from_params(init);
    let n = sample.len() as f64;
    let objective = |v: &[f64]| match tr.to_params(v) {
        Some(p) => -approx_log_likelihood(&p, sample, lo, hi) / n,
        None => f64::INFINITY,
    };
    let m = nelder_mead(objective, &x0, &[0.3, 0.3, 0.1, 0.1], opts);

    let mut candidates = vec![*init];
    if let Some(p) = tr.to_params(&m.x) {
        candidates.push(p);
        if p.alpha > 1.95 {
            let mean = stats::mean(sample);
            let sd = stats::std_dev(sample) * ((n - 1.0) / n).sqrt();
            if sd > 0.0 {
                candidates.push(StableParams::new(2.0, 0.0, sd / core::f64::consts::SQRT_2, mean)?);
            }
        }
        if p.beta.abs() > 0.95 {
            candidates.push(StableParams::new(p.alpha, p.beta.signum(), p.gamma, p.delta)?);
        }
    }
    let mut best = *init;
    let mut best_ll = stable::log_likelihood(init, sample).unwrap_or(f64::NEG_INFINITY);
    for c in &candidates[1..] {
        if let Ok(ll) = stable::log_likelihood(c, sample) {
            if ll > best_ll {
                best_ll = ll;
                best = *c;
            }
        }
    }
    Ok(FitResult {
        params: best,
        se: None,
        method: FitMethod::Mle,
        n: sample.len(),
        seed: None,
        converged: m.converged,
        loglik: Some(best_ll),
    })
}

/// Source of bootstrap resamples.
pub trait Resampler {
    /// Fills `out` with a resample of `data` for replicate `rep`.
    fn resample(&mut self, data: &[f64], rep: usize, out: &mut Vec<f64>);
}

/// Uniform resampling with replacement; replicate `k` uses its own derived
/// seed so results do not depend on evaluation order.
#[derive(Debug, Clone, Copy)]
pub struct SeededResampler {
    pub seed: u64,
}

impl Resampler for SeededResampler {
    fn resample(&mut self, data: &[f64], rep: usize, out: &mut Vec<f64>) {
        let mut rng = rng_from_seed(derive_seed(self.seed, rep as u64));
        out.clear();
        out.extend((0..data.len()).map(|_| data[rng.random_range(0..data.len())]));
    }
}

/// Bootstrap standard errors of a four-parameter fitter.
pub fn bootstrap_se<F>(sample: &[f64], fitter: F, reps: usize, seed: u64) -> Result<[f64; 4]>
where
    F: FnMut(&[f64]) -> Result<[f64; 4]>,
{
    bootstrap_se_with(sample, fitter, reps, &mut SeededResampler { seed })
}

pub fn bootstrap_se_with<F, R>(sample: &[f64], mut fitter: F, reps: usize, resampler: &mut R) -> Result<[f64; 4]>
where
    F: FnMut(&[f64]) -> Result<[f64; 4]>,
    R: Resampler + ?Sized,
{
    if reps < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least two replicates"));
    }
    let mut buf = Vec::with_capacity(sample.len());
    let mut est: Vec<[f64; 4]> = Vec::with_capacity(reps);
    let mut failed = 0;
    for rep in 0..reps {
        resampler.resample(sample, rep, &mut buf);
        match fitter(&buf) {
            Ok(v) if v.iter().all(|x| x.is_finite()) => est.push(v),
            _ => failed += 1,
        }
    }
    if failed * 10 > reps || est.len() < 2 {
        return Err(Error::TooManyFailures { failed, total: reps });
    }
    let mut se = [0.0; 4];
    for (k, s) in se.iter_mut().enumerate() {
        let col: Vec<f64> = est.iter().map(|e| e[k]).collect();
        *s = stats::std_dev(&col);
    }
    Ok(se)
}

/// Quantile fit with bootstrap standard errors attached.
pub fn fit_quantile_bootstrap(sample: &[f64], grid: &McCullochGrid, reps: usize, seed: u64, min_n: usize) -> Result<FitResult> {
    let mut fit = fit_quantile_min_n(sample, grid, min_n)?;
    let mut scratch = Vec::with_capacity(sample.len());
    let se = bootstrap_se(
        sample,
        |s| {
            scratch.clear();
            scratch.extend_from_slice(s);
            let q = QuantileSummary::from_scratch(&mut scratch);
            let p = fit_from_quantiles(&q, grid)?;
            Ok([p.alpha, p.beta, p.gamma, p.delta])
        },
        reps,
        seed,
    )?;
    fit.se = Some(se);
    fit.seed = Some(seed);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn grid() -> McCullochGrid {
        build_grid(&default_alpha_axis(), &default_beta_axis()).unwrap()
    }

    #[test]
    fn grid_known_cells() {
        let g = grid();
        let nb = g.beta_axis.len();
        // α = 1, β = 0 is Cauchy: Φ1 = tan(0.45π)/tan(0.25π).
        let i1 = 5;
        assert!((g.phi1[i1 * nb] - (0.45 * PI).tan()).abs() < 1e-8);
        for j in 0..nb {
            assert!((g.phi1[15 * nb + j] - 2.4387).abs() < 1e-3);
            assert!(g.phi2[15 * nb + j].abs() < 1e-9);
        }
        for i in 0..g.alpha_axis.len() {
            assert!(g.phi2[i * nb].abs() < 1e-8);
            if i > 0 {
                assert!(g.phi1[i * nb] < g.phi1[(i - 1) * nb]);
            }
        }
    }

    #[test]
    fn inversion_recovers_nodes() {
        let g = grid();
        let nb = g.beta_axis.len();
        for (i, &a) in g.alpha_axis.iter().enumerate().take(15) {
            for (j, &b) in g.beta_axis.iter().enumerate() {
                let (ah, bh) = g.invert(g.phi1[i * nb + j], g.phi2[i * nb + j]);
                assert!((ah - a).abs() < 1e-9 && (bh - b).abs() < 1e-9, "node ({a},{b}) -> ({ah},{bh})");
                let (ah, bh) = g.invert(g.phi1[i * nb + j], -g.phi2[i * nb + j]);
                assert!((ah - a).abs() < 1e-9 && (bh + b).abs() < 1e-9);
            }
        }
    }

    struct Identity;

    impl Resampler for Identity {
        fn resample(&mut self, data: &[f64], _rep: usize, out: &mut Vec<f64>) {
            out.clear();
            out.extend_from_slice(data);
        }
    }

    #[test]
    fn bootstrap_of_identical_resamples_is_zero() {
        let data: Vec<f64> = (0..50).map(f64::from).collect();
        let se = bootstrap_se_with(&data, |s| Ok([stats::mean(s), 0.0, 1.0, 2.0]), 2, &mut Identity).unwrap();
        assert_eq!(se, [0.0; 4]);
    }

    #[test]
    fn bootstrap_counts_failures() {
        let data: Vec<f64> = (0..50).map(f64::from).collect();
        let mut k = 0;
        let r = bootstrap_se(
            &data,
            |_| {
                k += 1;
                if k % 5 == 0 {
                    Err(Error::NumericalFailure("stub"))
                } else {
                    Ok([1.0; 4])
                }
            },
            20,
            1,
        );
        assert!(matches!(r, Err(Error::TooManyFailures { failed: 4, total: 20 })));
    }
}
