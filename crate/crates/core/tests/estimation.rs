use std::sync::OnceLock;

use proptest::prelude::*;
use stablefit_core::estimators::{self, FitMethod, McCullochGrid, QuantileSummary};
use stablefit_core::stable::{self, StableParams};
use stablefit_core::stats;

fn grid() -> &'static McCullochGrid {
    static GRID: OnceLock<McCullochGrid> = OnceLock::new();
    GRID.get_or_init(|| estimators::build_grid(&estimators::default_alpha_axis(), &estimators::default_beta_axis()).unwrap())
}

fn sp(a: f64, b: f64, g: f64, d: f64) -> StableParams {
    StableParams::new(a, b, g, d).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    stats::sort(&mut v);
    stats::quantile_sorted(&v, 0.5)
}

#[test]
fn exact_quantiles_recover_parameters() {
    let q = QuantileSummary::theoretical(&sp(1.0, 0.0, 1.0, 0.0)).unwrap();
    let p = estimators::fit_from_quantiles(&q, grid()).unwrap();
    assert!((p.alpha - 1.0).abs() < 1e-8 && p.beta.abs() < 1e-8);
    assert!((p.gamma - 1.0).abs() < 1e-8 && p.delta.abs() < 1e-8);

    let q = QuantileSummary::theoretical(&sp(2.0, 0.0, 3.0, 5.0)).unwrap();
    let p = estimators::fit_from_quantiles(&q, grid()).unwrap();
    assert_eq!((p.alpha, p.beta), (2.0, 0.0));
    assert!((p.gamma - 3.0).abs() < 1e-6 && (p.delta - 5.0).abs() < 1e-6);

    // off-node values carry only bilinear interpolation error
    let truth = sp(1.36, 0.89, 14.9, 42.0);
    let p = estimators::fit_from_quantiles(&QuantileSummary::theoretical(&truth).unwrap(), grid()).unwrap();
    assert!((p.alpha - 1.36).abs() < 0.02 && (p.beta - 0.89).abs() < 0.05);
    assert!((p.gamma / 14.9 - 1.0).abs() < 0.02 && (p.delta - 42.0).abs() < 0.5);
}

#[test]
fn negative_skew_by_symmetry() {
    let truth = sp(1.5, -0.5, 2.0, -1.0);
    let p = estimators::fit_from_quantiles(&QuantileSummary::theoretical(&truth).unwrap(), grid()).unwrap();
    assert!((p.alpha - 1.5).abs() < 1e-8 && (p.beta + 0.5).abs() < 1e-8);
    assert!((p.gamma - 2.0).abs() < 1e-7 && (p.delta + 1.0).abs() < 1e-7);
}

#[test]
fn gaussian_sample_hits_the_boundary() {
    let x = stable::sample(&sp(2.0, 0.0, 1.0, 0.0), 100_000, 5).unwrap();
    let f = estimators::fit_quantile(&x, grid()).unwrap();
    assert!(f.params.alpha > 1.9, "{:?}", f.params);
    assert!(f.params.beta.abs() < 0.5 || f.params.alpha > 1.97);
    assert!((f.params.gamma - 1.0).abs() < 0.03);
}

#[test]
fn quantile_fit_errors() {
    let g = grid();
    assert!(matches!(
        estimators::fit_quantile(&[1.0; 10], g),
        Err(stablefit_core::Error::SampleTooSmall { .. })
    ));
    assert!(matches!(
        estimators::fit_quantile(&vec![3.0; 2000], g),
        Err(stablefit_core::Error::DegenerateSample(_))
    ));
}

#[test]
fn errors_shrink_with_sample_size() {
    let truth = sp(1.36, 0.89, 14.9, 42.0);
    let mut prev = [f64::INFINITY; 4];
    for n in [1_000, 10_000, 100_000] {
        let mut errs = vec![Vec::new(); 4];
        for seed in 0..20 {
            let x = stable::sample(&truth, n, 1000 + seed).unwrap();
            let p = estimators::fit_quantile(&x, grid()).unwrap().params;
            errs[0].push((p.alpha - truth.alpha).abs());
            errs[1].push((p.beta - truth.beta).abs());
            errs[2].push((p.gamma / truth.gamma - 1.0).abs());
            errs[3].push((p.delta - truth.delta).abs());
        }
        let med: Vec<f64> = errs.into_iter().map(median).collect();
        for k in 0..4 {
            assert!(med[k] < prev[k], "n={n} param {k}: {} !< {}", med[k], prev[k]);
            prev[k] = med[k];
        }
    }
}

#[test]
fn mle_never_worse_than_its_start() {
    let truth = sp(1.2, 0.55, 1.0, 0.0);
    let x = stable::sample(&truth, 3000, 17).unwrap();
    let q = estimators::fit_quantile(&x, grid()).unwrap();
    let m = estimators::fit_mle(&x, &q.params).unwrap();
    assert_eq!(m.method, FitMethod::Mle);
    let ll0 = stable::log_likelihood(&q.params, &x).unwrap();
    assert!(m.loglik.unwrap() >= ll0);
    assert!((m.params.alpha - 1.2).abs() < 0.1 && (m.params.beta - 0.55).abs() < 0.2);

    // restarting at the optimum stays there
    let again = estimators::fit_mle(&x, &m.params).unwrap();
    assert!((again.loglik.unwrap() - m.loglik.unwrap()).abs() < 1e-3);
    assert!((again.params.alpha - m.params.alpha).abs() < 1e-2);
}

#[test]
fn mle_on_gaussian_data() {
    let x = stable::sample(&sp(2.0, 0.0, 2.0, 1.0), 2000, 3).unwrap();
    let q = estimators::fit_quantile(&x, grid()).unwrap();
    let m = estimators::fit_mle(&x, &q.params).unwrap();
    assert!(m.params.alpha > 1.95, "{:?}", m.params);
    if m.params.alpha == 2.0 {
        let s2 = 2.0 * m.params.gamma * m.params.gamma;
        let gauss: f64 = x
            .iter()
            .map(|v| -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (v - m.params.delta).powi(2) / (2.0 * s2))
            .sum();
        assert!((gauss - m.loglik.unwrap()).abs() < 1e-6 * gauss.abs());
    }
}

#[test]
fn mle_is_at_least_as_accurate_as_quantiles() {
    let truth = sp(1.2, 0.55, 1.0, 0.0);
    let mut sq = [[0.0; 4]; 2];
    let seeds = 10;
    for seed in 0..seeds {
        let x = stable::sample(&truth, 4000, 500 + seed).unwrap();
        let q = estimators::fit_quantile(&x, grid()).unwrap();
        let m = estimators::fit_mle(&x, &q.params).unwrap();
        for (row, f) in [q.as_array(), m.as_array()].iter().enumerate() {
            let t = [1.2, 0.55, 1.0, 0.0];
            for k in 0..4 {
                sq[row][k] += (f[k] - t[k]).powi(2);
            }
        }
    }
    let total_q: f64 = sq[0].iter().sum();
    let total_m: f64 = sq[1].iter().sum();
    assert!(total_m <= total_q * 1.1, "quantile {:?} mle {:?}", sq[0], sq[1]);
}

#[test]
fn bootstrap_matches_monte_carlo_spread() {
    let truth = sp(1.3, 0.5, 1.0, 0.0);
    let n = 10_000;
    let x = stable::sample(&truth, n, 99).unwrap();
    let f = estimators::fit_quantile_bootstrap(&x, grid(), 300, 7, 1000).unwrap();
    let se = f.se.unwrap();
    let alphas: Vec<f64> = (0..300)
        .map(|s| estimators::fit_quantile(&stable::sample(&truth, n, 10_000 + s).unwrap(), grid()).unwrap().params.alpha)
        .collect();
    let mc = stats::std_dev(&alphas);
    assert!(se[0] / mc < 1.5 && mc / se[0] < 1.5, "bootstrap {} vs monte carlo {}", se[0], mc);
    let again = estimators::fit_quantile_bootstrap(&x, grid(), 300, 7, 1000).unwrap();
    assert_eq!(again.se, f.se);
    assert_eq!(f.seed, Some(7));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quantile_fit_is_affine_equivariant(seed in 0u64..1000, a in 0.01f64..100.0, b in -1e3f64..1e3) {
        let x = stable::sample(&sp(1.5, 0.3, 1.0, 0.0), 2000, seed).unwrap();
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let px = estimators::fit_quantile(&x, grid()).unwrap().params;
        let py = estimators::fit_quantile(&y, grid()).unwrap().params;
        prop_assert!((px.alpha - py.alpha).abs() < 1e-9 && (px.beta - py.beta).abs() < 1e-9);
        prop_assert!((py.gamma / (a * px.gamma) - 1.0).abs() < 1e-9);
        prop_assert!((py.delta - (a * px.delta + b)).abs() < 1e-9 * (1.0 + b.abs() + a));
    }
}
