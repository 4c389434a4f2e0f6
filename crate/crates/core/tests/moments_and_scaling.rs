use stablefit_core::moment_test::{self, MomentTestConfig, UMode};
use stablefit_core::rng::derive_seed;
use stablefit_core::scaling::{self, Subsampling};
use stablefit_core::special::chi2_1_sf;
use stablefit_core::stable::{self, StableParams};
use stablefit_core::stats;

fn sp(a: f64, b: f64) -> StableParams {
    StableParams::new(a, b, 1.0, 0.0).unwrap()
}

fn rejections(p: &StableParams, order: f64, seeds: u64, base: u64) -> usize {
    (0..seeds)
        .filter(|&s| {
            let x = stable::sample(p, 10_000, derive_seed(base, s)).unwrap();
            moment_test::trapani_test(&x, &MomentTestConfig::new(order, base + s)).unwrap().rejects(0.05)
        })
        .count()
}

#[test]
fn rescaled_moment_diverges_for_cauchy() {
    let c = sp(1.0, 0.0);
    let x = stable::sample(&c, 100_000, 3).unwrap();
    let small = moment_test::rescaled_moment(&x[..1_000], 2.0, 1.0).unwrap();
    let large = moment_test::rescaled_moment(&x, 2.0, 1.0).unwrap();
    assert!(large > small, "{small} -> {large}");
}

#[test]
fn finite_variance_is_rejected() {
    let g = sp(2.0, 0.0);
    let strong = (0..100)
        .filter(|&s| {
            let x = stable::sample(&g, 10_000, 500 + s).unwrap();
            moment_test::trapani_test(&x, &MomentTestConfig::new(2.0, s)).unwrap().p_value < 0.01
        })
        .count();
    assert!(strong >= 95, "{strong}");
}

#[test]
fn null_rejection_rate_is_nominal() {
    let r = rejections(&sp(1.0, 0.0), 2.0, 100, 77);
    assert!((1..=12).contains(&r), "{r}");
}

#[test]
fn statistic_is_chi_square_under_the_null() {
    let c = sp(1.0, 0.0);
    let mut theta: Vec<f64> = (0..500)
        .map(|s| {
            let x = stable::sample(&c, 2_000, derive_seed(9, s)).unwrap();
            moment_test::trapani_test(&x, &MomentTestConfig::new(2.0, s)).unwrap().theta
        })
        .collect();
    stats::sort(&mut theta);
    let d = stats::ks_distance(&theta, |t| 1.0 - chi2_1_sf(t));
    assert!(d < 1.628 / (500f64).sqrt(), "KS {d}");
}

#[test]
fn heavy_tail_pattern() {
    let p = sp(1.3, 0.5);
    assert!(rejections(&p, 1.0, 30, 5) >= 27);
    assert!(rejections(&p, 2.0, 30, 6) <= 3);
}

#[test]
fn power_grows_toward_gaussian() {
    let rates: Vec<usize> = [1.6, 1.8, 2.0].iter().map(|&a| rejections(&sp(a, 0.0), 2.0, 60, 8)).collect();
    assert!(rates[0] < rates[1] && rates[1] < rates[2], "{rates:?}");
}

#[test]
fn statistic_is_scale_free_and_seeded() {
    let x = stable::sample(&sp(1.8, 0.3), 5_000, 1).unwrap();
    let y: Vec<f64> = x.iter().map(|v| v * 1e3).collect();
    let cfg = MomentTestConfig::new(2.0, 42);
    let (a, b) = (moment_test::trapani_test(&x, &cfg).unwrap(), moment_test::trapani_test(&y, &cfg).unwrap());
    assert!((a.theta - b.theta).abs() <= 1e-9 * a.theta);
    assert_eq!(a, moment_test::trapani_test(&x, &cfg).unwrap());
    let random = MomentTestConfig {
        u_mode: UMode::Random,
        u_points: 2_000,
        ..cfg
    };
    let r = moment_test::trapani_test(&x, &random).unwrap();
    assert!((r.theta / a.theta - 1.0).abs() < 0.1, "{} vs {}", r.theta, a.theta);
    assert_eq!(a.r, 910);
}

#[test]
fn gaussian_std_does_not_grow() {
    let x = stable::sample(&StableParams::new(2.0, 0.0, 1.0, 0.0).unwrap(), 200_000, 3).unwrap();
    let curve = scaling::subsample_std_curve(&x, &[100, 1_000, 10_000], 300, 1, Subsampling::WithoutReplacement).unwrap();
    for pt in &curve {
        assert!((pt.mean / curve[2].mean - 1.0).abs() < 0.02, "{pt:?}");
    }
    assert!(scaling::fitted_slope(&curve, 0).unwrap().abs() < 0.01);
}

#[test]
fn heavy_tailed_std_grows() {
    let p = sp(1.3, 0.0);
    let x = stable::sample(&p, 2_000_000, 4).unwrap();
    let sizes = scaling::log_spaced_sizes(100, 30_000, 8);
    let curve = scaling::subsample_std_curve(&x, &sizes, 400, 2, Subsampling::WithReplacement).unwrap();
    let slope = scaling::fitted_slope(&curve, 2).unwrap();
    assert!(slope > 0.15 && slope < 0.35, "{slope}");
    let mid = &curve[3];
    assert!(mid.q95 / mid.q05 > 5.0, "{mid:?}");
    assert_eq!(
        curve,
        scaling::subsample_std_curve(&x, &sizes, 400, 2, Subsampling::WithReplacement).unwrap()
    );
}

#[test]
fn sample_maximum_follows_the_tail_exponent() {
    let p = sp(1.3, 0.0);
    let sizes = [300usize, 1_000, 3_000, 10_000, 30_000];
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let mut maxima: Vec<f64> = (0..200)
            .map(|s| {
                let x = stable::sample(&p, n, derive_seed(k as u64, s)).unwrap();
                x.into_iter().fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        stats::sort(&mut maxima);
        lx.push((n as f64).ln());
        ly.push(stats::quantile_sorted(&maxima, 0.5).ln());
    }
    let (_, slope) = stats::linear_fit(&lx, &ly).unwrap();
    let expect = scaling::typical_max(1.3, std::f64::consts::E).ln();
    assert!((slope - expect).abs() < 0.05, "{slope} vs {expect}");
}

#[test]
fn intercept_pins_the_theory_curve() {
    let p = StableParams::new(2.0, 0.0, 1.0, 0.0).unwrap();
    let c = scaling::calibrate_intercept(&p, 20_000, 5, 1).unwrap();
    assert!((c - 2f64.sqrt()).abs() < 0.01);
}

#[test]
fn iid_curve_is_seeded_and_flat_for_gaussian() {
    let g = StableParams::new(2.0, 0.0, 1.0, 0.0).unwrap();
    let curve = scaling::iid_std_curve(&g, &[100, 1_000, 5_000], 200, 3).unwrap();
    assert!(scaling::fitted_slope(&curve, 0).unwrap().abs() < 0.01);
    assert!((curve[2].mean - 2f64.sqrt()).abs() < 0.01);
    assert_eq!(curve, scaling::iid_std_curve(&g, &[100, 1_000, 5_000], 200, 3).unwrap());
    assert!(scaling::iid_std_curve(&g, &[1], 10, 0).is_err());
}
