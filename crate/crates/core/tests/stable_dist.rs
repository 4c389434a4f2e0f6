use std::f64::consts::PI;

use proptest::prelude::*;
use stablefit_core::quad::{self, Tolerance};
use stablefit_core::rng::rng_from_seed;
use stablefit_core::special::{norm_cdf, norm_quantile};
use stablefit_core::stable::{self, StableParams};
use stablefit_core::stats;

use rand::Rng;

fn sp(a: f64, b: f64, g: f64, d: f64) -> StableParams {
    StableParams::new(a, b, g, d).unwrap()
}

fn france() -> StableParams {
    sp(1.36, 0.89, 14.9, 42.0)
}

#[test]
fn char_fn_values() {
    let g = stable::char_fn(&sp(2.0, 0.0, 1.0, 0.0), 1.0).unwrap();
    assert!((g.re - (-1.0f64).exp()).abs() < 1e-15 && g.im.abs() < 1e-15);
    for p in [france(), sp(0.7, -0.3, 2.0, 1.0), sp(1.0, 0.5, 1.0, 3.0)] {
        let z = stable::char_fn(&p, 0.0).unwrap();
        assert_eq!((z.re, z.im), (1.0, 0.0));
        let t = 0.37;
        let z = stable::char_fn(&p, t).unwrap();
        let m = z.re.hypot(z.im);
        assert!((m - (-(p.gamma * t).powf(p.alpha)).exp()).abs() < 1e-14);
    }
    // arbitrary-precision evaluation of the S0 formula
    let z = stable::char_fn(&france(), 0.05).unwrap();
    assert!((z.re - -0.303_202_055_133_501_65).abs() < 1e-13);
    assert!((z.im - 0.412_149_904_605_375_67).abs() < 1e-13);
    let z = stable::char_fn(&france(), -0.05).unwrap();
    assert!((z.im - -0.412_149_904_605_375_67).abs() < 1e-13);
    let z = stable::char_fn(&sp(1.0, 0.5, 2.0, 1.0), 0.7).unwrap();
    assert!((z.re - 0.210_222_665_084_260_53).abs() < 1e-13);
    assert!((z.im - 0.128_904_979_384_385_28).abs() < 1e-13);
    assert!(stable::char_fn(&StableParams { alpha: 2.5, beta: 0.0, gamma: 1.0, delta: 0.0 }, 1.0).is_err());
}

#[test]
fn density_and_cdf_reference_values() {
    // standard S0 values, agreed to 1e-15 by two independent evaluations
    let cases: [(f64, f64, f64, f64, f64); 13] = [
        (1.36, 0.89, -3.0, 0.005_386_983_220_570_457, 0.006_856_975_683_895_205_7),
        (1.36, 0.89, -1.0, 0.212_848_623_859_225_64, 0.154_471_332_390_299_6),
        (1.36, 0.89, 0.0, 0.276_391_940_416_258_5, 0.416_741_169_446_650_03),
        (1.36, 0.89, 0.5, 0.240_422_299_794_729_35, 0.547_106_203_658_110_9),
        (1.36, 0.89, 2.0, 0.102_237_823_552_809_09, 0.797_130_804_668_000_34),
        (1.36, 0.89, 10.0, 0.003_337_358_097_207_789_1, 0.977_314_139_050_804_51),
        (0.7, -0.5, -2.0, 0.066_781_324_738_709_586, 0.278_587_525_151_703_15),
        (0.7, -0.5, 0.0, 0.302_465_201_919_093_18, 0.570_577_439_955_393_86),
        (0.7, -0.5, 1.0, 0.106_597_140_554_279_21, 0.854_885_851_373_882_63),
        (0.7, -0.5, 5.0, 0.006_440_623_232_155_980_1, 0.948_900_329_919_877_51),
        (1.0, 0.5, -1.0, 0.179_278_437_642_189, 0.165_443_777_209_766_19),
        (1.0, 0.5, 0.3, 0.254_500_809_244_785_8, 0.519_886_007_636_947_86),
        (1.0, 0.5, 3.0, 0.045_800_034_810_538_935, 0.840_200_195_970_553_38),
    ];
    for (a, b, x, f, c) in cases {
        let p = sp(a, b, 1.0, 0.0);
        let pf = stable::pdf(&p, x).unwrap();
        let pc = stable::cdf(&p, x).unwrap();
        assert!((pf - f).abs() < 1e-10, "pdf({a},{b},{x}) = {pf}, want {f}");
        assert!((pc - c).abs() < 1e-10, "cdf({a},{b},{x}) = {pc}, want {c}");
    }
}

#[test]
fn closed_forms() {
    let gauss = sp(2.0, 0.0, 1.0, 0.0);
    assert!((stable::pdf(&gauss, 0.0).unwrap() - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    let cauchy = sp(1.0, 0.0, 1.0, 0.0);
    assert!((stable::pdf(&cauchy, 0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
    assert!((stable::cdf(&cauchy, 1.0).unwrap() - 0.75).abs() < 1e-15);
    assert!((stable::quantile(&gauss, 0.95).unwrap() - norm_quantile(0.95) * 2f64.sqrt()).abs() < 1e-8);
    assert!((stable::quantile(&cauchy, 0.95).unwrap() - (0.45 * PI).tan()).abs() < 1e-8);
    for a in [0.6, 1.3, 1.7] {
        assert!((stable::cdf(&sp(a, 0.0, 2.0, 3.0), 3.0).unwrap() - 0.5).abs() < 1e-12);
    }
    // near-Gaussian body against the closed form
    let g = sp(2.0, 0.0, 1.5, -2.0);
    for i in 0..20 {
        let x = -8.0 + 0.8 * i as f64;
        let z = (x + 2.0) / (1.5 * 2f64.sqrt());
        assert!((stable::cdf(&g, x).unwrap() - norm_cdf(z)).abs() < 1e-12);
    }
    // the integral path just off the closed-form branches
    let near_gauss = sp(1.9999, 0.0, 1.0, 0.0);
    let near_cauchy = sp(1.00001, 0.0, 1.0, 0.0);
    for x in [-3.0, -1.0, 0.0, 0.5, 2.0] {
        let d = stable::pdf(&near_gauss, x).unwrap() - (-0.25 * x * x).exp() / (4.0 * PI).sqrt();
        assert!(d.abs() < 1e-4, "x={x}: {d}");
        let d = stable::pdf(&near_cauchy, x).unwrap() - 1.0 / (PI * (1.0 + x * x));
        assert!(d.abs() < 1e-4, "x={x}: {d}");
    }
}

#[test]
fn france_normalization_and_round_trip() {
    let p = france();
    let tol = Tolerance {
        abs: 1e-12,
        rel: 1e-11,
        max_intervals: 2000,
    };
    let q_lo = stable::quantile(&p, 1e-7).unwrap();
    let q_hi = stable::quantile(&p, 1.0 - 1e-7).unwrap();
    let body = quad::integrate(|x| stable::pdf(&p, x).unwrap(), q_lo, q_hi, tol).unwrap().value;
    let mass = body + stable::cdf(&p, q_lo).unwrap() + stable::sf(&p, q_hi).unwrap();
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");

    let x95 = stable::quantile(&p, 0.95).unwrap();
    assert!((stable::cdf(&p, x95).unwrap() - 0.95).abs() < 1e-8);
    // bisection on the cdf as an independent median
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if stable::cdf(&p, mid).unwrap() < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((stable::quantile(&p, 0.5).unwrap() - 0.5 * (lo + hi)).abs() < 1e-7);
}

#[test]
fn pdf_is_derivative_of_cdf() {
    for p in [france(), sp(0.6, 1.0, 1.0, 0.0), sp(1.0, -0.9, 1.0, 0.0), sp(1.9, 0.3, 1.0, 0.0)] {
        for x in [-2.0, -0.3, 0.4, 1.7, 6.0] {
            let x = p.delta + p.gamma * x;
            let h = 1e-4 * p.gamma;
            let d = (stable::cdf(&p, x + h).unwrap() - stable::cdf(&p, x - h).unwrap()) / (2.0 * h);
            let f = stable::pdf(&p, x).unwrap();
            assert!((d - f).abs() < 1e-6 * (1.0 + f) / p.gamma, "{p:?} x={x}: {d} vs {f}");
        }
    }
}

#[test]
fn far_tail_density_matches_power_law() {
    // f(x) ~ α C_α (1 ± β) |x|^(−α−1); at α = 1 that is (1 ± β)/(π x²)
    for (a, b) in [(1.0, 0.9), (1.0, -0.5), (1.3, 0.5), (0.7, 0.2)] {
        let p = sp(a, b, 1.0, 0.0);
        let c = libm::tgamma(a) * (0.5 * PI * a).sin() / PI;
        for x in [1e4, -1e4, 1e6, -1e6] {
            let side = if x > 0.0 { 1.0 + b } else { 1.0 - b };
            let asy = a * c * side * f64::abs(x).powf(-a - 1.0);
            let f = stable::pdf(&p, x).unwrap();
            assert!((f / asy - 1.0).abs() < 2e-3, "alpha={a} beta={b} x={x}: {f} vs {asy}");
        }
    }
}

#[test]
fn sampler_moments_and_determinism() {
    let g = stable::sample(&sp(2.0, 0.0, 1.0, 0.0), 100_000, 7).unwrap();
    assert!(stats::mean(&g).abs() < 0.05);
    assert!((stats::std_dev(&g).powi(2) - 2.0).abs() < 0.1);
    assert_eq!(stable::sample(&france(), 500, 3).unwrap(), stable::sample(&france(), 500, 3).unwrap());
    assert_ne!(stable::sample(&france(), 500, 3).unwrap(), stable::sample(&france(), 500, 4).unwrap());
}

#[test]
fn sampler_matches_cdf() {
    let p = sp(1.3, 0.5, 1.0, 0.0);
    let mut x = stable::sample(&p, 100_000, 11).unwrap();
    stats::sort(&mut x);
    let d = stats::ks_distance(&x, |v| stable::cdf(&p, v).unwrap());
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn sampler_agrees_with_inverse_cdf_draws() {
    let p = sp(0.8, -0.6, 2.0, 1.0);
    let n = 4000;
    let cms = stable::sample(&p, n, 21).unwrap();
    let mut rng = rng_from_seed(22);
    let inv: Vec<f64> = (0..n)
        .map(|_| stable::quantile(&p, rng.random_range(1e-12..1.0 - 1e-12)).unwrap())
        .collect();
    let d = stats::ks_two_sample(&cms, &inv);
    // 1% critical value for equal sizes: 1.628·sqrt(2/n)
    assert!(d < 1.628 * (2.0 / n as f64).sqrt(), "KS {d}");
}

#[test]
fn tail_asymptotics() {
    let p = france();
    let d = 400.0;
    let far = stable::tail_prob_asymptotic(&p, p.delta + 2.0 * d).unwrap();
    let r = far / stable::tail_prob_asymptotic(&p, p.delta + d).unwrap();
    assert!((r - 2f64.powf(-1.36)).abs() < 1e-14);
    let c = sp(1.0, 0.0, 1.0, 0.0);
    let t = stable::tail_prob_asymptotic(&c, 1e4).unwrap();
    assert!((t / (1.0 / (PI * 1e4)) - 1.0).abs() < 1e-12);
    let x4 = stable::quantile(&p, 1.0 - 1e-4).unwrap();
    let ratio = stable::tail_prob_asymptotic(&p, x4).unwrap() / stable::sf(&p, x4).unwrap();
    assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    assert!(stable::tail_prob_asymptotic(&sp(2.0, 0.0, 1.0, 0.0), 100.0).is_err());
    assert!(stable::tail_prob_asymptotic(&p, 50.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn location_scale_equivariance(
        ai in 0usize..3,
        beta in -1.0f64..1.0,
        gamma in 0.05f64..20.0,
        delta in -50.0f64..50.0,
        z in -6.0f64..6.0,
    ) {
        let alpha = [0.8, 1.3, 2.0][ai];
        let std = sp(alpha, beta, 1.0, 0.0);
        let p = sp(alpha, beta, gamma, delta);
        let x = delta + gamma * z;
        let lhs = stable::pdf(&std, z).unwrap() / gamma;
        let rhs = stable::pdf(&p, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1e-300) + 1e-14, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn quantile_inverts_cdf(alpha in 0.5f64..2.0, beta in -1.0f64..1.0, q in 0.001f64..0.999) {
        let p = sp(alpha, beta, 1.0, 0.0);
        let x = stable::quantile(&p, q).unwrap();
        prop_assert!((stable::cdf(&p, x).unwrap() - q).abs() < 1e-8);
        let x2 = stable::quantile(&p, stable::cdf(&p, x).unwrap()).unwrap();
        prop_assert!((x2 - x).abs() < 1e-6 * (1.0 + x.abs()));
    }

    #[test]
    fn cdf_is_monotone(alpha in 0.5f64..2.0, beta in -1.0f64..1.0, x in -20.0f64..20.0, dx in 0.0f64..5.0) {
        let p = sp(alpha, beta, 1.0, 0.0);
        let (a, b) = (stable::cdf(&p, x).unwrap(), stable::cdf(&p, x + dx).unwrap());
        prop_assert!((0.0..=1.0).contains(&a) && b >= a - 1e-12);
    }
}
