use proptest::prelude::*;
use rand_distr::{Distribution, Gamma, StandardNormal};
use stablefit_core::estimators::{self, McCullochGrid};
use stablefit_core::panel::{self, AccountType, CleanConfig, Dimension, FirmYearRecord, SizeClass, Variable};
use stablefit_core::rng::rng_from_seed;
use stablefit_core::stable::{self, StableParams};

// Gamma(3, 1) deciles and quartiles (scipy.stats.gamma.ppf)
const GAMMA3_Q10: f64 = 1.102_065_328_249_321_4;
const GAMMA3_Q90: f64 = 5.322_320_337_834_211;
const GAMMA3_Q25: f64 = 1.727_299_417_860_519_2;
const GAMMA3_Q75: f64 = 3.920_402_060_292_561;

fn rec(row: usize, id: &str, year: i32, wages: f64, ebit: f64, employment: f64) -> FirmYearRecord {
    FirmYearRecord {
        row,
        firm_id: Some(id.to_string()),
        year: Some(year),
        country: "DE".to_string(),
        account_type: AccountType::Unconsolidated,
        size_class: None,
        nace4: Some(6201),
        wages: Some(wages),
        ebit: Some(ebit),
        employment: Some(employment),
        operating_revenue: None,
        total_assets: None,
        deflator_missing: false,
    }
}

/// Panel with duplicates, gaps, negatives, companion accounts and
/// out-of-window years mixed in.
fn dirty_panel(firms: usize, seed: u64) -> Vec<FirmYearRecord> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    for f in 0..firms {
        for year in 2004..2017 {
            if (f + year as usize) % 7 == 0 {
                continue;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut r = rec(out.len(), &format!("F{f:05}"), year, 40.0 + 10.0 * z.abs(), 60.0 * z, 1.0 + (f % 50) as f64);
            r.country = ["DE", "FR", "IT"][f % 3].to_string();
            r.nace4 = Some([111, 2511, 3511, 4120, 4711, 6201, 6419, 8510, 9700][f % 9]);
            if f % 11 == 0 {
                r.employment = Some(-1.0);
            }
            if f % 13 == 0 && year == 2010 {
                r.account_type = AccountType::ConsolidatedWithCompanion;
            }
            out.push(r.clone());
            if f % 17 == 0 {
                r.row = out.len();
                out.push(r);
            }
        }
    }
    out
}

#[test]
fn cleaning_reconciles_and_is_idempotent() {
    let input = dirty_panel(300, 1);
    let n_in = input.len();
    let once = panel::clean(input, &CleanConfig::default());
    assert_eq!(once.records.len() + once.rejections.len(), n_in);
    assert!(once.nulled_fields > 0);
    for reason in ["duplicate", "year_out_of_window", "companion_account"] {
        assert!(once.rejections.iter().any(|r| r.reason.code() == reason), "{reason}");
    }
    let mut rows: Vec<usize> = once.records.iter().map(|r| r.row).chain(once.rejections.iter().map(|r| r.row)).collect();
    rows.sort_unstable();
    assert_eq!(rows, (0..n_in).collect::<Vec<_>>());

    let twice = panel::clean(once.records.clone(), &CleanConfig::default());
    assert_eq!(twice.records, once.records);
    assert!(twice.rejections.is_empty() && twice.nulled_fields == 0);
}

#[test]
fn grouping_partitions_observations() {
    let cleaned = panel::clean(dirty_panel(300, 2), &CleanConfig::default());
    let obs = panel::observations(&cleaned.records);
    assert_eq!(obs.len(), cleaned.records.len());
    let with_lp = obs.iter().filter(|o| o.lp.is_some()).count();
    for dim in [Dimension::CountryYear, Dimension::CountrySize, Dimension::CountrySector] {
        let groups = panel::group(&obs, dim, Variable::Lp, None);
        assert_eq!(groups.iter().map(|g| g.n).sum::<usize>(), with_lp);
        assert!(groups.windows(2).all(|w| w[0].key < w[1].key));
        assert!(groups.iter().all(|g| g.below_threshold && g.currency.as_deref() == Some("EUR")));
    }
    let logs = panel::group(&obs, Dimension::CountryYear, Variable::LogLp, Some(1));
    for g in &logs {
        assert!(g.negative_share > 0.0 && g.excluded_nonpositive > 0);
        assert!(!g.below_threshold);
    }
    assert_eq!(logs.iter().map(|g| g.n + g.excluded_nonpositive).sum::<usize>(), with_lp);
}

#[test]
fn growth_needs_consecutive_years() {
    let rows = vec![
        rec(0, "a", 2008, 10.0, 0.0, 1.0),
        rec(1, "a", 2009, 12.0, 0.0, 1.0),
        rec(2, "a", 2011, 20.0, 0.0, 1.0),
        rec(3, "a", 2012, 15.0, 0.0, 1.0),
    ];
    let obs = panel::observations(&rows);
    let dlp: Vec<Option<f64>> = obs.iter().map(|o| o.dlp).collect();
    assert_eq!(dlp, [None, Some(2.0), None, Some(-5.0)]);
    assert!((obs[1].log_growth.unwrap() - (1.2f64).ln()).abs() < 1e-15);
    assert_eq!(obs[0].size_class, SizeClass::S);
}

#[test]
fn normal_interdecile_range() {
    let mut rng = rng_from_seed(3);
    let x: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let m = panel::dispersion_metrics(&x, None).unwrap();
    let expect = 2.0 * 1.281_551_565_544_600_4;
    assert!((m.iqr_90_10 / expect - 1.0).abs() < 0.02, "{}", m.iqr_90_10);
    assert!(!m.heavy_tail_warning);
    assert!(panel::dispersion_metrics(&x, Some(1.4)).unwrap().heavy_tail_warning);
}

#[test]
fn shifted_gamma_log_iqr_diverges() {
    // exact quantiles
    let level = GAMMA3_Q90 - GAMMA3_Q10;
    assert!((level - 4.22).abs() < 0.005);
    assert!(((GAMMA3_Q90 / GAMMA3_Q10).ln() - 1.5747).abs() < 1e-4);
    assert!((((GAMMA3_Q90 + 1.0) / (GAMMA3_Q10 + 1.0)).ln() - 1.1012).abs() < 1e-4);

    // sampled through the dispersion metrics
    let mut rng = rng_from_seed(4);
    let g = Gamma::new(3.0, 1.0).unwrap();
    let x: Vec<f64> = (0..400_000).map(|_| g.sample(&mut rng)).collect();
    let shifted: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
    let (a, b) = (panel::dispersion_metrics(&x, None).unwrap(), panel::dispersion_metrics(&shifted, None).unwrap());
    assert!((a.iqr_90_10 - b.iqr_90_10).abs() < 1e-9);
    assert!((a.iqr_90_10 - level).abs() < 0.05);
    assert!((a.iqr_75_25 - (GAMMA3_Q75 - GAMMA3_Q25)).abs() < 0.03);
    let la = panel::dispersion_metrics(&panel::log_transform(&x).values, None).unwrap();
    let lb = panel::dispersion_metrics(&panel::log_transform(&shifted).values, None).unwrap();
    assert!((la.iqr_90_10 - 1.5747).abs() < 0.02 && (lb.iqr_90_10 - 1.1012).abs() < 0.02);
}

#[test]
fn trimming_barely_moves_the_fit() {
    // the shift is a small systematic bias, so this holds at group sizes
    // near the fitting threshold and not for much larger samples
    let grid: McCullochGrid = estimators::build_grid(&estimators::default_alpha_axis(), &estimators::default_beta_axis()).unwrap();
    let truth = StableParams::new(1.36, 0.89, 14.9, 42.0).unwrap();
    let (mut diff, mut se) = ([0.0; 4], [0.0; 4]);
    for seed in 0..10 {
        let x = stable::sample(&truth, 10_000, 700 + seed).unwrap();
        let full = estimators::fit_quantile_bootstrap(&x, &grid, 100, seed, 1000).unwrap();
        let trimmed = estimators::fit_quantile(&panel::trim(&x, 0.0025).unwrap(), &grid).unwrap();
        let (a, b, s) = (full.as_array(), trimmed.as_array(), full.se.unwrap());
        for k in 0..4 {
            diff[k] += (a[k] - b[k]).abs();
            se[k] += s[k];
        }
    }
    for k in 0..4 {
        assert!(diff[k] < se[k], "param {k}: mean shift {} vs mean se {}", diff[k] / 10.0, se[k] / 10.0);
    }
    let x = stable::sample(&truth, 100, 1).unwrap();
    assert_eq!(panel::trim(&x, 0.0).unwrap().len(), x.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iqr_is_translation_invariant_and_scale_equivariant(
        x in prop::collection::vec(-1e3f64..1e3, 10..200),
        c in -1e3f64..1e3,
        s in 0.01f64..100.0,
    ) {
        let base = panel::dispersion_metrics(&x, None).unwrap();
        let moved: Vec<f64> = x.iter().map(|v| s * v + c).collect();
        let m = panel::dispersion_metrics(&moved, None).unwrap();
        let tol = 1e-9 * (1.0 + s * base.iqr_90_10 + c.abs());
        prop_assert!((m.iqr_90_10 - s * base.iqr_90_10).abs() < tol);
        prop_assert!((m.iqr_75_25 - s * base.iqr_75_25).abs() < tol);
        prop_assert!((m.quantiles.q50 - (s * base.quantiles.q50 + c)).abs() < tol);
    }

    #[test]
    fn cleaning_is_idempotent(firms in 1usize..40, seed in 0u64..1000) {
        let input = dirty_panel(firms, seed);
        let n = input.len();
        let once = panel::clean(input, &CleanConfig::default());
        prop_assert_eq!(once.records.len() + once.rejections.len(), n);
        let twice = panel::clean(once.records.clone(), &CleanConfig::default());
        prop_assert_eq!(twice.records, once.records);
    }
}
