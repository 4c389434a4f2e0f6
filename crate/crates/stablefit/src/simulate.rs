//! Synthetic firm-year panels in the ingestion schema.
//!
//! Labor productivity of every firm-year is an independent draw from the
//! configured model, one seeded stream per country-year, so each
//! country-year group is an i.i.d. sample. Wages and EBIT are split so
//! that `(wages + ebit) / employment` gives back the draw.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use stablefit_core::aep::{self, AepParams};
use stablefit_core::panel::{AccountType, FirmYearRecord, SizeClass};
use stablefit_core::rng::{derive_seed, rng_from_seed, seed_for_key};
use stablefit_core::stable::{self, StableParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Levy(StableParams),
    Aep(AepParams),
}

impl Family {
    fn draw(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        Ok(match self {
            Family::Levy(p) => stable::sample(p, n, seed)?,
            Family::Aep(p) => aep::aep_sample(p, n, seed)?,
        })
    }

    /// Probability of a negative draw.
    pub fn negative_share(&self) -> Result<f64> {
        Ok(match self {
            Family::Levy(p) => stable::cdf(p, 0.0)?,
            Family::Aep(p) => p.cdf(0.0),
        })
    }

    /// Same shape and scale, location moved so that `P(X < 0) = share`.
    pub fn with_negative_share(&self, share: f64) -> Result<Family> {
        if !(share > 0.0 && share < 1.0) {
            return Err(CliError::Config(format!("negative share must be in (0, 1), got {share}")));
        }
        Ok(match *self {
            Family::Levy(p) => {
                let z = stable::quantile(&StableParams::new(p.alpha, p.beta, p.gamma, 0.0)?, share)?;
                Family::Levy(StableParams::new(p.alpha, p.beta, p.gamma, -z)?)
            }
            Family::Aep(p) => {
                let z = AepParams::new(0.0, p.sigma, p.h, p.kappa)?.quantile(share)?;
                Family::Aep(AepParams::new(-z, p.sigma, p.h, p.kappa)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub family: Family,
    pub firms: usize,
    /// Firms are assigned to countries round-robin.
    pub countries: Vec<String>,
    pub first_year: i32,
    pub last_year: i32,
    /// Probability that a firm-year is absent.
    pub gap_rate: f64,
    /// Probability that a row carries one injected defect (duplicate,
    /// negative employment, missing id, out-of-window year, or companion
    /// account).
    pub dirty_rate: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.firms == 0 {
            return bad("need at least one firm");
        }
        if self.countries.is_empty() || self.countries.iter().any(|c| c.trim().is_empty()) {
            return bad("need at least one non-empty country code");
        }
        if self.last_year < self.first_year {
            return bad("last year before first year");
        }
        if !(0.0..1.0).contains(&self.gap_rate) || !(0.0..=1.0).contains(&self.dirty_rate) {
            return bad("gap rate must be in [0, 1) and dirty rate in [0, 1]");
        }
        Ok(())
    }
}

// one class per NACE section A..S
const NACE4: [u16; 19] = [
    111, 510, 2511, 3511, 3600, 4120, 4711, 4941, 5510, 6201, 6420, 6820, 7112, 7711, 8411, 8510, 8610, 9001, 9602,
];

fn size_and_employment<R: Rng>(rng: &mut R) -> (SizeClass, f64) {
    let u: f64 = rng.random();
    let (class, lo, hi) = match u {
        u if u < 0.6 => (SizeClass::S, 1, 15),
        u if u < 0.85 => (SizeClass::M, 15, 150),
        u if u < 0.95 => (SizeClass::L, 150, 1000),
        _ => (SizeClass::V, 1000, 5000),
    };
    (class, rng.random_range(lo..hi) as f64)
}

/// Generates the panel, sorted by firm and year, with rows numbered from 1.
pub fn simulate(cfg: &SimConfig) -> Result<Vec<FirmYearRecord>> {
    cfg.validate()?;
    let mut rows: Vec<FirmYearRecord> = Vec::new();
    for f in 0..cfg.firms {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, f as u64));
        let country = cfg.countries[f % cfg.countries.len()].trim().to_ascii_uppercase();
        let nace4 = NACE4[rng.random_range(0..NACE4.len())];
        let (size, employment) = size_and_employment(&mut rng);
        for year in cfg.first_year..=cfg.last_year {
            if rng.random::<f64>() < cfg.gap_rate {
                continue;
            }
            rows.push(FirmYearRecord {
                row: 0,
                firm_id: Some(format!("F{f:07}")),
                year: Some(year),
                country: country.clone(),
                account_type: AccountType::Unconsolidated,
                size_class: Some(size),
                nace4: Some(nace4),
                wages: None,
                ebit: None,
                employment: Some(employment),
                operating_revenue: None,
                total_assets: None,
                deflator_missing: false,
            });
        }
    }

    let mut cells: BTreeMap<(String, i32), Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        cells.entry((r.country.clone(), r.year.unwrap_or_default())).or_default().push(i);
    }
    for ((country, year), idx) in &cells {
        let lp = cfg.family.draw(idx.len(), seed_for_key(cfg.seed, &format!("{country}-{year}")))?;
        for (&i, v) in idx.iter().zip(lp) {
            let r = &mut rows[i];
            let e = r.employment.unwrap_or(1.0);
            let wages = (0.6 * v.abs() + 5.0) * e;
            r.wages = Some(wages);
            r.ebit = Some(v * e - wages);
        }
    }

    if cfg.dirty_rate > 0.0 {
        rows = inject_defects(rows, cfg);
    }
    for (i, r) in rows.iter_mut().enumerate() {
        r.row = i + 1;
    }
    Ok(rows)
}

fn inject_defects(rows: Vec<FirmYearRecord>, cfg: &SimConfig) -> Vec<FirmYearRecord> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, u64::MAX));
    let mut out = Vec::with_capacity(rows.len() + rows.len() / 10);
    for mut r in rows {
        if rng.random::<f64>() >= cfg.dirty_rate {
            out.push(r);
            continue;
        }
        match rng.random_range(0..5) {
            0 => out.push(r.clone()),
            1 => r.employment = r.employment.map(|e| -e),
            2 => r.firm_id = None,
            3 => r.year = Some(cfg.first_year - 3),
            _ => r.account_type = AccountType::ConsolidatedWithCompanion,
        }
        out.push(r);
    }
    out
}
