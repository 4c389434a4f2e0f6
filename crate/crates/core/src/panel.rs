//! Firm-year panel cleaning, deflation, productivity variables, grouping,
//! and dispersion metrics. Parsing lives in the IO crate; this module works
//! on already-typed records.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::estimators::QuantileSummary;
use crate::gof;
use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountType {
    Unconsolidated,
    Consolidated,
    ConsolidatedWithCompanion,
}

impl AccountType {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unconsolidated" | "u1" | "u" => Some(AccountType::Unconsolidated),
            "consolidated" | "c1" | "c" => Some(AccountType::Consolidated),
            "consolidated_with_companion" | "c2" | "u2" => Some(AccountType::ConsolidatedWithCompanion),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AccountType::Unconsolidated => "unconsolidated",
            AccountType::Consolidated => "consolidated",
            AccountType::ConsolidatedWithCompanion => "consolidated_with_companion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SizeClass {
    S,
    M,
    L,
    V,
}

impl SizeClass {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S" | "SMALL" => Some(SizeClass::S),
            "M" | "MEDIUM" => Some(SizeClass::M),
            "L" | "LARGE" => Some(SizeClass::L),
            "V" | "VL" | "VERY LARGE" | "VERY_LARGE" => Some(SizeClass::V),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::S => "S",
            SizeClass::M => "M",
            SizeClass::L => "L",
            SizeClass::V => "V",
        }
    }

    /// Size from operating revenue and total assets (EUR) and headcount:
    /// the largest class any one of them qualifies for.
    pub fn from_thresholds(operating_revenue: Option<f64>, total_assets: Option<f64>, employment: Option<f64>) -> Self {
        let meets = |rev: f64, assets: f64, empl: f64| {
            operating_revenue.is_some_and(|v| v >= rev)
                || total_assets.is_some_and(|v| v >= assets)
                || employment.is_some_and(|v| v >= empl)
        };
        if meets(100e6, 200e6, 1000.0) {
            SizeClass::V
        } else if meets(10e6, 20e6, 150.0) {
            SizeClass::L
        } else if meets(1e6, 2e6, 15.0) {
            SizeClass::M
        } else {
            SizeClass::S
        }
    }
}

/// Broad industry aggregate of NACE Rev. 2 sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    Agr,
    Manu,
    Energy,
    Cons,
    NfServ,
    Info,
    Fire,
    NmServ,
    /// Households, extraterritorial bodies, or unknown codes.
    Other,
}

impl Sector {
    pub fn as_str(self) -> &'static str {
        match self {
            Sector::Agr => "Agr",
            Sector::Manu => "Manu",
            Sector::Energy => "Energy",
            Sector::Cons => "Cons",
            Sector::NfServ => "NF-Serv",
            Sector::Info => "Info",
            Sector::Fire => "FIRE",
            Sector::NmServ => "NM-Serv",
            Sector::Other => "Other",
        }
    }

    pub fn from_section(section: char) -> Self {
        match section {
            'A' | 'B' => Sector::Agr,
            'C' => Sector::Manu,
            'D' | 'E' => Sector::Energy,
            'F' => Sector::Cons,
            'G' | 'H' | 'I' | 'N' | 'R' | 'S' => Sector::NfServ,
            'J' => Sector::Info,
            'K' | 'L' | 'M' => Sector::Fire,
            'O' | 'P' | 'Q' => Sector::NmServ,
            _ => Sector::Other,
        }
    }

    pub fn from_nace4(nace4: u16) -> Self {
        nace_section(nace4).map_or(Sector::Other, Sector::from_section)
    }
}

/// NACE Rev. 2 section letter of a four-digit class code.
pub fn nace_section(nace4: u16) -> Option<char> {
    if nace4 > 9999 {
        return None;
    }
    Some(match nace4 / 100 {
        1..=3 => 'A',
        5..=9 => 'B',
        10..=33 => 'C',
        35 => 'D',
        36..=39 => 'E',
        41..=43 => 'F',
        45..=47 => 'G',
        49..=53 => 'H',
        55..=56 => 'I',
        58..=63 => 'J',
        64..=66 => 'K',
        68 => 'L',
        69..=75 => 'M',
        77..=82 => 'N',
        84 => 'O',
        85 => 'P',
        86..=88 => 'Q',
        90..=93 => 'R',
        94..=96 => 'S',
        97..=98 => 'T',
        99 => 'U',
        _ => return None,
    })
}

/// Reporting currency of a country (ISO 3166 alpha-2). Values are never
/// converted between currencies.
pub fn currency(country: &str) -> Option<&'static str> {
    Some(match country.trim().to_ascii_uppercase().as_str() {
        "AT" | "BE" | "CY" | "DE" | "EE" | "ES" | "FI" | "FR" | "GR" | "IE" | "IT" | "LT" | "LU" | "LV" | "MT" | "NL"
        | "PT" | "SI" | "SK" | "ME" | "XK" | "MC" => "EUR",
        "GB" | "UK" => "GBP",
        "BG" => "BGN",
        "CH" | "LI" => "CHF",
        "CZ" => "CZK",
        "DK" => "DKK",
        "HR" => "HRK",
        "HU" => "HUF",
        "IS" => "ISK",
        "NO" => "NOK",
        "PL" => "PLN",
        "RO" => "RON",
        "RS" => "RSD",
        "RU" => "RUB",
        "SE" => "SEK",
        "TR" => "TRY",
        "UA" => "UAH",
        "BA" => "BAM",
        "MK" => "MKD",
        "AL" => "ALL",
        "MD" => "MDL",
        "BY" => "BYN",
        _ => return None,
    })
}

/// One firm-year row. Missing and invalid fields are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmYearRecord {
    /// Position in the input, for the rejection log.
    pub row: usize,
    pub firm_id: Option<String>,
    pub year: Option<i32>,
    pub country: String,
    pub account_type: AccountType,
    pub size_class: Option<SizeClass>,
    pub nace4: Option<u16>,
    pub wages: Option<f64>,
    pub ebit: Option<f64>,
    pub employment: Option<f64>,
    pub operating_revenue: Option<f64>,
    pub total_assets: Option<f64>,
    /// Set by [`deflate`] when no deflator matched.
    #[serde(default)]
    pub deflator_missing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Malformed,
    MissingId,
    MissingYear,
    YearOutOfWindow,
    CompanionAccount,
    Duplicate,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::Malformed => "malformed",
            RejectReason::MissingId => "missing_id",
            RejectReason::MissingYear => "missing_year",
            RejectReason::YearOutOfWindow => "year_out_of_window",
            RejectReason::CompanionAccount => "companion_account",
            RejectReason::Duplicate => "duplicate",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub row: usize,
    pub firm_id: Option<String>,
    pub year: Option<i32>,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub first_year: i32,
    pub last_year: i32,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            first_year: 2006,
            last_year: 2015,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cleaned {
    pub records: Vec<FirmYearRecord>,
    pub rejections: Vec<Rejection>,
    /// Number of negative fields set to missing.
    pub nulled_fields: usize,
}

fn null_negative(v: &mut Option<f64>) -> bool {
    match *v {
        Some(x) if x < 0.0 || !x.is_finite() => {
            *v = None;
            true
        }
        _ => false,
    }
}

/// Applies the record-level cleaning rules. The first row of a duplicated
/// (firm, year) pair survives. Idempotent.
pub fn clean(records: Vec<FirmYearRecord>, cfg: &CleanConfig) -> Cleaned {
    let mut out = Cleaned::default();
    let mut seen: BTreeSet<(String, i32)> = BTreeSet::new();
    for mut r in records {
        let reason = match (&r.firm_id, r.year) {
            (None, _) => Some(RejectReason::MissingId),
            (Some(id), _) if id.trim().is_empty() => Some(RejectReason::MissingId),
            (_, None) => Some(RejectReason::MissingYear),
            (_, Some(y)) if y < cfg.first_year || y > cfg.last_year => Some(RejectReason::YearOutOfWindow),
            _ if r.account_type == AccountType::ConsolidatedWithCompanion => Some(RejectReason::CompanionAccount),
            (Some(id), Some(y)) if !seen.insert((id.clone(), y)) => Some(RejectReason::Duplicate),
            _ => None,
        };
        if let Some(reason) = reason {
            out.rejections.push(Rejection {
                row: r.row,
                firm_id: r.firm_id,
                year: r.year,
                reason,
            });
            continue;
        }
        for v in [&mut r.wages, &mut r.employment, &mut r.total_assets, &mut r.operating_revenue] {
            out.nulled_fields += null_negative(v) as usize;
        }
        if r.ebit.is_some_and(|x| !x.is_finite()) {
            r.ebit = None;
            out.nulled_fields += 1;
        }
        out.records.push(r);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deflators {
    pub va: f64,
    pub output: f64,
    pub capital: f64,
}

/// Deflators keyed by (country, two-digit NACE division, year).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeflatorTable {
    map: BTreeMap<(String, u8, i32), Deflators>,
}

impl DeflatorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, country: &str, nace2: u8, year: i32, d: Deflators) -> Result<()> {
        for (name, v) in [("va_deflator", d.va), ("output_deflator", d.output), ("capital_deflator", d.capital)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        self.map.insert((country.to_ascii_uppercase(), nace2, year), d);
        Ok(())
    }

    pub fn get(&self, country: &str, nace2: u8, year: i32) -> Option<&Deflators> {
        self.map.get(&(country.to_ascii_uppercase(), nace2, year))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeflateStats {
    pub matched: usize,
    pub missing: usize,
}

/// Divides wages and EBIT by the value-added deflator and total assets by
/// the capital deflator. Rows without a deflator are flagged.
pub fn deflate(records: &mut [FirmYearRecord], table: &DeflatorTable) -> DeflateStats {
    let mut stats = DeflateStats::default();
    for r in records.iter_mut() {
        let d = match (r.nace4, r.year) {
            (Some(n), Some(y)) => table.get(&r.country, (n / 100) as u8, y),
            _ => None,
        };
        match d {
            Some(d) => {
                r.wages = r.wages.map(|v| v / d.va);
                r.ebit = r.ebit.map(|v| v / d.va);
                r.total_assets = r.total_assets.map(|v| v / d.capital);
                stats.matched += 1;
            }
            None => {
                r.deflator_missing = true;
                stats.missing += 1;
            }
        }
    }
    stats
}

/// Value added (wages + EBIT) per employee. May be negative.
pub fn compute_lp(r: &FirmYearRecord) -> Option<f64> {
    if r.deflator_missing {
        return None;
    }
    let e = r.employment.filter(|&e| e > 0.0)?;
    Some((r.wages? + r.ebit?) / e)
}

/// `LP_t − LP_{t−1}` for each year of a firm series sorted by year; `None`
/// for the first year, after gaps, and where either level is missing.
pub fn compute_dlp(series: &[(i32, Option<f64>)]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(series.len());
    for (i, &(year, lp)) in series.iter().enumerate() {
        let d = match (i.checked_sub(1).map(|j| series[j]), lp) {
            (Some((py, Some(prev))), Some(cur)) if py + 1 == year => Some(cur - prev),
            _ => None,
        };
        out.push(d);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogTransformed {
    pub values: Vec<f64>,
    pub excluded: usize,
}

/// Natural log of the positive values; the rest are dropped and counted.
pub fn log_transform(values: &[f64]) -> LogTransformed {
    let logs: Vec<f64> = values.iter().filter(|&&v| v > 0.0).map(|v| v.ln()).collect();
    LogTransformed {
        excluded: values.len() - logs.len(),
        values: logs,
    }
}

/// Productivity variables of one firm-year after cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub firm_id: String,
    pub year: i32,
    pub country: String,
    pub size_class: SizeClass,
    pub sector: Sector,
    pub lp: Option<f64>,
    pub dlp: Option<f64>,
    pub log_lp: Option<f64>,
    pub log_growth: Option<f64>,
}

/// Builds observations from cleaned records. Size falls back to the
/// revenue/assets/headcount thresholds when the class column is empty.
pub fn observations(records: &[FirmYearRecord]) -> Vec<Observation> {
    let mut idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].firm_id.is_some() && records[i].year.is_some()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        (ra.firm_id.as_deref(), ra.year).cmp(&(rb.firm_id.as_deref(), rb.year))
    });
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let id = records[idx[start]].firm_id.as_deref();
        let mut end = start;
        while end < idx.len() && records[idx[end]].firm_id.as_deref() == id {
            end += 1;
        }
        let firm = &idx[start..end];
        let lps: Vec<(i32, Option<f64>)> = firm.iter().map(|&i| (records[i].year.unwrap_or(0), compute_lp(&records[i]))).collect();
        let dlps = compute_dlp(&lps);
        let logs: Vec<(i32, Option<f64>)> = lps.iter().map(|&(y, v)| (y, v.filter(|&v| v > 0.0).map(f64::ln))).collect();
        let growth = compute_dlp(&logs);
        for (k, &i) in firm.iter().enumerate() {
            let r = &records[i];
            out.push(Observation {
                firm_id: r.firm_id.clone().unwrap_or_default(),
                year: lps[k].0,
                country: r.country.to_ascii_uppercase(),
                size_class: r
                    .size_class
                    .unwrap_or_else(|| SizeClass::from_thresholds(r.operating_revenue, r.total_assets, r.employment)),
                sector: r.nace4.map_or(Sector::Other, Sector::from_nace4),
                lp: lps[k].1,
                dlp: dlps[k],
                log_lp: logs[k].1,
                log_growth: growth[k],
            });
        }
        start = end;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variable {
    Lp,
    Dlp,
    LogLp,
    LogGrowth,
}

impl Variable {
    pub fn as_str(self) -> &'static str {
        match self {
            Variable::Lp => "lp",
            Variable::Dlp => "dlp",
            Variable::LogLp => "log-lp",
            Variable::LogGrowth => "log-growth",
        }
    }

    /// The variable's value and the level it is derived from.
    fn pick(self, o: &Observation) -> (Option<f64>, Option<f64>) {
        match self {
            Variable::Lp => (o.lp, o.lp),
            Variable::Dlp => (o.dlp, o.dlp),
            Variable::LogLp => (o.log_lp, o.lp),
            Variable::LogGrowth => (o.log_growth, o.dlp.and(o.lp)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    CountryYear,
    CountrySize,
    CountrySector,
}

impl Dimension {
    /// Minimum group size for fitting.
    pub fn threshold(self) -> usize {
        match self {
            Dimension::CountryYear => 10_000,
            Dimension::CountrySize => 5_000,
            Dimension::CountrySector => 1_000,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::CountryYear => "country-year",
            Dimension::CountrySize => "country-size",
            Dimension::CountrySector => "country-sector",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub country: String,
    pub part: String,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.country, self.part)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelGroup {
    pub key: GroupKey,
    pub dimension: Dimension,
    pub variable: Variable,
    pub values: Vec<f64>,
    pub n: usize,
    /// Share of negative values of the underlying level variable.
    pub negative_share: f64,
    /// Values dropped by the log transform.
    pub excluded_nonpositive: usize,
    pub currency: Option<String>,
    pub below_threshold: bool,
}

fn group_part(o: &Observation, dim: Dimension) -> String {
    match dim {
        Dimension::CountryYear => format!("{}", o.year),
        Dimension::CountrySize => String::from(o.size_class.as_str()),
        Dimension::CountrySector => String::from(o.sector.as_str()),
    }
}

/// Partitions observations by `dim` and collects `variable`. Groups under
/// `min_n` (the dimension default when `None`) are kept but flagged.
pub fn group(obs: &[Observation], dim: Dimension, variable: Variable, min_n: Option<usize>) -> Vec<PanelGroup> {
    let threshold = min_n.unwrap_or(dim.threshold());
    // (values, levels, negatives, excluded)
    let mut acc: BTreeMap<GroupKey, (Vec<f64>, usize, usize, usize)> = BTreeMap::new();
    for o in obs {
        let key = GroupKey {
            country: o.country.clone(),
            part: group_part(o, dim),
        };
        let e = acc.entry(key).or_default();
        let (v, level) = variable.pick(o);
        if let Some(l) = level {
            e.1 += 1;
            e.2 += (l < 0.0) as usize;
        }
        match v {
            Some(v) => e.0.push(v),
            None if level.is_some() && matches!(variable, Variable::LogLp | Variable::LogGrowth) => e.3 += 1,
            None => {}
        }
    }
    acc.into_iter()
        .map(|(key, (values, levels, neg, excluded))| {
            let n = values.len();
            PanelGroup {
                currency: currency(&key.country).map(String::from),
                key,
                dimension: dim,
                variable,
                values,
                n,
                negative_share: if levels == 0 { 0.0 } else { neg as f64 / levels as f64 },
                excluded_nonpositive: excluded,
                below_threshold: n < threshold,
            }
        })
        .collect()
}

/// Removes `⌊n·fraction⌋` observations from each end; the result is sorted.
pub fn trim(values: &[f64], fraction: f64) -> Result<Vec<f64>> {
    gof::trimmed_sorted(values, fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionMetrics {
    pub iqr_90_10: f64,
    pub iqr_75_25: f64,
    pub std: f64,
    pub quantiles: QuantileSummary,
    /// Set when a fitted tail exponent below two makes `std` unreliable.
    pub heavy_tail_warning: bool,
}

pub fn dispersion_metrics(values: &[f64], fitted_alpha: Option<f64>) -> Result<DispersionMetrics> {
    if values.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: values.len(),
        });
    }
    let mut x = values.to_vec();
    stats::sort(&mut x);
    let q = |p| stats::quantile_sorted(&x, p);
    Ok(DispersionMetrics {
        iqr_90_10: q(0.9) - q(0.1),
        iqr_75_25: q(0.75) - q(0.25),
        std: stats::std_dev(&x),
        quantiles: QuantileSummary::from_scratch(&mut x.clone()),
        heavy_tail_warning: fitted_alpha.is_some_and(|a| a < 2.0),
    })
}
