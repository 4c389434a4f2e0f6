//! CSV ingestion of firm-year panels and deflator tables, and writers for
//! panels and rejection logs.
//!
//! Panel schema (header names, any order, extra columns ignored):
//! `firm_id, year, country, account_type, size_class, nace4, wages, ebit,
//! employment` plus the optional `operating_revenue, total_assets`. Empty
//! cells, `NA` and `NaN` are missing values. Lines starting with `#` are
//! comments.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use stablefit_core::panel::{
    self, AccountType, CleanConfig, DeflatorTable, Deflators, FirmYearRecord, RejectReason, Rejection, SizeClass,
};

use crate::error::{CliError, Result};
use crate::provenance::Provenance;

pub const REQUIRED_COLUMNS: [&str; 9] = [
    "firm_id",
    "year",
    "country",
    "account_type",
    "size_class",
    "nace4",
    "wages",
    "ebit",
    "employment",
];
pub const OPTIONAL_COLUMNS: [&str; 2] = ["operating_revenue", "total_assets"];
pub const DEFLATOR_COLUMNS: [&str; 6] = ["country", "nace2", "year", "va_deflator", "output_deflator", "capital_deflator"];
pub const REJECTION_COLUMNS: [&str; 4] = ["row", "firm_id", "year", "reason_code"];

/// Rows as parsed, before cleaning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Parsed {
    pub rows_read: usize,
    pub records: Vec<FirmYearRecord>,
    pub malformed: Vec<Rejection>,
}

/// Cleaned panel with the full rejection log. Every input row is either in
/// `records` or in `rejections`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub rows_read: usize,
    pub records: Vec<FirmYearRecord>,
    /// Sorted by row.
    pub rejections: Vec<Rejection>,
    pub nulled_fields: usize,
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn column_index(headers: &csv::StringRecord, names: &[&str], what: &str) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| CliError::Data(format!("malformed {what} header: missing column `{name}`")))
        })
        .collect()
}

fn missing(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

fn opt_num<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
    if missing(s) {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| ())
    }
}

fn parse_row(row: usize, rec: &csv::StringRecord, req: &[usize], opt: &[Option<usize>]) -> std::result::Result<FirmYearRecord, ()> {
    let f = |i: usize| rec.get(req[i]).unwrap_or("");
    let o = |i: usize| opt[i].and_then(|k| rec.get(k)).unwrap_or("");
    let country = f(2).to_ascii_uppercase();
    if country.is_empty() {
        return Err(());
    }
    let account_type = match f(3) {
        "" => AccountType::Unconsolidated,
        s => AccountType::parse(s).ok_or(())?,
    };
    let size_class = match f(4) {
        s if missing(s) => None,
        s => Some(SizeClass::parse(s).ok_or(())?),
    };
    Ok(FirmYearRecord {
        row,
        firm_id: Some(f(0).to_string()).filter(|s| !s.is_empty()),
        year: opt_num(f(1))?,
        country,
        account_type,
        size_class,
        nace4: opt_num(f(5))?,
        wages: opt_num(f(6))?,
        ebit: opt_num(f(7))?,
        employment: opt_num(f(8))?,
        operating_revenue: opt_num(o(0))?,
        total_assets: opt_num(o(1))?,
        deflator_missing: false,
    })
}

/// Parses a panel. Rows are numbered from 1 in data order; rows that cannot
/// be parsed are logged as malformed. A missing column is fatal.
pub fn read_panel<R: Read>(r: R) -> Result<Parsed> {
    let mut rdr = reader(r);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(CliError::Data("empty input".into())),
        Err(e) => return Err(CliError::Data(format!("malformed panel header: {e}"))),
    };
    let req = column_index(&headers, &REQUIRED_COLUMNS, "panel")?;
    let opt: Vec<Option<usize>> = OPTIONAL_COLUMNS
        .iter()
        .map(|n| headers.iter().position(|h| h.eq_ignore_ascii_case(n)))
        .collect();
    let mut out = Parsed::default();
    let mut rec = csv::StringRecord::new();
    loop {
        let row = out.rows_read + 1;
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => match parse_row(row, &rec, &req, &opt) {
                Ok(r) => out.records.push(r),
                Err(()) => out.malformed.push(malformed(row, Some(&rec), &req)),
            },
            Err(e) if e.is_io_error() => return Err(CliError::Data(format!("reading panel: {e}"))),
            Err(_) => out.malformed.push(malformed(row, None, &req)),
        }
        out.rows_read += 1;
    }
    Ok(out)
}

fn malformed(row: usize, rec: Option<&csv::StringRecord>, req: &[usize]) -> Rejection {
    let field = |i: usize| rec.and_then(|r| r.get(req[i])).filter(|s| !s.is_empty());
    Rejection {
        row,
        firm_id: field(0).map(str::to_string),
        year: field(1).and_then(|s| s.parse().ok()),
        reason: RejectReason::Malformed,
    }
}

/// Parses and cleans a panel.
pub fn ingest<R: Read>(r: R, cfg: &CleanConfig) -> Result<Ingested> {
    let parsed = read_panel(r)?;
    let cleaned = panel::clean(parsed.records, cfg);
    let mut rejections = parsed.malformed;
    rejections.extend(cleaned.rejections);
    rejections.sort_by_key(|r| r.row);
    Ok(Ingested {
        rows_read: parsed.rows_read,
        records: cleaned.records,
        rejections,
        nulled_fields: cleaned.nulled_fields,
    })
}

pub fn ingest_path(path: &Path, cfg: &CleanConfig) -> Result<Ingested> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    ingest(BufReader::new(f), cfg)
}

/// Reads a deflator table. Any invalid row is fatal.
pub fn read_deflators<R: Read>(r: R) -> Result<DeflatorTable> {
    let mut rdr = reader(r);
    let headers = rdr.headers().map_err(|e| CliError::Data(format!("malformed deflator header: {e}")))?.clone();
    let idx = column_index(&headers, &DEFLATOR_COLUMNS, "deflator")?;
    let mut table = DeflatorTable::new();
    for (i, rec) in rdr.records().enumerate() {
        let bad = |what: &str| CliError::Data(format!("deflator row {}: {what}", i + 1));
        let rec = rec.map_err(|e| bad(&e.to_string()))?;
        let f = |k: usize| rec.get(idx[k]).unwrap_or("");
        let num = |k: usize| f(k).parse::<f64>().map_err(|_| bad(DEFLATOR_COLUMNS[k]));
        let nace2: u8 = f(1).parse().map_err(|_| bad("nace2"))?;
        let year: i32 = f(2).parse().map_err(|_| bad("year"))?;
        let d = Deflators {
            va: num(3)?,
            output: num(4)?,
            capital: num(5)?,
        };
        table.insert(f(0), nace2, year, d).map_err(|e| bad(&e.to_string()))?;
    }
    Ok(table)
}

pub fn read_deflators_path(path: &Path) -> Result<DeflatorTable> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_deflators(BufReader::new(f))
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io("<output>", e),
        k => CliError::Data(format!("writing csv: {k:?}")),
    }
}

/// Writes records in the ingestion schema, with a provenance comment line.
pub fn write_panel<W: Write>(records: &[FirmYearRecord], prov: Option<&Provenance>, mut w: W) -> Result<()> {
    if let Some(p) = prov {
        w.write_all(p.comment_line().as_bytes()).map_err(|e| CliError::io("<output>", e))?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REQUIRED_COLUMNS.iter().chain(&OPTIONAL_COLUMNS)).map_err(write_err)?;
    for r in records {
        out.write_record([
            opt_str(r.firm_id.as_deref()),
            opt_str(r.year),
            r.country.clone(),
            r.account_type.as_str().to_string(),
            opt_str(r.size_class.map(SizeClass::as_str)),
            opt_str(r.nace4),
            opt_str(r.wages),
            opt_str(r.ebit),
            opt_str(r.employment),
            opt_str(r.operating_revenue),
            opt_str(r.total_assets),
        ])
        .map_err(write_err)?;
    }
    out.flush().map_err(|e| CliError::io("<output>", e))
}

pub fn write_rejections<W: Write>(rejections: &[Rejection], prov: Option<&Provenance>, mut w: W) -> Result<()> {
    if let Some(p) = prov {
        w.write_all(p.comment_line().as_bytes()).map_err(|e| CliError::io("<output>", e))?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REJECTION_COLUMNS).map_err(write_err)?;
    for r in rejections {
        out.write_record([r.row.to_string(), opt_str(r.firm_id.as_deref()), opt_str(r.year), r.reason.code().to_string()])
            .map_err(write_err)?;
    }
    out.flush().map_err(|e| CliError::io("<output>", e))
}
