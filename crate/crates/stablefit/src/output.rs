//! Tabular and JSON output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::provenance::Provenance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Tsv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Tsv => "tsv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Num(f64),
    Int(i64),
    Bool(bool),
    Null,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Num(v) if *v != 0.0 && v.is_finite() && !(1e-4..1e15).contains(&v.abs()) => format!("{v:e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::from(s.as_str()),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::from(*v),
            Cell::Null => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// A table with a fixed column schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Delimited text with a leading provenance comment, or a JSON object
    /// with `provenance` and `rows`.
    pub fn render(&self, format: Format, prov: &Provenance) -> Result<Vec<u8>> {
        match format {
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().map(Cell::json)).collect::<Map<_, _>>()))
                    .collect();
                let doc = serde_json::json!({ "provenance": prov, "columns": self.columns, "rows": rows });
                to_json(&doc)
            }
            Format::Csv | Format::Tsv => {
                let mut buf = prov.comment_line().into_bytes();
                {
                    let delim = if format == Format::Csv { b',' } else { b'\t' };
                    let mut w = csv::WriterBuilder::new().delimiter(delim).from_writer(&mut buf);
                    let err = |e: csv::Error| CliError::Data(format!("rendering table: {e}"));
                    w.write_record(&self.columns).map_err(err)?;
                    for r in &self.rows {
                        w.write_record(r.iter().map(Cell::text)).map_err(err)?;
                    }
                    w.flush().map_err(|e| CliError::io("<table>", e))?;
                }
                Ok(buf)
            }
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::Data(format!("serializing json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Output directory of one run.
#[derive(Debug, Clone)]
pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
        let mut w = BufWriter::new(f);
        w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    pub fn write_table(&self, stem: &str, table: &Table, format: Format, prov: &Provenance) -> Result<PathBuf> {
        self.write(&format!("{stem}.{}", format.extension()), &table.render(format, prov)?)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Result<PathBuf> {
        self.write(name, &to_json(v)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            tool: "stablefit".into(),
            version: "0".into(),
            config_hash: "ab".into(),
            seed: 7,
        }
    }

    #[test]
    fn renders_all_formats() {
        let mut t = Table::new(&["key", "x", "n", "ok"]);
        t.push(vec!["FR-2010".into(), 1.5.into(), 3usize.into(), Cell::Null]);
        let tsv = String::from_utf8(t.render(Format::Tsv, &prov()).unwrap()).unwrap();
        assert_eq!(tsv, "# stablefit 0 config=ab seed=7\nkey\tx\tn\tok\nFR-2010\t1.5\t3\t\n");
        let csv = String::from_utf8(t.render(Format::Csv, &prov()).unwrap()).unwrap();
        assert!(csv.ends_with("key,x,n,ok\nFR-2010,1.5,3,\n"));
        let json: Value = serde_json::from_slice(&t.render(Format::Json, &prov()).unwrap()).unwrap();
        assert_eq!(json["rows"][0]["x"], 1.5);
        assert_eq!(json["rows"][0]["ok"], Value::Null);
        assert_eq!(json["provenance"]["seed"], 7);
    }

    #[test]
    fn extreme_numbers_use_exponents() {
        assert_eq!(Cell::Num(1.0739334918442381e-19).text(), "1.0739334918442381e-19");
        assert_eq!(Cell::Num(0.0).text(), "0");
        assert_eq!(Cell::Num(-42.5).text(), "-42.5");
        assert_eq!(Cell::Num(f64::NAN).text(), "NaN");
        for v in [3.2e-7, 1.5e20, 0.1] {
            assert_eq!(Cell::Num(v).text().parse::<f64>().unwrap(), v);
        }
    }
}
