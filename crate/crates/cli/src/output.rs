//! Tabular output rendered as CSV or JSON, committed to disk all at once.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nhscatter::C64;
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_complex(z: C64) -> String {
    format!("{},{}", fmt_real(z.re), fmt_real(z.im))
}

pub fn complex_json(z: C64) -> Value {
    json!({"re": finite_or_null(z.re), "im": finite_or_null(z.im)})
}

pub fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    /// Metadata as `# key = value` lines, then a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Real(v) => fmt_real(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// `{"meta": {...}, "columns": [...], "rows": [{column: value}]}`.
    pub fn to_json(&self) -> Value {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| {
                        let v = match v {
                            Cell::Real(x) => finite_or_null(*x),
                            Cell::Int(i) => json!(i),
                            Cell::Text(t) => json!(t),
                        };
                        (c.clone(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({"meta": meta, "columns": self.columns, "rows": rows})
    }

    pub fn file_name(&self, format: Format) -> String {
        format!("{}.{}", self.name, format.name())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(&self.to_json()).expect("serializable") + "\n",
        }
    }
}

/// Files produced by one command, written only after the command succeeded.
#[derive(Debug, Default)]
pub struct Bundle {
    files: Vec<(String, String)>,
}

impl Bundle {
    pub fn add_table(&mut self, table: &Table, format: Format) {
        self.files.push((table.file_name(format), table.render(format)));
    }

    pub fn add_json(&mut self, name: &str, value: &Value) {
        self.files.push((name.to_string(), serde_json::to_string_pretty(value).expect("serializable") + "\n"));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file into `dir`; on failure removes whatever was written.
    pub fn commit(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::input(format!("cannot create output directory {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for (name, body) in &self.files {
            let path = dir.join(name);
            if let Err(e) = std::fs::write(&path, body) {
                let _ = std::fs::remove_file(&path);
                remove_all(&written, dir, created_dir);
                return Err(CliError::input(format!("cannot write {}: {e}", path.display())));
            }
            written.push(path);
        }
        Ok(written)
    }
}

fn remove_all(files: &[PathBuf], dir: &Path, created_dir: bool) {
    for f in files {
        let _ = std::fs::remove_file(f);
    }
    if created_dir {
        let _ = std::fs::remove_dir(dir);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_metadata_header_and_17_digits() {
        let mut t = Table::new("demo", &["x", "v", "tag"]);
        t.meta("L", 3);
        t.push(vec![Cell::from(1usize), Cell::from(0.1), Cell::from("a")]);
        let s = t.to_csv();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# L = 3");
        assert_eq!(lines[1], "x,v,tag");
        assert_eq!(lines[2], "1,1.0000000000000001e-1,a");
        let v: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.1);
    }

    #[test]
    fn json_rows_are_objects_and_nan_is_null() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec![Cell::from(f64::NAN), Cell::from(2i64)]);
        let v = t.to_json();
        assert_eq!(v["rows"][0]["a"], Value::Null);
        assert_eq!(v["rows"][0]["b"], json!(2));
    }

    #[test]
    fn commit_rolls_back_on_failure() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("out");
        let mut b = Bundle::default();
        b.add_json("ok.json", &json!({}));
        b.add_json("missing/sub.json", &json!({}));
        assert!(b.commit(&dir).is_err());
        assert!(!dir.exists());
    }
}
