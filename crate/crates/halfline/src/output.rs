use std::fs;
use std::io::Write;
use std::path::Path;

use crate::ARTIFACT_VERSION;

/// A CSV body preceded by `#` comment lines carrying the run parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub parameters: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> CsvTable {
        CsvTable { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.push((key.to_string(), value.to_string()));
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| v.to_string()).collect());
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<(), crate::cli::CliError> {
        writeln!(out, "# {ARTIFACT_VERSION}")?;
        for (k, v) in &self.parameters {
            writeln!(out, "# {k}={v}")?;
        }
        for n in &self.notes {
            writeln!(out, "# {n}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), crate::cli::CliError> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let file = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_to(file)
    }
}

/// Parsed form of a file written by [`CsvTable::write`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedCsv {
    pub fn read(path: &Path) -> Result<ParsedCsv, crate::cli::CliError> {
        let text = fs::read_to_string(path)?;
        let mut comments = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(c) => comments.push(c.trim().to_string()),
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let columns = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(String::from).collect());
        }
        Ok(ParsedCsv { comments, columns, rows })
    }

    /// Value of a `key=value` header line.
    pub fn parameter(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| c.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[j].parse().ok()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        let mut t = CsvTable::new(&["x", "v"]);
        t.param("beta", 1.5).note("hello");
        t.push_numbers(&[0.0, 0.1]);
        t.push_numbers(&[1.0, 1e-20]);
        t.write(&path).unwrap();
        let p = ParsedCsv::read(&path).unwrap();
        assert_eq!(p.parameter("beta"), Some("1.5"));
        assert!(p.comments.iter().any(|c| c == "hello"));
        assert!(p.comments[0].starts_with("halfline "));
        assert_eq!(p.column("v").unwrap(), vec![0.1, 1e-20]);
    }
}
