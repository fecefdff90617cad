//! Tables written as CSV or JSON with fixed 17-significant-digit floats.

use std::io::Write;

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => fmt_f64(*v),
            Cell::Num(_) => "null".into(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => serde_json::to_string(s).expect("string serializes"),
        }
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub names: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&mut self, name: impl Into<String>, unit: impl Into<String>) {
        self.names.push(name.into());
        self.units.push(unit.into());
    }

    pub fn write_to<W: Write>(&self, format: Format, mut w: W) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                let mut c = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
                let header: Vec<String> = self
                    .names
                    .iter()
                    .zip(&self.units)
                    .map(|(n, u)| if u.is_empty() { n.clone() } else { format!("{n} [{u}]") })
                    .collect();
                c.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
                for row in &self.rows {
                    c.write_record(row.iter().map(Cell::render)).map_err(|e| CliError::Io(e.to_string()))?;
                }
                c.flush()?;
            }
            Format::Json => {
                let key = |s: &String| serde_json::to_string(s).expect("string serializes");
                let units: Vec<String> =
                    self.names.iter().zip(&self.units).map(|(n, u)| format!("{}:{}", key(n), key(u))).collect();
                write!(w, "{{\"units\":{{{}}},\"rows\":[", units.join(","))?;
                for (i, row) in self.rows.iter().enumerate() {
                    let fields: Vec<String> =
                        self.names.iter().zip(row).map(|(n, c)| format!("{}:{}", key(n), c.json())).collect();
                    let sep = if i + 1 < self.rows.len() { "," } else { "" };
                    write!(w, "\n{{{}}}{sep}", fields.join(","))?;
                }
                writeln!(w, "\n]}}")?;
            }
        }
        Ok(())
    }

    pub fn emit(&self, format: Format, out: Option<&std::path::Path>) -> Result<(), CliError> {
        match out {
            Some(p) => {
                let f = std::fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                self.write_to(format, std::io::BufWriter::new(f))
            }
            None => self.write_to(format, std::io::stdout().lock()),
        }
    }
}

/// Unit of g_ij for parameters with units a and b.
pub fn inverse_unit(a: &str, b: &str) -> String {
    match (a, b) {
        ("1", "1") => "1".into(),
        ("1", u) | (u, "1") => format!("1/{u}"),
        (x, y) if x == y => format!("1/{x}^2"),
        (x, y) => format!("1/({x}*{y})"),
    }
}

/// Unit of a covariance entry for parameters with units a and b.
pub fn product_unit(a: &str, b: &str) -> String {
    match (a, b) {
        ("1", "1") => "1".into(),
        ("1", u) | (u, "1") => u.to_string(),
        (x, y) if x == y => format!("{x}^2"),
        (x, y) => format!("{x}*{y}"),
    }
}
