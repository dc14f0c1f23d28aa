use std::io::{self, Write};

use serde_json::{Map, Value};

use crate::config::{Format, RunConfig};

pub const PROGRAM: &str = "twophoton";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Self::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Self::Num(x) if x.is_nan() => "NaN".into(),
            Self::Num(x) => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Self::Int(i) => i.to_string(),
            Self::Bool(b) => b.to_string(),
            Self::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Self::Int(i) => Value::from(*i),
            Self::Bool(b) => Value::Bool(*b),
            Self::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Self::Int(i as i64)
    }
}

impl From<i32> for Cell {
    fn from(i: i32) -> Self {
        Self::Int(i.into())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Self::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Self::Num(x.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn write_table(out: &mut dyn Write, config: &RunConfig, table: &Table) -> io::Result<()> {
    match config.format {
        Format::Csv => write_csv(out, config, table),
        Format::Json => write_json(out, config, table),
    }
}

fn write_csv(out: &mut dyn Write, config: &RunConfig, table: &Table) -> io::Result<()> {
    writeln!(
        out,
        "# {PROGRAM} {VERSION} config-sha256={} config={}",
        config.hash(),
        config.to_json()
    )?;
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(Cell::csv).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn write_json(out: &mut dyn Write, config: &RunConfig, table: &Table) -> io::Result<()> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
            Value::Object(obj)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("program".into(), PROGRAM.into());
    doc.insert("version".into(), VERSION.into());
    doc.insert("config_sha256".into(), config.hash().into());
    doc.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    doc.insert("columns".into(), table.columns.clone().into());
    doc.insert("rows".into(), rows.into());
    serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = Cell::Num(x).csv();
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(Cell::Num(f64::NAN).csv(), "NaN");
    }

    #[test]
    fn json_maps_nan_to_null() {
        assert_eq!(Cell::Num(f64::NAN).json(), Value::Null);
        assert_eq!(Cell::Int(-3).json(), Value::from(-3));
    }
}
