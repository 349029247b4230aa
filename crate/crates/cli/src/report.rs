//! Key/value records and small tables in the two output formats.

use std::io::{self, Write};

use herald_core::sweep::{format_float, SCHEMA_VERSION};
use herald_core::TableFormat;
use serde_json::Value as Json;

#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Num(x) => format_float(*x),
            Value::Int(n) => n.to_string(),
            Value::Text(s) => s.clone(),
            Value::Missing => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            // Same rounding as the CSV cell so both formats agree digit for digit.
            Value::Num(x) => format_float(*x)
                .parse::<f64>()
                .ok()
                .map(Json::from)
                .unwrap_or(Json::Null),
            Value::Int(n) => Json::from(*n),
            Value::Text(s) => Json::from(s.as_str()),
            Value::Missing => Json::Null,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Value::Missing, Value::Num)
    }
}

impl From<usize> for Value {
    fn from(n: usize) -> Self {
        Value::Int(n as u64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

/// Ordered key/value report.
#[derive(Debug, Clone, Default)]
pub struct Record(Vec<(String, Value)>);

impl Record {
    pub fn new() -> Self {
        let mut r = Self::default();
        r.push("schema_version", SCHEMA_VERSION as usize);
        r
    }

    pub fn push(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.0.push((key.to_string(), value.into()));
        self
    }
}

/// Column-labelled table printed after a record.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

fn json_object(pairs: impl IntoIterator<Item = (String, Json)>) -> String {
    // Keys are emitted in insertion order; serde_json's map would sort them.
    let body: Vec<String> = pairs
        .into_iter()
        .map(|(k, v)| format!("{}:{}", Json::from(k), v))
        .collect();
    format!("{{{}}}", body.join(","))
}

/// CSV: a `key,value` block, then a blank line and the table.
/// JSON lines: the record as one object, then one object per table row.
pub fn write_report<W: Write>(
    record: &Record,
    table: Option<&Table>,
    format: TableFormat,
    mut out: W,
) -> io::Result<()> {
    match format {
        TableFormat::Csv => {
            writeln!(out, "key,value")?;
            for (k, v) in &record.0 {
                writeln!(out, "{k},{}", v.csv())?;
            }
            if let Some(t) = table {
                writeln!(out)?;
                writeln!(out, "{}", t.columns.join(","))?;
                for row in &t.rows {
                    let cells: Vec<String> = row.iter().map(Value::csv).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
            }
        }
        TableFormat::JsonLines => {
            writeln!(
                out,
                "{}",
                json_object(record.0.iter().map(|(k, v)| (k.clone(), v.json())))
            )?;
            if let Some(t) = table {
                for row in &t.rows {
                    let pairs = t
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()));
                    writeln!(out, "{}", json_object(pairs))?;
                }
            }
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(format: TableFormat) -> String {
        let mut rec = Record::new();
        rec.push("r", 0.5)
            .push("E_N", None::<f64>)
            .push("name", "x");
        let table = Table {
            columns: vec!["k", "p_k"],
            rows: vec![vec![0usize.into(), 0.25.into()]],
        };
        let mut buf = Vec::new();
        write_report(&rec, Some(&table), format, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            render(TableFormat::Csv),
            "key,value\nschema_version,1\nr,0.5\nE_N,\nname,x\n\nk,p_k\n0,0.25\n"
        );
    }

    #[test]
    fn json_lines_keep_key_order() {
        assert_eq!(
            render(TableFormat::JsonLines),
            "{\"schema_version\":1,\"r\":0.5,\"E_N\":null,\"name\":\"x\"}\n{\"k\":0,\"p_k\":0.25}\n"
        );
    }
}
