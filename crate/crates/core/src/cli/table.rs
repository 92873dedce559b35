use std::io::Write;

use serde_json::{json, Map, Number, Value};

/// One value in a report table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Vector(Vec<f64>),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&[f64]> for Cell {
    fn from(x: &[f64]) -> Self {
        Cell::Vector(x.to_vec())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest decimal that parses back to the same double. Very small and
/// very large magnitudes use exponent notation.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return non_finite(x).to_string();
    }
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn non_finite(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

fn parse_non_finite(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Vector(v) => v
                .iter()
                .map(|x| format_float(*x))
                .collect::<Vec<_>>()
                .join(";"),
            Cell::Empty => String::new(),
        }
    }

    fn float_json(x: f64) -> Value {
        Number::from_f64(x).map_or_else(|| Value::String(non_finite(x).into()), Value::Number)
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => Self::float_json(*x),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Vector(v) => Value::Array(v.iter().map(|x| Self::float_json(*x)).collect()),
            Cell::Empty => Value::Null,
        }
    }

    fn from_json(v: &Value) -> Result<Self, String> {
        let float = |v: &Value| -> Result<f64, String> {
            match v {
                Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad number {n}")),
                Value::String(s) => parse_non_finite(s).ok_or_else(|| format!("bad number '{s}'")),
                other => Err(format!("expected a number, got {other}")),
            }
        };
        Ok(match v {
            Value::Null => Cell::Empty,
            Value::Bool(b) => Cell::Bool(*b),
            Value::Number(n) if n.is_i64() => Cell::Int(n.as_i64().expect("checked")),
            Value::Number(_) => Cell::Num(float(v)?),
            Value::String(s) => match parse_non_finite(s) {
                Some(x) => Cell::Num(x),
                None => Cell::Text(s.clone()),
            },
            Value::Array(items) => Cell::Vector(items.iter().map(float).collect::<Result<_, _>>()?),
            Value::Object(_) => return Err("unexpected object in a table cell".into()),
        })
    }

    /// Bitwise equality, treating NaN payloads as equal to themselves.
    pub fn bit_eq(&self, other: &Cell) -> bool {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => a.to_bits() == b.to_bits(),
            (Cell::Vector(a), Cell::Vector(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => self == other,
        }
    }
}

/// A report: fixed header plus rows in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv))?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("columns".into(), json!(self.columns));
        m.insert(
            "rows".into(),
            Value::Array(
                self.rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
                    .collect(),
            ),
        );
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, String> {
        let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let command = v["command"].as_str().ok_or("missing command")?.to_string();
        let columns = v["columns"]
            .as_array()
            .ok_or("missing columns")?
            .iter()
            .map(|c| {
                c.as_str()
                    .map(str::to_string)
                    .ok_or("column names must be strings")
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows = v["rows"]
            .as_array()
            .ok_or("missing rows")?
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| "rows must be arrays".to_string())?
                    .iter()
                    .map(Cell::from_json)
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            command,
            columns,
            rows,
        })
    }

    pub fn bit_eq(&self, other: &Table) -> bool {
        self.command == other.command
            && self.columns == other.columns
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bit_eq(y)))
    }
}
