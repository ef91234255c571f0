//! Table serialization.
//!
//! CSV columns are the basis labels followed by `l, value, abs_value, status`.
//! Unresolved entries have empty value cells. The JSON form mirrors it:
//! `{"basis": [...], "entries": [{"class": [...], "l": n, "value": "..." | null,
//! "abs_value": ..., "status": "..."}]}`. Values are decimal strings so large
//! integers survive any JSON reader. Rows are written in `(c1·B, B, l)` order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CurveClass;
use crate::relations::RealKey;
use crate::solver::{InvariantTable, KeyStatus};

const TAIL: [&str; 4] = ["l", "value", "abs_value", "status"];
const PROVENANCE: &str = "provenance";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            _ => Err(format!("unknown format {s:?}; expected csv or json")),
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        })
    }
}

impl TableFormat {
    /// Guesses from content: JSON documents start with `{`.
    pub fn detect(text: &str) -> Self {
        if text.trim_start().starts_with('{') {
            TableFormat::Json
        } else {
            TableFormat::Csv
        }
    }

    pub fn other(self) -> Self {
        match self {
            TableFormat::Csv => TableFormat::Json,
            TableFormat::Json => TableFormat::Csv,
        }
    }
}

/// One parsed row; `provenance` is only present in expected-value files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub key: RealKey,
    pub value: Option<BigRational>,
    pub status: KeyStatus,
    pub provenance: Option<String>,
}

fn parse_value(cell: &str, source: &str, line: usize, what: &str) -> Result<Option<BigRational>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<BigRational>()
        .map(Some)
        .map_err(|_| Error::parse(source, line, format!("bad {what} {cell:?}")))
}

fn check_row(value: &Option<BigRational>, abs: &Option<BigRational>, source: &str, line: usize) -> Result<()> {
    let expected = value.as_ref().map(Signed::abs);
    if &expected != abs {
        return Err(Error::parse(source, line, "abs_value does not match value"));
    }
    Ok(())
}

fn fmt_value(v: &Option<BigRational>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn to_csv(table: &InvariantTable) -> Result<String> {
    to_csv_rows(
        table.basis_labels(),
        table.iter().map(|(k, e)| (k, &e.value, e.status, None)),
    )
}

fn to_csv_rows<'a>(
    basis: &[String],
    rows: impl Iterator<Item = (&'a RealKey, &'a Option<BigRational>, KeyStatus, Option<&'a str>)>,
) -> Result<String> {
    let mut rows = rows.peekable();
    let with_provenance = rows.peek().is_some_and(|r| r.3.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = basis.iter().map(String::as_str).chain(TAIL).collect();
    if with_provenance {
        header.push(PROVENANCE);
    }
    w.write_record(&header).map_err(csv_err)?;
    for (key, value, status, prov) in rows {
        let mut record: Vec<String> = key.class.coeffs().iter().map(ToString::to_string).collect();
        record.push(key.l.to_string());
        record.push(fmt_value(value));
        record.push(fmt_value(&value.as_ref().map(Signed::abs)));
        record.push(status.as_str().to_string());
        if with_provenance {
            record.push(prov.unwrap_or_default().to_string());
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::parse("<csv>", 0, e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse("<csv>", line, e.to_string())
}

/// Parses CSV rows; returns the basis labels and the rows in file order.
pub fn parse_csv_rows(text: &str, source: &str) -> Result<(Vec<String>, Vec<Row>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let l_pos = header
        .iter()
        .position(|h| h == "l")
        .ok_or_else(|| Error::parse(source, 1, "missing column l"))?;
    if l_pos == 0 {
        return Err(Error::parse(source, 1, "no basis columns before l"));
    }
    let tail: Vec<&str> = header[l_pos..].iter().map(String::as_str).collect();
    let with_provenance = match tail.as_slice() {
        t if t == TAIL => false,
        [a, b, c, d, p] if [*a, *b, *c, *d] == TAIL && *p == PROVENANCE => true,
        _ => {
            return Err(Error::parse(
                source,
                1,
                format!("expected columns {} after the basis", TAIL.join(",")),
            ))
        }
    };
    let basis: Vec<String> = header[..l_pos].to_vec();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(source, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut coeffs = Vec::with_capacity(l_pos);
        for cell in record.iter().take(l_pos) {
            coeffs.push(
                cell.parse::<i64>()
                    .map_err(|_| Error::parse(source, line, format!("bad coefficient {cell:?}")))?,
            );
        }
        let l = record[l_pos]
            .parse::<u32>()
            .map_err(|_| Error::parse(source, line, format!("bad l {:?}", &record[l_pos])))?;
        let value = parse_value(&record[l_pos + 1], source, line, "value")?;
        let abs = parse_value(&record[l_pos + 2], source, line, "abs_value")?;
        let status = KeyStatus::parse(&record[l_pos + 3])
            .ok_or_else(|| Error::parse(source, line, format!("bad status {:?}", &record[l_pos + 3])))?;
        let provenance = with_provenance.then(|| record[l_pos + 4].to_string());
        if provenance.is_none() {
            check_row(&value, &abs, source, line)?;
        } else if abs.is_none() {
            return Err(Error::parse(source, line, "expected-value rows need abs_value"));
        }
        let value = if provenance.is_some() && value.is_none() {
            abs
        } else {
            value
        };
        rows.push(Row {
            key: RealKey::new(CurveClass::new(coeffs), l),
            value,
            status,
            provenance,
        });
    }
    Ok((basis, rows))
}

fn rows_to_table(basis: Vec<String>, rows: Vec<Row>, source: &str) -> Result<InvariantTable> {
    let mut table = InvariantTable::new(basis);
    for row in rows {
        if let Some(prev) = table.get(&row.key) {
            return Err(Error::ConflictingEntry {
                key: row.key.to_string(),
                first: fmt_value(&prev.value),
                second: format!("{} (in {source})", fmt_value(&row.value)),
            });
        }
        table.insert(row.key, row.value, row.status);
    }
    Ok(table)
}

pub fn from_csv(text: &str, source: &str) -> Result<InvariantTable> {
    let (basis, rows) = parse_csv_rows(text, source)?;
    rows_to_table(basis, rows, source)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTable {
    basis: Vec<String>,
    entries: Vec<JsonEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEntry {
    class: Vec<i64>,
    l: u32,
    value: Option<String>,
    abs_value: Option<String>,
    status: KeyStatus,
}

pub fn to_json(table: &InvariantTable) -> Result<String> {
    let doc = JsonTable {
        basis: table.basis_labels().to_vec(),
        entries: table
            .iter()
            .map(|(k, e)| JsonEntry {
                class: k.class.coeffs().to_vec(),
                l: k.l,
                value: e.value.as_ref().map(ToString::to_string),
                abs_value: e.value.as_ref().map(|v| v.abs().to_string()),
                status: e.status,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str, source: &str) -> Result<InvariantTable> {
    let doc: JsonTable = serde_json::from_str(text).map_err(|e| Error::parse(source, e.line(), e.to_string()))?;
    let width = doc.basis.len();
    let mut rows = Vec::with_capacity(doc.entries.len());
    for (i, e) in doc.entries.into_iter().enumerate() {
        let at = |msg: String| Error::parse(source, 0, format!("entry {i}: {msg}"));
        if e.class.len() != width {
            return Err(at(format!(
                "class has {} coefficients, expected {width}",
                e.class.len()
            )));
        }
        let parse = |v: Option<String>, what: &str| -> Result<Option<BigRational>> {
            v.map(|s| s.parse::<BigRational>().map_err(|_| at(format!("bad {what} {s:?}"))))
                .transpose()
        };
        let value = parse(e.value, "value")?;
        let abs = parse(e.abs_value, "abs_value")?;
        if value.as_ref().map(Signed::abs) != abs {
            return Err(at("abs_value does not match value".into()));
        }
        rows.push(Row {
            key: RealKey::new(CurveClass::new(e.class), e.l),
            value,
            status: e.status,
            provenance: None,
        });
    }
    rows_to_table(doc.basis, rows, source)
}

pub fn render(table: &InvariantTable, format: TableFormat) -> Result<String> {
    match format {
        TableFormat::Csv => to_csv(table),
        TableFormat::Json => to_json(table),
    }
}

/// Parses either format, detected from content.
pub fn parse(text: &str, source: &str) -> Result<(InvariantTable, TableFormat)> {
    let format = TableFormat::detect(text);
    let table = match format {
        TableFormat::Csv => from_csv(text, source)?,
        TableFormat::Json => from_json(text, source)?,
    };
    Ok((table, format))
}

pub fn read_table(path: &Path) -> Result<(InvariantTable, TableFormat)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

pub fn write_table(path: &Path, table: &InvariantTable, format: TableFormat) -> Result<()> {
    let text = render(table, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn sample() -> InvariantTable {
        let mut t = InvariantTable::new(vec!["L".into()]);
        let q = |x: i64| Some(BigRational::from_integer(BigInt::from(x)));
        let key = |d: i64, l: u32| RealKey::new(CurveClass::new(vec![d]), l);
        t.insert(key(2, 1), q(1), KeyStatus::Solved);
        t.insert(key(1, 0), q(1), KeyStatus::Seeded);
        t.insert(key(1, 1), q(-1), KeyStatus::Straggler);
        t.insert(key(3, 0), None, KeyStatus::Unresolved);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&sample()).unwrap();
        assert_eq!(
            csv,
            "L,l,value,abs_value,status\n1,0,1,1,seeded\n1,1,-1,1,straggler\n2,1,1,1,solved\n3,0,,,unresolved\n"
        );
    }

    #[test]
    fn round_trips() {
        let t = sample();
        let csv = to_csv(&t).unwrap();
        let json = to_json(&from_csv(&csv, "a").unwrap()).unwrap();
        let back = to_csv(&from_json(&json, "b").unwrap()).unwrap();
        assert_eq!(csv, back);
        assert_eq!(parse(&json, "c").unwrap().0, t);
    }

    #[test]
    fn empty_documents() {
        let t = InvariantTable::new(vec!["L".into(), "E1".into()]);
        let csv = to_csv(&t).unwrap();
        assert_eq!(csv, "L,E1,l,value,abs_value,status\n");
        assert!(from_csv(&csv, "x").unwrap().is_empty());
        let json = to_json(&t).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["entries"], serde_json::json!([]));
        assert_eq!(from_json(&json, "x").unwrap(), t);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            from_csv("L,l,value,abs_value,status\n1,0,1,2,seeded\n", "f").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
        assert!(from_csv("L,l,value,abs_value,status\n1,0,x,,seeded\n", "f").is_err());
        assert!(from_csv("L,l,value,abs_value,state\n", "f").is_err());
        assert!(from_csv("L,l,value,abs_value,status\n1,0,1,1,seeded\n1,0,1,1,seeded\n", "f").is_err());
        assert!(from_json("{\"basis\":[\"L\"],\"entries\":[{\"class\":[1,0],\"l\":0,\"value\":null,\"abs_value\":null,\"status\":\"solved\"}]}", "f").is_err());
    }

    #[test]
    fn abs_export() {
        let csv = to_csv(&sample().abs()).unwrap();
        assert!(csv.contains("1,1,1,1,straggler"));
    }

    #[test]
    fn provenance_column() {
        let (basis, rows) =
            parse_csv_rows("L,l,value,abs_value,status,provenance\n3,0,,8,solved,classical\n", "e").unwrap();
        assert_eq!(basis, vec!["L"]);
        assert_eq!(rows[0].value, Some(BigRational::from_integer(8.into())));
        assert_eq!(rows[0].provenance.as_deref(), Some("classical"));
    }
}
