//! CSV and JSON persistence.
//!
//! Every CSV starts with one `#` line holding a JSON object with
//! `schema_version`, `version` and the resolved `config`, followed by a plain
//! header and rows. Sweep tables end with one `# fit` line per column.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::sweep::SweepResult;
use super::{version_stamp, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Writes a self-describing table. `config` is embedded verbatim.
pub fn write_table<W: Write, C: Serialize>(
    mut out: W,
    config: &C,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "version": version_stamp(),
        "config": config,
    });
    writeln!(out, "# {}", serde_json::to_string(&meta)?)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Sweep table: the swept pair, the metric columns and an `error` column.
pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    let mut header: Vec<&str> = vec!["epsilon", "delta"];
    header.extend(result.columns.iter().map(String::as_str));
    header.push("error");
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![fmt(r.epsilon), fmt(r.delta)];
            v.extend(r.values.iter().map(|&x| fmt(x)));
            v.push(r.error.clone().unwrap_or_default());
            v
        })
        .collect();
    write_table(&mut out, &result.config, &header, &rows)?;
    for f in &result.fits {
        writeln!(out, "# fit {}", serde_json::to_string(f)?)?;
    }
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// The leading metadata line of a CSV written by [`write_table`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvHeader {
    pub schema_version: u32,
    pub version: String,
    pub config: Value,
}

pub fn read_csv_header<R: Read>(input: R) -> Result<CsvHeader> {
    let mut line = String::new();
    BufReader::new(input).read_line(&mut line)?;
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::InvalidInput("CSV lacks the metadata line".into()))?;
    Ok(serde_json::from_str(body.trim())?)
}
