//! Reading measures and atom-aligned samples from JSON or CSV.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::AtomicMeasure;
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(untagged)]
enum MeasureFile {
    Pairs(Vec<(f64, f64)>),
    Object {
        atoms: Vec<(f64, f64)>,
        #[serde(default)]
        resolution_floor: Option<f64>,
    },
}

pub fn parse_measure_json(text: &str) -> Result<AtomicMeasure> {
    match serde_json::from_str::<MeasureFile>(text)? {
        MeasureFile::Pairs(atoms) => AtomicMeasure::new(atoms, None),
        MeasureFile::Object {
            atoms,
            resolution_floor,
        } => AtomicMeasure::new(atoms, resolution_floor),
    }
}

/// Two columns `position,mass`; a non-numeric first row is taken as a header.
pub fn parse_measure_csv(text: &str) -> Result<AtomicMeasure> {
    let rows = read_csv_rows(text)?;
    let mut atoms = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != 2 {
            return Err(Error::InvalidMeasure(format!("expected 2 columns, got {}", row.len())));
        }
        atoms.push((row[0], row[1]));
    }
    AtomicMeasure::new(atoms, None)
}

pub fn read_measure(path: &Path) -> Result<AtomicMeasure> {
    let text = read_existing(path)?;
    if is_csv(path) {
        parse_measure_csv(&text)
    } else {
        parse_measure_json(&text)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ValuesFile {
    Plain(Vec<f64>),
    Object { values: Vec<f64> },
}

pub fn parse_values_json(text: &str) -> Result<Vec<f64>> {
    Ok(match serde_json::from_str::<ValuesFile>(text)? {
        ValuesFile::Plain(v) | ValuesFile::Object { values: v } => v,
    })
}

/// One value per atom, in atom order; JSON array / `{"values": [...]}` or a
/// single-column CSV.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = read_existing(path)?;
    if is_csv(path) {
        let rows = read_csv_rows(&text)?;
        rows.into_iter()
            .map(|r| {
                r.last()
                    .copied()
                    .ok_or_else(|| Error::InvalidFunction("empty CSV row".into()))
            })
            .collect()
    } else {
        parse_values_json(&text)
    }
}

pub fn read_existing(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::InvalidMeasure(format!("row {}: {e}", i + 1)));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_pairs_and_object_forms() {
        let m = parse_measure_json("[[0.5, 2.0], [0.0, 1.0]]").unwrap();
        assert_eq!(m.positions(), &[0.0, 0.5]);
        let m = parse_measure_json(r#"{"atoms": [[0, 1], [1, 1]], "resolution_floor": 0.25}"#).unwrap();
        assert_eq!(m.floor(), 0.25);
    }

    #[test]
    fn csv_with_header() {
        let m = parse_measure_csv("position,mass\n0.0,1\n0.25,3\n").unwrap();
        assert_eq!(m.masses(), &[1.0, 3.0]);
        assert!(parse_measure_csv("0,1,2\n").is_err());
    }

    #[test]
    fn measure_serde_roundtrip_keeps_floor() {
        let m = AtomicMeasure::new(vec![(0.0, 1.0), (1.0, 2.0)], Some(0.5)).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back = parse_measure_json(&text).unwrap();
        assert_eq!(m, back);
    }
}
