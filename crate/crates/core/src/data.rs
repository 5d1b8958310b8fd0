//! Preference observations and their on-disk CSV form.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpoError};

/// One observation `w = (x, y0, y1)` with label `z` (`true` means `y1` won).
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceExample {
    pub x: Vec<f64>,
    pub y0: usize,
    pub y1: usize,
    pub z: bool,
}

impl PreferenceExample {
    pub fn label(&self) -> f64 {
        if self.z {
            1.0
        } else {
            0.0
        }
    }

    /// `+1` when `y1` is preferred, `−1` otherwise; multiplies the index to
    /// put the winner in the `y1` slot.
    pub fn orientation(&self) -> f64 {
        if self.z {
            1.0
        } else {
            -1.0
        }
    }

    pub fn swapped(&self) -> Self {
        PreferenceExample { x: self.x.clone(), y0: self.y1, y1: self.y0, z: !self.z }
    }
}

/// Metadata written next to a dataset CSV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub seed: u64,
    pub shift: f64,
    pub n: usize,
    pub context_dim: usize,
    pub actions: usize,
    pub teacher_checkpoint: Option<String>,
    pub seed_derivation: String,
}

/// Writes `x_1..x_d, y0, y1, z` rows with a header.
pub fn write_dataset_csv<W: Write>(out: W, examples: &[PreferenceExample]) -> Result<()> {
    let d = examples.first().map_or(0, |e| e.x.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
    header.extend(["y0", "y1", "z"].map(String::from));
    w.write_record(&header)?;
    for e in examples {
        if e.x.len() != d {
            return Err(SpoError::DimensionMismatch { expected: d, got: e.x.len() });
        }
        let mut rec: Vec<String> = e.x.iter().map(|v| v.to_string()).collect();
        rec.push(e.y0.to_string());
        rec.push(e.y1.to_string());
        rec.push(u8::from(e.z).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<PreferenceExample>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = r.headers()?.clone();
    let width = headers.len();
    if width < 3 || &headers[width - 3] != "y0" || &headers[width - 2] != "y1" || &headers[width - 1] != "z" {
        return Err(SpoError::Config(format!("{} does not have a dataset header", path.display())));
    }
    let d = width - 3;
    let parse_err = |what: &str, v: &str| SpoError::Config(format!("bad {what} value {v:?}"));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let x = (0..d)
            .map(|i| rec[i].parse::<f64>().map_err(|_| parse_err("x", &rec[i])))
            .collect::<Result<Vec<_>>>()?;
        let y0 = rec[d].parse().map_err(|_| parse_err("y0", &rec[d]))?;
        let y1 = rec[d + 1].parse().map_err(|_| parse_err("y1", &rec[d + 1]))?;
        let z = match &rec[d + 2] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err("z", other)),
        };
        out.push(PreferenceExample { x, y0, y1, z });
    }
    Ok(out)
}
