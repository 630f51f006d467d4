//! JSON and CSV file formats.
//!
//! Pmf, channel, two-input channel and mixture files are plain JSON objects
//! whose invariants are enforced on load. Region curves are CSV with the
//! header `R1,R2,kind,base`.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::{Channel, GaussianMixture1D, LogBase, Pmf, TwoInputChannel};
use crate::error::{Error, Result};

fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        if e.is_data() {
            Error::invalid("file", e.to_string())
        } else {
            Error::Json(e)
        }
    })
}

fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_pmf(path: impl AsRef<Path>) -> Result<Pmf> {
    load_json(path)
}

pub fn save_pmf(path: impl AsRef<Path>, pmf: &Pmf) -> Result<()> {
    save_json(path, pmf)
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<Channel> {
    load_json(path)
}

pub fn save_channel(path: impl AsRef<Path>, channel: &Channel) -> Result<()> {
    save_json(path, channel)
}

pub fn load_two_input(path: impl AsRef<Path>) -> Result<TwoInputChannel> {
    load_json(path)
}

pub fn load_mixture(path: impl AsRef<Path>) -> Result<GaussianMixture1D> {
    load_json(path)
}

/// Formats with 12 significant digits and no exponent noise: the value is
/// rounded through scientific notation, then printed in shortest form.
pub fn fmt_sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}")
        .parse()
        .expect("round-trip of formatted float");
    format!("{rounded}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Inner,
    Outer,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Inner => "inner",
            CurveKind::Outer => "outer",
        }
    }
}

/// Ordered rate pairs in nats, tagged inner or outer.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCurve {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RegionRow {
    #[serde(rename = "R1")]
    r1: String,
    #[serde(rename = "R2")]
    r2: String,
    kind: CurveKind,
    base: LogBase,
}

/// Renders curves as region CSV, converting nats into `base`.
pub fn region_csv(curves: &[RegionCurve], base: LogBase) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(["R1", "R2", "kind", "base"])?;
    for c in curves {
        for &(r1, r2) in &c.points {
            w.write_record([
                fmt_sig12(base.from_nats(r1)).as_str(),
                fmt_sig12(base.from_nats(r2)).as_str(),
                c.kind.name(),
                base.name(),
            ])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn save_region(path: impl AsRef<Path>, curves: &[RegionCurve], base: LogBase) -> Result<()> {
    fs::write(path, region_csv(curves, base)?)?;
    Ok(())
}

/// Parses a region CSV back into (r1, r2, kind, base) rows, in file units.
pub fn parse_region_csv(text: &str) -> Result<Vec<(f64, f64, CurveKind, LogBase)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["R1", "R2", "kind", "base"] {
        return Err(Error::invalid("header", format!("{:?}", header)));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: RegionRow = rec?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::invalid("rate", format!("{s:?}: {e}")))
        };
        rows.push((parse(&row.r1)?, parse(&row.r2)?, row.kind, row.base));
    }
    Ok(rows)
}
