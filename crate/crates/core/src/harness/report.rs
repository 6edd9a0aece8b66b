use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::protocol::Scheme;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "scheme,dbf,snr_db,psnr_db,total_bits,tx_seconds,time_saved_pct";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scheme: Scheme,
    /// `None` for schemes that always send every frame.
    pub dbf: Option<f64>,
    pub snr_db: f64,
    #[serde(with = "maybe_inf")]
    pub psnr_db: f64,
    pub total_bits: u64,
    pub tx_seconds: f64,
    pub time_saved_pct: f64,
}

/// JSON has no infinity, so +inf travels as the string "inf".
mod maybe_inf {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else {
            Repr::Text(fmt_float(*v)).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("bad float {t:?}"))),
            },
        }
    }
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.4}")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Sorts rows by scheme, then dbf, then snr.
    pub fn new(mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(|a, b| {
            a.scheme
                .cmp(&b.scheme)
                .then(a.dbf.unwrap_or(f64::INFINITY).total_cmp(&b.dbf.unwrap_or(f64::INFINITY)))
                .then(a.snr_db.total_cmp(&b.snr_db))
        });
        Report { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let dbf = r.dbf.map_or_else(|| "NA".to_string(), fmt_float);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.scheme,
                dbf,
                fmt_float(r.snr_db),
                fmt_float(r.psnr_db),
                r.total_bits,
                fmt_float(r.tx_seconds),
                fmt_float(r.time_saved_pct)
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Report> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn rows_for(&self, scheme: Scheme, dbf: Option<f64>) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme && r.dbf == dbf)
    }

    pub fn export(&self, format: ReportFormat, path: &Path) -> Result<()> {
        let text = match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json()?,
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}
