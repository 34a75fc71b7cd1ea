//! Feature CSV files.
//!
//! Columns are `image`, an optional `label`, `status`, then one column per
//! feature path (`[]`, `[0]`, ..., `[3,3,3]`). Values use the shortest decimal
//! form that parses back to the same `f64`. Rows whose image failed carry
//! `status = error: <message>` and empty feature cells.

use std::io::{Read, Write};
use std::path::Path;

use crate::classify::LabeledFeatures;
use crate::error::{Error, Result};
use crate::representation::FeaturePath;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub image: usize,
    pub label: Option<usize>,
    /// `Err(message)` when extraction failed for this image.
    pub values: std::result::Result<Vec<f64>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub paths: Vec<FeaturePath>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn has_labels(&self) -> bool {
        self.rows.iter().any(|r| r.label.is_some())
    }

    /// Successful labeled rows, as classifier input.
    ///
    /// The class count is `class_count` when given, else one more than the largest label.
    pub fn labeled(&self, class_count: Option<usize>) -> Result<LabeledFeatures> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for row in &self.rows {
            let Ok(values) = &row.values else { continue };
            let label = row
                .label
                .ok_or_else(|| Error::FeatureTable(format!("image {} has no label", row.image)))?;
            features.push(values.clone());
            labels.push(label);
        }
        let k = class_count.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        LabeledFeatures::new(features, labels, k)
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        let labeled = self.has_labels();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["image".to_string()];
        if labeled {
            header.push("label".into());
        }
        header.push("status".into());
        header.extend(self.paths.iter().map(ToString::to_string));
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.image.to_string()];
            if labeled {
                rec.push(row.label.map(|l| l.to_string()).unwrap_or_default());
            }
            match &row.values {
                Ok(values) => {
                    if values.len() != self.paths.len() {
                        return Err(Error::FeatureTable(format!(
                            "image {} has {} values for {} columns",
                            row.image,
                            values.len(),
                            self.paths.len()
                        )));
                    }
                    rec.push("ok".into());
                    rec.extend(values.iter().map(|v| v.to_string()));
                }
                Err(msg) => {
                    rec.push(format!("error: {msg}"));
                    rec.extend(std::iter::repeat_n(String::new(), self.paths.len()));
                }
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(r: impl Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = reader.headers()?.clone();
        let mut cols = header.iter();
        if cols.next() != Some("image") {
            return Err(Error::FeatureTable("first column must be 'image'".into()));
        }
        let labeled = match cols.next() {
            Some("label") => {
                if cols.next() != Some("status") {
                    return Err(Error::FeatureTable("expected 'status' after 'label'".into()));
                }
                true
            }
            Some("status") => false,
            _ => return Err(Error::FeatureTable("expected 'label' or 'status' column".into())),
        };
        let paths = cols
            .map(|c| c.parse::<FeaturePath>())
            .collect::<Result<Vec<_>>>()?;
        let lead = if labeled { 3 } else { 2 };

        let mut rows = Vec::new();
        for (n, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = n + 2;
            let bad = |what: String| Error::FeatureTable(format!("line {line}: {what}"));
            let image = rec[0].parse().map_err(|_| bad(format!("bad image index '{}'", &rec[0])))?;
            let label = if labeled && !rec[1].is_empty() {
                Some(rec[1].parse().map_err(|_| bad(format!("bad label '{}'", &rec[1])))?)
            } else {
                None
            };
            let status = &rec[lead - 1];
            let values = if status == "ok" {
                let v = rec
                    .iter()
                    .skip(lead)
                    .map(|s| match s.parse::<f64>() {
                        Ok(x) if x.is_finite() => Ok(x),
                        _ => Err(bad(format!("bad value '{s}'"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(v)
            } else {
                Err(status.strip_prefix("error: ").unwrap_or(status).to_string())
            };
            rows.push(FeatureRow { image, label, values });
        }
        Ok(Self { paths, rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }
}
