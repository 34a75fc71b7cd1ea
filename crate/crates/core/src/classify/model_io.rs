//! Plain-text model files.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so a save/load round trip is bit-exact.
//!
//! ```text
//! riesz-model 1
//! kind svm
//! classes 2
//! dim 3
//! normalizer 1 0.5 2
//! reg 0.0001
//! epochs 50
//! seed 0
//! weights 0 <dim numbers>
//! bias 0 <number>
//! ...
//! ```
//!
//! A PCA model carries `components` instead of the training parameters and,
//! per class, a `mean c ...` line, a `rank c r` line and `r` lines `basis c ...`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::SplitWhitespace;

use super::{Classifier, MaxAbsNormalizer, PcaClass, PcaClassModel, SvmModel, SvmParams};
use crate::error::{mismatch, Error, Result};

const HEADER: &str = "riesz-model 1";

/// A classifier plus the normalizer its inputs pass through first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub normalizer: Option<MaxAbsNormalizer>,
    pub classifier: ModelKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Pca(PcaClassModel),
    Svm(SvmModel),
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self.classifier {
            ModelKind::Pca(_) => "pca",
            ModelKind::Svm(_) => "svm",
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match &self.classifier {
            ModelKind::Pca(m) => m,
            ModelKind::Svm(m) => m,
        }
    }
}

impl Classifier for TrainedModel {
    fn class_count(&self) -> usize {
        self.inner().class_count()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        match &self.normalizer {
            Some(n) => self.inner().predict(&n.apply(x)?),
            None => self.inner().predict(x),
        }
    }
}

fn push_row(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

pub fn write_model(mut w: impl Write, model: &TrainedModel) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "kind {}", model.kind_name());
    let _ = writeln!(out, "classes {}", model.class_count());
    let _ = writeln!(out, "dim {}", model.dim());
    match &model.normalizer {
        Some(n) => push_row(&mut out, "normalizer", &n.scales),
        None => out.push_str("normalizer none\n"),
    }
    match &model.classifier {
        ModelKind::Svm(m) => {
            let _ = writeln!(out, "reg {}", m.params.reg);
            let _ = writeln!(out, "epochs {}", m.params.epochs);
            let _ = writeln!(out, "seed {}", m.params.seed);
            for (c, (wv, b)) in m.weights.iter().zip(&m.biases).enumerate() {
                push_row(&mut out, &format!("weights {c}"), wv);
                let _ = writeln!(out, "bias {c} {b}");
            }
        }
        ModelKind::Pca(m) => {
            let _ = writeln!(out, "components {}", m.components);
            for (c, class) in m.classes.iter().enumerate() {
                push_row(&mut out, &format!("mean {c}"), &class.mean);
                let _ = writeln!(out, "rank {c} {}", class.basis.len());
                for v in &class.basis {
                    push_row(&mut out, &format!("basis {c}"), v);
                }
            }
        }
    }
    w.write_all(out.as_bytes())?;
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.number += 1;
            match self.inner.next() {
                None => return Err(Error::ModelFormat(format!("unexpected end of file at line {}", self.number))),
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        return Ok(line);
                    }
                }
            }
        }
    }

    fn bad(&self, what: impl std::fmt::Display) -> Error {
        Error::ModelFormat(format!("line {}: {what}", self.number))
    }

    /// Reads a line that starts with `key` (and optionally the class index `class`).
    fn keyed(&mut self, key: &str, class: Option<usize>) -> Result<(String, usize)> {
        let line = self.next_line()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.bad(format!("expected '{key}'")));
        }
        if let Some(c) = class {
            let found: Option<usize> = it.next().and_then(|t| t.parse().ok());
            if found != Some(c) {
                return Err(self.bad(format!("expected '{key} {c}'")));
            }
        }
        let rest: Vec<&str> = it.collect();
        Ok((rest.join(" "), self.number))
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str, class: Option<usize>) -> Result<T> {
        let (rest, _) = self.keyed(key, class)?;
        rest.parse().map_err(|_| self.bad(format!("cannot parse '{rest}' for '{key}'")))
    }

    fn vector(&mut self, key: &str, class: Option<usize>, dim: usize) -> Result<Vec<f64>> {
        let (rest, _) = self.keyed(key, class)?;
        let values = parse_floats(rest.split_whitespace()).map_err(|t| self.bad(format!("cannot parse '{t}'")))?;
        if values.len() != dim {
            return Err(mismatch(format!("{dim} values for '{key}'"), format!("{}", values.len())));
        }
        Ok(values)
    }
}

fn parse_floats(tokens: SplitWhitespace<'_>) -> std::result::Result<Vec<f64>, String> {
    tokens
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(t.to_string()),
        })
        .collect()
}

pub fn read_model(r: impl BufRead) -> Result<TrainedModel> {
    let mut lines = Lines {
        inner: r.lines(),
        number: 0,
    };
    if lines.next_line()?.trim() != HEADER {
        return Err(lines.bad(format!("expected header '{HEADER}'")));
    }
    let kind: String = lines.scalar("kind", None)?;
    let classes: usize = lines.scalar("classes", None)?;
    let dim: usize = lines.scalar("dim", None)?;
    let (rest, _) = lines.keyed("normalizer", None)?;
    let normalizer = if rest == "none" {
        None
    } else {
        let scales = parse_floats(rest.split_whitespace()).map_err(|t| lines.bad(format!("cannot parse '{t}'")))?;
        if scales.len() != dim {
            return Err(mismatch(format!("{dim} normalizer scales"), scales.len()));
        }
        Some(MaxAbsNormalizer { scales })
    };
    let classifier = match kind.as_str() {
        "svm" => {
            let params = SvmParams {
                reg: lines.scalar("reg", None)?,
                epochs: lines.scalar("epochs", None)?,
                seed: lines.scalar("seed", None)?,
            };
            let (mut weights, mut biases) = (Vec::with_capacity(classes), Vec::with_capacity(classes));
            for c in 0..classes {
                weights.push(lines.vector("weights", Some(c), dim)?);
                biases.push(lines.scalar("bias", Some(c))?);
            }
            ModelKind::Svm(SvmModel {
                params,
                weights,
                biases,
            })
        }
        "pca" => {
            let components = lines.scalar("components", None)?;
            let mut list = Vec::with_capacity(classes);
            for c in 0..classes {
                let mean = lines.vector("mean", Some(c), dim)?;
                let rank: usize = lines.scalar("rank", Some(c))?;
                let basis = (0..rank)
                    .map(|_| lines.vector("basis", Some(c), dim))
                    .collect::<Result<Vec<_>>>()?;
                list.push(PcaClass { mean, basis });
            }
            ModelKind::Pca(PcaClassModel {
                components,
                classes: list,
            })
        }
        other => return Err(lines.bad(format!("unknown model kind '{other}'"))),
    };
    Ok(TrainedModel {
        normalizer,
        classifier,
    })
}
