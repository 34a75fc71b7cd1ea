//! Classifiers over pooled feature vectors.
//!
//! * [`MaxAbsNormalizer`]: per-coordinate division by the training max |x|.
//! * [`PcaClassModel`]: nearest affine subspace by projection residual.
//! * [`SvmModel`]: one-vs-rest linear max-margin classifier trained with
//!   seeded stochastic subgradient descent.

mod eval;
mod model_io;
mod normalize;
mod pca;
mod split;
mod svm;

pub use eval::{evaluate, evaluate_predictions, Classifier, EvalReport};
pub use model_io::{read_model, write_model, ModelKind, TrainedModel};
pub use normalize::MaxAbsNormalizer;
pub use pca::{PcaClass, PcaClassModel};
pub use split::{stratified_split, Split};
pub use svm::{SvmModel, SvmParams};

use crate::error::{mismatch, Error, Result};

/// Feature rows with class labels in `0..class_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl LabeledFeatures {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: features.len(),
                labels: labels.len(),
            });
        }
        if let Some(first) = features.first() {
            let dim = first.len();
            if let Some(bad) = features.iter().find(|f| f.len() != dim) {
                return Err(mismatch(dim, bad.len()));
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidConfig(format!(
                "label {l} out of range for {class_count} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map(Vec::len).unwrap_or(0)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledFeatures {
        LabeledFeatures {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// Same labels, every row transformed by `f`.
    pub fn map_features(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> LabeledFeatures {
        LabeledFeatures {
            features: self.features.iter().map(|x| f(x)).collect(),
            labels: self.labels.clone(),
            class_count: self.class_count,
        }
    }
}

/// Index of the largest score; ties go to the smallest index.
pub(crate) fn argmax(scores: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in scores.into_iter().enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// Index of the smallest score; ties go to the smallest index.
pub(crate) fn argmin(scores: impl IntoIterator<Item = f64>) -> usize {
    argmax(scores.into_iter().map(|s| -s))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
