use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmax, dot, Classifier, LabeledFeatures};
use crate::error::{mismatch, Error, Result};

/// Training parameters of the linear one-vs-rest classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Regularization weight λ of `λ/2 ‖w‖² + mean hinge loss`.
    pub reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            reg: 1e-4,
            epochs: 50,
            seed: 0,
        }
    }
}

/// One weight vector and bias per class; prediction is the largest score.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub params: SvmParams,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl SvmModel {
    /// Stochastic subgradient descent with step `1/(λt)` on every binary problem.
    ///
    /// Inputs are centered on the training mean and the bias is learned as the
    /// weight of a constant unit feature, then folded back. All classes share one
    /// visiting order per epoch, drawn from the seeded generator.
    pub fn fit(train: &LabeledFeatures, params: SvmParams) -> Result<Self> {
        if !(params.reg > 0.0 && params.reg.is_finite()) {
            return Err(Error::InvalidConfig(format!("regularization must be positive, got {}", params.reg)));
        }
        if params.epochs == 0 {
            return Err(Error::InvalidConfig("at least one epoch is required".into()));
        }
        if train.is_empty() {
            return Err(Error::Empty("SVM training set is empty".into()));
        }
        let present = (0..train.class_count).filter(|c| train.labels.contains(c)).count();
        if present < 2 {
            return Err(Error::SingleClass);
        }

        let (n, dim, k) = (train.len(), train.dim(), train.class_count);
        let mut mean = vec![0.0; dim];
        for x in &train.features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered: Vec<Vec<f64>> = train
            .features
            .iter()
            .map(|x| x.iter().zip(&mean).map(|(v, m)| v - m).collect())
            .collect();

        let mut weights = vec![vec![0.0; dim]; k];
        let mut biases = vec![0.0; k];
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0u64;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (params.reg * t as f64);
                let decay = 1.0 - 1.0 / t as f64;
                let x = &centered[i];
                for c in 0..k {
                    let y = if train.labels[i] == c { 1.0 } else { -1.0 };
                    let (w, b) = (&mut weights[c], &mut biases[c]);
                    let margin = y * (dot(w, x) + *b);
                    w.iter_mut().for_each(|v| *v *= decay);
                    *b *= decay;
                    if margin < 1.0 {
                        for (wv, xv) in w.iter_mut().zip(x) {
                            *wv += eta * y * xv;
                        }
                        *b += eta * y;
                    }
                }
            }
        }
        for (w, b) in weights.iter().zip(biases.iter_mut()) {
            *b -= dot(w, &mean);
        }
        Ok(Self {
            params,
            weights,
            biases,
        })
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(mismatch(self.dim(), x.len()));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }
}

impl Classifier for SvmModel {
    fn class_count(&self) -> usize {
        self.weights.len()
    }

    fn dim(&self) -> usize {
        self.weights.first().map(Vec::len).unwrap_or(0)
    }

    /// Class with the largest score; ties go to the smallest class id.
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(self.scores(x)?))
    }
}
