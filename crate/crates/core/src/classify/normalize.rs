use crate::error::{mismatch, Error, Result};

/// Coordinatewise scaling by the maximal absolute training value.
///
/// Coordinates that are zero over the whole training set keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxAbsNormalizer {
    pub scales: Vec<f64>,
}

impl MaxAbsNormalizer {
    pub fn fit<V: AsRef<[f64]>>(train: &[V]) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| Error::Empty("max-abs normalizer needs at least one vector".into()))?;
        let dim = first.as_ref().len();
        let mut scales = vec![0.0f64; dim];
        for v in train {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(mismatch(dim, v.len()));
            }
            for (s, x) in scales.iter_mut().zip(v) {
                *s = s.max(x.abs());
            }
        }
        for s in &mut scales {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Self { scales })
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.scales.len() {
            return Err(mismatch(self.scales.len(), x.len()));
        }
        Ok(x.iter().zip(&self.scales).map(|(v, s)| v / s).collect())
    }
}
