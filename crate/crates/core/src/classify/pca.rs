use nalgebra::DMatrix;

use super::{argmin, dot, Classifier, LabeledFeatures};
use crate::error::{mismatch, Error, Result};

/// Affine subspace of one class: mean plus orthonormal basis rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaClass {
    pub mean: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl PcaClass {
    /// `‖(x − μ) − V Vᵀ (x − μ)‖₂`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let coeffs: Vec<f64> = self.basis.iter().map(|v| dot(v, &r)).collect();
        for (v, c) in self.basis.iter().zip(coeffs) {
            for (ri, vi) in r.iter_mut().zip(v) {
                *ri -= c * vi;
            }
        }
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Nearest-subspace classifier: one principal subspace per class.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaClassModel {
    pub components: usize,
    pub classes: Vec<PcaClass>,
}

impl PcaClassModel {
    /// Fits the top-`components` right singular directions of each centered class matrix.
    ///
    /// The count is truncated (with a warning) to the numerical rank of a class.
    pub fn fit(train: &LabeledFeatures, components: usize) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidConfig("PCA needs at least one component".into()));
        }
        if train.is_empty() {
            return Err(Error::Empty("PCA training set is empty".into()));
        }
        let dim = train.dim();
        let mut classes = Vec::with_capacity(train.class_count);
        for c in 0..train.class_count {
            let rows: Vec<&Vec<f64>> = train
                .features
                .iter()
                .zip(&train.labels)
                .filter(|(_, &l)| l == c)
                .map(|(x, _)| x)
                .collect();
            if rows.len() < 2 {
                return Err(Error::TooFewSamples {
                    class: c,
                    count: rows.len(),
                });
            }
            classes.push(fit_class(&rows, dim, components, c));
        }
        Ok(Self {
            components,
            classes,
        })
    }

    pub fn class_residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(mismatch(self.dim(), x.len()));
        }
        Ok(self.classes.iter().map(|c| c.residual(x)).collect())
    }
}

fn fit_class(rows: &[&Vec<f64>], dim: usize, components: usize, class: usize) -> PcaClass {
    let n = rows.len();
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| rows[i][j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let top = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let tol = top * (n.max(dim) as f64) * f64::EPSILON;
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > tol)
        .count()
        .min(n - 1);
    let keep = components.min(rank);
    if keep < components {
        log::warn!("class {class}: {components} components requested, rank is {rank}; keeping {keep}");
    }
    let basis = order[..keep]
        .iter()
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    PcaClass { mean, basis }
}

impl Classifier for PcaClassModel {
    fn class_count(&self) -> usize {
        self.classes.len()
    }

    fn dim(&self) -> usize {
        self.classes.first().map(|c| c.mean.len()).unwrap_or(0)
    }

    /// `argmin_c` of the projection residual; ties go to the smallest class id.
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmin(self.class_residuals(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn projector(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
        let mut p = vec![0.0; dim * dim];
        for v in basis {
            for i in 0..dim {
                for j in 0..dim {
                    p[i * dim + j] += v[i] * v[j];
                }
            }
        }
        p
    }

    fn gaussian_rows(n: usize, center: &[f64], spread: &[f64], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let std = Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|_| center.iter().zip(spread).map(|(c, s)| c + s * std.sample(rng)).collect())
            .collect()
    }

    #[test]
    fn two_points_give_their_line() {
        let data = LabeledFeatures::new(
            vec![vec![1.0, 1.0, 0.0], vec![3.0, 1.0, 0.0], vec![0.0, 0.0, 5.0], vec![0.0, 2.0, 5.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let m = PcaClassModel::fit(&data, 3).unwrap();
        assert_eq!(m.classes[0].basis.len(), 1);
        assert!((m.classes[0].basis[0][0].abs() - 1.0).abs() < 1e-12);
        for (x, &l) in data.features.iter().zip(&data.labels) {
            assert!(m.classes[l].residual(x) < 1e-12);
            assert_eq!(m.predict(x).unwrap(), l);
        }
    }

    #[test]
    fn orthonormal_basis_and_full_rank_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = gaussian_rows(6, &[0.0; 8], &[1.0; 8], &mut rng);
        let data = LabeledFeatures::new(rows.clone(), vec![0; 6], 1).unwrap();
        let m = PcaClassModel::fit(&data, 20).unwrap();
        let basis = &m.classes[0].basis;
        assert_eq!(basis.len(), 5);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - expect).abs() < 1e-8);
            }
        }
        for r in &rows {
            assert!(m.classes[0].residual(r) <= 1e-8);
        }
    }

    #[test]
    fn duplicated_samples_give_same_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows = gaussian_rows(10, &[1.0, 2.0, 3.0, 4.0], &[3.0, 1.0, 0.5, 0.1], &mut rng);
        let single = LabeledFeatures::new(rows.clone(), vec![0; 10], 1).unwrap();
        let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let double = LabeledFeatures::new(doubled, vec![0; 20], 1).unwrap();
        let a = PcaClassModel::fit(&single, 2).unwrap();
        let b = PcaClassModel::fit(&double, 2).unwrap();
        for (x, y) in a.classes[0].mean.iter().zip(&b.classes[0].mean) {
            assert!((x - y).abs() < 1e-12);
        }
        let (pa, pb) = (projector(&a.classes[0].basis, 4), projector(&b.classes[0].basis, 4));
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_non_increasing_in_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = gaussian_rows(12, &[0.0; 6], &[2.0, 1.5, 1.0, 0.7, 0.3, 0.1], &mut rng);
        let data = LabeledFeatures::new(rows, vec![0; 12], 1).unwrap();
        let probe = gaussian_rows(5, &[0.5; 6], &[1.0; 6], &mut rng);
        for x in &probe {
            let mut last = f64::INFINITY;
            for d in 1..=6 {
                let r = PcaClassModel::fit(&data, d).unwrap().classes[0].residual(x);
                assert!(r <= last + 1e-12);
                last = r;
            }
        }
    }

    #[test]
    fn three_gaussian_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // each class spreads over its own pair of axes, so no plane meets another center
        let mut centers = [[0.0; 9]; 3];
        let mut spreads = [[0.1; 9]; 3];
        for c in 0..3 {
            centers[c][c] = 5.0;
            spreads[c][3 + 2 * c] = 1.0;
            spreads[c][4 + 2 * c] = 0.5;
        }
        let (mut train, mut tl, mut test, mut sl) = (vec![], vec![], vec![], vec![]);
        for c in 0..3 {
            train.extend(gaussian_rows(50, &centers[c], &spreads[c], &mut rng));
            tl.extend(std::iter::repeat(c).take(50));
            test.extend(gaussian_rows(100, &centers[c], &spreads[c], &mut rng));
            sl.extend(std::iter::repeat(c).take(100));
        }
        let m = PcaClassModel::fit(&LabeledFeatures::new(train, tl, 3).unwrap(), 2).unwrap();
        let mut correct = 0;
        for (x, &l) in test.iter().zip(&sl) {
            let pred = m.predict(x).unwrap();
            // brute-force oracle: explicit residual of every class, smallest wins
            let oracle = (0..3)
                .min_by(|&a, &b| m.classes[a].residual(x).total_cmp(&m.classes[b].residual(x)))
                .unwrap();
            assert_eq!(pred, oracle);
            correct += (pred == l) as usize;
        }
        assert!(correct as f64 / 300.0 >= 0.99, "accuracy {}", correct as f64 / 300.0);
    }

    #[test]
    fn mean_point_and_errors() {
        let data = LabeledFeatures::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![10.0, 10.0], vec![10.0, 11.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let m = PcaClassModel::fit(&data, 1).unwrap();
        assert_eq!(m.predict(&m.classes[1].mean.clone()).unwrap(), 1);
        assert!(m.predict(&[1.0]).is_err());
        let lonely = LabeledFeatures::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1], 2).unwrap();
        assert!(matches!(PcaClassModel::fit(&lonely, 1), Err(Error::TooFewSamples { class: 1, count: 1 })));
    }

    #[test]
    fn orthogonal_change_of_basis_preserves_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows = gaussian_rows(20, &[0.0; 3], &[1.0, 0.5, 0.2], &mut rng);
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let data = LabeledFeatures::new(rows, labels, 2).unwrap();
        let m = PcaClassModel::fit(&data, 1).unwrap();
        // rotation about the third axis
        let (c, s) = (0.6f64, 0.8f64);
        let rot = |v: &[f64]| vec![c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]];
        let rotated = PcaClassModel {
            components: 1,
            classes: m
                .classes
                .iter()
                .map(|k| PcaClass { mean: rot(&k.mean), basis: k.basis.iter().map(|b| rot(b)).collect() })
                .collect(),
        };
        for x in gaussian_rows(30, &[0.0; 3], &[1.0; 3], &mut rng) {
            let a = m.class_residuals(&x).unwrap();
            let b = rotated.class_residuals(&rot(&x)).unwrap();
            for (ra, rb) in a.iter().zip(&b) {
                assert!((ra - rb).abs() < 1e-12);
            }
        }
    }
}
