//! Real-valued sample grids.
//!
//! [`ImageGrid`] holds an input image as well as every real feature map the
//! representation produces. Samples are stored row-major; the first axis
//! (rows, index `p`) is the `x1` direction and the second axis (columns,
//! index `q`) is `x2`.

use crate::error::{mismatch, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    samples: Vec<f64>,
}

impl ImageGrid {
    /// Wraps row-major samples, checking the length and that every sample is finite.
    pub fn new(height: usize, width: usize, samples: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if samples.len() != height * width {
            return Err(mismatch(
                format!("{} samples ({height}x{width})", height * width),
                format!("{} samples", samples.len()),
            ));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite sample {} at index {i}",
                samples[i]
            )));
        }
        Ok(Self {
            height,
            width,
            samples,
        })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_raw(height: usize, width: usize, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), height * width);
        Self {
            height,
            width,
            samples,
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "dimensions must be positive");
        Self::from_raw(height, width, vec![0.0; height * width])
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "dimensions must be positive");
        assert!(value.is_finite());
        Self::from_raw(height, width, vec![value; height * width])
    }

    /// Builds a grid from `f(row, col)`. Panics if `f` yields a non-finite value.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "dimensions must be positive");
        let mut samples = Vec::with_capacity(height * width);
        for p in 0..height {
            for q in 0..width {
                let v = f(p, q);
                assert!(v.is_finite(), "non-finite sample at ({p}, {q})");
                samples.push(v);
            }
        }
        Self::from_raw(height, width, samples)
    }

    /// Builds a grid from nested rows; all rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut samples = Vec::with_capacity(height * width);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::InconsistentDimensions(format!(
                    "row {i} has {} samples, row 0 has {width}",
                    row.len()
                )));
            }
            samples.extend_from_slice(row);
        }
        Self::new(height, width, samples)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.samples[row * self.width..(row + 1) * self.width]
    }

    /// Compensated (Neumaier) sum of all samples.
    pub fn sum(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &v in &self.samples {
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.samples.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Squared L2 norm (plain sum of squares over samples).
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &ImageGrid) -> f64 {
        assert_eq!(self.dims(), other.dims(), "grid dimensions differ");
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// L2 distance between two grids of equal size.
    pub fn distance(&self, other: &ImageGrid) -> f64 {
        assert_eq!(self.dims(), other.dims(), "grid dimensions differ");
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageGrid {
        ImageGrid::from_raw(
            self.height,
            self.width,
            self.samples.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map(&self, other: &ImageGrid, f: impl Fn(f64, f64) -> f64) -> ImageGrid {
        assert_eq!(self.dims(), other.dims(), "grid dimensions differ");
        ImageGrid::from_raw(
            self.height,
            self.width,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> ImageGrid {
        self.map(|v| v * factor)
    }

    pub fn sub(&self, other: &ImageGrid) -> ImageGrid {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ImageGrid) -> ImageGrid {
        self.zip_map(other, |a, b| a + b)
    }

    /// The grid with its mean removed.
    pub fn dc_free(&self) -> ImageGrid {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Circular shift: output(p, q) = self(p - dr mod H, q - dc mod W).
    pub fn shift_circular(&self, dr: isize, dc: isize) -> ImageGrid {
        let (h, w) = (self.height as isize, self.width as isize);
        ImageGrid::from_fn(self.height, self.width, |p, q| {
            let sp = (p as isize - dr).rem_euclid(h) as usize;
            let sq = (q as isize - dc).rem_euclid(w) as usize;
            self.get(sp, sq)
        })
    }

    /// Sub-image `[row0, row0+height) x [col0, col0+width)`.
    pub fn crop(&self, row0: usize, col0: usize, height: usize, width: usize) -> Result<ImageGrid> {
        if height == 0 || width == 0 || row0 + height > self.height || col0 + width > self.width {
            return Err(Error::InconsistentDimensions(format!(
                "crop {height}x{width} at ({row0}, {col0}) exceeds {}x{} grid",
                self.height, self.width
            )));
        }
        Ok(ImageGrid::from_fn(height, width, |p, q| {
            self.get(row0 + p, col0 + q)
        }))
    }

    /// Surrounds the grid with `pad` zero samples on every side.
    pub fn pad_zero(&self, pad: usize) -> ImageGrid {
        let (h, w) = (self.height + 2 * pad, self.width + 2 * pad);
        ImageGrid::from_fn(h, w, |p, q| {
            if p < pad || q < pad || p >= pad + self.height || q >= pad + self.width {
                0.0
            } else {
                self.get(p - pad, q - pad)
            }
        })
    }
}

/// Affine map of the gray values onto `[0, 1]`.
///
/// A constant image maps to all zeros.
pub fn minmax_normalize(img: &ImageGrid) -> ImageGrid {
    let (lo, hi) = (img.min(), img.max());
    if hi <= lo {
        return ImageGrid::zeros(img.height(), img.width());
    }
    let span = hi - lo;
    img.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
}

/// ‖a − b‖ / ‖b‖, or the absolute distance when `b` is zero.
pub fn relative_l2(a: &ImageGrid, b: &ImageGrid) -> f64 {
    let d = a.distance(b);
    let n = b.norm();
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_non_finite() {
        assert!(ImageGrid::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImageGrid::new(0, 2, vec![]).is_err());
        assert!(ImageGrid::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(ImageGrid::new(1, 2, vec![0.0, f64::INFINITY]).is_err());
        assert!(ImageGrid::new(1, 2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn minmax_affine() {
        let img = ImageGrid::from_rows(&[[2.0, 4.0], [6.0, 8.0]]).unwrap();
        let out = minmax_normalize(&img);
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in out.samples().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn minmax_constant_is_zero() {
        let out = minmax_normalize(&ImageGrid::constant(3, 5, 7.5));
        assert!(out.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn minmax_identity_on_unit_range() {
        let img = ImageGrid::from_rows(&[[0.0, 0.25], [1.0, 0.5]]).unwrap();
        assert_eq!(minmax_normalize(&img), img);
    }

    #[test]
    fn circular_shift_round_trip() {
        let img = ImageGrid::from_fn(5, 7, |p, q| (p * 7 + q) as f64);
        let shifted = img.shift_circular(2, -3);
        assert_eq!(shifted.get(2, 0), img.get(0, 3));
        assert_eq!(shifted.shift_circular(-2, 3), img);
    }

    #[test]
    fn pad_and_crop() {
        let img = ImageGrid::from_fn(3, 4, |p, q| (p + q) as f64 + 1.0);
        let padded = img.pad_zero(2);
        assert_eq!(padded.dims(), (7, 8));
        assert_eq!(padded.get(0, 0), 0.0);
        assert_eq!(padded.crop(2, 2, 3, 4).unwrap(), img);
        assert!(padded.crop(5, 5, 3, 4).is_err());
    }
}
