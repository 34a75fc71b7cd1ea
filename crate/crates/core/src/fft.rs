//! 2D DFT machinery and the frequency-grid convention.
//!
//! The forward transform is unnormalized and the inverse carries the
//! `1/(H·W)` factor. Coefficients stay in DFT order (DC at `(0, 0)`), no
//! fftshift is ever applied.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{mismatch, Error, Result};
use crate::grid::ImageGrid;

/// Imaginary residue (relative L2) above which an inverse transform is rejected.
pub const REALNESS_TOLERANCE: f64 = 1e-6;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
    dst
}

/// In-place 2D transform of a row-major `h x w` buffer (unnormalized both ways).
fn transform2(buf: &mut Vec<Complex64>, h: usize, w: usize, inverse: bool) {
    plan(w, inverse).process(buf);
    let mut t = transpose(buf, h, w);
    plan(h, inverse).process(&mut t);
    *buf = transpose(&t, w, h);
}

/// Complex DFT coefficients of an `height x width` grid, row-major, DC at `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "spectrum dimensions must be positive, got {height}x{width}"
            )));
        }
        if coeffs.len() != height * width {
            return Err(mismatch(height * width, coeffs.len()));
        }
        Ok(Self {
            height,
            width,
            coeffs,
        })
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

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.coeffs[p * self.width + q]
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Pointwise product with a multiplier laid out on the same grid.
    pub fn apply(&self, multiplier: &[Complex64]) -> Spectrum {
        assert_eq!(multiplier.len(), self.coeffs.len(), "multiplier size differs");
        Spectrum {
            height: self.height,
            width: self.width,
            coeffs: self
                .coeffs
                .iter()
                .zip(multiplier)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Largest `|c(-k) - conj(c(k))|`, relative to the largest coefficient magnitude.
    pub fn hermitian_defect(&self) -> f64 {
        let (h, w) = self.dims();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for p in 0..h {
            for q in 0..w {
                let (mp, mq) = mirror_index(p, h, q, w);
                let d = (self.get(mp, mq) - self.get(p, q).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }
}

/// Forward unnormalized 2D DFT.
pub fn fft2(img: &ImageGrid) -> Spectrum {
    let (h, w) = img.dims();
    let mut buf: Vec<Complex64> = img
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    transform2(&mut buf, h, w, false);
    Spectrum {
        height: h,
        width: w,
        coeffs: buf,
    }
}

/// Inverse DFT with `1/(H·W)` normalization, returning the full complex field.
pub fn ifft2_complex(spec: &Spectrum) -> Vec<Complex64> {
    let (h, w) = spec.dims();
    let mut buf = spec.coeffs.clone();
    transform2(&mut buf, h, w, true);
    let norm = 1.0 / (h * w) as f64;
    for c in &mut buf {
        *c *= norm;
    }
    buf
}

/// Inverse DFT of a Hermitian spectrum.
///
/// The imaginary residue is measured relative to the output norm and must not
/// exceed [`REALNESS_TOLERANCE`].
pub fn ifft2(spec: &Spectrum) -> Result<ImageGrid> {
    let reference = (spec.energy() / (spec.height * spec.width) as f64).sqrt();
    ifft2_with_reference(spec, reference)
}

/// As [`ifft2`], but the residue is measured against `reference` (an L2 norm
/// in the spatial domain, typically the norm of the transform's input).
pub(crate) fn ifft2_with_reference(spec: &Spectrum, reference: f64) -> Result<ImageGrid> {
    let (h, w) = spec.dims();
    let field = ifft2_complex(spec);
    let imag = field.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
    let residual = if reference > 0.0 { imag / reference } else { imag };
    if residual > REALNESS_TOLERANCE || !residual.is_finite() {
        return Err(Error::NonRealOutput { residual });
    }
    Ok(ImageGrid::from_raw(
        h,
        w,
        field.into_iter().map(|c| c.re).collect(),
    ))
}

/// Signed frequency of DFT index `index` on an axis of length `n`, in
/// `[-ceil(n/2) + 1, floor(n/2)]`.
pub fn signed_freq(index: usize, n: usize) -> isize {
    debug_assert!(index < n);
    if index <= n / 2 {
        index as isize
    } else {
        index as isize - n as isize
    }
}

/// True for the Nyquist index `n/2` of an even-length axis, which is its own negative.
pub fn is_nyquist(index: usize, n: usize) -> bool {
    n % 2 == 0 && index == n / 2
}

/// The index holding frequency `-u(p, q)`.
pub fn mirror_index(p: usize, h: usize, q: usize, w: usize) -> (usize, usize) {
    ((h - p) % h, (w - q) % w)
}

/// Frequency coordinates (cycles/pixel) of every DFT index of an `H x W` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreqCoords {
    pub height: usize,
    pub width: usize,
}

impl FreqCoords {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    /// `(u1, u2)` at index `(p, q)`.
    pub fn at(&self, p: usize, q: usize) -> (f64, f64) {
        (
            signed_freq(p, self.height) as f64 / self.height as f64,
            signed_freq(q, self.width) as f64 / self.width as f64,
        )
    }

    /// True when `(p, q)` is its own mirror, i.e. every axis sits at DC or Nyquist.
    pub fn is_self_paired(&self, p: usize, q: usize) -> bool {
        mirror_index(p, self.height, q, self.width) == (p, q)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..self.height).flat_map(move |p| {
            (0..self.width).map(move |q| {
                let (u1, u2) = self.at(p, q);
                (p, q, u1, u2)
            })
        })
    }
}
