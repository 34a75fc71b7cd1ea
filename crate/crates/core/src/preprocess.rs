//! Scale-equivariant bounding-box extraction and resampling.

use crate::error::{Error, Result};
use crate::grid::{minmax_normalize, ImageGrid};

/// Axis-aligned box in padded-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

impl BoundingBox {
    pub fn row_end(&self) -> usize {
        self.row0 + self.height
    }

    pub fn col_end(&self) -> usize {
        self.col0 + self.width
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.row0 <= other.row0
            && self.col0 <= other.col0
            && self.row_end() >= other.row_end()
            && self.col_end() >= other.col_end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BboxParams {
    /// Zero pixels added on each side before thresholding.
    pub pad: usize,
    /// Foreground is every normalized pixel `>= threshold`.
    pub threshold: f64,
    /// Relative growth of each half-diagonal about the box center.
    pub enlarge: f64,
}

impl Default for BboxParams {
    fn default() -> Self {
        Self {
            pad: 50,
            threshold: 0.5,
            enlarge: 0.4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BboxResult {
    pub crop: ImageGrid,
    /// Tight box around the foreground.
    pub tight: BoundingBox,
    /// Enlarged, clamped box that was cropped.
    pub enlarged: BoundingBox,
}

/// Tight box around pixels `>= threshold`, or `None` when there are none.
pub fn foreground_box(img: &ImageGrid, threshold: f64) -> Option<BoundingBox> {
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for p in 0..img.height() {
        for (q, &v) in img.row(p).iter().enumerate() {
            if v >= threshold {
                r0 = r0.min(p);
                r1 = r1.max(p);
                c0 = c0.min(q);
                c1 = c1.max(q);
            }
        }
    }
    (r0 != usize::MAX).then(|| BoundingBox {
        row0: r0,
        col0: c0,
        height: r1 - r0 + 1,
        width: c1 - c0 + 1,
    })
}

// Snap tolerance for outward rounding of the enlarged box edges.
const SNAP: f64 = 1e-9;

fn enlarge_axis(start: usize, len: usize, factor: f64, bound: usize) -> (usize, usize) {
    let center = start as f64 + len as f64 / 2.0;
    let half = len as f64 / 2.0 * factor;
    let lo = (center - half + SNAP).floor().max(0.0) as usize;
    let hi = ((center + half - SNAP).ceil() as usize).min(bound);
    (lo.min(start), hi.max(start + len))
}

/// Enlarges `tight` by scaling both half-extents by `1 + enlarge` about its
/// center, rounding outward and clamping to `height x width`.
pub fn enlarge_box(tight: BoundingBox, enlarge: f64, height: usize, width: usize) -> BoundingBox {
    let factor = 1.0 + enlarge.max(0.0);
    let (r0, r1) = enlarge_axis(tight.row0, tight.height, factor, height);
    let (c0, c1) = enlarge_axis(tight.col0, tight.width, factor, width);
    BoundingBox {
        row0: r0,
        col0: c0,
        height: r1 - r0,
        width: c1 - c0,
    }
}

/// Four-step box extraction: min-max normalize, zero-pad, threshold, tight
/// box; the box is then enlarged and cropped from the padded image.
pub fn bbox_extract(f: &ImageGrid, params: &BboxParams) -> Result<BboxResult> {
    let padded = minmax_normalize(f).pad_zero(params.pad);
    let tight = foreground_box(&padded, params.threshold).ok_or(Error::EmptyForeground {
        threshold: params.threshold,
    })?;
    let enlarged = enlarge_box(tight, params.enlarge, padded.height(), padded.width());
    let crop = padded.crop(enlarged.row0, enlarged.col0, enlarged.height, enlarged.width)?;
    Ok(BboxResult {
        crop,
        tight,
        enlarged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Nearest,
    Bilinear,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nearest" => Ok(Interpolation::Nearest),
            "bilinear" | "linear" => Ok(Interpolation::Bilinear),
            other => Err(Error::InvalidConfig(format!("unknown interpolation {other:?}"))),
        }
    }
}

/// Resamples to `round(dim * factor)` per axis with pixel-center alignment.
/// Bilinear sampling clamps at the edges.
pub fn rescale(f: &ImageGrid, factor: f64, method: Interpolation) -> Result<ImageGrid> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::DegenerateSize(format!("scale factor must be positive, got {factor}")));
    }
    let (h, w) = f.dims();
    let (oh, ow) = ((h as f64 * factor).round() as usize, (w as f64 * factor).round() as usize);
    if oh == 0 || ow == 0 {
        return Err(Error::DegenerateSize(format!(
            "rescaling {h}x{w} by {factor} gives {oh}x{ow}"
        )));
    }
    let (sy, sx) = (h as f64 / oh as f64, w as f64 / ow as f64);
    let out = match method {
        Interpolation::Nearest => ImageGrid::from_fn(oh, ow, |i, j| {
            let p = (((i as f64 + 0.5) * sy).floor() as usize).min(h - 1);
            let q = (((j as f64 + 0.5) * sx).floor() as usize).min(w - 1);
            f.get(p, q)
        }),
        Interpolation::Bilinear => ImageGrid::from_fn(oh, ow, |i, j| {
            let y = ((i as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
            let x = ((j as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let (p0, q0) = (y.floor() as usize, x.floor() as usize);
            let (p1, q1) = ((p0 + 1).min(h - 1), (q0 + 1).min(w - 1));
            let (ty, tx) = (y - p0 as f64, x - q0 as f64);
            let top = f.get(p0, q0) * (1.0 - tx) + f.get(p0, q1) * tx;
            let bottom = f.get(p1, q0) * (1.0 - tx) + f.get(p1, q1) * tx;
            top * (1.0 - ty) + bottom * ty
        }),
    };
    Ok(out)
}

/// Downscales by an integer factor, averaging each `factor x factor` block.
/// Trailing rows/columns that do not fill a block are dropped.
pub fn block_average(f: &ImageGrid, factor: usize) -> Result<ImageGrid> {
    let (h, w) = f.dims();
    if factor == 0 || h / factor == 0 || w / factor == 0 {
        return Err(Error::DegenerateSize(format!(
            "cannot block-average {h}x{w} by {factor}"
        )));
    }
    let norm = 1.0 / (factor * factor) as f64;
    Ok(ImageGrid::from_fn(h / factor, w / factor, |i, j| {
        let mut acc = 0.0;
        for p in i * factor..(i + 1) * factor {
            for q in j * factor..(j + 1) * factor {
                acc += f.get(p, q);
            }
        }
        acc * norm
    }))
}
