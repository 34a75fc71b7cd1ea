//! Hierarchical Riesz feature representation.
//!
//! One layer convolves its input with `M` rotated copies of the complex base
//! filter `ψ = i·r1 + r(2,0)`, i.e. computes `i·H_φ f + H²_φ f` for
//! `φ = kπ/M`, and keeps the scaled pointwise amplitude. Applying the layer
//! `K` times yields `Σ_{k=0..K} M^k` maps (`S_0 = f`), which are globally
//! pooled into a [`FeatureVector`].
//!
//! Mean pooling keeps the map nonexpansive. Max pooling is available but does
//! not preserve nonexpansiveness.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft2, ifft2_complex, ifft2_with_reference, Spectrum};
use crate::grid::ImageGrid;
use crate::riesz::first_order_grids;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Pooling {
    #[default]
    Mean,
    Max,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" | "avg" | "average" => Ok(Pooling::Mean),
            "max" => Ok(Pooling::Max),
            other => Err(Error::InvalidConfig(format!("unknown pooling {other:?}"))),
        }
    }
}

/// Parameters of the representation. `Default` is depth 3, 4 angles, `C = 1`,
/// mean pooling and no pre-smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszConfig {
    pub depth: usize,
    pub angles: usize,
    pub scale_constant: f64,
    pub pooling: Pooling,
    pub presmooth_sigma: Option<f64>,
}

impl Default for RieszConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            angles: 4,
            scale_constant: 1.0,
            pooling: Pooling::Mean,
            presmooth_sigma: None,
        }
    }
}

impl RieszConfig {
    pub fn new(depth: usize, angles: usize, scale_constant: f64) -> Result<Self> {
        let cfg = Self {
            depth,
            angles,
            scale_constant,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_pooling(mut self, pooling: Pooling) -> Self {
        self.pooling = pooling;
        self
    }

    pub fn with_presmooth(mut self, sigma: Option<f64>) -> Self {
        self.presmooth_sigma = sigma;
        self
    }

    pub fn with_scale_constant(mut self, c: f64) -> Self {
        self.scale_constant = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles == 0 || self.angles % 4 != 0 {
            return Err(Error::InvalidConfig(format!(
                "angle count must be a positive multiple of 4, got {}",
                self.angles
            )));
        }
        if !(self.scale_constant > 0.0 && self.scale_constant.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "scale constant must be positive, got {}",
                self.scale_constant
            )));
        }
        if let Some(s) = self.presmooth_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("presmooth sigma must be positive, got {s}")));
            }
        }
        // Keep the vector length addressable.
        if self.angles.checked_pow(self.depth as u32).is_none() {
            return Err(Error::InvalidConfig("depth/angle combination overflows".into()));
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        feature_count(self.depth, self.angles)
    }

    /// Rotation angle of index `k`, `kπ/M`.
    pub fn angle(&self, k: usize) -> f64 {
        k as f64 * std::f64::consts::PI / self.angles as f64
    }
}

/// `Σ_{k=0..depth} angles^k`.
pub fn feature_count(depth: usize, angles: usize) -> usize {
    (0..=depth).map(|k| angles.pow(k as u32)).sum()
}

/// Sequence of rotation indices leading to one map; the empty path is the input itself.
///
/// Ordered depth-major, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FeaturePath(pub Vec<usize>);

impl FeaturePath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, rotation: usize) -> Self {
        let mut v = self.0.clone();
        v.push(rotation);
        Self(v)
    }

    /// Every path up to `depth` over `angles` rotations, in canonical order.
    pub fn enumerate(depth: usize, angles: usize) -> Vec<FeaturePath> {
        let mut out = vec![FeaturePath::root()];
        let mut level = vec![FeaturePath::root()];
        for _ in 0..depth {
            level = level
                .iter()
                .flat_map(|p| (0..angles).map(move |r| p.child(r)))
                .collect();
            out.extend(level.iter().cloned());
        }
        out
    }
}

impl Ord for FeaturePath {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for FeaturePath {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FeaturePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for FeaturePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::FeatureTable(format!("bad feature path {s:?}")))?;
        if inner.trim().is_empty() {
            return Ok(Self::root());
        }
        inner
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(FeaturePath)
            .map_err(|_| Error::FeatureTable(format!("bad feature path {s:?}")))
    }
}

/// Pooled representation `Φ(f)` in canonical path order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub config: RieszConfig,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn paths(&self) -> Vec<FeaturePath> {
        FeaturePath::enumerate(self.config.depth, self.config.angles)
    }
}

/// Frequency responses of the `M` rotated base filters on one grid size.
///
/// Filter `k` holds `H²_φ + i·H_φ` for `φ = kπ/M`; one inverse transform of
/// `F(f) · filter` therefore yields `H²_φ f` in the real part and `H_φ f` in
/// the imaginary part.
#[derive(Debug, Clone)]
pub struct FilterBank {
    height: usize,
    width: usize,
    filters: Vec<Vec<Complex64>>,
}

impl FilterBank {
    pub fn new(height: usize, width: usize, angles: usize) -> Self {
        Self::build(height, width, angles, Complex64::new(0.0, 0.0))
    }

    /// A bank whose first-order multiplier leaks DC. Used to check that the
    /// property suite detects a broken multiplier.
    pub fn with_dc_fault(height: usize, width: usize, angles: usize) -> Self {
        Self::build(height, width, angles, Complex64::new(1.0, 0.0))
    }

    fn build(height: usize, width: usize, angles: usize, dc: Complex64) -> Self {
        let (m1, m2) = first_order_grids(height, width, dc);
        let i = Complex64::new(0.0, 1.0);
        let filters = (0..angles)
            .map(|k| {
                let phi = k as f64 * std::f64::consts::PI / angles as f64;
                let (c, s) = (phi.cos(), phi.sin());
                m1.iter()
                    .zip(&m2)
                    .map(|(&a, &b)| {
                        let first = a * c + b * s;
                        let second = a * a * (c * c) + b * b * (s * s) + a * b * (2.0 * c * s);
                        second + i * first
                    })
                    .collect()
            })
            .collect();
        Self {
            height,
            width,
            filters,
        }
    }

    pub fn angles(&self) -> usize {
        self.filters.len()
    }

    pub fn filter(&self, k: usize) -> &[Complex64] {
        &self.filters[k]
    }

    /// Complex response `f * ψ_k` as (real part, imaginary part).
    pub fn response(&self, spec: &Spectrum, k: usize) -> (ImageGrid, ImageGrid) {
        assert_eq!(spec.dims(), (self.height, self.width), "filter bank size differs");
        let field = ifft2_complex(&spec.apply(&self.filters[k]));
        let re = field.iter().map(|c| c.re).collect();
        let im = field.iter().map(|c| c.im).collect();
        (
            ImageGrid::from_raw(self.height, self.width, re),
            ImageGrid::from_raw(self.height, self.width, im),
        )
    }

    /// `scale · |f * ψ_k|` pointwise.
    pub fn amplitude(&self, spec: &Spectrum, k: usize, scale: f64) -> ImageGrid {
        assert_eq!(spec.dims(), (self.height, self.width), "filter bank size differs");
        let field = ifft2_complex(&spec.apply(&self.filters[k]));
        let v = field.iter().map(|c| scale * c.re.hypot(c.im)).collect();
        ImageGrid::from_raw(self.height, self.width, v)
    }
}

type BankKey = (usize, usize, usize);

/// Shared filter bank for `(height, width, angles)`.
pub fn cached_bank(height: usize, width: usize, angles: usize) -> Arc<FilterBank> {
    static BANKS: OnceLock<RwLock<HashMap<BankKey, Arc<FilterBank>>>> = OnceLock::new();
    let banks = BANKS.get_or_init(|| RwLock::new(HashMap::new()));
    let key = (height, width, angles);
    if let Some(b) = banks.read().expect("filter bank cache poisoned").get(&key) {
        return Arc::clone(b);
    }
    let built = Arc::new(FilterBank::new(height, width, angles));
    let mut guard = banks.write().expect("filter bank cache poisoned");
    Arc::clone(guard.entry(key).or_insert(built))
}

/// Real and imaginary parts of `f * ψ_r` for `r = angle_index·π/angles`:
/// `(H²_r f, H_r f)`.
pub fn base_response(f: &ImageGrid, angle_index: usize, angles: usize) -> Result<(ImageGrid, ImageGrid)> {
    if angle_index >= angles {
        return Err(Error::InvalidConfig(format!(
            "angle index {angle_index} out of range for {angles} angles"
        )));
    }
    let bank = cached_bank(f.height(), f.width(), angles);
    Ok(bank.response(&fft2(f), angle_index))
}

/// One layer: `C·A(f * ψ_r)` for every rotation `r`.
pub fn layer_s(f: &ImageGrid, config: &RieszConfig) -> Result<Vec<ImageGrid>> {
    config.validate()?;
    let bank = cached_bank(f.height(), f.width(), config.angles);
    let spec = fft2(f);
    Ok((0..config.angles)
        .map(|r| bank.amplitude(&spec, r, config.scale_constant))
        .collect())
}

fn children(f: &ImageGrid, config: &RieszConfig) -> Vec<ImageGrid> {
    let bank = cached_bank(f.height(), f.width(), config.angles);
    let spec = fft2(f);
    (0..config.angles)
        .map(|r| bank.amplitude(&spec, r, config.scale_constant))
        .collect()
}

/// Every map of the hierarchy up to `config.depth`, keyed by path.
///
/// Memory grows as `M^K` maps; [`extract_features`] pools on the fly instead.
pub fn build_hierarchy(f: &ImageGrid, config: &RieszConfig) -> Result<BTreeMap<FeaturePath, ImageGrid>> {
    config.validate()?;
    let mut out = BTreeMap::new();
    let mut level = vec![(FeaturePath::root(), f.clone())];
    out.insert(FeaturePath::root(), f.clone());
    for _ in 0..config.depth {
        level = level
            .par_iter()
            .map(|(path, map)| {
                children(map, config)
                    .into_iter()
                    .enumerate()
                    .map(|(r, m)| (path.child(r), m))
                    .collect::<Vec<_>>()
            })
            .flatten()
            .collect();
        for (p, m) in &level {
            out.insert(p.clone(), m.clone());
        }
    }
    Ok(out)
}

/// Global pooling of one map.
pub fn pool_global(map: &ImageGrid, kind: Pooling) -> f64 {
    match kind {
        Pooling::Mean => map.mean(),
        Pooling::Max => map.max(),
    }
}

/// Periodic Gaussian smoothing, applied as the multiplier `exp(-2π²σ²|u|²)`.
pub fn gaussian_presmooth(f: &ImageGrid, sigma: f64) -> Result<ImageGrid> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("presmooth sigma must be positive, got {sigma}")));
    }
    let fc = crate::fft::FreqCoords::new(f.height(), f.width());
    let k = -2.0 * std::f64::consts::PI.powi(2) * sigma * sigma;
    let m: Vec<Complex64> = fc
        .iter()
        .map(|(_, _, u1, u2)| Complex64::new((k * (u1 * u1 + u2 * u2)).exp(), 0.0))
        .collect();
    ifft2_with_reference(&fft2(f).apply(&m), f.norm())
}

/// `Φ(f)`: pooled value of every path in canonical order.
///
/// Maps are computed breadth-first; only the current level is held in memory
/// and the deepest level is pooled without being stored.
pub fn extract_features(f: &ImageGrid, config: &RieszConfig) -> Result<FeatureVector> {
    config.validate()?;
    let input = match config.presmooth_sigma {
        Some(sigma) => gaussian_presmooth(f, sigma)?,
        None => f.clone(),
    };
    let mut values = Vec::with_capacity(config.feature_count());
    values.push(pool_global(&input, config.pooling));
    let mut level = vec![input];
    for depth in 1..=config.depth {
        if depth == config.depth {
            let pooled: Vec<Vec<f64>> = level
                .par_iter()
                .map(|m| children(m, config).iter().map(|c| pool_global(c, config.pooling)).collect())
                .collect();
            values.extend(pooled.into_iter().flatten());
            break;
        }
        level = level
            .par_iter()
            .map(|m| children(m, config))
            .flatten()
            .collect();
        values.extend(level.iter().map(|m| pool_global(m, config.pooling)));
    }
    debug_assert_eq!(values.len(), config.feature_count());
    Ok(FeatureVector {
        values,
        config: *config,
    })
}

/// [`extract_features`] over a batch, in parallel, preserving input order.
pub fn extract_batch(images: &[ImageGrid], config: &RieszConfig) -> Vec<Result<FeatureVector>> {
    images.par_iter().map(|f| extract_features(f, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riesz::{hilbert2_steered, hilbert_steered, riesz_transform, RieszOrder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(h: usize, w: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn config_validation() {
        assert!(RieszConfig::new(3, 4, 1.0).is_ok());
        assert!(RieszConfig::new(3, 6, 1.0).is_err());
        assert!(RieszConfig::new(3, 0, 1.0).is_err());
        assert!(RieszConfig::new(3, 4, 0.0).is_err());
        assert!(RieszConfig::default().with_presmooth(Some(-1.0)).validate().is_err());
        assert_eq!(RieszConfig::default().feature_count(), 85);
        assert_eq!(feature_count(2, 8), 73);
        assert_eq!(feature_count(0, 4), 1);
    }

    #[test]
    fn path_order_and_text() {
        let paths = FeaturePath::enumerate(2, 4);
        assert_eq!(paths.len(), 21);
        assert!(paths.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(paths[0].to_string(), "[]");
        assert_eq!(paths[1].to_string(), "[0]");
        assert_eq!(paths[5].to_string(), "[0,0]");
        let p: FeaturePath = "[2,1,3]".parse().unwrap();
        assert_eq!(p, FeaturePath(vec![2, 1, 3]));
        assert_eq!("[]".parse::<FeaturePath>().unwrap(), FeaturePath::root());
        assert!("2,1".parse::<FeaturePath>().is_err());
        assert!(FeaturePath(vec![3]) < FeaturePath(vec![0, 0]));
    }

    #[test]
    fn pooling_values() {
        let m = ImageGrid::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(pool_global(&m, Pooling::Mean), 2.5);
        assert_eq!(pool_global(&m, Pooling::Max), 4.0);
        let f = random_grid(9, 11, 1);
        let a = pool_global(&f, Pooling::Mean);
        let b = pool_global(&f.shift_circular(4, 7), Pooling::Mean);
        assert!((a - b).abs() <= 1e-15);
    }

    #[test]
    fn base_response_matches_steered_transforms() {
        let f = random_grid(20, 18, 2);
        let (re, im) = base_response(&f, 0, 4).unwrap();
        let r1 = riesz_transform(&f, RieszOrder::R1).unwrap();
        let r20 = riesz_transform(&f, RieszOrder::new(2, 0)).unwrap();
        assert!(im.distance(&r1) < 1e-12 * f.norm());
        assert!(re.distance(&r20) < 1e-12 * f.norm());
        for k in 1..8 {
            let phi = k as f64 * std::f64::consts::PI / 8.0;
            let (re, im) = base_response(&f, k, 8).unwrap();
            assert!(im.distance(&hilbert_steered(&f, phi).unwrap()) < 1e-12 * f.norm());
            assert!(re.distance(&hilbert2_steered(&f, phi).unwrap()) < 1e-12 * f.norm());
        }
        assert!(base_response(&f, 4, 4).is_err());
    }

    #[test]
    fn base_response_of_constant_and_impulse() {
        let (re, im) = base_response(&ImageGrid::constant(10, 10, 3.0), 1, 4).unwrap();
        assert!(re.norm() < 1e-12 && im.norm() < 1e-12);
        for &(h, w) in &[(33, 33), (64, 64), (16, 9)] {
            let delta = ImageGrid::from_fn(h, w, |p, q| if p == 0 && q == 0 { 1.0 } else { 0.0 });
            for k in 0..4 {
                let (re, im) = base_response(&delta, k, 4).unwrap();
                assert!(re.sum().abs() <= 1e-8 && im.sum().abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn faulty_bank_leaks_dc() {
        let delta = ImageGrid::from_fn(16, 16, |p, q| if p == 0 && q == 0 { 1.0 } else { 0.0 });
        let bank = FilterBank::with_dc_fault(16, 16, 4);
        let (re, im) = bank.response(&fft2(&delta), 0);
        assert!(re.sum().abs() > 0.5 || im.sum().abs() > 0.5);
    }

    #[test]
    fn layer_cases() {
        let cfg = RieszConfig::default();
        let z = layer_s(&ImageGrid::zeros(8, 8), &cfg).unwrap();
        assert_eq!(z.len(), 4);
        assert!(z.iter().all(|m| m.norm() == 0.0));

        let f = random_grid(16, 16, 3);
        let one = layer_s(&f, &cfg).unwrap();
        let two = layer_s(&f, &cfg.with_scale_constant(2.0)).unwrap();
        for (a, b) in one.iter().zip(&two) {
            assert!(a.samples().iter().all(|&v| v >= 0.0));
            assert_eq!(&a.scale(2.0), b);
        }
    }

    #[test]
    fn layer_is_nonexpansive_with_inverse_angle_count() {
        for angles in [4, 8] {
            let cfg = RieszConfig::new(1, angles, 1.0 / angles as f64).unwrap();
            for seed in 0..10 {
                let f = random_grid(16, 20, 100 + seed);
                let g = random_grid(16, 20, 200 + seed);
                let sf = layer_s(&f, &cfg).unwrap();
                let sg = layer_s(&g, &cfg).unwrap();
                let lhs: f64 = sf.iter().zip(&sg).map(|(a, b)| a.distance(b).powi(2)).sum();
                assert!(lhs <= f.distance(&g).powi(2) + 1e-10);
            }
        }
    }

    #[test]
    fn hierarchy_sizes() {
        let f = random_grid(12, 12, 4);
        let cfg0 = RieszConfig::new(0, 4, 1.0).unwrap();
        let h0 = build_hierarchy(&f, &cfg0).unwrap();
        assert_eq!(h0.len(), 1);
        assert_eq!(h0[&FeaturePath::root()], f);
        assert_eq!(build_hierarchy(&f, &RieszConfig::default()).unwrap().len(), 85);
        assert_eq!(build_hierarchy(&f, &RieszConfig::new(2, 8, 1.0).unwrap()).unwrap().len(), 73);
    }

    #[test]
    fn features_agree_with_hierarchy() {
        let f = random_grid(14, 10, 5);
        let cfg = RieszConfig::new(2, 4, 0.5).unwrap();
        let hier = build_hierarchy(&f, &cfg).unwrap();
        let fv = extract_features(&f, &cfg).unwrap();
        let pooled: Vec<f64> = hier.values().map(|m| m.mean()).collect();
        assert_eq!(fv.values, pooled);
        let again = extract_features(&f, &cfg).unwrap();
        assert_eq!(fv, again);
    }

    #[test]
    fn constant_image_features() {
        let fv = extract_features(&ImageGrid::constant(16, 16, 0.4), &RieszConfig::default()).unwrap();
        assert_eq!(fv.len(), 85);
        assert!((fv.values[0] - 0.4).abs() < 1e-15);
        assert!(fv.values[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn presmooth_cases() {
        let f = random_grid(24, 24, 6);
        let s = gaussian_presmooth(&f, 0.01).unwrap();
        assert!(crate::grid::relative_l2(&s, &f) < 1e-3);
        let c = ImageGrid::constant(8, 12, 2.0);
        assert!(gaussian_presmooth(&c, 3.0).unwrap().distance(&c) < 1e-12);
        for sigma in [0.5, 1.0, 4.0] {
            assert!(gaussian_presmooth(&f, sigma).unwrap().norm() <= f.norm());
        }
        assert!(gaussian_presmooth(&f, 0.0).is_err());
    }

    #[test]
    fn batch_preserves_order() {
        let imgs: Vec<_> = (0..6).map(|s| random_grid(10, 10, s)).collect();
        let cfg = RieszConfig::new(2, 4, 1.0).unwrap();
        let batch = extract_batch(&imgs, &cfg);
        for (img, fv) in imgs.iter().zip(batch) {
            assert_eq!(fv.unwrap(), extract_features(img, &cfg).unwrap());
        }
    }
}
