//! Frequency-domain Riesz transforms, steered directional Hilbert transforms
//! and the monogenic signal.
//!
//! The first-order multiplier of axis `j` is `-i·u_j/|u|`, evaluated on the
//! DFT grid. Two discretization rules keep every output real:
//!
//! * the DC coefficient is hard-zeroed (the continuous multiplier is undefined there);
//! * on the Nyquist line of an even-length axis `j`, `u_j = 1/2` is its own
//!   negative, so the factor of that axis is taken as the real value `u_j/|u|`
//!   instead of `-i·u_j/|u|`. This keeps the multiplier Hermitian and still
//!   all-pass, `|m1|^2 + |m2|^2 = 1` at every nonzero frequency.
//!
//! Higher orders are products of first-order factors, so `R^(n1,n2)` costs a
//! single FFT pair and composition is exact. The adjoint of any transform is
//! the conjugate multiplier.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft2, ifft2_with_reference, is_nyquist, FreqCoords, Spectrum};
use crate::grid::ImageGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Multi-index `(n1, n2)` of a Riesz transform `R1^n1 R2^n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RieszOrder {
    pub n1: u32,
    pub n2: u32,
}

impl RieszOrder {
    pub const R1: RieszOrder = RieszOrder { n1: 1, n2: 0 };
    pub const R2: RieszOrder = RieszOrder { n1: 0, n2: 1 };

    pub const fn new(n1: u32, n2: u32) -> Self {
        Self { n1, n2 }
    }

    /// Transform order `N = n1 + n2`.
    pub fn total(&self) -> u32 {
        self.n1 + self.n2
    }

    /// Multinomial weight `N! / (n1! n2!)`.
    pub fn weight(&self) -> f64 {
        let mut w = 1.0;
        for k in 1..=self.n2 {
            w *= (self.n1 + k) as f64 / k as f64;
        }
        w
    }

    /// All multi-indices with `n1 + n2 = order`, in ascending `n2`.
    pub fn all_of_total(order: u32) -> Vec<RieszOrder> {
        (0..=order).map(|n2| RieszOrder::new(order - n2, n2)).collect()
    }
}

impl fmt::Display for RieszOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n1, self.n2)
    }
}

/// First-order factor of one axis. `axis_u` is that axis' frequency and `norm` is `|u| > 0`.
#[inline]
fn axis_factor(axis_u: f64, nyquist: bool, norm: f64) -> Complex64 {
    if nyquist {
        Complex64::new(axis_u / norm, 0.0)
    } else {
        Complex64::new(0.0, -axis_u / norm)
    }
}

/// The two first-order multiplier grids `(m1, m2)` of an `h x w` grid.
///
/// `dc` is the value written at DC for both grids' first axis; anything other
/// than zero is a deliberately broken multiplier used for fault injection.
pub(crate) fn first_order_grids(h: usize, w: usize, dc: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    let fc = FreqCoords::new(h, w);
    let mut m1 = Vec::with_capacity(h * w);
    let mut m2 = Vec::with_capacity(h * w);
    for (p, q, u1, u2) in fc.iter() {
        if p == 0 && q == 0 {
            m1.push(dc);
            m2.push(ZERO);
            continue;
        }
        let norm = u1.hypot(u2);
        m1.push(axis_factor(u1, is_nyquist(p, h), norm));
        m2.push(axis_factor(u2, is_nyquist(q, w), norm));
    }
    (m1, m2)
}

fn ipow(z: Complex64, n: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        acc *= z;
    }
    acc
}

/// Frequency response of `R^(n1,n2)` on an `height x width` DFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszMultiplier {
    height: usize,
    width: usize,
    order: RieszOrder,
    values: Vec<Complex64>,
}

impl RieszMultiplier {
    pub fn order(&self) -> RieszOrder {
        self.order
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.values[p * self.width + q]
    }

    /// Conjugate multiplier, i.e. the adjoint operator.
    pub fn adjoint(&self) -> Vec<Complex64> {
        self.values.iter().map(|c| c.conj()).collect()
    }
}

/// Builds the multiplier of `R^order` (order `(0,0)` yields the identity except at DC).
pub fn riesz_multiplier(order: RieszOrder, height: usize, width: usize) -> RieszMultiplier {
    let (m1, m2) = first_order_grids(height, width, ZERO);
    let values = m1
        .iter()
        .zip(&m2)
        .enumerate()
        .map(|(i, (&a, &b))| {
            if i == 0 {
                ZERO
            } else {
                ipow(a, order.n1) * ipow(b, order.n2)
            }
        })
        .collect();
    RieszMultiplier {
        height,
        width,
        order,
        values,
    }
}

type CacheKey = (RieszOrder, usize, usize);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<RieszMultiplier>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<RieszMultiplier>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared multiplier for `(order, height, width)`, built on first use.
pub fn cached_multiplier(order: RieszOrder, height: usize, width: usize) -> Arc<RieszMultiplier> {
    let key = (order, height, width);
    if let Some(m) = cache().read().expect("multiplier cache poisoned").get(&key) {
        return Arc::clone(m);
    }
    let built = Arc::new(riesz_multiplier(order, height, width));
    let mut guard = cache().write().expect("multiplier cache poisoned");
    Arc::clone(guard.entry(key).or_insert(built))
}

fn check_order(order: RieszOrder) -> Result<()> {
    if order.total() == 0 {
        return Err(Error::InvalidOrder(format!("{order} has total order 0")));
    }
    Ok(())
}

/// Applies a multiplier laid out on `f`'s grid and returns the real output.
pub(crate) fn apply_multiplier(f: &ImageGrid, spec: &Spectrum, multiplier: &[Complex64]) -> Result<ImageGrid> {
    ifft2_with_reference(&spec.apply(multiplier), f.norm())
}

/// `R^order f`.
pub fn riesz_transform(f: &ImageGrid, order: RieszOrder) -> Result<ImageGrid> {
    check_order(order)?;
    let m = cached_multiplier(order, f.height(), f.width());
    apply_multiplier(f, &fft2(f), m.values())
}

/// Multiplier of the first-order directional Hilbert transform along `(cos φ, sin φ)`.
pub fn steered_multiplier(phi: f64, height: usize, width: usize) -> Vec<Complex64> {
    let (c, s) = (phi.cos(), phi.sin());
    let m1 = cached_multiplier(RieszOrder::R1, height, width);
    let m2 = cached_multiplier(RieszOrder::R2, height, width);
    m1.values()
        .iter()
        .zip(m2.values())
        .map(|(&a, &b)| a * c + b * s)
        .collect()
}

/// Multiplier of the second-order steered transform
/// `cos²φ R^(2,0) + sin²φ R^(0,2) + 2 cosφ sinφ R^(1,1)`.
pub fn steered2_multiplier(phi: f64, height: usize, width: usize) -> Vec<Complex64> {
    let (c, s) = (phi.cos(), phi.sin());
    let m20 = cached_multiplier(RieszOrder::new(2, 0), height, width);
    let m02 = cached_multiplier(RieszOrder::new(0, 2), height, width);
    let m11 = cached_multiplier(RieszOrder::new(1, 1), height, width);
    m20.values()
        .iter()
        .zip(m02.values())
        .zip(m11.values())
        .map(|((&a, &b), &x)| a * (c * c) + b * (s * s) + x * (2.0 * c * s))
        .collect()
}

/// Directional Hilbert transform `cos φ R1 f + sin φ R2 f` (single fused multiplier).
pub fn hilbert_steered(f: &ImageGrid, phi: f64) -> Result<ImageGrid> {
    let m = steered_multiplier(phi, f.height(), f.width());
    apply_multiplier(f, &fft2(f), &m)
}

/// Second-order directional Hilbert transform.
pub fn hilbert2_steered(f: &ImageGrid, phi: f64) -> Result<ImageGrid> {
    let m = steered2_multiplier(phi, f.height(), f.width());
    apply_multiplier(f, &fft2(f), &m)
}

/// The monogenic triple `(f, R1 f, R2 f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonogenicSignal {
    pub f: ImageGrid,
    pub f1: ImageGrid,
    pub f2: ImageGrid,
}

pub fn monogenic(f: &ImageGrid) -> Result<MonogenicSignal> {
    let spec = fft2(f);
    let m1 = cached_multiplier(RieszOrder::R1, f.height(), f.width());
    let m2 = cached_multiplier(RieszOrder::R2, f.height(), f.width());
    Ok(MonogenicSignal {
        f: f.clone(),
        f1: apply_multiplier(f, &spec, m1.values())?,
        f2: apply_multiplier(f, &spec, m2.values())?,
    })
}

impl MonogenicSignal {
    /// Pointwise `sqrt(f² + f1² + f2²)`.
    pub fn amplitude(&self) -> ImageGrid {
        local_amplitude(self)
    }

    pub fn orientation(&self) -> ImageGrid {
        local_orientation(self)
    }

    pub fn phase(&self) -> ImageGrid {
        local_phase(self)
    }
}

fn pointwise3(m: &MonogenicSignal, op: impl Fn(f64, f64, f64) -> f64) -> ImageGrid {
    let (h, w) = m.f.dims();
    let v = m
        .f
        .samples()
        .iter()
        .zip(m.f1.samples())
        .zip(m.f2.samples())
        .map(|((&a, &b), &c)| op(a, b, c))
        .collect();
    ImageGrid::from_raw(h, w, v)
}

pub fn local_amplitude(m: &MonogenicSignal) -> ImageGrid {
    pointwise3(m, |f, f1, f2| (f * f + f1 * f1 + f2 * f2).sqrt())
}

/// Orientation angle of `(f1, f2)` in `(-π/2, π/2]`, i.e. `atan(f2/f1)`.
///
/// `f1 = 0, f2 ≠ 0` gives `π/2`; `f1 = f2 = 0` gives 0.
pub fn orientation_angle(f1: f64, f2: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    if f1 == 0.0 && f2 == 0.0 {
        return 0.0;
    }
    let mut a = f2.atan2(f1);
    if a > FRAC_PI_2 {
        a -= PI;
    } else if a <= -FRAC_PI_2 {
        a += PI;
    }
    a
}

pub fn local_orientation(m: &MonogenicSignal) -> ImageGrid {
    pointwise3(m, |_, f1, f2| orientation_angle(f1, f2))
}

/// Local phase `s · atan(sqrt(f1² + f2²) / f)` in `[-π/2, π/2]`.
///
/// `s` is the sign of `(f1, f2)` projected on the local orientation, which
/// makes the phase consistent with the orientation being defined modulo π.
/// `f = 0` maps to `±π/2`, and an all-zero pixel maps to 0.
pub fn phase_angle(f: f64, f1: f64, f2: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let odd = f1.hypot(f2);
    if odd == 0.0 {
        return 0.0;
    }
    let theta = orientation_angle(f1, f2);
    let s = if f1 * theta.cos() + f2 * theta.sin() >= 0.0 { 1.0 } else { -1.0 };
    if f == 0.0 {
        return s * FRAC_PI_2;
    }
    s * (odd / f).atan()
}

pub fn local_phase(m: &MonogenicSignal) -> ImageGrid {
    pointwise3(m, phase_angle)
}

/// `Σ_{|n|=N} (N!/n!) (R^n)* g_n` for `g_n = R^n f`, which recovers the DC-free part of `f`.
///
/// `components` must list every multi-index of one total order exactly once.
pub fn reconstruct_from_order(components: &[(RieszOrder, ImageGrid)]) -> Result<ImageGrid> {
    let (first_order, first) = components
        .first()
        .ok_or_else(|| Error::Empty("no components to reconstruct from".into()))?;
    let total = first_order.total();
    check_order(*first_order)?;
    let (h, w) = first.dims();
    let mut seen = vec![false; total as usize + 1];
    for (order, img) in components {
        if order.total() != total {
            return Err(Error::InvalidOrder(format!(
                "mixed orders {first_order} and {order} in one reconstruction"
            )));
        }
        if img.dims() != (h, w) {
            return Err(crate::error::mismatch(format!("{h}x{w}"), format!("{:?}", img.dims())));
        }
        if std::mem::replace(&mut seen[order.n2 as usize], true) {
            return Err(Error::InvalidOrder(format!("{order} listed twice")));
        }
    }
    let missing: Vec<String> = RieszOrder::all_of_total(total)
        .into_iter()
        .filter(|o| !seen[o.n2 as usize])
        .map(|o| o.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteOrder {
            order: total,
            missing: missing.join(", "),
        });
    }

    let mut acc = vec![ZERO; h * w];
    let mut reference = 0.0f64;
    for (order, img) in components {
        let m = cached_multiplier(*order, h, w);
        let weight = order.weight();
        let spec = fft2(img);
        for ((a, &c), &mv) in acc.iter_mut().zip(spec.coeffs()).zip(m.values()) {
            *a += mv.conj() * c * weight;
        }
        reference += weight * img.norm_sq();
    }
    let spec = Spectrum::new(h, w, acc)?;
    ifft2_with_reference(&spec, reference.sqrt())
}

/// `(Σ_{|n|=N} (N!/n!) ‖R^n f‖², ‖f − mean(f)‖²)`; the two agree for every `f`.
pub fn energy_identity(f: &ImageGrid, order: u32) -> Result<(f64, f64)> {
    if order < 1 {
        return Err(Error::InvalidOrder("energy identity needs N >= 1".into()));
    }
    let spec = fft2(f);
    let mut lhs = 0.0;
    for n in RieszOrder::all_of_total(order) {
        let m = cached_multiplier(n, f.height(), f.width());
        lhs += n.weight() * apply_multiplier(f, &spec, m.values())?.norm_sq();
    }
    Ok((lhs, f.dc_free().norm_sq()))
}
