//! Executable property suite.
//!
//! Every property runs on seeded random inputs and reports the measured
//! worst case next to its tolerance. [`lowpass_image`] and
//! [`random_image`] are the input families, shared with the test suites.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::fft::{fft2, ifft2, ifft2_complex, mirror_index, FreqCoords, Spectrum};
use crate::grid::{relative_l2, ImageGrid};
use crate::preprocess::block_average;
use crate::representation::{extract_features, layer_s, FilterBank, RieszConfig};
use crate::riesz::{
    energy_identity, hilbert2_steered, hilbert_steered, reconstruct_from_order, riesz_multiplier,
    riesz_transform, RieszOrder,
};

/// Deliberate defects that the suite must catch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// The first-order multiplier keeps the DC coefficient.
    DcLeak,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dc" => Ok(Fault::DcLeak),
            other => Err(format!("unknown fault '{other}' (known: dc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random inputs per property.
    pub samples: usize,
    /// Side length of the random square images.
    pub size: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 5,
            size: 32,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub tolerance: f64,
    pub measured: f64,
    pub passed: bool,
}

impl PropertyResult {
    fn check(name: &'static str, tolerance: f64, measured: f64) -> Self {
        Self {
            name,
            tolerance,
            measured,
            passed: measured <= tolerance,
        }
    }
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<30} measured {:.3e}  tolerance {:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

/// Uniform noise in `[-1, 1)`.
pub fn random_image(height: usize, width: usize, rng: &mut impl Rng) -> ImageGrid {
    ImageGrid::from_fn(height, width, |_, _| rng.random_range(-1.0..1.0))
}

/// Real image whose spectrum lives strictly inside `|u| < 0.2` cycles per sample.
///
/// Coefficients taper smoothly to zero at the band edge, with random phases,
/// on top of a positive mean so the image reads as an object on a background.
pub fn lowpass_image(size: usize, rng: &mut impl Rng) -> ImageGrid {
    let fc = FreqCoords::new(size, size);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); size * size];
    let band = 0.2;
    for (p, q, u1, u2) in fc.iter() {
        let r = u1.hypot(u2);
        let (mp, mq) = mirror_index(p, size, q, size);
        if r == 0.0 || r >= band || (mp, mq) < (p, q) {
            continue;
        }
        let taper = (1.0 - r / band).powi(2);
        let amp = taper * rng.random_range(0.5..1.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let c = Complex64::from_polar(amp, phase);
        if (mp, mq) == (p, q) {
            coeffs[p * size + q] = Complex64::new(c.re, 0.0);
        } else {
            coeffs[p * size + q] = c;
            coeffs[mp * size + mq] = c.conj();
        }
    }
    let spec = Spectrum::new(size, size, coeffs).expect("sizes match");
    let wave = ImageGrid::new(size, size, ifft2_complex(&spec).iter().map(|c| c.re).collect())
        .expect("finite samples");
    let peak = wave.map(f64::abs).max().max(f64::MIN_POSITIVE);
    wave.map(|v| 0.5 + 0.4 * v / peak)
}

/// `‖a − b‖∞ / ‖b‖∞` over feature vectors.
pub fn relative_linf(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Largest |sum| of the real and imaginary impulse responses over the bank.
pub fn impulse_sum(bank: &FilterBank, height: usize, width: usize) -> f64 {
    (0..bank.angles())
        .map(|k| {
            let spec = Spectrum::new(height, width, bank.filter(k).to_vec()).expect("bank size");
            let h = ifft2_complex(&spec);
            let re: f64 = h.iter().map(|c| c.re).sum();
            let im: f64 = h.iter().map(|c| c.im).sum();
            re.abs().max(im.abs())
        })
        .fold(0.0, f64::max)
}

/// Largest `| |m1|² + |m2|² − 1 |` over nonzero frequencies.
pub fn all_pass_defect(height: usize, width: usize) -> f64 {
    let m1 = riesz_multiplier(RieszOrder::R1, height, width);
    let m2 = riesz_multiplier(RieszOrder::R2, height, width);
    m1.values()
        .iter()
        .zip(m2.values())
        .skip(1)
        .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Relative violation of `Σ (N!/n!) ‖R^n f‖² = ‖f − mean‖²`.
pub fn parseval_defect(f: &ImageGrid, order: u32) -> Result<f64> {
    let (lhs, rhs) = energy_identity(f, order)?;
    Ok((lhs - rhs).abs() / rhs)
}

/// Relative reconstruction error of the DC-free part from all order-`N` components.
pub fn decomposition_defect(f: &ImageGrid, order: u32) -> Result<f64> {
    let parts = RieszOrder::all_of_total(order)
        .into_iter()
        .map(|n| Ok((n, riesz_transform(f, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let back = reconstruct_from_order(&parts)?;
    Ok(relative_l2(&back, &f.dc_free()))
}

/// `max(‖H_r f‖² + ‖H_{r+π/2} f‖², ‖H²_r f‖²) / ‖f‖² − 1`; nonpositive when the bounds hold.
pub fn hilbert_bound_excess(f: &ImageGrid, phi: f64) -> Result<(f64, f64)> {
    let total = f.norm_sq();
    let pair = hilbert_steered(f, phi)?.norm_sq() + hilbert_steered(f, phi + PI / 2.0)?.norm_sq();
    let second = hilbert2_steered(f, phi)?.norm_sq();
    Ok((pair / total - 1.0, second / total - 1.0))
}

/// Relative change of every first- and second-order Riesz output under a circular shift.
pub fn riesz_shift_defect(f: &ImageGrid, dr: isize, dc: isize) -> Result<f64> {
    let shifted = f.shift_circular(dr, dc);
    let mut worst = 0.0f64;
    for order in [1, 2] {
        for n in RieszOrder::all_of_total(order) {
            let a = riesz_transform(&shifted, n)?.shift_circular(-dr, -dc);
            let b = riesz_transform(f, n)?;
            worst = worst.max(relative_l2(&a, &b));
        }
    }
    Ok(worst)
}

/// `(Σ_r ‖S_r f − S_r g‖²) / ‖f − g‖² − 1` with `C = 1/M`.
pub fn layer_expansion(f: &ImageGrid, g: &ImageGrid, angles: usize) -> Result<f64> {
    let config = RieszConfig::new(1, angles, 1.0 / angles as f64)?;
    let (sf, sg) = (layer_s(f, &config)?, layer_s(g, &config)?);
    let lhs: f64 = sf.iter().zip(&sg).map(|(a, b)| a.sub(b).norm_sq()).sum();
    Ok(lhs / f.sub(g).norm_sq() - 1.0)
}

/// Worst gap between depth-k features at `C'` and `(C'/C)^k` times those at `C`.
///
/// Each gap is relative to `(C'/C)^k ‖Φ‖∞`, so coordinates that are pure
/// rounding noise (maps of a constant parent) do not dominate.
pub fn homogeneity_defect(f: &ImageGrid, base: &RieszConfig, c_new: f64) -> Result<f64> {
    let a = extract_features(f, base)?;
    let b = extract_features(f, &base.with_scale_constant(c_new))?;
    let ratio = c_new / base.scale_constant;
    let top = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Ok(b.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let mut worst = 0.0f64;
    for ((x, y), path) in a.values.iter().zip(&b.values).zip(a.paths()) {
        let gain = ratio.powi(path.depth() as i32);
        worst = worst.max((y - x * gain).abs() / (gain * top));
    }
    Ok(worst)
}

/// `max_j ‖R_j(L f) − L(R_j f)‖ / ‖L(R_j f)‖` for `a = 2` block averaging `L`.
pub fn riesz_scale_defect(f: &ImageGrid) -> Result<f64> {
    let down = block_average(f, 2)?;
    let mut worst = 0.0f64;
    for n in [RieszOrder::R1, RieszOrder::R2] {
        let a = riesz_transform(&down, n)?;
        let b = block_average(&riesz_transform(f, n)?, 2)?;
        worst = worst.max(relative_l2(&a, &b));
    }
    Ok(worst)
}

/// Relative L∞ gap between `Φ(L f)` and `Φ(f)` for `a = 2` block averaging.
pub fn feature_scale_defect(f: &ImageGrid, config: &RieszConfig) -> Result<f64> {
    let fine = extract_features(f, config)?;
    let coarse = extract_features(&block_average(f, 2)?, config)?;
    Ok(relative_linf(&coarse.values, &fine.values))
}

fn worst<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> Result<f64>) -> Result<f64> {
    items.into_iter().try_fold(0.0f64, |acc, x| Ok(acc.max(f(x)?)))
}

/// Runs every property and returns one result per property, in a fixed order.
pub fn run_suite(opts: &VerifyOptions) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = opts.size.max(8);
    let images: Vec<ImageGrid> = (0..opts.samples.max(1)).map(|_| random_image(n, n, &mut rng)).collect();
    let mut out = Vec::new();

    let round_trip = worst(&images, |f| Ok(relative_l2(&ifft2(&fft2(f))?, f)))?;
    out.push(PropertyResult::check("dft_round_trip", 1e-12, round_trip));

    for (order, pname, dname) in [
        (1, "energy_identity_order1", "decomposition_order1"),
        (2, "energy_identity_order2", "decomposition_order2"),
    ] {
        out.push(PropertyResult::check(pname, 1e-8, worst(&images, |f| parseval_defect(f, order))?));
        out.push(PropertyResult::check(dname, 1e-8, worst(&images, |f| decomposition_defect(f, order))?));
    }

    let angles: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..PI)).collect();
    let (mut pair, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for f in &images {
        for &phi in &angles {
            let (a, b) = hilbert_bound_excess(f, phi)?;
            pair = pair.max(a);
            second = second.max(b);
        }
    }
    out.push(PropertyResult::check("hilbert_pair_bound", 1e-10, pair));
    out.push(PropertyResult::check("hilbert_second_order_bound", 1e-10, second));

    let zero_integral = [(33usize, 33usize), (n, n)]
        .into_iter()
        .map(|(h, w)| {
            let bank = match opts.fault {
                Some(Fault::DcLeak) => FilterBank::with_dc_fault(h, w, 4),
                None => FilterBank::new(h, w, 4),
            };
            impulse_sum(&bank, h, w)
        })
        .fold(0.0, f64::max);
    out.push(PropertyResult::check("zero_integral", 1e-8, zero_integral));

    out.push(PropertyResult::check("all_pass", 1e-12, all_pass_defect(n, n).max(all_pass_defect(33, 20))));

    let shifts: Vec<(isize, isize)> = (0..images.len())
        .map(|_| {
            let span = n as i64;
            (rng.random_range(-span..span) as isize, rng.random_range(-span..span) as isize)
        })
        .collect();
    let riesz_shift = worst(images.iter().zip(&shifts), |(f, &(dr, dc))| riesz_shift_defect(f, dr, dc))?;
    out.push(PropertyResult::check("riesz_translation", 1e-10, riesz_shift));
    let config = RieszConfig::default();
    let feature_shift = worst(images.iter().zip(&shifts), |(f, &(dr, dc))| {
        let a = extract_features(&f.shift_circular(dr, dc), &config)?;
        let b = extract_features(f, &config)?;
        Ok(relative_linf(&a.values, &b.values))
    })?;
    out.push(PropertyResult::check("feature_translation_invariance", 1e-10, feature_shift));

    let partners: Vec<ImageGrid> = images.iter().map(|_| random_image(n, n, &mut rng)).collect();
    let expansion = images
        .iter()
        .zip(&partners)
        .try_fold(f64::NEG_INFINITY, |acc, (f, g)| Ok::<_, crate::error::Error>(acc.max(layer_expansion(f, g, 4)?)))?;
    out.push(PropertyResult::check("layer_nonexpansive", 1e-10, expansion));

    let homogeneity = worst(&images, |f| homogeneity_defect(f, &config, 0.25))?;
    out.push(PropertyResult::check("scale_constant_homogeneity", 1e-10, homogeneity));

    let lowpass: Vec<ImageGrid> = (0..images.len()).map(|_| lowpass_image(2 * n, &mut rng)).collect();
    out.push(PropertyResult::check("riesz_scale_commutation", 0.05, worst(&lowpass, riesz_scale_defect)?));
    out.push(PropertyResult::check(
        "feature_scale_robustness",
        0.05,
        worst(&lowpass, |f| feature_scale_defect(f, &config))?,
    ));

    Ok(out)
}
