//! Stochastic two-phase microstructures from ring-shaped spectral density
//! targets, level-set binarization and interface blending.

mod blend;

pub use blend::{
    binarize_joint, blend_interfaces, joint_threshold, juxtapose, render_graded_assembly,
    seam_mismatch, Axis, BlendConfig, GradedImage, TileDesign, PIXEL_A, PIXEL_B, PIXEL_VOID,
};
pub(crate) use blend::mix_seed;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Design parameters of one reconstructed microstructure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdfDescriptor {
    /// Target volume fraction of constituent A.
    pub rho_m: f64,
    /// Outer ring radius in frequency bins.
    pub r_out: f64,
    /// Ring width in frequency bins.
    pub d_r: f64,
    /// Pixels per side.
    pub n: usize,
    pub seed: u64,
}

impl SdfDescriptor {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho_m) {
            return Err(Error::domain(format!("rho_m = {} outside [0, 1]", self.rho_m)));
        }
        if !(self.r_out >= 0.0 && self.d_r >= 0.0) {
            return Err(Error::domain("ring radii must be non-negative"));
        }
        if self.n < 2 {
            return Err(Error::domain("resolution must be at least 2"));
        }
        if self.r_out >= self.n as f64 / 2.0 {
            return Err(Error::domain(format!(
                "R_out = {} outside the Nyquist disk of N = {}",
                self.r_out, self.n
            )));
        }
        Ok(())
    }

    pub fn r_in(&self) -> f64 {
        (self.r_out - self.d_r).max(0.0)
    }
}

/// Real field on a `width × height` pixel grid, row-major (`y * width + x`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub periodic: bool,
}

impl PhaseField {
    pub fn new(width: usize, height: usize, values: Vec<f64>, periodic: bool) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} field",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonPhysical("non-finite phase field".into()));
        }
        Ok(Self {
            width,
            height,
            values,
            periodic,
        })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Value with periodic wrap-around.
    #[inline]
    pub fn wrapped(&self, x: isize, y: isize) -> f64 {
        let xw = x.rem_euclid(self.width as isize) as usize;
        let yw = y.rem_euclid(self.height as isize) as usize;
        self.at(xw, yw)
    }
}

/// Two-phase pixel image, 1 = constituent A.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMicrostructure {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub achieved_vf: f64,
}

impl BinaryMicrostructure {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height || pixels.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::domain("binary pixels must be 0 or 1"));
        }
        let ones = pixels.iter().filter(|&&p| p == 1).count();
        Ok(Self {
            width,
            height,
            achieved_vf: ones as f64 / pixels.len() as f64,
            pixels,
        })
    }

    pub fn uniform(n: usize, value: u8) -> Self {
        Self::new(n, n, vec![value; n * n]).expect("valid uniform image")
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Toroidal shift by `(dx, dy)` pixels.
    pub fn shifted(&self, dx: usize, dy: usize) -> Self {
        let mut p = vec![0; self.pixels.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                p[((y + dy) % self.height) * self.width + (x + dx) % self.width] = self.at(x, y);
            }
        }
        Self { pixels: p, ..*self }
    }

    /// Swaps the two phases.
    pub fn inverted(&self) -> Self {
        Self::new(self.width, self.height, self.pixels.iter().map(|p| 1 - p).collect())
            .expect("same shape")
    }
}

/// Signed frequency of FFT bin `i` on an `n`-point axis.
#[inline]
pub fn signed_frequency(i: usize, n: usize) -> isize {
    if i <= n / 2 {
        i as isize
    } else {
        i as isize - n as isize
    }
}

/// Rounded radial index of FFT bin `(i, j)`.
#[inline]
pub fn radial_index(i: usize, j: usize, n: usize) -> usize {
    let fx = signed_frequency(i, n) as f64;
    let fy = signed_frequency(j, n) as f64;
    (fx * fx + fy * fy).sqrt().round() as usize
}

/// {0,1} target spectral density mask in FFT bin order (DC at index 0):
/// the DC bin plus every bin with `R_in ≤ r ≤ R_out`.
pub fn build_target_sdf(desc: &SdfDescriptor) -> Result<Vec<f64>> {
    desc.validate()?;
    let n = desc.n;
    let (lo, hi) = (desc.r_in(), desc.r_out);
    let mut mask = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let r = radial_index(i, j, n) as f64;
            if (i == 0 && j == 0) || (r >= lo && r <= hi) {
                mask[j * n + i] = 1.0;
            }
        }
    }
    Ok(mask)
}

/// Reorders a square FFT-ordered grid so the DC bin sits at the centre.
pub fn fftshift(values: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    let h = n / 2;
    for j in 0..n {
        for i in 0..n {
            out[((j + h) % n) * n + (i + h) % n] = values[j * n + i];
        }
    }
    out
}

/// In-place 2D FFT of a square grid; the inverse is normalized by 1/n².
pub fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(data);
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
    if inverse {
        let s = 1.0 / (n * n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Uniform white noise on `[0, 1)` from a ChaCha8 stream.
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * n).map(|_| rng.random::<f64>()).collect()
}

/// φ_R = |F⁻¹[√S_T · F[φ_W]]| for seeded white noise φ_W.
pub fn reconstruct_phase_field(desc: &SdfDescriptor) -> Result<PhaseField> {
    let mask = build_target_sdf(desc)?;
    let n = desc.n;
    let mut data: Vec<Complex<f64>> = white_noise(n, desc.seed)
        .into_iter()
        .map(|v| Complex::new(v, 0.0))
        .collect();
    fft2(&mut data, n, false);
    for (d, m) in data.iter_mut().zip(&mask) {
        *d *= m.sqrt();
    }
    fft2(&mut data, n, true);
    PhaseField::new(n, n, data.iter().map(|c| c.norm()).collect(), true)
}

/// Power spectrum |F[φ − mean]|² in FFT bin order.
pub fn power_spectrum(field: &PhaseField) -> Result<Vec<f64>> {
    if field.width != field.height {
        return Err(Error::ShapeMismatch("power spectrum needs a square field".into()));
    }
    let n = field.width;
    let mean = field.values.iter().sum::<f64>() / (n * n) as f64;
    let mut data: Vec<Complex<f64>> = field
        .values
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .collect();
    fft2(&mut data, n, false);
    Ok(data.iter().map(|c| c.norm_sqr()).collect())
}

/// Mean power per rounded radial index.
pub fn radial_average(power: &[f64], n: usize) -> Vec<f64> {
    let rmax = radial_index(n / 2, n / 2, n);
    let mut sum = vec![0.0; rmax + 1];
    let mut count = vec![0usize; rmax + 1];
    for j in 0..n {
        for i in 0..n {
            let r = radial_index(i, j, n);
            sum[r] += power[j * n + i];
            count[r] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

/// Fraction of non-DC power of `field` that falls on the target band.
pub fn band_power_fraction(field: &PhaseField, desc: &SdfDescriptor) -> Result<f64> {
    let mask = build_target_sdf(desc)?;
    let p = power_spectrum(field)?;
    let (mut inside, mut total) = (0.0, 0.0);
    for (k, (&pk, &m)) in p.iter().zip(&mask).enumerate() {
        if k == 0 {
            continue;
        }
        total += pk;
        if m > 0.0 {
            inside += pk;
        }
    }
    Ok(if total > 0.0 { inside / total } else { 1.0 })
}

/// Index of the `k`-th smallest value, ties broken by index.
fn sorted_indices(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

/// Cut level and pixel count for volume fraction `rho_m`.
///
/// Returns `(k, φ_cut)` where the `k` smallest values (ties by index) form
/// phase A; `φ_cut` is the largest selected value, or −∞ when `k = 0`.
pub fn cut_level(field: &PhaseField, rho_m: f64) -> Result<(usize, f64)> {
    if !(0.0..=1.0).contains(&rho_m) {
        return Err(Error::domain(format!("rho_m = {rho_m} outside [0, 1]")));
    }
    let total = field.values.len();
    let k = ((rho_m * total as f64).floor() as usize).min(total);
    if k == 0 {
        return Ok((0, f64::NEG_INFINITY));
    }
    let idx = sorted_indices(&field.values);
    Ok((k, field.values[idx[k - 1]]))
}

/// Quantile cut: the ⌊ρ_m·N²⌋ lowest-valued pixels become constituent A.
pub fn levelset_cut(field: &PhaseField, rho_m: f64) -> Result<BinaryMicrostructure> {
    if !(0.0..=1.0).contains(&rho_m) {
        return Err(Error::domain(format!("rho_m = {rho_m} outside [0, 1]")));
    }
    let total = field.values.len();
    let k = ((rho_m * total as f64).floor() as usize).min(total);
    let mut pixels = vec![0u8; total];
    for &i in sorted_indices(&field.values).iter().take(k) {
        pixels[i] = 1;
    }
    BinaryMicrostructure::new(field.width, field.height, pixels)
}

/// Reconstruction followed by the quantile cut.
pub fn reconstruct(desc: &SdfDescriptor) -> Result<BinaryMicrostructure> {
    levelset_cut(&reconstruct_phase_field(desc)?, desc.rho_m)
}
