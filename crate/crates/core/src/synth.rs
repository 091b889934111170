//! Synthetic multi-altitude wind-field generation.
//!
//! Base fields are Gaussian random fields produced by spectral synthesis:
//! white noise filtered by `k^(-beta/2)` and inverse-transformed. Fields at
//! higher altitudes follow the wind power law `(h / h_base)^alpha` plus an
//! optional smooth perturbation, so the cross-altitude task has a known
//! ground truth. Values are rounded through f32 to match the 32-bit storage
//! format of the source data.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{CoreError, Result};
use crate::field::{Component, FieldStack, WindField};

/// Wind power-law exponent used to couple altitudes.
pub const POWER_LAW_ALPHA: f64 = 0.16;

/// Recipe for a synthetic multi-altitude stack series.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub altitudes: Vec<f64>,
    pub spectral_exponent: f64,
    pub perturbation: f64,
    pub count: usize,
    pub mean_speed: f64,
    pub std_speed: f64,
    pub component: Component,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            altitudes: vec![10.0, 160.0],
            spectral_exponent: 3.0,
            perturbation: 0.1,
            count: 16,
            mean_speed: 8.0,
            std_speed: 2.0,
            component: Component::Northern,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height < 16 || self.width < 16 {
            return Err(CoreError::Config(format!(
                "synthetic grid must be at least 16x16, got {}x{}",
                self.height, self.width
            )));
        }
        if !(self.spectral_exponent > 0.0) {
            return Err(CoreError::Config(format!(
                "spectral exponent must be positive, got {}",
                self.spectral_exponent
            )));
        }
        if self.altitudes.is_empty() || self.altitudes.iter().any(|&h| !(h > 0.0)) {
            return Err(CoreError::Config("altitudes must all be positive".into()));
        }
        if self.perturbation < 0.0 {
            return Err(CoreError::Config("perturbation must be nonnegative".into()));
        }
        if !(self.std_speed >= 0.0) || !(self.mean_speed >= 0.0) {
            return Err(CoreError::Config("mean/std speed must be nonnegative".into()));
        }
        Ok(())
    }
}

fn fft2_inplace(data: &mut Array2<Complex64>, planner: &mut FftPlanner<f64>, inverse: bool) {
    let (h, w) = data.dim();
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    let mut buf = vec![Complex64::default(); w];
    for mut row in data.rows_mut() {
        buf.copy_from_slice(row.as_slice().expect("row-major layout"));
        row_fft.process(&mut buf);
        row.as_slice_mut().unwrap().copy_from_slice(&buf);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    let mut col = vec![Complex64::default(); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = data[[r, c]];
        }
        col_fft.process(&mut col);
        for r in 0..h {
            data[[r, c]] = col[r];
        }
    }
}

/// Zero-mean, unit-variance Gaussian random field with isotropic power
/// spectrum proportional to `k^(-beta)`.
pub fn gaussian_random_field(
    h: usize,
    w: usize,
    beta: f64,
    rng: &mut ChaCha12Rng,
) -> Array2<f64> {
    let mut planner = FftPlanner::new();
    let mut spec = Array2::from_shape_fn((h, w), |_| {
        let re: f64 = StandardNormal.sample(rng);
        Complex64::new(re, 0.0)
    });
    fft2_inplace(&mut spec, &mut planner, false);
    for r in 0..h {
        // Normalized wavenumber magnitude, folding negative frequencies.
        let fy = r.min(h - r) as f64 / h as f64;
        for c in 0..w {
            let fx = c.min(w - c) as f64 / w as f64;
            let k = (fy * fy + fx * fx).sqrt();
            let gain = if k > 0.0 { k.powf(-beta / 2.0) } else { 0.0 };
            spec[[r, c]] *= gain;
        }
    }
    fft2_inplace(&mut spec, &mut planner, true);
    let mut field = spec.mapv(|z| z.re);
    let n = (h * w) as f64;
    let mean = field.sum() / n;
    let var = field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-30);
    field.mapv_inplace(|v| (v - mean) / std);
    field
}

fn to_f32_grid(values: Array2<f64>) -> Array2<f64> {
    values.mapv(|v| v as f32 as f64)
}

/// Generate `count` aligned multi-altitude stacks, deterministic in `seed`.
pub fn synth_stack(seed: u64, spec: &SynthSpec) -> Result<Vec<FieldStack>> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let h_base = spec
        .altitudes
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let mut stacks = Vec::with_capacity(spec.count);
    for t in 0..spec.count as u64 {
        let base = if spec.std_speed > 0.0 {
            let z = gaussian_random_field(spec.height, spec.width, spec.spectral_exponent, &mut rng);
            z.mapv(|v| (spec.mean_speed + spec.std_speed * v).max(0.0))
        } else {
            Array2::from_elem((spec.height, spec.width), spec.mean_speed)
        };
        let mut fields = Vec::with_capacity(spec.altitudes.len());
        for &alt in &spec.altitudes {
            let ratio = (alt / h_base).powf(POWER_LAW_ALPHA);
            let values = if alt == h_base {
                base.clone()
            } else if spec.perturbation > 0.0 {
                let pert =
                    gaussian_random_field(spec.height, spec.width, spec.spectral_exponent, &mut rng);
                let amp = spec.perturbation * spec.std_speed * ratio;
                let mut v = &base * ratio;
                v.zip_mut_with(&pert, |x, p| *x = (*x + amp * p).max(0.0));
                v
            } else {
                base.mapv(|v| v * ratio)
            };
            fields.push(WindField::new(
                to_f32_grid(values),
                alt,
                spec.component,
                t,
            )?);
        }
        stacks.push(FieldStack { timestamp_id: t, fields });
    }
    Ok(stacks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_altitudes_give_identical_fields() {
        let spec = SynthSpec {
            altitudes: vec![10.0, 10.0],
            perturbation: 0.0,
            count: 2,
            height: 16,
            width: 16,
            ..Default::default()
        };
        let stacks = synth_stack(1, &spec).unwrap();
        for s in &stacks {
            assert_eq!(s.fields[0].values, s.fields[1].values);
        }
    }

    #[test]
    fn power_law_coupling_on_constant_base() {
        let spec = SynthSpec {
            altitudes: vec![10.0, 160.0],
            perturbation: 0.0,
            std_speed: 0.0,
            mean_speed: 5.0,
            count: 1,
            height: 16,
            width: 16,
            ..Default::default()
        };
        let stacks = synth_stack(7, &spec).unwrap();
        let expect = 5.0 * 16f64.powf(0.16);
        assert!((expect - 7.792).abs() < 1e-3);
        for &v in stacks[0].fields[1].values.iter() {
            assert!((v - expect).abs() < 1e-6 * expect);
        }
    }

    #[test]
    fn power_law_holds_elementwise_without_perturbation() {
        let spec = SynthSpec {
            altitudes: vec![10.0, 160.0],
            perturbation: 0.0,
            count: 2,
            height: 32,
            width: 32,
            ..Default::default()
        };
        let stacks = synth_stack(3, &spec).unwrap();
        let ratio = 16f64.powf(0.16);
        for s in &stacks {
            for (a, b) in s.fields[0].values.iter().zip(s.fields[1].values.iter()) {
                let expect = a * ratio;
                assert!((b - expect).abs() <= 1e-6 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = SynthSpec { count: 3, height: 16, width: 16, ..Default::default() };
        let a = synth_stack(42, &spec).unwrap();
        let b = synth_stack(42, &spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (f, g) in x.fields.iter().zip(&y.fields) {
                assert_eq!(f.values, g.values);
            }
        }
        let c = synth_stack(43, &spec).unwrap();
        assert_ne!(a[0].fields[0].values, c[0].fields[0].values);
    }

    #[test]
    fn grf_is_standardized() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let f = gaussian_random_field(32, 32, 3.0, &mut rng);
        let n = 32.0 * 32.0;
        let mean = f.sum() / n;
        let var = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = SynthSpec { height: 8, ..Default::default() };
        assert!(synth_stack(1, &spec).is_err());
        let spec = SynthSpec { spectral_exponent: 0.0, ..Default::default() };
        assert!(synth_stack(1, &spec).is_err());
        let spec = SynthSpec { altitudes: vec![-5.0], ..Default::default() };
        assert!(synth_stack(1, &spec).is_err());
    }
}
