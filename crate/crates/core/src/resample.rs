//! Separable bicubic resampling with the cubic convolution kernel (a = -0.5).
//!
//! Source pixels are treated as cell centers; destination coordinates map
//! through the align-centers convention `src = (dst + 0.5) / factor - 0.5`.
//! Rows and columns outside the grid clamp to the nearest edge sample, and
//! tap weights are renormalized so constants are fixed points.

use ndarray::Array2;

use crate::error::{CoreError, Result};
use crate::field::{FieldPair, WindField};

/// Cubic convolution kernel with parameter a = -0.5.
fn cubic_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Per-output-sample taps along one axis: four clamped source indices and
/// normalized kernel weights.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<([usize; 4], [f64; 4])> {
    let ratio = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|d| {
            let s = (d as f64 + 0.5) * ratio - 0.5;
            let base = s.floor();
            let frac = s - base;
            let base = base as isize;
            let mut idx = [0usize; 4];
            let mut wts = [0f64; 4];
            let mut total = 0.0;
            for t in 0..4 {
                let j = base - 1 + t as isize;
                idx[t] = j.clamp(0, src_len as isize - 1) as usize;
                let w = cubic_kernel(frac + 1.0 - t as f64);
                wts[t] = w;
                total += w;
            }
            for w in &mut wts {
                *w /= total;
            }
            (idx, wts)
        })
        .collect()
}

/// Resize a raw grid by a positive real factor; output dims are
/// `round(factor * len)` per axis.
pub fn bicubic_resize_grid(values: &Array2<f64>, factor: f64) -> Result<Array2<f64>> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(CoreError::Domain(format!(
            "resize factor must be positive and finite, got {factor}"
        )));
    }
    let (h, w) = values.dim();
    let out_h = (factor * h as f64).round() as usize;
    let out_w = (factor * w as f64).round() as usize;
    if out_h < 1 || out_w < 1 {
        return Err(CoreError::Domain(format!(
            "factor {factor} collapses {h}x{w} below 1 sample per axis"
        )));
    }
    if out_h == h && out_w == w && factor == 1.0 {
        return Ok(values.clone());
    }

    // Horizontal pass then vertical pass.
    let col_taps = axis_taps(w, out_w);
    let mut mid = Array2::<f64>::zeros((h, out_w));
    for r in 0..h {
        let row = values.row(r);
        for (c, (idx, wts)) in col_taps.iter().enumerate() {
            mid[[r, c]] = wts[0] * row[idx[0]]
                + wts[1] * row[idx[1]]
                + wts[2] * row[idx[2]]
                + wts[3] * row[idx[3]];
        }
    }
    let row_taps = axis_taps(h, out_h);
    let mut out = Array2::<f64>::zeros((out_h, out_w));
    for (r, (idx, wts)) in row_taps.iter().enumerate() {
        for c in 0..out_w {
            out[[r, c]] = wts[0] * mid[[idx[0], c]]
                + wts[1] * mid[[idx[1], c]]
                + wts[2] * mid[[idx[2], c]]
                + wts[3] * mid[[idx[3], c]];
        }
    }
    Ok(out)
}

/// Resize a wind field, keeping its metadata.
pub fn bicubic_resize(field: &WindField, factor: f64) -> Result<WindField> {
    Ok(WindField {
        values: bicubic_resize_grid(&field.values, factor)?,
        altitude: field.altitude,
        component: field.component,
        timestamp_id: field.timestamp_id,
    })
}

/// Build an (HR, SR-target) pair by bicubic upsampling at scale `s >= 1`.
pub fn make_pair(hr: &WindField, s: f64) -> Result<FieldPair> {
    if !(s >= 1.0) {
        return Err(CoreError::Domain(format!(
            "super-resolution scale must be >= 1, got {s}"
        )));
    }
    let sr_target = bicubic_resize(hr, s)?;
    Ok(FieldPair { hr: hr.clone(), sr_target, scale: s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Component;
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;

    fn field_from(values: Array2<f64>) -> WindField {
        WindField::new(values, 10.0, Component::Northern, 0).unwrap()
    }

    #[test]
    fn kernel_is_interpolating() {
        assert_eq!(cubic_kernel(0.0), 1.0);
        assert_eq!(cubic_kernel(1.0), 0.0);
        assert_eq!(cubic_kernel(2.0), 0.0);
        assert_eq!(cubic_kernel(-1.0), 0.0);
    }

    #[test]
    fn factor_one_is_identity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let vals = Array2::from_shape_fn((7, 9), |_| rng.random_range(-2.0..9.0));
        let out = bicubic_resize_grid(&vals, 1.0).unwrap();
        assert_eq!(out, vals);
    }

    #[test]
    fn constants_are_fixed_points() {
        let vals = Array2::from_elem((12, 10), 4.2);
        for factor in [0.25, 0.5, 1.0, 1.3, 1.5, 2.0, 3.7] {
            let out = bicubic_resize_grid(&vals, factor).unwrap();
            for &v in out.iter() {
                assert!((v - 4.2).abs() < 1e-12, "factor {factor} gave {v}");
            }
        }
    }

    #[test]
    fn paper_scale_dimensions() {
        let vals = Array2::from_elem((120, 160), 1.0);
        let up = bicubic_resize_grid(&vals, 1.5).unwrap();
        assert_eq!(up.dim(), (180, 240));
        let down = bicubic_resize_grid(&vals, 1.0 / 8.0).unwrap();
        assert_eq!(down.dim(), (15, 20));
        let back = bicubic_resize_grid(&down, 8.0).unwrap();
        assert_eq!(back.dim(), (120, 160));
    }

    #[test]
    fn interpolates_linear_ramps_exactly_in_the_interior() {
        // Cubic convolution reproduces degree-1 polynomials away from edges.
        let vals = Array2::from_shape_fn((8, 8), |(r, c)| 2.0 * r as f64 + 3.0 * c as f64);
        let out = bicubic_resize_grid(&vals, 2.0).unwrap();
        // Interior sample (r, c) of the 2x grid sits at source coords
        // ((r + 0.5) / 2 - 0.5, (c + 0.5) / 2 - 0.5).
        for r in 4..12 {
            for c in 4..12 {
                let sy = (r as f64 + 0.5) / 2.0 - 0.5;
                let sx = (c as f64 + 0.5) / 2.0 - 0.5;
                let expect = 2.0 * sy + 3.0 * sx;
                assert!(
                    (out[[r, c]] - expect).abs() < 1e-9,
                    "({r},{c}): {} vs {expect}",
                    out[[r, c]]
                );
            }
        }
    }

    #[test]
    fn make_pair_scale_one_is_identity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let vals = Array2::from_shape_fn((6, 5), |_| rng.random_range(0.0..10.0));
        let f = field_from(vals);
        let pair = make_pair(&f, 1.0).unwrap();
        assert_eq!(pair.sr_target.values, f.values);
    }

    #[test]
    fn make_pair_constant_field() {
        let f = field_from(Array2::from_elem((8, 8), 3.0));
        let pair = make_pair(&f, 1.5).unwrap();
        assert_eq!(pair.sr_target.values.dim(), (12, 12));
        for &v in pair.sr_target.values.iter() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn make_pair_rejects_downscale() {
        let f = field_from(Array2::from_elem((4, 4), 1.0));
        assert!(matches!(make_pair(&f, 0.5), Err(CoreError::Domain(_))));
    }

    #[test]
    fn resize_rejects_collapse() {
        let vals = Array2::from_elem((4, 4), 1.0);
        assert!(bicubic_resize_grid(&vals, 0.05).is_err());
        assert!(bicubic_resize_grid(&vals, -1.0).is_err());
        assert!(bicubic_resize_grid(&vals, f64::NAN).is_err());
    }
}
