//! Whole-field compression: per-field symmetric ranging, mu-law companding,
//! uniform quantization, and PPM entropy coding, bundled into a blob.
//!
//! Two modes:
//! - quantized: value -> [-1,1] -> mu-law -> Q-level symbol -> PPM
//! - lossless: the field's f32 little-endian bytes fed straight to PPM

use ndarray::Array2;

use crate::codec::blob::{BlobHeader, CompressedBlob, FLAG_QUANTIZED};
use crate::codec::mulaw::{mu_law_decode, mu_law_encode};
use crate::codec::ppm::{ppm_compress, ppm_decompress};
use crate::codec::quant::{check_levels, dequantize, quantize};
use crate::error::{CoreError, Result};

/// Companding + quantization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuLawSpec {
    pub mu: f64,
    pub q: u32,
}

impl Default for MuLawSpec {
    fn default() -> Self {
        Self { mu: 255.0, q: 16 }
    }
}

impl MuLawSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(CoreError::Config(format!("mu must be positive, got {}", self.mu)));
        }
        check_levels(self.q)
    }
}

fn grid_min_max(values: &Array2<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Lossy compression via mu-law companding and Q-level quantization.
pub fn compress_grid_quantized(
    values: &Array2<f64>,
    spec: MuLawSpec,
    ppm_order: usize,
) -> Result<CompressedBlob> {
    spec.validate()?;
    let (h, w) = values.dim();
    let (min, max) = grid_min_max(values);
    let range = max - min;
    let mut symbols = Vec::with_capacity(h * w);
    for &v in values.iter() {
        let x = if range > 0.0 { 2.0 * (v - min) / range - 1.0 } else { 0.0 };
        let y = mu_law_encode(x.clamp(-1.0, 1.0), spec.mu)?;
        symbols.push(quantize(y, spec.q));
    }
    let payload = ppm_compress(&symbols, spec.q, ppm_order)?;
    let header = BlobHeader {
        flags: FLAG_QUANTIZED,
        height: h as u32,
        width: w as u32,
        min,
        max,
        mu: spec.mu,
        q: spec.q,
        ppm_order: ppm_order as u8,
        payload_len: 0,
        payload_crc: 0,
    };
    Ok(CompressedBlob::new(header, payload))
}

/// Lossless compression of the field's 32-bit float representation.
pub fn compress_grid_lossless(values: &Array2<f64>, ppm_order: usize) -> Result<CompressedBlob> {
    let (h, w) = values.dim();
    let (min, max) = grid_min_max(values);
    let mut symbols = Vec::with_capacity(h * w * 4);
    for &v in values.iter() {
        for b in (v as f32).to_le_bytes() {
            symbols.push(b as u16);
        }
    }
    let payload = ppm_compress(&symbols, 256, ppm_order)?;
    let header = BlobHeader {
        flags: 0,
        height: h as u32,
        width: w as u32,
        min,
        max,
        mu: 0.0,
        q: 0,
        ppm_order: ppm_order as u8,
        payload_len: 0,
        payload_crc: 0,
    };
    Ok(CompressedBlob::new(header, payload))
}

/// Reconstruct a grid from either blob mode.
pub fn decompress_grid(blob: &CompressedBlob) -> Result<Array2<f64>> {
    let h = blob.header.height as usize;
    let w = blob.header.width as usize;
    let n = h * w;
    if blob.header.is_quantized() {
        let symbols = ppm_decompress(
            &blob.payload,
            n,
            blob.header.q,
            blob.header.ppm_order as usize,
        )?;
        let min = blob.header.min;
        let range = blob.header.max - min;
        let mut out = Vec::with_capacity(n);
        for s in symbols {
            let y = dequantize(s, blob.header.q);
            let x = mu_law_decode(y, blob.header.mu)?;
            let v = if range > 0.0 { (x + 1.0) * 0.5 * range + min } else { min };
            out.push(v);
        }
        Array2::from_shape_vec((h, w), out)
            .map_err(|e| CoreError::Shape(format!("blob shape mismatch: {e}")))
    } else {
        let bytes = ppm_decompress(&blob.payload, n * 4, 256, blob.header.ppm_order as usize)?;
        let mut out = Vec::with_capacity(n);
        for chunk in bytes.chunks_exact(4) {
            let raw = [chunk[0] as u8, chunk[1] as u8, chunk[2] as u8, chunk[3] as u8];
            out.push(f32::from_le_bytes(raw) as f64);
        }
        Array2::from_shape_vec((h, w), out)
            .map_err(|e| CoreError::Shape(format!("blob shape mismatch: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::ppm::DEFAULT_ORDER;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_grid(h: usize, w: usize, seed: u64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        Array2::from_shape_fn((h, w), |_| rng.random_range(2.0f64..14.0) as f32 as f64)
    }

    #[test]
    fn lossless_roundtrip_is_exact() {
        let grid = random_grid(24, 30, 5);
        let blob = compress_grid_lossless(&grid, DEFAULT_ORDER).unwrap();
        let back = decompress_grid(&blob).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn quantized_error_bounded_by_decompanded_bin_width() {
        let grid = random_grid(20, 20, 9);
        let spec = MuLawSpec { mu: 255.0, q: 16 };
        let blob = compress_grid_quantized(&grid, spec, DEFAULT_ORDER).unwrap();
        let back = decompress_grid(&blob).unwrap();
        let (min, max) = grid_min_max(&grid);
        let range = max - min;
        // Worst decompanded bin width over all bins.
        let mut worst_bin = 0.0f64;
        for s in 0..spec.q as u16 {
            let lo = -1.0 + 2.0 * s as f64 / spec.q as f64;
            let hi = -1.0 + 2.0 * (s + 1) as f64 / spec.q as f64;
            let a = mu_law_decode(lo, spec.mu).unwrap();
            let b = mu_law_decode(hi, spec.mu).unwrap();
            worst_bin = worst_bin.max(b - a);
        }
        let bound = range * 0.5 * worst_bin + 1e-12;
        for (a, b) in grid.iter().zip(back.iter()) {
            assert!((a - b).abs() <= bound, "error {} > bound {bound}", (a - b).abs());
        }
    }

    #[test]
    fn constant_grid_roundtrips_exactly() {
        let grid = Array2::from_elem((10, 12), 7.25);
        let spec = MuLawSpec::default();
        let blob = compress_grid_quantized(&grid, spec, DEFAULT_ORDER).unwrap();
        let back = decompress_grid(&blob).unwrap();
        assert_eq!(back, grid);
        // Constant symbols compress to almost nothing.
        assert!(blob.payload.len() < 20);
    }

    #[test]
    fn companding_beats_plain_quantization_on_peaky_data() {
        // Values concentrated near the middle of the range with rare
        // excursions: exactly where log companding helps.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(33);
        let n = 4000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let base: f64 = rng.random_range(-0.08..0.08);
                if rng.random_range(0..50) == 0 {
                    rng.random_range(-1.0..1.0)
                } else {
                    base
                }
            })
            .collect();
        for q in [8u32, 16] {
            let mu = 255.0;
            let mse_mu: f64 = xs
                .iter()
                .map(|&x| {
                    let y = mu_law_encode(x, mu).unwrap();
                    let x2 = mu_law_decode(dequantize(quantize(y, q), q), mu).unwrap();
                    (x - x2) * (x - x2)
                })
                .sum::<f64>()
                / n as f64;
            let mse_plain: f64 = xs
                .iter()
                .map(|&x| {
                    let x2 = dequantize(quantize(x, q), q);
                    (x - x2) * (x - x2)
                })
                .sum::<f64>()
                / n as f64;
            assert!(
                mse_mu < mse_plain,
                "Q={q}: mu-law MSE {mse_mu} not below plain {mse_plain}"
            );
        }
    }
}
