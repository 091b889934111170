//! PSNR, SSIM, and compression-ratio conventions shared by every study.
//!
//! PSNR uses a caller-supplied data range (here: per-field ground-truth
//! max - min) and reports an infinite sentinel for exact matches. SSIM uses
//! Gaussian-weighted local statistics (11x11 window, sigma 1.5) evaluated in
//! valid mode and averaged. Compression ratio is percent size reduction with
//! element counting for grid-shaped artifacts and byte counting (4 bytes per
//! source element) for entropy-coded artifacts.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// SSIM parameters; defaults match the common reference implementation.
#[derive(Debug, Clone, Copy)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl SsimParams {
    pub fn with_range(data_range: f64) -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, data_range }
    }
}

/// `10 * log10(range^2 / mse)`; +infinity when the fields match exactly.
pub fn psnr(reference: &Array2<f64>, candidate: &Array2<f64>, data_range: f64) -> Result<f64> {
    if reference.dim() != candidate.dim() {
        return Err(CoreError::Shape(format!(
            "psnr shapes differ: {:?} vs {:?}",
            reference.dim(),
            candidate.dim()
        )));
    }
    if !(data_range > 0.0) {
        return Err(CoreError::Domain(format!(
            "psnr data range must be positive, got {data_range}"
        )));
    }
    let n = reference.len() as f64;
    let mse = reference
        .iter()
        .zip(candidate.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / mse).log10())
}

fn gaussian_window(len: usize, sigma: f64) -> Vec<f64> {
    let half = (len / 2) as f64;
    let mut w: Vec<f64> = (0..len)
        .map(|i| (-((i as f64 - half) * (i as f64 - half)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Separable valid-mode filter with a normalized 1-D window.
fn filter_valid(img: &Array2<f64>, window: &[f64]) -> Array2<f64> {
    let k = window.len();
    let (h, w) = img.dim();
    let mut horiz = Array2::<f64>::zeros((h, w - k + 1));
    for r in 0..h {
        for c in 0..w - k + 1 {
            let mut acc = 0.0;
            for (t, &wt) in window.iter().enumerate() {
                acc += wt * img[[r, c + t]];
            }
            horiz[[r, c]] = acc;
        }
    }
    let mut out = Array2::<f64>::zeros((h - k + 1, w - k + 1));
    for r in 0..h - k + 1 {
        for c in 0..w - k + 1 {
            let mut acc = 0.0;
            for (t, &wt) in window.iter().enumerate() {
                acc += wt * horiz[[r + t, c]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Mean structural similarity over the valid window positions.
pub fn ssim(reference: &Array2<f64>, candidate: &Array2<f64>, params: SsimParams) -> Result<f64> {
    if reference.dim() != candidate.dim() {
        return Err(CoreError::Shape(format!(
            "ssim shapes differ: {:?} vs {:?}",
            reference.dim(),
            candidate.dim()
        )));
    }
    let (h, w) = reference.dim();
    if h < params.window || w < params.window {
        return Err(CoreError::Domain(format!(
            "field {h}x{w} smaller than ssim window {}",
            params.window
        )));
    }
    if !(params.data_range > 0.0) {
        return Err(CoreError::Domain(format!(
            "ssim data range must be positive, got {}",
            params.data_range
        )));
    }
    let win = gaussian_window(params.window, params.sigma);
    let mu_x = filter_valid(reference, &win);
    let mu_y = filter_valid(candidate, &win);
    let xx = filter_valid(&(reference * reference), &win);
    let yy = filter_valid(&(candidate * candidate), &win);
    let xy = filter_valid(&(reference * candidate), &win);

    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);

    let mut acc = 0.0;
    for ((i, j), &mx) in mu_x.indexed_iter() {
        let my = mu_y[[i, j]];
        let vx = xx[[i, j]] - mx * mx;
        let vy = yy[[i, j]] - my * my;
        let cxy = xy[[i, j]] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
        let den = (mx * mx + my * my + c1) * (vx + vy + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// Compressed artifact size in the unit its method is scored by.
#[derive(Debug, Clone, Copy)]
pub enum CompressedArtifact {
    /// Grid-shaped artifacts (bicubic decimation, neural latent grids).
    GridElements { n: usize },
    /// Entropy-coded artifacts; original size counts 4 bytes per element.
    Bytes { n: usize },
}

/// Percent size reduction, `100 * (1 - compressed/original)`.
pub fn compression_ratio(original_elements: usize, compressed: CompressedArtifact) -> Result<f64> {
    if original_elements == 0 {
        return Err(CoreError::Domain("original field has zero elements".into()));
    }
    let ratio = match compressed {
        CompressedArtifact::GridElements { n } => n as f64 / original_elements as f64,
        CompressedArtifact::Bytes { n } => n as f64 / (original_elements * 4) as f64,
    };
    Ok(100.0 * (1.0 - ratio))
}

/// One row of a study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub method: String,
    pub d_or_q: u32,
    pub h_in: f64,
    pub h_out: f64,
    pub component: String,
    /// Super-resolution scale for SR studies; 1.0 for compression rows.
    pub scale: f64,
    pub cr_percent: f64,
    #[serde(with = "infinite_db")]
    pub psnr_db: f64,
    pub ssim: f64,
    /// Count of exact-match fields excluded from the PSNR mean.
    pub psnr_infinite_count: usize,
}

/// JSON cannot carry IEEE infinities; encode them as null.
mod infinite_db {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let opt = Option::<f64>::deserialize(d)?;
        Ok(opt.unwrap_or(f64::INFINITY))
    }
}

pub const CSV_HEADER: &str = "method,d_or_q,h_in,h_out,component,scale,cr,psnr,ssim";

impl MetricRecord {
    pub fn csv_row(&self) -> String {
        let psnr = if self.psnr_db.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.6}", self.psnr_db)
        };
        format!(
            "{},{},{},{},{},{},{:.6},{},{:.6}",
            self.method,
            self.d_or_q,
            self.h_in,
            self.h_out,
            self.component,
            self.scale,
            self.cr_percent,
            psnr,
            self.ssim
        )
    }
}

/// Render records as CSV with the fixed column order.
pub fn records_to_csv(records: &[MetricRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Mean of per-field PSNRs excluding infinite sentinels; returns the mean and
/// the excluded count. The mean is +inf only if every field matched exactly.
pub fn aggregate_psnr(values: &[f64]) -> (f64, usize) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let inf_count = values.len() - finite.len();
    if finite.is_empty() {
        (f64::INFINITY, inf_count)
    } else {
        (finite.iter().sum::<f64>() / finite.len() as f64, inf_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_grid(h: usize, w: usize, seed: u64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        Array2::from_shape_fn((h, w), |_| rng.random_range(0.0..1.0))
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = random_grid(16, 16, 1);
        assert!(psnr(&a, &a, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn psnr_of_full_range_error_is_zero() {
        let a = Array2::from_elem((8, 8), 0.0);
        let b = Array2::from_elem((8, 8), 2.0);
        // MSE = 4 = data_range^2 when range = 2.
        assert!((psnr(&a, &b, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn psnr_frozen_value() {
        // range 255, MSE 1 -> 10*log10(65025) = 48.1308 dB
        let a = Array2::from_elem((4, 4), 10.0);
        let b = Array2::from_elem((4, 4), 11.0);
        let v = psnr(&a, &b, 255.0).unwrap();
        assert!((v - 48.130803608679344).abs() < 1e-9);
        assert!((v - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn psnr_monotone_in_mse() {
        let a = random_grid(12, 12, 2);
        let mut prev = f64::INFINITY;
        for amp in [0.01, 0.05, 0.1, 0.3] {
            let b = &a + amp;
            let v = psnr(&a, &b, 1.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn ssim_identity_is_one() {
        let a = random_grid(20, 24, 3);
        let v = ssim(&a, &a, SsimParams::with_range(1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_luminance_collapse_for_large_shift() {
        let a = random_grid(24, 24, 4);
        let b = &a + 10.0;
        let v = ssim(&a, &b, SsimParams::with_range(1.0)).unwrap();
        assert!(v < 0.5, "ssim {v}");
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = random_grid(16, 16, 5);
        let b = random_grid(16, 16, 6);
        let p = SsimParams::with_range(1.0);
        let ab = ssim(&a, &b, p).unwrap();
        let ba = ssim(&b, &a, p).unwrap();
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn ssim_rejects_small_fields() {
        let a = random_grid(8, 8, 7);
        assert!(ssim(&a, &a, SsimParams::with_range(1.0)).is_err());
    }

    #[test]
    fn cr_matches_reference_grid_values() {
        let cr8 = compression_ratio(120 * 160, CompressedArtifact::GridElements { n: 15 * 20 })
            .unwrap();
        assert_eq!(cr8, 98.4375);
        let cr4 = compression_ratio(120 * 160, CompressedArtifact::GridElements { n: 30 * 40 })
            .unwrap();
        assert_eq!(cr4, 93.75);
    }

    #[test]
    fn cr_zero_when_same_size() {
        let cr = compression_ratio(100, CompressedArtifact::Bytes { n: 400 }).unwrap();
        assert_eq!(cr, 0.0);
        assert!(compression_ratio(0, CompressedArtifact::Bytes { n: 4 }).is_err());
    }

    #[test]
    fn record_json_roundtrip_with_infinite_psnr() {
        let rec = MetricRecord {
            method: "ppm_q16".into(),
            d_or_q: 16,
            h_in: 10.0,
            h_out: 160.0,
            component: "northern".into(),
            scale: 1.0,
            cr_percent: 92.5,
            psnr_db: f64::INFINITY,
            ssim: 1.0,
            psnr_infinite_count: 3,
        };
        let json = serde_json::to_string(&rec).unwrap();
        let back: MetricRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
        assert!(rec.csv_row().contains(",inf,"));
    }
}
