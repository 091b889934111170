//! Classical comparison pipelines: compress at one altitude, reconstruct,
//! and carry the result to another altitude with the wind power law.

use crate::codec::{
    compress_grid_lossless, compress_grid_quantized, decompress_grid, CompressedBlob, MuLawSpec,
    DEFAULT_ORDER,
};
use crate::error::{CoreError, Result};
use crate::field::WindField;
use crate::metrics::{compression_ratio, CompressedArtifact};
use crate::resample::bicubic_resize;

/// Wind power law `v_out / v_in = (h_out / h_in)^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawSpec {
    pub alpha: f64,
    pub h_in: f64,
    pub h_out: f64,
}

impl PowerLawSpec {
    pub fn new(alpha: f64, h_in: f64, h_out: f64) -> Result<Self> {
        if !(h_in > 0.0) || !(h_out > 0.0) {
            return Err(CoreError::Domain(format!(
                "power-law altitudes must be positive, got {h_in} and {h_out}"
            )));
        }
        Ok(Self { alpha, h_in, h_out })
    }

    pub fn ratio(&self) -> f64 {
        (self.h_out / self.h_in).powf(self.alpha)
    }
}

/// Scale a wind-speed field from one altitude to another. Negative input
/// speeds are clamped to zero first (wind speed is nonnegative).
pub fn power_law_transform(field: &WindField, spec: &PowerLawSpec) -> WindField {
    let negatives = field.values.iter().filter(|v| **v < 0.0).count();
    if negatives > 0 {
        log::warn!("power-law transform clamped {negatives} negative speeds to zero");
    }
    let ratio = spec.ratio();
    let mut out = field.map_values(|v| v.max(0.0) * ratio);
    out.altitude = spec.h_out;
    out
}

/// Classical compression method selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineMethod {
    /// mu-law + quantization + PPM at the given level count.
    Ppm(MuLawSpec),
    /// PPM over raw f32 bytes; exact reconstruction.
    PpmLossless,
    /// Bicubic downsample by `1/d`, reconstruct by upsample `d`.
    Bicubic { d: u32 },
}

impl BaselineMethod {
    pub fn label(&self) -> String {
        match self {
            BaselineMethod::Ppm(spec) => format!("ppm_q{}", spec.q),
            BaselineMethod::PpmLossless => "ppm_lossless".into(),
            BaselineMethod::Bicubic { d } => format!("bicubic_d{d}"),
        }
    }

    pub fn parameter(&self) -> u32 {
        match self {
            BaselineMethod::Ppm(spec) => spec.q,
            BaselineMethod::PpmLossless => 0,
            BaselineMethod::Bicubic { d } => *d,
        }
    }
}

/// Outcome of one compress -> reconstruct -> altitude-transform run.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// Reconstruction at the input altitude.
    pub reconstruction_in: WindField,
    /// Reconstruction carried to the output altitude.
    pub reconstruction_out: WindField,
    pub cr_percent: f64,
    /// Blob for the entropy-coded methods.
    pub blob: Option<CompressedBlob>,
}

/// Compress `field` at its own altitude, reconstruct, then transform to
/// `h_out` via the power law with exponent `alpha`.
pub fn baseline_pipeline(
    field: &WindField,
    method: BaselineMethod,
    h_out: f64,
    alpha: f64,
) -> Result<PipelineResult> {
    let (h, w) = field.values.dim();
    let n_elems = h * w;
    let (reconstruction_values, cr, blob) = match method {
        BaselineMethod::Ppm(spec) => {
            let blob = compress_grid_quantized(&field.values, spec, DEFAULT_ORDER)?;
            let rec = decompress_grid(&blob)?;
            let cr = compression_ratio(
                n_elems,
                CompressedArtifact::Bytes { n: blob.total_bytes() },
            )?;
            (rec, cr, Some(blob))
        }
        BaselineMethod::PpmLossless => {
            let blob = compress_grid_lossless(&field.values, DEFAULT_ORDER)?;
            let rec = decompress_grid(&blob)?;
            let cr = compression_ratio(
                n_elems,
                CompressedArtifact::Bytes { n: blob.total_bytes() },
            )?;
            (rec, cr, Some(blob))
        }
        BaselineMethod::Bicubic { d } => {
            if d == 0 || h % d as usize != 0 || w % d as usize != 0 {
                return Err(CoreError::Shape(format!(
                    "bicubic reduction factor {d} must divide the {h}x{w} grid"
                )));
            }
            let down = bicubic_resize(field, 1.0 / d as f64)?;
            let rec = bicubic_resize(&down, d as f64)?;
            let cr = compression_ratio(
                n_elems,
                CompressedArtifact::GridElements { n: down.values.len() },
            )?;
            (rec.values, cr, None)
        }
    };

    let reconstruction_in = WindField {
        values: reconstruction_values,
        altitude: field.altitude,
        component: field.component,
        timestamp_id: field.timestamp_id,
    };
    let spec = PowerLawSpec::new(alpha, field.altitude, h_out)?;
    let reconstruction_out = power_law_transform(&reconstruction_in, &spec);
    Ok(PipelineResult { reconstruction_in, reconstruction_out, cr_percent: cr, blob })
}
