//! Uniform quantization over [-1, 1] with bin-center reconstruction.

use crate::error::{CoreError, Result};

pub fn check_levels(q: u32) -> Result<()> {
    if q < 2 {
        return Err(CoreError::Config(format!(
            "quantization needs at least 2 levels, got {q}"
        )));
    }
    Ok(())
}

/// Map `y` in [-1, 1] to a symbol in `0..q`. Inputs slightly outside the
/// interval clamp to the boundary bins.
pub fn quantize(y: f64, q: u32) -> u16 {
    let t = (y + 1.0) * 0.5 * q as f64;
    let s = t.floor() as i64;
    s.clamp(0, q as i64 - 1) as u16
}

/// Center of symbol `s`'s bin.
pub fn dequantize(s: u16, q: u32) -> f64 {
    -1.0 + (2.0 * s as f64 + 1.0) / q as f64
}
