//! Continuous mu-law companding on [-1, 1].

use crate::error::{CoreError, Result};

const DOMAIN_SLACK: f64 = 1e-9;

/// `y = sign(x) * ln(1 + mu*|x|) / ln(1 + mu)`.
pub fn mu_law_encode(x: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(CoreError::Config(format!("mu must be positive, got {mu}")));
    }
    if x.abs() > 1.0 + DOMAIN_SLACK || !x.is_finite() {
        return Err(CoreError::Domain(format!(
            "mu-law input must lie in [-1, 1], got {x}"
        )));
    }
    let a = x.abs().min(1.0);
    Ok(x.signum() * (1.0 + mu * a).ln() / (1.0 + mu).ln())
}

/// Exact inverse of [`mu_law_encode`].
pub fn mu_law_decode(y: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(CoreError::Config(format!("mu must be positive, got {mu}")));
    }
    if y.abs() > 1.0 + DOMAIN_SLACK || !y.is_finite() {
        return Err(CoreError::Domain(format!(
            "mu-law code must lie in [-1, 1], got {y}"
        )));
    }
    let a = y.abs().min(1.0);
    Ok(y.signum() * ((1.0 + mu).powf(a) - 1.0) / mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(mu_law_encode(0.0, 255.0).unwrap(), 0.0);
        assert_eq!(mu_law_decode(0.0, 255.0).unwrap(), 0.0);
    }

    #[test]
    fn endpoints_map_to_endpoints() {
        assert!((mu_law_encode(1.0, 255.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mu_law_encode(-1.0, 255.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_amplitude_frozen_value() {
        // ln(1 + 255*0.5) / ln(256) = ln(128.5) / ln(256)
        let expect = 128.5f64.ln() / 256f64.ln();
        let got = mu_law_encode(0.5, 255.0).unwrap();
        assert!((got - expect).abs() < 1e-15);
        assert!((got - 0.87570).abs() < 1e-5);
    }

    #[test]
    fn roundtrip_under_1e9() {
        let mu = 255.0;
        for i in 0..=2000 {
            let x = -1.0 + 2.0 * i as f64 / 2000.0;
            let y = mu_law_encode(x, mu).unwrap();
            let back = mu_law_decode(y, mu).unwrap();
            assert!((back - x).abs() < 1e-9, "x={x} back={back}");
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(mu_law_encode(1.1, 255.0).is_err());
        assert!(mu_law_encode(f64::NAN, 255.0).is_err());
        assert!(mu_law_encode(0.5, 0.0).is_err());
    }
}
