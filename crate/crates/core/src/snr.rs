//! SNR conventions and `start:step:stop` grids.
//!
//! `Es/N0 = Es / (2 sigma^2)` with `Es = sum_j P(a_j) a_j^2`; `Eb/N0` is
//! `Es/N0` divided by the number of (information or key) bits per symbol.

use crate::constellation::Constellation;
use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Noise standard deviation giving the requested `Es/N0` in dB.
pub fn sigma_for_es_n0(constellation: &Constellation, es_n0_db: f64) -> f64 {
    (constellation.energy() / (2.0 * db_to_linear(es_n0_db))).sqrt()
}

pub fn es_n0_for_sigma(constellation: &Constellation, sigma: f64) -> f64 {
    linear_to_db(constellation.energy() / (2.0 * sigma * sigma))
}

/// `Eb/N0 = Es/N0 - 10 log10(bits per symbol)`.
pub fn es_to_eb(es_n0_db: f64, bits_per_symbol: f64) -> Result<f64> {
    if !(bits_per_symbol > 0.0 && bits_per_symbol.is_finite()) {
        return Err(Error::Domain(format!(
            "rate must be positive, got {bits_per_symbol}"
        )));
    }
    Ok(es_n0_db - linear_to_db(bits_per_symbol))
}

pub fn eb_to_es(eb_n0_db: f64, bits_per_symbol: f64) -> Result<f64> {
    if !(bits_per_symbol > 0.0 && bits_per_symbol.is_finite()) {
        return Err(Error::Domain(format!(
            "rate must be positive, got {bits_per_symbol}"
        )));
    }
    Ok(eb_n0_db + linear_to_db(bits_per_symbol))
}

/// Parses `start:step:stop` (inclusive stop, with a half-step guard against
/// rounding) or a comma-separated list of values, all in dB.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let bad = |msg: String| Error::Parse { line: 1, msg };
    if spec.is_empty() {
        return Err(bad("empty SNR grid".into()));
    }
    let number = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| bad(format!("not a number: '{}'", s.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(format!("non-finite value '{}'", s.trim())))
        }
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("expected start:step:stop, got '{spec}'")));
        }
        let (start, step, stop) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if step <= 0.0 {
            return Err(bad(format!("step must be positive, got {step}")));
        }
        if stop < start {
            return Err(bad(format!("stop {stop} below start {start}")));
        }
        let count = ((stop - start) / step + 0.5).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(bad(format!("grid of {count} points is too large")));
        }
        // Snap to a micro-dB lattice so 0.1-style steps print cleanly.
        Ok((0..count)
            .map(|k| ((start + k as f64 * step) * 1e6).round() / 1e6)
            .collect())
    } else {
        spec.split(',').map(number).collect()
    }
}
