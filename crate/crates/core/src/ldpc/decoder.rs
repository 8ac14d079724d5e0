//! Flooding sum-product decoding toward an arbitrary target syndrome.

use super::LdpcCode;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 50;
/// Messages and posteriors are clipped to `[-MESSAGE_CLIP, MESSAGE_CLIP]`.
pub const MESSAGE_CLIP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    /// True iff `syndrome(bits)` equals the target.
    pub converged: bool,
    pub iterations: usize,
}

/// Decoder state for one code. Reuse it across blocks to avoid
/// reallocating message buffers.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    code: &'a LdpcCode,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    tanh_half: Vec<f64>,
    suffix: Vec<f64>,
    bits: Vec<u8>,
}

/// NaN inputs count as erasures.
fn clip(x: f64) -> f64 {
    if x.is_nan() {
        return 0.0;
    }
    x.clamp(-MESSAGE_CLIP, MESSAGE_CLIP)
}

/// `2 atanh(p)`, saturating at the clip level.
fn two_atanh(p: f64) -> f64 {
    const EDGE: f64 = 1.0 - 1e-15;
    // Evaluated on |p| so that the map is exactly odd.
    let a = p.abs();
    let mag = if a >= EDGE {
        MESSAGE_CLIP
    } else {
        (2.0 * a / (1.0 - a)).ln_1p().min(MESSAGE_CLIP)
    };
    mag.copysign(p)
}

impl<'a> Decoder<'a> {
    pub fn new(code: &'a LdpcCode) -> Self {
        let max_row = (0..code.m()).map(|c| code.check(c).len()).max().unwrap_or(0);
        Self {
            code,
            v2c: vec![0.0; code.edges()],
            c2v: vec![0.0; code.edges()],
            tanh_half: vec![0.0; code.edges()],
            suffix: vec![0.0; max_row + 1],
            bits: vec![0; code.n()],
        }
    }

    pub fn code(&self) -> &LdpcCode {
        self.code
    }

    /// Decodes `lapprs` (positive means bit 0) toward `target`.
    pub fn decode(&mut self, lapprs: &[f64], target: &[u8], max_iter: usize) -> Result<DecodeResult> {
        let code = self.code;
        if lapprs.len() != code.n() {
            return Err(Error::LengthMismatch {
                expected: code.n(),
                got: lapprs.len(),
            });
        }
        if target.len() != code.m() {
            return Err(Error::LengthMismatch {
                expected: code.m(),
                got: target.len(),
            });
        }
        for e in 0..code.edges() {
            self.v2c[e] = clip(lapprs[code.edge_var(e)]);
        }
        let mut iterations = 0;
        let mut converged = false;
        for iter in 1..=max_iter {
            iterations = iter;
            self.check_update(target);
            self.variable_update(lapprs);
            if self.matches(target) {
                converged = true;
                break;
            }
        }
        if max_iter == 0 {
            for (b, &l) in self.bits.iter_mut().zip(lapprs) {
                *b = u8::from(l < 0.0);
            }
            converged = self.matches(target);
        }
        Ok(DecodeResult {
            bits: self.bits.clone(),
            converged,
            iterations,
        })
    }

    fn check_update(&mut self, target: &[u8]) {
        let code = self.code;
        for e in 0..code.edges() {
            self.tanh_half[e] = (0.5 * self.v2c[e]).tanh();
        }
        for (c, &s) in target.iter().enumerate() {
            let range = code.check_range(c);
            let deg = range.len();
            let t = &self.tanh_half[range.clone()];
            self.suffix[deg] = 1.0;
            for k in (0..deg).rev() {
                self.suffix[k] = self.suffix[k + 1] * t[k];
            }
            let sign = if s & 1 == 1 { -1.0 } else { 1.0 };
            let mut prefix = 1.0;
            for (k, e) in range.enumerate() {
                self.c2v[e] = sign * two_atanh(prefix * self.suffix[k + 1]);
                prefix *= t[k];
            }
        }
    }

    fn variable_update(&mut self, lapprs: &[f64]) {
        let code = self.code;
        for (v, &l) in lapprs.iter().enumerate() {
            let edges = code.var_edge_list(v);
            let total = l + edges.iter().map(|&e| self.c2v[e]).sum::<f64>();
            for &e in edges {
                self.v2c[e] = clip(total - self.c2v[e]);
            }
            self.bits[v] = u8::from(total < 0.0);
        }
    }

    fn matches(&self, target: &[u8]) -> bool {
        (0..self.code.m()).all(|c| {
            let parity = self.code.check(c).iter().fold(0u8, |acc, &v| acc ^ self.bits[v]);
            parity == target[c] & 1
        })
    }
}

/// One-shot convenience wrapper around [`Decoder`].
pub fn decode(code: &LdpcCode, lapprs: &[f64], target: &[u8], max_iter: usize) -> Result<DecodeResult> {
    Decoder::new(code).decode(lapprs, target, max_iter)
}
