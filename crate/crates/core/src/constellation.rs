//! PAM alphabets with symmetric input distributions and binary-reflected
//! Gray labels.

use crate::error::{Error, Result};

const PMF_TOL: f64 = 1e-12;

/// A PAM constellation: ascending odd-integer amplitudes, an input PMF and
/// a Gray label per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<f64>,
    pmf: Vec<f64>,
    bits_per_symbol: usize,
    labels: Vec<u32>,
}

impl Constellation {
    /// Builds the `order`-PAM alphabet `{-(M-1), ..., -1, 1, ..., M-1}`.
    pub fn pam(order: usize, pmf: &[f64]) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() || order > 1 << 16 {
            return Err(Error::InvalidOrder(order));
        }
        if pmf.len() != order {
            return Err(Error::InvalidPmf(format!(
                "expected {order} probabilities, got {}",
                pmf.len()
            )));
        }
        if let Some(p) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!("entry {p} is not a probability")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        for i in 0..order / 2 {
            if (pmf[i] - pmf[order - 1 - i]).abs() > PMF_TOL {
                return Err(Error::InvalidPmf(format!(
                    "asymmetric: P(a_{}) = {} but P(a_{}) = {}",
                    i + 1,
                    pmf[i],
                    order - i,
                    pmf[order - 1 - i]
                )));
            }
        }
        let points = (0..order)
            .map(|i| 2.0 * i as f64 - (order as f64 - 1.0))
            .collect();
        let labels = (0..order as u32).map(|i| i ^ (i >> 1)).collect();
        Ok(Constellation {
            points,
            pmf: pmf.to_vec(),
            bits_per_symbol: order.trailing_zeros() as usize,
            labels,
        })
    }

    pub fn uniform_pam(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(order));
        }
        Self::pam(order, &vec![1.0 / order as f64; order])
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Average symbol energy `sum_j P(a_j) a_j^2`.
    pub fn energy(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.pmf)
            .map(|(a, p)| p * a * a)
            .sum()
    }

    /// Input entropy `H(X)` in bits.
    pub fn entropy(&self) -> f64 {
        -self.pmf.iter().map(|&p| crate::special::xlog2x(p)).sum::<f64>()
    }

    /// Bit `bit` of the label of symbol `symbol`; bit 0 is the leftmost
    /// (most significant) label position.
    pub fn bit(&self, symbol: usize, bit: usize) -> u8 {
        ((self.labels[symbol] >> (self.bits_per_symbol - 1 - bit)) & 1) as u8
    }

    /// Label of `symbol` as a string of `'0'`/`'1'`.
    pub fn label_string(&self, symbol: usize) -> String {
        (0..self.bits_per_symbol)
            .map(|l| if self.bit(symbol, l) == 0 { '0' } else { '1' })
            .collect()
    }

    /// Splits the symbol indices by the value of label bit `bit`.
    pub fn bit_partition(&self, bit: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if bit >= self.bits_per_symbol {
            return Err(Error::IndexOutOfRange {
                index: bit,
                len: self.bits_per_symbol,
            });
        }
        Ok((0..self.order()).partition(|&i| self.bit(i, bit) == 0))
    }

    /// Concatenates the labels of `symbols`.
    pub fn demap(&self, symbols: &[usize]) -> Result<Vec<u8>> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &s in symbols {
            if s >= self.order() {
                return Err(Error::IndexOutOfRange {
                    index: s,
                    len: self.order(),
                });
            }
            bits.extend((0..self.bits_per_symbol).map(|l| self.bit(s, l)));
        }
        Ok(bits)
    }

    /// Inverse of [`demap`](Self::demap).
    pub fn remap(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let k = self.bits_per_symbol;
        if bits.len() % k != 0 {
            return Err(Error::LengthMismatch {
                expected: bits.len().div_ceil(k) * k,
                got: bits.len(),
            });
        }
        let mut by_label = vec![0usize; self.order()];
        for (i, &l) in self.labels.iter().enumerate() {
            by_label[l as usize] = i;
        }
        Ok(bits
            .chunks(k)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                by_label[label]
            })
            .collect())
    }
}
