//! Softening transforms: per-interval conditional CDFs (or their
//! complements) that map Bob's channel output to a metric `n` in `[0, 1]`
//! carrying no information about his decision.
//!
//! A [`Configuration`] selects the monotonicity direction on each decision
//! interval. Bit `i` of the mask (least significant first) is `b_{i+1}`:
//! `0` means increasing on `D_{i+1}`, `1` decreasing.

use std::collections::BTreeSet;
use std::fmt;

use crate::channel::{ChannelModel, Tail};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    mask: u64,
    intervals: usize,
}

impl Configuration {
    pub fn new(mask: u64, intervals: usize) -> Result<Self> {
        if intervals == 0 || intervals > 63 || mask >> intervals != 0 {
            return Err(Error::ConfigOutOfRange {
                mask,
                m: intervals,
            });
        }
        Ok(Configuration { mask, intervals })
    }

    /// Every interval increasing.
    pub fn base(intervals: usize) -> Self {
        Configuration {
            mask: 0,
            intervals,
        }
    }

    /// Decreasing on odd-numbered intervals `D_1, D_3, ...` (`C[5]` for
    /// PAM-4, `C[85]` for PAM-8).
    pub fn alternating(intervals: usize) -> Self {
        let mask = (0..intervals).step_by(2).fold(0u64, |m, i| m | 1 << i);
        Configuration { mask, intervals }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Whether the transform decreases on interval `i` (0-based).
    pub fn is_decreasing(&self, i: usize) -> bool {
        (self.mask >> i) & 1 == 1
    }

    fn full(&self) -> u64 {
        (1u64 << self.intervals) - 1
    }

    /// Opposite direction on every interval.
    pub fn flip(self) -> Self {
        Configuration {
            mask: !self.mask & self.full(),
            ..self
        }
    }

    /// Interval order reversed.
    pub fn reverse(self) -> Self {
        let mut mask = 0;
        for i in 0..self.intervals {
            if self.is_decreasing(i) {
                mask |= 1 << (self.intervals - 1 - i);
            }
        }
        Configuration { mask, ..self }
    }

    /// The transform reflected through `y = 0`: `b_i -> !b_{M+1-i}`.
    pub fn mirror(self) -> Self {
        self.reverse().flip()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C[{}]", self.mask)
    }
}

/// An orbit of configurations under flip, mirror and reverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// Smallest mask in the class.
    pub representative: u64,
    /// All masks in ascending order.
    pub members: Vec<u64>,
}

/// Partitions `0..2^M` into equivalence classes, ordered by representative.
pub fn equivalence_classes(intervals: usize) -> Result<Vec<EquivalenceClass>> {
    if intervals == 0 {
        return Err(Error::InvalidOrder(intervals));
    }
    if intervals > 16 {
        return Err(Error::TooLarge(intervals));
    }
    let total = 1u64 << intervals;
    let mut seen = vec![false; total as usize];
    let mut classes = Vec::new();
    for start in 0..total {
        if seen[start as usize] {
            continue;
        }
        // Flip and reverse commute, so the group has at most four elements.
        let c = Configuration {
            mask: start,
            intervals,
        };
        let members: BTreeSet<u64> = [c, c.flip(), c.reverse(), c.mirror()]
            .iter()
            .map(|x| x.mask)
            .collect();
        for &m in &members {
            seen[m as usize] = true;
        }
        classes.push(EquivalenceClass {
            representative: start,
            members: members.into_iter().collect(),
        });
    }
    Ok(classes)
}

/// The piecewise transform `G^[b]` on a channel model.
#[derive(Debug, Clone, PartialEq)]
pub struct SofteningTransform {
    model: ChannelModel,
    config: Configuration,
}

impl SofteningTransform {
    pub fn new(model: ChannelModel, config: Configuration) -> Result<Self> {
        if config.intervals() != model.order() {
            return Err(Error::ConfigOutOfRange {
                mask: config.mask(),
                m: model.order(),
            });
        }
        Ok(SofteningTransform { model, config })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn config(&self) -> Configuration {
        self.config
    }

    /// Bob's decision and disclosed metric for channel output `y`.
    pub fn forward(&self, y: f64) -> (usize, f64) {
        let i = self.model.decide(y);
        (i, self.metric_in(y, i))
    }

    /// `G_i(y)` evaluated as if `y` were in `D_i`, clamped to `[0, 1]`.
    pub(crate) fn metric_in(&self, y: f64, i: usize) -> f64 {
        let (lo, hi) = self.model.grid().bounds(i);
        let channel = self.model.channel();
        let p = self.model.decision_probs()[i];
        let part = if self.config.is_decreasing(i) {
            channel.mass(y.max(lo), hi)
        } else {
            channel.mass(lo, y.min(hi))
        };
        (part / p).clamp(0.0, 1.0)
    }

    /// `G_i^{-1}(n)`: the channel output in `D_i` mapping to `n`.
    pub fn invert(&self, n: f64, i: usize) -> Result<f64> {
        if !(0.0..=1.0).contains(&n) {
            return Err(Error::Domain(format!("metric {n} outside [0, 1]")));
        }
        if i >= self.model.order() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.model.order(),
            });
        }
        Ok(self.invert_unchecked(n, i))
    }

    pub(crate) fn invert_unchecked(&self, n: f64, i: usize) -> f64 {
        let p = self.model.decision_probs()[i];
        let below = self.model.mass_below(i);
        let above = self.model.mass_above(i);
        // Share of D_i's mass on each side of the target point.
        let (left, right) = if self.config.is_decreasing(i) {
            ((1.0 - n) * p, n * p)
        } else {
            (n * p, (1.0 - n) * p)
        };
        let lower = below + left;
        let upper = above + right;
        let channel = self.model.channel();
        let (lo, hi) = self.model.grid().bounds(i);
        let y = if lower <= upper {
            channel.solve_tail_within(lower, Tail::Lower, lo, hi)
        } else {
            channel.solve_tail_within(upper, Tail::Upper, lo, hi)
        };
        y.clamp(lo, hi)
    }

    /// The `M` hypotheses `G_i^{-1}(n)`, one per decision interval.
    pub fn hypotheses(&self, n: f64) -> Result<Vec<f64>> {
        (0..self.model.order()).map(|i| self.invert(n, i)).collect()
    }

    /// `|G'(y)| = f_Y(y) / P(X_hat = a_i)`, the same for both directions.
    pub fn abs_derivative(&self, y: f64) -> f64 {
        let i = self.model.decide(y);
        self.model.density_y(y) / self.model.decision_probs()[i]
    }
}
