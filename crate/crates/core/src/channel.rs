//! AWGN channel statistics for a PAM input: densities, output CDF and
//! quantile, decision grids, hard decisions and transition probabilities.

use std::fmt;
use std::str::FromStr;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_interval, normal_pdf, normal_sf};

/// Additive Gaussian noise with standard deviation `sigma` (variance N0/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidNoise(sigma));
        }
        Ok(NoiseModel { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Decision thresholds `t_1 < ... < t_{M-1}`. Interval `D_i` is
/// `(t_{i-1}, t_i]`, open on the left and closed on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionGrid {
    thresholds: Vec<f64>,
}

const SYMMETRY_TOL: f64 = 1e-9;

impl DecisionGrid {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidGrid("no thresholds".into()));
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite threshold".into()));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("thresholds not strictly increasing".into()));
        }
        let k = thresholds.len();
        for i in 0..k {
            let (a, b) = (thresholds[i], thresholds[k - 1 - i]);
            if (a + b).abs() > SYMMETRY_TOL * (1.0 + a.abs()) {
                return Err(Error::InvalidGrid(format!(
                    "thresholds not symmetric: {a} vs {b}"
                )));
            }
        }
        Ok(DecisionGrid { thresholds })
    }

    /// Thresholds midway between adjacent constellation points.
    pub fn fixed(constellation: &Constellation) -> Self {
        let thresholds = constellation
            .points()
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        DecisionGrid { thresholds }
    }

    /// Thresholds at the output quantiles `i/M`, equalising the decision
    /// probabilities.
    pub fn adaptive(channel: &AwgnChannel) -> Result<Self> {
        let m = channel.constellation().order();
        let mut thresholds = vec![0.0; m - 1];
        // Solve the lower half and mirror; the middle threshold is zero.
        for i in 1..m / 2 {
            let t = channel.quantile_y(i as f64 / m as f64)?;
            thresholds[i - 1] = t;
            thresholds[m - 1 - i] = -t;
        }
        Ok(DecisionGrid { thresholds })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Number of decision intervals.
    pub fn intervals(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Index of the interval containing `y`.
    pub fn locate(&self, y: f64) -> usize {
        self.thresholds.partition_point(|&t| t < y)
    }

    /// `(inf D_i, sup D_i)`, with infinite outer bounds.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.thresholds[i - 1]
        };
        let hi = if i == self.thresholds.len() {
            f64::INFINITY
        } else {
            self.thresholds[i]
        };
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdStrategy {
    /// Midpoints between adjacent points, independent of the SNR.
    Fixed,
    /// Quantiles of the channel output, recomputed per SNR.
    Adaptive,
}

impl fmt::Display for ThresholdStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdStrategy::Fixed => "F",
            ThresholdStrategy::Adaptive => "A",
        })
    }
}

impl FromStr for ThresholdStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "fixed" => Ok(ThresholdStrategy::Fixed),
            "a" | "adaptive" => Ok(ThresholdStrategy::Adaptive),
            other => Err(Error::Domain(format!("unknown threshold strategy '{other}'"))),
        }
    }
}

/// Discrete-input AWGN channel `Y = X + W` without a decision rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AwgnChannel {
    constellation: Constellation,
    noise: NoiseModel,
}

impl AwgnChannel {
    pub fn new(constellation: Constellation, noise: NoiseModel) -> Self {
        AwgnChannel {
            constellation,
            noise,
        }
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn sigma(&self) -> f64 {
        self.noise.sigma
    }

    pub fn density_y_given_x(&self, y: f64, j: usize) -> Result<f64> {
        let a = self.point(j)?;
        Ok(normal_pdf((y - a) / self.sigma()) / self.sigma())
    }

    pub fn log_density_y_given_x(&self, y: f64, j: usize) -> Result<f64> {
        let a = self.point(j)?;
        let z = (y - a) / self.sigma();
        Ok(-0.5 * z * z - (self.sigma() * (2.0 * std::f64::consts::PI).sqrt()).ln())
    }

    pub fn density_y(&self, y: f64) -> f64 {
        let s = self.sigma();
        self.constellation
            .points()
            .iter()
            .zip(self.constellation.pmf())
            .map(|(a, p)| p * normal_pdf((y - a) / s))
            .sum::<f64>()
            / s
    }

    /// `F_Y(y)`.
    pub fn cdf_y(&self, y: f64) -> f64 {
        self.mixture(|a| normal_cdf((y - a) / self.sigma()))
    }

    /// `1 - F_Y(y)`, accurate in the upper tail.
    pub fn sf_y(&self, y: f64) -> f64 {
        self.mixture(|a| normal_sf((y - a) / self.sigma()))
    }

    /// `P(lo < Y <= hi)` without cancellation.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let s = self.sigma();
        self.mixture(|a| normal_interval((lo - a) / s, (hi - a) / s))
    }

    /// `F_Y^{-1}(p)` for `p` in `(0, 1)`.
    pub fn quantile_y(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile of p = {p}")));
        }
        Ok(if p <= 0.5 {
            self.solve_tail(p, Tail::Lower)
        } else {
            self.solve_tail(1.0 - p, Tail::Upper)
        })
    }

    /// Solves `F_Y(y) = p` (lower) or `1 - F_Y(y) = p` (upper). Accepts
    /// `p = 0`, which maps to the matching infinity.
    pub(crate) fn solve_tail(&self, p: f64, tail: Tail) -> f64 {
        self.solve_tail_within(p, tail, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// As [`Self::solve_tail`], given that the root lies in `[lo_y, hi_y]`
    /// (either bound may be infinite).
    pub(crate) fn solve_tail_within(&self, p: f64, tail: Tail, lo_y: f64, hi_y: f64) -> f64 {
        if p <= 0.0 {
            return match tail {
                Tail::Lower => f64::NEG_INFINITY,
                Tail::Upper => f64::INFINITY,
            };
        }
        if p >= 1.0 {
            return match tail {
                Tail::Lower => f64::INFINITY,
                Tail::Upper => f64::NEG_INFINITY,
            };
        }
        // Work with an increasing function in both cases: for the upper tail
        // substitute y = -z.
        let sign = match tail {
            Tail::Lower => 1.0,
            Tail::Upper => -1.0,
        };
        let tail_prob = |z: f64| match tail {
            Tail::Lower => self.cdf_y(z),
            Tail::Upper => self.sf_y(-z),
        };
        let points = self.constellation.points();
        let s = self.sigma();
        let span = points[points.len() - 1] - points[0] + 20.0 * s;
        let (hint_lo, hint_hi) = if sign > 0.0 { (lo_y, hi_y) } else { (-hi_y, -lo_y) };
        let (default_lo, default_hi) = if sign > 0.0 {
            (points[0] - 10.0 * s, points[points.len() - 1] + 10.0 * s)
        } else {
            (-points[points.len() - 1] - 10.0 * s, -points[0] + 10.0 * s)
        };
        let mut lo = if hint_lo.is_finite() {
            hint_lo
        } else {
            default_lo.min(hint_hi - span)
        };
        let mut hi = if hint_hi.is_finite() {
            hint_hi
        } else {
            default_hi.max(hint_lo + span)
        };
        if !hint_lo.is_finite() {
            let mut step = span;
            while tail_prob(lo) > p {
                hi = lo;
                lo -= step;
                step *= 2.0;
            }
        }
        if !hint_hi.is_finite() {
            let mut step = span;
            while tail_prob(hi) < p {
                lo = hi;
                hi += step;
                step *= 2.0;
            }
        }
        let log_p = p.ln();
        let mut z = 0.5 * (lo + hi);
        for _ in 0..200 {
            let prob = tail_prob(z);
            if prob == p {
                break;
            }
            if prob < p {
                lo = z;
            } else {
                hi = z;
            }
            let dens = self.density_y(sign * z);
            let mut next = if prob > 0.0 && dens > 0.0 {
                // Newton on log F keeps its quadratic rate deep in the tails.
                z - (prob.ln() - log_p) * prob / dens
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - z).abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0)
                || hi - lo <= 4.0 * f64::EPSILON * z.abs().max(1.0);
            z = next;
            if done {
                break;
            }
        }
        sign * z
    }

    fn point(&self, j: usize) -> Result<f64> {
        self.constellation
            .points()
            .get(j)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: j,
                len: self.constellation.order(),
            })
    }

    fn mixture(&self, per_point: impl Fn(f64) -> f64) -> f64 {
        self.constellation
            .points()
            .iter()
            .zip(self.constellation.pmf())
            .map(|(&a, p)| p * per_point(a))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tail {
    Lower,
    Upper,
}

/// An AWGN channel together with Bob's decision grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    channel: AwgnChannel,
    grid: DecisionGrid,
    decision_probs: Vec<f64>,
    // F_Y(inf D_i) and 1 - F_Y(sup D_i), per interval.
    below: Vec<f64>,
    above: Vec<f64>,
}

impl ChannelModel {
    pub fn new(channel: AwgnChannel, grid: DecisionGrid) -> Result<Self> {
        let m = channel.constellation().order();
        if grid.intervals() != m {
            return Err(Error::InvalidGrid(format!(
                "{} thresholds for {m} points",
                grid.thresholds().len()
            )));
        }
        let bounds: Vec<(f64, f64)> = (0..m).map(|i| grid.bounds(i)).collect();
        let decision_probs = bounds.iter().map(|&(lo, hi)| channel.mass(lo, hi)).collect();
        let below = bounds
            .iter()
            .map(|&(lo, _)| channel.mass(f64::NEG_INFINITY, lo))
            .collect();
        let above = bounds
            .iter()
            .map(|&(_, hi)| channel.mass(hi, f64::INFINITY))
            .collect();
        Ok(ChannelModel {
            channel,
            grid,
            decision_probs,
            below,
            above,
        })
    }

    pub fn with_strategy(
        constellation: Constellation,
        noise: NoiseModel,
        strategy: ThresholdStrategy,
    ) -> Result<Self> {
        let channel = AwgnChannel::new(constellation, noise);
        let grid = match strategy {
            ThresholdStrategy::Fixed => DecisionGrid::fixed(channel.constellation()),
            ThresholdStrategy::Adaptive => DecisionGrid::adaptive(&channel)?,
        };
        Self::new(channel, grid)
    }

    pub fn channel(&self) -> &AwgnChannel {
        &self.channel
    }

    pub fn constellation(&self) -> &Constellation {
        self.channel.constellation()
    }

    pub fn grid(&self) -> &DecisionGrid {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.channel.sigma()
    }

    pub fn order(&self) -> usize {
        self.decision_probs.len()
    }

    pub fn density_y_given_x(&self, y: f64, j: usize) -> Result<f64> {
        self.channel.density_y_given_x(y, j)
    }

    pub fn density_y(&self, y: f64) -> f64 {
        self.channel.density_y(y)
    }

    pub fn cdf_y(&self, y: f64) -> f64 {
        self.channel.cdf_y(y)
    }

    pub fn quantile_y(&self, p: f64) -> Result<f64> {
        self.channel.quantile_y(p)
    }

    /// Bob's hard decision: the index `i` with `y` in `D_i`.
    pub fn decide(&self, y: f64) -> usize {
        self.grid.locate(y)
    }

    /// `P(X_hat = a_i)`.
    pub fn decision_prob(&self, i: usize) -> Result<f64> {
        self.decision_probs
            .get(i)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.order(),
            })
    }

    pub fn decision_probs(&self) -> &[f64] {
        &self.decision_probs
    }

    pub(crate) fn mass_below(&self, i: usize) -> f64 {
        self.below[i]
    }

    pub(crate) fn mass_above(&self, i: usize) -> f64 {
        self.above[i]
    }

    /// `P(X_hat = a_i | X = a_j)`, indexed `[i][j]`.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let s = self.sigma();
        let points = self.constellation().points();
        (0..self.order())
            .map(|i| {
                let (lo, hi) = self.grid.bounds(i);
                points
                    .iter()
                    .map(|a| normal_interval((lo - a) / s, (hi - a) / s))
                    .collect()
            })
            .collect()
    }
}
