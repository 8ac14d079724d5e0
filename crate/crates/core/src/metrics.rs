//! Alice-side soft information: the joint density `f_{N,X_hat|X}`,
//! a-posteriori decision probabilities and bitwise LAPPRs.
//!
//! All LAPPRs use the natural logarithm with `L > 0` favouring bit value 0,
//! and are clipped to `[-LAPPR_CLIP, LAPPR_CLIP]`.

use crate::channel::{AwgnChannel, ChannelModel};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::special::log_sum_exp;
use crate::transform::SofteningTransform;

pub const LAPPR_CLIP: f64 = 30.0;

/// Bitwise LAPPRs for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct LapprVector {
    pub values: Vec<f64>,
    /// Alice's transmitted symbol index.
    pub symbol: usize,
    /// Disclosed metric; `None` for hard-information reconciliation.
    pub metric: Option<f64>,
}

fn clip(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-LAPPR_CLIP, LAPPR_CLIP)
    }
}

/// Moves `n = 0` or `n = 1` to the nearest interior representable value.
pub fn nudge_metric(n: f64) -> f64 {
    if n <= 0.0 {
        f64::MIN_POSITIVE
    } else if n >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        n
    }
}

fn check_metric(n: f64) -> Result<f64> {
    if n.is_nan() || !(0.0..=1.0).contains(&n) {
        return Err(Error::Domain(format!("metric {n} outside [0, 1]")));
    }
    Ok(nudge_metric(n))
}

fn check_symbol(c: &Constellation, j: usize) -> Result<()> {
    if j >= c.order() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: c.order(),
        });
    }
    Ok(())
}

/// `ln f_{N,X_hat|X}(n, a_i | a_j)` for every `i`, given the hypotheses
/// `y_i = G_i^{-1}(n)`.
///
/// Uses the Gaussian ratio form, which stays finite where the two
/// densities separately underflow.
pub(crate) fn log_joint_row(model: &ChannelModel, hypotheses: &[f64], j: usize, out: &mut [f64]) {
    let c = model.constellation();
    let points = c.points();
    let pmf = c.pmf();
    let two_var = 2.0 * model.sigma() * model.sigma();
    let aj = points[j];
    let mut terms = vec![0.0; points.len()];
    for (i, &y) in hypotheses.iter().enumerate() {
        for (k, (&ak, &pk)) in points.iter().zip(pmf).enumerate() {
            terms[k] = if k == j {
                pk.ln()
            } else {
                pk.ln() - (2.0 * y - aj - ak) * (aj - ak) / two_var
            };
        }
        out[i] = model.decision_probs()[i].ln() - log_sum_exp(&terms);
    }
}

/// `f_{N,X_hat|X}(n, a_i | a_j)`.
pub fn joint_density(t: &SofteningTransform, n: f64, i: usize, j: usize) -> Result<f64> {
    let n = check_metric(n)?;
    let c = t.model().constellation();
    check_symbol(c, i)?;
    check_symbol(c, j)?;
    let y = t.invert_unchecked(n, i);
    let mut row = vec![0.0; c.order()];
    // Only entry i of the row is read, so every hypothesis may be y.
    let hyps = vec![y; c.order()];
    log_joint_row(t.model(), &hyps, j, &mut row);
    Ok(row[i].exp())
}

/// The same density via the change of variables
/// `f_{Y|X}(y|a_j) / |G_i'(y)|` at `y = G_i^{-1}(n)`.
pub fn joint_density_change_of_variable(
    t: &SofteningTransform,
    n: f64,
    i: usize,
    j: usize,
) -> Result<f64> {
    let n = check_metric(n)?;
    let c = t.model().constellation();
    check_symbol(c, i)?;
    let y = t.invert_unchecked(n, i);
    let p = t.model().decision_probs()[i];
    Ok(t.model().density_y_given_x(y, j)? * p / t.model().density_y(y))
}

/// Log joint densities for all decisions at metric `n` given `X = a_j`.
pub fn log_joint_densities(t: &SofteningTransform, n: f64, j: usize) -> Result<Vec<f64>> {
    let n = check_metric(n)?;
    check_symbol(t.model().constellation(), j)?;
    let hyps: Vec<f64> = (0..t.model().order())
        .map(|i| t.invert_unchecked(n, i))
        .collect();
    let mut row = vec![0.0; hyps.len()];
    log_joint_row(t.model(), &hyps, j, &mut row);
    Ok(row)
}

/// `P(X_hat = a_i | X = a_j, N = n)` for every `i`.
pub fn app(t: &SofteningTransform, n: f64, j: usize) -> Result<Vec<f64>> {
    let row = log_joint_densities(t, n, j)?;
    normalise_log(&row)
}

fn normalise_log(row: &[f64]) -> Result<Vec<f64>> {
    let total = log_sum_exp(row);
    if !total.is_finite() {
        return Err(Error::Domain("degenerate density row".into()));
    }
    Ok(row.iter().map(|v| (v - total).exp()).collect())
}

/// Per-bit log ratios from a row of (unnormalised) log-probabilities.
pub(crate) fn bit_lapprs(c: &Constellation, log_row: &[f64], out: &mut [f64]) {
    let k = c.bits_per_symbol();
    let mut zero = Vec::with_capacity(c.order() / 2);
    let mut one = Vec::with_capacity(c.order() / 2);
    for (l, slot) in out.iter_mut().enumerate().take(k) {
        zero.clear();
        one.clear();
        for (i, &v) in log_row.iter().enumerate() {
            if c.bit(i, l) == 0 {
                zero.push(v);
            } else {
                one.push(v);
            }
        }
        *slot = clip(log_sum_exp(&zero) - log_sum_exp(&one));
    }
}

/// LAPPRs of Bob's decision bits from the disclosed metric and Alice's symbol.
pub fn lappr_rrs(t: &SofteningTransform, n: f64, j: usize) -> Result<LapprVector> {
    let row = log_joint_densities(t, n, j)?;
    let c = t.model().constellation();
    let mut values = vec![0.0; c.bits_per_symbol()];
    bit_lapprs(c, &row, &mut values);
    Ok(LapprVector {
        values,
        symbol: j,
        metric: Some(n),
    })
}

/// LAPPRs of Bob's decision bits from Alice's symbol alone.
pub fn lappr_rrh(m: &ChannelModel, j: usize) -> Result<LapprVector> {
    let c = m.constellation();
    check_symbol(c, j)?;
    let row: Vec<f64> = m.transition_matrix().iter().map(|r| r[j].ln()).collect();
    let mut values = vec![0.0; c.bits_per_symbol()];
    bit_lapprs(c, &row, &mut values);
    Ok(LapprVector {
        values,
        symbol: j,
        metric: None,
    })
}

/// Bitwise channel LLRs of Alice's label bits given `y`, for direct
/// reconciliation.
pub fn channel_llrs(channel: &AwgnChannel, y: f64, out: &mut [f64]) {
    let c = channel.constellation();
    let two_var = 2.0 * channel.sigma() * channel.sigma();
    let row: Vec<f64> = c
        .points()
        .iter()
        .zip(c.pmf())
        .map(|(a, p)| p.ln() - (y - a) * (y - a) / two_var)
        .collect();
    bit_lapprs(c, &row, out);
}
