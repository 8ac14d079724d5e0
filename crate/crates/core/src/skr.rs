//! Secret-key-rate analysis: `H(X_hat)`, `H(X_hat | X, N)` by quadrature,
//! the RRS rate `I(X_hat; X | N)`, the RRH rate `I(X_hat; X)`, the upper
//! bound `I(X; Y)` and the achievable efficiency `beta*`.
//!
//! All rates are in bits per channel use.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{ChannelModel, NoiseModel, ThresholdStrategy};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::metrics::log_joint_row;
use crate::quad::{integrate, Integral, Tolerance};
use crate::snr;
use crate::special::{log_sum_exp, xlog2x};
use crate::transform::{Configuration, SofteningTransform};

/// Inset of the metric integration range away from 0 and 1.
const METRIC_INSET: f64 = 1e-12;
const ENTROPY_TOL: Tolerance = Tolerance {
    abs: 1e-10,
    rel: 1e-10,
};
const MI_TOL: Tolerance = Tolerance {
    abs: 1e-11,
    rel: 1e-10,
};
const MAX_SEGMENTS: usize = 4000;

/// `H(X_hat)` in bits.
pub fn entropy_xhat(m: &ChannelModel) -> f64 {
    -m.decision_probs().iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Integrand of `H(X_hat | X, N)` at metric `n`, summed over `i` and
/// weighted over `j`.
fn cond_entropy_integrand(t: &SofteningTransform, n: f64, hyps: &mut [f64], row: &mut [f64]) -> f64 {
    let model = t.model();
    for (i, h) in hyps.iter_mut().enumerate() {
        *h = t.invert_unchecked(n, i);
    }
    let pmf = model.constellation().pmf();
    let mut acc = 0.0;
    for (j, &pj) in pmf.iter().enumerate() {
        if pj == 0.0 {
            continue;
        }
        log_joint_row(model, hyps, j, row);
        let total = log_sum_exp(row);
        let mut inner = 0.0;
        for &lf in row.iter() {
            if lf > f64::NEG_INFINITY {
                inner += lf.exp() * (total - lf);
            }
        }
        acc += pj * inner;
    }
    acc / LN_2
}

/// `H(X_hat | X, N)` with its quadrature error estimate.
pub fn cond_entropy_rrs_integral(t: &SofteningTransform) -> Result<Integral> {
    let m = t.model().order();
    let mut hyps = vec![0.0; m];
    let mut row = vec![0.0; m];
    integrate(
        |n| cond_entropy_integrand(t, n, &mut hyps, &mut row),
        METRIC_INSET,
        1.0 - METRIC_INSET,
        &[],
        ENTROPY_TOL,
        MAX_SEGMENTS,
    )
}

/// `H(X_hat | X, N)` in bits.
pub fn cond_entropy_rrs(t: &SofteningTransform) -> Result<f64> {
    cond_entropy_rrs_integral(t).map(|r| r.value)
}

/// RRS secret key rate `I(X_hat; X | N) = H(X_hat) - H(X_hat | X, N)`.
pub fn skr_rrs(t: &SofteningTransform) -> Result<f64> {
    Ok(entropy_xhat(t.model()) - cond_entropy_rrs(t)?)
}

/// RRH secret key rate `I(X_hat; X)` over the hard-decision channel.
pub fn skr_rrh(m: &ChannelModel) -> f64 {
    let pmf = m.constellation().pmf();
    let probs = m.decision_probs();
    let mut total = 0.0;
    for (i, row) in m.transition_matrix().iter().enumerate() {
        for (j, &tij) in row.iter().enumerate() {
            if tij > 0.0 && pmf[j] > 0.0 {
                total += pmf[j] * tij * (tij / probs[i]).log2();
            }
        }
    }
    total
}

/// Upper bound `I(X; Y)` for the discrete-input AWGN channel.
pub fn mi_xy(m: &ChannelModel) -> Result<f64> {
    let c = m.constellation();
    let points = c.points();
    let pmf = c.pmf();
    let sigma = m.sigma();
    let two_var = 2.0 * sigma * sigma;
    let reach = points[points.len() - 1].abs().max(points[0].abs()) + 12.0 * sigma;
    let mut terms = vec![0.0; points.len()];
    let integrand = |y: f64| {
        let mut acc = 0.0;
        for (j, (&aj, &pj)) in points.iter().zip(pmf).enumerate() {
            if pj == 0.0 {
                continue;
            }
            let dj = (y - aj) * (y - aj);
            for (k, (&ak, &pk)) in points.iter().zip(pmf).enumerate() {
                terms[k] = if k == j {
                    pk.ln()
                } else {
                    pk.ln() - ((y - ak) * (y - ak) - dj) / two_var
                };
            }
            let dens = m.channel().density_y_given_x(y, j).unwrap_or(0.0);
            acc -= pj * dens * log_sum_exp(&terms);
        }
        acc / LN_2
    };
    integrate(integrand, -reach, reach, points, MI_TOL, MAX_SEGMENTS).map(|r| r.value)
}

/// `beta* = I(X_hat; X | N) / I(X; Y)`.
pub fn beta_star(t: &SofteningTransform) -> Result<f64> {
    let upper = mi_xy(t.model())?;
    if upper < 1e-15 {
        return Err(Error::Domain(format!("I(X;Y) = {upper} too small for beta*")));
    }
    Ok(skr_rrs(t)? / upper)
}

/// Monte-Carlo estimate of `H(X_hat | X, N)`: mean and standard error.
pub fn cond_entropy_monte_carlo(t: &SofteningTransform, samples: usize, seed: u64) -> (f64, f64) {
    const CHUNK: usize = 4096;
    let model = t.model();
    let m = model.order();
    let c = model.constellation();
    let cumulative: Vec<f64> = c
        .pmf()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::sim::mix_seed(seed, chunk as u64, 0));
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut hyps = vec![0.0; m];
            let mut row = vec![0.0; m];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let u: f64 = rng.random();
                let j = cumulative.partition_point(|&p| p <= u).min(m - 1);
                let w: f64 = rng.sample(StandardNormal);
                let y = c.points()[j] + model.sigma() * w;
                let (i, n) = t.forward(y);
                for (k, h) in hyps.iter_mut().enumerate() {
                    *h = if k == i { y } else { t.invert_unchecked(n, k) };
                }
                log_joint_row(model, &hyps, j, &mut row);
                let v = (log_sum_exp(&row) - row[i]) / LN_2;
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// One row of an SKR sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SkrPoint {
    pub es_n0_db: f64,
    /// `Es/N0 - 10 log10(i_rrs)`: energy per key bit of the RRS scheme.
    pub eb_n0_db_scheme: f64,
    /// `Es/N0 - 10 log10(R log2 M)` for the sweep's nominal code rate.
    pub eb_n0_db_coderate: f64,
    pub config: Configuration,
    pub strategy: ThresholdStrategy,
    pub i_xy: f64,
    pub i_rrh: f64,
    pub i_rrs: f64,
    pub beta_star: f64,
}

pub const CSV_HEADER: &str =
    "es_n0_db,eb_n0_db_scheme,eb_n0_db_coderate,config,strategy,i_xy,i_rrh,i_rrs,beta_star";

impl SkrPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.es_n0_db,
            self.eb_n0_db_scheme,
            self.eb_n0_db_coderate,
            self.config.mask(),
            self.strategy,
            self.i_xy,
            self.i_rrh,
            self.i_rrs,
            self.beta_star
        )
    }
}

pub fn to_csv(points: &[SkrPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(out, "{}", p.csv_row());
    }
    out
}

/// Parameters of an SKR sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub constellation: Constellation,
    pub es_n0_db: Vec<f64>,
    pub configs: Vec<u64>,
    pub strategies: Vec<ThresholdStrategy>,
    /// Nominal code rate for the `eb_n0_db_coderate` column.
    pub code_rate: f64,
}

#[derive(Debug)]
pub struct SweepOutcome {
    /// Every point, in (SNR, strategy, config) order. Points whose
    /// quadrature did not converge carry the best available estimate.
    pub points: Vec<SkrPoint>,
    /// Indices into `points` that did not converge, with the reason.
    pub failures: Vec<(usize, Error)>,
}

/// Evaluates every (SNR, strategy, configuration) combination.
///
/// Points are computed in parallel; the output order and values do not
/// depend on scheduling.
pub fn sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    if spec.es_n0_db.is_empty() {
        return Err(Error::Domain("empty SNR grid".into()));
    }
    if spec.configs.is_empty() || spec.strategies.is_empty() {
        return Err(Error::Domain("no configurations or strategies".into()));
    }
    let m = spec.constellation.order();
    let configs: Vec<Configuration> = spec
        .configs
        .iter()
        .map(|&b| Configuration::new(b, m))
        .collect::<Result<_>>()?;
    let bits = spec.code_rate * spec.constellation.bits_per_symbol() as f64;
    let cells: Vec<(f64, ThresholdStrategy)> = spec
        .es_n0_db
        .iter()
        .flat_map(|&db| spec.strategies.iter().map(move |&s| (db, s)))
        .collect();
    let rows: Vec<Vec<(SkrPoint, Option<Error>)>> = cells
        .par_iter()
        .map(|&(db, strategy)| -> Result<Vec<(SkrPoint, Option<Error>)>> {
            let sigma = snr::sigma_for_es_n0(&spec.constellation, db);
            let model =
                ChannelModel::with_strategy(spec.constellation.clone(), NoiseModel::new(sigma)?, strategy)?;
            let mut failure = None;
            let i_xy = mi_xy(&model).or_else(|e| match e {
                Error::Quadrature { estimate, .. } => {
                    failure = Some(e);
                    Ok(estimate)
                }
                other => Err(other),
            })?;
            let i_rrh = skr_rrh(&model);
            let eb_rate = snr::es_to_eb(db, bits)?;
            configs
                .par_iter()
                .map(|&config| {
                    let t = SofteningTransform::new(model.clone(), config)?;
                    let mut err = failure.as_ref().map(|e| match e {
                        Error::Quadrature { estimate, error } => Error::Quadrature {
                            estimate: *estimate,
                            error: *error,
                        },
                        _ => unreachable!(),
                    });
                    let h = match cond_entropy_rrs_integral(&t) {
                        Ok(r) => r.value,
                        Err(Error::Quadrature { estimate, error }) => {
                            err = Some(Error::Quadrature { estimate, error });
                            estimate
                        }
                        Err(e) => return Err(e),
                    };
                    let i_rrs = entropy_xhat(&model) - h;
                    let point = SkrPoint {
                        es_n0_db: db,
                        eb_n0_db_scheme: db - snr::linear_to_db(i_rrs),
                        eb_n0_db_coderate: eb_rate,
                        config,
                        strategy,
                        i_xy,
                        i_rrh,
                        i_rrs,
                        beta_star: i_rrs / i_xy,
                    };
                    Ok((point, err))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (point, err) in rows.into_iter().flatten() {
        if let Some(e) = err {
            failures.push((points.len(), e));
        }
        points.push(point);
    }
    Ok(SweepOutcome { points, failures })
}

/// Finds the `Es/N0` (dB) in `[lo, hi]` where the nondecreasing rate
/// function reaches `target` bits, by bisection to 1e-6 dB.
pub fn es_n0_for_rate<F>(mut rate: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r_lo = rate(lo)?;
    let r_hi = rate(hi)?;
    if !(r_lo <= target && target <= r_hi) {
        return Err(Error::Domain(format!(
            "target {target} not bracketed by [{r_lo}, {r_hi}] over [{lo}, {hi}] dB"
        )));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Channel model for a uniform PAM at the given `Es/N0`.
pub fn pam_model(order: usize, es_n0_db: f64, strategy: ThresholdStrategy) -> Result<ChannelModel> {
    let c = Constellation::uniform_pam(order)?;
    let sigma = snr::sigma_for_es_n0(&c, es_n0_db);
    ChannelModel::with_strategy(c, NoiseModel::new(sigma)?, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transform(order: usize, es_db: f64, mask: u64, strategy: ThresholdStrategy) -> SofteningTransform {
        let model = pam_model(order, es_db, strategy).unwrap();
        SofteningTransform::new(model, Configuration::new(mask, order).unwrap()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let m = pam_model(4, 3.0, ThresholdStrategy::Adaptive).unwrap();
        assert!((entropy_xhat(&m) - 2.0).abs() < 1e-12);
        let b = pam_model(2, -2.0, ThresholdStrategy::Fixed).unwrap();
        assert!((entropy_xhat(&b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_limit() {
        let t = transform(4, 40.0, 5, ThresholdStrategy::Fixed);
        assert!(cond_entropy_rrs(&t).unwrap().abs() < 1e-6);
        assert!((mi_xy(t.model()).unwrap() - 2.0).abs() < 1e-6);
        let quiet = transform(4, -60.0, 5, ThresholdStrategy::Adaptive);
        assert!(mi_xy(quiet.model()).unwrap() < 1e-5);
    }

    #[test]
    fn bpsk_config_one_attains_bound() {
        for db in [-6.0, 0.0, 4.0] {
            let t = transform(2, db, 1, ThresholdStrategy::Fixed);
            let rrs = skr_rrs(&t).unwrap();
            let ub = mi_xy(t.model()).unwrap();
            assert!((rrs - ub).abs() < 1e-6, "db={db} {rrs} {ub}");
            assert!((beta_star(&t).unwrap() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn flipped_pair_equal() {
        let a = transform(4, 1.0, 2, ThresholdStrategy::Adaptive);
        let b = transform(4, 1.0, 13, ThresholdStrategy::Adaptive);
        let ha = cond_entropy_rrs(&a).unwrap();
        let hb = cond_entropy_rrs(&b).unwrap();
        assert!((ha - hb).abs() <= 1e-6);
    }

    #[test]
    fn bound_chain_spot_check() {
        let t = transform(4, 0.0, 5, ThresholdStrategy::Fixed);
        let rrh = skr_rrh(t.model());
        let rrs = skr_rrs(&t).unwrap();
        let ub = mi_xy(t.model()).unwrap();
        assert!(rrh <= rrs + 1e-6 && rrs <= ub + 1e-6, "{rrh} {rrs} {ub}");
    }

    #[test]
    fn rate_bisection() {
        let at = es_n0_for_rate(|db| Ok(db / 10.0), 0.25, 0.0, 10.0).unwrap();
        assert!((at - 2.5).abs() < 1e-6);
        assert!(es_n0_for_rate(|db| Ok(db), 20.0, 0.0, 10.0).is_err());
    }

    #[test]
    fn sweep_shape_and_csv() {
        let spec = SweepSpec {
            constellation: Constellation::uniform_pam(4).unwrap(),
            es_n0_db: vec![0.0, 2.0],
            configs: vec![0, 5],
            strategies: vec![ThresholdStrategy::Fixed, ThresholdStrategy::Adaptive],
            code_rate: 0.5,
        };
        let out = sweep(&spec).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.points.len(), 8);
        assert_eq!(out.points[0].config.mask(), 0);
        assert_eq!(out.points[1].config.mask(), 5);
        assert_eq!(out.points[2].strategy, ThresholdStrategy::Adaptive);
        assert_eq!(out.points[4].es_n0_db, 2.0);
        let csv = to_csv(&out.points);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[4], "F");
        let v: f64 = first[7].parse().unwrap();
        assert_eq!(v, out.points[0].i_rrs);
        // Rate-1/2 PAM-4 carries one bit per symbol.
        assert_eq!(out.points[0].eb_n0_db_coderate, 0.0);
        let again = sweep(&spec).unwrap();
        assert_eq!(to_csv(&again.points), csv);
    }

    #[test]
    fn sweep_rejects_empty() {
        let mut spec = SweepSpec {
            constellation: Constellation::uniform_pam(2).unwrap(),
            es_n0_db: vec![],
            configs: vec![1],
            strategies: vec![ThresholdStrategy::Fixed],
            code_rate: 0.5,
        };
        assert!(sweep(&spec).is_err());
        spec.es_n0_db = vec![1.0];
        spec.configs = vec![4];
        assert!(sweep(&spec).is_err());
    }
}
