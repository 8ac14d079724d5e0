//! Self-validation suite: metric uniformity, the density identity, the
//! rate bound chain, transform round trips and quadrature against
//! Monte-Carlo.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::ThresholdStrategy;
use crate::error::Result;
use crate::metrics::joint_density;
use crate::sim::mix_seed;
use crate::skr;
use crate::special::ks_uniform;
use crate::transform::{Configuration, SofteningTransform};

/// Deliberate defects used to confirm that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Discloses `n^2` instead of `n`.
    SquareMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub order: usize,
    pub config: u64,
    pub es_n0_db: f64,
    pub quick: bool,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            order: 4,
            config: 5,
            es_n0_db: 3.0,
            quick: false,
            seed: 1,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `check,result,detail` rows followed by a summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,result,detail\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{}",
                c.name,
                if c.passed { "pass" } else { "fail" },
                c.detail.replace(',', ";")
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(
            out,
            "summary,{},passed={} failed={}",
            if failed == 0 { "pass" } else { "fail" },
            self.checks.len() - failed,
            failed
        );
        out
    }
}

fn check(name: String, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Runs every check for both threshold strategies.
pub fn run(opts: &ValidateOptions) -> Result<Report> {
    let mut checks = Vec::new();
    let config = Configuration::new(opts.config, opts.order)?;
    let samples = if opts.quick { 20_000 } else { 100_000 };
    let mc_samples = if opts.quick { 100_000 } else { 1_000_000 };
    for strategy in [ThresholdStrategy::Fixed, ThresholdStrategy::Adaptive] {
        let tag = format!("M{}-{}-{}", opts.order, config, strategy);
        let model = skr::pam_model(opts.order, opts.es_n0_db, strategy)?;
        let t = SofteningTransform::new(model, config)?;
        checks.push(uniformity(&t, samples, opts, &tag));
        checks.push(density_identity(&t, &tag)?);
        checks.push(round_trip(&t, opts.seed, &tag));
        checks.push(quadrature_vs_monte_carlo(&t, mc_samples, opts.seed, &tag)?);
        let snrs: &[f64] = if opts.quick { &[-2.0, 6.0] } else { &[-6.0, -2.0, 2.0, 6.0, 10.0] };
        checks.push(bound_chain(opts.order, config, strategy, snrs, &tag)?);
    }
    checks.push(bpsk_equivalence(if opts.quick { &[0.0] } else { &[-6.0, 0.0, 6.0] })?);
    Ok(Report { checks })
}

fn uniformity(t: &SofteningTransform, samples: usize, opts: &ValidateOptions, tag: &str) -> CheckResult {
    let model = t.model();
    let m = model.order();
    let c = model.constellation();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(opts.seed, 1, 0));
    let mut pooled = vec![Vec::new(); m];
    for _ in 0..samples * m {
        let j = rng.random_range(0..m);
        let y = c.points()[j] + model.sigma() * rng.sample::<f64, _>(StandardNormal);
        let (i, n) = t.forward(y);
        let n = match opts.fault {
            Some(Fault::SquareMetric) => n * n,
            None => n,
        };
        pooled[i].push(n);
    }
    let outcomes: Vec<_> = pooled.iter_mut().map(|v| ks_uniform(v)).collect();
    let worst = outcomes
        .iter()
        .map(|o| o.p_value)
        .fold(f64::INFINITY, f64::min);
    check(
        format!("uniformity[{tag}]"),
        outcomes.iter().all(|o| o.passes(0.01)),
        format!("min KS p-value {worst:.4} over {m} decisions"),
    )
}

fn density_identity(t: &SofteningTransform, tag: &str) -> Result<CheckResult> {
    let model = t.model();
    let pmf = model.constellation().pmf();
    let mut worst = 0.0f64;
    for k in 0..=100 {
        let n = k as f64 / 100.0;
        for i in 0..model.order() {
            let mut total = 0.0;
            for (j, &pj) in pmf.iter().enumerate() {
                total += pj * joint_density(t, n, i, j)?;
            }
            worst = worst.max((total - model.decision_probs()[i]).abs());
        }
    }
    Ok(check(
        format!("density-identity[{tag}]"),
        worst <= 1e-9,
        format!("max deviation {worst:e}"),
    ))
}

fn round_trip(t: &SofteningTransform, seed: u64, tag: &str) -> CheckResult {
    let model = t.model();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 2, 0));
    let spread = model.constellation().points().last().copied().unwrap_or(1.0) + 3.0 * model.sigma();
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let y = rng.random_range(-spread..spread);
        let (i, n) = t.forward(y);
        let back = t.invert_unchecked(n, i);
        let scale = 1.0 + y.abs();
        worst = worst.max((back - y).abs() / scale);
    }
    check(
        format!("round-trip[{tag}]"),
        worst <= 1e-8,
        format!("max relative error {worst:e}"),
    )
}

fn quadrature_vs_monte_carlo(t: &SofteningTransform, samples: usize, seed: u64, tag: &str) -> Result<CheckResult> {
    let q = skr::cond_entropy_rrs_integral(t)?;
    let (mean, se) = skr::cond_entropy_monte_carlo(t, samples, mix_seed(seed, 3, 0));
    let bar = (se * se + q.error * q.error).sqrt();
    let diff = (q.value - mean).abs();
    Ok(check(
        format!("quadrature-vs-mc[{tag}]"),
        diff <= 3.0 * bar,
        format!("quadrature {:.6} mc {:.6} +- {:.1e}", q.value, mean, se),
    ))
}

fn bound_chain(order: usize, config: Configuration, strategy: ThresholdStrategy, snrs: &[f64], tag: &str) -> Result<CheckResult> {
    let mut slack = f64::INFINITY;
    for &db in snrs {
        let model = skr::pam_model(order, db, strategy)?;
        let rrh = skr::skr_rrh(&model);
        let ub = skr::mi_xy(&model)?;
        let rrs = skr::skr_rrs(&SofteningTransform::new(model, config)?)?;
        slack = slack.min(rrs - rrh).min(ub - rrs);
    }
    Ok(check(
        format!("bound-chain[{tag}]"),
        slack >= -1e-6,
        format!("min slack {slack:e} over {} SNRs", snrs.len()),
    ))
}

fn bpsk_equivalence(snrs: &[f64]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for &db in snrs {
        let model = skr::pam_model(2, db, ThresholdStrategy::Fixed)?;
        let ub = skr::mi_xy(&model)?;
        let rrs = skr::skr_rrs(&SofteningTransform::new(model, Configuration::new(1, 2)?)?)?;
        worst = worst.max((rrs - ub).abs());
    }
    Ok(check(
        "bpsk-equivalence[M2-C[1]-F]".into(),
        worst <= 1e-3,
        format!("max |I_rrs - I_xy| {worst:e}"),
    ))
}
