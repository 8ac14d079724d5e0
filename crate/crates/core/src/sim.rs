//! Monte-Carlo BER harness for direct reconciliation (DR) and reverse
//! reconciliation with hard (RRH) or soft (RRS) information.
//!
//! Every block draws its randomness from a seed derived from the master
//! seed, the SNR point index and the block index, and blocks are
//! aggregated in index order, so results do not depend on the number of
//! worker threads.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{ChannelModel, NoiseModel, ThresholdStrategy};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::ldpc::{Decoder, LdpcCode, DEFAULT_MAX_ITER};
use crate::metrics::{bit_lapprs, channel_llrs, log_joint_row, nudge_metric};
use crate::snr;
use crate::special::{ks_uniform, KsOutcome};
use crate::transform::{Configuration, SofteningTransform};

/// Environment variable overriding the bundled fixture directory.
pub const FIXTURE_ENV: &str = "RRS_FIXTURE_DIR";

/// Directory holding the bundled alist codes.
pub fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures")))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream seed from a master seed and two counters.
pub fn mix_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Dr,
    Rrh,
    Rrs,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Dr => "DR",
            Scheme::Rrh => "RRH",
            Scheme::Rrs => "RRS",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dr" => Ok(Scheme::Dr),
            "rrh" => Ok(Scheme::Rrh),
            "rrs" => Ok(Scheme::Rrs),
            other => Err(Error::SimConfig(format!("unknown scheme '{other}' (dr, rrh, rrs)"))),
        }
    }
}

/// Uniform PAM from a name such as `pam4`.
pub fn parse_modulation(name: &str) -> Result<Constellation> {
    let lower = name.trim().to_ascii_lowercase();
    let order = match lower.as_str() {
        "pam2" | "bpsk" => 2,
        "pam4" => 4,
        "pam8" => 8,
        _ => {
            return Err(Error::SimConfig(format!(
                "unknown modulation '{name}' (pam2, pam4, pam8)"
            )))
        }
    };
    Constellation::uniform_pam(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub max_blocks: usize,
    pub target_frame_errors: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_blocks: 10_000,
            target_frame_errors: 100,
        }
    }
}

/// A validated BER campaign.
#[derive(Debug, Clone)]
pub struct SimConfig {
    constellation: Constellation,
    code: LdpcCode,
    scheme: Scheme,
    configuration: Option<Configuration>,
    strategy: ThresholdStrategy,
    es_n0_db: Vec<f64>,
    seed: u64,
    stop: StopRule,
    max_iter: usize,
    /// Cap on pooled metrics kept per decision for the leakage check.
    leakage_samples: usize,
}

impl SimConfig {
    /// Checks that the code length is a whole number of symbols and that
    /// RRS has a configuration of the right size.
    pub fn new(
        constellation: Constellation,
        code: LdpcCode,
        scheme: Scheme,
        configuration: Option<Configuration>,
        strategy: ThresholdStrategy,
        es_n0_db: Vec<f64>,
    ) -> Result<Self> {
        let k = constellation.bits_per_symbol();
        if code.n() % k != 0 {
            return Err(Error::SimConfig(format!(
                "code length {} is not a multiple of {k} bits per symbol",
                code.n()
            )));
        }
        if es_n0_db.is_empty() {
            return Err(Error::SimConfig("empty SNR list".into()));
        }
        if let Some(&bad) = es_n0_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::SimConfig(format!("non-finite SNR {bad}")));
        }
        let configuration = match (scheme, configuration) {
            (Scheme::Rrs, None) => {
                return Err(Error::SimConfig("RRS requires a configuration".into()))
            }
            (Scheme::Rrs, Some(c)) if c.intervals() != constellation.order() => {
                return Err(Error::SimConfig(format!(
                    "configuration {c} has {} intervals, constellation has {}",
                    c.intervals(),
                    constellation.order()
                )))
            }
            (_, c) => c,
        };
        Ok(SimConfig {
            constellation,
            code,
            scheme,
            configuration,
            strategy,
            es_n0_db,
            seed: 0,
            stop: StopRule::default(),
            max_iter: DEFAULT_MAX_ITER,
            leakage_samples: 100_000,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Result<Self> {
        if stop.max_blocks == 0 || stop.target_frame_errors == 0 {
            return Err(Error::SimConfig("stop rule limits must be positive".into()));
        }
        self.stop = stop;
        Ok(self)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_leakage_samples(mut self, cap: usize) -> Self {
        self.leakage_samples = cap;
        self
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn configuration(&self) -> Option<Configuration> {
        self.configuration
    }

    pub fn strategy(&self) -> ThresholdStrategy {
        self.strategy
    }

    pub fn es_n0_db(&self) -> &[f64] {
        &self.es_n0_db
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stop(&self) -> StopRule {
        self.stop
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn symbols_per_block(&self) -> usize {
        self.code.n() / self.constellation.bits_per_symbol()
    }

    /// `Eb/N0` per information bit of the code.
    pub fn eb_n0_db(&self, es_n0_db: f64) -> f64 {
        let bits = self.code.rate() * self.constellation.bits_per_symbol() as f64;
        snr::es_to_eb(es_n0_db, bits).unwrap_or(f64::NAN)
    }
}

/// Declarative campaign description, as read from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub modulation: String,
    pub code: PathBuf,
    pub scheme: Scheme,
    pub configuration: Option<u64>,
    pub strategy: ThresholdStrategy,
    pub es_n0_db: Vec<f64>,
    pub seed: u64,
    pub stop: StopRule,
    pub max_iter: usize,
}

impl SimSpec {
    /// Parses `key = value` lines; `#` starts a comment. Required keys are
    /// `modulation`, `code`, `scheme` and `snr`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut modulation = None;
        let mut code = None;
        let mut scheme = None;
        let mut configuration = None;
        let mut strategy = None;
        let mut snr_grid = None;
        let mut seed = None;
        let mut max_blocks = None;
        let mut target = None;
        let mut max_iter = None;
        let last = text.lines().count();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("empty value for '{key}'")));
            }
            fn set<T>(slot: &mut Option<T>, v: T, key: &str, line: usize) -> Result<()> {
                if slot.is_some() {
                    return Err(Error::Parse {
                        line,
                        msg: format!("duplicate key '{key}'"),
                    });
                }
                *slot = Some(v);
                Ok(())
            }
            let int = |v: &str| -> Result<u64> {
                v.parse::<u64>()
                    .map_err(|_| err(format!("invalid integer '{v}' for '{key}'")))
            };
            let positive = |v: &str| -> Result<usize> {
                match int(v)? {
                    0 => Err(err(format!("'{key}' must be positive"))),
                    x => usize::try_from(x).map_err(|_| err(format!("'{key}' too large"))),
                }
            };
            match key {
                "modulation" => {
                    parse_modulation(value).map_err(|e| err(e.to_string()))?;
                    set(&mut modulation, value.to_ascii_lowercase(), key, line_no)?
                }
                "code" => set(&mut code, PathBuf::from(value), key, line_no)?,
                "scheme" => set(
                    &mut scheme,
                    value.parse::<Scheme>().map_err(|e| err(e.to_string()))?,
                    key,
                    line_no,
                )?,
                "configuration" => set(&mut configuration, int(value)?, key, line_no)?,
                "strategy" => set(
                    &mut strategy,
                    value
                        .parse::<ThresholdStrategy>()
                        .map_err(|e| err(e.to_string()))?,
                    key,
                    line_no,
                )?,
                "snr" => set(
                    &mut snr_grid,
                    snr::parse_grid(value).map_err(|e| match e {
                        Error::Parse { msg, .. } => err(msg),
                        other => other,
                    })?,
                    key,
                    line_no,
                )?,
                "seed" => set(&mut seed, int(value)?, key, line_no)?,
                "max_blocks" => set(&mut max_blocks, positive(value)?, key, line_no)?,
                "target_frame_errors" => set(&mut target, positive(value)?, key, line_no)?,
                "max_iter" => set(&mut max_iter, positive(value)?, key, line_no)?,
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            line: last + 1,
            msg: format!("missing required key '{what}'"),
        };
        let defaults = StopRule::default();
        Ok(SimSpec {
            modulation: modulation.ok_or_else(|| missing("modulation"))?,
            code: code.ok_or_else(|| missing("code"))?,
            scheme: scheme.ok_or_else(|| missing("scheme"))?,
            configuration,
            strategy: strategy.unwrap_or(ThresholdStrategy::Adaptive),
            es_n0_db: snr_grid.ok_or_else(|| missing("snr"))?,
            seed: seed.unwrap_or(0),
            stop: StopRule {
                max_blocks: max_blocks.unwrap_or(defaults.max_blocks),
                target_frame_errors: target.unwrap_or(defaults.target_frame_errors),
            },
            max_iter: max_iter.unwrap_or(DEFAULT_MAX_ITER),
        })
    }

    /// Loads the code and validates. Relative code paths resolve against
    /// `base`, then against the fixture directory.
    pub fn into_config(self, base: &Path) -> Result<SimConfig> {
        let constellation = parse_modulation(&self.modulation)?;
        let code = load_code(&self.code, base)?;
        let m = constellation.order();
        let configuration = match (self.scheme, self.configuration) {
            (_, Some(mask)) => Some(Configuration::new(mask, m)?),
            (Scheme::Rrs, None) => Some(Configuration::alternating(m)),
            _ => None,
        };
        SimConfig::new(
            constellation,
            code,
            self.scheme,
            configuration,
            self.strategy,
            self.es_n0_db,
        )?
        .with_seed(self.seed)
        .with_stop(self.stop)
        .map(|c| c.with_max_iter(self.max_iter))
    }
}

/// Reads an alist file; relative paths are tried against `base` and then
/// the fixture directory.
pub fn load_code(path: &Path, base: &Path) -> Result<LdpcCode> {
    let candidates = if path.is_absolute() {
        vec![path.to_path_buf()]
    } else {
        vec![base.join(path), fixture_dir().join(path)]
    };
    let found = candidates.iter().find(|p| p.is_file()).ok_or_else(|| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("code file '{}' not found", path.display()),
        ))
    })?;
    LdpcCode::load_alist(std::fs::File::open(found)?)
}

/// Result of one simulated block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub bit_errors: usize,
    pub frame_error: bool,
    pub iterations: usize,
    /// RRS only: Bob's decision and disclosed metric per symbol.
    pub metrics: Vec<(usize, f64)>,
}

/// Per-SNR state shared by all blocks of a point.
#[derive(Debug)]
pub struct PointContext {
    model: ChannelModel,
    transform: Option<SofteningTransform>,
    /// RRH: LAPPRs per transmitted symbol, `bits_per_symbol` each.
    hard_table: Vec<f64>,
    scheme: Scheme,
}

impl PointContext {
    pub fn new(cfg: &SimConfig, es_n0_db: f64) -> Result<Self> {
        let sigma = snr::sigma_for_es_n0(&cfg.constellation, es_n0_db);
        let model = ChannelModel::with_strategy(cfg.constellation.clone(), NoiseModel::new(sigma)?, cfg.strategy)?;
        let transform = match cfg.scheme {
            Scheme::Rrs => Some(SofteningTransform::new(
                model.clone(),
                cfg.configuration.expect("validated RRS configuration"),
            )?),
            _ => None,
        };
        let k = cfg.constellation.bits_per_symbol();
        let mut hard_table = vec![0.0; cfg.constellation.order() * k];
        if cfg.scheme == Scheme::Rrh {
            let t = model.transition_matrix();
            for j in 0..cfg.constellation.order() {
                let row: Vec<f64> = t.iter().map(|r| r[j].ln()).collect();
                bit_lapprs(&cfg.constellation, &row, &mut hard_table[j * k..(j + 1) * k]);
            }
        }
        Ok(PointContext {
            model,
            transform,
            hard_table,
            scheme: cfg.scheme,
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// Simulates one block with its own seed.
    pub fn run_block(&self, cfg: &SimConfig, decoder: &mut Decoder<'_>, block_seed: u64) -> Result<BlockOutcome> {
        let c = &cfg.constellation;
        let m = c.order();
        let k = c.bits_per_symbol();
        let symbols = cfg.symbols_per_block();
        let mut rng = ChaCha8Rng::seed_from_u64(block_seed);
        let cumulative: Vec<f64> = c
            .pmf()
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let mut sent = Vec::with_capacity(symbols);
        let mut received = Vec::with_capacity(symbols);
        let sigma = self.model.sigma();
        for _ in 0..symbols {
            let u: f64 = rng.random();
            let j = cumulative.partition_point(|&p| p <= u).min(m - 1);
            let w: f64 = rng.sample(StandardNormal);
            sent.push(j);
            received.push(c.points()[j] + sigma * w);
        }
        let decisions: Vec<usize> = received.iter().map(|&y| self.model.decide(y)).collect();
        let mut lapprs = vec![0.0; symbols * k];
        let mut metrics = Vec::new();
        let reference = match self.scheme {
            Scheme::Dr => {
                for (s, &y) in received.iter().enumerate() {
                    channel_llrs(self.model.channel(), y, &mut lapprs[s * k..(s + 1) * k]);
                }
                c.demap(&sent)?
            }
            Scheme::Rrh => {
                for (s, &j) in sent.iter().enumerate() {
                    lapprs[s * k..(s + 1) * k].copy_from_slice(&self.hard_table[j * k..(j + 1) * k]);
                }
                c.demap(&decisions)?
            }
            Scheme::Rrs => {
                let t = self.transform.as_ref().expect("RRS transform");
                let mut hyps = vec![0.0; m];
                let mut row = vec![0.0; m];
                metrics.reserve(symbols);
                for (s, (&y, &j)) in received.iter().zip(&sent).enumerate() {
                    let (i, n) = t.forward(y);
                    metrics.push((i, n));
                    // Alice sees only n and her own symbol.
                    let n = nudge_metric(n);
                    for (h, slot) in hyps.iter_mut().enumerate() {
                        *slot = t.invert_unchecked(n, h);
                    }
                    log_joint_row(&self.model, &hyps, j, &mut row);
                    bit_lapprs(c, &row, &mut lapprs[s * k..(s + 1) * k]);
                }
                c.demap(&decisions)?
            }
        };
        let target = cfg.code.syndrome(&reference)?;
        let result = decoder.decode(&lapprs, &target, cfg.max_iter)?;
        let bit_errors = result
            .bits
            .iter()
            .zip(&reference)
            .filter(|(a, b)| a != b)
            .count();
        Ok(BlockOutcome {
            bit_errors,
            frame_error: bit_errors > 0 || !result.converged,
            iterations: result.iterations,
            metrics,
        })
    }
}

/// Simulates block `block` of SNR point `point` in isolation.
pub fn run_block(cfg: &SimConfig, point: usize, block: u64) -> Result<BlockOutcome> {
    let es = *cfg
        .es_n0_db
        .get(point)
        .ok_or(Error::IndexOutOfRange {
            index: point,
            len: cfg.es_n0_db.len(),
        })?;
    let ctx = PointContext::new(cfg, es)?;
    let mut decoder = Decoder::new(&cfg.code);
    ctx.run_block(cfg, &mut decoder, mix_seed(cfg.seed, point as u64, block))
}

/// Aggregated counts for one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub snr_es_db: f64,
    pub snr_eb_db: f64,
    pub blocks: usize,
    pub bit_errors: u64,
    pub frame_errors: usize,
    pub ber: f64,
    pub fer: f64,
    pub mean_iters: f64,
    /// Standard error of `ber` from the spread of per-block error counts.
    pub ber_std_error: f64,
    /// RRS only: KS test of pooled metrics per decision.
    pub leakage: Option<Vec<KsOutcome>>,
}

pub const BER_CSV_HEADER: &str =
    "scheme,snr_es_db,snr_eb_db,blocks,bit_errors,frame_errors,ber,fer,mean_iters";

impl BerRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.snr_es_db,
            self.snr_eb_db,
            self.blocks,
            self.bit_errors,
            self.frame_errors,
            self.ber,
            self.fer,
            self.mean_iters
        )
    }

    /// Whether every decision's pooled metrics pass KS at level `alpha`.
    /// `None` for schemes without disclosed metrics.
    pub fn leakage_passes(&self, alpha: f64) -> Option<bool> {
        self.leakage
            .as_ref()
            .map(|v| v.iter().all(|k| k.samples == 0 || k.passes(alpha)))
    }
}

pub fn ber_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(BER_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Blocks simulated per parallel batch. Fixed so the amount of work done
/// never depends on the thread count.
const BATCH: usize = 64;

/// Runs every SNR point until the stop rule fires.
pub fn run_campaign(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    let n = cfg.code.n();
    let m = cfg.constellation.order();
    let mut records = Vec::with_capacity(cfg.es_n0_db.len());
    for (point, &es) in cfg.es_n0_db.iter().enumerate() {
        let ctx = PointContext::new(cfg, es)?;
        let mut blocks = 0usize;
        let mut bit_errors = 0u64;
        let mut bit_errors_sq = 0f64;
        let mut frame_errors = 0usize;
        let mut iterations = 0usize;
        let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); m];
        'batches: while blocks < cfg.stop.max_blocks {
            let start = blocks;
            let end = (start + BATCH).min(cfg.stop.max_blocks);
            let outcomes: Vec<BlockOutcome> = (start..end)
                .into_par_iter()
                .map_init(
                    || Decoder::new(&cfg.code),
                    |decoder, b| ctx.run_block(cfg, decoder, mix_seed(cfg.seed, point as u64, b as u64)),
                )
                .collect::<Result<_>>()?;
            for o in outcomes {
                blocks += 1;
                bit_errors += o.bit_errors as u64;
                bit_errors_sq += (o.bit_errors as f64).powi(2);
                frame_errors += usize::from(o.frame_error);
                iterations += o.iterations;
                for (i, v) in o.metrics {
                    if pooled[i].len() < cfg.leakage_samples {
                        pooled[i].push(v);
                    }
                }
                if frame_errors >= cfg.stop.target_frame_errors {
                    break 'batches;
                }
            }
        }
        let bf = blocks as f64;
        let mean = bit_errors as f64 / bf;
        let var = if blocks > 1 {
            ((bit_errors_sq / bf - mean * mean) * bf / (bf - 1.0)).max(0.0)
        } else {
            0.0
        };
        let leakage = (cfg.scheme == Scheme::Rrs).then(|| {
            pooled
                .iter_mut()
                .map(|v| {
                    if v.is_empty() {
                        KsOutcome {
                            statistic: 0.0,
                            p_value: 1.0,
                            samples: 0,
                        }
                    } else {
                        ks_uniform(v)
                    }
                })
                .collect()
        });
        records.push(BerRecord {
            scheme: cfg.scheme,
            snr_es_db: es,
            snr_eb_db: cfg.eb_n0_db(es),
            blocks,
            bit_errors,
            frame_errors,
            ber: bit_errors as f64 / (bf * n as f64),
            fer: frame_errors as f64 / bf,
            mean_iters: iterations as f64 / bf,
            ber_std_error: (var / bf).sqrt() / n as f64,
            leakage,
        });
    }
    Ok(records)
}

/// Runs a campaign on a dedicated pool of `jobs` threads.
pub fn run_campaign_with_jobs(cfg: &SimConfig, jobs: usize) -> Result<Vec<BerRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::SimConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_campaign(cfg))
}

/// SNR (dB) at which a BER curve crosses `target`, by linear interpolation
/// of `log10(BER)` between neighbouring points. `None` when the curve
/// never brackets the target.
pub fn snr_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    points.windows(2).find_map(|w| {
        let (s0, b0) = w[0];
        let (s1, b1) = w[1];
        if b0 <= 0.0 || b1 <= 0.0 {
            return None;
        }
        let (l0, l1) = (b0.log10(), b1.log10());
        if (l0 - lt) * (l1 - lt) <= 0.0 && l0 != l1 {
            Some(s0 + (lt - l0) * (s1 - s0) / (l1 - l0))
        } else {
            None
        }
    })
}
