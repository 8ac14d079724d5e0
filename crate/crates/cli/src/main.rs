use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rrs::ldpc::{expand_ira, peg, DVBS2_GROUP};
use rrs::sim::{self, Scheme, SimConfig, SimSpec, StopRule};
use rrs::skr::{self, SweepSpec};
use rrs::transform::equivalence_classes;
use rrs::validate::{self, Fault, ValidateOptions};
use rrs::{ChannelModel, Configuration, Constellation, NoiseModel, SofteningTransform, ThresholdStrategy};

/// Codes longer than this need `--long` in `ber`.
const LONG_RUN_BITS: usize = 20_000;

#[derive(Parser, Debug)]
#[command(name = "rrs", version, about = "Reverse reconciliation with soft information for PAM over AWGN")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Secret-key-rate sweep as CSV.
    Skr(SkrArgs),
    /// Monte-Carlo BER campaign as CSV.
    Ber(BerArgs),
    /// Thresholds, decision probabilities, configuration classes and
    /// transform samples.
    Inspect(InspectArgs),
    /// Run the invariant suite; exits non-zero on any failure.
    Validate(ValidateArgs),
    /// Write an alist parity-check matrix.
    GenCode(GenCodeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Modulation {
    Pam2,
    Pam4,
    Pam8,
}

impl Modulation {
    fn constellation(self) -> Constellation {
        let order = match self {
            Modulation::Pam2 => 2,
            Modulation::Pam4 => 4,
            Modulation::Pam8 => 8,
        };
        Constellation::uniform_pam(order).expect("supported order")
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Fixed,
    Adaptive,
    Both,
}

impl StrategyArg {
    fn strategies(self) -> Vec<ThresholdStrategy> {
        match self {
            StrategyArg::Fixed => vec![ThresholdStrategy::Fixed],
            StrategyArg::Adaptive => vec![ThresholdStrategy::Adaptive],
            StrategyArg::Both => vec![ThresholdStrategy::Fixed, ThresholdStrategy::Adaptive],
        }
    }

    fn single(self) -> Result<ThresholdStrategy, String> {
        match self {
            StrategyArg::Fixed => Ok(ThresholdStrategy::Fixed),
            StrategyArg::Adaptive => Ok(ThresholdStrategy::Adaptive),
            StrategyArg::Both => Err("this command takes a single strategy".into()),
        }
    }
}

#[derive(Args, Debug)]
struct SkrArgs {
    #[arg(long = "mod", value_enum)]
    modulation: Modulation,
    #[arg(long, value_enum, default_value = "adaptive")]
    strategy: StrategyArg,
    /// Comma-separated masks, `classes` (one representative per
    /// equivalence class), `all-classes` (same) or `all`.
    #[arg(long, default_value = "classes")]
    configs: String,
    /// Es/N0 grid in dB: `start:step:stop` or a comma list.
    #[arg(long, default_value = "-5:0.25:15", allow_hyphen_values = true)]
    esn0: String,
    /// Code rate used for the `eb_n0_db_coderate` column.
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BerArgs {
    /// `key = value` campaign file; flags given on the command line override it.
    #[arg(long)]
    config_file: Option<PathBuf>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long = "mod", value_enum)]
    modulation: Option<Modulation>,
    /// alist file; relative paths fall back to the fixture directory.
    #[arg(long)]
    code: Option<PathBuf>,
    /// Configuration mask for RRS (default: alternating).
    #[arg(long)]
    config: Option<u64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, allow_hyphen_values = true)]
    esn0: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_blocks: Option<usize>,
    #[arg(long)]
    target_errors: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Allow codes longer than 20000 bits (full DVB-S2 runs take hours).
    #[arg(long)]
    long: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long = "mod", value_enum)]
    modulation: Modulation,
    #[arg(long, value_enum, default_value = "both")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    esn0: f64,
    /// Print only the configuration equivalence classes.
    #[arg(long)]
    classes: bool,
    /// Emit this many (y, decision, n) transform samples per strategy.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Configuration mask for the transform samples (default: alternating).
    #[arg(long)]
    config: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    SquareMetric,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long = "mod", value_enum, default_value = "pam4")]
    modulation: Modulation,
    #[arg(long)]
    config: Option<u64>,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    esn0: f64,
    /// Smaller sample sizes and SNR sets.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Test hook: corrupt the disclosed metric to exercise the failure path.
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CodeKind {
    /// Progressive edge growth, constant variable degree.
    Peg,
    /// DVB-S2 style expansion of an address table.
    Dvbs2,
}

#[derive(Args, Debug)]
struct GenCodeArgs {
    #[arg(long, value_enum)]
    kind: CodeKind,
    /// Block length.
    #[arg(long)]
    n: usize,
    /// Check count (peg only).
    #[arg(long)]
    m: Option<usize>,
    /// Variable degree (peg only).
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Information length (dvbs2 only).
    #[arg(long)]
    k: Option<usize>,
    /// Address table file, one row per group of information bits (dvbs2 only).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Information bits per table row (dvbs2 only).
    #[arg(long, default_value_t = DVBS2_GROUP)]
    group: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: rrs::Error| e.to_string())
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<rrs::Error> for Failure {
    fn from(e: rrs::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn parse_configs(spec: &str, order: usize) -> Result<Vec<u64>, Failure> {
    match spec.trim() {
        "classes" | "all-classes" => Ok(equivalence_classes(order)?
            .iter()
            .map(|c| c.representative)
            .collect()),
        "all" => Ok((0..1u64 << order).collect()),
        list => list
            .split(',')
            .map(|t| {
                let mask: u64 = t
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("invalid configuration '{}'", t.trim())))?;
                Configuration::new(mask, order)
                    .map(|c| c.mask())
                    .map_err(|e| Failure::Usage(e.to_string()))
            })
            .collect(),
    }
}

fn grid(spec: &str) -> Result<Vec<f64>, Failure> {
    rrs::snr::parse_grid(spec).map_err(|e| Failure::Usage(format!("--esn0: {e}")))
}

fn cmd_skr(args: SkrArgs) -> Result<(), Failure> {
    let constellation = args.modulation.constellation();
    if !(args.rate > 0.0 && args.rate <= 1.0) {
        return Err(Failure::Usage(format!("--rate must be in (0, 1], got {}", args.rate)));
    }
    let spec = SweepSpec {
        configs: parse_configs(&args.configs, constellation.order())?,
        constellation,
        es_n0_db: grid(&args.esn0)?,
        strategies: args.strategy.strategies(),
        code_rate: args.rate,
    };
    let outcome = skr::sweep(&spec)?;
    emit(args.out.as_deref(), &skr::to_csv(&outcome.points))?;
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        for (row, e) in &outcome.failures {
            eprintln!("rrs: row {} is a partial result: {e}", row + 1);
        }
        Err(Failure::Runtime(format!(
            "{} of {} rows did not converge",
            outcome.failures.len(),
            outcome.points.len()
        )))
    }
}

fn cmd_ber(args: BerArgs) -> Result<(), Failure> {
    let (mut spec, base) = match &args.config_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let spec = SimSpec::parse(&text)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (Some(spec), base)
        }
        None => (None, PathBuf::from(".")),
    };
    let required = |what: &str| Failure::Usage(format!("--{what} is required without --config-file"));
    let mut s = match spec.take() {
        Some(s) => s,
        None => SimSpec {
            modulation: String::new(),
            code: PathBuf::new(),
            scheme: args.scheme.ok_or_else(|| required("scheme"))?,
            configuration: None,
            strategy: ThresholdStrategy::Adaptive,
            es_n0_db: Vec::new(),
            seed: 0,
            stop: StopRule::default(),
            max_iter: rrs::ldpc::DEFAULT_MAX_ITER,
        },
    };
    let from_file = args.config_file.is_some();
    if let Some(m) = args.modulation {
        s.modulation = format!("{m:?}").to_ascii_lowercase();
    } else if !from_file {
        return Err(required("mod"));
    }
    if let Some(c) = args.code {
        s.code = c;
    } else if !from_file {
        return Err(required("code"));
    }
    if let Some(e) = args.esn0 {
        s.es_n0_db = grid(&e)?;
    } else if !from_file {
        return Err(required("esn0"));
    }
    if let Some(v) = args.scheme {
        s.scheme = v;
    }
    if let Some(v) = args.config {
        s.configuration = Some(v);
    }
    if let Some(v) = args.strategy {
        s.strategy = v.single().map_err(Failure::Usage)?;
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.max_blocks {
        s.stop.max_blocks = v;
    }
    if let Some(v) = args.target_errors {
        s.stop.target_frame_errors = v;
    }
    if let Some(v) = args.max_iter {
        s.max_iter = v;
    }
    let cfg: SimConfig = s.into_config(&base)?;
    if cfg.code().n() > LONG_RUN_BITS && !args.long {
        return Err(Failure::Usage(format!(
            "code length {} exceeds {LONG_RUN_BITS}; pass --long to run it",
            cfg.code().n()
        )));
    }
    let records = sim::run_campaign(&cfg)?;
    // One KS test per decision; Bonferroni keeps the family level at 1%.
    let alpha = 0.01 / cfg.constellation().order() as f64;
    for r in &records {
        if r.leakage_passes(alpha) == Some(false) {
            eprintln!("rrs: warning: metric uniformity check failed at {} dB", r.snr_es_db);
        }
    }
    emit(args.out.as_deref(), &sim::ber_csv(&records))
}

fn cmd_inspect(args: InspectArgs) -> Result<(), Failure> {
    let c = args.modulation.constellation();
    let m = c.order();
    let mut out = String::new();
    if !args.classes {
        let sigma = rrs::snr::sigma_for_es_n0(&c, args.esn0);
        let _ = writeln!(out, "modulation: pam{m}");
        let _ = writeln!(out, "es_n0_db: {}", args.esn0);
        let _ = writeln!(out, "sigma: {sigma}");
        let _ = writeln!(out, "points: {}", join(c.points()));
        let labels: Vec<String> = (0..m).map(|i| c.label_string(i)).collect();
        let _ = writeln!(out, "labels: {}", labels.join(" "));
        for strategy in args.strategy.strategies() {
            let model = ChannelModel::with_strategy(c.clone(), NoiseModel::new(sigma)?, strategy)?;
            let _ = writeln!(out, "strategy {strategy}:");
            let _ = writeln!(out, "  thresholds: {}", join(model.grid().thresholds()));
            let _ = writeln!(out, "  decision_probs: {}", join(model.decision_probs()));
        }
    }
    if m <= 16 {
        let _ = writeln!(out, "classes (representative: flip mirror reverse | members):");
        for class in equivalence_classes(m)? {
            let r = Configuration::new(class.representative, m)?;
            let members: Vec<String> = class.members.iter().map(u64::to_string).collect();
            let _ = writeln!(
                out,
                "  C[{}]: {} {} {} | {}",
                r.mask(),
                r.flip().mask(),
                r.mirror().mask(),
                r.reverse().mask(),
                members.join(" ")
            );
        }
    }
    if args.samples > 0 && !args.classes {
        let config = match args.config {
            Some(mask) => Configuration::new(mask, m).map_err(|e| Failure::Usage(e.to_string()))?,
            None => Configuration::alternating(m),
        };
        let sigma = rrs::snr::sigma_for_es_n0(&c, args.esn0);
        let reach = c.points()[m - 1] + 3.0 * sigma;
        let _ = writeln!(out, "samples:");
        let _ = writeln!(out, "strategy,config,y,decision,n");
        for strategy in args.strategy.strategies() {
            let model = ChannelModel::with_strategy(c.clone(), NoiseModel::new(sigma)?, strategy)?;
            let t = SofteningTransform::new(model, config)?;
            for k in 0..args.samples {
                let y = if args.samples == 1 {
                    0.0
                } else {
                    -reach + 2.0 * reach * k as f64 / (args.samples - 1) as f64
                };
                let (i, n) = t.forward(y);
                let _ = writeln!(out, "{strategy},{},{y},{i},{n}", config.mask());
            }
        }
    }
    emit(None, &out)
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let c = args.modulation.constellation();
    let opts = ValidateOptions {
        order: c.order(),
        config: args
            .config
            .unwrap_or_else(|| Configuration::alternating(c.order()).mask()),
        es_n0_db: args.esn0,
        quick: args.quick,
        seed: args.seed,
        fault: args.inject_fault.map(|FaultArg::SquareMetric| Fault::SquareMetric),
    };
    Configuration::new(opts.config, opts.order).map_err(|e| Failure::Usage(e.to_string()))?;
    let report = validate::run(&opts)?;
    emit(None, &report.to_csv())?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Runtime("validation failed".into()))
    }
}

fn cmd_gen_code(args: GenCodeArgs) -> Result<(), Failure> {
    let code = match args.kind {
        CodeKind::Peg => {
            let m = args.m.ok_or_else(|| Failure::Usage("--m is required for peg".into()))?;
            peg(args.n, m, args.degree).map_err(|e| Failure::Usage(e.to_string()))?
        }
        CodeKind::Dvbs2 => {
            let k = args.k.ok_or_else(|| Failure::Usage("--k is required for dvbs2".into()))?;
            let table = args
                .table
                .ok_or_else(|| Failure::Usage("--table is required for dvbs2".into()))?;
            expand_ira(args.n, k, args.group, &std::fs::read_to_string(table)?)?
        }
    };
    emit(args.out.as_deref(), &code.to_alist())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("rrs: --jobs must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("rrs: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Skr(a) => cmd_skr(a),
        Command::Ber(a) => cmd_ber(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Validate(a) => cmd_validate(a),
        Command::GenCode(a) => cmd_gen_code(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("rrs: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("rrs: {msg}");
            ExitCode::from(2)
        }
    }
}
