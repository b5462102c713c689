//! Command-line interface.
//!
//! Exit codes: 0 on success, 2 for input or configuration errors (including
//! flag parsing), 1 for internal failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairchain_core::counterfactual::{headroom_sweep, improved_system, CounterfactualSpec, SubsetSelection, Target};
use fairchain_core::datagen;
use fairchain_core::fixes::{apply_fix, FixedValues};
use fairchain_core::metrics::{exposure_gap, gap_curve, pairwise_gap_with, random_order_reference, TieCredit};
use fairchain_core::model::{compose, rank, FixConfig, FixMethod, Group, ScoredDataset, Side, TiePolicy, Utility};

use crate::error::{Error, Result};
use crate::ingest::{self, ScoreTableSchema, Truncation, GERMAN_COMPONENTS};
use crate::report::{self, AuditReport, Config, ExposureRow, PairwiseRow};

#[derive(Debug, Parser)]
#[command(
    name = "fairchain",
    version,
    about = "Fairness audits for ranking systems that multiply component scores"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exposure and pairwise gaps of every component and of the composite.
    Audit(AuditArgs),
    /// Write the dataset with fixed components substituted.
    Fix(FixCommandArgs),
    /// Fairness improvement from fixing each component subset.
    Headroom(HeadroomArgs),
    /// Generate a synthetic dataset or a built-in fixture.
    Synth(SynthArgs),
    /// Exposure gap of every top-t prefix, optionally against random orderings.
    Curve(CurveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Standard score CSV.
    Csv,
    /// UCI `german.data`.
    German,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Exposure,
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UtilityKind {
    /// `rank^-w`.
    Power,
    /// `1 / log2(1 + rank)`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TiesArg {
    RankShare,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CreditArg {
    /// Tied pairs count as incorrect.
    Strict,
    /// Tied pairs count as half correct.
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EqualizeMode {
    FileOrder,
    TopComposite,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthDataset {
    /// Independent Gaussian components.
    S1,
    /// Group B's first component anti-correlated with its second.
    S2,
    /// Log-normal components with equal group medians.
    LogGaussian,
    /// Labeled sigmoid scores; group B's clicks separate less well.
    Labeled,
    Motivating,
    Epsilon,
    NormalizationFailure,
    Pairwise,
}

/// `--top-n`: a prefix length or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopN(pub Option<usize>);

fn parse_top_n(s: &str) -> std::result::Result<TopN, String> {
    if s == "all" {
        return Ok(TopN(None));
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected a positive integer or `all`, got `{s}`")),
        Ok(n) => Ok(TopN(Some(n))),
    }
}

impl std::fmt::Display for TopN {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
    pub format: InputFormat,
    /// Shrink the larger group to the size of the smaller one.
    #[arg(long)]
    pub equalize_groups: bool,
    /// Which members of the larger group --equalize-groups keeps.
    #[arg(long, value_enum, default_value_t = EqualizeMode::FileOrder)]
    pub equalize_mode: EqualizeMode,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    #[arg(long, env = "FAIRCHAIN_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Metric to evaluate; audit reports both when omitted.
    #[arg(long, value_enum)]
    pub metric: Option<MetricKind>,
    #[arg(long, value_enum, default_value_t = UtilityKind::Power)]
    pub utility: UtilityKind,
    /// Exponent of the power utility.
    #[arg(long, default_value_t = 0.65)]
    pub w: f64,
    #[arg(long, default_value = "all", value_parser = parse_top_n)]
    pub top_n: TopN,
    #[arg(long, value_enum, default_value_t = TiesArg::RankShare)]
    pub ties: TiesArg,
    #[arg(long, value_enum, default_value_t = CreditArg::Strict)]
    pub tie_credit: CreditArg,
}

#[derive(Debug, Clone, Args)]
pub struct FixArgs {
    /// `<k>=<method>[,...]`, where k is a component index, a component name
    /// or `all`. Methods: none, marginal-match, conditional-match,
    /// delta-match, normalize, constant-p. Later entries override earlier.
    #[arg(long = "fix", value_name = "K=METHOD[,...]")]
    pub fix: Vec<String>,
    /// Probability used by constant-p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Group whose distribution matching fixes map onto; defaults to the
    /// lexicographically first group tag.
    #[arg(long)]
    pub reference_group: Option<String>,
    /// Add `1 + |min|` to every fixed component.
    #[arg(long)]
    pub positivity_shift: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub fix: FixArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Emit::Markdown)]
    pub emit: Emit,
}

#[derive(Debug, Clone, Args)]
pub struct FixCommandArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fix: FixArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HeadroomArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub fix: FixArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// `singletons`, `all`, or subsets like `0+1,2` (indices or names).
    #[arg(long, default_value = "singletons")]
    pub subsets: String,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub dataset: SynthDataset,
    /// Items per group.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Components of the labeled generator.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub fix: FixArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Prefix lengths `start:end:step`, end inclusive; every position when
    /// omitted.
    #[arg(long)]
    pub t: Option<String>,
    /// Random orderings averaged for the `random_gap` column; 0 omits it.
    #[arg(long, default_value_t = 0)]
    pub random_runs: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match panic::catch_unwind(AssertUnwindSafe(|| run(&cli))) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("fairchain: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("fairchain: internal error");
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Fix(a) => cmd_fix(a),
        Command::Headroom(a) => cmd_headroom(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Curve(a) => cmd_curve(a),
    }
}

fn write_output(output: &OutputArgs, bytes: &[u8]) -> Result<()> {
    match &output.output {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// A loaded dataset with its component names.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: ScoredDataset,
    pub names: Vec<String>,
}

/// Loads `input`, equalizing group sizes when requested.
pub fn load(input: &InputArgs, seed: u64) -> Result<Loaded> {
    let (dataset, names) = match input.format {
        InputFormat::Csv => {
            let schema = ScoreTableSchema::infer(&input.input)?;
            let dataset = ingest::load_csv(&input.input, &schema)?;
            (dataset, schema.scores)
        }
        InputFormat::German => (
            ingest::load_german_credit(&input.input)?,
            GERMAN_COMPONENTS.iter().map(|s| s.to_string()).collect(),
        ),
    };
    let dataset = if input.equalize_groups {
        let mode = match input.equalize_mode {
            EqualizeMode::FileOrder => Truncation::FileOrder,
            EqualizeMode::TopComposite => Truncation::TopComposite,
            EqualizeMode::Random => Truncation::Random { seed },
        };
        let composite = compose(&dataset, &[])?;
        ingest::equalize_groups(&dataset, composite.values(), mode)?
    } else {
        dataset
    };
    Ok(Loaded { dataset, names })
}

fn component_index(key: &str, names: &[String]) -> Result<usize> {
    if let Some(i) = names.iter().position(|n| n == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < names.len() => Ok(i),
        _ => Err(Error::Config(format!(
            "unknown component `{key}` (K = {}, names: {})",
            names.len(),
            names.join(", ")
        ))),
    }
}

fn parse_method(name: &str, p: Option<f64>) -> Result<FixMethod> {
    Ok(match name {
        "none" => FixMethod::None,
        "marginal-match" => FixMethod::MarginalMatch,
        "conditional-match" => FixMethod::ConditionalMatch,
        "delta-match" => FixMethod::DeltaMatch,
        "normalize" => FixMethod::Normalize,
        "constant-p" => FixMethod::ConstantP(p.ok_or_else(|| Error::Config("constant-p needs --p".into()))?),
        other => return Err(Error::Config(format!("unknown fix method `{other}`"))),
    })
}

/// Per-component methods from `--fix` entries.
pub fn parse_fixes(specs: &[String], names: &[String], p: Option<f64>) -> Result<Vec<FixMethod>> {
    let mut methods = vec![FixMethod::None; names.len()];
    for entry in specs.iter().flat_map(|s| s.split(',')) {
        let (key, method) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("fix entry `{entry}` is not <k>=<method>")))?;
        let method = parse_method(method.trim(), p)?;
        match key.trim() {
            "all" => methods.iter_mut().for_each(|m| *m = method),
            k => methods[component_index(k, names)?] = method,
        }
    }
    Ok(methods)
}

fn reference_side(dataset: &ScoredDataset, tag: Option<&str>) -> Result<Side> {
    match tag {
        Some(t) => Ok(dataset.side_of(&Group::from(t))?),
        None => {
            let [a, b] = dataset.groups();
            Ok(if a.0 <= b.0 { Side::A } else { Side::B })
        }
    }
}

fn fix_config(args: &FixArgs, loaded: &Loaded) -> Result<FixConfig> {
    let methods = parse_fixes(&args.fix, &loaded.names, args.p)?;
    let config = FixConfig {
        methods,
        reference: reference_side(&loaded.dataset, args.reference_group.as_deref())?,
        positivity_shift: args.positivity_shift,
    };
    config.validate(&loaded.dataset)?;
    Ok(config)
}

fn utility(m: &MetricArgs) -> Utility {
    match m.utility {
        UtilityKind::Power => Utility::Power { w: m.w },
        UtilityKind::Log => Utility::LogDiscount,
    }
}

fn ties(m: &MetricArgs) -> TiePolicy {
    match m.ties {
        TiesArg::RankShare => TiePolicy::RankShare,
        TiesArg::Random => TiePolicy::SeededRandom,
    }
}

fn credit(m: &MetricArgs) -> TieCredit {
    match m.tie_credit {
        CreditArg::Strict => TieCredit::Strict,
        CreditArg::Half => TieCredit::Half,
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

fn echo_input(c: &mut Config, input: &InputArgs) {
    c.push("input", input.input.display())
        .push("format", value_name(&input.format))
        .push("equalize_groups", input.equalize_groups);
    if input.equalize_groups {
        c.push("equalize_mode", value_name(&input.equalize_mode));
    }
}

fn echo_metric(c: &mut Config, m: &MetricArgs, seed: u64) {
    c.push("metric", m.metric.as_ref().map_or("auto".into(), value_name))
        .push("utility", utility(m))
        .push("top_n", m.top_n)
        .push("ties", value_name(&m.ties))
        .push("tie_credit", value_name(&m.tie_credit))
        .push("seed", seed);
}

fn echo_fixes(c: &mut Config, fixes: &FixConfig, loaded: &Loaded) {
    let list: Vec<String> = fixes
        .methods
        .iter()
        .zip(&loaded.names)
        .map(|(m, n)| format!("{n}={m}"))
        .collect();
    c.push("fixes", list.join(","))
        .push("reference_group", loaded.dataset.group(fixes.reference))
        .push("positivity_shift", fixes.positivity_shift);
}

fn echo_dataset(c: &mut Config, d: &ScoredDataset) {
    c.push("group_a", d.group(Side::A))
        .push("group_b", d.group(Side::B))
        .push("n_a", d.group_size(Side::A))
        .push("n_b", d.group_size(Side::B));
}

/// Per-item columns after fixing; `None` entries are pair-level fixes.
fn fixed_columns(loaded: &Loaded, fixes: &FixConfig) -> Result<Vec<FixedValues>> {
    (0..loaded.dataset.k())
        .map(|k| {
            apply_fix(
                &loaded.dataset,
                k,
                fixes.methods[k],
                fixes.reference,
                fixes.positivity_shift,
            )
            .map(|f| f.values)
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

/// Builds the audit report without writing it.
pub fn audit(args: &AuditArgs) -> Result<AuditReport> {
    let seed = args.seed.seed;
    let loaded = load(&args.input, seed)?;
    let d = &loaded.dataset;
    let fixes = fix_config(&args.fix, &loaded)?;
    let m = &args.metric;
    let want_exposure = m.metric != Some(MetricKind::Pairwise);
    let want_pairwise = match m.metric {
        Some(MetricKind::Pairwise) => {
            if !d.has_labels() {
                return Err(fairchain_core::Error::LabelsRequired("the pairwise gap").into());
            }
            true
        }
        Some(MetricKind::Exposure) => false,
        None => d.has_labels(),
    };
    let u = utility(m);
    u.validate()?;

    let mut config = Config::new("audit");
    echo_input(&mut config, &args.input);
    echo_metric(&mut config, m, seed);
    echo_fixes(&mut config, &fixes, &loaded);
    echo_dataset(&mut config, d);

    let columns = fixed_columns(&loaded, &fixes)?;
    let per_item: Vec<Option<&[f64]>> = columns
        .iter()
        .map(|v| match v {
            FixedValues::PerItem(s) => Some(s.as_slice()),
            FixedValues::PairLevel(_) => None,
        })
        .collect();
    let mut notes = Vec::new();
    let composite = if per_item.iter().all(Option::is_some) {
        let overrides: Vec<(usize, &[f64])> = per_item.iter().enumerate().map(|(k, s)| (k, s.unwrap())).collect();
        Some(compose(d, &overrides)?.into_inner())
    } else {
        notes.push("Delta matching is pair-level: affected components have no item scores, so their exposure rows and the composite rows are omitted.".to_string());
        None
    };

    let mut exposure = Vec::new();
    if want_exposure {
        for (k, scores) in per_item.iter().enumerate() {
            if let Some(s) = scores {
                let r = rank(s, ties(m), Some(seed))?;
                exposure.push(ExposureRow {
                    subject: loaded.names[k].clone(),
                    report: exposure_gap(&r, d, u, m.top_n.0)?,
                });
            }
        }
        if let Some(c) = &composite {
            let r = rank(c, ties(m), Some(seed))?;
            exposure.push(ExposureRow {
                subject: "composite".into(),
                report: exposure_gap(&r, d, u, m.top_n.0)?,
            });
        }
    }
    let mut pairwise = Vec::new();
    if want_pairwise {
        for (k, values) in columns.iter().enumerate() {
            let report = match values {
                FixedValues::PerItem(s) => pairwise_gap_with(s, d, credit(m))?,
                FixedValues::PairLevel(t) => t.pairwise_report(credit(m))?,
            };
            pairwise.push(PairwiseRow {
                subject: loaded.names[k].clone(),
                report,
            });
        }
        if let Some(c) = &composite {
            pairwise.push(PairwiseRow {
                subject: "composite".into(),
                report: pairwise_gap_with(c, d, credit(m))?,
            });
        }
    }
    Ok(AuditReport {
        config,
        groups: [d.group(Side::A).0.clone(), d.group(Side::B).0.clone()],
        group_sizes: [d.group_size(Side::A), d.group_size(Side::B)],
        exposure,
        pairwise,
        notes,
    })
}

fn cmd_audit(args: &AuditArgs) -> Result<()> {
    let report = audit(args)?;
    let text = match args.emit {
        Emit::Markdown => report.to_markdown(),
        Emit::Csv => report.to_csv(),
    };
    write_output(&args.output, text.as_bytes())
}

fn cmd_fix(args: &FixCommandArgs) -> Result<()> {
    if args.fix.fix.is_empty() {
        return Err(Error::Config("fix needs at least one --fix entry".into()));
    }
    let loaded = load(&args.input, args.seed.seed)?;
    let fixes = fix_config(&args.fix, &loaded)?;
    let mut dataset = loaded.dataset.clone();
    for (k, values) in fixed_columns(&loaded, &fixes)?.into_iter().enumerate() {
        match values {
            FixedValues::PerItem(v) => {
                if fixes.methods[k] != FixMethod::None {
                    dataset = dataset.with_column(k, v)?;
                }
            }
            FixedValues::PairLevel(_) => {
                return Err(fairchain_core::Error::UnsupportedFix("delta-match").into());
            }
        }
    }
    let mut config = Config::new("fix");
    echo_input(&mut config, &args.input);
    echo_fixes(&mut config, &fixes, &loaded);
    config.push("seed", args.seed.seed);
    for line in config.comment_lines() {
        eprintln!("# {line}");
    }
    let mut bytes = Vec::new();
    ingest::write_csv(&mut bytes, &dataset, &loaded.names, &config.comment_lines())?;
    write_output(&args.output, &bytes)
}

fn parse_subsets(text: &str, names: &[String]) -> Result<SubsetSelection> {
    match text {
        "singletons" => Ok(SubsetSelection::Singletons),
        "all" => Ok(SubsetSelection::All),
        list => list
            .split(',')
            .map(|s| s.split('+').map(|c| component_index(c.trim(), names)).collect())
            .collect::<Result<Vec<Vec<usize>>>>()
            .map(SubsetSelection::Explicit),
    }
}

fn target(m: &MetricArgs, seed: u64) -> Target {
    match m.metric {
        Some(MetricKind::Pairwise) => Target::Pairwise { credit: credit(m) },
        _ => Target::Exposure {
            utility: utility(m),
            top_n: m.top_n.0,
            ties: ties(m),
            seed: Some(seed),
        },
    }
}

fn cmd_headroom(args: &HeadroomArgs) -> Result<()> {
    let seed = args.seed.seed;
    let loaded = load(&args.input, seed)?;
    let mut fix_args = args.fix.clone();
    if fix_args.fix.is_empty() {
        fix_args.fix.push("all=marginal-match".into());
    }
    let fixes = fix_config(&fix_args, &loaded)?;
    let selection = parse_subsets(&args.subsets, &loaded.names)?;
    let spec = CounterfactualSpec {
        target: target(&args.metric, seed),
        fixes,
    };
    let table = headroom_sweep(&loaded.dataset, &spec, &selection)?;

    let mut config = Config::new("headroom");
    echo_input(&mut config, &args.input);
    let mut metric = args.metric.clone();
    metric.metric.get_or_insert(MetricKind::Exposure);
    echo_metric(&mut config, &metric, seed);
    echo_fixes(&mut config, &spec.fixes, &loaded);
    echo_dataset(&mut config, &loaded.dataset);
    config.push("subsets", &args.subsets);
    let text = match args.emit {
        Emit::Csv => report::headroom_csv(&table, &loaded.names, &config),
        Emit::Markdown => report::headroom_markdown(&table, &loaded.names, &config),
    };
    write_output(&args.output, text.as_bytes())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let seed = args.seed.seed;
    let n = args.n;
    let dataset = match args.dataset {
        SynthDataset::S1 => datagen::generate(&datagen::synthetic_1_spec(n, seed))?,
        SynthDataset::S2 => datagen::generate(&datagen::synthetic_2_spec(n, seed))?,
        SynthDataset::LogGaussian => datagen::symmetric_log_gaussian(n, seed)?,
        SynthDataset::Labeled => datagen::gen_labeled(&datagen::LabeledSpec::unequal_separation(n, args.k, seed))?,
        SynthDataset::Motivating => datagen::motivating_example(),
        SynthDataset::Epsilon => datagen::epsilon_example(1.0, 0.1)?,
        SynthDataset::NormalizationFailure => datagen::normalization_failure(),
        SynthDataset::Pairwise => datagen::pairwise_counterexample(),
    };
    let names: Vec<String> = (0..dataset.k()).map(|k| format!("score_{k}")).collect();
    let mut config = Config::new("synth");
    config
        .push("dataset", value_name(&args.dataset))
        .push("n", n)
        .push("seed", seed);
    if args.dataset == SynthDataset::Labeled {
        config.push("k", args.k);
    }
    let mut bytes = Vec::new();
    ingest::write_csv(&mut bytes, &dataset, &names, &config.comment_lines())?;
    write_output(&args.output, &bytes)
}

/// Positions from `start:end:step`, end inclusive.
pub fn parse_positions(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("--t expects start:end:step, got `{spec}`")))?;
    let [start, end, step] = nums[..] else {
        return Err(Error::Config(format!("--t expects start:end:step, got `{spec}`")));
    };
    if start == 0 || step == 0 || end < start {
        return Err(Error::Config(format!(
            "--t needs 1 <= start <= end and step >= 1, got `{spec}`"
        )));
    }
    Ok((start..=end).step_by(step).collect())
}

fn cmd_curve(args: &CurveArgs) -> Result<()> {
    let seed = args.seed.seed;
    if args.metric.metric == Some(MetricKind::Pairwise) {
        return Err(Error::Config("curve supports the exposure metric only".into()));
    }
    let loaded = load(&args.input, seed)?;
    let d = &loaded.dataset;
    let fixes = fix_config(&args.fix, &loaded)?;
    let fixed: Vec<usize> = (0..d.k()).filter(|&k| fixes.methods[k] != FixMethod::None).collect();
    let composite = if fixed.is_empty() {
        compose(d, &[])?
    } else {
        improved_system(d, &fixed, &fixes)?
    };
    let positions = match &args.t {
        Some(t) => parse_positions(t)?,
        None => (1..=d.len()).collect(),
    };
    let u = utility(&args.metric);
    let mut curve = gap_curve(composite.values(), d, u, &positions, ties(&args.metric), Some(seed))?;
    if args.random_runs > 0 {
        let reference = random_order_reference(d, u, &positions, args.random_runs, seed)?;
        curve = curve.with_reference(&reference)?;
    }
    let mut config = Config::new("curve");
    echo_input(&mut config, &args.input);
    echo_metric(&mut config, &args.metric, seed);
    echo_fixes(&mut config, &fixes, &loaded);
    echo_dataset(&mut config, d);
    config
        .push("t", args.t.as_deref().unwrap_or("all"))
        .push("random_runs", args.random_runs);
    write_output(&args.output, report::curve_csv(&curve, &config).as_bytes())
}

/// Reads the output of `fix` or `synth` back, for tests and scripting.
pub fn load_score_file(path: &Path) -> Result<Loaded> {
    let schema = ScoreTableSchema::infer(path)?;
    Ok(Loaded {
        dataset: ingest::load_csv(path, &schema)?,
        names: schema.scores,
    })
}
