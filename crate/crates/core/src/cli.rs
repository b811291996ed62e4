//! Command-line front end.
//!
//! Every command writes its outputs plus one [`RunManifest`]. Settings come
//! from built-in defaults, then an optional TOML file given with `--config`,
//! then command-line flags, each layer overriding the previous one. The
//! seed falls back to the `FBLMNN_SEED` environment variable when neither
//! the file nor the flags set it.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::{gen_zebra, load_csv, stratified_folds, LabelColumn, LabeledDataset, Standardizer, ZebraParams};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, write_table_csv, EvalConfig, EvalResult, Method, MethodKind};
use crate::feasibility::pair_weights;
use crate::linalg::SymMatrix;
use crate::manifest::RunManifest;
use crate::metric::Metric;
use crate::neighborhood::{build_plan, ImpostorMode};
use crate::solver::{fit, Mode, SolveReport, SolverConfig};

pub const SEED_ENV: &str = "FBLMNN_SEED";

#[derive(Debug, Parser)]
#[command(name = "fblmnn", version, about = "Feasibility-based large margin nearest neighbor metric learning")]
pub struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Learn a metric and write it with a training report.
    Train(TrainArgs),
    /// Cross-validate kNN under learned metrics.
    Eval(EvalArgs),
    /// Map points through the square root of a metric.
    Transform(TransformArgs),
    /// Export feasibility measures of every triplet and target pair.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Alternating two-class horizontal stripes in the plane.
    Zebra(ZebraArgs),
}

#[derive(Debug, Args)]
pub struct ZebraArgs {
    #[arg(long)]
    pub stripes: Option<usize>,
    #[arg(long)]
    pub per_stripe: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; the manifest goes next to it.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Clone, Default)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column, by 0-based index or header name [default: label].
    #[arg(long)]
    pub label_col: Option<String>,
    /// The first row is a header.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SolverArgs {
    /// Neighborhood size for targets and impostors.
    #[arg(long)]
    pub k: Option<usize>,
    /// Weight of the push term.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub passes: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative objective change that ends a pass.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Impostor selection: same-k-other-class or knn-window.
    #[arg(long)]
    pub impostors: Option<ImpostorMode>,
    /// Upper clamp for feasibility measures.
    #[arg(long)]
    pub r_cap: Option<f64>,
    /// Rescale pair weights to mean one.
    #[arg(long)]
    pub normalize_weights: bool,
    /// Measure feasibility in the coordinates of the current metric each pass.
    #[arg(long)]
    pub reweigh: bool,
    /// Threads used for objective and gradient accumulation.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// sp, mp or fb.
    #[arg(long)]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Learn on standardized features; the written metric applies to raw features.
    #[arg(long)]
    pub standardize: bool,
    /// Also write the per-pair and per-triplet feasibility weights (fb mode).
    #[arg(long)]
    pub emit_weights: bool,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated methods among knn, sp, mp, fb.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<MethodKind>>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Neighbors used by the classifier.
    #[arg(long)]
    pub k_classify: Option<usize>,
    /// Keep raw features instead of standardizing each training split.
    #[arg(long)]
    pub no_standardize: bool,
    /// Reduce to this many principal components per training split.
    #[arg(long)]
    pub pca: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Metric file written by `train`.
    #[arg(long)]
    pub metric: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Output CSV; the manifest goes next to it.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Build neighborhoods under this metric instead of the Euclidean one.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub impostors: Option<ImpostorMode>,
    #[arg(long)]
    pub r_cap: Option<f64>,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Contents of a `--config` file. Sections mirror the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub data: DataSection,
    pub solver: Map<String, Value>,
    pub eval: EvalSection,
    pub zebra: Map<String, Value>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub label_col: Option<LabelColumn>,
    pub header: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub methods: Option<Vec<MethodKind>>,
    pub folds: Option<usize>,
    pub k_classify: Option<usize>,
    pub standardize: Option<bool>,
    pub pca_dim: Option<usize>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Malformed(format!("config file: {e}")))
    }
}

/// Parses arguments and runs the selected command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::read(path)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Generate {
            kind: GenerateKind::Zebra(args),
        } => cmd_generate_zebra(args, &file),
        Command::Train(args) => cmd_train(args, &file),
        Command::Eval(args) => cmd_eval(args, &file),
        Command::Transform(args) => cmd_transform(args, &file),
        Command::Diagnose(args) => cmd_diagnose(args, &file),
    }
}

fn resolve_seed(flag: Option<u64>, file: &ConfigFile) -> Result<u64> {
    if let Some(seed) = flag.or(file.seed) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{SEED_ENV}={text:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Overlays `layer` onto `base`, rejecting keys `base` does not have.
fn overlay(base: &mut Map<String, Value>, layer: &Map<String, Value>, section: &str) -> Result<()> {
    for (key, value) in layer {
        if !base.contains_key(key) {
            return Err(Error::InvalidParameter(format!("unknown key {key:?} in [{section}]")));
        }
        base.insert(key.clone(), value.clone());
    }
    Ok(())
}

fn to_object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value) {
        Ok(Value::Object(map)) => map,
        _ => unreachable!("configuration structs serialize to objects"),
    }
}

fn solver_flags(args: &SolverArgs, workers: Option<usize>, seed: u64) -> Map<String, Value> {
    let mut map = Map::new();
    let mut put = |key: &str, value: Option<Value>| {
        if let Some(v) = value {
            map.insert(key.to_string(), v);
        }
    };
    put("k", args.k.map(Value::from));
    put("mu", args.mu.map(Value::from));
    put("passes", args.passes.map(Value::from));
    put("max_iterations", args.max_iter.map(Value::from));
    put("tolerance", args.tol.map(Value::from));
    put("impostor_mode", args.impostors.map(|m| Value::from(m.to_string())));
    put("r_cap", args.r_cap.map(Value::from));
    put("normalize_weights", args.normalize_weights.then_some(Value::Bool(true)));
    put("freeze_weights", args.reweigh.then_some(Value::Bool(false)));
    put("workers", workers.map(Value::from));
    put("seed", Some(Value::from(seed)));
    map
}

fn file_mode(file: &ConfigFile) -> Result<Option<Mode>> {
    match file.solver.get("mode") {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::InvalidParameter(format!("[solver] mode: {e}"))),
    }
}

/// Solver settings for `mode`: mode defaults, then the file, then flags.
///
/// A `passes` value from the file or flags is ignored for `sp` when
/// `force_single_pass` is set, which lets one evaluation mix modes.
fn solver_config(
    mode: Mode,
    args: &SolverArgs,
    file: &ConfigFile,
    seed: u64,
    force_single_pass: bool,
) -> Result<SolverConfig> {
    let mut merged = to_object(&SolverConfig::for_mode(mode));
    let mut from_file = file.solver.clone();
    from_file.remove("mode");
    if let Some(w) = file.workers {
        from_file.entry("workers").or_insert(Value::from(w));
    }
    overlay(&mut merged, &from_file, "solver")?;
    overlay(&mut merged, &solver_flags(args, args.workers, seed), "solver")?;
    merged.insert("mode".into(), serde_json::to_value(mode)?);
    if force_single_pass && mode == Mode::Sp {
        merged.insert("passes".into(), Value::from(1));
    }
    let cfg: SolverConfig = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::InvalidParameter(format!("solver settings: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DataSource {
    path: PathBuf,
    label_col: LabelColumn,
    header: bool,
}

fn data_source(args: &DataArgs, file: &ConfigFile) -> Result<DataSource> {
    let path = args
        .data
        .clone()
        .or_else(|| file.data.path.clone())
        .ok_or_else(|| Error::InvalidParameter("no input data (use --data)".into()))?;
    let label_col = match &args.label_col {
        Some(text) => text.parse().expect("label column parsing is infallible"),
        None => file
            .data
            .label_col
            .clone()
            .unwrap_or_else(|| LabelColumn::Name("label".into())),
    };
    Ok(DataSource {
        path,
        label_col,
        header: args.header || file.data.header.unwrap_or(false),
    })
}

fn load(source: &DataSource) -> Result<LabeledDataset> {
    load_csv(&source.path, &source.label_col, source.header)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn sibling_manifest(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.manifest.json"))
}

fn cmd_generate_zebra(args: &ZebraArgs, file: &ConfigFile) -> Result<()> {
    let mut merged = to_object(&ZebraParams::default());
    overlay(&mut merged, &file.zebra, "zebra")?;
    let mut flags = Map::new();
    let mut put = |key: &str, value: Option<Value>| {
        if let Some(v) = value {
            flags.insert(key.to_string(), v);
        }
    };
    put("stripes", args.stripes.map(Value::from));
    put("points_per_stripe", args.per_stripe.map(Value::from));
    put("stripe_length", args.length.map(Value::from));
    put("stripe_gap", args.gap.map(Value::from));
    put("jitter", args.jitter.map(Value::from));
    overlay(&mut merged, &flags, "zebra")?;
    let params: ZebraParams = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::InvalidParameter(format!("zebra settings: {e}")))?;
    let seed = resolve_seed(args.seed, file)?;

    let ds = gen_zebra(&params, seed)?;
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    ds.write_csv(BufWriter::new(File::create(&args.output)?))?;

    let mut manifest = RunManifest::new("generate zebra", &params, seed)?;
    manifest.add_artifact(&args.output);
    manifest.write(sibling_manifest(&args.output))?;
    log::info!("wrote {} points to {}", ds.n(), args.output.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrainSettings<'a> {
    data: &'a DataSource,
    standardize: bool,
    emit_weights: bool,
    solver: &'a SolverConfig,
}

#[derive(Debug, Serialize)]
struct TrainReport<'a> {
    data: &'a DataSource,
    n: usize,
    dim: usize,
    class_names: &'a [String],
    /// Per-feature scale divided out before learning, when standardizing.
    feature_scale: Option<Vec<f64>>,
    /// The written metric, valid on raw features.
    metric: Vec<Vec<f64>>,
    solve: &'a SolveReport,
}

/// Rewrites a metric learned on `z = (x − mean) / scale` as a metric on `x`.
fn unstandardize_metric(metric: &Metric, stats: &Standardizer) -> Result<Metric> {
    let inv: Vec<f64> = stats.std.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 1.0 }).collect();
    let m = metric.matrix();
    let raw = SymMatrix::from_fn(m.dim(), |i, j| inv[i] * m.get(i, j) * inv[j]);
    Metric::new(raw)
}

fn cmd_train(args: &TrainArgs, file: &ConfigFile) -> Result<()> {
    let source = data_source(&args.data, file)?;
    let seed = resolve_seed(args.solver.seed, file)?;
    let mode = match args.mode {
        Some(m) => m,
        None => file_mode(file)?.unwrap_or_default(),
    };
    let cfg = solver_config(mode, &args.solver, file, seed, false)?;
    let raw = load(&source)?;
    let (ds, stats) = if args.standardize {
        let stats = Standardizer::fit(&raw);
        (stats.apply(&raw)?, Some(stats))
    } else {
        (raw, None)
    };

    let report = fit(&ds, &cfg)?;
    let metric = match &stats {
        Some(s) => unstandardize_metric(&report.metric, s)?,
        None => report.metric.clone(),
    };

    create_dir(&args.output)?;
    let settings = TrainSettings {
        data: &source,
        standardize: args.standardize,
        emit_weights: args.emit_weights,
        solver: &cfg,
    };
    let mut manifest = RunManifest::new("train", &settings, seed)?;
    manifest.add_input(&source.path)?;

    let metric_path = args.output.join("metric.txt");
    metric.write(&metric_path)?;
    manifest.add_artifact(&metric_path);

    let report_path = args.output.join("report.json");
    write_json(
        &report_path,
        &TrainReport {
            data: &source,
            n: ds.n(),
            dim: ds.dim(),
            class_names: ds.class_names(),
            feature_scale: stats.as_ref().map(|s| s.std.clone()),
            metric: metric.matrix().rows(),
            solve: &report,
        },
    )?;
    manifest.add_artifact(&report_path);

    if args.emit_weights {
        match &report.last_weights {
            Some(weights) => {
                let pairs = args.output.join("weights_pairs.csv");
                weights.write_pairs_csv(BufWriter::new(File::create(&pairs)?))?;
                manifest.add_artifact(&pairs);
                let triplets = args.output.join("weights_triplets.csv");
                weights.write_triplets_csv(BufWriter::new(File::create(&triplets)?))?;
                manifest.add_artifact(&triplets);
            }
            None => log::warn!("--emit-weights has no effect in mode {mode}"),
        }
    }
    manifest.write(args.output.join("manifest.json"))?;
    log::info!(
        "mode {mode}: {} passes, final objective {:.6e}, converged {}",
        report.passes.len(),
        report.final_objective,
        report.converged
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalSettings<'a> {
    data: &'a DataSource,
    methods: &'a [MethodKind],
    folds: usize,
    eval: &'a EvalConfig,
    solvers: Vec<&'a SolverConfig>,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub dim: usize,
    pub class_names: Vec<String>,
    pub folds: usize,
    pub seed: u64,
    pub fold_sizes: Vec<usize>,
    pub results: Vec<EvalResult>,
}

fn cmd_eval(args: &EvalArgs, file: &ConfigFile) -> Result<()> {
    let source = data_source(&args.data, file)?;
    let seed = resolve_seed(args.solver.seed, file)?;
    let methods = args
        .methods
        .clone()
        .or_else(|| file.eval.methods.clone())
        .unwrap_or_else(|| vec![MethodKind::Knn, MethodKind::Sp, MethodKind::Mp, MethodKind::Fb]);
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods requested".into()));
    }
    let fold_count = args.folds.or(file.eval.folds).unwrap_or(10);
    let defaults = EvalConfig::default();
    let eval_cfg = EvalConfig {
        k_classify: args.k_classify.or(file.eval.k_classify).unwrap_or(defaults.k_classify),
        standardize: !args.no_standardize && file.eval.standardize.unwrap_or(defaults.standardize),
        pca_dim: args.pca.or(file.eval.pca_dim),
    };
    let resolved: Vec<Method> = methods
        .iter()
        .map(|kind| match kind.mode() {
            None => Ok(Method::Knn),
            Some(mode) => solver_config(mode, &args.solver, file, seed, true).map(Method::Lmnn),
        })
        .collect::<Result<_>>()?;

    let ds = load(&source)?;
    let folds = stratified_folds(&ds, fold_count, seed)?;
    let mut results = Vec::with_capacity(resolved.len());
    for method in &resolved {
        let result = cross_validate(&ds, &folds, method, &eval_cfg)?;
        log::info!("{}: mean accuracy {:.4} (sd {:.4})", result.method, result.mean, result.stddev);
        results.push(result);
    }

    create_dir(&args.output)?;
    let settings = EvalSettings {
        data: &source,
        methods: &methods,
        folds: fold_count,
        eval: &eval_cfg,
        solvers: resolved
            .iter()
            .filter_map(|m| match m {
                Method::Lmnn(cfg) => Some(cfg),
                Method::Knn => None,
            })
            .collect(),
    };
    let mut manifest = RunManifest::new("eval", &settings, seed)?;
    manifest.add_input(&source.path)?;

    let report_path = args.output.join("report.json");
    write_json(
        &report_path,
        &EvalReport {
            n: ds.n(),
            dim: ds.dim(),
            class_names: ds.class_names().to_vec(),
            folds: fold_count,
            seed,
            fold_sizes: folds.fold_sizes(),
            results: results.clone(),
        },
    )?;
    manifest.add_artifact(&report_path);

    let table_path = args.output.join("table.csv");
    write_table_csv(&results, BufWriter::new(File::create(&table_path)?))?;
    manifest.add_artifact(&table_path);

    let folds_path = args.output.join("folds.csv");
    {
        let mut out = Vec::new();
        for (idx, r) in results.iter().enumerate() {
            let mut buf = Vec::new();
            r.write_folds_csv(&mut buf)?;
            let text = String::from_utf8(buf).expect("csv output is UTF-8");
            let body = if idx == 0 { text.as_str() } else { text.split_once('\n').map_or("", |(_, rest)| rest) };
            out.extend_from_slice(body.as_bytes());
        }
        fs::write(&folds_path, out)?;
    }
    manifest.add_artifact(&folds_path);
    manifest.write(args.output.join("manifest.json"))?;
    Ok(())
}

fn cmd_transform(args: &TransformArgs, file: &ConfigFile) -> Result<()> {
    let source = data_source(&args.data, file)?;
    let metric = Metric::read(&args.metric)?;
    let ds = load(&source)?;
    let mapped = ds.transformed(&metric.sqrt())?;
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    mapped.write_csv(BufWriter::new(File::create(&args.output)?))?;

    let mut manifest = RunManifest::new("transform", &source, resolve_seed(None, file)?)?;
    manifest.add_input(&args.metric)?;
    manifest.add_input(&source.path)?;
    manifest.add_artifact(&args.output);
    manifest.write(sibling_manifest(&args.output))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct DiagnoseSettings<'a> {
    data: &'a DataSource,
    metric: Option<&'a PathBuf>,
    k: usize,
    impostors: ImpostorMode,
    r_cap: f64,
}

fn cmd_diagnose(args: &DiagnoseArgs, file: &ConfigFile) -> Result<()> {
    let source = data_source(&args.data, file)?;
    let base = solver_config(file_mode(file)?.unwrap_or_default(), &SolverArgs::default(), file, 0, false)?;
    let settings = DiagnoseSettings {
        data: &source,
        metric: args.metric.as_ref(),
        k: args.k.unwrap_or(base.k),
        impostors: args.impostors.unwrap_or(base.impostor_mode),
        r_cap: args.r_cap.unwrap_or(base.r_cap),
    };
    let ds = load(&source)?;
    let metric = match &args.metric {
        Some(path) => Metric::read(path)?,
        None => Metric::identity(ds.dim()),
    };
    let plan = build_plan(&ds, &metric, settings.k, settings.impostors)?;
    let table = pair_weights(&ds, &plan, settings.r_cap)?;

    create_dir(&args.output)?;
    let mut manifest = RunManifest::new("diagnose", &settings, resolve_seed(None, file)?)?;
    manifest.add_input(&source.path)?;
    if let Some(path) = &args.metric {
        manifest.add_input(path)?;
    }
    let triplets = args.output.join("triplets.csv");
    table.write_triplets_csv(BufWriter::new(File::create(&triplets)?))?;
    manifest.add_artifact(&triplets);
    let pairs = args.output.join("pairs.csv");
    table.write_pairs_csv(BufWriter::new(File::create(&pairs)?))?;
    manifest.add_artifact(&pairs);
    let summary = args.output.join("summary.json");
    write_json(
        &summary,
        &serde_json::json!({
            "plan": plan.summary(),
            "counters": table.counters,
            "mean_pair_weight": table.mean_pair_weight(),
        }),
    )?;
    manifest.add_artifact(&summary);
    manifest.write(args.output.join("manifest.json"))?;
    Ok(())
}
