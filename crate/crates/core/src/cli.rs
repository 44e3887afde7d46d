//! Command-line front end: `gen-data`, `train`, `sample`, `eval`, `plot`.
//!
//! Every option may also come from a JSON object passed with `--config`;
//! keys use the long flag names with `_` for `-`. Flags win over the file,
//! and the file wins over built-in defaults.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 3 for
//! numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{generate, DatasetKind, DatasetSpec, UnitSystem};
use crate::error::{Error, Result};
use crate::eval::{config_hash, euclidean_distance_loss, make_report, split_train_eval, EvalCell, LossMode, ReportMeta};
use crate::io::{
    read_checkpoint, report_to_json, write_checkpoint, DatasetFile, SampleFile, SampleHeader, SampleRecord,
    SCHEMA_VERSION,
};
use crate::plot::Figure;
use crate::relativity::Handedness;
use crate::sampling::{
    draw_sources, sample_batch, InitVelocity, Integrator, SamplerConfig, SourceDistribution, VelocityUpdate,
};
use crate::training::{train, ForceInput, Method, O1o2Gradient, TrainConfig};

pub const THREADS_ENV: &str = "FORM_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "form-lab", version, about = "Relativistic force matching and flow-matching baselines on 2-D toy transport problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset and write it as NDJSON.
    GenData(GenDataArgs),
    /// Train one method on a dataset and write a checkpoint.
    Train(TrainArgs),
    /// Transport source points with a trained model.
    Sample(SampleArgs),
    /// Score models on held-out trajectories and print the result table.
    Eval(EvalArgs),
    /// Render a dataset or sample file as SVG.
    Plot(PlotArgs),
}

/// Fills each `None` field of `$a` from `$b`.
macro_rules! merge {
    ($a:ident, $b:ident; $($f:ident),* $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))
        }
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataArgs {
    #[arg(long)]
    pub dataset: Option<DatasetKind>,
    /// Number of trajectories.
    #[arg(long)]
    pub n: Option<usize>,
    /// Integration steps per trajectory (>= 2).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Side of the velocity that receives positive perpendicular force.
    #[arg(long)]
    pub perp_handedness: Option<Handedness>,
    /// Multiplies both force components.
    #[arg(long)]
    pub force_scale: Option<f64>,
    #[arg(long)]
    pub source_std: Option<f64>,
    #[arg(long)]
    pub disc_radius: Option<f64>,
    #[arg(long)]
    pub velocity_scale: Option<f64>,
    #[arg(long)]
    pub initial_speed: Option<f64>,
    #[arg(long)]
    pub core_speed: Option<f64>,
    #[arg(long)]
    pub ring_speed: Option<f64>,
    /// Metres per distance unit.
    #[arg(long)]
    pub meters_per_du: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    #[serde(skip)]
    pub data: Option<PathBuf>,
    /// Optimizer steps.
    #[arg(long, visible_alias = "epochs")]
    #[serde(alias = "epochs")]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub force_input: Option<ForceInput>,
    /// O1+O2 only: `detached` or `joint`.
    #[arg(long)]
    pub o1o2_gradient: Option<O1o2Gradient>,
    /// Train on every trajectory instead of holding out the last 20%.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub all_trajectories: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitRule {
    #[default]
    Dataset,
    Zero,
}

impl std::str::FromStr for InitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset" => Ok(InitRule::Dataset),
            "zero" => Ok(InitRule::Zero),
            _ => Err(Error::InvalidConfig(format!("unknown init rule `{s}` (dataset|zero)"))),
        }
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: Option<PathBuf>,
    /// Dataset whose source distribution and initial-velocity rule are used.
    #[arg(long)]
    #[serde(skip)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampler steps.
    #[arg(long = "M", alias = "m")]
    #[serde(rename = "M", alias = "m")]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start from the held-out trajectories of `--data` instead of fresh draws.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub held_out: Option<bool>,
    /// Initial velocity: `dataset`, `zero`, or explicit `vx,vy` via `--v0`.
    #[arg(long)]
    pub init: Option<InitRule>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v0: Option<Vec<f64>>,
    #[arg(long)]
    pub velocity_update: Option<VelocityUpdate>,
    #[arg(long)]
    pub integrator: Option<Integrator>,
    /// Apply force components along the lab axes when the velocity is zero.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lab_fallback: Option<bool>,
    /// Also write every intermediate state.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub paths: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    /// Checkpoints; each is matched to the dataset it was trained on.
    #[arg(long = "model", num_args = 1..)]
    #[serde(skip)]
    pub models: Vec<PathBuf>,
    #[arg(long = "data", num_args = 1..)]
    #[serde(skip)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub mode: Option<LossMode>,
    #[arg(long = "M", alias = "m")]
    #[serde(rename = "M", alias = "m")]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// Fail when any method × dataset cell is missing.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
    /// Print the published reference rows under the table.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub reference: Option<bool>,
    #[arg(long)]
    pub commit: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotArgs {
    /// Dataset or sample NDJSON.
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub trajectories: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl std::str::FromStr for VelocityUpdate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "momentum" => Ok(VelocityUpdate::Momentum),
            "euler" => Ok(VelocityUpdate::Euler),
            _ => Err(Error::InvalidConfig(format!("unknown velocity update `{s}` (momentum|euler)"))),
        }
    }
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(Integrator::Native),
            "rk4" => Ok(Integrator::Rk4),
            _ => Err(Error::InvalidConfig(format!("unknown integrator `{s}` (native|rk4)"))),
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::InvalidConfig(format!("--{flag} is required")))
}

pub fn gen_data(mut args: GenDataArgs) -> Result<()> {
    let file: GenDataArgs = load_config(&args.config)?;
    merge!(args, file; dataset, n, steps, duration, seed, perp_handedness, force_scale, source_std,
        disc_radius, velocity_scale, initial_speed, core_speed, ring_speed, meters_per_du);
    let kind = args.dataset.ok_or_else(|| Error::InvalidConfig("--dataset is required".into()))?;
    let out = required(&args.out, "out")?;
    let mut spec = DatasetSpec::new(kind);
    spec.n_points = args.n.unwrap_or(spec.n_points);
    spec.n_steps = args.steps.unwrap_or(spec.n_steps);
    spec.duration = args.duration.unwrap_or(spec.duration);
    spec.seed = args.seed.unwrap_or(spec.seed);
    spec.source_std = args.source_std.unwrap_or(spec.source_std);
    spec.disc_radius = args.disc_radius.unwrap_or(spec.disc_radius);
    spec.velocity_scale = args.velocity_scale.unwrap_or(spec.velocity_scale);
    spec.initial_speed = args.initial_speed.unwrap_or(spec.initial_speed);
    spec.core_speed = args.core_speed.unwrap_or(spec.core_speed);
    spec.ring_speed = args.ring_speed.unwrap_or(spec.ring_speed);
    if let Some(k) = args.force_scale {
        spec.forces = spec.forces.scaled(k);
    }
    let units = args.meters_per_du.map(UnitSystem::with_meters_per_du).unwrap_or_default();
    let physics = units.physics().with_handedness(args.perp_handedness.unwrap_or_default());
    physics.validate()?;
    spec.validate()?;
    let data = generate(&spec, &physics)?;
    let max_speed = data.iter().map(|r| r.max_speed()).fold(0.0, f64::max);
    DatasetFile::new(&spec, units, physics, data).write(out)?;
    println!(
        "wrote {} trajectories x {} steps of {kind} to {}; max speed / c = {:.6}",
        spec.n_points,
        spec.n_steps,
        out.display(),
        max_speed / physics.c
    );
    Ok(())
}

pub fn train_cmd(mut args: TrainArgs) -> Result<()> {
    let file: TrainArgs = load_config(&args.config)?;
    merge!(args, file; method, steps, batch_size, lr, seed, hidden, force_input, o1o2_gradient, all_trajectories);
    let method = args.method.ok_or_else(|| Error::InvalidConfig("--method is required".into()))?;
    let dataset = DatasetFile::read(required(&args.data, "data")?)?;
    let out = required(&args.out, "out")?;
    let mut cfg = TrainConfig::new(method);
    cfg.steps = args.steps.unwrap_or(cfg.steps);
    cfg.batch_size = args.batch_size.unwrap_or(cfg.batch_size);
    cfg.adam.lr = args.lr.unwrap_or(cfg.adam.lr);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.hidden = args.hidden.unwrap_or(cfg.hidden);
    cfg.force_input = args.force_input.unwrap_or(cfg.force_input);
    cfg.o1o2_gradient = args.o1o2_gradient.unwrap_or(cfg.o1o2_gradient);
    let data = if args.all_trajectories.unwrap_or(false) {
        dataset.trajectories
    } else {
        split_train_eval(&dataset.trajectories).0
    };
    let mut model = train(&data, &cfg, dataset.header.physics)?;
    model.units = dataset.header.unit_system.clone();
    model.meta.dataset_kind = Some(dataset.header.kind);
    write_checkpoint(&model, out)?;
    println!("trained {method} on {} trajectories for {} steps; final loss {:.6e}", data.len(), cfg.steps, model.meta.final_loss);
    Ok(())
}

pub fn sample_cmd(mut args: SampleArgs) -> Result<()> {
    let file: SampleArgs = load_config(&args.config)?;
    merge!(args, file; n, m, seed, held_out, init, v0, velocity_update, integrator, lab_fallback, paths);
    let model = read_checkpoint(required(&args.model, "model")?)?;
    let out = required(&args.out, "out")?;
    let dataset = args.data.as_deref().map(DatasetFile::read).transpose()?;
    let seed = args.seed.unwrap_or(0);
    let m = args.m.unwrap_or(100);

    let init = match (&args.v0, args.init.unwrap_or_default(), &dataset) {
        (Some(v0), _, _) => InitVelocity::Explicit(v0.clone()),
        (None, InitRule::Zero, _) => InitVelocity::Zero,
        (None, InitRule::Dataset, Some(d)) => InitVelocity::DatasetMatched(Box::new(d.header.generator.clone())),
        (None, InitRule::Dataset, None) if model.method == Method::Form => {
            return Err(Error::InvalidConfig("ForM sampling needs --data, --v0 or --init zero".into()))
        }
        (None, InitRule::Dataset, None) => InitVelocity::Zero,
    };
    let sources: Vec<Vec<f64>> = if args.held_out.unwrap_or(false) {
        let d = dataset.as_ref().ok_or_else(|| Error::InvalidConfig("--held-out needs --data".into()))?;
        split_train_eval(&d.trajectories).1.iter().map(|r| r.start().x.clone()).collect()
    } else {
        let dist = match &dataset {
            Some(d) => SourceDistribution::Dataset(Box::new(d.header.generator.clone())),
            None => SourceDistribution::StandardNormal,
        };
        draw_sources(&dist, args.n.unwrap_or(200), seed, model.physics.c)?
    };

    let sc = SamplerConfig {
        steps: m,
        duration: model.duration,
        init,
        physics: model.physics,
        velocity_update: args.velocity_update.unwrap_or_default(),
        lab_frame_fallback: args.lab_fallback.unwrap_or(false),
    };
    let paths = sample_batch(&model, &sources, &sc, args.integrator.unwrap_or_default())?;
    let keep_paths = args.paths.unwrap_or(false);
    let samples = sources
        .into_iter()
        .zip(paths)
        .enumerate()
        .map(|(index, (x0, path))| SampleRecord {
            index,
            x0,
            endpoint: path.endpoint().to_vec(),
            path: keep_paths.then_some(path),
        })
        .collect::<Vec<_>>();
    let header = SampleHeader {
        schema_version: SCHEMA_VERSION,
        method: model.method,
        dataset_kind: model.meta.dataset_kind,
        n: samples.len(),
        m,
        seed,
        duration: model.duration,
    };
    SampleFile { header, samples }.write(out)?;
    println!("wrote samples from the {} model (M = {m}) to {}", model.method, out.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalSettings<'a> {
    mode: LossMode,
    m: usize,
    seed: u64,
    models: Vec<(&'a str, Option<DatasetKind>, &'a TrainConfig)>,
}

pub fn eval_cmd(mut args: EvalArgs) -> Result<()> {
    let file: EvalArgs = load_config(&args.config)?;
    merge!(args, file; mode, m, seed, strict, reference, commit);
    if args.models.is_empty() || args.data.is_empty() {
        return Err(Error::InvalidConfig("eval needs at least one --model and one --data".into()));
    }
    let mode = args.mode.unwrap_or_default();
    let m = args.m.unwrap_or(100);
    let seed = args.seed.unwrap_or(0);
    let datasets = args.data.iter().map(|p| DatasetFile::read(p)).collect::<Result<Vec<_>>>()?;
    let models = args.models.iter().map(|p| read_checkpoint(p)).collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for model in &models {
        let dataset = match model.meta.dataset_kind {
            Some(kind) => datasets.iter().find(|d| d.header.kind == kind),
            None if datasets.len() == 1 => datasets.first(),
            None => None,
        }
        .ok_or_else(|| Error::InvalidConfig(format!("no dataset given for the {} model", model.method)))?;
        let (_, held) = split_train_eval(&dataset.trajectories);
        let spec = dataset.header.generator.clone();
        let sc = SamplerConfig::new(m, model.physics).with_init(InitVelocity::DatasetMatched(Box::new(spec.clone())));
        let loss = match mode {
            LossMode::Paired => crate::eval::evaluate_model(model, &held, &sc, mode, Integrator::Native)?,
            LossMode::Chamfer => {
                let dist = SourceDistribution::Dataset(Box::new(spec));
                let sources = draw_sources(&dist, held.len(), seed, model.physics.c)?;
                let mut sc = sc;
                sc.duration = model.duration;
                let paths = sample_batch(model, &sources, &sc, Integrator::Native)?;
                let gen: Vec<Vec<f64>> = paths.iter().map(|p| p.endpoint().to_vec()).collect();
                let targets: Vec<Vec<f64>> = held.iter().map(|r| r.end().x.clone()).collect();
                euclidean_distance_loss(&gen, &targets, mode)?
            }
        };
        cells.push(EvalCell { dataset: dataset.header.kind, method: model.method, loss, n_samples: held.len(), m, seed, mode });
    }
    let settings = EvalSettings {
        mode,
        m,
        seed,
        models: models.iter().map(|md| (md.method.as_str(), md.meta.dataset_kind, &md.config)).collect(),
    };
    let meta = ReportMeta { commit: args.commit.clone(), config_hash: config_hash(&settings)? };
    let report = make_report(cells, meta)?;
    print!("{}", report.render_table(args.reference.unwrap_or(false)));
    if let Some(path) = &args.report {
        std::fs::write(path, report_to_json(&report)?)?;
    }
    if args.strict.unwrap_or(false) && !report.is_complete() {
        return Err(Error::InvalidConfig(format!("missing cells for: {}", report.missing.join(", "))));
    }
    Ok(())
}

pub fn plot_cmd(mut args: PlotArgs) -> Result<()> {
    let file: PlotArgs = load_config(&args.config)?;
    merge!(args, file; trajectories);
    let input = required(&args.input, "in")?;
    let out = required(&args.out, "out")?;
    let text = std::fs::read_to_string(input)?;
    let trajectories = args.trajectories.unwrap_or(false);
    let head: serde_json::Value = serde_json::from_str(text.lines().next().unwrap_or(""))
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let figure = if head.get("generator").is_some() {
        Figure::from_dataset(&DatasetFile::from_ndjson(&text)?, trajectories)
    } else {
        Figure::from_samples(&SampleFile::from_ndjson(&text)?, trajectories)
    };
    std::fs::write(out, figure.to_svg())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Sample(a) => sample_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Plot(a) => plot_cmd(a),
    }
}

pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// Parses `std::env::args`, runs the command and maps errors to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
