use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Subcommand};
use serde::Serialize;
use steerclone::dataset::{
    balance_zero_steer, load_manifest, split, steering_histogram, zero_steer_count, BalanceConfig, DiskFrames, STRATA,
};
use steerclone::experiments::{
    autonomy, prediction_analysis, run_suite, subset_by_time, ExperimentConfig, ExperimentId, LatencyStats,
    SuiteReport, TrainingSummary,
};
use steerclone::nnet::EpochStats;
use steerclone::pipeline::{train_pipeline, PipelineConfig};
use steerclone::simworld::{collect, deploy, deploy_model, CollectConfig, DeployConfig, ExpertPolicy};
use steerclone::{AugmentationProbabilities, Behavior, CameraSlot, Dataset, ImageU8, Model, Rng, ScenarioVariation, TrackScenario, World};

use crate::config::RunConfig;

/// Bad arguments or a combination the command cannot run with.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Settings shared by all commands.
pub struct Ctx {
    pub config: RunConfig,
    pub data_root: PathBuf,
}

impl Ctx {
    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.config.seed).unwrap_or(0)
    }

    fn behavior_dir(&self, b: Behavior) -> PathBuf {
        self.data_root.join(b.name())
    }

    fn default_model(&self, b: Behavior) -> PathBuf {
        self.behavior_dir(b).join("run").join("model.scnn")
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario: simplistic, rigorous or collision.
    #[arg(long, conflicts_with = "scenario_file")]
    pub scenario: Option<Behavior>,
    /// Scenario TOML file (see `scenario export`).
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self, ctx: &Ctx, fallback: Option<Behavior>) -> anyhow::Result<TrackScenario> {
        if let Some(p) = &self.scenario_file {
            return Ok(TrackScenario::load(p)?);
        }
        if let Some(b) = self.scenario {
            return Ok(TrackScenario::builtin(b));
        }
        if let Some(p) = &ctx.config.scenario_file {
            return Ok(TrackScenario::load(p)?);
        }
        match ctx.config.scenario.or(ctx.config.behavior).or(fallback) {
            Some(b) => Ok(TrackScenario::builtin(b)),
            None => usage("no scenario given; pass --scenario or --scenario-file"),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drive the scripted expert and record a demonstration dataset.
    Collect(CollectArgs),
    /// Show the steering histogram before and after zero-steer deletion.
    Balance(BalanceArgs),
    /// Train a steering model on a collected dataset.
    Train(TrainArgs),
    /// Deploy a model for one lap and report its autonomy.
    Evaluate(EvaluateArgs),
    /// Run robustness experiments against a model.
    Experiment(ExperimentArgs),
    /// Write the convolutional feature maps for one frame as PNGs.
    Activations(ActivationsArgs),
    /// Compare predicted and recorded steering over a dataset.
    PredictAnalyze(PredictArgs),
    /// Scenario utilities.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

pub fn run(cmd: Command, ctx: &Ctx) -> anyhow::Result<()> {
    match cmd {
        Command::Collect(a) => cmd_collect(a, ctx),
        Command::Balance(a) => cmd_balance(a, ctx),
        Command::Train(a) => cmd_train(a, ctx),
        Command::Evaluate(a) => cmd_evaluate(a, ctx),
        Command::Experiment(a) => cmd_experiment(a, ctx),
        Command::Activations(a) => cmd_activations(a, ctx),
        Command::PredictAnalyze(a) => cmd_predict_analyze(a, ctx),
        Command::Scenario(ScenarioCommand::Export(a)) => cmd_scenario_export(a, ctx),
    }
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Laps to drive [default: behavior preset].
    #[arg(long)]
    pub laps: Option<usize>,
    /// Drive the second half of the laps in the opposite direction.
    #[arg(long, conflicts_with = "one_way")]
    pub bidirectional: bool,
    /// Drive every lap in the scenario's direction.
    #[arg(long)]
    pub one_way: bool,
    /// Recording rate in Hz [default: 1.5].
    #[arg(long)]
    pub rate: Option<f64>,
    /// Standard deviation of the steering perturbation.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Random seed [default: config, then 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: <data-root>/<behavior>].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cmd_collect(a: CollectArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let scenario = a.scenario.resolve(ctx, None)?;
    let behavior = scenario.id;
    let c = &ctx.config.collect;
    let mut cfg = CollectConfig::for_behavior(behavior);
    cfg.laps = a.laps.or(c.laps).unwrap_or(cfg.laps);
    cfg.rate_hz = a.rate.or(c.rate_hz).unwrap_or(cfg.rate_hz);
    cfg.noise_sigma = a.noise_sigma.or(c.noise_sigma).unwrap_or(cfg.noise_sigma);
    cfg.noise_theta = c.noise_theta.unwrap_or(cfg.noise_theta);
    cfg.bidirectional = if a.bidirectional {
        true
    } else if a.one_way {
        false
    } else {
        c.bidirectional.unwrap_or(cfg.bidirectional)
    };
    cfg.seed = ctx.seed(a.seed);
    let out = a.out.unwrap_or_else(|| ctx.behavior_dir(behavior));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let world = World::with_preset_rig(scenario)?;
    let ds = collect(&world, &cfg, &out)?;
    let cameras = world.rig().slots().len();
    let (train, val) = split(&ds, steerclone::presets::SPLIT_RATIO, cfg.seed)?;
    let direction = if cfg.bidirectional { "both directions" } else { "one direction" };
    println!(
        "Collected {} laps ({direction}) of the {behavior} scenario into {}: {} samples, {} frames",
        cfg.laps,
        out.display(),
        ds.len(),
        ds.len() * cameras
    );
    println!();
    print!("{}", dataset_table(behavior, ds.len(), train.len(), val.len()));
    Ok(())
}

/// Sample counts laid out as in the dataset summary table.
pub fn dataset_table(b: Behavior, complete: usize, train: usize, val: usize) -> String {
    let head = ["Driving Behavior", "Complete Dataset", "Training Dataset", "Validation Dataset"];
    let name = match b {
        Behavior::Simplistic => "Simplistic",
        Behavior::Rigorous => "Rigorous",
        Behavior::Collision => "Collision avoidance",
    };
    let row = [name.to_string(), complete.to_string(), train.to_string(), val.to_string()];
    let w: Vec<usize> = head.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
    let line = |cells: [&str; 4]| {
        let mut s = cells
            .iter()
            .zip(&w)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ");
        s.truncate(s.trim_end().len());
        s + "\n"
    };
    line(head) + &line([&row[0], &row[1], &row[2], &row[3]])
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    /// Dataset manifest [default: <data-root>/<behavior>/driving_log.csv].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Behavior preset for the deletion rate.
    #[arg(long)]
    pub behavior: Option<Behavior>,
    /// Fraction of zero-steer samples removed [default: behavior preset].
    #[arg(long)]
    pub deletion_rate: Option<f64>,
    /// Histogram bins over [-1, 1].
    #[arg(long, default_value_t = STRATA)]
    pub bins: usize,
    /// Random seed [default: config, then 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

fn load_dataset(manifest: Option<PathBuf>, behavior: Option<Behavior>, ctx: &Ctx) -> anyhow::Result<(PathBuf, Dataset)> {
    let path = match manifest {
        Some(p) => p,
        None => match behavior.or(ctx.config.behavior).or(ctx.config.scenario) {
            Some(b) => ctx.behavior_dir(b).join("driving_log.csv"),
            None => return usage("no dataset given; pass --manifest or --behavior"),
        },
    };
    let ds = load_manifest(&path).with_context(|| format!("loading {}", path.display()))?;
    if ds.is_empty() {
        bail!("{} holds no samples", path.display());
    }
    Ok((path, ds))
}

fn resolve_behavior(flag: Option<Behavior>, ctx: &Ctx, ds: &Dataset) -> anyhow::Result<Behavior> {
    match flag.or(ctx.config.behavior).or(ds.behavior).or(ctx.config.scenario) {
        Some(b) => Ok(b),
        None => usage("the dataset carries no behavior tag; pass --behavior"),
    }
}

fn cmd_balance(a: BalanceArgs, ctx: &Ctx) -> anyhow::Result<()> {
    if a.bins == 0 {
        return usage("--bins must be at least 1");
    }
    let (path, ds) = load_dataset(a.manifest, a.behavior, ctx)?;
    let behavior = resolve_behavior(a.behavior, ctx, &ds)?;
    let rate = a
        .deletion_rate
        .or(ctx.config.train.deletion_rate)
        .unwrap_or(behavior.preset().deletion_rate);
    let cfg = BalanceConfig::with_rate(rate);
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    let balanced = balance_zero_steer(&ds, &cfg, &mut Rng::derive(ctx.seed(a.seed), &[0xBA1]));
    let d = zero_steer_count(&ds, &cfg);
    let removed = cfg.deletions(d);
    println!("{} ({behavior}, deletion rate {rate})", path.display());
    print!("{}", histogram_table(&steering_histogram(&ds, a.bins), &steering_histogram(&balanced, a.bins)));
    println!("zero-steer samples d = {d}, deleted D = round(d * {rate}) = {removed}");
    println!("samples: {} before, {} after", ds.len(), balanced.len());
    Ok(())
}

fn histogram_table(before: &[usize], after: &[usize]) -> String {
    let bins = before.len();
    let peak = before.iter().copied().max().unwrap_or(0).max(1);
    let mut out = format!("{:<17} {:>7} {:>7}\n", "steering", "before", "after");
    for (i, (b, a)) in before.iter().zip(after).enumerate() {
        let lo = -1.0 + 2.0 * i as f64 / bins as f64;
        let hi = -1.0 + 2.0 * (i + 1) as f64 / bins as f64;
        let close = if i + 1 == bins { ']' } else { ')' };
        let bar = "#".repeat((a * 40).div_ceil(peak));
        let row = format!("[{lo:>+6.2}, {hi:>+6.2}{close} {b:>7} {a:>7} {bar}");
        out += row.trim_end();
        out.push('\n');
    }
    out
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest [default: <data-root>/<behavior>/driving_log.csv].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Behavior preset [default: the dataset's tag].
    #[arg(long)]
    pub behavior: Option<Behavior>,
    /// Training epochs [default: behavior preset].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Samples per batch [default: 256].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate [default: 0.001].
    #[arg(long)]
    pub learning_rate: Option<f32>,
    /// Fraction of zero-steer samples removed each pass.
    #[arg(long)]
    pub deletion_rate: Option<f64>,
    /// Augmented copies of the training set per epoch.
    #[arg(long)]
    pub augmentation_loops: Option<usize>,
    /// Train without augmentation.
    #[arg(long)]
    pub no_augmentation: bool,
    /// Random seed [default: config, then 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: <data-root>/<behavior>/run].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TrainingRecord<'a> {
    behavior: Behavior,
    manifest: &'a Path,
    model_checksum: String,
    config: &'a PipelineConfig,
    summary: TrainingSummary,
}

fn cmd_train(a: TrainArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let (path, ds) = load_dataset(a.manifest, a.behavior, ctx)?;
    let behavior = resolve_behavior(a.behavior, ctx, &ds)?;
    let t = &ctx.config.train;
    let mut cfg = PipelineConfig::for_behavior(behavior);
    cfg.epochs = a.epochs.or(t.epochs).unwrap_or(cfg.epochs);
    cfg.batch_size = a.batch_size.or(t.batch_size).unwrap_or(cfg.batch_size);
    cfg.learning_rate = a.learning_rate.or(t.learning_rate).unwrap_or(cfg.learning_rate);
    cfg.deletion_rate = a.deletion_rate.or(t.deletion_rate).unwrap_or(cfg.deletion_rate);
    cfg.augmentation_loops = a.augmentation_loops.or(t.augmentation_loops).unwrap_or(cfg.augmentation_loops);
    cfg.split_ratio = t.split_ratio.unwrap_or(cfg.split_ratio);
    cfg.probabilities = t.augmentation.unwrap_or(cfg.probabilities);
    if a.no_augmentation {
        cfg.probabilities = AugmentationProbabilities::NONE;
    }
    cfg.seed = ctx.seed(a.seed);
    if cfg.epochs == 0 || cfg.batch_size == 0 || cfg.augmentation_loops == 0 {
        return usage("epochs, batch size and augmentation loops must be at least 1");
    }
    let out = a.out.unwrap_or_else(|| ctx.behavior_dir(behavior).join("run"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let frames = DiskFrames::new(path.parent().unwrap_or(Path::new(".")));
    let trained = train_pipeline(&ds, &frames, &cfg)?;
    let checksum = trained.model.params.checksum();
    trained.model.save(&out.join("model.scnn"))?;
    std::fs::write(out.join("history.json"), serde_json::to_string_pretty(&trained.history)?)?;
    let summary = TrainingSummary {
        train_samples: trained.train_samples,
        validation_samples: trained.validation_samples,
        seconds: trained.seconds,
        epochs: trained.history.clone(),
    };
    let record = TrainingRecord {
        behavior,
        manifest: &path,
        model_checksum: checksum.clone(),
        config: &cfg,
        summary,
    };
    std::fs::write(out.join("training.json"), serde_json::to_string_pretty(&record)?)?;
    let text = training_text(&trained.history, trained.train_samples, trained.validation_samples, trained.seconds);
    std::fs::write(out.join("training.txt"), &text)?;

    print!("{text}");
    println!("model written to {}", out.join("model.scnn").display());
    println!("model checksum: {checksum}");
    Ok(())
}

fn training_text(history: &[EpochStats], train: usize, val: usize, seconds: f64) -> String {
    let mut s = format!("samples: {train} training, {val} validation\n");
    s += &format!("{:>5}  {:>10}  {:>10}  {:>6}  {:>8}\n", "epoch", "train MSE", "val MSE", "steps", "seconds");
    for e in history {
        let v = e.val_loss.map_or("-".to_string(), |v| format!("{v:.6}"));
        s += &format!("{:>5}  {:>10.6}  {:>10}  {:>6}  {:>8.1}\n", e.epoch, e.train_loss, v, e.steps, e.seconds);
    }
    s += &format!("training time: {seconds:.1} s\n");
    s
}

#[derive(Debug, Args)]
pub struct DriverArgs {
    /// Trained model [default: <data-root>/<behavior>/run/model.scnn].
    #[arg(long, conflicts_with = "expert")]
    pub model: Option<PathBuf>,
    /// Drive with the scripted expert instead of a model.
    #[arg(long)]
    pub expert: bool,
}

impl DriverArgs {
    fn load(&self, ctx: &Ctx, b: Behavior) -> anyhow::Result<Option<(PathBuf, Model)>> {
        if self.expert {
            return Ok(None);
        }
        let path = self.model.clone().unwrap_or_else(|| ctx.default_model(b));
        let model = Model::load(&path).with_context(|| format!("loading model {}", path.display()))?;
        Ok(Some((path, model)))
    }
}

fn deploy_config(ctx: &Ctx, speed_limit: Option<f64>) -> anyhow::Result<DeployConfig> {
    let d = &ctx.config.deploy;
    let mut cfg = DeployConfig::default();
    cfg.control.speed_limit_kmh = speed_limit.or(d.speed_limit_kmh).unwrap_or(cfg.control.speed_limit_kmh);
    cfg.control.tau = d.tau.unwrap_or(cfg.control.tau);
    cfg.max_time_s = d.max_time_s.or(cfg.max_time_s);
    if let Err(e) = cfg.control.validate() {
        return usage(e.to_string());
    }
    Ok(cfg)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub driver: DriverArgs,
    /// Deployment speed limit in km/h [default: 25].
    #[arg(long)]
    pub speed_limit: Option<f64>,
    /// Write the per-step lap log as CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

fn cmd_evaluate(a: EvaluateArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let scenario = a.scenario.resolve(ctx, None)?;
    let behavior = scenario.id;
    let world = World::with_preset_rig(scenario)?;
    let cfg = deploy_config(ctx, a.speed_limit)?;
    let none = ScenarioVariation::default();
    let log = match a.driver.load(ctx, behavior)? {
        Some((_, model)) => deploy_model(&world, &model, &cfg, &none)?,
        None => deploy(&world, &mut ExpertPolicy::default(), &cfg, &none)?,
    };
    let n = log.interference_count();
    let eta = if log.completed { autonomy(n, log.lap_time) } else { 0.0 };
    println!("scenario: {behavior}, speed limit {} km/h", cfg.control.speed_limit_kmh);
    println!("lap completed: {}", if log.completed { "yes" } else { "no" });
    println!("lap time: {:.1} s", log.lap_time);
    println!("interferences: {n}");
    for i in &log.interferences {
        println!("  t = {:6.1} s  {:?}", i.t, i.kind);
    }
    println!("autonomy: {eta:.1}%");
    if let Some(l) = LatencyStats::from_samples(&log.latency_ms) {
        println!("latency: {}", l.summary());
    }
    if let Some(p) = &a.log {
        log.save_csv(p)?;
        println!("lap log written to {}", p.display());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment name, or `all` for the scenario's full suite.
    pub name: String,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub driver: DriverArgs,
    /// Sweep steps tried per direction.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Laps driven at each sweep step [default: 1].
    #[arg(long)]
    pub laps_per_condition: Option<usize>,
    /// Random seed [default: config, then 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report directory [default: <data-root>/<behavior>/reports].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Experiments named by `name` for `behavior`.
pub fn select_experiments(name: &str, behavior: Behavior) -> anyhow::Result<Vec<ExperimentId>> {
    if name.eq_ignore_ascii_case("all") {
        return Ok(ExperimentId::suite(behavior));
    }
    let id: ExperimentId = match name.parse() {
        Ok(id) => id,
        Err(e) => {
            let known: Vec<_> = ExperimentId::ALL.iter().map(|e| e.name()).collect();
            return usage(format!("{e}; expected all or one of {}", known.join(", ")));
        }
    };
    if !id.applies_to(behavior) {
        return usage(format!("{id} only runs on the collision scenario"));
    }
    Ok(vec![id])
}

fn cmd_experiment(a: ExperimentArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let scenario = a.scenario.resolve(ctx, None)?;
    let behavior = scenario.id;
    let ids = select_experiments(&a.name, behavior)?;
    let e = &ctx.config.experiment;
    let mut cfg = ExperimentConfig::default();
    cfg.max_steps = a.max_steps.or(e.max_steps).unwrap_or(cfg.max_steps);
    cfg.laps_per_condition = a.laps_per_condition.or(e.laps_per_condition).unwrap_or(cfg.laps_per_condition);
    cfg.position_shift = e.position_shift.unwrap_or(cfg.position_shift);
    cfg.base_speed_kmh = e.base_speed_kmh.unwrap_or(cfg.base_speed_kmh);
    cfg.seed = ctx.seed(a.seed);
    cfg.deploy = deploy_config(ctx, None)?;

    let world = World::with_preset_rig(scenario)?;
    let loaded = a.driver.load(ctx, behavior)?;
    let driver = match &loaded {
        Some((_, m)) => steerclone::experiments::Driver::Model(m),
        None => steerclone::experiments::Driver::Expert,
    };
    let reports = run_suite(&ids, &world, driver, &cfg)?;
    let mut suite = SuiteReport::new(behavior, reports);
    suite.model_checksum = loaded.as_ref().map(|(_, m)| m.params.checksum());
    let out = a.out.unwrap_or_else(|| ctx.behavior_dir(behavior).join("reports"));
    let stem = if ids.len() == 1 { ids[0].name().to_string() } else { "suite".to_string() };
    suite.emit(&out, &stem)?;
    print!("{}", suite.render_text());
    println!("\nreport written to {}", out.join(format!("{stem}.json")).display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ActivationsArgs {
    /// Trained model.
    #[arg(long)]
    pub model: PathBuf,
    /// Input frame; without it the center camera at the scenario spawn is used.
    #[arg(long)]
    pub frame: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Convolutional layer, counted from 1 [default: all].
    #[arg(long)]
    pub layer: Option<usize>,
    /// Integer upscale factor for the written maps.
    #[arg(long, default_value_t = 8)]
    pub scale: usize,
    /// Output directory [default: <data-root>/activations].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cmd_activations(a: ActivationsArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let model = Model::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let frame = match &a.frame {
        Some(p) => ImageU8::load(p)?,
        None => {
            let world = World::with_preset_rig(a.scenario.resolve(ctx, Some(Behavior::Simplistic))?)?;
            world.render(&world.spawn_state(), CameraSlot::Center)
        }
    };
    let maps = model.activation_maps(&frame);
    let layers: Vec<usize> = match a.layer {
        Some(l) if l == 0 || l > maps.len() => {
            return usage(format!("--layer {l} out of range; the model has {} conv layers", maps.len()))
        }
        Some(l) => vec![l],
        None => (1..=maps.len()).collect(),
    };
    let out = a.out.unwrap_or_else(|| ctx.data_root.join("activations"));
    std::fs::create_dir_all(&out)?;
    frame.save_png(&out.join("input.png"))?;
    for l in layers {
        let layer = &maps[l - 1];
        for (c, m) in layer.iter().enumerate() {
            m.upscale(a.scale).save_png(&out.join(format!("layer{l}_map{c:02}.png")))?;
        }
        let (w, h) = layer.first().map_or((0, 0), |m| (m.width, m.height));
        println!("layer {l}: {} maps of {w}x{h}", layer.len());
    }
    println!("maps written to {}", out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained model.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// First timestamp included, seconds.
    #[arg(long)]
    pub start: Option<f64>,
    /// Timestamps before this are included, seconds.
    #[arg(long)]
    pub end: Option<f64>,
    /// Output CSV [default: <data-root>/prediction.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cmd_predict_analyze(a: PredictArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let model = Model::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let (path, ds) = load_dataset(Some(a.manifest), None, ctx)?;
    let ds = subset_by_time(&ds, a.start.unwrap_or(f64::NEG_INFINITY), a.end.unwrap_or(f64::INFINITY));
    if ds.is_empty() {
        return usage("no samples fall inside the time window");
    }
    let frames = DiskFrames::new(path.parent().unwrap_or(Path::new(".")));
    let trace = prediction_analysis(&model, &ds, &frames)?;
    let out = a.out.unwrap_or_else(|| ctx.data_root.join("prediction.csv"));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    trace.save_csv(&out)?;
    println!("frames: {}", trace.rows.len());
    println!("mean absolute error: {:.4}", trace.mae);
    match trace.correlation {
        Some(r) => println!("correlation: {r:.4}"),
        None => println!("correlation: undefined (constant column)"),
    }
    println!("trace written to {}", out.display());
    Ok(())
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// Write a scenario as TOML, for editing and `--scenario-file`.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cmd_scenario_export(a: ExportArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let sc = a.scenario.resolve(ctx, None)?;
    match &a.out {
        Some(p) => {
            sc.save(p)?;
            println!("scenario {} written to {}", sc.id, p.display());
        }
        None => print!("{}", sc.to_toml()?),
    }
    Ok(())
}
