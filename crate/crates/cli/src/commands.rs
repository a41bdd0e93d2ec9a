use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use log::info;
use smartps_core::dataset::{build_dataset, parse_dataset, write_dataset, LabeledRecord, DEFAULT_PAIR_WINDOW};
use smartps_core::experiment::{
    pretrain, suite_runs, suite_scenario, training_scenarios, walkaway, walkaway_comparison, Family, PretrainParams,
    VARIANTS_PER_FAMILY,
};
use smartps_core::featstats::{correlation_table, write_correlation_csv};
use smartps_core::netsim::run_policy;
use smartps_core::selector::Policy;
use smartps_core::traceio::{parse_trace, synthesize_trace_with, write_trace, Scenario};
use smartps_core::treelearn::{
    build_tree, deserialize_model, kfold_evaluate, prune_forest, prune_tree, serialize_model, train_serving_model,
    EvalMetrics, ForestParams, Model, ServingParams, TreeParams,
};

use crate::config::{guard_outputs, manifest_path_for, usage, Config, Manifest, Resolver};

/// Settings shared by every verb.
pub struct Ctx {
    pub config: Config,
    pub force: bool,
}

impl Ctx {
    fn resolver(&self, verb: &'static str) -> Resolver<'_> {
        Resolver {
            config: &self.config,
            verb,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_records(path: &Path) -> Result<Vec<LabeledRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_dataset(file).with_context(|| format!("parsing dataset {}", path.display()))
}

fn load_model(path: &Path) -> Result<Model> {
    deserialize_model(&read(path)?).with_context(|| format!("parsing model {}", path.display()))
}

fn parse_policy(s: &str) -> Result<Policy> {
    s.parse().map_err(|e: String| usage(e))
}

/// A scenario file, or `builtin:walkaway` / `builtin:<family>-<variant>` from the suite.
fn load_scenario(spec: &Path, seed: u64) -> Result<Scenario> {
    let text = spec.to_string_lossy();
    if let Some(name) = text.strip_prefix("builtin:") {
        if name == "walkaway" {
            return Ok(walkaway(seed));
        }
        let (family, variant) = name
            .rsplit_once('-')
            .and_then(|(f, v)| Some((Family::ALL.into_iter().find(|x| x.name() == f)?, v.parse::<usize>().ok()?)))
            .filter(|&(_, v)| v < VARIANTS_PER_FAMILY)
            .ok_or_else(|| {
                usage(format!(
                    "unknown builtin scenario `{name}` (walkaway, or <walkaway|burst|stable|oscillating>-<0..{}>)",
                    VARIANTS_PER_FAMILY - 1
                ))
            })?;
        return Ok(suite_scenario(family, variant, seed));
    }
    let sc = Scenario::parse(&read(spec)?).with_context(|| format!("parsing scenario {}", spec.display()))?;
    Ok(sc.with_seed(seed))
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Attribute trace CSV.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Correlation CSV; printed to stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Score each interface's columns only on rows where that interface was preferred.
    #[arg(long)]
    grouped: bool,
}

pub fn analyze(ctx: &Ctx, a: AnalyzeArgs) -> Result<()> {
    let r = ctx.resolver("analyze");
    let input = r.path(a.input, "input")?;
    let grouped = r.flag(a.grouped, "grouped")?;
    let out_paths = a.output.as_ref().map(|o| (o.clone(), manifest_path_for(o)));
    if let Some((o, m)) = &out_paths {
        guard_outputs(ctx.force, &[o, m])?;
    }
    let file = fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
    let samples = parse_trace(file).with_context(|| format!("parsing trace {}", input.display()))?;
    let rows = correlation_table(&samples, grouped)?;
    let csv = write_correlation_csv(&rows);
    match out_paths {
        None => print!("{csv}"),
        Some((o, m)) => {
            write(&o, &csv)?;
            Manifest::new("analyze")
                .path("input", &input)
                .param("grouped", grouped)
                .write(&m)?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Scenario TOML file or `builtin:<name>`.
    #[arg(short, long)]
    scenario: Option<PathBuf>,
    /// Trace CSV to write.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Seconds between rows.
    #[arg(long)]
    interval: Option<f64>,
    /// Seeds both the scenario noise and the simulator.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn synthesize(ctx: &Ctx, a: SynthesizeArgs) -> Result<()> {
    let r = ctx.resolver("synthesize");
    let scenario_path = r.path(a.scenario, "scenario")?;
    let output = r.path(a.output, "output")?;
    let interval = r.or(a.interval, "interval", 0.5)?;
    let seed: u64 = r.required(a.seed, "seed")?;
    let sim = ctx.config.sim_params()?.with_seed(seed);
    let manifest = manifest_path_for(&output);
    guard_outputs(ctx.force, &[&output, &manifest])?;

    let scenario = load_scenario(&scenario_path, seed)?;
    let rows = synthesize_trace_with(&scenario, interval, &sim)?;
    info!("synthesized {} rows from `{}`", rows.len(), scenario.name);
    write(&output, &write_trace(&rows))?;
    Manifest::new("synthesize")
        .seed(seed)
        .path("scenario", &scenario_path)
        .param("interval", interval)
        .sim(&sim)
        .write(&manifest)
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Attribute trace CSV.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Dataset CSV to write.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Pairing window in seconds.
    #[arg(long)]
    window: Option<f64>,
}

pub fn build_dataset_cmd(ctx: &Ctx, a: BuildDatasetArgs) -> Result<()> {
    let r = ctx.resolver("build-dataset");
    let input = r.path(a.input, "input")?;
    let output = r.path(a.output, "output")?;
    let window = r.or(a.window, "window", DEFAULT_PAIR_WINDOW)?;
    if !(window > 0.0) {
        return Err(usage(format!("--window must be positive, got {window}")));
    }
    let manifest = manifest_path_for(&output);
    guard_outputs(ctx.force, &[&output, &manifest])?;

    let file = fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
    let samples = parse_trace(file).with_context(|| format!("parsing trace {}", input.display()))?;
    let (records, stats) = build_dataset(&samples, window);
    info!("{} records, {} rows left unpaired", stats.pairs, stats.dropped);
    write(&output, &write_dataset(&records))?;
    Manifest::new("build-dataset")
        .path("input", &input)
        .param("window", window)
        .write(&manifest)
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Model file to write.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Forest size; 0 trains a single unpruned tree.
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    /// Smallest information gain ratio worth splitting on.
    #[arg(long)]
    min_igr: Option<f64>,
    /// Share of records held out to prune each forest tree.
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Also run stratified k-fold cross-validation and write `<output>.folds.csv`.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn metrics_row(name: &str, m: &EvalMetrics) -> String {
    format!("{name},{:.4},{:.4},{:.4},{:.4}\n", m.accuracy, m.precision, m.recall, m.f1)
}

const METRICS_HEADER: &str = "fold,accuracy,precision,recall,f1\n";

pub fn train(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let r = ctx.resolver("train");
    let input = r.path(a.input, "input")?;
    let output = r.path(a.output, "output")?;
    let seed: u64 = r.required(a.seed, "seed")?;
    let defaults = TreeParams::default();
    let trees = r.or(a.trees, "trees", 50)?;
    let tree = TreeParams {
        max_depth: r.or(a.max_depth, "max_depth", defaults.max_depth)?,
        min_leaf: r.or(a.min_leaf, "min_leaf", defaults.min_leaf)?,
        min_igr: r.or(a.min_igr, "min_igr", defaults.min_igr)?,
        seed,
        ..defaults
    };
    let validation_fraction = r.or(a.validation_fraction, "validation_fraction", 0.2)?;
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(usage(format!("--validation-fraction must be in [0, 1), got {validation_fraction}")));
    }
    let folds: Option<usize> = r.opt(a.folds, "folds")?;
    let serving = ServingParams {
        forest: ForestParams {
            n_trees: trees,
            tree: TreeParams {
                feature_subset: ForestParams::new(trees, seed).tree.feature_subset,
                ..tree
            },
            ..ForestParams::new(trees, seed)
        },
        validation_fraction,
    };
    let manifest = manifest_path_for(&output);
    let folds_path = output.with_file_name(format!(
        "{}.folds.csv",
        output.file_name().unwrap_or_default().to_string_lossy()
    ));
    let mut outputs = vec![output.as_path(), manifest.as_path()];
    if folds.is_some() {
        outputs.push(&folds_path);
    }
    guard_outputs(ctx.force, &outputs)?;

    let records = load_records(&input)?;
    let learn = |recs: &[LabeledRecord]| -> Result<Model> {
        if trees == 0 {
            Ok(Model::Tree(build_tree(recs, &tree)))
        } else {
            Ok(train_serving_model(recs, &serving)?)
        }
    };
    if let Some(k) = folds {
        let report = kfold_evaluate(
            &records,
            |recs: &[LabeledRecord]| learn(recs).expect("training folds are non-empty"),
            k,
            seed,
        )?;
        let mut csv = String::from(METRICS_HEADER);
        for (i, m) in report.folds.iter().enumerate() {
            csv.push_str(&metrics_row(&i.to_string(), m));
        }
        csv.push_str(&metrics_row("mean", &report.mean));
        write(&folds_path, &csv)?;
        println!(
            "{k}-fold: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
            report.mean.accuracy, report.mean.precision, report.mean.recall, report.mean.f1
        );
    }
    let model = learn(&records)?;
    info!("trained model with {} nodes on {} records", model.node_count(), records.len());
    write(&output, &serialize_model(&model))?;
    let mut m = Manifest::new("train")
        .seed(seed)
        .path("input", &input)
        .param("trees", trees as i64)
        .param("max_depth", tree.max_depth as i64)
        .param("min_leaf", tree.min_leaf as i64)
        .param("min_igr", tree.min_igr)
        .param("validation_fraction", validation_fraction);
    if let Some(k) = folds {
        m = m.param("folds", k as i64);
    }
    m.write(&manifest)
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Model file.
    #[arg(short, long)]
    model: Option<PathBuf>,
    /// Validation dataset CSV.
    #[arg(long)]
    validation: Option<PathBuf>,
    /// Pruned model file to write.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn prune(ctx: &Ctx, a: PruneArgs) -> Result<()> {
    let r = ctx.resolver("prune");
    let model_path = r.path(a.model, "model")?;
    let validation = r.path(a.validation, "validation")?;
    let output = r.path(a.output, "output")?;
    let manifest = manifest_path_for(&output);
    guard_outputs(ctx.force, &[&output, &manifest])?;

    let model = load_model(&model_path)?;
    let records = load_records(&validation)?;
    let pruned = match &model {
        Model::Tree(t) => Model::Tree(prune_tree(t, &records)),
        Model::Forest(f) => Model::Forest(prune_forest(f, &records)),
    };
    info!("pruned {} nodes to {}", model.node_count(), pruned.node_count());
    write(&output, &serialize_model(&pruned))?;
    Manifest::new("prune")
        .path("model", &model_path)
        .path("validation", &validation)
        .write(&manifest)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file.
    #[arg(short, long)]
    model: Option<PathBuf>,
    /// Labelled dataset CSV.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Metrics CSV; printed to stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<()> {
    let r = ctx.resolver("evaluate");
    let model_path = r.path(a.model, "model")?;
    let input = r.path(a.input, "input")?;
    let out_paths = a.output.as_ref().map(|o| (o.clone(), manifest_path_for(o)));
    if let Some((o, m)) = &out_paths {
        guard_outputs(ctx.force, &[o, m])?;
    }
    let model = load_model(&model_path)?;
    let records = load_records(&input)?;
    if records.is_empty() {
        bail!("{} has no records", input.display());
    }
    let m = EvalMetrics::evaluate(&model, &records);
    let csv = format!(
        "accuracy,precision,recall,f1\n{:.4},{:.4},{:.4},{:.4}\n",
        m.accuracy, m.precision, m.recall, m.f1
    );
    match out_paths {
        None => print!("{csv}"),
        Some((o, mp)) => {
            write(&o, &csv)?;
            Manifest::new("evaluate")
                .path("model", &model_path)
                .path("input", &input)
                .write(&mp)?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario TOML file, `builtin:walkaway` or `builtin:<family>-<variant>`.
    #[arg(short, long)]
    scenario: Option<PathBuf>,
    /// smartps, minrtt, rr, wf or lf.
    #[arg(long)]
    selector: Option<String>,
    /// Model served by smartps; without one it behaves as WiFi-first.
    #[arg(short, long)]
    model: Option<PathBuf>,
    /// Seconds; defaults to the scenario's duration.
    #[arg(long)]
    duration: Option<f64>,
    /// Seeds both the scenario noise and the simulator.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for ag.csv, ad.csv, accumulation.csv, decisions.csv and summary.txt.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<()> {
    let r = ctx.resolver("simulate");
    let scenario_path = r.path(a.scenario, "scenario")?;
    let policy = parse_policy(&r.or(a.selector, "selector", "smartps".to_string())?)?;
    let model_path: Option<PathBuf> = match a.model {
        Some(p) => Some(p),
        None => r.opt::<String>(None, "model")?.map(PathBuf::from),
    };
    let seed: u64 = r.required(a.seed, "seed")?;
    let output = r.path(a.output, "output")?;
    let mut sim = ctx.config.sim_params()?.with_seed(seed);
    if let Some(d) = r.opt(a.duration, "duration")? {
        sim.duration = Some(d);
    }
    guard_outputs(ctx.force, &[&output])?;

    let scenario = load_scenario(&scenario_path, seed)?;
    let model = model_path.as_deref().map(load_model).transpose()?;
    if policy == Policy::SmartPs && model.is_none() {
        log::warn!("smartps without --model falls back to WiFi-first");
    }
    let report = run_policy(&scenario, policy, model, &sim)?;
    if !report.checks.all_hold() {
        log::warn!("simulator invariant violations: {:?}", report.checks);
    }
    report
        .write_bundle(&output)
        .with_context(|| format!("writing {}", output.display()))?;
    print!("{}", report.summary());
    let mut m = Manifest::new("simulate")
        .seed(seed)
        .path("scenario", &scenario_path)
        .param("selector", policy.as_str());
    if let Some(p) = &model_path {
        m = m.path("model", p);
    }
    m.sim(&sim).write(&output.join("run-manifest.toml"))
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Evaluation runs use seeds 1..=N for every suite scenario.
    #[arg(long)]
    eval_seeds: Option<u64>,
    /// Synthesized training traces per scenario variant.
    #[arg(long)]
    train_seeds: Option<u64>,
    /// Walkaway handover runs use seeds 1..=N.
    #[arg(long)]
    walkaway_seeds: Option<u64>,
    /// Seeds model training.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn experiment(ctx: &Ctx, a: ExperimentArgs) -> Result<()> {
    let r = ctx.resolver("experiment");
    let output = r.path(a.output, "output")?;
    let seed: u64 = r.required(a.seed, "seed")?;
    let eval_seeds: u64 = r.or(a.eval_seeds, "eval_seeds", 10)?;
    let train_seeds: u64 = r.or(a.train_seeds, "train_seeds", 3)?;
    let walkaway_seeds: u64 = r.or(a.walkaway_seeds, "walkaway_seeds", 20)?;
    if eval_seeds == 0 || train_seeds == 0 {
        return Err(usage("--eval-seeds and --train-seeds must be at least 1"));
    }
    let sim = ctx.config.sim_params()?;
    guard_outputs(ctx.force, &[&output])?;

    let mut pre = PretrainParams {
        sim: sim.clone(),
        ..PretrainParams::default()
    };
    pre.serving.forest.seed = seed;
    let training = training_scenarios(&Family::ALL, train_seeds);
    info!("training on {} synthesized scenarios", training.len());
    let model = pretrain(&training, &pre)?;

    let seeds: Vec<u64> = (1..=eval_seeds).collect();
    info!("simulating {} policies over the suite", Policy::ALL.len());
    let runs = suite_runs(&model, &seeds, &Policy::ALL, &sim)?;
    let cmp = runs.comparison()?;

    let mut walk = String::from(
        "seed,cliff_time,smartps_switch,minrtt_switch,smartps_wifi_accumulation_p90,minrtt_wifi_accumulation_p90\n",
    );
    let (mut first, mut less) = (0, 0);
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.1}"));
    for s in 1..=walkaway_seeds {
        let c = walkaway_comparison(s, &model, &sim)?;
        first += usize::from(c.smartps_switches_first());
        less += usize::from(c.smartps_accumulates_less());
        walk.push_str(&format!(
            "{s},{:.1},{},{},{:.0},{:.0}\n",
            c.cliff_time,
            opt(c.smartps.switch_time),
            opt(c.minrtt.switch_time),
            c.smartps.wifi_accumulation_p90,
            c.minrtt.wifi_accumulation_p90
        ));
    }
    let mut summary = cmp.summary();
    summary.push_str(&format!(
        "walkaway_smartps_switches_first {first}/{walkaway_seeds}\nwalkaway_smartps_accumulates_less {less}/{walkaway_seeds}\n"
    ));

    write(&output.join("model.txt"), &serialize_model(&model))?;
    write(&output.join("summary.txt"), &summary)?;
    write(&output.join("percentiles.csv"), &runs.percentile_csv())?;
    write(&output.join("suite_cdf.csv"), &cmp.cdf_csv())?;
    write(&output.join("walkaway.csv"), &walk)?;
    print!("{summary}");
    Manifest::new("experiment")
        .seed(seed)
        .param("eval_seeds", eval_seeds as i64)
        .param("train_seeds", train_seeds as i64)
        .param("walkaway_seeds", walkaway_seeds as i64)
        .sim(&sim)
        .write(&output.join("run-manifest.toml"))
}
