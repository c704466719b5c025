//! Command-line front end. Every subcommand writes CSV files and a `manifest.txt`
//! under `--out`.

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureMask, FeatureMatrix};
use crate::harness::{
    default_grid_axis, generate_task, load_uci_csv, make_task, run_method, run_sim1_grid,
    run_sim2_table, sweep_masks, thin_per_class, Method, RunSettings, SimSettings, Task,
};
use crate::model::{
    build, checkpoint, encode_dataset, evaluate, fit_epochs, history_csv, train, InputEncoding, ModelConfig,
};
use crate::simgen::LabeledDataset;
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const SMOKE_DIVISOR: usize = 10;
const SMOKE_MAX_EPOCHS: usize = 15;

#[derive(Debug, Parser)]
#[command(name = "cxnet", version, about = "Complex/real CNN on DFT spectra for EEG classification")]
struct Cli {
    /// Base seed; overrides `seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Ten times fewer samples, one repeat, at most 15 epochs.
    #[arg(long, global = true)]
    smoke: bool,
    /// Number of cross-validation repeats.
    #[arg(long, global = true)]
    repeats: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Task name, e.g. zvss, svsns, sim1, classical_fixed, preset_random.
    #[arg(long)]
    task: String,
    /// Pre-processed recordings CSV, needed by the recorded-data tasks.
    #[arg(long, env = "CXNET_UCI_CSV")]
    data: Option<PathBuf>,
    /// Samples per class of a simulated task.
    #[arg(long)]
    per_class: Option<usize>,
    /// Signal-to-noise weight of an event-related potential task.
    #[arg(long)]
    snr: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a simulated dataset.
    Simulate(DataArgs),
    /// Train once on a single train/validation/test split.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "hybrid")]
        method: String,
    },
    /// Repeated k-fold cross-validation of one method.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "hybrid")]
        method: String,
    },
    /// Entropy-feature baseline over every feature combination.
    Features(DataArgs),
    /// Parameter and memory table of the hybrid and the baseline network.
    Params {
        /// Signal length in samples.
        #[arg(long, default_value_t = 178)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
    },
    /// Accuracy grids over the AR(1) phase parameters.
    #[command(name = "sim1-grid")]
    Sim1Grid {
        #[arg(long, value_delimiter = ',')]
        beta1: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        var: Option<Vec<f64>>,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Accuracy table of every method on the event-related potential tasks.
    #[command(name = "sim2-table")]
    Sim2Table {
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long)]
        snr: Option<f64>,
    },
}

/// Settings assembled from defaults, the config file and flags.
#[derive(Debug, Clone)]
struct Context {
    seed: u64,
    out: PathBuf,
    smoke: bool,
    run: RunSettings,
    sim: SimSettings,
    features: FeatureConfig,
    entries: Vec<(String, String)>,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("'{v}' is not a valid value for {key}")))
}

/// Reads `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key=value, got '{line}'"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let mut ctx = Context {
            seed: 0,
            out: cli.out.clone(),
            smoke: cli.smoke,
            run: RunSettings::default(),
            sim: SimSettings::default(),
            features: FeatureConfig::default(),
            entries: Vec::new(),
        };
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (k, v) in parse_config(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))? {
                ctx.apply(&k, &v)?;
            }
        }
        if let Some(seed) = cli.seed {
            ctx.seed = seed;
        }
        if let Some(r) = cli.repeats {
            ctx.run.plan.repeats = r;
        }
        if ctx.smoke {
            ctx.run.plan.repeats = 1;
            let capped = ctx.run.model_config(InputEncoding::Time)?.max_epochs.min(SMOKE_MAX_EPOCHS);
            ctx.run.model_overrides.push(("max_epochs".into(), capped.to_string()));
        }
        ctx.run.plan.seed = ctx.seed;
        ctx.run.feature_template.features = ctx.features;
        Ok(ctx)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "cv.k" => self.run.plan.k = parse_value(key, value)?,
            "cv.repeats" => self.run.plan.repeats = parse_value(key, value)?,
            "sim.per_class" => self.sim.per_class = Some(parse_value(key, value)?),
            "sim.snr" => self.sim.snr = Some(parse_value(key, value)?),
            "sim.beta1" => self.sim.beta1 = parse_value(key, value)?,
            "sim.noise_var" => self.sim.noise_var = parse_value(key, value)?,
            "svm.lambda" => {
                self.run.feature_template.lambdas =
                    value.split(',').map(|v| parse_value(key, v)).collect::<Result<Vec<f64>>>()?;
                self.run.feature_template.svm.lambda = self.run.feature_template.lambdas[0];
            }
            "svm.epochs" => self.run.feature_template.svm.epochs = parse_value(key, value)?,
            "svm.batch" => {
                self.run.feature_template.svm.batch = if value == "full" { None } else { Some(parse_value(key, value)?) }
            }
            "features.bins" => self.features.histogram_bins = parse_value(key, value)?,
            "features.renyi_alpha" => self.features.renyi_alpha = parse_value(key, value)?,
            "features.masks" => {
                self.run.masks = value
                    .split(',')
                    .map(|v| parse_value::<u8>(key, v).and_then(FeatureMask::new))
                    .collect::<Result<Vec<_>>>()?
            }
            k if k.starts_with("model.") => {
                let sub = &k["model.".len()..];
                let mut probe = ModelConfig::hybrid(2, 2);
                if !probe.apply_kv([(sub, value)])?.is_empty() {
                    return Err(Error::InvalidConfig(format!("unknown config key '{key}'")));
                }
                self.run.model_overrides.push((sub.to_string(), value.to_string()));
            }
            _ => return Err(Error::InvalidConfig(format!("unknown config key '{key}'"))),
        }
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    fn sim_for(&self, args: Option<&DataArgs>) -> SimSettings {
        let mut sim = self.sim.clone();
        if let Some(a) = args {
            sim.per_class = a.per_class.or(sim.per_class);
            sim.snr = a.snr.or(sim.snr);
        }
        sim
    }

    fn scaled_per_class(&self, task: Task, sim: &SimSettings) -> usize {
        let p = sim.per_class_for(task);
        if self.smoke {
            p.div_ceil(SMOKE_DIVISOR)
        } else {
            p
        }
    }

    fn dataset(&self, args: &DataArgs) -> Result<(Task, LabeledDataset)> {
        let task: Task = args.task.parse()?;
        if task.needs_recordings() {
            let path = args
                .data
                .as_ref()
                .ok_or_else(|| Error::InvalidTask(format!("{task} needs --data <csv> or CXNET_UCI_CSV")))?;
            let all = load_uci_csv(path, false)?;
            let mut data = make_task(&all, task)?;
            if self.smoke {
                data = thin_per_class(&data, SMOKE_DIVISOR, self.seed);
            }
            return Ok((task, data));
        }
        let mut sim = self.sim_for(Some(args));
        sim.per_class = Some(self.scaled_per_class(task, &sim));
        Ok((task, generate_task(task, &sim, self.seed)?))
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        Ok(&self.out)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out_dir()?.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn manifest(&self, command: &str, extra: &[(String, String)]) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "command={command}");
        let _ = writeln!(text, "seed={}", self.seed);
        let _ = writeln!(text, "git_revision={}", git_revision());
        let _ = writeln!(text, "smoke={}", self.smoke);
        let _ = writeln!(text, "cv.k={}", self.run.plan.k);
        let _ = writeln!(text, "cv.repeats={}", self.run.plan.repeats);
        for (k, v) in self.entries.iter().chain(extra) {
            let _ = writeln!(text, "{k}={v}");
        }
        for (k, v) in &self.run.model_overrides {
            let _ = writeln!(text, "model.{k}={v}");
        }
        self.write("manifest.txt", &text)?;
        Ok(())
    }
}

fn git_revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

fn methods_from(list: &Option<Vec<String>>, default: &[Method]) -> Result<Vec<Method>> {
    match list {
        Some(names) => names.iter().map(|n| n.parse()).collect(),
        None => Ok(default.to_vec()),
    }
}

fn data_kv(task: Task, data: &LabeledDataset, sim: &SimSettings) -> Vec<(String, String)> {
    let mut kv = vec![
        ("task".to_string(), task.name().to_string()),
        ("samples".to_string(), data.len().to_string()),
        ("class_counts".to_string(), format!("{:?}", data.class_counts())),
    ];
    if !task.needs_recordings() {
        kv.extend(sim.to_kv().into_iter().map(|(k, v)| (format!("sim.{k}"), v)));
    }
    kv
}

fn execute(cli: Cli) -> Result<()> {
    let ctx = Context::new(&cli)?;
    match &cli.command {
        Command::Simulate(args) => {
            let (task, data) = ctx.dataset(args)?;
            if task.needs_recordings() {
                return Err(Error::InvalidTask(format!("{task} is not a simulated task")));
            }
            let kv = data_kv(task, &data, &ctx.sim_for(Some(args)));
            let path = ctx.write("dataset.csv", &data.to_csv(&kv))?;
            ctx.manifest("simulate", &kv)?;
            println!("wrote {} samples to {}", data.len(), path.display());
        }
        Command::Train { data: args, method } => {
            let (task, data) = ctx.dataset(args)?;
            let Method::Network(encoding) = method.parse::<Method>()? else {
                return Err(Error::InvalidConfig("train supports network methods only".into()));
            };
            let plan = ctx.run.plan;
            plan.validate(data.len())?;
            let folds = plan.folds(data.len(), 0);
            let (train_idx, valid_idx, test_idx) = plan.split(&folds, 0);
            let encoded = encode_dataset(&data.signals, &data.labels, data.n_classes(), encoding, None)?;
            let config = ModelConfig {
                input_len: encoded.len,
                n_classes: data.n_classes(),
                seed: ctx.seed,
                ..ctx.run.model_config(encoding)?
            };
            let scaler = encoded.fit_scaler(&train_idx)?;
            let mut train_set = encoded.subset(&train_idx)?;
            train_set.apply(&scaler)?;
            let mut valid_set = encoded.subset(&valid_idx)?;
            valid_set.apply(&scaler)?;
            let outcome = train(build(&config)?, &train_set, &valid_set)?;
            let merged: Vec<usize> = train_idx.iter().chain(&valid_idx).copied().collect();
            let scaler = encoded.fit_scaler(&merged)?;
            let mut merged_set = encoded.subset(&merged)?;
            merged_set.apply(&scaler)?;
            let mut test_set = encoded.subset(&test_idx)?;
            test_set.apply(&scaler)?;
            let (model, _) = fit_epochs(build(&config)?, &merged_set, outcome.best_epoch)?;
            let confusion = evaluate(&model, &test_set)?;
            ctx.write("history.csv", &history_csv(&outcome.history))?;
            checkpoint::save(&model, &ctx.out_dir()?.join("model.ckpt"))?;
            let summary = format!(
                "task,method,best_epoch,valid_accuracy,test_accuracy,n_test\n{task},{method},{},{:?},{:?},{}\n",
                outcome.best_epoch,
                outcome.best_accuracy,
                confusion.accuracy(),
                test_idx.len()
            );
            ctx.write("train.csv", &summary)?;
            let mut kv = data_kv(task, &data, &ctx.sim_for(Some(args)));
            kv.push(("method".into(), method.clone()));
            ctx.manifest("train", &kv)?;
            println!(
                "{task} {method}: best epoch {}, test accuracy {:.4}",
                outcome.best_epoch,
                confusion.accuracy()
            );
        }
        Command::Cv { data: args, method } => {
            let (task, data) = ctx.dataset(args)?;
            let method: Method = method.parse()?;
            let report = run_method(task.name(), &data, method, &ctx.run)?;
            ctx.write("report.csv", &report.to_csv())?;
            ctx.write("confusion.csv", &report.confusion_csv())?;
            let mut kv = data_kv(task, &data, &ctx.sim_for(Some(args)));
            kv.push(("method".into(), method.to_string()));
            ctx.manifest("cv", &kv)?;
            println!("{task} {}: {:.4} +- {:.4} over {} folds", report.method, report.mean, report.std, report.rows.len());
        }
        Command::Features(args) => {
            let (task, data) = ctx.dataset(args)?;
            let matrix = FeatureMatrix::compute(&data.signals, &data.labels, data.n_classes(), &ctx.features)?;
            ctx.write("features.csv", &matrix.to_csv())?;
            let sweep = sweep_masks(task.name(), &data, &ctx.run.feature_template, &ctx.run.masks, &ctx.run.plan)?;
            ctx.write("sweep.csv", &sweep.to_csv())?;
            let (mask, best) = sweep.best().ok_or_else(|| Error::InvalidConfig("no feature masks".into()))?;
            ctx.write("report.csv", &best.to_csv())?;
            ctx.write("confusion.csv", &best.confusion_csv())?;
            ctx.manifest("features", &data_kv(task, &data, &ctx.sim_for(Some(args))))?;
            println!("{task}: best features {mask} at {:.4} +- {:.4}", best.mean, best.std);
        }
        Command::Params { samples, classes } => {
            let mut csv = String::from("model,layer,output,params,memory\n");
            let mut totals = Vec::new();
            for (label, encoding) in [("hybrid", InputEncoding::ComplexHalfSpectrum), ("baseline", InputEncoding::Time)] {
                let config = ModelConfig {
                    seed: ctx.seed,
                    ..ModelConfig::for_encoding(encoding, *samples, *classes)
                };
                let table = build(&config)?.count_params();
                println!("{label} ({encoding} input)\n{table}\n");
                for r in &table.rows {
                    let shape = r.output_shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
                    let _ = writeln!(csv, "{label},{},{shape},{},{}", r.name, r.params, r.activations);
                }
                let _ = writeln!(csv, "{label},total,,{},{}", table.total_params(), table.total_activations());
                totals.push(table.total_params() as f64);
            }
            println!("parameter ratio hybrid/baseline = {:.4}", totals[0] / totals[1]);
            ctx.write("params.csv", &csv)?;
            ctx.manifest(
                "params",
                &[("samples".into(), samples.to_string()), ("classes".into(), classes.to_string())],
            )?;
        }
        Command::Sim1Grid {
            beta1,
            var,
            per_class,
            methods,
        } => {
            let beta1 = beta1.clone().unwrap_or_else(default_grid_axis);
            let var = var.clone().unwrap_or_else(default_grid_axis);
            let methods = methods_from(methods, &Method::GRID)?;
            let mut sim = ctx.sim.clone();
            sim.per_class = per_class.or(sim.per_class);
            let per_class = ctx.scaled_per_class(Task::Sim1, &sim);
            let grid = run_sim1_grid(&beta1, &var, per_class, &methods, &ctx.run, ctx.seed)?;
            ctx.write("grid.csv", &grid.to_csv())?;
            ctx.manifest(
                "sim1-grid",
                &[
                    ("per_class".into(), per_class.to_string()),
                    ("beta1".into(), format!("{beta1:?}")),
                    ("var".into(), format!("{var:?}")),
                    ("methods".into(), methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
                ],
            )?;
            println!("wrote {}x{} grid for {} methods", beta1.len(), var.len(), methods.len());
        }
        Command::Sim2Table {
            tasks,
            methods,
            per_class,
            snr,
        } => {
            let tasks: Vec<Task> = match tasks {
                Some(names) => names.iter().map(|n| n.parse()).collect::<Result<_>>()?,
                None => Task::ERP.to_vec(),
            };
            let methods = methods_from(methods, &Method::TABLE)?;
            let mut sim = ctx.sim.clone();
            sim.per_class = per_class.or(sim.per_class);
            sim.snr = snr.or(sim.snr);
            // Every task shares one size, so the smoke divisor is applied once.
            sim.per_class = Some(ctx.scaled_per_class(Task::ClassicalFixed, &sim));
            let table = run_sim2_table(&tasks, &methods, &sim, &ctx.run, ctx.seed)?;
            ctx.write("table.csv", &table.to_csv())?;
            let mut kv: Vec<(String, String)> = sim.to_kv().into_iter().map(|(k, v)| (format!("sim.{k}"), v)).collect();
            kv.push(("tasks".into(), tasks.iter().map(|t| t.name()).collect::<Vec<_>>().join(",")));
            kv.push(("methods".into(), methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")));
            ctx.manifest("sim2-table", &kv)?;
            print!("{}", table.to_csv());
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs it. Returns the process exit code:
/// 0 on success, 2 on usage or configuration errors, 1 on runtime failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::InvalidTask(_) => 2,
                _ => 1,
            }
        }
    }
}
