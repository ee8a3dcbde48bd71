use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use graphwarp::chem::synthetic::diameter_parity;
use graphwarp::chem::{random_split, skeleton_split, Dataset, Split, SplitError, TaskKind, Vocab, BOND_TYPES};
use graphwarp::experiment::{run_sweep, ExperimentSpec, SweepData, SweepError};
use graphwarp::gnn::HostKind;
use graphwarp::gradsuite::{run_suite, SuiteConfig};
use graphwarp::model::{load_checkpoint, save_checkpoint, ModelConfig, Variant};
use graphwarp::tensor::inject_fault;
use graphwarp::train::{masked_mae, mean_task_auc, task_loss_value, train_loop, Prepared, TrainConfig};
use serde_json::json;

use crate::args::{CommonArgs, DataArgs, EvalArgs, GradcheckArgs, SweepArgs, TrainArgs};
use crate::config::FileConfig;
use crate::CliError;

const DATA_KEYS: [&str; 7] = ["data", "synthetic", "synthetic-seed", "task", "split", "split-seed", "fractions"];
const COMMON_KEYS: [&str; 6] = ["heads", "relations", "epochs", "batch-size", "dropout", "out"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    DATA_KEYS.iter().chain(&COMMON_KEYS).chain(extra).copied().collect()
}

struct Loaded {
    name: String,
    data: Dataset,
    split: Split,
}

fn parse_fractions(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--fractions `{s}`: {e}")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(CliError::Usage(format!("--fractions `{s}` needs three values"))),
    }
}

fn load_data(args: DataArgs, file: &FileConfig, task_hint: Option<TaskKind>) -> Result<Loaded, CliError> {
    let path: Option<PathBuf> = file.optional(args.data, "data")?;
    let synthetic: Option<usize> = file.optional(args.synthetic, "synthetic")?;
    let task: Option<TaskKind> = file.optional(args.task, "task")?.or(task_hint);
    let (name, data) = match (path, synthetic) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--data and --synthetic are exclusive".into())),
        (None, None) => return Err(CliError::Usage("--data is required (or --synthetic N)".into())),
        (None, Some(n)) => {
            if task == Some(TaskKind::Regress) {
                return Err(CliError::Usage("synthetic data is a classification task".into()));
            }
            let seed = file.value(args.synthetic_seed, "synthetic-seed", 0)?;
            ("diameter_parity".to_string(), diameter_parity(n, seed))
        }
        (Some(path), None) => {
            let data = Dataset::from_csv_path(&path, task.unwrap_or(TaskKind::Classify))
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let name = path
                .file_stem()
                .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
            (name, data)
        }
    };
    let fractions = parse_fractions(&file.value(args.fractions, "fractions", "0.8,0.1,0.1".to_string())?)?;
    let seed = file.value(args.split_seed, "split-seed", 0)?;
    let split = match file.value(args.split, "split", "skeleton".to_string())?.as_str() {
        "skeleton" => skeleton_split(&data.graphs, fractions, seed),
        "random" => random_split(data.len(), fractions, seed),
        other => return Err(CliError::Usage(format!("unknown split `{other}` (expected skeleton or random)"))),
    }
    .map_err(|e| match e {
        SplitError::BadFractions(_) => CliError::Usage(e.to_string()),
        SplitError::TooSmall(_) => CliError::Data(e.to_string()),
    })?;
    log::info!(
        "{name}: {} graphs, split {}/{}/{}",
        data.len(),
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    Ok(Loaded { name, data, split })
}

struct Common {
    heads: usize,
    epochs: usize,
    batch_size: usize,
    dropout: f64,
    out: PathBuf,
}

fn common(args: CommonArgs, file: &FileConfig) -> Result<Common, CliError> {
    let relations = file.value(args.relations, "relations", BOND_TYPES)?;
    if relations != BOND_TYPES {
        return Err(CliError::Usage(format!(
            "--relations must be {BOND_TYPES}, the number of bond types"
        )));
    }
    let c = Common {
        heads: file.value(args.heads, "heads", 8)?,
        epochs: file.value(args.epochs, "epochs", 30)?,
        batch_size: file.value(args.batch_size, "batch-size", 32)?,
        dropout: file.value(args.dropout, "dropout", 0.0)?,
        out: file
            .optional(args.out, "out")?
            .ok_or_else(|| CliError::Usage("--out is required".into()))?,
    };
    if c.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be at least 1".into()));
    }
    Ok(c)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    fs::write(path, format!("{value:#}\n")).map_err(io_err(path))
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let file = FileConfig::load(
        args.common.config.as_deref(),
        &keys(&["host", "variant", "layers", "dim", "seed"]),
    )?;
    let c = common(args.common, &file)?;
    let host = file.value(args.host, "host", HostKind::Rsgcn)?;
    let variant = file.value(args.variant, "variant", Variant::Full)?;
    let layers = file.value(args.layers, "layers", 3)?;
    let dim = file.value(args.dim, "dim", 50)?;
    let seed = file.value(args.seed, "seed", 0)?;
    let loaded = load_data(args.data, &file, None)?;
    let vocab = Vocab::organic();
    let prepared = Prepared::new(&loaded.data, &vocab);
    let config = ModelConfig {
        host,
        variant,
        layers,
        dim,
        heads: c.heads,
        relations: BOND_TYPES,
        tasks: prepared.tasks,
        task: prepared.task,
        dropout: c.dropout,
        seed,
        node_features: vocab.width(),
        super_features: vocab.supernode_width(),
    };
    config.validate().map_err(CliError::Usage)?;
    let train = TrainConfig {
        epochs: c.epochs,
        batch_size: c.batch_size,
    };
    let outcome = train_loop(&config, &prepared, &loaded.split, &train).map_err(|e| CliError::Runtime(e.to_string()))?;

    fs::create_dir_all(&c.out).map_err(io_err(&c.out))?;
    let record = c.out.join("record.jsonl");
    fs::write(&record, outcome.record.to_jsonl()).map_err(io_err(&record))?;
    save_checkpoint(c.out.join("model.ckpt"), &outcome.model, Some(&vocab))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_json(
        &c.out.join("timing.json"),
        &json!({ "wall_time_secs": outcome.wall_time.as_secs_f64() }),
    )?;
    let s = &outcome.record.summary;
    println!(
        "{}",
        json!({
            "dataset": loaded.name,
            "best_epoch": s.best_epoch,
            "metric": s.metric,
            "best_val_metric": s.best_val_metric,
            "test_metric_at_best": s.test_metric_at_best,
            "final_train_loss": s.final_train_loss,
        })
    );
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let checkpoint = load_checkpoint(&args.checkpoint)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.checkpoint.display())))?;
    let vocab = checkpoint.vocab.clone().unwrap_or_else(Vocab::organic);
    let task = checkpoint.config.task;
    let file = FileConfig::default();
    if args.data.task.is_some_and(|t| t != task) {
        return Err(CliError::Usage(format!("checkpoint was trained for the {task} task")));
    }
    let loaded = load_data(args.data, &file, Some(task))?;
    let model = checkpoint.into_model().map_err(|e| CliError::Data(e.to_string()))?;
    let prepared = Prepared::new(&loaded.data, &vocab);
    if prepared.tasks != model.config().tasks {
        return Err(CliError::Data(format!(
            "dataset has {} tasks, checkpoint expects {}",
            prepared.tasks,
            model.config().tasks
        )));
    }
    let subset = args.subset.unwrap_or_else(|| "test".into());
    let indices: Vec<usize> = match subset.as_str() {
        "train" => loaded.split.train,
        "val" => loaded.split.val,
        "test" => loaded.split.test,
        "all" => (0..prepared.parts.len()).collect(),
        other => return Err(CliError::Usage(format!("unknown subset `{other}`"))),
    };
    let batch_size = args.batch_size.unwrap_or(32);
    if batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be at least 1".into()));
    }
    let (mut pred, mut labels, mut mask) = (Vec::new(), Vec::new(), Vec::new());
    for chunk in indices.chunks(batch_size) {
        let batch = prepared.batch(chunk);
        pred.extend(model.predict(&batch).map_err(|e| CliError::Runtime(e.to_string()))?);
        labels.extend_from_slice(&batch.labels);
        mask.extend_from_slice(&batch.label_mask);
    }
    let loss = task_loss_value(task, &pred, &labels, &mask).map_err(|e| CliError::Data(e.to_string()))?;
    let (metric_name, metric) = match task {
        TaskKind::Classify => ("roc_auc", mean_task_auc(&pred, &labels, &mask, prepared.tasks)),
        TaskKind::Regress => ("mae", masked_mae(&pred, &labels, &mask)),
    };
    println!(
        "{}",
        json!({
            "dataset": loaded.name,
            "subset": subset,
            "graphs": indices.len(),
            "loss": loss,
            "metric_name": metric_name,
            "metric": metric,
        })
    );
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs) -> Result<(), CliError> {
    let cfg = SuiteConfig {
        seed: args.seed,
        ..SuiteConfig::default()
    };
    let _guard = inject_fault(args.inject_fault);
    let report = run_suite(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    for c in &report.components {
        println!(
            "{:<12} {:.3e} {}",
            c.name,
            c.max_rel_error,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    if report.passed() {
        return Ok(());
    }
    let names: Vec<&str> = report.offenders().iter().map(|c| c.name.as_str()).collect();
    let mut msg = format!("{} over tolerance {:e}", names.join(", "), cfg.tolerance);
    if let Some(op) = args.inject_fault {
        msg.push_str(&format!(" (backward rule of `{op}` was corrupted)"));
    }
    Err(CliError::GradCheck(msg))
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let file = FileConfig::load(
        args.common.config.as_deref(),
        &keys(&["host", "variant", "layers", "dim", "seeds", "jobs"]),
    )?;
    let c = common(args.common, &file)?;
    let hosts = file.list(args.host, "host", vec![HostKind::Rsgcn])?;
    let variants = file.list(args.variant, "variant", vec![Variant::Full])?;
    let layers = file.list(args.layers, "layers", vec![3])?;
    let dims = file.list(args.dim, "dim", vec![50])?;
    let seeds = file.list(args.seeds, "seeds", vec![0])?;
    let jobs = file.value(args.jobs, "jobs", 1)?;
    let loaded = load_data(args.data, &file, None)?;
    let vocab = Vocab::organic();
    let prepared = Prepared::new(&loaded.data, &vocab);
    let spec = ExperimentSpec {
        dataset: loaded.name,
        hosts,
        variants,
        layers,
        dims,
        seeds,
        heads: c.heads,
        dropout: c.dropout,
        train: TrainConfig {
            epochs: c.epochs,
            batch_size: c.batch_size,
        },
        jobs,
    };
    let data = SweepData {
        prepared: &prepared,
        split: &loaded.split,
        node_features: vocab.width(),
        super_features: vocab.supernode_width(),
    };
    let start = Instant::now();
    let result = run_sweep(&spec, &data).map_err(|e| match e {
        SweepError::Usage(m) => CliError::Usage(m),
        other => CliError::Runtime(other.to_string()),
    })?;
    result.write(&c.out).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_json(
        &c.out.join("timing.json"),
        &json!({
            "wall_time_secs": start.elapsed().as_secs_f64(),
            "runs": result.records.len(),
            "failed": result.failures.len(),
        }),
    )?;
    println!(
        "{} runs, {} failed, {} reduction rows written to {}",
        result.records.len(),
        result.failures.len(),
        result.reductions.len(),
        c.out.display()
    );
    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} runs failed, see failures.csv",
            result.failures.len()
        )))
    }
}
