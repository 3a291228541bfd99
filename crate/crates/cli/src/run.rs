//! The four subcommands. Each takes a validated [`RunConfig`], writes its
//! artifacts under `out` and returns the report it wrote.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use grpsparse::data::bootstrap;
use grpsparse::grouping::{group_norm, total_regularizer};
use grpsparse::metrics::{evaluate, mean_pairwise_jaccard};
use grpsparse::{train, Dataset, EvalReport, Network, SparsityMask, TrainOutcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Splits};
use crate::error::{CliError, Result};

pub const METRICS_FILE: &str = "metrics.json";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const MODEL_FILE: &str = "model.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const STABILITY_FILE: &str = "stability.json";
pub const EVAL_FILE: &str = "eval.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub lambda: f64,
    pub dims: Vec<usize>,
    pub epochs: usize,
    pub num_groups: usize,
    pub sparse_count: usize,
    pub sparse_groups: Vec<usize>,
    pub sparse_group_names: Vec<String>,
    /// Groups in the order they were pruned.
    pub pruning_order: Vec<usize>,
    pub regularizer: f64,
    pub final_train_loss: Option<f64>,
    pub train: EvalReport,
    pub test: EvalReport,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub seed: u64,
    pub sparse_count: Option<usize>,
    pub sparse_groups: Option<Vec<usize>>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub max_cc: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub runs: usize,
    pub seeds: Vec<u64>,
    /// Groups kept (not pruned) by each run.
    pub selected: Vec<Vec<usize>>,
    pub mean_jaccard: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: usize,
    pub name: String,
    pub size: usize,
    pub norm: f64,
    pub sparse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub report: EvalReport,
    pub sparse_groups: Vec<usize>,
    pub groups: Vec<GroupSummary>,
}

/// Splits `"1e-3,0.01, 0"` into finite, non-negative values.
pub fn parse_lambdas(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| CliError::Usage(format!("bad lambda {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("at least one lambda is required".into()));
    }
    Ok(values)
}

/// Seed for row / run `index` of a multi-model command.
pub fn derive_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_confusion(path: &Path, confusion: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let classes = confusion.len();
    let mut header = vec!["true".to_string()];
    header.extend((0..classes).map(|c| format!("pred_{c}")));
    w.write_record(&header)?;
    for (t, row) in confusion.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(usize::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn eval_on(net: &Network, data: &Dataset) -> Result<EvalReport> {
    if net.input_dim() != data.p() {
        return Err(grpsparse::Error::DimensionMismatch(format!(
            "model takes {} inputs, dataset has {} features",
            net.input_dim(),
            data.p()
        ))
        .into());
    }
    if data.num_classes() > net.output_dim().max(2) {
        return Err(grpsparse::Error::DimensionMismatch(format!(
            "model has {} outputs, dataset has {} classes",
            net.output_dim(),
            data.num_classes()
        ))
        .into());
    }
    let scores = net.predict(data.x())?;
    Ok(evaluate(&scores, data.y(), net.output_dim())?)
}

struct Fitted {
    net: Network,
    outcome: TrainOutcome,
}

/// Fresh initialization from `seed`, then training with `lambda` and `seed`.
fn fit(cfg: &RunConfig, data: &Dataset, lambda: f64, seed: u64, trace: Option<&Path>) -> Result<Fitted> {
    let mut tc = cfg.effective_train(data.partition().k());
    tc.lambda = lambda;
    tc.seed = seed;
    let loss = cfg.loss_spec(data)?;
    let mut net = Network::init(&cfg.dims(data), cfg.activation, seed)?;
    let outcome = match trace {
        Some(path) => {
            let mut w = create(path)?;
            let out = train(&mut net, data, &loss, &tc, Some(&mut w))?;
            w.flush().map_err(|e| CliError::io(path, e))?;
            out
        }
        None => train(&mut net, data, &loss, &tc, None)?,
    };
    Ok(Fitted { net, outcome })
}

/// Trains one model; writes `metrics.json`, `trace.jsonl`, `model.json`
/// and, if configured, `confusion.csv`.
pub fn cmd_train(cfg: &RunConfig, out: &Path, seed: Option<u64>) -> Result<TrainReport> {
    let start = Instant::now();
    let seed = seed.unwrap_or(cfg.train.seed);
    let Splits { train: tr, test } = cfg.load_splits()?;
    ensure_dir(out)?;
    let Fitted { net, outcome } = fit(cfg, &tr, cfg.train.lambda, seed, Some(&out.join(TRACE_FILE)))?;
    net.save(&out.join(MODEL_FILE))?;

    let part = tr.partition();
    let sparse = outcome.mask.sparse_groups();
    let report = TrainReport {
        seed,
        lambda: cfg.train.lambda,
        dims: net.dims(),
        epochs: outcome.traces.len(),
        num_groups: part.k(),
        sparse_count: sparse.len(),
        sparse_group_names: sparse.iter().map(|&g| part.name(g).to_string()).collect(),
        sparse_groups: sparse,
        pruning_order: outcome.pruning_order(),
        regularizer: total_regularizer(&net, part)?,
        final_train_loss: outcome.traces.last().map(|t| t.train_loss),
        train: eval_on(&net, &tr)?,
        test: eval_on(&net, &test)?,
        seconds: start.elapsed().as_secs_f64(),
    };
    if cfg.output.confusion_csv {
        write_confusion(&out.join(CONFUSION_FILE), &report.test.confusion)?;
    }
    write_json(&out.join(METRICS_FILE), &report)?;
    Ok(report)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?)
}

/// One model per lambda, rows sorted by lambda. Row `i` uses
/// `derive_seed(seed, i)` unless `pin_seed`, in which case every row starts
/// from the same initialization. A failing row is recorded and the sweep
/// goes on.
pub fn cmd_sweep(
    cfg: &RunConfig,
    lambdas: &[f64],
    out: &Path,
    seed: Option<u64>,
    pin_seed: bool,
    jobs: usize,
) -> Result<SweepResult> {
    if lambdas.is_empty() {
        return Err(CliError::Usage("at least one lambda is required".into()));
    }
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let base = seed.unwrap_or(cfg.train.seed);
    let Splits { train: tr, test } = cfg.load_splits()?;
    ensure_dir(out)?;

    let row = |i: usize, lambda: f64| -> SweepRow {
        let start = Instant::now();
        let seed = if pin_seed { base } else { derive_seed(base, i) };
        let result = fit(cfg, &tr, lambda, seed, Some(&out.join(format!("row-{i}.trace.jsonl")))).and_then(|f| {
            f.net.save(&out.join(format!("row-{i}.model.json")))?;
            Ok((f.outcome.mask.sparse_groups(), eval_on(&f.net, &test)?))
        });
        let seconds = start.elapsed().as_secs_f64();
        match result {
            Ok((sparse, rep)) => SweepRow {
                lambda,
                seed,
                sparse_count: Some(sparse.len()),
                sparse_groups: Some(sparse),
                accuracy: Some(rep.accuracy),
                auc: rep.auc,
                max_cc: rep.max_cc,
                seconds,
                error: None,
            },
            Err(e) => SweepRow {
                lambda,
                seed,
                sparse_count: None,
                sparse_groups: None,
                accuracy: None,
                auc: None,
                max_cc: None,
                seconds,
                error: Some(e.to_string()),
            },
        }
    };
    let rows: Vec<SweepRow> =
        thread_pool(jobs)?.install(|| lambdas.par_iter().enumerate().map(|(i, &l)| row(i, l)).collect());
    let result = SweepResult { rows };
    write_sweep_csv(&out.join(SWEEP_CSV), &result)?;
    write_json(&out.join(SWEEP_JSON), &result)?;
    Ok(result)
}

fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "lambda",
        "sparse_count",
        "sparse_groups",
        "accuracy",
        "auc",
        "max_cc",
        "seconds",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in &result.rows {
        let groups = r
            .sparse_groups
            .as_ref()
            .map(|g| g.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        w.write_record([
            r.lambda.to_string(),
            r.sparse_count.map_or(String::new(), |c| c.to_string()),
            groups,
            opt(r.accuracy),
            opt(r.auc),
            opt(r.max_cc),
            r.seconds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `runs` bootstrap resamples of the training set, one model each; reports
/// the mean pairwise Jaccard similarity of the kept group sets.
pub fn cmd_stability(
    cfg: &RunConfig,
    runs: usize,
    out: &Path,
    seed: Option<u64>,
    jobs: usize,
) -> Result<StabilityReport> {
    if runs < 2 {
        return Err(CliError::Usage(format!("stability needs at least 2 runs, got {runs}")));
    }
    let base = seed.unwrap_or(cfg.train.seed);
    let tr = cfg.load_splits()?.train;
    ensure_dir(out)?;
    let seeds: Vec<u64> = (0..runs).map(|r| derive_seed(base, r)).collect();
    let selected = thread_pool(jobs)?.install(|| {
        seeds
            .par_iter()
            .map(|&s| {
                let sample = bootstrap(&tr, s);
                let fitted = fit(cfg, &sample, cfg.train.lambda, s, None)?;
                Ok(fitted.outcome.mask.live_groups())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let sets: Vec<BTreeSet<usize>> = selected.iter().map(|s| s.iter().copied().collect()).collect();
    let report = StabilityReport {
        runs,
        seeds,
        mean_jaccard: mean_pairwise_jaccard(&sets)?,
        selected,
    };
    write_json(&out.join(STABILITY_FILE), &report)?;
    Ok(report)
}

/// Pure inference with a saved model on the config's evaluation set.
pub fn cmd_eval(snapshot: &Path, cfg: &RunConfig, out: &Path, confusion_csv: bool) -> Result<EvalOutput> {
    let net = Network::load(snapshot)?;
    let test = cfg.load_splits()?.test;
    let report = eval_on(&net, &test)?;
    let part = test.partition();
    let mask = SparsityMask::from_network(&net, part)?;
    let groups = (0..part.k())
        .map(|g| {
            Ok(GroupSummary {
                group: g,
                name: part.name(g).to_string(),
                size: part.group(g).len(),
                norm: group_norm(&net, part, g)?,
                sparse: mask.is_sparse(g),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let output = EvalOutput {
        report,
        sparse_groups: mask.sparse_groups(),
        groups,
    };
    ensure_dir(out)?;
    if confusion_csv || cfg.output.confusion_csv {
        write_confusion(&out.join(CONFUSION_FILE), &output.report.confusion)?;
    }
    write_json(&out.join(EVAL_FILE), &output)?;
    Ok(output)
}

/// `--out` if given, else the config's `output.dir`, else the working
/// directory.
pub fn output_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}
