use std::fs;
use std::io;
use std::path::Path;

use anyhow::{Context, Result};
use beamadapt::balancing::{solve_balancing, BalancingOptions};
use beamadapt::channels::ScenarioConfig;
use beamadapt::datasets::{build_tasks, generate_dataset, merge_pools, DatasetFile};
use beamadapt::nn::{Checkpoint, NetworkConfig};
use beamadapt::numerics::{dbm_to_watts, RandomStream};
use beamadapt::offline::{evaluate, fine_tune, initial_model, meta_adapt, meta_train, pretrain, train_joint};
use beamadapt::online::{run_schedule, ScheduleConfig, Strategy};
use beamadapt::{ChannelInstance, ComplexMatrix, Error};
use num_complex::Complex;
use serde_json::{json, Value};

use crate::config::{load_json, load_or_default, require, RunConfig, SolveInput};
use crate::{AdaptMethod, TrainMethod};

const TASK_STREAM: u64 = 41;

/// Maps an error chain to the documented exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::RedrawRateExceeded { .. } => 3,
                Error::NonFiniteLoss(_) => 4,
                Error::InvalidConfig(_)
                | Error::UnknownModel(_)
                | Error::OutOfRange { .. }
                | Error::NonPositiveDistance(_)
                | Error::DimensionMismatch(_)
                | Error::DegenerateInstance(_)
                | Error::PoolTooSmall { .. }
                | Error::VersionMismatch { .. }
                | Error::CorruptPayload(_)
                | Error::Json(_)
                | Error::Io(_) => 2,
                _ => 1,
            };
        }
        if cause.is::<serde_json::Error>() || cause.is::<io::Error>() {
            return 2;
        }
    }
    1
}

fn echo(settings: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(settings)?);
    Ok(())
}

/// Prints the effective config including the worker count, which is kept
/// out of every output file so results do not depend on it.
fn echo_with_workers(settings: &Value, workers: usize) -> Result<()> {
    let mut shown = settings.clone();
    shown["workers"] = json!(workers);
    echo(&shown)
}

fn without_workers(mut value: Value) -> Value {
    match &mut value {
        Value::Object(map) => {
            map.remove("workers");
            for v in map.values_mut() {
                *v = without_workers(v.take());
            }
        }
        Value::Array(items) => {
            for v in items.iter_mut() {
                *v = without_workers(v.take());
            }
        }
        _ => {}
    }
    value
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_dataset(path: &Path) -> Result<DatasetFile> {
    DatasetFile::read(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::read(path).with_context(|| format!("reading checkpoint {}", path.display()))
}

fn dataset_ref(d: &DatasetFile) -> Result<Value> {
    Ok(json!({
        "scenario": d.header.scenario.model.as_str(),
        "count": d.header.count,
        "seed": d.header.seed,
        "stream": d.header.stream,
        "sha256": d.file_hash()?,
    }))
}

pub fn gen_data(config: &Path, out: &Path, count: usize, seed: u64, stream: u64, workers: usize) -> Result<()> {
    let mut scenario: ScenarioConfig = load_json(config).with_context(|| format!("reading {}", config.display()))?;
    scenario.seed = seed;
    require(workers > 0, "workers must be at least 1")?;
    echo(&json!({ "command": "gen-data", "scenario": scenario, "count": count, "seed": seed, "stream": stream, "workers": workers }))?;

    let data = generate_dataset(&scenario, count, &RandomStream::new(seed, stream), workers)?;
    data.write(out).with_context(|| format!("writing {}", out.display()))?;
    let h = &data.header;
    println!(
        "wrote {} records of {} (M={}, K={}, P={} dBm, {} redraws) to {}",
        h.count,
        h.scenario.model,
        h.m,
        h.k,
        h.p_dbm,
        h.redraws,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    method: TrainMethod,
    data: &[std::path::PathBuf],
    config: Option<&Path>,
    out: &Path,
    metrics: Option<&Path>,
    seed: Option<u64>,
    workers: Option<usize>,
    timings: bool,
) -> Result<()> {
    let mut run: RunConfig = load_or_default(config)?;
    if let Some(s) = seed {
        run.train.seed = s;
    }
    if let Some(w) = workers {
        run.train.workers = w;
    }
    run.train.validate()?;
    require(run.train.workers > 0, "workers must be at least 1")?;

    let files: Vec<DatasetFile> = data.iter().map(|p| read_dataset(p)).collect::<Result<_>>()?;
    let first = &files[0].header;
    for f in &files[1..] {
        require(
            (f.header.m, f.header.k, f.header.p_dbm) == (first.m, first.k, first.p_dbm),
            "all training datasets must share M, K and P",
        )?;
    }
    let mut net = NetworkConfig::new(first.m, first.k);
    if let Some(t) = run.input_transform {
        net.input_transform = t;
    }
    net.validate()?;
    let p_dbm = first.p_dbm;
    let scenario = files.iter().map(|f| f.header.scenario.model.as_str()).collect::<Vec<_>>().join("+");
    let sources = files.iter().map(dataset_ref).collect::<Result<Vec<_>>>()?;
    let method_name = match method {
        TrainMethod::Joint => "joint",
        TrainMethod::Pretrain => "pretrain",
        TrainMethod::Meta => "meta",
    };
    let settings = json!({ "command": "train", "method": method_name, "config": run, "network": net, "data": sources });
    echo_with_workers(&settings, run.train.workers)?;
    let settings = without_workers(settings);

    let pool = merge_pools(files.into_iter().map(|f| f.records));
    let model = initial_model(&net, &pool, run.train.seed);
    let (model, log) = match method {
        TrainMethod::Joint => train_joint(&pool, model, &run.train, "joint")?,
        TrainMethod::Pretrain => pretrain(&pool, model, &run.train)?,
        TrainMethod::Meta => {
            require(run.tasks > 0 && run.support > 0 && run.query > 0, "tasks, support and query must be positive")?;
            let mut rng = RandomStream::new(run.train.seed, TASK_STREAM);
            let tasks = build_tasks(&pool, run.tasks, run.support, run.query, &mut rng)?;
            meta_train(&tasks, model, &run.train)?
        }
    };

    Checkpoint { model, p_dbm, scenario, settings }
        .write(out)
        .with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = metrics {
        fs::write(path, log.to_csv(timings)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(last) = log.rows.last() {
        println!("{} finished after {} steps, final loss {:.6e}", method_name, last.step, last.loss);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn adapt(
    method: AdaptMethod,
    checkpoint: &Path,
    adapt_data: &Path,
    config: Option<&Path>,
    out: &Path,
    metrics: Option<&Path>,
    samples: Option<usize>,
    timings: bool,
) -> Result<()> {
    let mut run: RunConfig = load_or_default(config)?;
    if let Some(n) = samples {
        run.samples = n;
    }
    run.train.validate()?;
    require(run.samples > 0, "samples must be at least 1")?;

    let ck = read_checkpoint(checkpoint)?;
    let data = read_dataset(adapt_data)?;
    let cfg = &ck.model.config;
    require((data.header.m, data.header.k) == (cfg.m, cfg.k), "adaptation data does not match the checkpoint's M and K")?;
    if data.records.len() < run.samples {
        return Err(Error::PoolTooSmall { needed: run.samples, available: data.records.len() }.into());
    }
    let method_name = match method {
        AdaptMethod::Finetune => "finetune",
        AdaptMethod::MetaAdapt => "meta-adapt",
    };
    let settings = json!({
        "command": "adapt",
        "method": method_name,
        "config": run,
        "adapt_data": dataset_ref(&data)?,
        "source": ck.settings,
    });
    echo(&settings)?;
    let settings = without_workers(settings);

    let adapt = &data.records[..run.samples];
    let (model, log) = match method {
        AdaptMethod::Finetune => fine_tune(&ck.model, adapt, &run.train)?,
        AdaptMethod::MetaAdapt => meta_adapt(&ck.model, adapt, &run.train)?,
    };
    let scenario = data.header.scenario.model.as_str().to_string();
    Checkpoint { model, p_dbm: data.header.p_dbm, scenario, settings }
        .write(out)
        .with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = metrics {
        fs::write(path, log.to_csv(timings)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn eval(checkpoint: &Path, test_data: &Path, report: &Path, timings: bool) -> Result<()> {
    let ck = read_checkpoint(checkpoint)?;
    let test = read_dataset(test_data)?;
    let cfg = &ck.model.config;
    require((test.header.m, test.header.k) == (cfg.m, cfg.k), "test data does not match the checkpoint's M and K")?;

    let result = evaluate(&ck.model, &test.records)?;
    let mut results = serde_json::to_value(&result)?;
    if !timings {
        if let Some(obj) = results.as_object_mut() {
            obj.remove("per_channel_ms");
        }
    }
    let doc = json!({
        "command": "eval",
        "checkpoint": { "scenario": ck.scenario, "p_dbm": ck.p_dbm, "settings": ck.settings },
        "test_data": dataset_ref(&test)?,
        "results": results,
    });
    write_json(report, &doc)?;
    println!("{}", serde_json::to_string_pretty(&doc["results"])?);
    Ok(())
}

pub fn solve(instance_json: &Path, out: Option<&Path>) -> Result<()> {
    let input: SolveInput = load_json(instance_json).with_context(|| format!("reading {}", instance_json.display()))?;
    let k = input.h_re.len();
    let m = input.h_re.first().map_or(0, Vec::len);
    require(k > 0 && m > 0, "instance needs at least one user and one antenna")?;
    require(
        input.h_im.len() == k && input.h_re.iter().chain(&input.h_im).all(|r| r.len() == m),
        "h_re and h_im must both be K x M",
    )?;
    let power = match (input.power, input.p_dbm) {
        (Some(p), None) => p,
        (None, Some(dbm)) => dbm_to_watts(dbm),
        _ => return Err(Error::InvalidConfig("give exactly one of power and p_dbm".into()).into()),
    };
    let sigma2 = input.sigma2.clone().unwrap_or_else(|| vec![1.0; k]);
    let h = ComplexMatrix::from_fn(k, m, |r, c| Complex::new(input.h_re[r][c], input.h_im[r][c]));
    let inst = ChannelInstance::new(h, sigma2, power)?;

    let (up, down) = solve_balancing(&inst, &BalancingOptions::default())?;
    let w = &down.w;
    let doc = json!({
        "command": "solve",
        "instance": input,
        "q": up.q,
        "balanced_sinr": up.balanced_sinr,
        "balanced_sinr_db": 10.0 * up.balanced_sinr.log10(),
        "iterations": up.iterations,
        "p": down.p,
        "sinr": down.sinr,
        "w_re": (0..w.rows()).map(|r| w.row(r).iter().map(|z| z.re).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "w_im": (0..w.rows()).map(|r| w.row(r).iter().map(|z| z.im).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    match out {
        Some(path) => write_json(path, &doc)?,
        None => println!("{}", serde_json::to_string_pretty(&doc)?),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn online(
    schedule: &Path,
    strategies: &[String],
    meta_checkpoint: &Path,
    report: &Path,
    summary: Option<&Path>,
    seed: Option<u64>,
    workers: Option<usize>,
    timings: bool,
) -> Result<()> {
    let mut sched: ScheduleConfig = load_json(schedule).with_context(|| format!("reading {}", schedule.display()))?;
    if let Some(s) = seed {
        sched.seed = s;
    }
    if let Some(w) = workers {
        sched.workers = w;
        sched.meta.workers = w;
    }
    sched.validate()?;
    let strategies: Vec<Strategy> = strategies.iter().map(|s| s.parse()).collect::<beamadapt::Result<_>>()?;
    require(!strategies.is_empty(), "at least one strategy is required")?;

    let ck = read_checkpoint(meta_checkpoint)?;
    let seg = &sched.segments[0].scenario;
    require(
        (seg.m, seg.k) == (ck.model.config.m, ck.model.config.k),
        "schedule does not match the checkpoint's M and K",
    )?;
    let settings = json!({
        "command": "online",
        "schedule": sched,
        "strategies": strategies,
        "init": { "scenario": ck.scenario, "settings": ck.settings },
    });
    echo_with_workers(&settings, sched.workers)?;
    let settings = without_workers(settings);

    let result = run_schedule(&sched, &strategies, &ck.model)?;
    fs::write(report, result.to_csv(timings)).with_context(|| format!("writing {}", report.display()))?;
    let means = result.segment_means(&sched);
    for m in &means {
        println!("segment {} {:<15} {:<22} {:.3} dB", m.segment, m.scenario, m.strategy.as_str(), m.mean_min_sinr_db);
    }
    if let Some(path) = summary {
        let mut doc = settings;
        doc["segment_means"] = serde_json::to_value(&means)?;
        write_json(path, &doc)?;
    }
    Ok(())
}
