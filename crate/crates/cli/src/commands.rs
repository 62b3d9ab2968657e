use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use buoca_core::features::{
    assemble_features, load_feature_csv, load_text_corpus, sarcasm_features, sarcasm_matrix, tfidf_fit_transform,
    FeatureSources, TfIdfSettings,
};
use buoca_core::learner::{cross_validated_deployment, train, AllocationLabelSet, ForestSettings};
use buoca_core::pilot::{save_pilot, PilotFormat};
use buoca_core::simulator::{fixed_allocation_baseline, monte_carlo_accuracy};
use buoca_core::success::DEFAULT_TOLERANCE;
use buoca_core::synth::{generate, parse_mixture, SynthConfig};
use buoca_core::verify::{run_verification, VerifyConfig};
use buoca_core::{
    buoca_greedy, buoca_sorted, ccr, cost, estimate_success_probabilities, exact_subset_accuracy, load_pilot,
    Allocation, AllocationProblem, BudgetFrontier, Error, FrontierPoint, PilotDataset, TieRule,
};
use serde_json::{json, Value};

use crate::output::{config, emit, ensure_dir, json_bytes, sidecar};
use crate::{CurveArgs, EstimateArgs, Format, PilotArgs, SimulateArgs, SynthArgs, TrainEvalArgs, VerifyArgs};

pub const ORACLE_CAP_VAR: &str = "BUOCA_ORACLE_CAP";

fn load(args: &PilotArgs) -> Result<PilotDataset> {
    let data = load_pilot(&args.pilot, PilotFormat::from_path(&args.pilot))
        .with_context(|| format!("loading pilot {}", args.pilot.display()))?;
    Ok(match args.unit_cost {
        Some(c) => data.with_unit_cost(c)?,
        None => data,
    })
}

/// Frontier over the pilot's samples; the sorted allocator when every curve
/// qualifies, otherwise the step-by-step one.
fn trace(problem: &AllocationProblem) -> Result<(BudgetFrontier, bool)> {
    if problem.greedy_is_optimal(DEFAULT_TOLERANCE) {
        Ok((buoca_sorted(problem)?, true))
    } else {
        Ok((buoca_greedy(problem), false))
    }
}

fn parse_min_per_class(rule: &str) -> Result<usize> {
    let value = rule
        .strip_prefix("min_per_class=")
        .ok_or_else(|| Error::Validation(format!("auto reference `{rule}` is not `min_per_class=M`")))?;
    Ok(value.parse().map_err(|_| Error::Validation(format!("`{value}` is not a count")))?)
}

fn reference_point(
    frontier: &BudgetFrontier,
    budget: Option<f64>,
    auto: Option<&str>,
) -> Result<Option<FrontierPoint>> {
    if let Some(beta) = budget {
        return Ok(Some(frontier.at_budget(beta)?));
    }
    let Some(rule) = auto else { return Ok(None) };
    let min = parse_min_per_class(rule)?;
    let step = frontier
        .first_step_with_min_per_class(min)
        .ok_or_else(|| Error::Precondition(format!("no frontier point has at least {min} samples in every class")))?;
    Ok(frontier.point(step))
}

fn point_json(point: &FrontierPoint, k: usize) -> Value {
    let classes: Vec<Value> =
        point.allocation.class_counts(k).iter().map(|&(n, c)| json!({ "n": n, "samples": c })).collect();
    json!({
        "step": point.step,
        "budget": point.budget,
        "cost": point.cost,
        "ccr": point.ccr,
        "classes": classes,
    })
}

fn write_allocation_csv(path: &Path, ids: &[String], alloc: &Allocation) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    wtr.write_record(["sample_id", "n"])?;
    for (id, n) in ids.iter().zip(alloc.as_slice()) {
        wtr.write_record([id.as_str(), &n.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_allocation_csv(path: &Path, data: &PilotDataset) -> Result<Allocation> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let header = rdr.headers().map_err(Error::from)?.clone();
    if header.len() != 2 || &header[0] != "sample_id" || &header[1] != "n" {
        return Err(Error::Parse("allocation CSV header must be `sample_id,n`".into()).into());
    }
    let mut by_id = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(Error::from)?;
        let n: usize =
            record[1].trim().parse().map_err(|_| Error::Parse(format!("`{}` is not a worker count", &record[1])))?;
        if by_id.insert(record[0].to_string(), n).is_some() {
            return Err(Error::Validation(format!("sample `{}` appears twice", &record[0])).into());
        }
    }
    if by_id.len() != data.len() {
        return Err(
            Error::Alignment(format!("allocation has {} samples, pilot has {}", by_id.len(), data.len())).into()
        );
    }
    let counts = data
        .sample_ids()
        .iter()
        .map(|id| by_id.get(id).copied().ok_or_else(|| Error::Alignment(format!("no allocation for sample `{id}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Allocation::new(counts, data.k())?)
}

pub fn estimate(args: &EstimateArgs) -> Result<ExitCode> {
    let data = load(&args.pilot)?;
    let estimates = estimate_success_probabilities(&data);
    let cfg = config("estimate", args);
    match args.format {
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["sample_id", "matches", "k", "p"])?;
            for (id, e) in data.sample_ids().iter().zip(estimates.iter()) {
                wtr.write_record([id.clone(), e.matches.to_string(), e.k.to_string(), e.p().to_string()])?;
            }
            emit(args.out.as_deref(), &wtr.into_inner()?)?;
            if let Some(out) = &args.out {
                sidecar(out, &cfg)?;
            }
        }
        Format::Json => {
            let rows: Vec<Value> = data
                .sample_ids()
                .iter()
                .zip(estimates.iter())
                .map(|(id, e)| json!({ "sample_id": id, "matches": e.matches, "k": e.k, "p": e.p() }))
                .collect();
            emit(args.out.as_deref(), &json_bytes(&json!({ "config": cfg, "estimates": rows }))?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn curve(args: &CurveArgs) -> Result<ExitCode> {
    let data = load(&args.pilot)?;
    let estimates = estimate_success_probabilities(&data);
    let problem = AllocationProblem::from_estimates(&estimates, args.k, data.unit_cost())?;
    let (frontier, sorted) = trace(&problem)?;
    let selected = reference_point(&frontier, args.budget, args.auto_reference.as_deref())?;

    let mut baselines = Vec::new();
    for n in (1..=problem.k()).step_by(2) {
        let alloc = Allocation::uniform(data.len(), n);
        let simulated = if n <= data.k() {
            Some(fixed_allocation_baseline(&data, n, TieRule::Fractional)?.mean_accuracy)
        } else {
            None
        };
        baselines.push((n, cost(&alloc, data.unit_cost()), ccr(&alloc, &problem)?, simulated));
    }
    let baselines_json: Vec<Value> = baselines
        .iter()
        .map(|&(n, budget, ccr, sim)| json!({ "n": n, "budget": budget, "ccr": ccr, "simulated_accuracy": sim }))
        .collect();

    let meta = json!({
        "config": config("curve", args),
        "algorithm": if sorted { "sorted" } else { "greedy" },
        "greedy_optimal": sorted,
        "pilot_k": data.k(),
        "curve_k": problem.k(),
        "selected": selected.as_ref().map(|p| point_json(p, problem.k())),
    });

    match (args.format, &args.out) {
        (Format::Csv, None) => {
            let mut buf = Vec::new();
            frontier.write_csv(&mut buf, args.with_allocations)?;
            emit(None, &buf)?;
        }
        (Format::Json, None) => {
            let mut doc = meta;
            doc["frontier"] = frontier.to_json(args.with_allocations);
            doc["baselines"] = Value::Array(baselines_json);
            emit(None, &json_bytes(&doc)?)?;
        }
        (Format::Csv, Some(dir)) => {
            ensure_dir(dir)?;
            let mut buf = Vec::new();
            frontier.write_csv(&mut buf, args.with_allocations)?;
            emit(Some(&dir.join("frontier.csv")), &buf)?;

            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["n", "budget", "ccr", "simulated_accuracy"])?;
            for &(n, budget, ccr, sim) in &baselines {
                wtr.write_record([
                    n.to_string(),
                    budget.to_string(),
                    ccr.to_string(),
                    sim.map_or(String::new(), |s| s.to_string()),
                ])?;
            }
            emit(Some(&dir.join("baselines.csv")), &wtr.into_inner()?)?;

            if let Some(point) = &selected {
                write_allocation_csv(&dir.join("selected_allocation.csv"), data.sample_ids(), &point.allocation)?;
            }
            let mut doc = meta;
            doc["plateau_step"] = json!(frontier.plateau_step());
            emit(Some(&dir.join("config.json")), &json_bytes(&doc)?)?;
        }
        (Format::Json, Some(dir)) => {
            ensure_dir(dir)?;
            let mut doc = meta;
            doc["frontier"] = frontier.to_json(args.with_allocations);
            doc["baselines"] = Value::Array(baselines_json);
            emit(Some(&dir.join("frontier.json")), &json_bytes(&doc)?)?;
            if let Some(point) = &selected {
                write_allocation_csv(&dir.join("selected_allocation.csv"), data.sample_ids(), &point.allocation)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn allocation_from_source(source: &str, data: &PilotDataset) -> Result<Allocation> {
    if let Some(budget) = source.strip_prefix("frontier@") {
        let beta: f64 = budget.parse().map_err(|_| Error::Validation(format!("`{budget}` is not a budget")))?;
        let problem = AllocationProblem::from_estimates(&estimate_success_probabilities(data), None, data.unit_cost())?;
        let (frontier, _) = trace(&problem)?;
        return Ok(frontier.at_budget(beta)?.allocation);
    }
    if let Some(n) = source.strip_prefix("fixed:") {
        let n: usize = n.parse().map_err(|_| Error::Validation(format!("`{n}` is not a worker count")))?;
        return Ok(Allocation::new(vec![n; data.len()], data.k())?);
    }
    if let Some(path) = source.strip_prefix("file:") {
        return read_allocation_csv(Path::new(path), data);
    }
    Err(Error::Validation(format!("allocation `{source}` is not `frontier@B`, `fixed:N` or `file:PATH`")).into())
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let data = load(&args.pilot)?;
    let alloc = allocation_from_source(&args.allocation, &data)?;
    let rule: TieRule = args.tie_rule.into();
    let report = match (args.mc_trials, args.seed) {
        (Some(trials), Some(seed)) => monte_carlo_accuracy(&data, &alloc, seed, trials, rule)?,
        _ => exact_subset_accuracy(&data, &alloc, rule)?,
    };
    let cfg = config("simulate", args);
    match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(args.out.as_deref(), &buf)?;
            if let Some(out) = &args.out {
                let summary = json!({
                    "config": cfg,
                    "mean_accuracy": report.mean_accuracy,
                    "total_units": report.total_units,
                    "total_cost": report.total_cost,
                    "method": report.method,
                });
                sidecar(out, &summary)?;
            }
        }
        Format::Json => emit(args.out.as_deref(), &json_bytes(&json!({ "config": cfg, "report": report }))?)?,
    }
    Ok(ExitCode::SUCCESS)
}

pub fn train_eval(args: &TrainEvalArgs) -> Result<ExitCode> {
    let data = load(&args.pilot)?;
    let mut sources = FeatureSources::default();
    if let Some(path) = &args.text {
        let corpus = load_text_corpus(path).with_context(|| format!("loading text {}", path.display()))?;
        let vectors: Vec<_> = corpus.texts.iter().map(|t| sarcasm_features(t)).collect();
        sources.sarcasm = Some(sarcasm_matrix(corpus.sample_ids.clone(), &vectors)?);
        let tfidf = tfidf_fit_transform(&corpus.texts, TfIdfSettings::default())?;
        sources.tfidf = Some(tfidf.to_feature_matrix(corpus.sample_ids)?);
    }
    if let Some(path) = &args.features {
        sources.external =
            Some(load_feature_csv(path).with_context(|| format!("loading features {}", path.display()))?);
    }
    if sources.sarcasm.is_none() && sources.external.is_none() {
        return Err(Error::Validation("train-eval needs --features or --text".into()).into());
    }
    let features = assemble_features(&sources)?.align_to(data.sample_ids())?;

    let problem = AllocationProblem::from_estimates(&estimate_success_probabilities(&data), None, data.unit_cost())?;
    let (frontier, _) = trace(&problem)?;
    let reference = reference_point(&frontier, args.budget, args.auto_reference.as_deref())?
        .ok_or_else(|| Error::Validation("train-eval needs --budget or --auto-reference".into()))?;

    let settings = ForestSettings { trees: args.trees, max_depth: args.max_depth, ..ForestSettings::new(args.seed) };
    let rule: TieRule = args.tie_rule.into();
    let report = cross_validated_deployment(&data, &features, &reference, args.folds, args.seed, &settings, rule)?;

    if let Some(path) = &args.model_out {
        let model = train(&features, &AllocationLabelSet::from_point(&reference), &settings)?;
        model.save(path).with_context(|| format!("saving model {}", path.display()))?;
    }

    let mut fixed = Vec::new();
    for n in (1..=data.k()).step_by(2) {
        let sim = fixed_allocation_baseline(&data, n, rule)?;
        fixed.push(json!({ "n": n, "cost": sim.total_cost, "simulated_accuracy": sim.mean_accuracy }));
    }
    let doc = json!({
        "config": config("train-eval", args),
        "feature_columns": features.width(),
        "reference": point_json(&reference, data.k()),
        "deployment": report,
        "fixed_baselines": fixed,
    });
    emit(args.out.as_deref(), &json_bytes(&doc)?)?;
    Ok(ExitCode::SUCCESS)
}

pub fn synth(args: &SynthArgs) -> Result<ExitCode> {
    let mut cfg = SynthConfig::new(parse_mixture(&args.mixture)?, args.samples, args.k, args.seed);
    cfg.unit_cost = args.unit_cost;
    cfg.signal_noise = args.signal_noise;
    cfg.noise_columns = args.noise_columns;
    let data = generate(&cfg)?;

    ensure_dir(&args.out)?;
    save_pilot(&data.pilot, args.out.join("pilot.csv"), PilotFormat::Csv)?;
    let mut buf = Vec::new();
    data.features.write_csv(&mut buf)?;
    emit(Some(&args.out.join("features.csv")), &buf)?;
    emit(Some(&args.out.join("config.json")), &json_bytes(&json!({ "config": config("synth", args), "synth": cfg }))?)?;
    Ok(ExitCode::SUCCESS)
}

fn oracle_cap() -> Result<u128> {
    match std::env::var(ORACLE_CAP_VAR) {
        Ok(v) => Ok(v
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("{ORACLE_CAP_VAR}=`{v}` is not a positive integer")))?),
        Err(_) => Ok(buoca_core::oracle::DEFAULT_ENUMERATION_CAP),
    }
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let settings = VerifyConfig {
        oracle_instances: args.instances,
        sorted_instances: args.instances,
        oracle_cap: oracle_cap()?,
        ..VerifyConfig::new(args.seed)
    };
    let report = run_verification(&settings)?;
    for check in &report.checks {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    if let Some(out) = &args.out {
        emit(Some(out), &json_bytes(&json!({ "config": config("verify", args), "report": report }))?)?;
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
