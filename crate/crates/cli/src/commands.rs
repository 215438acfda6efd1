use std::fs;
use std::path::{Path, PathBuf};

use tda_core::dataset::load_csv;
use tda_core::error::{Error, Result};
use tda_core::eval::report::{similarity_accuracy_csv, stage_timings_csv};
use tda_core::eval::{balanced_accuracy, f1, pr_auc, roc_auc};
use tda_core::index::{add_manifest, build_index, load_index, write_entry_manifest};
use tda_core::pipeline::benchmark::{
    prepare_index, rows_csv, run_with_index, summary_csv, BenchmarkReport,
};
use tda_core::pipeline::{method1_top1, method2_topn, Method, PipelineConfig, TiePolicy};
use tda_core::similarity::rank_similar;
use tda_core::zoo::ScoreVector;
use tda_core::{PublicIndex, TabularDataset};

use crate::{BenchmarkArgs, EvalArgs, LabelArgs, OutputFormat, RankArgs};

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// index
// ---------------------------------------------------------------------------

pub fn index_build(dir: &Path) -> Result<()> {
    let index = build_index(dir)?;
    println!(
        "indexed {} dataset(s) in {}",
        index.len(),
        dir.display()
    );
    for entry in &index.entries {
        println!(
            "  {} ({} x {}, {:.2}% outliers, {} model(s))",
            entry.dataset_name,
            entry.n_samples,
            entry.n_features,
            entry.outlier_fraction * 100.0,
            entry.best_models.len()
        );
    }
    Ok(())
}

pub fn index_add(dir: &Path, manifest: &Path) -> Result<()> {
    let index = add_manifest(dir, manifest)?;
    println!("index now holds {} dataset(s)", index.len());
    Ok(())
}

pub fn index_show(dir: &Path) -> Result<()> {
    let index = load_index(dir)?;
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    println!("index v{} with {} dataset(s)", index.version, index.len());
    for entry in &index.entries {
        let curve = entry.curve.errors();
        println!(
            "{}: {} samples, {} features, {} outliers ({:.2}%)",
            entry.dataset_name,
            entry.n_samples,
            entry.n_features,
            entry.n_outliers,
            entry.outlier_fraction * 100.0
        );
        println!(
            "  curve: k=1 {:.4}, k=5 {:.4}, k=20 {:.4}, k=100 {:.4}",
            curve[0], curve[4], curve[19], curve[99]
        );
        for model in &entry.best_models {
            println!(
                "  {} {:?} ({} = {:.4})",
                model.algorithm, model.hyperparams, model.metric_name, model.metric_value
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

pub fn rank(args: &RankArgs) -> Result<()> {
    let private = load_csv(&args.private, args.label_column.as_deref())?;
    let index = load_index(&args.index)?;
    let ranking = rank_similar(&private, &index)?;
    let limit = args.top.unwrap_or(ranking.len()).min(ranking.len());

    let output = match args.format {
        OutputFormat::Csv => {
            let mut out = String::from("rank,dataset,sad\n");
            for (i, (entry, sad)) in ranking[..limit].iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", i + 1, entry.dataset_name, sad));
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = ranking[..limit]
                .iter()
                .enumerate()
                .map(|(i, (entry, sad))| {
                    serde_json::json!({
                        "rank": i + 1,
                        "dataset": entry.dataset_name,
                        "sad": sad,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
        }
    };
    match &args.out {
        Some(path) => write_file(path, &output)?,
        None => print!("{output}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// label
// ---------------------------------------------------------------------------

fn pipeline_config(args: &LabelArgs, seed: u64, threads: usize, tie_policy: TiePolicy) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed,
        threads,
        tie_policy,
        max_fallbacks: args.max_fallbacks,
        ..PipelineConfig::default()
    };
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(epochs) = args.epochs {
        cfg.transcoder.epochs = epochs;
    }
    if let Some(batch) = args.batch_size {
        cfg.transcoder.batch_size = batch;
    }
    cfg
}

fn timings_csv(timings: &std::collections::BTreeMap<String, f64>) -> String {
    let mut out = String::from("stage,seconds\n");
    for (stage, seconds) in timings {
        out.push_str(&format!("{stage},{seconds}\n"));
    }
    out
}

pub fn label(args: &LabelArgs, seed: u64, threads: usize) -> Result<()> {
    let method: Method = args.method.parse()?;
    let tie_policy = match args.tie_policy.as_str() {
        "inlier" => TiePolicy::Inlier,
        "outlier" => TiePolicy::Outlier,
        other => {
            return Err(Error::InvalidArgument(format!(
                "tie policy must be inlier or outlier, got {other:?}"
            )))
        }
    };
    let private = load_csv(&args.private, args.label_column.as_deref())?;
    let private = TabularDataset {
        labels: None, // the pipeline never sees ground truth
        ..private
    };
    let index = load_index(&args.index)?;
    let cfg = pipeline_config(args, seed, threads, tie_policy);
    ensure_dir(&args.out)?;

    let result = match method {
        Method::Top1Ds => method1_top1(&private, &index, &cfg),
        Method::TopNDs => method2_topn(&private, &index, &cfg),
        other => {
            return Err(Error::InvalidArgument(format!(
                "label runs top1 or topn, not {other}"
            )))
        }
    };
    match result {
        Ok(run) => {
            write_file(&args.out.join("labels.csv"), &run.labels_csv())?;
            write_file(&args.out.join("run.json"), &(run.to_json(false) + "\n"))?;
            write_file(&args.out.join("timings.csv"), &timings_csv(&run.timings))?;
            let flagged = run.labels.iter().filter(|&&l| l == 1).count();
            println!(
                "{}: {} of {} rows flagged as outliers ({} voter(s), {} candidate(s) tried)",
                method,
                flagged,
                run.labels.len(),
                run.votes.len(),
                run.fallback_trail.len()
            );
            Ok(())
        }
        Err(err @ Error::Exhausted { .. }) => {
            if let Error::Exhausted {
                attempts,
                successes,
                required,
                trail,
                partial,
            } = &err
            {
                let payload = serde_json::json!({
                    "error": err.to_string(),
                    "attempts": attempts,
                    "successes": successes,
                    "required": required,
                    "trail": trail,
                    "partial_run": partial,
                    "config_digest": cfg.digest(method),
                });
                write_file(
                    &args.out.join("trail.json"),
                    &(serde_json::to_string_pretty(&payload).expect("payload serializes") + "\n"),
                )?;
            }
            Err(err)
        }
        Err(other) => Err(other),
    }
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

fn load_dataset_dir(dir: &Path, label_column: &str) -> Result<Vec<(TabularDataset, PathBuf)>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir.display().to_string(), e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no .csv files in {}",
            dir.display()
        )));
    }
    files
        .into_iter()
        .map(|path| Ok((load_csv(&path, Some(label_column))?, path)))
        .collect()
}

pub fn benchmark(args: &BenchmarkArgs, seed: u64, threads: usize) -> Result<()> {
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods given".into()));
    }
    let datasets = load_dataset_dir(&args.datasets, &args.label_column)?;
    let mut cfg = PipelineConfig {
        seed,
        threads,
        ..PipelineConfig::default()
    };
    if let Some(epochs) = args.epochs {
        cfg.transcoder.epochs = epochs;
    }
    ensure_dir(&args.out)?;

    let index: PublicIndex = match &args.index {
        Some(dir) => load_index(dir)?,
        None => {
            log::info!("no index given; grid-searching best models per dataset");
            let index = prepare_index(&datasets, &args.label_column, &cfg)?;
            // persist for reuse
            let index_dir = args.out.join("index");
            ensure_dir(&index_dir)?;
            for entry in &index.entries {
                write_entry_manifest(&index_dir, entry)?;
            }
            build_index(&index_dir)?;
            index
        }
    };

    let report: BenchmarkReport = run_with_index(&datasets, &index, &methods, &cfg)?;
    write_file(&args.out.join("per_dataset.csv"), &rows_csv(&report.rows))?;
    write_file(&args.out.join("summary.csv"), &summary_csv(&report.summary))?;

    let sim_rows: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| match (&r.similarity, &r.metrics) {
            (Some(sim), Some(m)) => Some((*sim, m.balanced_accuracy)),
            _ => None,
        })
        .collect();
    write_file(
        &args.out.join("similarity_accuracy.csv"),
        &similarity_accuracy_csv(&sim_rows),
    )?;

    let stage_rows: Vec<(&str, &std::collections::BTreeMap<String, f64>)> = report
        .stage_totals
        .iter()
        .map(|(method, timings)| (method.name(), timings))
        .collect();
    write_file(
        &args.out.join("stage_timings.csv"),
        &stage_timings_csv(&stage_rows),
    )?;

    println!("method,balanced_accuracy,f1,pr_auc,roc_auc,failures,total_seconds");
    for s in &report.summary {
        println!(
            "{},{:.4},{:.4},{:.4},{:.4},{},{:.1}",
            s.method,
            s.mean_balanced_accuracy,
            s.mean_f1,
            s.mean_pr_auc,
            s.mean_roc_auc,
            s.failures,
            s.total_seconds
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn load_single_column(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue; // header
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|_| Error::CsvCell {
            row: i,
            column: "0".into(),
            message: format!("{line:?} is not a number"),
        })?);
    }
    Ok(values)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let pred: Vec<u8> = load_single_column(&args.pred)?
        .into_iter()
        .map(|v| if v == 0.0 { Ok(0u8) } else if v == 1.0 { Ok(1u8) } else {
            Err(Error::InvalidArgument(format!("prediction {v} is not 0/1")))
        })
        .collect::<Result<_>>()?;
    let truth_ds = load_csv(&args.truth, Some(&args.truth_label_column))?;
    let truth = truth_ds
        .labels
        .ok_or_else(|| Error::LabelsRequired("truth file has no label column".into()))?;

    let mut report = serde_json::json!({
        "balanced_accuracy": balanced_accuracy(&pred, &truth)?,
        "f1": f1(&pred, &truth)?,
    });
    if let Some(scores_path) = &args.scores {
        let scores = ScoreVector(load_single_column(scores_path)?);
        report["roc_auc"] = serde_json::json!(roc_auc(&scores, &truth)?);
        report["pr_auc"] = serde_json::json!(pr_auc(&scores, &truth)?);
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}
