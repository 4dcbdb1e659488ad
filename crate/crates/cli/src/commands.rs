//! The five subcommands. Each one resolves its configuration, does its
//! work, and drops a `<command>_manifest.json` into the output directory
//! recording the tool version, the fully resolved configuration and the
//! dataset digest — enough to reproduce the run byte for byte.
//!
//! Input dataset directories are never written to; only the output
//! directory is. Concurrent commands sharing an output directory are
//! unsupported.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use resopp_core::datagen::{describe_generative_model, generate};
use resopp_core::domain::{Dataset, OpportunityId, StudentId};
use resopp_core::eval::{
    rank_candidates, run_experiment_with, train_method, write_reports, ModelSlot,
};
use resopp_core::features::{
    build_task1_examples, build_task2_examples, build_text_context, temporal_split,
    FeatureSetId, Level, Task,
};
use resopp_core::ingest::{dataset_digest, load_dataset, summarize, write_dataset};
use resopp_core::models::TrainedModel;
use resopp_core::Value;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

/// What every command leaves behind: who ran, with which resolved
/// settings, against which data.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: Tool,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset_digest: Option<&'a str>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    dataset_digest: Option<&str>,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        tool: Tool { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
        command,
        config,
        dataset_digest,
    };
    let mut body = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Input(format!("cannot serialize manifest: {e}")))?;
    body.push('\n');
    fs::write(dir.join(format!("{command}_manifest.json")), body)?;
    Ok(())
}

fn load(config: &RunConfig) -> Result<Dataset, CliError> {
    let dir = &config.dataset;
    load_dataset(dir, &config.schema())
        .map_err(|e| CliError::Input(format!("cannot load dataset {}: {e}", dir.display())))
}

/// All (task, method, level) slots the configuration selects, in
/// deterministic order.
fn selected_slots(config: &RunConfig) -> Vec<ModelSlot> {
    let mut slots = Vec::new();
    for &task in &config.tasks {
        let levels = match task {
            Task::One => &config.task1_features,
            Task::Two => &config.task2_features,
        };
        for &level in levels {
            for &method in &config.methods {
                slots.push(ModelSlot { task, method, level });
            }
        }
    }
    slots
}

pub fn datagen(config: &RunConfig) -> Result<(), CliError> {
    // The generated tables land where the other commands will look for
    // them, not under `out`.
    let target = config.dataset.as_path();
    let ds = generate(&config.gen)?;
    fs::create_dir_all(target)?;
    write_dataset(&ds, target)
        .map_err(|e| CliError::Input(format!("cannot write dataset: {e}")))?;
    let mut description = describe_generative_model(&config.gen);
    description.push('\n');
    fs::write(target.join("generator.txt"), description)?;
    let digest = dataset_digest(&ds);
    write_manifest(target, "datagen", config, Some(&digest))?;
    println!(
        "generated {} students, {} opportunities, {} applications into {}",
        ds.students().len(),
        ds.opportunities().len(),
        ds.applications().len(),
        target.display()
    );
    Ok(())
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let experiment = config.to_experiment();
    experiment.validate()?;
    let ds = load(config)?;
    let split = temporal_split(&ds, config.cutoff);
    for warning in &split.warnings {
        eprintln!("warning: {warning}");
    }

    let models_dir = config.out.join("models");
    fs::create_dir_all(&models_dir)?;
    let mut text = None;
    let mut trained = 0usize;
    for &task in &config.tasks {
        let levels = match task {
            Task::One => &config.task1_features,
            Task::Two => &config.task2_features,
        };
        for &level in levels {
            let set = FeatureSetId { task, level };
            let examples = match task {
                Task::One => build_task1_examples::<Value>(&split.train, set),
                Task::Two => {
                    if text.is_none() {
                        text = Some(build_text_context::<Value>(
                            &ds,
                            config.cutoff,
                            &config.text,
                        )?);
                    }
                    let built = build_task2_examples(
                        &split.train,
                        text.as_ref().expect("text context just built"),
                        set,
                        config.neg_ratio,
                        config.seed,
                    )?;
                    for warning in &built.warnings {
                        eprintln!("warning: {warning}");
                    }
                    built.examples
                }
            };
            for &method in &config.methods {
                let model = train_method(method, &examples, &config.hyper)?;
                let slot = ModelSlot { task, method, level };
                model.save(&models_dir.join(slot.file_name()))?;
                trained += 1;
            }
        }
    }

    write_manifest(&config.out, "train", config, Some(&dataset_digest(&ds)))?;
    println!("trained {trained} model(s) into {}", models_dir.display());
    Ok(())
}

pub fn eval(config: &RunConfig) -> Result<(), CliError> {
    let experiment = config.to_experiment();
    experiment.validate()?;
    let ds = load(config)?;

    let models_dir = config.out.join("models");
    let mut prebuilt: BTreeMap<ModelSlot, TrainedModel<Value>> = BTreeMap::new();
    let mut missing = Vec::new();
    for slot in selected_slots(config) {
        let path = models_dir.join(slot.file_name());
        if path.is_file() {
            prebuilt.insert(slot, TrainedModel::load(&path)?);
        } else {
            missing.push(slot);
        }
    }
    if !missing.is_empty() && !config.train_if_missing {
        let names: Vec<String> = missing.iter().map(ModelSlot::file_name).collect();
        return Err(CliError::Input(format!(
            "missing model files under {}: {}; run `resopp train` first or pass \
             --train-if-missing",
            models_dir.display(),
            names.join(", ")
        )));
    }

    let output = run_experiment_with(&ds, &experiment, &prebuilt)?;
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    if !missing.is_empty() {
        fs::create_dir_all(&models_dir)?;
        for slot in &missing {
            if let Some(model) = output.models.get(slot) {
                model.save(&models_dir.join(slot.file_name()))?;
            }
        }
    }

    let digest = dataset_digest(&ds);
    write_reports(&config.out, &experiment, &digest, &output)?;
    write_manifest(&config.out, "eval", config, Some(&digest))?;
    println!(
        "evaluated {} ranked students ({} excluded); reports in {}",
        output.n_evaluated_students,
        output.n_excluded_students,
        config.out.display()
    );
    Ok(())
}

pub fn recommend(
    config: &RunConfig,
    model_path: &Path,
    student: &str,
    k: usize,
) -> Result<(), CliError> {
    if k == 0 {
        return Err(CliError::Input("--k must be at least 1".into()));
    }
    let ds = load(config)?;
    let student_id = StudentId::from(student);
    if ds.student_index(&student_id).is_none() {
        return Err(CliError::Input(format!("unknown student id '{student}'")));
    }
    let model: TrainedModel<Value> = TrainedModel::load(model_path)?;
    let level = match model.feature_names().len() {
        1 => Level::Base,
        2 => Level::BasePlus,
        3 => Level::BasePlusPlus,
        n => {
            return Err(CliError::Input(format!(
                "{} does not look like a ranking model ({n} features)",
                model_path.display()
            )))
        }
    };

    let split = temporal_split(&ds, config.cutoff);
    let candidates: Vec<OpportunityId> = split
        .test
        .candidate_opportunities()
        .into_iter()
        .map(|i| ds.opportunities()[i].opportunity_id.clone())
        .collect();
    if candidates.is_empty() {
        return Err(CliError::Input(format!(
            "no opportunities posted at or after the cutoff {}",
            config.cutoff
        )));
    }
    let text = build_text_context::<Value>(&ds, config.cutoff, &config.text)?;
    let set = FeatureSetId { task: Task::Two, level };
    let list = rank_candidates(&model, &split.test, &text, &student_id, &candidates, set, k)?;
    for (opportunity, score) in &list.items {
        println!("{opportunity}\t{score}");
    }
    write_manifest(&config.out, "recommend", config, Some(&dataset_digest(&ds)))?;
    Ok(())
}

pub fn summarize_cmd(config: &RunConfig) -> Result<(), CliError> {
    let ds = load(config)?;
    let summary = summarize(&ds);
    println!("students        {}", summary.n_students);
    println!("courses         {}", summary.n_courses);
    println!("faculty         {}", summary.n_faculty);
    println!("opportunities   {}", summary.n_opportunities);
    println!("enrollments     {}", summary.n_enrollments);
    println!("applications    {}", summary.n_applications);
    println!("applicants      {}", summary.n_applicants);
    println!("applicant rate  {:.4}", summary.applicant_rate);
    match summary.acceptance_rate {
        Some(rate) => println!("acceptance rate {rate:.4}"),
        None => println!("acceptance rate n/a"),
    }
    match summary.term_range {
        Some((first, last)) => println!("terms           {first}..={last}"),
        None => println!("terms           n/a"),
    }
    write_manifest(&config.out, "summarize", config, Some(&dataset_digest(&ds)))?;
    Ok(())
}
