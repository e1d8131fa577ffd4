use std::fs;
use std::path::Path;

use depparse::conllx::{
    parse_conllx, parse_conllx_with, reannotate, treebank_stats, validate as validate_tree, Annotation, Sentence,
};
use depparse::evaluator::attachment_scores;
use depparse::model::{ModelError, ParserModel};
use depparse::numerics::NumericsError;
use depparse::trainer::{load, train as run_training, TrainConfig, TrainError};
use rayon::prelude::*;

use crate::{EvaluateArgs, Failure, InputArgs, ParseArgs, TrainArgs};

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn read_treebank(path: &Path, annotation: Annotation) -> Result<(String, Vec<Sentence>), Failure> {
    let text = read_text(path)?;
    let sentences =
        parse_conllx_with(&text, annotation).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Ok((text, sentences))
}

/// Reads a fully annotated treebank and rejects malformed trees.
fn read_valid_treebank(path: &Path) -> Result<Vec<Sentence>, Failure> {
    let (_, sentences) = read_treebank(path, Annotation::Required)?;
    let mut problems = String::new();
    for (i, s) in sentences.iter().enumerate() {
        problems.push_str(&validate_tree(i + 1, s).to_string());
    }
    if problems.is_empty() {
        Ok(sentences)
    } else {
        Err(Failure::data(format!(
            "{} is not a valid treebank:\n{}",
            path.display(),
            problems.trim_end()
        )))
    }
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::Numerics(NumericsError::NonFinite { .. }) => Failure::numeric(e.to_string()),
        ModelError::InvalidConfig(_) | ModelError::UnknownKey(_) => Failure::usage(e.to_string()),
        ModelError::MissingPos(_)
        | ModelError::EmptySentence
        | ModelError::EmptyForm(_)
        | ModelError::EmptyTreebank => Failure::data(e.to_string()),
        other => Failure::model(other.to_string()),
    }
}

fn train_failure(e: TrainError) -> Failure {
    if e.is_numeric() {
        return Failure::numeric(e.to_string());
    }
    match e {
        TrainError::EmptyTrainSet | TrainError::Evaluation(_) => Failure::data(e.to_string()),
        TrainError::Model(m) => model_failure(m),
        TrainError::Io(_) => Failure::model(e.to_string()),
        TrainError::NonFiniteLoss { .. } => Failure::numeric(e.to_string()),
    }
}

fn percent(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

pub fn train(args: &TrainArgs) -> Result<(), Failure> {
    let mut config = TrainConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        config
            .apply_key_values(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().map_err(train_failure)?;
    config.checkpoint = Some(args.model.clone());

    let train_set = read_valid_treebank(&args.train)?;
    let dev_set = read_valid_treebank(&args.dev)?;

    let outcome = run_training(&config, &train_set, &dev_set, |r| {
        let mut line = format!("epoch {}\tloss {:.6}", r.epoch, r.mean_loss);
        if let (Some(uas), Some(las)) = (r.dev_uas, r.dev_las) {
            line.push_str(&format!("\tdev UAS {}\tLAS {}", percent(uas), percent(las)));
        }
        if r.improved {
            line.push_str("\t*");
        }
        println!("{line}");
    })
    .map_err(train_failure)?;

    let parsed = train_set
        .iter()
        .map(|s| outcome.model.parse(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(model_failure)?;
    let scores = attachment_scores(&train_set, &parsed, false).map_err(|e| Failure::data(e.to_string()))?;
    println!("best epoch {}", outcome.best_epoch);
    println!("train UAS {}\tLAS {}", percent(scores.uas), percent(scores.las));
    println!("model written to {}", args.model.display());
    Ok(())
}

pub fn parse(args: &ParseArgs) -> Result<(), Failure> {
    let bytes = fs::read(&args.model).map_err(|e| Failure::model(format!("{}: {e}", args.model.display())))?;
    let model: ParserModel<f64> = load(&bytes).map_err(|e| Failure::model(format!("{}: {e}", args.model.display())))?;
    let (text, sentences) = read_treebank(&args.input, Annotation::Optional)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.map_or(0, usize::from))
        .build()
        .map_err(|e| Failure::usage(e.to_string()))?;
    // Indexed collection keeps input order whatever the thread count.
    let parsed = pool
        .install(|| {
            sentences
                .par_iter()
                .map(|s| model.parse(s))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(model_failure)?;

    let out = reannotate(&text, &parsed).ok_or_else(|| Failure::data("input changed while parsing"))?;
    fs::write(&args.output, out).map_err(|e| Failure::data(format!("{}: {e}", args.output.display())))?;
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let gold =
        parse_conllx(&read_text(&args.gold)?).map_err(|e| Failure::data(format!("{}: {e}", args.gold.display())))?;
    let pred =
        parse_conllx(&read_text(&args.pred)?).map_err(|e| Failure::data(format!("{}: {e}", args.pred.display())))?;
    let result = attachment_scores(&gold, &pred, args.exclude_punct).map_err(|e| Failure::data(e.to_string()))?;
    print!("{result}");
    Ok(())
}

pub fn validate(args: &InputArgs) -> Result<(), Failure> {
    let (_, sentences) = read_treebank(&args.input, Annotation::Required)?;
    let mut bad = 0;
    let mut violations = 0;
    for (i, s) in sentences.iter().enumerate() {
        let report = validate_tree(i + 1, s);
        if !report.is_valid() {
            bad += 1;
            violations += report.violations.len();
            print!("{report}");
        }
    }
    if bad == 0 {
        println!("{} sentences, no violations", sentences.len());
        Ok(())
    } else {
        Err(Failure::validation(format!(
            "{violations} violations in {bad} of {} sentences",
            sentences.len()
        )))
    }
}

pub fn stats(args: &InputArgs) -> Result<(), Failure> {
    let (_, sentences) = read_treebank(&args.input, Annotation::Required)?;
    print!("{}", treebank_stats(&sentences));
    Ok(())
}
