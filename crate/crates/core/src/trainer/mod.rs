//! Training: token dropout, Adam, the epoch loop with dev-set early
//! stopping, and checkpoint serialization.

mod adam;
pub mod checkpoint;
mod dropout;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load, save, CheckpointError};
pub use dropout::apply_token_dropout;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conllx::Sentence;
use crate::evaluator::attachment_scores;
use crate::model::{build_vocab, Dropout, HyperParams, ModelError, ParserModel};
use crate::numerics::NumericsError;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub hyper: HyperParams,
    pub epochs: usize,
    /// Sentences per optimizer step; their gradients are summed.
    pub batch_size: usize,
    pub min_freq: usize,
    pub seed: u64,
    /// Epochs without dev LAS improvement before stopping.
    pub patience: usize,
    /// Rescale the gradient to this norm when it is larger. Off by default.
    pub clip_norm: Option<f64>,
    /// Where to write the best model, if anywhere.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hyper: HyperParams::default(),
            epochs: 50,
            batch_size: 32,
            min_freq: 2,
            seed: 1,
            patience: 10,
            clip_norm: None,
            checkpoint: None,
        }
    }
}

/// Keys accepted by [`TrainConfig::set`] besides the hyperparameter keys.
pub const TRAIN_KEYS: [&str; 6] = ["epochs", "batch_size", "min_freq", "seed", "patience", "clip_norm"];

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.hyper.validate()?;
        for (name, v) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("min_freq", self.min_freq),
            ("patience", self.patience),
        ] {
            if v == 0 {
                return Err(ModelError::InvalidConfig(format!("{name} must be at least 1")).into());
            }
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(ModelError::InvalidConfig("clip_norm must be positive".into()).into());
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| ModelError::InvalidConfig(format!("{key}: expected an integer, got {v:?}")))
        };
        match key {
            "epochs" => self.epochs = int(value)?,
            "batch_size" => self.batch_size = int(value)?,
            "min_freq" => self.min_freq = int(value)?,
            "patience" => self.patience = int(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| ModelError::InvalidConfig(format!("seed: expected an integer, got {value:?}")))?
            }
            "clip_norm" => {
                self.clip_norm = match value {
                    "off" | "none" => None,
                    v => Some(v.parse().map_err(|_| {
                        ModelError::InvalidConfig(format!("clip_norm: expected a number or off, got {v:?}"))
                    })?),
                }
            }
            _ => self.hyper.set(key, value)?,
        }
        Ok(())
    }

    /// Applies flat `key=value` lines. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn apply_key_values(&mut self, text: &str) -> Result<(), ModelError> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::InvalidConfig(format!("expected key=value, got {line:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("non-finite loss in epoch {epoch} at training sentence {sentence}")]
    NonFiniteLoss { epoch: usize, sentence: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Evaluation(#[from] crate::evaluator::EvalError),
    #[error("cannot write checkpoint: {0}")]
    Io(#[from] std::io::Error),
}

impl TrainError {
    /// Whether the failure is numerical rather than a data or I/O problem.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteLoss { .. } | TrainError::Model(ModelError::Numerics(NumericsError::NonFinite { .. }))
        )
    }
}

impl From<NumericsError> for TrainError {
    fn from(e: NumericsError) -> Self {
        TrainError::Model(e.into())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sentence training loss.
    pub mean_loss: f64,
    pub dev_uas: Option<f64>,
    pub dev_las: Option<f64>,
    /// This epoch produced the best model so far.
    pub improved: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ParserModel<f64>,
    pub history: Vec<EpochReport>,
    /// Epoch whose parameters `model` holds.
    pub best_epoch: usize,
}

/// Trains from scratch. Without a dev set every epoch runs and the final
/// parameters are kept; otherwise the best dev-LAS model is kept and
/// training stops after `patience` epochs without improvement.
pub fn train(
    config: &TrainConfig,
    train_set: &[Sentence],
    dev_set: &[Sentence],
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = build_vocab(train_set, config.min_freq)?;
    let mut model = ParserModel::<f64>::new(vocab, config.hyper.clone(), &mut rng)?;
    let mut adam = AdamState::new(&model.params);
    let lr = config.hyper.learning_rate;

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ParserModel<f64>)> = None;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.params.zero_gradients();
            for &i in batch {
                let (loss, g) = model.loss_and_gradient(&train_set[i], &mut Dropout::On(&mut rng))?;
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss { epoch, sentence: i + 1 });
                }
                total += loss;
                grads.accumulate(&g)?;
            }
            if let Some(limit) = config.clip_norm {
                let norm = grads.norm();
                if norm > limit {
                    grads.scale(limit / norm);
                }
            }
            adam_step(&mut model.params, &grads, &mut adam, lr)?;
        }

        let mut report = EpochReport {
            epoch,
            mean_loss: total / train_set.len() as f64,
            dev_uas: None,
            dev_las: None,
            improved: false,
        };
        if !dev_set.is_empty() {
            let predicted = dev_set.iter().map(|s| model.parse(s)).collect::<Result<Vec<_>, _>>()?;
            let scores = attachment_scores(dev_set, &predicted, false)?;
            report.dev_uas = Some(scores.uas);
            report.dev_las = Some(scores.las);
            if best.as_ref().is_none_or(|(las, _, _)| scores.las > *las) {
                best = Some((scores.las, epoch, model.clone()));
                report.improved = true;
                stale = 0;
            } else {
                stale += 1;
            }
        } else {
            report.improved = true;
        }
        on_epoch(&report);
        history.push(report);
        if !dev_set.is_empty() && stale >= config.patience {
            break;
        }
    }

    let (model, best_epoch) = match best {
        Some((_, epoch, m)) => (m, epoch),
        None => (model, history.len()),
    };
    if let Some(path) = &config.checkpoint {
        std::fs::write(path, save(&model))?;
    }
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
    })
}
