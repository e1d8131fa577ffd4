//! The biaffine parser network: vocabularies, hyperparameters, input
//! embeddings, stacked BiLSTM encoder, MLP heads and biaffine scorers.

mod hyper;
pub mod lstm;
mod network;
mod vocab;

pub use hyper::{HyperParams, InputMode, HYPER_KEYS};
pub use network::{Dropout, Network, ScoreVars, LEAKY_SLOPE};
pub use vocab::{build_vocab, word_counts, Symbols, Vocab, PAD, UNK};

use rand::RngCore;
use thiserror::Error;

use crate::conllx::Sentence;
use crate::decoder::{decode, DecodeError, DecodeResult};
use crate::numerics::{GradientMap, Graph, NumericsError, ParamStore, Tensor};
use crate::scalar::Scalar;

use network::{graph_loss, init_params, param_specs, Layout};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("cannot build a vocabulary from an empty treebank")]
    EmptyTreebank,
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("token {0} has an empty form")]
    EmptyForm(usize),
    #[error("token {0} has no POS tag but the model reads POS tags")]
    MissingPos(usize),
    #[error("token {0} has a head outside the sentence")]
    HeadOutOfRange(usize),
    #[error("scores cover {expected} tokens but the sentence has {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("duplicate vocabulary symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("missing parameter {0}")]
    MissingParam(String),
    #[error("unexpected parameter {0}")]
    UnexpectedParam(String),
    #[error("parameter {name} has shape {found:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

/// Arc and label scores of one sentence of `n` tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorePair<T> {
    /// `[n + 1, n + 1]`: `arc[d][h]` scores head `h` for dependent `d`.
    /// Row 0 is computed but never read.
    pub arc: Tensor<T>,
    /// `[n + 1, n + 1, 14]`: `rel[d][h][l]` scores label `l` on arc `h -> d`.
    pub rel: Tensor<T>,
}

impl<T: Scalar> ScorePair<T> {
    pub fn len(&self) -> usize {
        self.arc.rows().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Training loss of fixed scores against a gold tree.
pub fn loss<T: Scalar>(scores: &ScorePair<T>, gold: &Sentence) -> Result<T, ModelError> {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let m = scores.arc.rows();
    let arc = g.constant(scores.arc.clone())?;
    let rel = g.constant(scores.rel.reshaped(vec![m * m, scores.rel.len() / (m * m).max(1)])?)?;
    let vars = ScoreVars { n: m - 1, arc, rel };
    let l = graph_loss(&mut g, &vars, gold)?;
    Ok(g.value(l).item())
}

/// Network plus parameter values.
#[derive(Clone, Debug)]
pub struct ParserModel<T> {
    pub net: Network,
    pub params: ParamStore<T>,
}

impl<T: Scalar> ParserModel<T> {
    /// Freshly initialized model.
    pub fn new(vocab: Vocab, hyper: HyperParams, rng: &mut dyn RngCore) -> Result<Self, ModelError> {
        let specs = param_specs(&vocab, &hyper)?;
        let params = init_params(&specs, rng);
        Self::from_params(vocab, hyper, params)
    }

    /// Wraps existing parameters after checking names and shapes.
    pub fn from_params(vocab: Vocab, hyper: HyperParams, params: ParamStore<T>) -> Result<Self, ModelError> {
        let specs = param_specs(&vocab, &hyper)?;
        let layout = Layout::resolve(&specs, &params, &hyper)?;
        Ok(ParserModel {
            net: Network { vocab, hyper, layout },
            params,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.net.vocab
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.net.hyper
    }

    /// Evaluation-mode scores.
    pub fn scores(&self, sentence: &Sentence) -> Result<ScorePair<T>, ModelError> {
        let mut g = Graph::new(&self.params);
        let vars = self.net.forward(&mut g, sentence, &mut Dropout::Off)?;
        Ok(vars.to_pair(&g))
    }

    pub fn predict(&self, sentence: &Sentence) -> Result<DecodeResult<T>, ModelError> {
        Ok(decode(&self.scores(sentence)?)?)
    }

    /// Copy of `sentence` with predicted heads and relations.
    pub fn parse(&self, sentence: &Sentence) -> Result<Sentence, ModelError> {
        let result = self.predict(sentence)?;
        let mut out = sentence.clone();
        for (t, (&h, &r)) in out.tokens.iter_mut().zip(result.heads.iter().zip(&result.rels)) {
            t.head = h;
            t.rel = r;
        }
        Ok(out)
    }

    pub fn loss_and_gradient(
        &self,
        sentence: &Sentence,
        dropout: &mut Dropout<'_>,
    ) -> Result<(T, GradientMap<T>), ModelError> {
        let mut g = Graph::new(&self.params);
        let l = self.net.sentence_loss(&mut g, sentence, dropout)?;
        let grads = g.backward(l)?;
        Ok((g.value(l).item(), grads))
    }
}
