//! Graph-based dependency parsing with a biaffine scorer.
//!
//! - [`conllx`]: CoNLL-X treebanks over the 14-label relation set, with
//!   validation and corpus statistics.
//! - [`numerics`]: dense tensors and reverse-mode gradients.
//! - [`model`]: character/POS inputs, stacked BiLSTM encoder, MLP heads and
//!   biaffine arc/relation scorers.
//! - [`decoder`]: greedy fast path with a projectivity check, falling back
//!   to single-root Eisner decoding.
//! - [`trainer`]: Adam training with token dropout and checkpoints.
//! - [`evaluator`]: UAS and LAS.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix the
//! element type.

pub mod conllx;
pub mod decoder;
pub mod evaluator;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod trainer;

pub use scalar::Scalar;

pub type Tensor64 = numerics::Tensor<f64>;
pub type Tensor32 = numerics::Tensor<f32>;
pub type ParamStore64 = numerics::ParamStore<f64>;
pub type Graph64<'p> = numerics::Graph<'p, f64>;
pub type ParserModel64 = model::ParserModel<f64>;
pub type ParserModel32 = model::ParserModel<f32>;
pub type ScorePair64 = model::ScorePair<f64>;
pub type DecodeResult64 = decoder::DecodeResult<f64>;
