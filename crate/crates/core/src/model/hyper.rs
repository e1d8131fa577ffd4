use std::fmt;
use std::str::FromStr;

use crate::model::ModelError;

/// Per-token representation next to the word embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputMode {
    /// Character BiLSTM over the word's characters.
    Char,
    /// Embedding of the gold POS tag.
    Pos,
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputMode::Char => "char",
            InputMode::Pos => "pos",
        })
    }
}

impl FromStr for InputMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(InputMode::Char),
            "pos" => Ok(InputMode::Pos),
            other => Err(ModelError::InvalidConfig(format!(
                "input_mode must be char or pos, got {other:?}"
            ))),
        }
    }
}

/// Network sizes, dropout rates and learning rate.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub word_emb_dim: usize,
    pub char_emb_dim: usize,
    /// Units per direction of the character BiLSTM.
    pub char_lstm_hidden: usize,
    pub pos_emb_dim: usize,
    /// Units per direction of each sentence BiLSTM layer.
    pub lstm_hidden: usize,
    pub lstm_depth: usize,
    pub arc_mlp: usize,
    pub rel_mlp: usize,
    pub mlp_depth: usize,
    pub word_dropout: f64,
    pub char_dropout: f64,
    pub pos_dropout: f64,
    pub lstm_dropout: f64,
    pub arc_mlp_dropout: f64,
    pub rel_mlp_dropout: f64,
    pub learning_rate: f64,
    pub input_mode: InputMode,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            word_emb_dim: 300,
            char_emb_dim: 50,
            char_lstm_hidden: 50,
            pos_emb_dim: 100,
            lstm_hidden: 400,
            lstm_depth: 3,
            arc_mlp: 500,
            rel_mlp: 100,
            mlp_depth: 1,
            word_dropout: 0.33,
            char_dropout: 0.33,
            pos_dropout: 0.33,
            lstm_dropout: 0.33,
            arc_mlp_dropout: 0.33,
            rel_mlp_dropout: 0.33,
            learning_rate: 2e-3,
            input_mode: InputMode::Char,
        }
    }
}

/// Keys accepted by [`HyperParams::set`], in serialization order.
pub const HYPER_KEYS: [&str; 17] = [
    "word_emb_dim",
    "char_emb_dim",
    "char_lstm_hidden",
    "pos_emb_dim",
    "lstm_hidden",
    "lstm_depth",
    "arc_mlp",
    "rel_mlp",
    "mlp_depth",
    "word_dropout",
    "char_dropout",
    "pos_dropout",
    "lstm_dropout",
    "arc_mlp_dropout",
    "rel_mlp_dropout",
    "learning_rate",
    "input_mode",
];

impl HyperParams {
    /// Small network for tests and quick experiments: word 8, char 4,
    /// LSTM 16, arc MLP 8, relation MLP 4. Other sizes keep their defaults.
    pub fn reduced() -> Self {
        HyperParams {
            word_emb_dim: 8,
            char_emb_dim: 4,
            lstm_hidden: 16,
            arc_mlp: 8,
            rel_mlp: 4,
            ..HyperParams::default()
        }
    }

    /// Same sizes with every dropout rate set to zero.
    pub fn without_dropout(mut self) -> Self {
        self.word_dropout = 0.0;
        self.char_dropout = 0.0;
        self.pos_dropout = 0.0;
        self.lstm_dropout = 0.0;
        self.arc_mlp_dropout = 0.0;
        self.rel_mlp_dropout = 0.0;
        self
    }

    /// Width of the per-token input row.
    pub fn input_dim(&self) -> usize {
        self.word_emb_dim
            + match self.input_mode {
                InputMode::Char => 2 * self.char_lstm_hidden,
                InputMode::Pos => self.pos_emb_dim,
            }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("word_emb_dim", self.word_emb_dim),
            ("char_emb_dim", self.char_emb_dim),
            ("char_lstm_hidden", self.char_lstm_hidden),
            ("pos_emb_dim", self.pos_emb_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("lstm_depth", self.lstm_depth),
            ("arc_mlp", self.arc_mlp),
            ("rel_mlp", self.rel_mlp),
            ("mlp_depth", self.mlp_depth),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(ModelError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        let rates = [
            ("word_dropout", self.word_dropout),
            ("char_dropout", self.char_dropout),
            ("pos_dropout", self.pos_dropout),
            ("lstm_dropout", self.lstm_dropout),
            ("arc_mlp_dropout", self.arc_mlp_dropout),
            ("rel_mlp_dropout", self.rel_mlp_dropout),
        ];
        for (name, v) in rates {
            if !(0.0..1.0).contains(&v) {
                return Err(ModelError::InvalidConfig(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual value. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        fn int(key: &str, v: &str) -> Result<usize, ModelError> {
            v.parse()
                .map_err(|_| ModelError::InvalidConfig(format!("{key}: expected an integer, got {v:?}")))
        }
        fn float(key: &str, v: &str) -> Result<f64, ModelError> {
            v.parse()
                .map_err(|_| ModelError::InvalidConfig(format!("{key}: expected a number, got {v:?}")))
        }
        match key {
            "word_emb_dim" => self.word_emb_dim = int(key, value)?,
            "char_emb_dim" => self.char_emb_dim = int(key, value)?,
            "char_lstm_hidden" => self.char_lstm_hidden = int(key, value)?,
            "pos_emb_dim" => self.pos_emb_dim = int(key, value)?,
            "lstm_hidden" => self.lstm_hidden = int(key, value)?,
            "lstm_depth" => self.lstm_depth = int(key, value)?,
            "arc_mlp" => self.arc_mlp = int(key, value)?,
            "rel_mlp" => self.rel_mlp = int(key, value)?,
            "mlp_depth" => self.mlp_depth = int(key, value)?,
            "word_dropout" => self.word_dropout = float(key, value)?,
            "char_dropout" => self.char_dropout = float(key, value)?,
            "pos_dropout" => self.pos_dropout = float(key, value)?,
            "lstm_dropout" => self.lstm_dropout = float(key, value)?,
            "arc_mlp_dropout" => self.arc_mlp_dropout = float(key, value)?,
            "rel_mlp_dropout" => self.rel_mlp_dropout = float(key, value)?,
            "learning_rate" => self.learning_rate = float(key, value)?,
            "input_mode" => self.input_mode = value.parse()?,
            other => return Err(ModelError::UnknownKey(other.to_owned())),
        }
        Ok(())
    }

    /// `key=value` lines in [`HYPER_KEYS`] order. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_key_values(&self) -> String {
        let values: [String; 17] = [
            self.word_emb_dim.to_string(),
            self.char_emb_dim.to_string(),
            self.char_lstm_hidden.to_string(),
            self.pos_emb_dim.to_string(),
            self.lstm_hidden.to_string(),
            self.lstm_depth.to_string(),
            self.arc_mlp.to_string(),
            self.rel_mlp.to_string(),
            self.mlp_depth.to_string(),
            self.word_dropout.to_string(),
            self.char_dropout.to_string(),
            self.pos_dropout.to_string(),
            self.lstm_dropout.to_string(),
            self.arc_mlp_dropout.to_string(),
            self.rel_mlp_dropout.to_string(),
            self.learning_rate.to_string(),
            self.input_mode.to_string(),
        ];
        HYPER_KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn from_key_values(text: &str) -> Result<Self, ModelError> {
        let mut hp = HyperParams::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::InvalidConfig(format!("expected key=value, got {line:?}")))?;
            hp.set(k.trim(), v.trim())?;
        }
        hp.validate()?;
        Ok(hp)
    }
}
