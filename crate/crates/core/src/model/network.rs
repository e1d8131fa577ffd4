use rand::{Rng, RngCore};

use crate::conllx::{Relation, Sentence};
use crate::model::lstm::{bilstm_final_states, run_bilstm, BiLstmIds, LstmIds};
use crate::model::{HyperParams, InputMode, ModelError, ScorePair, Vocab};
use crate::numerics::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::scalar::Scalar;
use crate::trainer::apply_token_dropout;

/// Slope of the MLP activation for negative inputs.
pub const LEAKY_SLOPE: f64 = 0.1;

/// Randomness for training-time dropout. `Off` gives the deterministic
/// evaluation-mode forward pass.
pub enum Dropout<'r> {
    Off,
    On(&'r mut dyn RngCore),
}

impl Dropout<'_> {
    pub fn is_on(&self) -> bool {
        matches!(self, Dropout::On(_))
    }

    fn tokens(&mut self, ids: Vec<usize>, rate: f64) -> Vec<usize> {
        match self {
            Dropout::On(rng) if rate > 0.0 => apply_token_dropout(&ids, rate, &mut **rng),
            _ => ids,
        }
    }

    /// Inverted-dropout mask of zeros and `1 / (1 - rate)`.
    fn mask<T: Scalar>(&mut self, shape: &[usize], rate: f64) -> Option<Tensor<T>> {
        match self {
            Dropout::On(rng) if rate > 0.0 => {
                let keep = T::of(1.0 / (1.0 - rate));
                let len = shape.iter().product();
                let data = (0..len)
                    .map(|_| if rng.gen_bool(rate) { T::zero() } else { keep })
                    .collect();
                Some(Tensor::new(shape.to_vec(), data).expect("length matches"))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct MlpIds {
    pub layers: Vec<(ParamId, ParamId)>,
}

/// Parameter handles of every network component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub word_embed: ParamId,
    pub char_embed: Option<ParamId>,
    pub char_lstm: Option<BiLstmIds>,
    pub pos_embed: Option<ParamId>,
    pub root: ParamId,
    pub encoder: Vec<BiLstmIds>,
    pub arc_dep: MlpIds,
    pub arc_head: MlpIds,
    pub rel_dep: MlpIds,
    pub rel_head: MlpIds,
    pub arc_biaffine: ParamId,
    pub rel_biaffine: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Init {
    /// Uniform in ±sqrt(6 / (rows + cols)).
    Glorot,
    /// Uniform in ±0.1.
    Embedding,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

fn lstm_specs(specs: &mut Vec<ParamSpec>, prefix: &str, input: usize, hidden: usize) {
    for dir in ["fwd", "bwd"] {
        specs.push(ParamSpec {
            name: format!("{prefix}.{dir}.w_input"),
            shape: vec![input, 4 * hidden],
            init: Init::Glorot,
        });
        specs.push(ParamSpec {
            name: format!("{prefix}.{dir}.w_hidden"),
            shape: vec![hidden, 4 * hidden],
            init: Init::Glorot,
        });
        specs.push(ParamSpec {
            name: format!("{prefix}.{dir}.bias"),
            shape: vec![1, 4 * hidden],
            init: Init::Zero,
        });
    }
}

fn mlp_specs(specs: &mut Vec<ParamSpec>, prefix: &str, input: usize, output: usize, depth: usize) {
    let mut width = input;
    for layer in 0..depth {
        specs.push(ParamSpec {
            name: format!("{prefix}.{layer}.weight"),
            shape: vec![width, output],
            init: Init::Glorot,
        });
        specs.push(ParamSpec {
            name: format!("{prefix}.{layer}.bias"),
            shape: vec![1, output],
            init: Init::Zero,
        });
        width = output;
    }
}

/// Every parameter the network needs, in a fixed order.
pub(crate) fn param_specs(vocab: &Vocab, hp: &HyperParams) -> Result<Vec<ParamSpec>, ModelError> {
    hp.validate()?;
    let mut specs = vec![ParamSpec {
        name: "embed.word".into(),
        shape: vec![vocab.words.len(), hp.word_emb_dim],
        init: Init::Embedding,
    }];
    match hp.input_mode {
        InputMode::Char => {
            specs.push(ParamSpec {
                name: "embed.char".into(),
                shape: vec![vocab.chars.len(), hp.char_emb_dim],
                init: Init::Embedding,
            });
            lstm_specs(&mut specs, "char_lstm", hp.char_emb_dim, hp.char_lstm_hidden);
        }
        InputMode::Pos => {
            let tags = vocab.pos.as_ref().ok_or_else(|| {
                ModelError::InvalidConfig("input_mode=pos requires POS tags in the training data".into())
            })?;
            specs.push(ParamSpec {
                name: "embed.pos".into(),
                shape: vec![tags.len(), hp.pos_emb_dim],
                init: Init::Embedding,
            });
        }
    }
    specs.push(ParamSpec {
        name: "embed.root".into(),
        shape: vec![1, hp.input_dim()],
        init: Init::Embedding,
    });
    let mut width = hp.input_dim();
    for layer in 0..hp.lstm_depth {
        lstm_specs(&mut specs, &format!("encoder.{layer}"), width, hp.lstm_hidden);
        width = 2 * hp.lstm_hidden;
    }
    mlp_specs(&mut specs, "mlp.arc_dep", width, hp.arc_mlp, hp.mlp_depth);
    mlp_specs(&mut specs, "mlp.arc_head", width, hp.arc_mlp, hp.mlp_depth);
    mlp_specs(&mut specs, "mlp.rel_dep", width, hp.rel_mlp, hp.mlp_depth);
    mlp_specs(&mut specs, "mlp.rel_head", width, hp.rel_mlp, hp.mlp_depth);
    specs.push(ParamSpec {
        name: "biaffine.arc".into(),
        shape: vec![hp.arc_mlp + 1, hp.arc_mlp],
        init: Init::Zero,
    });
    specs.push(ParamSpec {
        name: "biaffine.rel".into(),
        shape: vec![hp.rel_mlp + 1, Relation::COUNT, hp.rel_mlp + 1],
        init: Init::Zero,
    });
    Ok(specs)
}

pub(crate) fn init_params<T: Scalar>(specs: &[ParamSpec], rng: &mut dyn RngCore) -> ParamStore<T> {
    let mut store = ParamStore::new();
    for spec in specs {
        let len: usize = spec.shape.iter().product();
        let bound = match spec.init {
            Init::Glorot => (6.0 / (spec.shape[0] + spec.shape[1]) as f64).sqrt(),
            Init::Embedding => 0.1,
            Init::Zero => 0.0,
        };
        let data = (0..len)
            .map(|_| {
                if bound == 0.0 {
                    T::zero()
                } else {
                    T::of(rng.gen_range(-bound..bound))
                }
            })
            .collect();
        let tensor = Tensor::new(spec.shape.clone(), data).expect("length matches");
        store.add(spec.name.clone(), tensor);
    }
    store
}

impl Layout {
    /// Looks up every parameter by name and checks its shape. The store
    /// must contain exactly the expected parameters.
    pub(crate) fn resolve<T: Scalar>(
        specs: &[ParamSpec],
        store: &ParamStore<T>,
        hp: &HyperParams,
    ) -> Result<Layout, ModelError> {
        for spec in specs {
            let id = store
                .id_of(&spec.name)
                .ok_or_else(|| ModelError::MissingParam(spec.name.clone()))?;
            let found = store.get(id).shape();
            if found != spec.shape.as_slice() {
                return Err(ModelError::ParamShape {
                    name: spec.name.clone(),
                    expected: spec.shape.clone(),
                    found: found.to_vec(),
                });
            }
        }
        if let Some((_, name, _)) = store.iter().find(|(_, name, _)| !specs.iter().any(|s| s.name == *name)) {
            return Err(ModelError::UnexpectedParam(name.to_owned()));
        }

        let id = |name: &str| store.id_of(name).expect("checked above");
        let lstm = |prefix: &str| BiLstmIds {
            forward: LstmIds {
                w_input: id(&format!("{prefix}.fwd.w_input")),
                w_hidden: id(&format!("{prefix}.fwd.w_hidden")),
                bias: id(&format!("{prefix}.fwd.bias")),
            },
            backward: LstmIds {
                w_input: id(&format!("{prefix}.bwd.w_input")),
                w_hidden: id(&format!("{prefix}.bwd.w_hidden")),
                bias: id(&format!("{prefix}.bwd.bias")),
            },
        };
        let mlp = |prefix: &str| MlpIds {
            layers: (0..hp.mlp_depth)
                .map(|l| (id(&format!("{prefix}.{l}.weight")), id(&format!("{prefix}.{l}.bias"))))
                .collect(),
        };
        let char_mode = hp.input_mode == InputMode::Char;
        Ok(Layout {
            word_embed: id("embed.word"),
            char_embed: char_mode.then(|| id("embed.char")),
            char_lstm: char_mode.then(|| lstm("char_lstm")),
            pos_embed: (!char_mode).then(|| id("embed.pos")),
            root: id("embed.root"),
            encoder: (0..hp.lstm_depth).map(|l| lstm(&format!("encoder.{l}"))).collect(),
            arc_dep: mlp("mlp.arc_dep"),
            arc_head: mlp("mlp.arc_head"),
            rel_dep: mlp("mlp.rel_dep"),
            rel_head: mlp("mlp.rel_head"),
            arc_biaffine: id("biaffine.arc"),
            rel_biaffine: id("biaffine.rel"),
        })
    }
}

/// Graph nodes of the two score tensors of one sentence.
#[derive(Clone, Copy, Debug)]
pub struct ScoreVars {
    pub n: usize,
    /// `[n + 1, n + 1]`, indexed `[dependent][head]`.
    pub arc: Var,
    /// `[(n + 1) * (n + 1), labels]`, row `dependent * (n + 1) + head`.
    pub rel: Var,
}

impl ScoreVars {
    pub fn to_pair<T: Scalar>(&self, g: &Graph<'_, T>) -> ScorePair<T> {
        let m = self.n + 1;
        ScorePair {
            arc: g.value(self.arc).clone(),
            rel: g
                .value(self.rel)
                .reshaped(vec![m, m, Relation::COUNT])
                .expect("rel scores hold (n+1)^2 rows"),
        }
    }
}

/// Architecture and vocabularies: everything about the model except the
/// parameter values, so that forward passes can run against any store.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub vocab: Vocab,
    pub hyper: HyperParams,
    pub(crate) layout: Layout,
}

impl Network {
    /// `[n + 1, input_dim]`. Row 0 is the learned root vector; row `i` is the
    /// word embedding of token `i` followed by its character or POS
    /// representation.
    pub fn embed_tokens<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        sentence: &Sentence,
        dropout: &mut Dropout<'_>,
    ) -> Result<Var, ModelError> {
        let hp = &self.hyper;
        let n = sentence.len();
        if n == 0 {
            return Err(ModelError::EmptySentence);
        }

        let word_ids = sentence.forms().map(|f| self.vocab.word_id(f)).collect();
        let word_ids = dropout.tokens(word_ids, hp.word_dropout);
        let table = g.param(self.layout.word_embed);
        let words = g.gather_rows(table, &word_ids)?;

        let extra = match hp.input_mode {
            InputMode::Char => {
                let table = g.param(self.layout.char_embed.expect("char mode"));
                let lstm = self.layout.char_lstm.expect("char mode");
                let mut rows = Vec::with_capacity(n);
                for t in &sentence.tokens {
                    if t.form.is_empty() {
                        return Err(ModelError::EmptyForm(t.id));
                    }
                    let ids = dropout.tokens(self.vocab.char_ids(&t.form), hp.char_dropout);
                    let chars = g.gather_rows(table, &ids)?;
                    rows.push(bilstm_final_states(g, &lstm, chars, hp.char_lstm_hidden)?);
                }
                g.concat_rows(&rows)?
            }
            InputMode::Pos => {
                let tags = self.vocab.pos.as_ref().ok_or(ModelError::MissingPos(1))?;
                let ids = sentence
                    .tokens
                    .iter()
                    .map(|t| {
                        t.pos
                            .as_deref()
                            .map(|p| tags.get(p))
                            .ok_or(ModelError::MissingPos(t.id))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let ids = dropout.tokens(ids, hp.pos_dropout);
                let table = g.param(self.layout.pos_embed.expect("pos mode"));
                g.gather_rows(table, &ids)?
            }
        };

        let tokens = g.concat_cols(&[words, extra])?;
        let root = g.param(self.layout.root);
        let inputs = g.concat_rows(&[root, tokens])?;
        assert_eq!(g.shape(inputs), [n + 1, hp.input_dim()]);
        Ok(inputs)
    }

    /// Stacked BiLSTM; `[n + 1, 2 * lstm_hidden]`.
    pub fn encode<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        inputs: Var,
        dropout: &mut Dropout<'_>,
    ) -> Result<Var, ModelError> {
        let hp = &self.hyper;
        let rows = g.shape(inputs)[0];
        let mut x = inputs;
        for layer in &self.layout.encoder {
            x = run_bilstm(g, layer, x, hp.lstm_hidden)?;
            if let Some(mask) = dropout.mask(g.shape(x), hp.lstm_dropout) {
                x = g.dropout(x, mask)?;
            }
        }
        assert_eq!(g.shape(x), [rows, 2 * hp.lstm_hidden]);
        Ok(x)
    }

    fn mlp<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        ids: &MlpIds,
        input: Var,
        rate: f64,
        dropout: &mut Dropout<'_>,
    ) -> Result<Var, ModelError> {
        let mut x = input;
        for &(w, b) in &ids.layers {
            let w = g.param(w);
            let b = g.param(b);
            x = g.matmul(x, w)?;
            x = g.add_bias(x, b)?;
            x = g.leaky_relu(x, T::of(LEAKY_SLOPE))?;
            if let Some(mask) = dropout.mask(g.shape(x), rate) {
                x = g.dropout(x, mask)?;
            }
        }
        Ok(x)
    }

    /// MLP heads and biaffine scorers over the encoder output.
    pub fn score<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        encoded: Var,
        dropout: &mut Dropout<'_>,
    ) -> Result<ScoreVars, ModelError> {
        let hp = &self.hyper;
        let m = g.shape(encoded)[0];
        let l = &self.layout;

        let arc_dep = self.mlp(g, &l.arc_dep, encoded, hp.arc_mlp_dropout, dropout)?;
        let arc_head = self.mlp(g, &l.arc_head, encoded, hp.arc_mlp_dropout, dropout)?;
        let rel_dep = self.mlp(g, &l.rel_dep, encoded, hp.rel_mlp_dropout, dropout)?;
        let rel_head = self.mlp(g, &l.rel_head, encoded, hp.rel_mlp_dropout, dropout)?;
        assert_eq!(g.shape(arc_dep), [m, hp.arc_mlp]);
        assert_eq!(g.shape(rel_head), [m, hp.rel_mlp]);

        // S_arc = (H_dep ⊕ 1) U_arc H_headᵀ
        let dep = g.append_ones_column(arc_dep)?;
        let u_arc = g.param(l.arc_biaffine);
        let left = g.matmul(dep, u_arc)?;
        let head_t = g.transpose(arc_head)?;
        let arc = g.matmul(left, head_t)?;

        // S_rel[d][h][l] = (h_d ⊕ 1) U_rel[:, l, :] (h_h ⊕ 1)ᵀ
        let width = hp.rel_mlp + 1;
        let dep = g.append_ones_column(rel_dep)?;
        let head = g.append_ones_column(rel_head)?;
        let head_t = g.transpose(head)?;
        let u_rel = g.param(l.rel_biaffine);
        let u_rel = g.reshape(u_rel, vec![width, Relation::COUNT * width])?;
        let left = g.matmul(dep, u_rel)?;
        let mut per_label = Vec::with_capacity(Relation::COUNT);
        for label in 0..Relation::COUNT {
            let block = g.slice_cols(left, label * width, (label + 1) * width)?;
            per_label.push(g.matmul(block, head_t)?);
        }
        let rel = g.stack_columns(&per_label)?;

        assert_eq!(g.shape(arc), [m, m]);
        assert_eq!(g.shape(rel), [m * m, Relation::COUNT]);
        Ok(ScoreVars { n: m - 1, arc, rel })
    }

    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        sentence: &Sentence,
        dropout: &mut Dropout<'_>,
    ) -> Result<ScoreVars, ModelError> {
        let inputs = self.embed_tokens(g, sentence, dropout)?;
        let encoded = self.encode(g, inputs, dropout)?;
        self.score(g, encoded, dropout)
    }

    /// Mean head cross-entropy plus mean label cross-entropy, labels scored
    /// at the gold heads.
    pub fn loss<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        scores: &ScoreVars,
        gold: &Sentence,
    ) -> Result<Var, ModelError> {
        graph_loss(g, scores, gold)
    }

    pub fn sentence_loss<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        sentence: &Sentence,
        dropout: &mut Dropout<'_>,
    ) -> Result<Var, ModelError> {
        let scores = self.forward(g, sentence, dropout)?;
        graph_loss(g, &scores, sentence)
    }
}

pub(crate) fn graph_loss<T: Scalar>(
    g: &mut Graph<'_, T>,
    scores: &ScoreVars,
    gold: &Sentence,
) -> Result<Var, ModelError> {
    let n = scores.n;
    if gold.len() != n {
        return Err(ModelError::LengthMismatch {
            expected: n,
            found: gold.len(),
        });
    }
    if n == 0 {
        return Err(ModelError::EmptySentence);
    }
    let heads = gold.heads();
    if let Some(t) = gold.tokens.iter().find(|t| t.head > n) {
        return Err(ModelError::HeadOutOfRange(t.id));
    }
    let labels: Vec<usize> = gold.tokens.iter().map(|t| t.rel.index()).collect();
    let dependents: Vec<usize> = (1..=n).collect();
    let cells: Vec<usize> = heads.iter().enumerate().map(|(i, &h)| (i + 1) * (n + 1) + h).collect();

    let inv_n = T::one() / T::of(n as f64);
    let arc_rows = g.gather_rows(scores.arc, &dependents)?;
    let arc_loss = g.cross_entropy(arc_rows, &heads)?;
    let arc_loss = g.scale(arc_loss, inv_n)?;
    let rel_rows = g.gather_rows(scores.rel, &cells)?;
    let rel_loss = g.cross_entropy(rel_rows, &labels)?;
    let rel_loss = g.scale(rel_loss, inv_n)?;
    Ok(g.add(arc_loss, rel_loss)?)
}
