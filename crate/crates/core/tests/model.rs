#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeMap;

use depparse::conllx::{Relation, Sentence, Token};
use depparse::model::{
    build_vocab, loss, word_counts, Dropout, HyperParams, InputMode, ModelError, ParserModel, ScorePair, Symbols, Vocab,
};
use depparse::numerics::{Graph, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM step from state (h, c) given the pre-activation `z` already
/// containing the input projection and bias. Gate order i, f, g, o.
fn cell_step(z: &[f64], w_hidden: &Tensor<f64>, h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = h.len();
    let mut pre = z.to_vec();
    for (j, p) in pre.iter_mut().enumerate() {
        *p += (0..k).map(|r| h[r] * w_hidden.at(r, j)).sum::<f64>();
    }
    let mut h_new = vec![0.0; k];
    let mut c_new = vec![0.0; k];
    for u in 0..k {
        let i = sigmoid(pre[u]);
        let f = sigmoid(pre[k + u]);
        let g = pre[2 * k + u].tanh();
        let o = sigmoid(pre[3 * k + u]);
        c_new[u] = f * c[u] + i * g;
        h_new[u] = o * c_new[u].tanh();
    }
    (h_new, c_new)
}

/// `x · W + b` for a row vector.
fn project(x: &[f64], w: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
    (0..w.cols())
        .map(|j| b.at(0, j) + x.iter().enumerate().map(|(r, v)| v * w.at(r, j)).sum::<f64>())
        .collect()
}

fn param<'a>(model: &'a ParserModel<f64>, name: &str) -> &'a Tensor<f64> {
    model.params.get(model.params.id_of(name).unwrap())
}

fn set_param(model: &mut ParserModel<f64>, name: &str, values: &[f64]) {
    let id = model.params.id_of(name).unwrap();
    let t = model.params.get_mut(id);
    assert_eq!(t.len(), values.len(), "{name}");
    t.data_mut().copy_from_slice(values);
}

fn fill_param(model: &mut ParserModel<f64>, name: &str, value: f64) {
    let id = model.params.id_of(name).unwrap();
    model.params.get_mut(id).data_mut().fill(value);
}

fn tagged(forms: &[&str]) -> Sentence {
    let mut s = Sentence::from_parts(
        forms,
        &(0..forms.len()).collect::<Vec<_>>(),
        &std::iter::once(Relation::Hed)
            .chain(std::iter::repeat(Relation::Att))
            .take(forms.len())
            .collect::<Vec<_>>(),
    );
    for t in &mut s.tokens {
        t.pos = Some(format!("T{}", t.form.len() % 3));
    }
    s
}

#[test]
fn default_dimensions_in_both_modes() {
    let corpus = vec![tagged(&["我们", "看", "书", "。"])];
    for mode in [InputMode::Char, InputMode::Pos] {
        let hyper = HyperParams {
            input_mode: mode,
            ..HyperParams::default()
        };
        assert_eq!(hyper.input_dim(), 400);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = ParserModel::<f64>::new(build_vocab(&corpus, 1).unwrap(), hyper, &mut rng).unwrap();
        for n in [1, 4] {
            let s = tagged(&["我们", "看", "书", "。"][..n]);
            let mut g = Graph::new(&model.params);
            let inputs = model.net.embed_tokens(&mut g, &s, &mut Dropout::Off).unwrap();
            assert_eq!(g.shape(inputs), [n + 1, 400]);
            let r = model.net.encode(&mut g, inputs, &mut Dropout::Off).unwrap();
            assert_eq!(g.shape(r), [n + 1, 800]);
            let pair = model.net.score(&mut g, r, &mut Dropout::Off).unwrap().to_pair(&g);
            assert_eq!(pair.arc.shape(), [n + 1, n + 1]);
            assert_eq!(pair.rel.shape(), [n + 1, n + 1, Relation::COUNT]);
        }
    }
}

#[test]
fn parameter_shapes() {
    let corpus = vec![tagged(&["a", "b"])];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = ParserModel::<f64>::new(build_vocab(&corpus, 1).unwrap(), HyperParams::default(), &mut rng).unwrap();
    assert_eq!(param(&model, "biaffine.arc").shape(), [501, 500]);
    assert_eq!(param(&model, "biaffine.rel").shape(), [101, 14, 101]);
    assert_eq!(param(&model, "char_lstm.fwd.w_input").shape(), [50, 200]);
    assert_eq!(param(&model, "encoder.0.fwd.w_input").shape(), [400, 1600]);
    assert_eq!(param(&model, "encoder.2.bwd.w_hidden").shape(), [400, 1600]);
    assert_eq!(param(&model, "mlp.arc_dep.0.weight").shape(), [800, 500]);
    assert!(param(&model, "biaffine.arc").data().iter().all(|&v| v == 0.0));
    assert!(param(&model, "embed.word").data().iter().all(|v| v.abs() <= 0.1));
}

#[test]
fn identical_forms_give_identical_rows() {
    let s = tagged(&["书", "看", "书"]);
    let model = common::random_model(std::slice::from_ref(&s), HyperParams::reduced(), 2, 0.5);
    let mut g = Graph::new(&model.params);
    let x = model.net.embed_tokens(&mut g, &s, &mut Dropout::Off).unwrap();
    let x = g.value(x);
    assert_eq!(x.row(1), x.row(3));
    assert_ne!(x.row(1), x.row(2));
    assert_eq!(x.row(0), param(&model, "embed.root").row(0));
}

#[test]
fn one_char_token_matches_cell_oracle() {
    let s = tagged(&["书"]);
    let model = common::random_model(std::slice::from_ref(&s), HyperParams::reduced(), 3, 0.5);
    let mut g = Graph::new(&model.params);
    let x = model.net.embed_tokens(&mut g, &s, &mut Dropout::Off).unwrap();
    let row = g.value(x).row(1).to_vec();

    let vocab = model.vocab();
    let word = param(&model, "embed.word").row(vocab.word_id("书")).to_vec();
    let ch = param(&model, "embed.char").row(vocab.char_ids("书")[0]).to_vec();
    let k = model.hyper().char_lstm_hidden;
    let mut expected = word;
    for dir in ["fwd", "bwd"] {
        let z = project(
            &ch,
            param(&model, &format!("char_lstm.{dir}.w_input")),
            param(&model, &format!("char_lstm.{dir}.bias")),
        );
        let (h, _) = cell_step(
            &z,
            param(&model, &format!("char_lstm.{dir}.w_hidden")),
            &vec![0.0; k],
            &vec![0.0; k],
        );
        expected.extend(h);
    }
    assert_eq!(row.len(), expected.len());
    for (a, b) in row.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn multi_char_token_matches_unrolled_oracle() {
    let s = tagged(&["abc"]);
    let model = common::random_model(std::slice::from_ref(&s), HyperParams::reduced(), 4, 0.5);
    let mut g = Graph::new(&model.params);
    let x = model.net.embed_tokens(&mut g, &s, &mut Dropout::Off).unwrap();
    let row = g.value(x).row(1).to_vec();

    let k = model.hyper().char_lstm_hidden;
    let chars: Vec<Vec<f64>> = model
        .vocab()
        .char_ids("abc")
        .into_iter()
        .map(|i| param(&model, "embed.char").row(i).to_vec())
        .collect();
    let run = |dir: &str, order: Vec<usize>| {
        let (mut h, mut c) = (vec![0.0; k], vec![0.0; k]);
        for t in order {
            let z = project(
                &chars[t],
                param(&model, &format!("char_lstm.{dir}.w_input")),
                param(&model, &format!("char_lstm.{dir}.bias")),
            );
            (h, c) = cell_step(&z, param(&model, &format!("char_lstm.{dir}.w_hidden")), &h, &c);
        }
        h
    };
    let fwd = run("fwd", vec![0, 1, 2]);
    let bwd = run("bwd", vec![2, 1, 0]);
    let tail = &row[model.hyper().word_emb_dim..];
    for (a, b) in tail.iter().zip(fwd.iter().chain(&bwd)) {
        assert!((a - b).abs() <= 1e-12);
    }
}

fn one_layer() -> HyperParams {
    HyperParams {
        lstm_depth: 1,
        ..HyperParams::reduced()
    }
}

#[test]
fn zero_recurrent_weights_give_single_cell_steps() {
    let s = tagged(&["a", "b", "c"]);
    let mut model = common::random_model(std::slice::from_ref(&s), one_layer(), 5, 0.5);
    fill_param(&mut model, "encoder.0.fwd.w_hidden", 0.0);
    fill_param(&mut model, "encoder.0.bwd.w_hidden", 0.0);
    let d_in = model.hyper().input_dim();
    let k = model.hyper().lstm_hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inputs = Tensor::from_fn(4, d_in, |_, _| rng.gen_range(-1.0..1.0));

    let mut g = Graph::new(&model.params);
    let x = g.constant(inputs.clone()).unwrap();
    let r = model.net.encode(&mut g, x, &mut Dropout::Off).unwrap();
    let r = g.value(r);
    assert_eq!(r.shape(), [4, 2 * k]);
    let zero = Tensor::zeros(vec![k, 4 * k]);
    for (half, dir) in ["fwd", "bwd"].iter().enumerate() {
        let order: Vec<usize> = if half == 0 { vec![0, 1, 2, 3] } else { vec![3, 2, 1, 0] };
        // The hidden state never feeds back, but the cell state still
        // carries through the forget gate; only the first step of each
        // direction is a lone cell step from the zero state.
        let mut c = vec![0.0; k];
        for (step, &t) in order.iter().enumerate() {
            let z = project(
                inputs.row(t),
                param(&model, &format!("encoder.0.{dir}.w_input")),
                param(&model, &format!("encoder.0.{dir}.bias")),
            );
            let (h, c_next) = cell_step(&z, &zero, &vec![0.0; k], &c);
            if step == 0 {
                let (h0, _) = cell_step(&z, &zero, &vec![0.0; k], &vec![0.0; k]);
                assert_eq!(h, h0);
            }
            for u in 0..k {
                assert!((r.at(t, half * k + u) - h[u]).abs() <= 1e-12);
            }
            c = c_next;
        }
    }
}

#[test]
fn reversing_input_and_swapping_directions_reverses_output() {
    let s = tagged(&["a"]);
    let model = common::random_model(&[s], one_layer(), 7, 0.5);
    let mut swapped = ParamStore::new();
    for (_, name, t) in model.params.iter() {
        let other = if name.contains(".fwd.") {
            name.replace(".fwd.", ".bwd.")
        } else {
            name.replace(".bwd.", ".fwd.")
        };
        let source = if name.starts_with("encoder.") {
            other.as_str()
        } else {
            name
        };
        swapped.add(name, param(&model, source).clone());
        assert_eq!(t.shape(), swapped.get(swapped.id_of(name).unwrap()).shape());
    }
    let mirror = ParserModel::from_params(model.vocab().clone(), model.hyper().clone(), swapped).unwrap();

    let m = 6;
    let d_in = model.hyper().input_dim();
    let k = model.hyper().lstm_hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inputs = Tensor::from_fn(m, d_in, |_, _| rng.gen_range(-1.0..1.0));
    let reversed = Tensor::from_fn(m, d_in, |i, j| inputs.at(m - 1 - i, j));

    let encode = |model: &ParserModel<f64>, x: &Tensor<f64>| {
        let mut g = Graph::new(&model.params);
        let v = g.constant(x.clone()).unwrap();
        let r = model.net.encode(&mut g, v, &mut Dropout::Off).unwrap();
        g.value(r).clone()
    };
    let r = encode(&model, &inputs);
    let r_mirror = encode(&mirror, &reversed);
    for i in 0..m {
        for u in 0..k {
            // Forward half of the mirror is the backward half of the
            // original at the reflected position, and vice versa.
            assert!((r_mirror.at(i, u) - r.at(m - 1 - i, k + u)).abs() <= 1e-12);
            assert!((r_mirror.at(i, k + u) - r.at(m - 1 - i, u)).abs() <= 1e-12);
        }
    }
}

#[test]
fn biaffine_by_hand_at_dimension_one() {
    let s = tagged(&["a"]);
    let hyper = HyperParams {
        lstm_hidden: 1,
        arc_mlp: 1,
        rel_mlp: 1,
        ..HyperParams::reduced()
    };
    let mut model = common::random_model(&[s], hyper, 9, 0.5);
    set_param(&mut model, "mlp.arc_dep.0.weight", &[1.0, 1.0]);
    set_param(&mut model, "mlp.arc_dep.0.bias", &[0.0]);
    set_param(&mut model, "mlp.arc_head.0.weight", &[2.0, 0.0]);
    set_param(&mut model, "mlp.arc_head.0.bias", &[1.0]);
    set_param(&mut model, "biaffine.arc", &[2.0, -1.0]);
    set_param(&mut model, "mlp.rel_dep.0.weight", &[1.0, 0.0]);
    set_param(&mut model, "mlp.rel_dep.0.bias", &[0.0]);
    set_param(&mut model, "mlp.rel_head.0.weight", &[0.0, 1.0]);
    set_param(&mut model, "mlp.rel_head.0.bias", &[0.0]);
    let mut u_rel = vec![0.0; 2 * Relation::COUNT * 2];
    // U_rel[:, SBV, :] = [[1, 2], [3, 4]]; layout [row, label, col].
    let sbv = Relation::Sbv.index();
    u_rel[sbv * 2] = 1.0;
    u_rel[sbv * 2 + 1] = 2.0;
    u_rel[Relation::COUNT * 2 + sbv * 2] = 3.0;
    u_rel[Relation::COUNT * 2 + sbv * 2 + 1] = 4.0;
    set_param(&mut model, "biaffine.rel", &u_rel);

    let mut g = Graph::new(&model.params);
    let r = g
        .constant(Tensor::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap())
        .unwrap();
    let pair = model.net.score(&mut g, r, &mut Dropout::Off).unwrap().to_pair(&g);

    // Arc dependent MLP: r·[1,1] = [-1, 3.5] -> leaky [-0.1, 3.5].
    // Arc head MLP: r·[2,0] + 1 = [3, 2].
    // (h_d ⊕ 1)·[2, -1]ᵀ = 2 h_d - 1 = [-1.2, 6]; times h_h.
    let expected_arc = [[-3.6, -2.4], [18.0, 12.0]];
    for d in 0..2 {
        for h in 0..2 {
            assert!((pair.arc.at(d, h) - expected_arc[d][h]).abs() <= 1e-12);
        }
    }
    // Relation MLPs: dependent [1, 0.5]; head [-2, 3] -> leaky [-0.2, 3].
    // S = r_d (r_h + 2) + (3 r_h + 4).
    let expected_sbv = [[5.2, 18.0], [4.3, 15.5]];
    for d in 0..2 {
        for h in 0..2 {
            for l in Relation::ALL {
                let want = if l == Relation::Sbv { expected_sbv[d][h] } else { 0.0 };
                assert!((pair.rel.at3(d, h, l.index()) - want).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn zero_biaffine_weights_give_zero_scores() {
    let s = tagged(&["a", "bc", "d"]);
    let mut model = common::random_model(std::slice::from_ref(&s), HyperParams::reduced(), 10, 0.5);
    fill_param(&mut model, "biaffine.arc", 0.0);
    fill_param(&mut model, "biaffine.rel", 0.0);
    let pair = model.scores(&s).unwrap();
    assert!(pair.arc.data().iter().chain(pair.rel.data()).all(|&v| v == 0.0));
}

#[test]
fn forward_is_deterministic() {
    let s = tagged(&["a", "bc", "d"]);
    let model = common::random_model(std::slice::from_ref(&s), HyperParams::reduced(), 11, 0.5);
    assert_eq!(model.scores(&s).unwrap(), model.scores(&s).unwrap());
}

#[test]
fn pos_mode_requires_tags() {
    let s = tagged(&["a", "b"]);
    let hyper = HyperParams {
        input_mode: InputMode::Pos,
        ..HyperParams::reduced()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = ParserModel::<f64>::new(
        build_vocab(std::slice::from_ref(&s), 1).unwrap(),
        hyper.clone(),
        &mut rng,
    )
    .unwrap();
    let mut untagged = s.clone();
    untagged.tokens[1].pos = None;
    assert!(matches!(model.scores(&untagged), Err(ModelError::MissingPos(2))));

    let bare = Sentence::from_parts(&["a"], &[0], &[Relation::Hed]);
    let vocab = build_vocab(&[bare], 1).unwrap();
    assert!(ParserModel::<f64>::new(vocab, hyper, &mut rng).is_err());
}

fn uniform_scores(n: usize) -> ScorePair<f64> {
    ScorePair {
        arc: Tensor::zeros(vec![n + 1, n + 1]),
        rel: Tensor::zeros(vec![n + 1, n + 1, Relation::COUNT]),
    }
}

#[test]
fn uniform_loss_for_one_token() {
    let gold = Sentence::from_parts(&["a"], &[0], &[Relation::Hed]);
    let l = loss(&uniform_scores(1), &gold).unwrap();
    assert!((l - (2f64.ln() + 14f64.ln())).abs() <= 1e-12);
}

#[test]
fn loss_shrinks_toward_zero_as_gold_margin_grows() {
    let gold = Sentence::from_parts(&["a", "b"], &[0, 1], &[Relation::Hed, Relation::Att]);
    let mut last = f64::INFINITY;
    for margin in [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
        let mut s = uniform_scores(2);
        for (i, t) in gold.tokens.iter().enumerate() {
            let d = i + 1;
            s.arc.set(d, t.head, margin);
            let idx = (d * 3 + t.head) * Relation::COUNT + t.rel.index();
            s.rel.data_mut()[idx] = margin;
        }
        let l = loss(&s, &gold).unwrap();
        assert!(l < last, "margin {margin}: {l} !< {last}");
        last = l;
    }
    assert!(last < 1e-15);
}

/// Direct log-sum-exp computation of the training loss.
fn oracle_loss(s: &ScorePair<f64>, gold: &Sentence) -> f64 {
    let n = gold.len();
    let lse = |xs: &[f64]| {
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    };
    let mut arc = 0.0;
    let mut rel = 0.0;
    for (i, t) in gold.tokens.iter().enumerate() {
        let d = i + 1;
        let row: Vec<f64> = (0..=n).map(|h| s.arc.at(d, h)).collect();
        arc += lse(&row) - row[t.head];
        let labels: Vec<f64> = (0..Relation::COUNT).map(|l| s.rel.at3(d, t.head, l)).collect();
        rel += lse(&labels) - labels[t.rel.index()];
    }
    arc / n as f64 + rel / n as f64
}

#[test]
fn loss_matches_log_softmax_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let gold = common::random_sentence(n, &mut rng);
        let m = n + 1;
        let s = ScorePair {
            arc: Tensor::from_fn(m, m, |_, _| rng.gen_range(-20.0..20.0)),
            rel: Tensor::new(
                vec![m, m, Relation::COUNT],
                (0..m * m * Relation::COUNT)
                    .map(|_| rng.gen_range(-20.0..20.0))
                    .collect(),
            )
            .unwrap(),
        };
        let (a, b) = (loss(&s, &gold).unwrap(), oracle_loss(&s, &gold));
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn model_loss_matches_oracle_on_model_scores() {
    let corpus = common::random_corpus(5, 6, 13);
    let model = common::random_model(&corpus, HyperParams::reduced(), 13, 0.5);
    for s in &corpus {
        let (l, _) = model.loss_and_gradient(s, &mut Dropout::Off).unwrap();
        let oracle = oracle_loss(&model.scores(s).unwrap(), s);
        assert!((l - oracle).abs() <= 1e-12 * oracle.max(1.0));
    }
}

#[test]
fn loss_is_invariant_to_vocabulary_relabeling() {
    let corpus = common::random_corpus(8, 6, 14);
    let model = common::random_model(&corpus, HyperParams::reduced(), 14, 0.5);
    let vocab = model.vocab();
    let reverse = |s: &Symbols| Symbols::new(s.symbols().iter().rev().cloned()).unwrap();
    let permuted = Vocab {
        words: reverse(&vocab.words),
        chars: reverse(&vocab.chars),
        pos: vocab.pos.as_ref().map(reverse),
    };

    let mut params = ParamStore::new();
    for (_, name, t) in model.params.iter() {
        let table = match name {
            "embed.word" => Some((&vocab.words, &permuted.words)),
            "embed.char" => Some((&vocab.chars, &permuted.chars)),
            _ => None,
        };
        let t = match table {
            None => t.clone(),
            Some((old, new)) => {
                let mut out = t.clone();
                for sym in old.symbols() {
                    let (from, to) = (old.get(sym), new.get(sym));
                    let cols = t.cols();
                    out.data_mut()[to * cols..(to + 1) * cols].copy_from_slice(t.row(from));
                }
                out
            }
        };
        params.add(name, t);
    }
    let relabeled = ParserModel::from_params(permuted, model.hyper().clone(), params).unwrap();
    assert_ne!(relabeled.vocab().words, model.vocab().words);
    for s in &corpus {
        let (a, _) = model.loss_and_gradient(s, &mut Dropout::Off).unwrap();
        let (b, _) = relabeled.loss_and_gradient(s, &mut Dropout::Off).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn build_vocab_examples() {
    let ab = Sentence::from_parts(&["A", "B"], &[0, 1], &[Relation::Hed, Relation::Att]);
    let v = build_vocab(&[ab], 1).unwrap();
    assert_eq!(v.words.len(), 4);
    assert!(v.words.contains("A") && v.words.contains("B"));
    assert_eq!(v.word_id("<pad>"), 0);
    assert_eq!(v.word_id("C"), 1);
    assert_eq!(v.relations().len(), 14);
    assert!(v.pos.is_none());

    let unique = Sentence::from_parts(
        &["x", "y", "z"],
        &[0, 1, 1],
        &[Relation::Hed, Relation::Att, Relation::Att],
    );
    let v = build_vocab(&[unique], 2).unwrap();
    assert_eq!(v.words.len(), 2);
    assert_eq!(v.chars.len(), 5);

    assert!(matches!(build_vocab(&[], 1), Err(ModelError::EmptyTreebank)));
}

#[test]
fn reserved_symbols_never_collide() {
    let tok = |form: &str, head| Token {
        id: 0,
        form: form.into(),
        pos: Some("<unk>".into()),
        head,
        rel: if head == 0 { Relation::Hed } else { Relation::Att },
    };
    let mut s = Sentence::new(vec![tok("<pad>", 0), tok("<unk>", 1), tok("w", 1)]);
    for (i, t) in s.tokens.iter_mut().enumerate() {
        t.id = i + 1;
    }
    let v = build_vocab(&[s], 1).unwrap();
    assert_eq!(v.words.symbols(), ["w"]);
    assert!(v.pos.as_ref().is_none_or(|p| p.symbols().is_empty()));
}

#[test]
fn zipf_counts_match_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let types = 200;
    let weights: Vec<f64> = (1..=types).map(|k| 1.0 / k as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut draw = || {
        let mut u = rng.gen_range(0.0..total);
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                return k;
            }
            u -= w;
        }
        types - 1
    };
    let corpus: Vec<Sentence> = (0..300)
        .map(|_| {
            let n = 1 + draw() % 10;
            let forms: Vec<String> = (0..n).map(|_| format!("w{}", draw())).collect();
            let forms: Vec<&str> = forms.iter().map(String::as_str).collect();
            let heads: Vec<usize> = (0..n).collect();
            let rels: Vec<Relation> = (0..n)
                .map(|i| if i == 0 { Relation::Hed } else { Relation::Att })
                .collect();
            Sentence::from_parts(&forms, &heads, &rels)
        })
        .collect();

    let mut recount: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &corpus {
        for t in &s.tokens {
            *recount.entry(t.form.as_str()).or_default() += 1;
        }
    }
    let counts = word_counts(&corpus);
    assert_eq!(counts.len(), recount.len());
    for (w, c) in &recount {
        assert_eq!(counts[*w], *c);
    }

    let v = build_vocab(&corpus, 3).unwrap();
    for (w, c) in &recount {
        assert_eq!(v.words.contains(w), *c >= 3, "{w}");
    }
    let ordered: Vec<usize> = v.words.symbols().iter().map(|w| recount[w.as_str()]).collect();
    assert!(ordered.windows(2).all(|p| p[0] >= p[1]));
}

#[test]
fn full_model_gradient_within_round_off() {
    // Supporting check with an absolute allowance for finite-difference
    // round-off; the strict relative criterion lives in the acceptance suite.
    let (sentences, mut model) = common::warmed_up_model(20);
    let net = model.net.clone();
    for s in &sentences {
        let (_, grads) = model.loss_and_gradient(s, &mut Dropout::Off).unwrap();
        let eval = |p: &ParamStore<f64>| {
            let mut g = Graph::new(p);
            let l = net.sentence_loss(&mut g, s, &mut Dropout::Off).unwrap();
            g.value(l).item()
        };
        let ids: Vec<_> = model.params.ids().collect();
        let eps = 1e-5;
        for id in ids {
            for k in 0..model.params.get(id).len() {
                let original = model.params.get(id).data()[k];
                model.params.get_mut(id).data_mut()[k] = original + eps;
                let plus = eval(&model.params);
                model.params.get_mut(id).data_mut()[k] = original - eps;
                let minus = eval(&model.params);
                model.params.get_mut(id).data_mut()[k] = original;
                let numeric = (plus - minus) / (2.0 * eps);
                let analytic = grads.get(id).data()[k];
                assert!(
                    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()) + 1e-9,
                    "{}[{k}]: {analytic:e} vs {numeric:e}",
                    model.params.name(id)
                );
            }
        }
    }
}
