//! Shared fixtures for integration tests.
#![allow(dead_code)]

use depparse::conllx::{Relation, Sentence, Token};
use depparse::decoder::check_projective_tree;
use depparse::model::{build_vocab, HyperParams, ParserModel};
use depparse::trainer::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random projective single-root tree over `n` tokens: every span picks a
/// head and recursively attaches the parts left and right of it.
pub fn random_projective_heads(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    fn attach(lo: usize, hi: usize, parent: usize, heads: &mut [usize], rng: &mut impl Rng) {
        if lo > hi {
            return;
        }
        let h = rng.gen_range(lo..=hi);
        heads[h - 1] = parent;
        attach(lo, h - 1, h, heads, rng);
        attach(h + 1, hi, h, heads, rng);
    }
    let mut heads = vec![0; n];
    attach(1, n, 0, &mut heads, rng);
    debug_assert!(check_projective_tree(&heads));
    heads
}

/// Valid sentence with a random projective tree, random non-HED labels
/// below the root and forms drawn from a small alphabet.
pub fn random_sentence(n: usize, rng: &mut impl Rng) -> Sentence {
    const SYLLABLES: [&str; 12] = ["ka", "to", "mi", "re", "su", "na", "他", "书", "看", "了", "，", "。"];
    let heads = random_projective_heads(n, rng);
    let tokens = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let parts = rng.gen_range(1..=3);
            let form: String = (0..parts)
                .map(|_| SYLLABLES[rng.gen_range(0..SYLLABLES.len())])
                .collect();
            let rel = if h == 0 {
                Relation::Hed
            } else {
                Relation::ALL[rng.gen_range(0..Relation::COUNT - 1)]
            };
            Token {
                id: i + 1,
                form,
                pos: rng.gen_bool(0.5).then(|| format!("P{}", rng.gen_range(0..4))),
                head: h,
                rel,
            }
        })
        .collect();
    Sentence::new(tokens)
}

/// Reduced-size model whose parameters (including the zero-initialized
/// biaffine weights) are all drawn uniformly from ±`scale`.
pub fn random_model(corpus: &[Sentence], hyper: HyperParams, seed: u64, scale: f64) -> ParserModel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = build_vocab(corpus, 1).unwrap();
    let mut model = ParserModel::new(vocab, hyper, &mut rng).unwrap();
    let ids: Vec<_> = model.params.ids().collect();
    for id in ids {
        for v in model.params.get_mut(id).data_mut() {
            *v = rng.gen_range(-scale..scale);
        }
    }
    model
}

/// Every token reaches node 0 through in-range heads, without passing
/// through itself again.
pub fn reaches_root(heads: &[usize]) -> bool {
    let n = heads.len();
    (1..=n).all(|start| {
        let mut node = start;
        for _ in 0..=n {
            if node == 0 {
                return true;
            }
            let h = heads[node - 1];
            if h > n {
                return false;
            }
            node = h;
        }
        node == 0
    })
}

/// Textbook definition: a tree with exactly one token on node 0 and no two
/// arcs crossing, where the root arc counts as an arc from position 0.
pub fn projective_by_crossing(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().enumerate().any(|(i, &h)| h > n || h == i + 1) {
        return false;
    }
    if heads.iter().filter(|&&h| h == 0).count() != 1 || !reaches_root(heads) {
        return false;
    }
    let spans: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| (h.min(i + 1), h.max(i + 1)))
        .collect();
    for &(a, b) in &spans {
        for &(c, d) in &spans {
            if a < c && c < b && b < d {
                return false;
            }
        }
    }
    true
}

/// Calls `f` on every vector in `0..base` of length `n`.
pub fn for_each_assignment(n: usize, base: usize, mut f: impl FnMut(&[usize])) {
    let mut v = vec![0; n];
    loop {
        f(&v);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            v[i] += 1;
            if v[i] < base {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

pub fn random_corpus(count: usize, max_len: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_len);
            random_sentence(n, &mut rng)
        })
        .collect()
}

/// The three gradient-check sentences (lengths 1, 3, 5) and a reduced
/// model at a realistic point: default initialization followed by
/// `steps` passes of dropout-free Adam over those sentences. At pure
/// initialization the zero biaffine weights make every other gradient
/// vanish, which would make a gradient check uninformative.
pub fn warmed_up_model(steps: usize) -> (Vec<Sentence>, ParserModel<f64>) {
    use depparse::model::Dropout;
    use depparse::trainer::{adam_step, AdamState};

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sentences: Vec<Sentence> = [1, 3, 5].iter().map(|&n| random_sentence(n, &mut rng)).collect();
    let vocab = build_vocab(&sentences, 1).unwrap();
    let mut init = ChaCha8Rng::seed_from_u64(1);
    let mut model = ParserModel::new(vocab, HyperParams::reduced(), &mut init).unwrap();
    let mut adam = AdamState::new(&model.params);
    for _ in 0..steps {
        for s in &sentences {
            let (_, g) = model.loss_and_gradient(s, &mut Dropout::Off).unwrap();
            adam_step(&mut model.params, &g, &mut adam, 2e-3).unwrap();
        }
    }
    (sentences, model)
}

/// 32 sentences of 2 to 8 tokens in which every relation occurs.
pub fn overfit_treebank() -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut corpus: Vec<Sentence> = (0..32)
        .map(|_| random_sentence(rng.gen_range(2..=8), &mut rng))
        .collect();
    // Make sure each non-root label appears by relabeling one dependent per
    // label, walking through the corpus.
    let mut slots = corpus
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.tokens.iter().filter(|t| t.head != 0).map(move |t| (i, t.id - 1)))
        .collect::<Vec<_>>()
        .into_iter();
    for rel in Relation::ALL.iter().filter(|&&r| r != Relation::Hed) {
        let (i, k) = slots.next().expect("enough dependents");
        corpus[i].tokens[k].rel = *rel;
    }
    corpus
}

/// Memorization settings for [`overfit_treebank`]: reduced sizes, no
/// dropout, one sentence per step and the default learning rate.
pub fn overfit_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        hyper: HyperParams::reduced().without_dropout(),
        epochs,
        batch_size: 1,
        min_freq: 1,
        seed: 1,
        patience: epochs,
        ..TrainConfig::default()
    }
}
