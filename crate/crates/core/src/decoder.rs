//! Tree decoding from biaffine scores.
//!
//! [`decode`] first takes the per-dependent argmax head. If that already is a
//! single-root projective tree it is returned as is, otherwise the
//! first-order Eisner algorithm finds the best projective tree. Labels are
//! then chosen per arc.

use thiserror::Error;

use crate::conllx::Relation;
use crate::model::ScorePair;
use crate::numerics::Tensor;
use crate::scalar::Scalar;

/// `heads[d - 1]` is the head of token `d`; 0 is the pseudo-root.
pub type HeadArray = Vec<usize>;

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult<T> {
    pub heads: HeadArray,
    pub rels: Vec<Relation>,
    pub used_fast_path: bool,
    /// Sum of the arc scores of `heads`.
    pub score: T,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("cannot decode an empty sentence")]
    Empty,
    #[error("arc scores must be square, got shape {0:?}")]
    BadShape(Vec<usize>),
    #[error("arc scores contain NaN or +inf")]
    NonFinite,
    #[error("no tree has a finite score; every root attachment is masked")]
    NoFeasibleTree,
}

fn sentence_len<T: Scalar>(arc: &Tensor<T>) -> Result<usize, DecodeError> {
    let shape = arc.shape();
    if shape.len() != 2 || shape[0] != shape[1] {
        return Err(DecodeError::BadShape(shape.to_vec()));
    }
    match shape[0] {
        0 | 1 => Err(DecodeError::Empty),
        k => Ok(k - 1),
    }
}

/// Best head per dependent ignoring tree constraints; ties go to the
/// smaller head.
pub fn greedy_heads<T: Scalar>(arc: &Tensor<T>) -> HeadArray {
    let n = arc.rows().saturating_sub(1);
    (1..=n)
        .map(|d| {
            let mut best = 0;
            let mut best_score = arc.at(d, 0);
            for h in 1..=n {
                if h != d && arc.at(d, h) > best_score {
                    best = h;
                    best_score = arc.at(d, h);
                }
            }
            best
        })
        .collect()
}

/// True iff `heads` has exactly one root dependent, forms a tree, and an
/// in-order walk from node 0 (left dependents, node, right dependents)
/// visits positions `0..=n` in order.
pub fn check_projective_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if n == 0 || heads.iter().any(|&h| h > n) {
        return false;
    }
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }

    // Children in ascending order, since tokens are visited in order.
    let mut children = vec![Vec::new(); n + 1];
    for (i, &h) in heads.iter().enumerate() {
        children[h].push(i + 1);
    }

    // Every node reachable from 0 means no cycles.
    let mut seen = vec![false; n + 1];
    let mut stack = vec![0];
    seen[0] = true;
    let mut visited = 1;
    while let Some(node) = stack.pop() {
        for &c in &children[node] {
            if !seen[c] {
                seen[c] = true;
                visited += 1;
                stack.push(c);
            }
        }
    }
    if visited != n + 1 {
        return false;
    }

    let mut next = 0;
    in_order(0, &children, &mut next) && next == n + 1
}

fn in_order(node: usize, children: &[Vec<usize>], next: &mut usize) -> bool {
    let split = children[node].partition_point(|&c| c < node);
    let (left, right) = children[node].split_at(split);
    for &c in left {
        if !in_order(c, children, next) {
            return false;
        }
    }
    if *next != node {
        return false;
    }
    *next += 1;
    right.iter().all(|&c| in_order(c, children, next))
}

const RIGHT: usize = 0;
const LEFT: usize = 1;

/// Spans over tokens `1..=n`; `[s][t][dir]` with `dir` naming where the
/// head sits (RIGHT: head `s`, LEFT: head `t`).
struct Chart<T> {
    n: usize,
    complete: Vec<T>,
    incomplete: Vec<T>,
    complete_split: Vec<usize>,
    incomplete_split: Vec<usize>,
}

impl<T: Scalar> Chart<T> {
    fn idx(&self, s: usize, t: usize, dir: usize) -> usize {
        ((s * (self.n + 1)) + t) * 2 + dir
    }
}

/// Highest-scoring projective tree in which node 0 has exactly one
/// dependent, with its [`tree_score`]. `arc[d][h]` scores head `h` for dependent `d`; `-inf` masks an
/// arc. Ties are resolved toward the earliest split point and, for the
/// root attachment, the leftmost word.
pub fn eisner<T: Scalar>(arc: &Tensor<T>) -> Result<(HeadArray, T), DecodeError> {
    let n = sentence_len(arc)?;
    if arc.data().iter().any(|&v| v.is_nan() || v == T::infinity()) {
        return Err(DecodeError::NonFinite);
    }

    let size = (n + 1) * (n + 1) * 2;
    let mut chart = Chart {
        n,
        complete: vec![T::neg_infinity(); size],
        incomplete: vec![T::neg_infinity(); size],
        complete_split: vec![0; size],
        incomplete_split: vec![0; size],
    };
    for s in 1..=n {
        for dir in [RIGHT, LEFT] {
            let i = chart.idx(s, s, dir);
            chart.complete[i] = T::zero();
        }
    }

    for width in 1..n {
        for s in 1..=(n - width) {
            let t = s + width;

            // Incomplete spans: an arc between s and t over two complete halves.
            let mut best = T::neg_infinity();
            let mut best_r = s;
            for r in s..t {
                let v = chart.complete[chart.idx(s, r, RIGHT)] + chart.complete[chart.idx(r + 1, t, LEFT)];
                if v > best {
                    best = v;
                    best_r = r;
                }
            }
            let (il, ir) = (chart.idx(s, t, LEFT), chart.idx(s, t, RIGHT));
            chart.incomplete[il] = best + arc.at(s, t);
            chart.incomplete[ir] = best + arc.at(t, s);
            chart.incomplete_split[il] = best_r;
            chart.incomplete_split[ir] = best_r;

            // Complete span headed by t.
            let mut best = T::neg_infinity();
            let mut best_r = s;
            for r in s..t {
                let v = chart.complete[chart.idx(s, r, LEFT)] + chart.incomplete[chart.idx(r, t, LEFT)];
                if v > best {
                    best = v;
                    best_r = r;
                }
            }
            let cl = chart.idx(s, t, LEFT);
            chart.complete[cl] = best;
            chart.complete_split[cl] = best_r;

            // Complete span headed by s.
            let mut best = T::neg_infinity();
            let mut best_r = s + 1;
            for r in (s + 1)..=t {
                let v = chart.incomplete[chart.idx(s, r, RIGHT)] + chart.complete[chart.idx(r, t, RIGHT)];
                if v > best {
                    best = v;
                    best_r = r;
                }
            }
            let cr = chart.idx(s, t, RIGHT);
            chart.complete[cr] = best;
            chart.complete_split[cr] = best_r;
        }
    }

    let mut best = T::neg_infinity();
    let mut root = 0;
    for r in 1..=n {
        let v = arc.at(r, 0) + chart.complete[chart.idx(1, r, LEFT)] + chart.complete[chart.idx(r, n, RIGHT)];
        if v > best {
            best = v;
            root = r;
        }
    }
    if root == 0 || best == T::neg_infinity() {
        return Err(DecodeError::NoFeasibleTree);
    }

    let mut heads = vec![0; n];
    heads[root - 1] = 0;
    let mut todo = vec![(1, root, LEFT, true), (root, n, RIGHT, true)];
    while let Some((s, t, dir, complete)) = todo.pop() {
        if s == t {
            continue;
        }
        let i = chart.idx(s, t, dir);
        if complete {
            let r = chart.complete_split[i];
            if dir == LEFT {
                todo.push((s, r, LEFT, true));
                todo.push((r, t, LEFT, false));
            } else {
                todo.push((s, r, RIGHT, false));
                todo.push((r, t, RIGHT, true));
            }
        } else {
            let r = chart.incomplete_split[i];
            if dir == LEFT {
                heads[s - 1] = t;
            } else {
                heads[t - 1] = s;
            }
            todo.push((s, r, RIGHT, true));
            todo.push((r + 1, t, LEFT, true));
        }
    }

    // Report the plain arc sum so every path computes the score the same way.
    let score = tree_score(arc, &heads);
    Ok((heads, score))
}

/// Sum of `arc[d][heads[d - 1]]`.
pub fn tree_score<T: Scalar>(arc: &Tensor<T>, heads: &[usize]) -> T {
    heads.iter().enumerate().map(|(i, &h)| arc.at(i + 1, h)).sum()
}

/// Best label per arc of a tree. HED is reserved for the root arc and is
/// the only label allowed there. Ties go to the earlier label.
pub fn assign_labels<T: Scalar>(rel: &Tensor<T>, heads: &[usize]) -> Vec<Relation> {
    heads
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            if h == 0 {
                return Relation::Hed;
            }
            let mut best = None;
            let mut best_score = T::neg_infinity();
            for r in Relation::ALL {
                if r == Relation::Hed {
                    continue;
                }
                let v = rel.at3(i + 1, h, r.index());
                if best.is_none() || v > best_score {
                    best = Some(r);
                    best_score = v;
                }
            }
            best.expect("13 candidate labels")
        })
        .collect()
}

pub fn decode<T: Scalar>(scores: &ScorePair<T>) -> Result<DecodeResult<T>, DecodeError> {
    sentence_len(&scores.arc)?;
    let greedy = greedy_heads(&scores.arc);
    let (heads, used_fast_path) = if check_projective_tree(&greedy) {
        (greedy, true)
    } else {
        (eisner(&scores.arc)?.0, false)
    };
    let rels = assign_labels(&scores.rel, &heads);
    let score = tree_score(&scores.arc, &heads);
    Ok(DecodeResult {
        heads,
        rels,
        used_fast_path,
        score,
    })
}
