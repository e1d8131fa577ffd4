//! Attachment scores: UAS is the share of words with the correct head, LAS
//! the share with the correct head and relation. Both are micro-averaged
//! over tokens.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::conllx::{Relation, Sentence, Token};

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{P}+$").expect("valid regex"));

/// True if every character is in a Unicode punctuation category.
pub fn is_punctuation(form: &str) -> bool {
    PUNCTUATION.is_match(form)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub total: usize,
    pub head_correct: usize,
    pub both_correct: usize,
}

impl Counts {
    fn add(&mut self, head_ok: bool, label_ok: bool) {
        self.total += 1;
        self.head_correct += usize::from(head_ok);
        self.both_correct += usize::from(head_ok && label_ok);
    }

    pub fn uas(&self) -> f64 {
        ratio(self.head_correct, self.total)
    }

    pub fn las(&self) -> f64 {
        ratio(self.both_correct, self.total)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub uas: f64,
    pub las: f64,
    pub token_count: usize,
    pub overall: Counts,
    /// Keyed by gold relation, indexed by [`Relation::index`].
    pub per_relation: [Counts; Relation::COUNT],
    /// Keyed by the first length of a bucket of ten (1, 11, 21, ...).
    pub per_length: BTreeMap<usize, Counts>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} sentences, prediction has {pred}")]
    SentenceCount { gold: usize, pred: usize },
    #[error("sentence {sentence}: gold has {gold} tokens, prediction has {pred}")]
    Length { sentence: usize, gold: usize, pred: usize },
    #[error("sentence {sentence} token {token}: gold form {gold:?} differs from predicted {pred:?}")]
    Form {
        sentence: usize,
        token: usize,
        gold: String,
        pred: String,
    },
}

fn excluded(t: &Token) -> bool {
    t.rel == Relation::Mt && is_punctuation(&t.form)
}

/// Compares aligned corpora. With `exclude_mt_punct`, gold tokens attached
/// by MT whose form is pure punctuation are left out entirely. Sentence
/// indices in errors are 1-based.
pub fn attachment_scores(
    gold: &[Sentence],
    pred: &[Sentence],
    exclude_mt_punct: bool,
) -> Result<EvalResult, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut overall = Counts::default();
    let mut per_relation = [Counts::default(); Relation::COUNT];
    let mut per_length: BTreeMap<usize, Counts> = BTreeMap::new();

    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::Length {
                sentence: i + 1,
                gold: g.len(),
                pred: p.len(),
            });
        }
        let bucket = (g.len().saturating_sub(1) / 10) * 10 + 1;
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            if gt.form != pt.form {
                return Err(EvalError::Form {
                    sentence: i + 1,
                    token: gt.id,
                    gold: gt.form.clone(),
                    pred: pt.form.clone(),
                });
            }
            if exclude_mt_punct && excluded(gt) {
                continue;
            }
            let head_ok = gt.head == pt.head;
            let label_ok = gt.rel == pt.rel;
            overall.add(head_ok, label_ok);
            per_relation[gt.rel.index()].add(head_ok, label_ok);
            per_length.entry(bucket).or_default().add(head_ok, label_ok);
        }
    }

    Ok(EvalResult {
        uas: overall.uas(),
        las: overall.las(),
        token_count: overall.total,
        overall,
        per_relation,
        per_length,
    })
}

impl EvalResult {
    /// Machine-readable summary: `uas=`, `las=`, `tokens=` lines.
    pub fn key_values(&self) -> String {
        format!(
            "uas={:.6}\nlas={:.6}\ntokens={}\n",
            self.uas, self.las, self.token_count
        )
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "UAS: {:.2}%", 100.0 * self.uas)?;
        writeln!(f, "LAS: {:.2}%", 100.0 * self.las)?;
        writeln!(f, "tokens: {}", self.token_count)?;
        writeln!(f)?;
        writeln!(f, "relation\ttotal\tUAS\tLAS")?;
        for r in Relation::ALL {
            let c = &self.per_relation[r.index()];
            if c.total > 0 {
                writeln!(f, "{r}\t{}\t{:.2}\t{:.2}", c.total, 100.0 * c.uas(), 100.0 * c.las())?;
            }
        }
        writeln!(f)?;
        writeln!(f, "length\ttotal\tUAS\tLAS")?;
        for (start, c) in &self.per_length {
            writeln!(
                f,
                "{}-{}\t{}\t{:.2}\t{:.2}",
                start,
                start + 9,
                c.total,
                100.0 * c.uas(),
                100.0 * c.las()
            )?;
        }
        writeln!(f)?;
        f.write_str(&self.key_values())
    }
}
