//! CoNLL-X treebanks: reading, writing, validation and corpus statistics.
//!
//! Only the ID, FORM, POSTAG, HEAD and DEPREL columns carry information.
//! [`write_conllx`] writes the remaining columns as `_`; [`reannotate`]
//! keeps them from the source text.

mod relation;
mod stats;
mod validate;

pub use relation::{Relation, UnknownRelation};
pub use stats::{treebank_stats, TreebankStats};
pub use validate::{validate, Rule, ValidationReport, Violation};

use std::fmt::Write as _;

use thiserror::Error;

/// A word with its attachment. `head` is 0 for the pseudo-root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub pos: Option<String>,
    pub head: usize,
    pub rel: Relation,
}

/// Tokens in sentence order; token `i` (0-based) has id `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    /// Builds a sentence from parallel form/head/relation lists.
    pub fn from_parts(forms: &[&str], heads: &[usize], rels: &[Relation]) -> Self {
        assert!(forms.len() == heads.len() && heads.len() == rels.len());
        let tokens = forms
            .iter()
            .zip(heads)
            .zip(rels)
            .enumerate()
            .map(|(i, ((form, &head), &rel))| Token {
                id: i + 1,
                form: (*form).to_owned(),
                pos: None,
                head,
                rel,
            })
            .collect();
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    pub fn rels(&self) -> Vec<Relation> {
        self.tokens.iter().map(|t| t.rel).collect()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected 10 tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("{column} is not a non-negative integer: {value:?}")]
    NotAnInteger { column: &'static str, value: String },
    #[error("expected token id {expected}, found {found}")]
    IdSequence { expected: usize, found: usize },
    #[error("empty form or form containing whitespace: {0:?}")]
    InvalidForm(String),
    #[error(transparent)]
    UnknownRelation(#[from] UnknownRelation),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based line number in the input.
    pub line: usize,
    pub kind: ParseErrorKind,
}

/// How to treat HEAD/DEPREL columns holding `_`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Annotation {
    /// Both columns must hold values.
    #[default]
    Required,
    /// `_` placeholders are accepted and read as head 0 / HED, to be replaced
    /// by a parser. Only meant for unparsed input.
    Optional,
}

/// Reads a treebank. Tree well-formedness is not checked here; see
/// [`validate`].
pub fn parse_conllx(text: &str) -> Result<Vec<Sentence>, ParseError> {
    parse_conllx_with(text, Annotation::Required)
}

pub fn parse_conllx_with(text: &str, annotation: Annotation) -> Result<Vec<Sentence>, ParseError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                sentences.push(Sentence::new(std::mem::take(&mut tokens)));
            }
            continue;
        }
        let err = |kind| ParseError { line: line_no, kind };

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(ParseErrorKind::ColumnCount(cols.len())));
        }
        let id = parse_index("ID", cols[0]).map_err(err)?;
        if id != tokens.len() + 1 {
            return Err(err(ParseErrorKind::IdSequence {
                expected: tokens.len() + 1,
                found: id,
            }));
        }
        let form = cols[1];
        if form.is_empty() || form.chars().any(char::is_whitespace) {
            return Err(err(ParseErrorKind::InvalidForm(form.to_owned())));
        }
        let pos = (cols[4] != "_").then(|| cols[4].to_owned());
        let (head, rel) = if annotation == Annotation::Optional && cols[6] == "_" && cols[7] == "_" {
            (0, Relation::Hed)
        } else {
            let head = parse_index("HEAD", cols[6]).map_err(err)?;
            let rel = cols[7]
                .parse::<Relation>()
                .map_err(|e| err(ParseErrorKind::UnknownRelation(e)))?;
            (head, rel)
        };
        tokens.push(Token {
            id,
            form: form.to_owned(),
            pos,
            head,
            rel,
        });
    }
    if !tokens.is_empty() {
        sentences.push(Sentence::new(tokens));
    }
    Ok(sentences)
}

fn parse_index(column: &'static str, value: &str) -> Result<usize, ParseErrorKind> {
    // `usize::from_str` accepts a leading '+', which normalized output never has.
    if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseErrorKind::NotAnInteger {
            column,
            value: value.to_owned(),
        });
    }
    value.parse().map_err(|_| ParseErrorKind::NotAnInteger {
        column,
        value: value.to_owned(),
    })
}

/// Normalized output: 10 columns, `_` fillers, LF endings and one blank
/// line after every sentence.
pub fn write_conllx(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for t in &sentence.tokens {
            let pos = t.pos.as_deref().unwrap_or("_");
            let _ = writeln!(
                out,
                "{}\t{}\t_\t_\t{}\t_\t{}\t{}\t_\t_",
                t.id, t.form, pos, t.head, t.rel
            );
        }
        out.push('\n');
    }
    out
}

/// Copies `original` with HEAD and DEPREL taken from `annotated`, leaving
/// every other column as it was. Line endings become LF and each sentence
/// is followed by exactly one blank line. `original` must be the text that
/// `annotated` was read from; token lines are matched up in order.
pub fn reannotate(original: &str, annotated: &[Sentence]) -> Option<String> {
    let mut tokens = annotated
        .iter()
        .flat_map(|s| s.tokens.iter().map(move |t| (t, t.id == s.len())));
    let mut out = String::with_capacity(original.len() + annotated.len());
    for raw in original.split('\n') {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (token, last) = tokens.next()?;
        let mut cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 || cols[1] != token.form {
            return None;
        }
        let head = token.head.to_string();
        cols[6] = &head;
        cols[7] = token.rel.as_str();
        out.push_str(&cols.join("\t"));
        out.push('\n');
        if last {
            out.push('\n');
        }
    }
    tokens.next().is_none().then_some(out)
}
