use std::collections::HashMap;

use crate::conllx::{Relation, Sentence};
use crate::model::ModelError;

pub const PAD: usize = 0;
pub const UNK: usize = 1;

pub(crate) const PAD_SYMBOL: &str = "<pad>";
pub(crate) const UNK_SYMBOL: &str = "<unk>";

/// Symbol table with PAD at 0 and UNK at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbols {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Symbols {
    /// Table over `symbols`, which must not contain the reserved entries.
    pub fn new(symbols: impl IntoIterator<Item = String>) -> Result<Self, ModelError> {
        let mut table = Symbols {
            items: vec![PAD_SYMBOL.to_owned(), UNK_SYMBOL.to_owned()],
            index: HashMap::new(),
        };
        table.index.insert(PAD_SYMBOL.to_owned(), PAD);
        table.index.insert(UNK_SYMBOL.to_owned(), UNK);
        for s in symbols {
            if table.index.contains_key(&s) {
                return Err(ModelError::DuplicateSymbol(s));
            }
            table.index.insert(s.clone(), table.items.len());
            table.items.push(s);
        }
        Ok(table)
    }

    /// Index of a symbol; unknown symbols map to UNK.
    pub fn get(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Symbols other than PAD and UNK, in index order.
    pub fn symbols(&self) -> &[String] {
        &self.items[2..]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    pub words: Symbols,
    pub chars: Symbols,
    /// Present when the training data carries POS tags.
    pub pos: Option<Symbols>,
}

impl Vocab {
    /// Label index of a relation; the label set is fixed.
    pub fn relation_index(&self, rel: Relation) -> usize {
        rel.index()
    }

    pub fn relations(&self) -> &'static [Relation; Relation::COUNT] {
        &Relation::ALL
    }

    pub fn word_id(&self, form: &str) -> usize {
        self.words.get(form)
    }

    pub fn char_ids(&self, form: &str) -> Vec<usize> {
        let mut buf = [0u8; 4];
        form.chars().map(|c| self.chars.get(c.encode_utf8(&mut buf))).collect()
    }
}

fn is_reserved(symbol: &str) -> bool {
    symbol == PAD_SYMBOL || symbol == UNK_SYMBOL
}

/// Frequency of every word form.
pub fn word_counts(treebank: &[Sentence]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for form in treebank.iter().flat_map(Sentence::forms) {
        *counts.entry(form.to_owned()).or_insert(0) += 1;
    }
    counts
}

/// Words seen at least `min_freq` times, ordered by descending frequency
/// and then lexicographically; every observed character; every observed
/// POS tag.
pub fn build_vocab(treebank: &[Sentence], min_freq: usize) -> Result<Vocab, ModelError> {
    if treebank.iter().all(Sentence::is_empty) {
        return Err(ModelError::EmptyTreebank);
    }
    if min_freq == 0 {
        return Err(ModelError::InvalidConfig("min_freq must be positive".into()));
    }

    let mut words: Vec<(String, usize)> = word_counts(treebank)
        .into_iter()
        .filter(|(w, c)| *c >= min_freq && !is_reserved(w))
        .collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut chars: Vec<String> = treebank
        .iter()
        .flat_map(Sentence::forms)
        .flat_map(str::chars)
        .map(String::from)
        .collect();
    chars.sort();
    chars.dedup();

    let mut tags: Vec<String> = treebank
        .iter()
        .flat_map(|s| s.tokens.iter())
        .filter_map(|t| t.pos.clone())
        .filter(|t| !is_reserved(t))
        .collect();
    tags.sort();
    tags.dedup();

    Ok(Vocab {
        words: Symbols::new(words.into_iter().map(|(w, _)| w))?,
        chars: Symbols::new(chars)?,
        pos: if tags.is_empty() {
            None
        } else {
            Some(Symbols::new(tags)?)
        },
    })
}
