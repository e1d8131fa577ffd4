use std::collections::BTreeMap;
use std::fmt;

use crate::conllx::{Relation, Sentence};
use crate::decoder::check_projective_tree;

#[derive(Clone, Debug, PartialEq)]
pub struct TreebankStats {
    pub sentence_count: usize,
    pub token_count: usize,
    /// Indexed by [`Relation::index`].
    pub relation_histogram: [usize; Relation::COUNT],
    /// Share of sentences whose gold tree is projective; 1.0 when empty.
    pub projective_fraction: f64,
    /// Sentence length to number of sentences.
    pub length_histogram: BTreeMap<usize, usize>,
}

pub fn treebank_stats(sentences: &[Sentence]) -> TreebankStats {
    let mut relation_histogram = [0; Relation::COUNT];
    let mut length_histogram = BTreeMap::new();
    let mut projective = 0usize;
    let mut token_count = 0usize;

    for s in sentences {
        token_count += s.len();
        *length_histogram.entry(s.len()).or_insert(0) += 1;
        for t in &s.tokens {
            relation_histogram[t.rel.index()] += 1;
        }
        if check_projective_tree(&s.heads()) {
            projective += 1;
        }
    }

    let projective_fraction = if sentences.is_empty() {
        1.0
    } else {
        projective as f64 / sentences.len() as f64
    };

    TreebankStats {
        sentence_count: sentences.len(),
        token_count,
        relation_histogram,
        projective_fraction,
        length_histogram,
    }
}

impl fmt::Display for TreebankStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sentences\t{}", self.sentence_count)?;
        writeln!(f, "tokens\t{}", self.token_count)?;
        let mean = if self.sentence_count == 0 {
            0.0
        } else {
            self.token_count as f64 / self.sentence_count as f64
        };
        writeln!(f, "mean_length\t{mean:.2}")?;
        writeln!(f, "projective_fraction\t{:.4}", self.projective_fraction)?;
        writeln!(f, "relations:")?;
        for r in Relation::ALL {
            writeln!(f, "  {}\t{}", r, self.relation_histogram[r.index()])?;
        }
        writeln!(f, "lengths:")?;
        for (len, count) in &self.length_histogram {
            writeln!(f, "  {len}\t{count}")?;
        }
        Ok(())
    }
}
