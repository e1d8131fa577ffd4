use std::fmt;

use crate::conllx::{Relation, Sentence};

/// Well-formedness rule checked by [`validate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    HeadOutOfRange,
    SelfLoop,
    Cycle,
    NoRoot,
    MultipleRoots,
    HedOffRoot,
    NonHedOnRoot,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::HeadOutOfRange => "head-out-of-range",
            Rule::SelfLoop => "self-loop",
            Rule::Cycle => "cycle",
            Rule::NoRoot => "no-root",
            Rule::MultipleRoots => "multiple-roots",
            Rule::HedOffRoot => "hed-off-root",
            Rule::NonHedOnRoot => "non-hed-on-root",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    /// Offending token; 0 for sentence-level problems.
    pub token: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub sentence_index: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(
                f,
                "sentence {} token {}: {}: {}",
                self.sentence_index, v.token, v.rule, v.message
            )?;
        }
        Ok(())
    }
}

/// Checks head range, self-loops, cycles, the single-root rule and the
/// placement of HED. Every problem becomes a report entry.
pub fn validate(sentence_index: usize, sentence: &Sentence) -> ValidationReport {
    let n = sentence.len();
    let heads = sentence.heads();
    let mut violations = Vec::new();
    let mut push = |rule, token, message: String| violations.push(Violation { rule, token, message });

    let mut roots = 0usize;
    for t in &sentence.tokens {
        if t.head > n {
            push(Rule::HeadOutOfRange, t.id, format!("head {} outside 0..={n}", t.head));
        } else if t.head == t.id {
            push(Rule::SelfLoop, t.id, "token is its own head".into());
        }
        if t.head == 0 {
            roots += 1;
            if roots > 1 {
                push(
                    Rule::MultipleRoots,
                    t.id,
                    format!("token {} is root number {roots}", t.id),
                );
            }
            if t.rel != Relation::Hed {
                push(
                    Rule::NonHedOnRoot,
                    t.id,
                    format!("root arc labeled {} instead of HED", t.rel),
                );
            }
        } else if t.rel == Relation::Hed {
            push(Rule::HedOffRoot, t.id, format!("HED on an arc from token {}", t.head));
        }
    }
    if roots == 0 && n > 0 {
        push(Rule::NoRoot, 0, "no token is attached to the root".into());
    }
    for token in cycle_members(&heads) {
        push(Rule::Cycle, token, "token lies on a head cycle".into());
    }

    ValidationReport {
        sentence_index,
        violations,
    }
}

/// Tokens lying on a cycle of length ≥ 2, in ascending order.
fn cycle_members(heads: &[usize]) -> Vec<usize> {
    const UNSEEN: u8 = 0;
    const ACTIVE: u8 = 1;
    const DONE: u8 = 2;

    let n = heads.len();
    let mut state = vec![UNSEEN; n + 1];
    let mut on_cycle = vec![false; n + 1];
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while cur != 0 && cur <= n && state[cur] == UNSEEN {
            state[cur] = ACTIVE;
            path.push(cur);
            cur = heads[cur - 1];
        }
        if cur != 0 && cur <= n && state[cur] == ACTIVE {
            let pos = path.iter().position(|&p| p == cur).expect("active node is on path");
            if path.len() - pos >= 2 {
                for &p in &path[pos..] {
                    on_cycle[p] = true;
                }
            }
        }
        for p in path {
            state[p] = DONE;
        }
    }
    (1..=n).filter(|&i| on_cycle[i]).collect()
}
