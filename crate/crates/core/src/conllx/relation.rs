use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Dependency relation of the 14-label annotation scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// Subject and predicate.
    Sbv,
    /// Object and predicate.
    Vob,
    /// Preposition and object.
    Pob,
    /// Adverbial modifier and head word.
    Adv,
    /// Complement and head word.
    Cmp,
    /// Attribute and head word.
    Att,
    /// Directional word and head word.
    F,
    /// Coordinate words.
    Coo,
    /// Subject-predicate phrase as object.
    Dbl,
    /// Double objects.
    Dob,
    /// Multiple predicates sharing a subject.
    Vv,
    /// Independent clauses.
    Ic,
    /// Empty (function) word and its head word.
    Mt,
    /// Sentence head, attached to the pseudo-root.
    Hed,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown dependency relation {0:?}")]
pub struct UnknownRelation(pub String);

impl Relation {
    pub const COUNT: usize = 14;

    pub const ALL: [Relation; Relation::COUNT] = [
        Relation::Sbv,
        Relation::Vob,
        Relation::Pob,
        Relation::Adv,
        Relation::Cmp,
        Relation::Att,
        Relation::F,
        Relation::Coo,
        Relation::Dbl,
        Relation::Dob,
        Relation::Vv,
        Relation::Ic,
        Relation::Mt,
        Relation::Hed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Sbv => "SBV",
            Relation::Vob => "VOB",
            Relation::Pob => "POB",
            Relation::Adv => "ADV",
            Relation::Cmp => "CMP",
            Relation::Att => "ATT",
            Relation::F => "F",
            Relation::Coo => "COO",
            Relation::Dbl => "DBL",
            Relation::Dob => "DOB",
            Relation::Vv => "VV",
            Relation::Ic => "IC",
            Relation::Mt => "MT",
            Relation::Hed => "HED",
        }
    }

    /// Position in [`Relation::ALL`], used as the label index by the scorer.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Relation> {
        Relation::ALL.get(index).copied()
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownRelation(s.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_label_set() {
        for (i, r) in Relation::ALL.iter().enumerate() {
            assert_eq!(r.index(), i);
            assert_eq!(r.as_str().parse::<Relation>(), Ok(*r));
        }
        assert!("root".parse::<Relation>().is_err());
        assert!("hed".parse::<Relation>().is_err());
        assert!("".parse::<Relation>().is_err());
    }
}
