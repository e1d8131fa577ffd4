use rand::Rng;

use crate::model::{PAD, UNK};

/// Replaces each id by UNK with probability `rate`. PAD is never replaced.
pub fn apply_token_dropout<R: Rng + ?Sized>(ids: &[usize], rate: f64, rng: &mut R) -> Vec<usize> {
    assert!((0.0..1.0).contains(&rate), "dropout rate {rate} outside [0, 1)");
    if rate == 0.0 {
        return ids.to_vec();
    }
    ids.iter()
        .map(|&id| if id != PAD && rng.gen_bool(rate) { UNK } else { id })
        .collect()
}
