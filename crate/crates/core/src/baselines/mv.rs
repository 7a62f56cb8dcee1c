use crate::data::VoteVector;

/// Fraction of LFs voting positive. Abstains add nothing.
pub fn mv_score(votes: &VoteVector) -> f64 {
    votes.count_ones() as f64 / votes.len() as f64
}
