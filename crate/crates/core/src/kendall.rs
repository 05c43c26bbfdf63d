//! Kendall tau distance to the popularity ranking.

use crate::error::{Error, Result};
use crate::game::{PopularityRanking, PreferenceProfile};
use crate::perm;

/// Inversion number of a player's rank sequence read in popularity order.
///
/// Equals the minimum number of adjacent exchanges that sort the sequence,
/// so `0` means the player agrees with popularity exactly.
pub fn kendall_tau(sequence: &[usize]) -> Result<usize> {
    if !perm::is_permutation(sequence) {
        return Err(Error::NotPermutation("kendall tau input"));
    }
    Ok(inversions(sequence))
}

pub(crate) fn inversions(sequence: &[usize]) -> usize {
    let mut count = 0;
    for (a, &x) in sequence.iter().enumerate() {
        count += sequence[a + 1..].iter().filter(|&&y| y < x).count();
    }
    count
}

/// Distance of `player`'s preferences to the popularity ranking.
pub fn player_tau(profile: &PreferenceProfile, player: usize, popularity: &PopularityRanking) -> usize {
    inversions(&profile.popularity_ordered_row(player, popularity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn single_swap() {
        assert_eq!(kendall_tau(&[2, 1, 3]).unwrap(), 1);
    }

    #[test]
    fn identity_and_reversal() {
        for n in 1..8 {
            let id: Vec<usize> = (1..=n).collect();
            assert_eq!(kendall_tau(&id).unwrap(), 0);
            let rev: Vec<usize> = (1..=n).rev().collect();
            assert_eq!(kendall_tau(&rev).unwrap(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn rejects_non_permutation() {
        assert!(kendall_tau(&[1, 3, 3]).is_err());
    }
}
