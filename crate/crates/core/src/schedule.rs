//! Priority rotation across rounds.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{check_n, PriorityAssignment};
use crate::perm;

/// Player × round table of priorities. Every player holds every priority
/// exactly once and every round hands out every priority exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrioritySchedule {
    table: Vec<Vec<usize>>,
}

impl PrioritySchedule {
    pub fn from_rows(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        check_n(n)?;
        for (player, row) in table.iter().enumerate() {
            if row.len() != n || !perm::is_permutation(row) {
                return Err(Error::ScheduleViolation { player });
            }
        }
        for round in 0..n {
            let column: Vec<usize> = table.iter().map(|row| row[round]).collect();
            if !perm::is_permutation(&column) {
                return Err(Error::NotPermutation("priority"));
            }
        }
        Ok(Self { table })
    }

    /// The unshuffled cyclic square, `priority(p, r) = (p + r) mod n + 1`.
    pub fn cyclic(n: usize) -> Result<Self> {
        check_n(n)?;
        let table = (0..n).map(|p| (0..n).map(|r| (p + r) % n + 1).collect()).collect();
        Ok(Self { table })
    }

    pub fn n(&self) -> usize {
        self.table.len()
    }

    pub fn priority(&self, player: usize, round: usize) -> usize {
        self.table[player][round]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn round(&self, round: usize) -> PriorityAssignment {
        PriorityAssignment::new(self.table.iter().map(|row| row[round]).collect())
            .expect("schedule columns are permutations")
    }

    pub fn rounds(&self) -> Vec<PriorityAssignment> {
        (0..self.n()).map(|r| self.round(r)).collect()
    }
}

/// Seeded Latin square: a cyclic square with rows and columns shuffled.
pub fn priority_schedule(n: usize, seed: u64) -> Result<PrioritySchedule> {
    let base = PrioritySchedule::cyclic(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_order: Vec<usize> = (0..n).collect();
    let mut col_order: Vec<usize> = (0..n).collect();
    row_order.shuffle(&mut rng);
    col_order.shuffle(&mut rng);
    let table = row_order
        .iter()
        .map(|&p| col_order.iter().map(|&r| base.table[p][r]).collect())
        .collect();
    Ok(PrioritySchedule { table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cyclic_two() {
        assert_eq!(PrioritySchedule::cyclic(2).unwrap().rows(), &[vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn shuffled_squares_stay_latin() {
        for n in 2..9 {
            for seed in 0..20 {
                let s = priority_schedule(n, seed).unwrap();
                assert_eq!(PrioritySchedule::from_rows(s.rows().to_vec()).unwrap(), s);
            }
        }
    }

    #[test]
    fn seeded_determinism() {
        assert_eq!(priority_schedule(5, 7).unwrap(), priority_schedule(5, 7).unwrap());
        let distinct = (0..10)
            .map(|seed| priority_schedule(5, seed).unwrap())
            .collect::<Vec<_>>();
        assert!(distinct.iter().any(|s| s != &distinct[0]));
    }

    #[test]
    fn rejects_non_latin() {
        assert!(PrioritySchedule::from_rows(vec![vec![1, 2], vec![1, 2]]).is_err());
        assert!(PrioritySchedule::from_rows(vec![vec![1, 1], vec![2, 2]]).is_err());
        assert!(priority_schedule(1, 0).is_err());
    }
}
