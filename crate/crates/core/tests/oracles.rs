//! Independent cross-checks: brute-force censuses, the elimination oracle
//! against the closed-form choice, and enumeration counts rebuilt from
//! oracle choices.

use std::collections::BTreeMap;

use itertools::Itertools;
use ospgr_core::analysis::{enumerate_tau_bounded, TauBoundedEnumeration};
use ospgr_core::perm::{bounded_inversion_permutations, identity};
use ospgr_core::{elimination_oracle, rdm_r_choice, utility_matrix, CanonicalProfile};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    (1..=n).permutations(n).collect()
}

/// Adjacent swaps performed by bubble sort.
fn bubble_swaps(seq: &[usize]) -> usize {
    let mut v = seq.to_vec();
    let mut swaps = 0;
    for pass in 0..v.len() {
        for k in 0..v.len().saturating_sub(1 + pass) {
            if v[k] > v[k + 1] {
                v.swap(k, k + 1);
                swaps += 1;
            }
        }
    }
    swaps
}

fn closed_form(player: usize, row: &[usize]) -> usize {
    let n = row.len();
    let mut rows = vec![identity(n); n];
    rows[player] = row.to_vec();
    let u = utility_matrix(&CanonicalProfile::new(rows).unwrap());
    rdm_r_choice(player, &u).unwrap()
}

fn oracle(player: usize, row: &[usize]) -> usize {
    let own = BTreeMap::from([(player, row.to_vec())]);
    elimination_oracle(&own, row.len()).unwrap().choice_of(player)
}

#[test]
fn inversion_census_matches_brute_force() {
    for n in 1..=6 {
        let perms = all_perms(n);
        for bound in 0..=n * (n - 1) / 2 {
            let brute = perms.iter().filter(|p| bubble_swaps(p) <= bound).count();
            let generated = bounded_inversion_permutations(n, bound);
            assert_eq!(generated.len(), brute, "n={n} bound={bound}");
            assert!(generated.iter().all(|p| bubble_swaps(p) <= bound));
        }
    }
    let census: Vec<usize> = (0..3).map(|b| bounded_inversion_permutations(5, b).len()).collect();
    assert_eq!(census, vec![1, 5, 14]);
}

#[test]
fn kendall_matches_bubble_sort() {
    for n in 1..=6 {
        for p in all_perms(n) {
            assert_eq!(ospgr_core::kendall_tau(&p).unwrap(), bubble_swaps(&p));
        }
    }
}

#[test]
fn closed_form_equals_oracle_exhaustive_small_n() {
    for n in 2..=4 {
        for player in 0..n {
            for row in all_perms(n) {
                assert_eq!(
                    closed_form(player, &row),
                    oracle(player, &row),
                    "n={n} player={player} row={row:?}"
                );
            }
        }
    }
}

#[test]
fn closed_form_equals_oracle_random_n5() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x05_9e_12);
    let mut row = identity(5);
    for trial in 0..10_000 {
        row.shuffle(&mut rng);
        let player = trial % 5;
        assert_eq!(closed_form(player, &row), oracle(player, &row), "row={row:?}");
    }
}

#[test]
fn oracle_with_all_players_deviating() {
    // every provided row is used for its own player only
    for rows in all_perms(3).into_iter().combinations_with_replacement(3) {
        let own: BTreeMap<usize, Vec<usize>> = rows.iter().cloned().enumerate().collect();
        let profile = elimination_oracle(&own, 3).unwrap();
        for (player, row) in rows.iter().enumerate() {
            assert_eq!(profile.choice_of(player), closed_form(player, row));
        }
    }
}

/// Chosen counts rebuilt from oracle choices over the full profile product.
fn oracle_counts(n: usize, bound: usize) -> Vec<u64> {
    let rows: Vec<Vec<usize>> = all_perms(n).into_iter().filter(|p| bubble_swaps(p) <= bound).collect();
    let picks: Vec<Vec<usize>> = (0..n)
        .map(|player| rows.iter().map(|r| oracle(player, r)).collect())
        .collect();
    let mut counts = vec![0u64; n];
    for profile in (0..n).map(|_| 0..rows.len()).multi_cartesian_product() {
        for (player, &r) in profile.iter().enumerate() {
            counts[picks[player][r]] += 1;
        }
    }
    counts
}

// Frozen from `oracle_counts(5, b)`.
const N5_BOUND1_COUNTS: [u64; 5] = [2500, 3125, 3125, 3125, 3750];
const N5_BOUND2_COUNTS: [u64; 5] = [345_744, 499_408, 537_824, 576_240, 729_904];

#[test]
fn enumeration_matches_oracle_counts() {
    for n in 2..=4 {
        for bound in 0..=n * (n - 1) / 2 {
            assert_eq!(
                enumerate_tau_bounded(n, bound).unwrap().counts,
                oracle_counts(n, bound),
                "n={n} bound={bound}"
            );
        }
    }
    assert_eq!(oracle_counts(5, 1), N5_BOUND1_COUNTS);
    assert_eq!(enumerate_tau_bounded(5, 1).unwrap().counts, N5_BOUND1_COUNTS);
}

#[test]
fn enumeration_n5_bound2_matches_oracle() {
    assert_eq!(oracle_counts(5, 2), N5_BOUND2_COUNTS);
    let report = enumerate_tau_bounded(5, 2).unwrap();
    assert_eq!(report.profiles, 537_824);
    assert_eq!(report.counts, N5_BOUND2_COUNTS);
}

#[test]
fn enumeration_profile_counts() {
    for (bound, expected) in [(0, 1), (1, 3125), (2, 537_824)] {
        assert_eq!(TauBoundedEnumeration::new(5, bound).unwrap().profile_count(), expected);
    }
}
