//! Game objects and allocation mechanics.
//!
//! Players and objects are addressed by 0-based indices internally. Ranks,
//! priorities and popularity positions keep their natural 1-based values
//! (`1` = most preferred, highest priority, most popular).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::perm;

/// How Borda ties are turned into a strict popularity ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TieRule {
    /// Among tied objects the lower raw index takes the better rank.
    #[default]
    LowestRawIndexFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GameConfig {
    n: usize,
    pub tie_rule: TieRule,
}

impl GameConfig {
    pub fn new(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n,
            tie_rule: TieRule::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    Ok(())
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Private strict preferences: `rank(i, j)` is the rank player `i` gives object `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PreferenceProfile {
    ranks: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    pub fn new(ranks: Vec<Vec<usize>>) -> Result<Self> {
        let n = ranks.len();
        check_n(n)?;
        for (i, row) in ranks.iter().enumerate() {
            if row.len() != n || !perm::is_permutation(row) {
                return Err(Error::PreferenceRow { row: i });
            }
        }
        Ok(Self { ranks })
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn rank(&self, player: usize, object: usize) -> usize {
        self.ranks[player][object]
    }

    pub fn row(&self, player: usize) -> &[usize] {
        &self.ranks[player]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.ranks
    }

    /// The player's ranks read in popularity order, `(p_i1 ... p_in)` with
    /// objects relabeled by popularity rank.
    pub fn popularity_ordered_row(&self, player: usize, popularity: &PopularityRanking) -> Vec<usize> {
        popularity
            .objects_in_rank_order()
            .into_iter()
            .map(|obj| self.ranks[player][obj])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BordaScores {
    scores: Vec<usize>,
}

impl BordaScores {
    pub fn scores(&self) -> &[usize] {
        &self.scores
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }
}

/// Borda score of every object: each player gives `n - rank + 1` points.
pub fn borda_scores(profile: &PreferenceProfile) -> BordaScores {
    let n = profile.n();
    let mut scores = vec![0; n];
    for row in profile.rows() {
        for (score, &rank) in scores.iter_mut().zip(row) {
            *score += n + 1 - rank;
        }
    }
    BordaScores { scores }
}

/// Public strict ranking of objects derived from Borda scores.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PopularityRanking {
    rank_of_object: Vec<usize>,
    tie_flags: Vec<(usize, usize)>,
}

impl PopularityRanking {
    /// Builds a ranking directly from `rank_of_object` (values `1..=n`), e.g.
    /// when reading one back from a stored log. No ties are recorded.
    pub fn from_ranks(rank_of_object: Vec<usize>) -> Result<Self> {
        check_n(rank_of_object.len())?;
        if !perm::is_permutation(&rank_of_object) {
            return Err(Error::NotPermutation("popularity"));
        }
        Ok(Self {
            rank_of_object,
            tie_flags: Vec::new(),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_ranks(perm::identity(n))
    }

    pub fn n(&self) -> usize {
        self.rank_of_object.len()
    }

    /// Popularity rank (1 = most popular) of `object`.
    pub fn rank_of(&self, object: usize) -> usize {
        self.rank_of_object[object]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank_of_object
    }

    /// Object holding popularity rank `rank` (1-based).
    pub fn object_at(&self, rank: usize) -> usize {
        self.rank_of_object
            .iter()
            .position(|&r| r == rank)
            .expect("popularity ranks form a permutation")
    }

    pub fn objects_in_rank_order(&self) -> Vec<usize> {
        perm::inverse(&self.rank_of_object)
            .into_iter()
            .map(|obj| obj - 1)
            .collect()
    }

    /// Pairs `(a, b)` with `a < b` of raw object indices whose scores tied.
    pub fn tie_flags(&self) -> &[(usize, usize)] {
        &self.tie_flags
    }

    pub fn has_ties(&self) -> bool {
        !self.tie_flags.is_empty()
    }
}

/// Ranks objects by descending score; `q_j = k` for the k-th largest score.
pub fn popularity_ranking(scores: &BordaScores, tie_rule: TieRule) -> PopularityRanking {
    let s = scores.scores();
    let n = s.len();
    let mut order: Vec<usize> = (0..n).collect();
    match tie_rule {
        // stable sort keeps lower raw indices first inside a tie
        TieRule::LowestRawIndexFirst => order.sort_by(|&a, &b| s[b].cmp(&s[a])),
    }
    let mut rank_of_object = vec![0; n];
    for (k, &obj) in order.iter().enumerate() {
        rank_of_object[obj] = k + 1;
    }
    let mut tie_flags = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if s[a] == s[b] {
                tie_flags.push((a, b));
            }
        }
    }
    PopularityRanking {
        rank_of_object,
        tie_flags,
    }
}

/// Private priorities; `priority_of(i) = 1` wins every conflict.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PriorityAssignment {
    priority_of_player: Vec<usize>,
}

impl PriorityAssignment {
    pub fn new(priority_of_player: Vec<usize>) -> Result<Self> {
        check_n(priority_of_player.len())?;
        if !perm::is_permutation(&priority_of_player) {
            return Err(Error::NotPermutation("priority"));
        }
        Ok(Self { priority_of_player })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(perm::identity(n))
    }

    pub fn n(&self) -> usize {
        self.priority_of_player.len()
    }

    pub fn priority_of(&self, player: usize) -> usize {
        self.priority_of_player[player]
    }

    pub fn priorities(&self) -> &[usize] {
        &self.priority_of_player
    }

    /// Player holding `priority` (1-based).
    pub fn player_with(&self, priority: usize) -> usize {
        self.priority_of_player
            .iter()
            .position(|&r| r == priority)
            .expect("priorities form a permutation")
    }
}

/// Preferences relabeled so row `i` is the priority-`(i+1)` player and
/// column `j` the popularity-rank-`(j+1)` object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalProfile {
    ranks: Vec<Vec<usize>>,
}

impl CanonicalProfile {
    pub fn new(ranks: Vec<Vec<usize>>) -> Result<Self> {
        // same invariants as a raw profile
        let checked = PreferenceProfile::new(ranks)?;
        Ok(Self { ranks: checked.ranks })
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn row(&self, priority_index: usize) -> &[usize] {
        &self.ranks[priority_index]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.ranks
    }
}

pub fn canonicalize(
    profile: &PreferenceProfile,
    popularity: &PopularityRanking,
    priorities: &PriorityAssignment,
) -> Result<CanonicalProfile> {
    let n = profile.n();
    check_dim(n, popularity.n())?;
    check_dim(n, priorities.n())?;
    let ranks = (1..=n)
        .map(|priority| profile.popularity_ordered_row(priorities.player_with(priority), popularity))
        .collect();
    Ok(CanonicalProfile { ranks })
}

/// Inverse of [`canonicalize`]: restores raw player and object labels.
pub fn decanonicalize(
    canonical: &CanonicalProfile,
    popularity: &PopularityRanking,
    priorities: &PriorityAssignment,
) -> Result<PreferenceProfile> {
    let n = canonical.n();
    check_dim(n, popularity.n())?;
    check_dim(n, priorities.n())?;
    let ranks = (0..n)
        .map(|player| {
            let row = canonical.row(priorities.priority_of(player) - 1);
            (0..n).map(|obj| row[popularity.rank_of(obj) - 1]).collect()
        })
        .collect();
    PreferenceProfile::new(ranks)
}

/// Result of one simultaneous round. `obtained[i] == None` means "Nothing".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoundOutcome {
    choices: Vec<usize>,
    obtained: Vec<Option<usize>>,
}

impl RoundOutcome {
    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn obtained(&self) -> &[Option<usize>] {
        &self.obtained
    }

    pub fn obtained_by(&self, player: usize) -> Option<usize> {
        self.obtained[player]
    }
}

/// Resolves simultaneous choices: each object goes to the chooser with the
/// smallest priority number, every other chooser of it gets nothing.
pub fn allocate(choices: &[usize], priorities: &PriorityAssignment) -> Result<RoundOutcome> {
    let partial: Vec<Option<usize>> = choices.iter().copied().map(Some).collect();
    let obtained = allocate_partial(&partial, priorities)?;
    Ok(RoundOutcome {
        choices: choices.to_vec(),
        obtained,
    })
}

/// Same rule as [`allocate`] with some players sitting the round out
/// (`None`); abstaining players obtain nothing.
pub fn allocate_partial(choices: &[Option<usize>], priorities: &PriorityAssignment) -> Result<Vec<Option<usize>>> {
    let n = priorities.n();
    check_dim(n, choices.len())?;
    let mut winner: Vec<Option<usize>> = vec![None; n];
    for (player, &choice) in choices.iter().enumerate() {
        let Some(obj) = choice else { continue };
        if obj >= n {
            return Err(Error::ObjectOutOfRange { object: obj, n });
        }
        let beats = match winner[obj] {
            None => true,
            Some(holder) => priorities.priority_of(player) < priorities.priority_of(holder),
        };
        if beats {
            winner[obj] = Some(player);
        }
    }
    Ok(choices
        .iter()
        .enumerate()
        .map(|(player, &choice)| choice.filter(|&obj| winner[obj] == Some(player)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    // Three players, objects A=0, B=1, C=2.
    fn worked_profile() -> PreferenceProfile {
        PreferenceProfile::new(vec![vec![1, 2, 3], vec![1, 2, 3], vec![2, 1, 3]]).unwrap()
    }

    // Player 1 first, Player 3 second, Player 2 third.
    fn worked_priorities() -> PriorityAssignment {
        PriorityAssignment::new(vec![1, 3, 2]).unwrap()
    }

    #[test]
    fn borda_worked_example() {
        let scores = borda_scores(&worked_profile());
        // A: 3+3+2, B: 2+2+3, C: 1+1+1
        assert_eq!(scores.scores(), &[8, 7, 3]);
        let pop = popularity_ranking(&scores, TieRule::LowestRawIndexFirst);
        assert_eq!(pop.ranks(), &[1, 2, 3]);
        assert!(!pop.has_ties());
    }

    #[test]
    fn borda_two_players_agreeing() {
        let p = PreferenceProfile::new(vec![vec![1, 2], vec![1, 2]]).unwrap();
        assert_eq!(borda_scores(&p).scores(), &[4, 2]);
    }

    #[test]
    fn borda_unanimous() {
        let row = vec![3, 1, 4, 2];
        let p = PreferenceProfile::new(vec![row.clone(); 4]).unwrap();
        let s = borda_scores(&p);
        for (obj, &rank) in row.iter().enumerate() {
            assert_eq!(s.scores()[obj], 4 * (4 + 1 - rank));
        }
    }

    #[test]
    fn malformed_row_is_named() {
        let err = PreferenceProfile::new(vec![vec![1, 2, 3], vec![1, 1, 3], vec![3, 2, 1]]).unwrap_err();
        assert_eq!(err, Error::PreferenceRow { row: 1 });
        assert_eq!(
            PreferenceProfile::new(vec![vec![1]]).unwrap_err(),
            Error::TooFewPlayers(1)
        );
    }

    #[test]
    fn tied_scores_are_flagged() {
        let p = PreferenceProfile::new(vec![vec![1, 2], vec![2, 1]]).unwrap();
        let s = borda_scores(&p);
        assert_eq!(s.scores(), &[3, 3]);
        let pop = popularity_ranking(&s, TieRule::LowestRawIndexFirst);
        assert_eq!(pop.ranks(), &[1, 2]);
        assert_eq!(pop.tie_flags(), &[(0, 1)]);
    }

    #[test]
    fn decreasing_scores_give_identity() {
        let s = BordaScores {
            scores: vec![20, 17, 15, 9, 4],
        };
        let pop = popularity_ranking(&s, TieRule::LowestRawIndexFirst);
        assert_eq!(pop.ranks(), &[1, 2, 3, 4, 5]);
        let s = BordaScores {
            scores: vec![4, 9, 15, 17, 20],
        };
        let pop = popularity_ranking(&s, TieRule::LowestRawIndexFirst);
        assert_eq!(pop.ranks(), &[5, 4, 3, 2, 1]);
        assert_eq!(pop.objects_in_rank_order(), vec![4, 3, 2, 1, 0]);
    }

    #[test]
    fn canonical_worked_example() {
        let profile = worked_profile();
        let pop = popularity_ranking(&borda_scores(&profile), TieRule::LowestRawIndexFirst);
        let canon = canonicalize(&profile, &pop, &worked_priorities()).unwrap();
        assert_eq!(canon.rows(), &[vec![1, 2, 3], vec![2, 1, 3], vec![1, 2, 3]]);
        let back = decanonicalize(&canon, &pop, &worked_priorities()).unwrap();
        assert_eq!(back, profile);
    }

    #[test]
    fn canonical_identity_and_reversal() {
        let profile = PreferenceProfile::new(vec![vec![2, 3, 1], vec![1, 3, 2], vec![3, 1, 2]]).unwrap();
        let id_pop = PopularityRanking::identity(3).unwrap();
        let id_prio = PriorityAssignment::identity(3).unwrap();
        let canon = canonicalize(&profile, &id_pop, &id_prio).unwrap();
        assert_eq!(canon.rows(), profile.rows());

        let rev = PopularityRanking::from_ranks(vec![3, 2, 1]).unwrap();
        let canon = canonicalize(&profile, &rev, &id_prio).unwrap();
        for (c, p) in canon.rows().iter().zip(profile.rows()) {
            let mut reversed = p.clone();
            reversed.reverse();
            assert_eq!(c, &reversed);
        }
    }

    #[test]
    fn canonicalize_rejects_mismatched_sizes() {
        let profile = worked_profile();
        let pop = PopularityRanking::identity(4).unwrap();
        let err = canonicalize(&profile, &pop, &worked_priorities()).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 3, found: 4 });
    }

    #[test]
    fn allocate_case_one() {
        // P1: A, P2: B, P3: B
        let out = allocate(&[0, 1, 1], &worked_priorities()).unwrap();
        assert_eq!(out.obtained(), &[Some(0), None, Some(1)]);
    }

    #[test]
    fn allocate_case_two() {
        // P1: A, P2: C, P3: A
        let out = allocate(&[0, 2, 0], &worked_priorities()).unwrap();
        assert_eq!(out.obtained(), &[Some(0), Some(2), None]);
    }

    #[test]
    fn allocate_distinct_choices() {
        let prio = PriorityAssignment::new(vec![4, 2, 1, 3]).unwrap();
        let out = allocate(&[3, 0, 2, 1], &prio).unwrap();
        assert_eq!(out.obtained(), &[Some(3), Some(0), Some(2), Some(1)]);
    }

    #[test]
    fn allocate_rejects_bad_input() {
        let prio = worked_priorities();
        assert_eq!(
            allocate(&[0, 3, 1], &prio).unwrap_err(),
            Error::ObjectOutOfRange { object: 3, n: 3 }
        );
        assert!(matches!(allocate(&[0, 1], &prio), Err(Error::DimensionMismatch { .. })));
        assert_eq!(
            PriorityAssignment::new(vec![1, 1, 2]).unwrap_err().to_string(),
            "priority not a permutation"
        );
    }
}
