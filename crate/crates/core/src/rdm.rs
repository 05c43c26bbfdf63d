//! Rational decision-making with reference information.
//!
//! An agent trusts the public popularity ranking as a stand-in for every
//! other player's preferences. Higher-priority players are then expected to
//! take the objects matching their priority, so the agent with priority `i`
//! picks its best object among popularity ranks `i..=n`.
//!
//! All indices here are canonical and 0-based: player `i` holds priority
//! `i + 1`, object `j` holds popularity rank `j + 1`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{check_n, CanonicalProfile, PopularityRanking, PreferenceProfile, PriorityAssignment};
use crate::perm;

/// Ordinal utilities `u[i][j] = n + 1 - rank`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UtilityMatrix {
    u: Vec<Vec<usize>>,
}

impl UtilityMatrix {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn row(&self, player: usize) -> &[usize] {
        &self.u[player]
    }

    pub fn get(&self, player: usize, object: usize) -> usize {
        self.u[player][object]
    }
}

pub fn utility_row(ranks: &[usize]) -> Vec<usize> {
    let n = ranks.len();
    ranks.iter().map(|&r| n + 1 - r).collect()
}

pub fn utility_matrix(canonical: &CanonicalProfile) -> UtilityMatrix {
    UtilityMatrix {
        u: canonical.rows().iter().map(|row| utility_row(row)).collect(),
    }
}

/// Payoffs of player `i` for each object once objects `0..i` are assumed taken.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PayoffTable {
    payoff: Vec<Vec<usize>>,
}

impl PayoffTable {
    pub fn row(&self, player: usize) -> &[usize] {
        &self.payoff[player]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.payoff
    }

    pub fn nonzero_in_row(&self, player: usize) -> usize {
        self.payoff[player].iter().filter(|&&v| v != 0).count()
    }
}

pub fn payoff_table(u: &UtilityMatrix) -> PayoffTable {
    let payoff =
        u.u.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| if j >= i { v } else { 0 })
                    .collect()
            })
            .collect();
    PayoffTable { payoff }
}

/// Best object for a priority-`(player+1)` agent with the given utility row:
/// the argmax over objects `player..n`.
///
/// Panics if the maximum is not unique, which cannot happen for a utility
/// row built from a strict ranking.
pub fn best_remaining(player: usize, utilities: &[usize]) -> usize {
    let allowed = &utilities[player..];
    let best = *allowed.iter().max().expect("player index within row");
    let mut hits = allowed.iter().enumerate().filter(|(_, &v)| v == best);
    let (offset, _) = hits.next().expect("maximum is attained");
    assert!(hits.next().is_none(), "argmax over remaining objects is not unique");
    player + offset
}

/// Canonical object chosen by the canonical player `player`.
pub fn rdm_r_choice(player: usize, u: &UtilityMatrix) -> Result<usize> {
    let n = u.n();
    if player >= n {
        return Err(Error::PlayerOutOfRange { player, n });
    }
    Ok(best_remaining(player, u.row(player)))
}

/// Raw object choices of RDM-R agents for one round.
pub fn rdm_r_choices(
    profile: &PreferenceProfile,
    popularity: &PopularityRanking,
    priorities: &PriorityAssignment,
) -> Result<Vec<usize>> {
    let n = profile.n();
    if popularity.n() != n || priorities.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if popularity.n() != n {
                popularity.n()
            } else {
                priorities.n()
            },
        });
    }
    let order = popularity.objects_in_rank_order();
    Ok((0..n)
        .map(|player| {
            let seq = profile.popularity_ordered_row(player, popularity);
            let canonical_obj = best_remaining(priorities.priority_of(player) - 1, &utility_row(&seq));
            order[canonical_obj]
        })
        .collect())
}

/// One canonical object per canonical player.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyProfile {
    choice: Vec<usize>,
}

impl StrategyProfile {
    pub fn choices(&self) -> &[usize] {
        &self.choice
    }

    pub fn choice_of(&self, player: usize) -> usize {
        self.choice[player]
    }
}

/// Rationalizable choices derived by iterated elimination, player by player
/// in priority order.
///
/// Each player `k` reasons about a believed game in which every
/// higher-priority player ranks objects exactly as popularity does. Walking
/// that game from priority 1 down to `k`, player `m` faces a bimatrix against
/// a representative lower-priority opponent: `m` scores `0` on objects already
/// claimed by fixed higher-priority players and its utility otherwise; the
/// opponent additionally scores `0` whenever it collides with `m`. Strictly
/// dominated strategies are removed for both sides until nothing changes and
/// the single survivor becomes `m`'s fixed choice.
///
/// Rows missing from `own_rows` default to the popularity ranking itself.
pub fn elimination_oracle(own_rows: &BTreeMap<usize, Vec<usize>>, n: usize) -> Result<StrategyProfile> {
    check_n(n)?;
    for (&player, row) in own_rows {
        if player >= n {
            return Err(Error::PlayerOutOfRange { player, n });
        }
        if row.len() != n || !perm::is_permutation(row) {
            return Err(Error::PreferenceRow { row: player });
        }
    }
    let popular = perm::identity(n);
    let choice = (0..n)
        .map(|k| {
            let own = own_rows.get(&k).unwrap_or(&popular);
            let mut claimed = vec![false; n];
            let mut last = 0;
            for m in 0..=k {
                let row = if m == k { own } else { &popular };
                last = surviving_strategy(row, &popular, &claimed);
                claimed[last] = true;
            }
            last
        })
        .collect();
    Ok(StrategyProfile { choice })
}

fn surviving_strategy(row: &[usize], opponent_row: &[usize], claimed: &[bool]) -> usize {
    let n = row.len();
    let utility = |r: &[usize], j: usize| n + 1 - r[j];
    let mine = |j: usize, _opp: usize| if claimed[j] { 0 } else { utility(row, j) };
    let theirs = |j: usize, opp: usize| {
        if claimed[opp] || opp == j {
            0
        } else {
            utility(opponent_row, opp)
        }
    };

    let mut alive_mine: Vec<usize> = (0..n).collect();
    let mut alive_theirs: Vec<usize> = (0..n).collect();
    loop {
        let before = (alive_mine.len(), alive_theirs.len());
        alive_mine = undominated(&alive_mine, &alive_theirs, mine);
        alive_theirs = undominated(&alive_theirs, &alive_mine, |s, o| theirs(o, s));
        if (alive_mine.len(), alive_theirs.len()) == before {
            break;
        }
    }
    assert_eq!(
        alive_mine.len(),
        1,
        "iterated elimination left {} strategies",
        alive_mine.len()
    );
    alive_mine[0]
}

/// Strategies in `own` not strictly dominated by another strategy in `own`
/// against every strategy in `other`.
fn undominated(own: &[usize], other: &[usize], payoff: impl Fn(usize, usize) -> usize) -> Vec<usize> {
    own.iter()
        .copied()
        .filter(|&s| {
            !own.iter()
                .any(|&t| t != s && other.iter().all(|&o| payoff(t, o) > payoff(s, o)))
        })
        .collect()
}
