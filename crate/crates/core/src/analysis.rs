//! Group formation, choice classification and chosen-rate aggregation.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{
    borda_scores, check_n, popularity_ranking, PopularityRanking, PreferenceProfile, PriorityAssignment, TieRule,
};
use crate::kendall::player_tau;
use crate::perm;
use crate::rdm::{best_remaining, utility_row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Classification {
    /// Same object the rational model picks.
    RdmR,
    /// An object the chooser prefers to the model's pick.
    Risk,
    /// An object the chooser likes less than the model's pick.
    Safe,
}

impl Classification {
    pub const ALL: [Classification; 3] = [Classification::RdmR, Classification::Risk, Classification::Safe];

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::RdmR => "rdm_r",
            Classification::Risk => "risk",
            Classification::Safe => "safe",
        }
    }
}

/// `pref_row[j]` is the chooser's rank of object `j` in the same indexing as
/// `chosen` and `rdm_choice`.
pub fn classify_choice(chosen: usize, rdm_choice: usize, pref_row: &[usize]) -> Result<Classification> {
    let n = pref_row.len();
    if !perm::is_permutation(pref_row) {
        return Err(Error::NotPermutation("preference row"));
    }
    for object in [chosen, rdm_choice] {
        if object >= n {
            return Err(Error::ObjectOutOfRange { object, n });
        }
    }
    Ok(if chosen == rdm_choice {
        Classification::RdmR
    } else if pref_row[chosen] < pref_row[rdm_choice] {
        Classification::Risk
    } else {
        Classification::Safe
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauReport {
    pub taus: Vec<usize>,
    pub group_mean: f64,
}

pub fn tau_report(profile: &PreferenceProfile, popularity: &PopularityRanking) -> TauReport {
    let taus: Vec<usize> = (0..profile.n()).map(|p| player_tau(profile, p, popularity)).collect();
    let group_mean = taus.iter().sum::<usize>() as f64 / taus.len() as f64;
    TauReport { taus, group_mean }
}

/// Share of choice events landing on each popularity rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ChosenRateDistribution {
    /// `rate[j]` for the popularity-rank-`(j+1)` object.
    pub rate: Vec<f64>,
    /// Number of choice events behind the rates.
    pub count_basis: u64,
}

impl ChosenRateDistribution {
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Empty("choice events"));
        }
        Ok(Self {
            rate: counts.iter().map(|&c| c as f64 / total as f64).collect(),
            count_basis: total,
        })
    }

    pub fn n(&self) -> usize {
        self.rate.len()
    }

    /// Popularity index (0-based) with the largest rate; the first one on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, &r) in self.rate.iter().enumerate() {
            if r > self.rate[best] {
                best = j;
            }
        }
        best
    }
}

/// Averages per-group chosen-rate distributions with equal group weights.
///
/// Each group is a list of choice events given as canonical object indices.
pub fn chosen_rate<G: AsRef<[usize]>>(n: usize, groups: &[G]) -> Result<ChosenRateDistribution> {
    if groups.is_empty() {
        return Err(Error::Empty("choice groups"));
    }
    let mut all_counts = Vec::with_capacity(groups.len());
    for group in groups {
        let events = group.as_ref();
        if events.is_empty() {
            return Err(Error::Empty("choice events"));
        }
        let mut counts = vec![0u64; n];
        for &object in events {
            if object >= n {
                return Err(Error::ObjectOutOfRange { object, n });
            }
            counts[object] += 1;
        }
        all_counts.push(counts);
    }
    let first_size = groups[0].as_ref().len();
    if groups.iter().all(|g| g.as_ref().len() == first_size) {
        // equal weights over equal-sized groups: pool the integer counts so
        // the division happens once
        let mut pooled = vec![0u64; n];
        for counts in &all_counts {
            for (acc, c) in pooled.iter_mut().zip(counts) {
                *acc += c;
            }
        }
        return ChosenRateDistribution::from_counts(&pooled);
    }
    let mut rate = vec![0.0; n];
    let mut basis = 0u64;
    for counts in &all_counts {
        let dist = ChosenRateDistribution::from_counts(counts)?;
        for (acc, r) in rate.iter_mut().zip(&dist.rate) {
            *acc += r;
        }
        basis += dist.count_basis;
    }
    let groups_len = groups.len() as f64;
    for r in &mut rate {
        *r /= groups_len;
    }
    Ok(ChosenRateDistribution {
        rate,
        count_basis: basis,
    })
}

/// Every canonical profile whose rows each sit within `bound` inversions of
/// popularity, with RDM-R agents choosing.
///
/// Profiles are indexed in mixed radix (player 0 most significant) so any
/// contiguous index range can be counted on its own and the partial counts
/// summed in any order.
#[derive(Debug, Clone)]
pub struct TauBoundedEnumeration {
    n: usize,
    bound: usize,
    rows: Vec<Vec<usize>>,
    utilities: Vec<Vec<usize>>,
    profiles: u64,
}

impl TauBoundedEnumeration {
    pub fn new(n: usize, bound: usize) -> Result<Self> {
        check_n(n)?;
        let max = perm::max_inversions(n);
        if bound > max {
            return Err(Error::BoundOutOfRange { bound, max });
        }
        let rows = perm::bounded_inversion_permutations(n, bound);
        let profiles = u32::try_from(n)
            .ok()
            .and_then(|exp| (rows.len() as u64).checked_pow(exp))
            .ok_or(Error::EnumerationTooLarge)?;
        let utilities = rows.iter().map(|r| utility_row(r)).collect();
        Ok(Self {
            n,
            bound,
            rows,
            utilities,
            profiles,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    /// Admissible rank rows per player.
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn profile_count(&self) -> u64 {
        self.profiles
    }

    /// Chosen counts per canonical object over profiles in `range`.
    pub fn count_range(&self, range: Range<u64>) -> Vec<u64> {
        let n = self.n;
        let k = self.rows.len() as u64;
        let mut counts = vec![0u64; n];
        let end = range.end.min(self.profiles);
        if range.start >= end {
            return counts;
        }
        // digits[i] = row index for player i
        let mut digits = vec![0usize; n];
        let mut rem = range.start;
        for d in digits.iter_mut().rev() {
            *d = (rem % k) as usize;
            rem /= k;
        }
        for _ in range.start..end {
            for (player, &d) in digits.iter().enumerate() {
                counts[best_remaining(player, &self.utilities[d])] += 1;
            }
            for d in digits.iter_mut().rev() {
                *d += 1;
                if (*d as u64) < k {
                    break;
                }
                *d = 0;
            }
        }
        counts
    }

    pub fn finish(&self, counts: Vec<u64>) -> TauBoundedReport {
        let distribution = ChosenRateDistribution::from_counts(&counts).expect("at least one profile");
        TauBoundedReport {
            n: self.n,
            bound: self.bound,
            rows_per_player: self.rows.len(),
            profiles: self.profiles,
            counts,
            distribution,
        }
    }

    pub fn run(&self) -> TauBoundedReport {
        self.finish(self.count_range(0..self.profiles))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauBoundedReport {
    pub n: usize,
    pub bound: usize,
    pub rows_per_player: usize,
    pub profiles: u64,
    pub counts: Vec<u64>,
    pub distribution: ChosenRateDistribution,
}

/// Single-threaded full enumeration.
pub fn enumerate_tau_bounded(n: usize, bound: usize) -> Result<TauBoundedReport> {
    Ok(TauBoundedEnumeration::new(n, bound)?.run())
}

/// One recombined group: `members[p] = (player, round)`, one record per
/// distinct priority.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VirtualGroup {
    pub members: Vec<(usize, usize)>,
}

impl VirtualGroup {
    pub fn priorities(&self, rounds: &[PriorityAssignment]) -> PriorityAssignment {
        PriorityAssignment::new(self.members.iter().map(|&(p, r)| rounds[r].priority_of(p)).collect())
            .expect("virtual group priorities form a permutation")
    }
}

/// All ways to pick one recorded round per player so the picked priorities
/// are pairwise distinct, in lexicographic order of the player → round map.
///
/// Needs one round per player with every player holding every priority once,
/// which gives exactly `n!` groups.
pub fn reform_virtual_groups(rounds: &[PriorityAssignment]) -> Result<Vec<VirtualGroup>> {
    let n = rounds
        .first()
        .map(PriorityAssignment::n)
        .ok_or(Error::Empty("rounds"))?;
    if rounds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rounds.len(),
        });
    }
    for r in rounds {
        if r.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.n(),
            });
        }
    }
    for player in 0..n {
        let held: Vec<usize> = rounds.iter().map(|r| r.priority_of(player)).collect();
        if !perm::is_permutation(&held) {
            return Err(Error::ScheduleViolation { player });
        }
    }
    let mut out = Vec::new();
    let mut members = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend_groups(rounds, &mut members, &mut used, &mut out);
    Ok(out)
}

fn extend_groups(
    rounds: &[PriorityAssignment],
    members: &mut Vec<(usize, usize)>,
    used: &mut [bool],
    out: &mut Vec<VirtualGroup>,
) {
    let player = members.len();
    if player == used.len() {
        out.push(VirtualGroup {
            members: members.clone(),
        });
        return;
    }
    for (round, assignment) in rounds.iter().enumerate() {
        let priority = assignment.priority_of(player) - 1;
        if used[priority] {
            continue;
        }
        used[priority] = true;
        members.push((player, round));
        extend_groups(rounds, members, used, out);
        members.pop();
        used[priority] = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupingConfig {
    pub group_size: usize,
    /// Groups are accepted only when every member's tau is strictly below this.
    pub max_tau: usize,
    pub seed: u64,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupEvaluation {
    /// Candidate indices, ascending.
    pub members: Vec<usize>,
    pub popularity: PopularityRanking,
    pub taus: Vec<usize>,
    pub accepted: bool,
}

impl GroupEvaluation {
    fn excess(&self, max_tau: usize) -> usize {
        self.taus.iter().map(|&t| (t + 1).saturating_sub(max_tau)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub groups: Vec<GroupEvaluation>,
    /// Restarts tried before stopping.
    pub restarts_used: usize,
}

impl Grouping {
    pub fn all_accepted(&self) -> bool {
        self.groups.iter().all(|g| g.accepted)
    }

    pub fn rejected(&self) -> impl Iterator<Item = &GroupEvaluation> {
        self.groups.iter().filter(|g| !g.accepted)
    }
}

fn evaluate_group(candidates: &[Vec<usize>], mut members: Vec<usize>, max_tau: usize) -> GroupEvaluation {
    members.sort_unstable();
    let profile = PreferenceProfile::new(members.iter().map(|&m| candidates[m].clone()).collect())
        .expect("candidate rows validated");
    let popularity = popularity_ranking(&borda_scores(&profile), TieRule::LowestRawIndexFirst);
    let taus: Vec<usize> = (0..profile.n()).map(|p| player_tau(&profile, p, &popularity)).collect();
    let accepted = taus.iter().all(|&t| t < max_tau);
    GroupEvaluation {
        members,
        popularity,
        taus,
        accepted,
    }
}

fn score(groups: &[GroupEvaluation], max_tau: usize) -> (usize, core::cmp::Reverse<usize>) {
    let accepted = groups.iter().filter(|g| g.accepted).count();
    let excess = groups.iter().map(|g| g.excess(max_tau)).sum();
    (accepted, core::cmp::Reverse(excess))
}

/// Seeded restart search for a partition whose groups all keep every
/// member's tau below `max_tau`.
///
/// Each restart shuffles the candidates, cuts them into consecutive groups
/// and then hill-climbs with pairwise member swaps between a rejected group
/// and any other group. The best partition seen is returned; groups that
/// still violate the constraint come back with `accepted == false`.
pub fn form_groups(candidates: &[Vec<usize>], config: &GroupingConfig) -> Result<Grouping> {
    let size = config.group_size;
    check_n(size)?;
    if candidates.is_empty() || !candidates.len().is_multiple_of(size) {
        return Err(Error::IndivisibleCandidates {
            count: candidates.len(),
            group_size: size,
        });
    }
    for (i, row) in candidates.iter().enumerate() {
        if row.len() != size || !perm::is_permutation(row) {
            return Err(Error::PreferenceRow { row: i });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(Vec<GroupEvaluation>, usize)> = None;
    let mut restarts_used = 0;
    for restart in 0..config.restarts.max(1) {
        restarts_used = restart + 1;
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.shuffle(&mut rng);
        let mut groups: Vec<GroupEvaluation> = order
            .chunks(size)
            .map(|chunk| evaluate_group(candidates, chunk.to_vec(), config.max_tau))
            .collect();
        hill_climb(candidates, &mut groups, config.max_tau);
        let better = match &best {
            None => true,
            Some((b, _)) => score(&groups, config.max_tau) > score(b, config.max_tau),
        };
        if better {
            best = Some((groups, restart));
        }
        if best.as_ref().is_some_and(|(b, _)| b.iter().all(|g| g.accepted)) {
            break;
        }
    }
    let (mut groups, _) = best.expect("at least one restart");
    groups.sort_by(|a, b| a.members.cmp(&b.members));
    Ok(Grouping { groups, restarts_used })
}

fn hill_climb(candidates: &[Vec<usize>], groups: &mut [GroupEvaluation], max_tau: usize) {
    let size = groups[0].members.len();
    loop {
        let mut improved = false;
        for g in 0..groups.len() {
            if groups[g].accepted {
                continue;
            }
            for h in 0..groups.len() {
                if h == g {
                    continue;
                }
                for a in 0..size {
                    for b in 0..size {
                        let before = score(&[groups[g].clone(), groups[h].clone()], max_tau);
                        let mut gm = groups[g].members.clone();
                        let mut hm = groups[h].members.clone();
                        core::mem::swap(&mut gm[a], &mut hm[b]);
                        let ng = evaluate_group(candidates, gm, max_tau);
                        let nh = evaluate_group(candidates, hm, max_tau);
                        if score(&[ng.clone(), nh.clone()], max_tau) > before {
                            groups[g] = ng;
                            groups[h] = nh;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Share of each label among a set of classified choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelRates {
    pub rdm_r: f64,
    pub risk: f64,
    pub safe: f64,
    pub count: usize,
}

impl LabelRates {
    pub fn rate(&self, label: Classification) -> f64 {
        match label {
            Classification::RdmR => self.rdm_r,
            Classification::Risk => self.risk,
            Classification::Safe => self.safe,
        }
    }
}

/// `None` when there is nothing to count.
pub fn label_rates<I: IntoIterator<Item = Classification>>(labels: I) -> Option<LabelRates> {
    let mut counts = [0usize; 3];
    for label in labels {
        counts[label as usize] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let t = total as f64;
    Some(LabelRates {
        rdm_r: counts[0] as f64 / t,
        risk: counts[1] as f64 / t,
        safe: counts[2] as f64 / t,
        count: total,
    })
}

/// Label rates per priority level; entry `k` is priority `k + 1`, `None`
/// when no record carries that priority.
pub fn priority_breakdown(n: usize, records: &[(usize, Classification)]) -> Result<Vec<Option<LabelRates>>> {
    let mut buckets: Vec<Vec<Classification>> = vec![Vec::new(); n];
    for &(priority, label) in records {
        if priority == 0 || priority > n {
            return Err(Error::PlayerOutOfRange { player: priority, n });
        }
        buckets[priority - 1].push(label);
    }
    Ok(buckets.into_iter().map(label_rates).collect())
}
