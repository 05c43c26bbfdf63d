//! Log-level workflows: simulation, enumeration, reformation and analysis.

use ospgr_core::analysis::{
    chosen_rate, classify_choice, label_rates, priority_breakdown, reform_virtual_groups, tau_report,
    ChosenRateDistribution, Classification, LabelRates, TauBoundedEnumeration, TauBoundedReport, VirtualGroup,
};
use ospgr_core::rdm::{best_remaining, rdm_r_choices, utility_row};
use ospgr_core::schedule::priority_schedule;
use ospgr_core::{allocate, PreferenceProfile};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{popularity_labels, PreferenceFile, RoundRecord, SessionLog, SESSION_SCHEMA};
use crate::report::{AnalysisReport, LabelRow, OutcomeRow, RateSeries, ReportMetadata, TauRow};

/// Profiles per work unit. Fixed so the split never depends on the pool size.
const CHUNK: u64 = 4096;

/// Tau-bounded enumeration spread over `threads` workers (0 = rayon default).
///
/// Counts are integers summed per chunk, so the result is identical for any
/// worker count.
pub fn enumerate_parallel(n: usize, bound: usize, threads: usize) -> Result<TauBoundedReport> {
    let e = TauBoundedEnumeration::new(n, bound)?;
    let total = e.profile_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|err| Error::Usage(err.to_string()))?;
    let counts = pool.install(|| {
        (0..total.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| e.count_range(c * CHUNK..(c + 1) * CHUNK))
            .reduce(
                || vec![0u64; n],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            )
    });
    Ok(e.finish(counts))
}

pub fn enumeration_report(r: &TauBoundedReport) -> AnalysisReport {
    let mut report = AnalysisReport::new(ReportMetadata {
        source: "enumerate".into(),
        n: r.n,
        agent: "rdm_r".into(),
        tau_bound: Some(r.bound),
        profiles: Some(r.profiles),
        rows_per_player: Some(r.rows_per_player),
        sessions: vec![],
        virtual_groups: None,
    });
    report.chosen_rate.push(series("rdm_r", &r.distribution));
    report
}

fn series(name: &str, d: &ChosenRateDistribution) -> RateSeries {
    RateSeries {
        name: name.into(),
        count_basis: d.count_basis,
        rates: d.rate.clone(),
    }
}

/// Plays RDM-R agents through `n` rounds of a seeded Latin-square schedule.
pub fn simulate(prefs: &PreferenceFile, seed: u64, session_id: &str) -> Result<SessionLog> {
    let n = prefs.object_labels.len();
    if prefs.players.len() != n {
        return Err(Error::invariant(
            "players",
            format!("simulation needs exactly {n} players, found {}", prefs.players.len()),
        ));
    }
    let profile = PreferenceProfile::new(prefs.rows())?;
    let (popularity, popularity_ties) = popularity_labels(&profile, &prefs.object_labels);
    let mut log = SessionLog {
        schema: SESSION_SCHEMA.into(),
        session_id: session_id.into(),
        n,
        object_type: prefs.object_type.clone(),
        object_labels: prefs.object_labels.clone(),
        players: prefs.players.iter().map(|p| p.id.clone()).collect(),
        preferences: prefs.rows(),
        popularity,
        popularity_ties,
        rounds: Vec::with_capacity(n),
        created_at: None,
        finished_at: None,
    };
    let pop = log.popularity_ranking();
    let schedule = priority_schedule(n, seed)?;
    for (k, priorities) in schedule.rounds().into_iter().enumerate() {
        let choices = rdm_r_choices(&profile, &pop, &priorities)?;
        log.rounds
            .push(round_record(&log.object_labels, k + 1, &priorities, &choices)?);
    }
    log.validate()?;
    Ok(log)
}

pub(crate) fn round_record(
    labels: &[String],
    round: usize,
    priorities: &ospgr_core::PriorityAssignment,
    choices: &[usize],
) -> Result<RoundRecord> {
    let outcome = allocate(choices, priorities)?;
    Ok(RoundRecord {
        round,
        priorities: priorities.priorities().to_vec(),
        choices: choices.iter().map(|&c| labels[c].clone()).collect(),
        obtained: outcome
            .obtained()
            .iter()
            .map(|o| o.map(|c| labels[c].clone()))
            .collect(),
        recorded_at: None,
    })
}

/// Seeded random strict preferences for `players` players over `labels`.
pub fn random_preferences(labels: &[String], players: usize, seed: u64, object_type: &str) -> PreferenceFile {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = labels.len();
    PreferenceFile {
        schema: crate::format::PREFERENCES_SCHEMA.into(),
        object_type: object_type.into(),
        object_labels: labels.to_vec(),
        players: (0..players)
            .map(|p| {
                let mut ranks: Vec<usize> = (1..=n).collect();
                ranks.shuffle(&mut rng);
                crate::format::PlayerPreferences {
                    id: format!("P{}", p + 1),
                    ranks,
                }
            })
            .collect(),
    }
}

pub fn virtual_groups(log: &SessionLog) -> Result<Vec<VirtualGroup>> {
    Ok(reform_virtual_groups(&log.round_priorities())?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReformRow {
    pub group: usize,
    pub player: String,
    pub round: usize,
    pub priority: usize,
    pub choice: String,
    pub popularity_rank: usize,
}

/// One row per member of every virtual group.
pub fn reform_rows(log: &SessionLog) -> Result<Vec<ReformRow>> {
    let pop = log.popularity_ranking();
    let mut rows = Vec::new();
    for (g, group) in virtual_groups(log)?.iter().enumerate() {
        let mut members = group.members.clone();
        members.sort_by_key(|&(p, r)| log.rounds[r].priorities[p]);
        for (p, r) in members {
            let choice = &log.rounds[r].choices[p];
            rows.push(ReformRow {
                group: g + 1,
                player: log.players[p].clone(),
                round: r + 1,
                priority: log.rounds[r].priorities[p],
                choice: choice.clone(),
                popularity_rank: pop.rank_of(log.object_index(choice).expect("validated log")),
            });
        }
    }
    Ok(rows)
}

/// One observed choice together with the model's choice for the same player,
/// priority and popularity, both as canonical (popularity) indices.
#[derive(Debug, Clone, Copy)]
struct ChoiceEvent {
    player: usize,
    round: usize,
    priority: usize,
    observed: usize,
    model: usize,
    label: Classification,
}

fn choice_events(log: &SessionLog) -> Result<Vec<ChoiceEvent>> {
    let profile = log.profile();
    let pop = log.popularity_ranking();
    let mut events = Vec::new();
    for (r, round) in log.rounds.iter().enumerate() {
        let choices = log.round_choices(r);
        for (player, &choice) in choices.iter().enumerate() {
            let seq = profile.popularity_ordered_row(player, &pop);
            let priority = round.priorities[player];
            let model = best_remaining(priority - 1, &utility_row(&seq));
            let observed = pop.rank_of(choice) - 1;
            events.push(ChoiceEvent {
                player,
                round: r,
                priority,
                observed,
                model,
                label: classify_choice(observed, model, &seq)?,
            });
        }
    }
    Ok(events)
}

fn label_row(priority: Option<usize>, rates: Option<LabelRates>) -> LabelRow {
    LabelRow {
        priority,
        count: rates.map_or(0, |r| r.count),
        rdm_r: rates.map(|r| r.rdm_r),
        risk: rates.map(|r| r.risk),
        safe: rates.map(|r| r.safe),
    }
}

fn mean_distribution(parts: &[ChosenRateDistribution]) -> ChosenRateDistribution {
    let n = parts[0].n();
    let mut rate = vec![0.0; n];
    for p in parts {
        for (acc, r) in rate.iter_mut().zip(&p.rate) {
            *acc += r;
        }
    }
    for r in &mut rate {
        *r /= parts.len() as f64;
    }
    ChosenRateDistribution {
        rate,
        count_basis: parts.iter().map(|p| p.count_basis).sum(),
    }
}

/// Chosen rates, classification and tau tables over one or more logs.
///
/// Complete logs are expanded into their virtual groups; partial logs use
/// the recorded rounds as groups. Each log then contributes one distribution
/// and logs are averaged with equal weight.
pub fn analyze(logs: &[SessionLog]) -> Result<AnalysisReport> {
    let first = logs
        .first()
        .ok_or_else(|| Error::Usage("no session logs given".into()))?;
    let n = first.n;
    if let Some(other) = logs.iter().find(|l| l.n != n) {
        return Err(Error::invariant(
            "n",
            format!("session {} has n = {}, expected {n}", other.session_id, other.n),
        ));
    }
    let mut report = AnalysisReport::new(ReportMetadata {
        source: "analyze".into(),
        n,
        agent: "rdm_r".into(),
        tau_bound: None,
        profiles: None,
        rows_per_player: None,
        sessions: logs.iter().map(|l| l.session_id.clone()).collect(),
        virtual_groups: None,
    });
    let mut observed_parts = Vec::new();
    let mut model_parts = Vec::new();
    let mut records = Vec::new();
    let mut group_total = 0;
    for log in logs {
        if log.rounds.is_empty() {
            continue;
        }
        let events = choice_events(log)?;
        let at = |p: usize, r: usize| events[r * n + p];
        let groups: Vec<Vec<(usize, usize)>> = if log.is_complete() {
            let groups = virtual_groups(log)?;
            group_total += groups.len();
            groups.into_iter().map(|g| g.members).collect()
        } else {
            (0..log.rounds.len())
                .map(|r| (0..n).map(|p| (p, r)).collect())
                .collect()
        };
        let observed: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| g.iter().map(|&(p, r)| at(p, r).observed).collect())
            .collect();
        let model: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| g.iter().map(|&(p, r)| at(p, r).model).collect())
            .collect();
        observed_parts.push(chosen_rate(n, &observed)?);
        model_parts.push(chosen_rate(n, &model)?);

        let pop = log.popularity_ranking();
        let order = pop.objects_in_rank_order();
        for e in &events {
            records.push((e.priority, e.label));
            let round = &log.rounds[e.round];
            report.outcomes.push(OutcomeRow {
                session: log.session_id.clone(),
                round: e.round + 1,
                player: log.players[e.player].clone(),
                priority: e.priority,
                choice: round.choices[e.player].clone(),
                obtained: round.obtained[e.player].clone(),
                rdm_r_choice: log.object_labels[order[e.model]].clone(),
                label: e.label.as_str().into(),
            });
        }
    }
    for log in logs {
        let taus = tau_report(&log.profile(), &log.popularity_ranking());
        for (p, tau) in taus.taus.iter().enumerate() {
            report.taus.push(TauRow {
                session: log.session_id.clone(),
                player: log.players[p].clone(),
                tau: *tau,
            });
        }
    }
    if !observed_parts.is_empty() {
        report
            .chosen_rate
            .push(series("observed", &mean_distribution(&observed_parts)));
        report
            .chosen_rate
            .push(series("rdm_r", &mean_distribution(&model_parts)));
    }
    if group_total > 0 {
        report.metadata.virtual_groups = Some(group_total);
    }
    report.priority_breakdown = priority_breakdown(n, &records)?
        .into_iter()
        .enumerate()
        .map(|(k, r)| label_row(Some(k + 1), r))
        .collect();
    report.classification = Some(label_row(None, label_rates(records.iter().map(|&(_, l)| l))));
    report.validate()?;
    Ok(report)
}
