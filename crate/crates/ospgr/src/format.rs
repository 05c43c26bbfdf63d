//! Session logs and preference submission files.
//!
//! Both are pretty-printed JSON documents tagged with a `schema` field.
//! Objects are always referenced by their raw labels; popularity is stored
//! as a label list but is recomputed from the preferences on every decode,
//! so a stored ranking that disagrees with the Borda count is rejected.

use std::collections::{BTreeSet, HashMap};

use ospgr_core::{
    allocate, borda_scores, popularity_ranking, PopularityRanking, PreferenceProfile, PriorityAssignment, TieRule,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SESSION_SCHEMA: &str = "ospgr-session/1";
pub const PREFERENCES_SCHEMA: &str = "ospgr-preferences/1";

/// Unknown fields are an error in strict mode and skipped in lenient mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub schema: String,
    pub session_id: String,
    pub n: usize,
    pub object_type: String,
    pub object_labels: Vec<String>,
    pub players: Vec<String>,
    /// `preferences[i][j]`: rank that `players[i]` gives `object_labels[j]`.
    pub preferences: Vec<Vec<usize>>,
    /// Labels from most to least popular.
    pub popularity: Vec<String>,
    /// Label pairs whose Borda scores tied.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub popularity_ties: Vec<[String; 2]>,
    pub rounds: Vec<RoundRecord>,
    #[serde(default)]
    pub created_at: Option<String>,
    #[serde(default)]
    pub finished_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    /// `priorities[i]`: priority of `players[i]` in this round.
    pub priorities: Vec<usize>,
    pub choices: Vec<String>,
    /// `null` means the player obtained nothing.
    pub obtained: Vec<Option<String>>,
    #[serde(default)]
    pub recorded_at: Option<String>,
}

/// Player preference submissions, used both as simulation input and as the
/// candidate pool for group formation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceFile {
    pub schema: String,
    #[serde(default = "default_object_type")]
    pub object_type: String,
    pub object_labels: Vec<String>,
    pub players: Vec<PlayerPreferences>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerPreferences {
    pub id: String,
    /// Rank of each object, in `object_labels` order.
    pub ranks: Vec<usize>,
}

fn default_object_type() -> String {
    "object".to_string()
}

fn parse<T: DeserializeOwned>(text: &str, mode: Mode) -> Result<T> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = {
        let mut record = |path: serde_ignored::Path| unknown.push(path.to_string());
        let ignoring = serde_ignored::Deserializer::new(&mut de, &mut record);
        serde_path_to_error::deserialize(ignoring).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?
    };
    de.end().map_err(|e| Error::Schema {
        path: ".".into(),
        message: e.to_string(),
    })?;
    if mode == Mode::Strict {
        if let Some(path) = unknown.into_iter().next() {
            return Err(Error::Schema {
                path,
                message: "unknown field".into(),
            });
        }
    }
    Ok(value)
}

fn to_text<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text
}

pub fn decode_session(text: &str, mode: Mode) -> Result<SessionLog> {
    let log: SessionLog = parse(text, mode)?;
    log.validate()?;
    Ok(log)
}

pub fn encode_session(log: &SessionLog) -> String {
    to_text(log)
}

pub fn decode_preferences(text: &str, mode: Mode) -> Result<PreferenceFile> {
    let file: PreferenceFile = parse(text, mode)?;
    file.validate()?;
    Ok(file)
}

pub fn encode_preferences(file: &PreferenceFile) -> String {
    to_text(file)
}

pub(crate) fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (k, label) in labels.iter().enumerate() {
        if label.is_empty() {
            return Err(Error::invariant(format!("object_labels[{k}]"), "empty label"));
        }
        if !seen.insert(label) {
            return Err(Error::invariant(
                format!("object_labels[{k}]"),
                format!("duplicate label {label:?}"),
            ));
        }
    }
    Ok(())
}

fn label_index(labels: &[String]) -> HashMap<&str, usize> {
    labels.iter().enumerate().map(|(k, l)| (l.as_str(), k)).collect()
}

/// Borda popularity of a profile as a label list plus tied label pairs.
pub(crate) fn popularity_labels(profile: &PreferenceProfile, labels: &[String]) -> (Vec<String>, Vec<[String; 2]>) {
    let pop = popularity_ranking(&borda_scores(profile), TieRule::LowestRawIndexFirst);
    let order = pop
        .objects_in_rank_order()
        .into_iter()
        .map(|o| labels[o].clone())
        .collect();
    let ties = pop
        .tie_flags()
        .iter()
        .map(|&(a, b)| [labels[a].clone(), labels[b].clone()])
        .collect();
    (order, ties)
}

impl SessionLog {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SESSION_SCHEMA {
            return Err(Error::Schema {
                path: "schema".into(),
                message: format!("expected {SESSION_SCHEMA:?}, found {:?}", self.schema),
            });
        }
        let n = self.n;
        if n < 2 {
            return Err(Error::invariant("n", "game needs at least 2 players"));
        }
        let sized = |path: &str, len: usize| {
            if len != n {
                Err(Error::invariant(path, format!("expected {n} entries, found {len}")))
            } else {
                Ok(())
            }
        };
        sized("object_labels", self.object_labels.len())?;
        check_labels(&self.object_labels)?;
        sized("players", self.players.len())?;
        let distinct: BTreeSet<&String> = self.players.iter().collect();
        if distinct.len() != n {
            return Err(Error::invariant("players", "duplicate player id"));
        }
        sized("preferences", self.preferences.len())?;
        let profile = self.profile_unchecked().map_err(|e| match e {
            ospgr_core::Error::PreferenceRow { row } => {
                Error::invariant(format!("preferences[{row}]"), "preference row not a permutation")
            }
            other => other.into(),
        })?;
        let (popularity, ties) = popularity_labels(&profile, &self.object_labels);
        if self.popularity != popularity {
            return Err(Error::invariant(
                "popularity",
                format!("does not match Borda ranking of preferences {popularity:?}"),
            ));
        }
        if self.popularity_ties != ties {
            return Err(Error::invariant("popularity_ties", format!("expected {ties:?}")));
        }
        if self.rounds.len() > n {
            return Err(Error::invariant("rounds", format!("at most {n} rounds allowed")));
        }
        let index = label_index(&self.object_labels);
        let mut held = vec![BTreeSet::new(); n];
        for (k, round) in self.rounds.iter().enumerate() {
            let path = |field: &str| format!("rounds[{k}].{field}");
            if round.round != k + 1 {
                return Err(Error::invariant(path("round"), format!("expected round {}", k + 1)));
            }
            sized(&path("priorities"), round.priorities.len())?;
            let priorities = PriorityAssignment::new(round.priorities.clone())
                .map_err(|e| Error::invariant(path("priorities"), e.to_string()))?;
            sized(&path("choices"), round.choices.len())?;
            let mut choices = Vec::with_capacity(n);
            for (p, label) in round.choices.iter().enumerate() {
                let obj = index.get(label.as_str()).ok_or_else(|| {
                    Error::invariant(format!("rounds[{k}].choices[{p}]"), format!("unknown object {label:?}"))
                })?;
                choices.push(*obj);
            }
            sized(&path("obtained"), round.obtained.len())?;
            let outcome = allocate(&choices, &priorities)?;
            let expected: Vec<Option<String>> = outcome
                .obtained()
                .iter()
                .map(|o| o.map(|obj| self.object_labels[obj].clone()))
                .collect();
            if round.obtained != expected {
                return Err(Error::invariant(
                    path("obtained"),
                    format!("allocation gives {expected:?}"),
                ));
            }
            for (p, &prio) in round.priorities.iter().enumerate() {
                if !held[p].insert(prio) {
                    return Err(Error::invariant(
                        path("priorities"),
                        format!("player {} holds priority {prio} twice across rounds", self.players[p]),
                    ));
                }
            }
        }
        Ok(())
    }

    fn profile_unchecked(&self) -> std::result::Result<PreferenceProfile, ospgr_core::Error> {
        PreferenceProfile::new(self.preferences.clone())
    }

    pub fn profile(&self) -> PreferenceProfile {
        self.profile_unchecked().expect("validated log")
    }

    pub fn popularity_ranking(&self) -> PopularityRanking {
        let index = label_index(&self.object_labels);
        let mut ranks = vec![0; self.n];
        for (k, label) in self.popularity.iter().enumerate() {
            ranks[index[label.as_str()]] = k + 1;
        }
        PopularityRanking::from_ranks(ranks).expect("validated log")
    }

    pub fn object_index(&self, label: &str) -> Option<usize> {
        self.object_labels.iter().position(|l| l == label)
    }

    pub fn round_priorities(&self) -> Vec<PriorityAssignment> {
        self.rounds
            .iter()
            .map(|r| PriorityAssignment::new(r.priorities.clone()).expect("validated log"))
            .collect()
    }

    /// Raw object index chosen by each player in round `k` (0-based).
    pub fn round_choices(&self, k: usize) -> Vec<usize> {
        self.rounds[k]
            .choices
            .iter()
            .map(|l| self.object_index(l).expect("validated log"))
            .collect()
    }

    /// All `n` rounds played, so every player held every priority once.
    pub fn is_complete(&self) -> bool {
        self.rounds.len() == self.n
    }
}

impl PreferenceFile {
    pub fn validate(&self) -> Result<()> {
        if self.schema != PREFERENCES_SCHEMA {
            return Err(Error::Schema {
                path: "schema".into(),
                message: format!("expected {PREFERENCES_SCHEMA:?}, found {:?}", self.schema),
            });
        }
        let n = self.object_labels.len();
        if n < 2 {
            return Err(Error::invariant("object_labels", "need at least 2 objects"));
        }
        check_labels(&self.object_labels)?;
        let mut ids = BTreeSet::new();
        for (k, player) in self.players.iter().enumerate() {
            if !ids.insert(&player.id) {
                return Err(Error::invariant(format!("players[{k}].id"), "duplicate player id"));
            }
            if player.ranks.len() != n || !ospgr_core::perm::is_permutation(&player.ranks) {
                return Err(Error::invariant(
                    format!("players[{k}].ranks"),
                    "preference row not a permutation",
                ));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.players.iter().map(|p| p.ranks.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    /// Three-player example, one round.
    pub(crate) fn worked_log() -> SessionLog {
        SessionLog {
            schema: SESSION_SCHEMA.into(),
            session_id: "example-n3".into(),
            n: 3,
            object_type: "object".into(),
            object_labels: labels(&["A", "B", "C"]),
            players: labels(&["Player 1", "Player 2", "Player 3"]),
            preferences: vec![vec![1, 2, 3], vec![1, 2, 3], vec![2, 1, 3]],
            popularity: labels(&["A", "B", "C"]),
            popularity_ties: vec![],
            rounds: vec![RoundRecord {
                round: 1,
                priorities: vec![1, 3, 2],
                choices: labels(&["A", "B", "B"]),
                obtained: vec![Some("A".into()), None, Some("B".into())],
                recorded_at: None,
            }],
            created_at: None,
            finished_at: None,
        }
    }

    #[test]
    fn worked_log_roundtrip() {
        let log = worked_log();
        let text = encode_session(&log);
        let back = decode_session(&text, Mode::Strict).unwrap();
        assert_eq!(back, log);
        assert_eq!(encode_session(&back), text);
        assert!(!back.is_complete());
    }

    #[test]
    fn duplicate_priority_rejected() {
        let mut log = worked_log();
        log.rounds[0].priorities = vec![1, 1, 2];
        let err = decode_session(&encode_session(&log), Mode::Strict).unwrap_err();
        assert!(err.to_string().contains("priority not a permutation"), "{err}");
        assert!(err.to_string().contains("rounds[0].priorities"), "{err}");
    }

    #[test]
    fn unknown_fields_depend_on_mode() {
        let text = encode_session(&worked_log()).replacen("\"n\": 3,", "\"n\": 3,\n  \"colour\": \"red\",", 1);
        let err = decode_session(&text, Mode::Strict).unwrap_err();
        assert!(matches!(&err, Error::Schema { path, .. } if path == "colour"), "{err}");
        assert_eq!(decode_session(&text, Mode::Lenient).unwrap(), worked_log());
    }

    #[test]
    fn schema_errors_carry_paths() {
        let text = encode_session(&worked_log()).replacen("\"round\": 1", "\"round\": \"one\"", 1);
        let err = decode_session(&text, Mode::Strict).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { path, .. } if path == "rounds[0].round"),
            "{err}"
        );

        let mut log = worked_log();
        log.schema = "ospgr-session/0".into();
        assert!(matches!(
            decode_session(&encode_session(&log), Mode::Strict),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn invariant_violations() {
        let check = |log: SessionLog, needle: &str| {
            let err = decode_session(&encode_session(&log), Mode::Strict).unwrap_err();
            assert!(err.to_string().contains(needle), "{err} lacks {needle}");
        };
        let mut log = worked_log();
        log.popularity = labels(&["B", "A", "C"]);
        check(log, "Borda");
        let mut log = worked_log();
        log.rounds[0].obtained = vec![Some("A".into()), Some("B".into()), None];
        check(log, "rounds[0].obtained");
        let mut log = worked_log();
        log.rounds[0].choices[1] = "F".into();
        check(log, "unknown object");
        let mut log = worked_log();
        log.preferences[2] = vec![1, 1, 3];
        check(log, "preferences[2]");
        let mut log = worked_log();
        log.object_labels[2] = "A".into();
        check(log, "duplicate label");
        let mut log = worked_log();
        let mut second = log.rounds[0].clone();
        second.round = 2;
        log.rounds.push(second);
        check(log, "twice across rounds");
    }

    #[test]
    fn preference_file_checks() {
        let file = PreferenceFile {
            schema: PREFERENCES_SCHEMA.into(),
            object_type: "car".into(),
            object_labels: labels(&["A", "B"]),
            players: vec![
                PlayerPreferences {
                    id: "p1".into(),
                    ranks: vec![1, 2],
                },
                PlayerPreferences {
                    id: "p2".into(),
                    ranks: vec![2, 1],
                },
            ],
        };
        let text = encode_preferences(&file);
        assert_eq!(decode_preferences(&text, Mode::Strict).unwrap(), file);
        let mut bad = file.clone();
        bad.players[1].ranks = vec![2, 2];
        assert!(decode_preferences(&encode_preferences(&bad), Mode::Strict).is_err());
        let mut bad = file;
        bad.players[1].id = "p1".into();
        assert!(decode_preferences(&encode_preferences(&bad), Mode::Strict).is_err());
    }
}
