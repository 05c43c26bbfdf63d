//! Live experiment sessions.
//!
//! A session moves through `Recruiting -> PreferenceCollection ->
//! Running(1..=n) -> Finished`. Players authenticate with the opaque token
//! handed out when they join; the experimenter holds the admin token issued
//! at creation. Player-facing views only ever carry public popularity and
//! the caller's own data. Outcomes are computed as rounds close but stay in
//! the log, which only the admin can download once the session is finished.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use ospgr_core::schedule::{priority_schedule, PrioritySchedule};
use ospgr_core::PreferenceProfile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{check_labels, encode_session, popularity_labels, SessionLog, SESSION_SCHEMA};
use crate::pipeline::round_record;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub object_labels: Vec<String>,
    #[serde(default = "default_object_type")]
    pub object_type: String,
    /// Seed for the priority schedule; drawn at random when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_object_type() -> String {
    "object".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "round", rename_all = "snake_case")]
pub enum Phase {
    Recruiting,
    PreferenceCollection,
    Running(usize),
    Finished,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Recruiting => "recruiting",
            Phase::PreferenceCollection => "preference_collection",
            Phase::Running(_) => "running",
            Phase::Finished => "finished",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("no such session")]
    UnknownSession,
    #[error("unknown or missing token")]
    Unauthorized,
    #[error("action not allowed in phase {0}")]
    WrongPhase(&'static str),
    #[error("session already has all players")]
    SessionFull,
    #[error("preferences already submitted")]
    AlreadySubmitted,
    #[error("choice already submitted this round")]
    AlreadyChosen,
    #[error("invalid preferences: {0}")]
    InvalidPreferences(String),
    #[error("unknown object label {0:?}")]
    UnknownLabel(String),
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession => "unknown_session",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::WrongPhase(_) => "wrong_phase",
            ServiceError::SessionFull => "session_full",
            ServiceError::AlreadySubmitted => "already_submitted",
            ServiceError::AlreadyChosen => "already_chosen",
            ServiceError::InvalidPreferences(_) => "invalid_preferences",
            ServiceError::UnknownLabel(_) => "unknown_label",
            ServiceError::InvalidConfig(_) => "invalid_config",
        }
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub admin_token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Joined {
    pub player_token: String,
    /// 1-based seat number.
    pub player: usize,
}

/// What a player may see about the session at any time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerView {
    #[serde(flatten)]
    pub phase: Phase,
    pub object_type: String,
    pub object_labels: Vec<String>,
    pub my_ranks: Option<Vec<usize>>,
    pub popularity: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundView {
    pub round: usize,
    pub popularity: Vec<String>,
    pub my_priority: usize,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminStatus {
    #[serde(flatten)]
    pub phase: Phase,
    pub n: usize,
    pub joined: usize,
    pub preferences_submitted: usize,
    pub choices_this_round: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ok: bool,
}

const ACK: Ack = Ack { ok: true };

struct Player {
    token: String,
    name: String,
    ranks: Option<Vec<usize>>,
}

struct Session {
    id: String,
    admin_token: String,
    config: SessionConfig,
    phase: Phase,
    players: Vec<Player>,
    schedule: Option<PrioritySchedule>,
    /// Choices of the round in progress.
    pending: Vec<Option<usize>>,
    log: Option<SessionLog>,
    created_at: String,
}

impl Session {
    fn n(&self) -> usize {
        self.config.object_labels.len()
    }

    fn player(&self, token: &str) -> ServiceResult<usize> {
        self.players
            .iter()
            .position(|p| p.token == token)
            .ok_or(ServiceError::Unauthorized)
    }

    fn check_admin(&self, token: &str) -> ServiceResult<()> {
        if self.admin_token == token {
            Ok(())
        } else {
            Err(ServiceError::Unauthorized)
        }
    }
}

type Clock = Box<dyn Fn() -> String + Send + Sync>;
type TokenSource = Box<dyn Fn() -> String + Send + Sync>;

pub struct SessionManager {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    data_dir: Option<PathBuf>,
    clock: Clock,
    tokens: TokenSource,
}

impl Default for SessionManager {
    fn default() -> Self {
        Self::new(None)
    }
}

impl SessionManager {
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            data_dir,
            clock: Box::new(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)),
            tokens: Box::new(|| uuid::Uuid::new_v4().simple().to_string()),
        }
    }

    /// Replaces the timestamp source, e.g. with a fixed clock in tests.
    pub fn with_clock(mut self, clock: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn with_tokens(mut self, tokens: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.tokens = Box::new(tokens);
        self
    }

    fn session(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or(ServiceError::UnknownSession)
    }

    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> ServiceResult<T>) -> ServiceResult<T> {
        let session = self.session(id)?;
        let mut guard = session.lock().expect("session lock");
        f(&mut guard)
    }

    pub fn create_session(&self, config: SessionConfig) -> ServiceResult<Created> {
        let n = config.object_labels.len();
        if n < 2 {
            return Err(ServiceError::InvalidConfig("need at least 2 objects".into()));
        }
        check_labels(&config.object_labels).map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;
        let id = (self.tokens)();
        let admin_token = (self.tokens)();
        let session = Session {
            id: id.clone(),
            admin_token: admin_token.clone(),
            config,
            phase: Phase::Recruiting,
            players: Vec::with_capacity(n),
            schedule: None,
            pending: vec![None; n],
            log: None,
            created_at: (self.clock)(),
        };
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(Created {
            session_id: id,
            admin_token,
        })
    }

    /// Takes the next seat; the last seat opens preference collection.
    pub fn join(&self, id: &str, name: Option<String>) -> ServiceResult<Joined> {
        self.with_session(id, |s| {
            if s.phase != Phase::Recruiting {
                return Err(ServiceError::SessionFull);
            }
            let seat = s.players.len() + 1;
            let token = (self.tokens)();
            s.players.push(Player {
                token: token.clone(),
                name: name.unwrap_or_else(|| format!("P{seat}")),
                ranks: None,
            });
            if s.players.len() == s.n() {
                s.phase = Phase::PreferenceCollection;
            }
            Ok(Joined {
                player_token: token,
                player: seat,
            })
        })
    }

    /// `ranks[j]` is the rank of `object_labels[j]`.
    pub fn submit_preferences(&self, id: &str, token: &str, ranks: Vec<usize>) -> ServiceResult<Ack> {
        self.with_session(id, |s| {
            let p = s.player(token)?;
            if s.phase != Phase::PreferenceCollection {
                return Err(ServiceError::WrongPhase(s.phase.name()));
            }
            if s.players[p].ranks.is_some() {
                return Err(ServiceError::AlreadySubmitted);
            }
            if ranks.len() != s.n() || !ospgr_core::perm::is_permutation(&ranks) {
                return Err(ServiceError::InvalidPreferences(format!(
                    "ranks must be a permutation of 1..={}",
                    s.n()
                )));
            }
            s.players[p].ranks = Some(ranks);
            if s.players.iter().all(|pl| pl.ranks.is_some()) {
                self.start_rounds(s);
            }
            Ok(ACK)
        })
    }

    fn start_rounds(&self, s: &mut Session) {
        let n = s.n();
        let rows: Vec<Vec<usize>> = s
            .players
            .iter()
            .map(|p| p.ranks.clone().expect("all submitted"))
            .collect();
        let profile = PreferenceProfile::new(rows.clone()).expect("rows checked on submission");
        let (popularity, popularity_ties) = popularity_labels(&profile, &s.config.object_labels);
        let seed = s.config.seed.unwrap_or_else(rand::random);
        s.schedule = Some(priority_schedule(n, seed).expect("n >= 2"));
        s.log = Some(SessionLog {
            schema: SESSION_SCHEMA.into(),
            session_id: s.id.clone(),
            n,
            object_type: s.config.object_type.clone(),
            object_labels: s.config.object_labels.clone(),
            players: s.players.iter().map(|p| p.name.clone()).collect(),
            preferences: rows,
            popularity,
            popularity_ties,
            rounds: Vec::with_capacity(n),
            created_at: Some(s.created_at.clone()),
            finished_at: None,
        });
        s.phase = Phase::Running(1);
    }

    pub fn player_view(&self, id: &str, token: &str) -> ServiceResult<PlayerView> {
        self.with_session(id, |s| {
            let p = s.player(token)?;
            Ok(PlayerView {
                phase: s.phase,
                object_type: s.config.object_type.clone(),
                object_labels: s.config.object_labels.clone(),
                my_ranks: s.players[p].ranks.clone(),
                popularity: s.log.as_ref().map(|l| l.popularity.clone()),
            })
        })
    }

    pub fn round_view(&self, id: &str, token: &str) -> ServiceResult<RoundView> {
        self.with_session(id, |s| {
            let p = s.player(token)?;
            let Phase::Running(round) = s.phase else {
                return Err(ServiceError::WrongPhase(s.phase.name()));
            };
            let schedule = s.schedule.as_ref().expect("running sessions have a schedule");
            Ok(RoundView {
                round,
                popularity: s.log.as_ref().expect("running sessions have a log").popularity.clone(),
                my_priority: schedule.priority(p, round - 1),
                chosen: s.pending[p].is_some(),
            })
        })
    }

    /// Records a choice; the last one of a round resolves it and advances.
    pub fn submit_choice(&self, id: &str, token: &str, label: &str) -> ServiceResult<Ack> {
        self.with_session(id, |s| {
            let p = s.player(token)?;
            let Phase::Running(round) = s.phase else {
                return Err(ServiceError::WrongPhase(s.phase.name()));
            };
            if s.pending[p].is_some() {
                return Err(ServiceError::AlreadyChosen);
            }
            let object = s
                .config
                .object_labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| ServiceError::UnknownLabel(label.to_string()))?;
            s.pending[p] = Some(object);
            if s.pending.iter().all(Option::is_some) {
                self.close_round(s, round);
            }
            Ok(ACK)
        })
    }

    fn close_round(&self, s: &mut Session, round: usize) {
        let n = s.n();
        let choices: Vec<usize> = s.pending.iter().map(|c| c.expect("all chosen")).collect();
        let priorities = s.schedule.as_ref().expect("schedule fixed").round(round - 1);
        let labels = s.config.object_labels.clone();
        let mut record = round_record(&labels, round, &priorities, &choices).expect("validated choices");
        record.recorded_at = Some((self.clock)());
        s.pending = vec![None; n];
        let log = s.log.as_mut().expect("running sessions have a log");
        log.rounds.push(record);
        if round == n {
            log.finished_at = Some((self.clock)());
            s.phase = Phase::Finished;
            self.persist(log);
        } else {
            s.phase = Phase::Running(round + 1);
        }
    }

    fn persist(&self, log: &SessionLog) {
        let Some(dir) = &self.data_dir else { return };
        let path = dir.join(format!("{}.ospgr.json", log.session_id));
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, encode_session(log))) {
            eprintln!("{{\"error\":\"io\",\"message\":\"writing {}: {}\"}}", path.display(), e);
        }
    }

    pub fn admin_status(&self, id: &str, admin_token: &str) -> ServiceResult<AdminStatus> {
        self.with_session(id, |s| {
            s.check_admin(admin_token)?;
            Ok(AdminStatus {
                phase: s.phase,
                n: s.n(),
                joined: s.players.len(),
                preferences_submitted: s.players.iter().filter(|p| p.ranks.is_some()).count(),
                choices_this_round: s.pending.iter().filter(|c| c.is_some()).count(),
            })
        })
    }

    /// Full log, admin only and only after the last round.
    pub fn session_log(&self, id: &str, admin_token: &str) -> ServiceResult<SessionLog> {
        self.with_session(id, |s| {
            s.check_admin(admin_token)?;
            if s.phase != Phase::Finished {
                return Err(ServiceError::WrongPhase(s.phase.name()));
            }
            Ok(s.log.clone().expect("finished sessions have a log"))
        })
    }
}
