use thiserror::Error;

/// Validation and precondition failures raised by the core routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("game needs at least 2 players, got {0}")]
    TooFewPlayers(usize),

    #[error("preference row {row} not a permutation of 1..n")]
    PreferenceRow { row: usize },

    #[error("{0} not a permutation")]
    NotPermutation(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("object index {object} out of range for n = {n}")]
    ObjectOutOfRange { object: usize, n: usize },

    #[error("player index {player} out of range for n = {n}")]
    PlayerOutOfRange { player: usize, n: usize },

    #[error("tau bound {bound} out of range 0..={max}")]
    BoundOutOfRange { bound: usize, max: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("player {player} does not hold every priority exactly once across rounds")]
    ScheduleViolation { player: usize },

    #[error("{count} candidates cannot be split into groups of {group_size}")]
    IndivisibleCandidates { count: usize, group_size: usize },

    #[error("enumeration size overflows u64")]
    EnumerationTooLarge,
}

pub type Result<T> = core::result::Result<T, Error>;
