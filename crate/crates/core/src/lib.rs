//! Core of the one-sided preference game with reference information.
//!
//! `n` players privately rank `n` objects and each picks one object per
//! round. The only public signal is a popularity ranking aggregated from all
//! preferences by Borda count; each player also holds a private priority
//! that settles collisions. This crate holds the pure parts:
//!
//! * [`game`]: profiles, Borda popularity, canonical relabeling, allocation.
//! * [`kendall`]: distance of a preference to popularity.
//! * [`rdm`]: the rational model that trusts popularity, plus an independent
//!   iterated-elimination oracle for it.
//! * [`analysis`]: choice classification, virtual group reformation,
//!   chosen-rate aggregation, tau-bounded enumeration and group formation.
//! * [`schedule`]: seeded Latin-square priority rotation.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod game;
pub mod kendall;
pub mod perm;
pub mod rdm;
pub mod schedule;

pub use error::{Error, Result};
pub use game::{
    allocate, allocate_partial, borda_scores, canonicalize, decanonicalize, popularity_ranking, BordaScores,
    CanonicalProfile, GameConfig, PopularityRanking, PreferenceProfile, PriorityAssignment, RoundOutcome, TieRule,
};
pub use kendall::kendall_tau;
pub use rdm::{
    elimination_oracle, payoff_table, rdm_r_choice, utility_matrix, PayoffTable, StrategyProfile, UtilityMatrix,
};
