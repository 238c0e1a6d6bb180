//! Ranking of vote-based content by a blend of the Wilson score interval and
//! a spotlight index that measures how much attention an answer draws
//! relative to the most-voted answer of the same question.
//!
//! - [`scoring`]: pure score functions.
//! - [`ranking`]: online per-question state and ranked lists.
//! - [`grid`]: `(u, d)` score grids, parameter sweeps, CSV output.
//! - [`sim`]: seeded vote streams and ranking-stability metrics.

pub mod grid;
pub mod numfmt;
pub mod ranking;
pub mod scoring;
pub mod sim;

pub use grid::{emit_csv, grid_scores, sweep, GridError, GridSpec, ScoreGrid, SweepPoint, SweepSpec};
pub use ranking::{
    AnswerEntry, QuestionBook, QuestionSnapshot, QuestionState, RankedEntry, RankedList, RankingError, RawMaxima,
    VoteEvent,
};
pub use scoring::{
    average_rating, combined_score, effective_maxima, si_range, spotlight_index, spotlight_index_with, validate_config,
    wilson_interval, Bound, ConfigError, Maxima, ScoreBreakdown, Scorer, ScoringConfig, SiDenominator, SiKind,
    SiTransform, VoteTally, WilsonInterval,
};
pub use sim::{
    generate_events, kendall_tau, simulate, stability_report, AnswerProfile, KendallError, SimError, StabilityReport,
    StreamSpec, Trajectory,
};
