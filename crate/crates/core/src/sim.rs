//! Seeded synthetic vote streams, replay through [`QuestionState`], and
//! ranking-stability metrics over the resulting trajectories.
//!
//! # Generator
//!
//! The stream is drawn from ChaCha8 seeded with `SeedableRng::seed_from_u64`.
//! Each event consumes exactly two `next_u64` outputs, each mapped to
//! `[0, 1)` as `(x >> 11) * 2^-53`:
//!
//! 1. the answer: the first profile whose cumulative arrival weight exceeds
//!    `draw * total_weight`;
//! 2. the direction: up-vote iff `draw < up_probability`.
//!
//! Events carry `timestamp = index` (milliseconds) and question id
//! [`SIM_QUESTION`].

use std::collections::{HashMap, HashSet};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ranking::{QuestionState, RankedList, RankingError, VoteEvent};
use crate::scoring::{ConfigError, Scorer};

pub const SIM_QUESTION: &str = "sim";

#[derive(Debug, Clone, PartialEq)]
pub struct AnswerProfile {
    pub answer_id: String,
    pub up_probability: f64,
    pub arrival_weight: f64,
}

impl AnswerProfile {
    pub fn new(answer_id: impl Into<String>, up_probability: f64, arrival_weight: f64) -> Self {
        Self {
            answer_id: answer_id.into(),
            up_probability,
            arrival_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub profiles: Vec<AnswerProfile>,
    pub total_events: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("stream has no answer profiles")]
    NoProfiles,
    #[error("answer `{answer_id}`: up probability {value} is outside [0, 1]")]
    InvalidProbability { answer_id: String, value: f64 },
    #[error("answer `{answer_id}`: arrival weight {value} must be positive and finite")]
    InvalidWeight { answer_id: String, value: f64 },
    #[error("duplicate answer profile `{0}`")]
    DuplicateAnswer(String),
    #[error("total_events must be positive")]
    NoEvents,
    #[error("cadence must be positive")]
    ZeroCadence,
    #[error("at least one scorer is required")]
    NoScorers,
    #[error("scorer {index}: {source}")]
    Scorer {
        index: usize,
        #[source]
        source: ConfigError,
    },
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

impl StreamSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.profiles.is_empty() {
            return Err(SimError::NoProfiles);
        }
        if self.total_events == 0 {
            return Err(SimError::NoEvents);
        }
        let mut seen = HashSet::new();
        for p in &self.profiles {
            if !seen.insert(p.answer_id.as_str()) {
                return Err(SimError::DuplicateAnswer(p.answer_id.clone()));
            }
            if !(0.0..=1.0).contains(&p.up_probability) {
                return Err(SimError::InvalidProbability {
                    answer_id: p.answer_id.clone(),
                    value: p.up_probability,
                });
            }
            if !(p.arrival_weight > 0.0 && p.arrival_weight.is_finite()) {
                return Err(SimError::InvalidWeight {
                    answer_id: p.answer_id.clone(),
                    value: p.arrival_weight,
                });
            }
        }
        Ok(())
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The full event stream for `spec`, single votes only.
pub fn generate_events(spec: &StreamSpec) -> Result<Vec<VoteEvent>, SimError> {
    spec.validate()?;
    let mut cumulative = Vec::with_capacity(spec.profiles.len());
    let mut total = 0.0;
    for p in &spec.profiles {
        total += p.arrival_weight;
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let events = (0..spec.total_events)
        .map(|i| {
            let target = unit(&mut rng) * total;
            let idx = cumulative
                .iter()
                .position(|&c| target < c)
                .unwrap_or(cumulative.len() - 1);
            let profile = &spec.profiles[idx];
            let up = unit(&mut rng) < profile.up_probability;
            let (u, d) = if up { (1, 0) } else { (0, 1) };
            VoteEvent::new(SIM_QUESTION, profile.answer_id.clone(), u, d).at(i as i64)
        })
        .collect();
    Ok(events)
}

/// Rankings from every scorer after `event_index` events.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySnapshot {
    pub event_index: u64,
    /// One list per scorer, in scorer order.
    pub rankings: Vec<RankedList>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scorers: Vec<Scorer>,
    pub cadence: u64,
    pub snapshots: Vec<TrajectorySnapshot>,
    pub final_state: QuestionState,
}

/// Replays the generated stream and records every scorer's ranking after
/// each `cadence` events, plus after the last event.
///
/// All profiled answers are registered up front with zero votes, so every
/// snapshot ranks the same id set.
pub fn simulate(spec: &StreamSpec, scorers: &[Scorer], cadence: u64) -> Result<Trajectory, SimError> {
    if scorers.is_empty() {
        return Err(SimError::NoScorers);
    }
    if cadence == 0 {
        return Err(SimError::ZeroCadence);
    }
    for (index, s) in scorers.iter().enumerate() {
        s.validate().map_err(|source| SimError::Scorer { index, source })?;
    }
    let events = generate_events(spec)?;

    let mut state = QuestionState::new(SIM_QUESTION);
    for p in &spec.profiles {
        state.add_answer(p.answer_id.clone());
    }
    let mut snapshots = Vec::new();
    for (i, event) in events.iter().enumerate() {
        state.apply_event(event)?;
        let done = i as u64 + 1;
        if done.is_multiple_of(cadence) || done == spec.total_events {
            snapshots.push(TrajectorySnapshot {
                event_index: done,
                rankings: scorers.iter().map(|s| state.rank_by(s)).collect(),
            });
        }
    }
    Ok(Trajectory {
        scorers: scorers.to_vec(),
        cadence,
        snapshots,
        final_state: state,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KendallError {
    #[error("rankings do not contain the same ids")]
    MismatchedIdSets,
    #[error("need at least two ranked ids")]
    TooFewElements,
}

/// Kendall tau-a between two strict orderings of the same ids.
pub fn kendall_tau<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64, KendallError> {
    if a.len() != b.len() {
        return Err(KendallError::MismatchedIdSets);
    }
    let position: HashMap<&str, usize> = b.iter().enumerate().map(|(i, id)| (id.as_ref(), i)).collect();
    if position.len() != b.len() {
        return Err(KendallError::MismatchedIdSets);
    }
    let mapped: Vec<usize> = a
        .iter()
        .map(|id| position.get(id.as_ref()).copied())
        .collect::<Option<_>>()
        .ok_or(KendallError::MismatchedIdSets)?;
    if mapped.iter().collect::<HashSet<_>>().len() != mapped.len() {
        return Err(KendallError::MismatchedIdSets);
    }
    let m = mapped.len();
    if m < 2 {
        return Err(KendallError::TooFewElements);
    }
    let mut score: i64 = 0;
    for i in 0..m {
        for j in i + 1..m {
            score += if mapped[i] < mapped[j] { 1 } else { -1 };
        }
    }
    Ok(score as f64 / (m * (m - 1) / 2) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerStability {
    pub label: String,
    /// Mean tau between consecutive snapshots.
    pub mean_adjacent_tau: f64,
    /// How often the top answer changed between consecutive snapshots.
    pub rank1_changes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerAgreement {
    pub first: usize,
    pub second: usize,
    /// Tau between the two scorers' final rankings.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub scorers: Vec<ScorerStability>,
    pub agreement: Vec<ScorerAgreement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("need at least two snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error(transparent)]
    Kendall(#[from] KendallError),
}

/// Tau that treats a single-answer ranking as perfectly stable.
fn ranking_tau(a: &RankedList, b: &RankedList) -> Result<f64, KendallError> {
    match kendall_tau(&a.ids(), &b.ids()) {
        Err(KendallError::TooFewElements) => Ok(1.0),
        other => other,
    }
}

pub fn stability_report(trajectory: &Trajectory) -> Result<StabilityReport, StabilityError> {
    let snaps = &trajectory.snapshots;
    if snaps.len() < 2 {
        return Err(StabilityError::TooFewSnapshots(snaps.len()));
    }
    let mut scorers = Vec::with_capacity(trajectory.scorers.len());
    for (k, scorer) in trajectory.scorers.iter().enumerate() {
        let mut tau_sum = 0.0;
        let mut rank1_changes = 0;
        for pair in snaps.windows(2) {
            let (prev, next) = (&pair[0].rankings[k], &pair[1].rankings[k]);
            tau_sum += ranking_tau(prev, next)?;
            if prev.top().map(|e| &e.answer_id) != next.top().map(|e| &e.answer_id) {
                rank1_changes += 1;
            }
        }
        scorers.push(ScorerStability {
            label: scorer.label(),
            mean_adjacent_tau: tau_sum / (snaps.len() - 1) as f64,
            rank1_changes,
        });
    }
    let last = &snaps[snaps.len() - 1].rankings;
    let mut agreement = Vec::new();
    for first in 0..last.len() {
        for second in first + 1..last.len() {
            agreement.push(ScorerAgreement {
                first,
                second,
                tau: ranking_tau(&last[first], &last[second])?,
            });
        }
    }
    Ok(StabilityReport { scorers, agreement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{Bound, ScoringConfig, VoteTally};

    fn wilson() -> Scorer {
        Scorer::OriginalWilson {
            z: 2.0,
            bound: Bound::Lower,
        }
    }

    fn improved() -> Scorer {
        Scorer::Improved(ScoringConfig {
            z: 2.0,
            p_weight: 0.5,
            ..Default::default()
        })
    }

    #[test]
    fn kendall_examples() {
        let ids = ["a", "b", "c", "d", "e"];
        assert_eq!(kendall_tau(&ids, &ids).unwrap(), 1.0);
        let rev: Vec<_> = ids.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&ids, &rev).unwrap(), -1.0);
        let tau = kendall_tau(&["1", "2", "3", "4"], &["1", "3", "2", "4"]).unwrap();
        assert!((tau - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kendall_errors() {
        assert_eq!(
            kendall_tau(&["a", "b"], &["a", "c"]),
            Err(KendallError::MismatchedIdSets)
        );
        assert_eq!(kendall_tau(&["a", "b"], &["a"]), Err(KendallError::MismatchedIdSets));
        assert_eq!(
            kendall_tau(&["a", "a"], &["a", "b"]),
            Err(KendallError::MismatchedIdSets)
        );
        assert_eq!(kendall_tau(&["a"], &["a"]), Err(KendallError::TooFewElements));
    }

    #[test]
    fn single_unanimous_answer() {
        let spec = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 1.0, 1.0)],
            total_events: 10,
            seed: 7,
        };
        let traj = simulate(&spec, &[wilson(), improved()], 2).unwrap();
        assert_eq!(traj.final_state.get("A").unwrap().tally, VoteTally::new(10, 0));
        assert_eq!(traj.snapshots.len(), 5);
        for snap in &traj.snapshots {
            for r in &snap.rankings {
                assert_eq!(r.ids(), vec!["A"]);
            }
        }
        let report = stability_report(&traj).unwrap();
        assert!(report
            .scorers
            .iter()
            .all(|s| s.mean_adjacent_tau == 1.0 && s.rank1_changes == 0));
        assert_eq!(report.agreement[0].tau, 1.0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let spec = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 0.7, 2.0), AnswerProfile::new("B", 0.4, 1.0)],
            total_events: 500,
            seed: 42,
        };
        let a = simulate(&spec, &[wilson(), improved()], 50).unwrap();
        let b = simulate(&spec, &[wilson(), improved()], 50).unwrap();
        assert_eq!(a, b);
        let other = simulate(&StreamSpec { seed: 43, ..spec }, &[wilson()], 50).unwrap();
        assert_ne!(a.final_state, other.final_state);
    }

    #[test]
    fn final_snapshot_recorded_off_cadence() {
        let spec = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 0.5, 1.0)],
            total_events: 7,
            seed: 1,
        };
        let traj = simulate(&spec, &[wilson()], 3).unwrap();
        let idx: Vec<u64> = traj.snapshots.iter().map(|s| s.event_index).collect();
        assert_eq!(idx, vec![3, 6, 7]);
    }

    #[test]
    fn invalid_specs() {
        let good = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 0.5, 1.0)],
            total_events: 5,
            seed: 0,
        };
        assert_eq!(simulate(&good, &[], 1).unwrap_err(), SimError::NoScorers);
        assert_eq!(simulate(&good, &[wilson()], 0).unwrap_err(), SimError::ZeroCadence);
        let bad = StreamSpec {
            profiles: vec![],
            ..good.clone()
        };
        assert_eq!(generate_events(&bad).unwrap_err(), SimError::NoProfiles);
        let bad = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 1.5, 1.0)],
            ..good.clone()
        };
        assert!(matches!(
            generate_events(&bad),
            Err(SimError::InvalidProbability { .. })
        ));
        let bad = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 0.5, 0.0)],
            ..good.clone()
        };
        assert!(matches!(generate_events(&bad), Err(SimError::InvalidWeight { .. })));
        let bad = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 0.5, 1.0), AnswerProfile::new("A", 0.5, 1.0)],
            ..good.clone()
        };
        assert_eq!(
            generate_events(&bad).unwrap_err(),
            SimError::DuplicateAnswer("A".into())
        );
        let bad = StreamSpec {
            total_events: 0,
            ..good.clone()
        };
        assert_eq!(generate_events(&bad).unwrap_err(), SimError::NoEvents);
        let bad_scorer = Scorer::Improved(ScoringConfig {
            p_weight: -0.1,
            ..Default::default()
        });
        assert!(matches!(
            simulate(&good, &[bad_scorer], 1),
            Err(SimError::Scorer { index: 0, .. })
        ));
    }

    #[test]
    fn report_needs_two_snapshots() {
        let spec = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 0.5, 1.0)],
            total_events: 3,
            seed: 0,
        };
        let traj = simulate(&spec, &[wilson()], 10).unwrap();
        assert_eq!(stability_report(&traj).unwrap_err(), StabilityError::TooFewSnapshots(1));
    }

    #[test]
    fn reversed_second_snapshot_gives_minus_one() {
        let spec = StreamSpec {
            profiles: vec![AnswerProfile::new("A", 0.5, 1.0), AnswerProfile::new("B", 0.5, 1.0)],
            total_events: 2,
            seed: 0,
        };
        let mut traj = simulate(&spec, &[wilson()], 1).unwrap();
        let mut flipped = traj.snapshots[0].rankings[0].clone();
        flipped.entries.reverse();
        traj.snapshots[1].rankings[0] = flipped;
        let report = stability_report(&traj).unwrap();
        assert_eq!(report.scorers[0].mean_adjacent_tau, -1.0);
        assert_eq!(report.scorers[0].rank1_changes, 1);
    }
}
