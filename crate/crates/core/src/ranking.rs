//! Online per-question state: vote-delta ingestion with incrementally
//! maintained maxima, and ranking on demand.

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

use crate::scoring::{effective_maxima, Maxima, ScoreBreakdown, Scorer, ScoringConfig, VoteTally};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerEntry {
    pub answer_id: String,
    pub tally: VoteTally,
    /// Insertion order within the question.
    pub created_seq: u64,
}

/// A change to one answer's counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteEvent {
    pub question_id: String,
    pub answer_id: String,
    pub up_delta: i64,
    pub down_delta: i64,
    /// Milliseconds.
    pub timestamp: i64,
}

impl VoteEvent {
    pub fn new(question_id: impl Into<String>, answer_id: impl Into<String>, up_delta: i64, down_delta: i64) -> Self {
        Self {
            question_id: question_id.into(),
            answer_id: answer_id.into(),
            up_delta,
            down_delta,
            timestamp: 0,
        }
    }

    pub fn at(mut self, timestamp: i64) -> Self {
        self.timestamp = timestamp;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("event for question `{got}` applied to question `{expected}`")]
    UnknownQuestion { expected: String, got: String },
    #[error("event on answer `{answer_id}` would leave a negative count")]
    NegativeResultingCount { answer_id: String },
    #[error("event on answer `{answer_id}` has no nonzero delta")]
    EmptyEvent { answer_id: String },
    #[error("duplicate answer id `{0}`")]
    DuplicateAnswer(String),
}

/// Raw (unfloored) per-question maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RawMaxima {
    pub n_max: u64,
    pub u_max: u64,
    pub d_max: u64,
}

impl RawMaxima {
    pub fn scan<'a>(tallies: impl IntoIterator<Item = &'a VoteTally>) -> Self {
        tallies.into_iter().fold(RawMaxima::default(), |m, t| RawMaxima {
            n_max: m.n_max.max(t.total()),
            u_max: m.u_max.max(t.up),
            d_max: m.d_max.max(t.down),
        })
    }

    pub fn floored(&self, floor: u64) -> Maxima {
        effective_maxima(self.n_max, self.u_max, self.d_max, floor)
    }
}

/// All answers to one question plus cached raw maxima.
///
/// Writers must be serialized per question; snapshots can be read freely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionState {
    question_id: String,
    entries: Vec<AnswerEntry>,
    index: HashMap<String, usize>,
    maxima: RawMaxima,
    event_count: u64,
}

impl QuestionState {
    pub fn new(question_id: impl Into<String>) -> Self {
        Self {
            question_id: question_id.into(),
            entries: Vec::new(),
            index: HashMap::new(),
            maxima: RawMaxima::default(),
            event_count: 0,
        }
    }

    /// Builds a state from already-aggregated tallies, in creation order.
    pub fn from_tallies<I, S>(question_id: impl Into<String>, tallies: I) -> Result<Self, RankingError>
    where
        I: IntoIterator<Item = (S, VoteTally)>,
        S: Into<String>,
    {
        let mut state = Self::new(question_id);
        for (id, tally) in tallies {
            let id = id.into();
            if state.index.contains_key(&id) {
                return Err(RankingError::DuplicateAnswer(id));
            }
            state.push_entry(id, tally);
        }
        state.maxima = RawMaxima::scan(state.entries.iter().map(|e| &e.tally));
        Ok(state)
    }

    pub fn question_id(&self) -> &str {
        &self.question_id
    }

    pub fn entries(&self) -> &[AnswerEntry] {
        &self.entries
    }

    pub fn get(&self, answer_id: &str) -> Option<&AnswerEntry> {
        self.index.get(answer_id).map(|&i| &self.entries[i])
    }

    pub fn raw_maxima(&self) -> RawMaxima {
        self.maxima
    }

    pub fn event_count(&self) -> u64 {
        self.event_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Registers an answer with no votes. Returns false if it already exists.
    pub fn add_answer(&mut self, answer_id: impl Into<String>) -> bool {
        let id = answer_id.into();
        if self.index.contains_key(&id) {
            return false;
        }
        self.push_entry(id, VoteTally::default());
        true
    }

    fn push_entry(&mut self, answer_id: String, tally: VoteTally) {
        let seq = self.entries.len() as u64;
        self.index.insert(answer_id.clone(), self.entries.len());
        self.entries.push(AnswerEntry {
            answer_id,
            tally,
            created_seq: seq,
        });
    }

    /// Applies one event and reports whether any cached maximum moved.
    ///
    /// Unknown answers are created with a zero tally. A rejected event leaves
    /// the state untouched.
    pub fn apply_event(&mut self, event: &VoteEvent) -> Result<bool, RankingError> {
        if event.question_id != self.question_id {
            return Err(RankingError::UnknownQuestion {
                expected: self.question_id.clone(),
                got: event.question_id.clone(),
            });
        }
        if event.up_delta == 0 && event.down_delta == 0 {
            return Err(RankingError::EmptyEvent {
                answer_id: event.answer_id.clone(),
            });
        }
        let old = self.get(&event.answer_id).map(|e| e.tally).unwrap_or_default();
        let negative = || RankingError::NegativeResultingCount {
            answer_id: event.answer_id.clone(),
        };
        let up = old.up.checked_add_signed(event.up_delta).ok_or_else(negative)?;
        let down = old.down.checked_add_signed(event.down_delta).ok_or_else(negative)?;
        let new = VoteTally::new(up, down);
        if up.checked_add(down).is_none() {
            return Err(negative());
        }

        let slot = match self.index.get(&event.answer_id) {
            Some(&i) => i,
            None => {
                self.push_entry(event.answer_id.clone(), VoteTally::default());
                self.entries.len() - 1
            }
        };
        self.entries[slot].tally = new;
        self.event_count += 1;

        let before = self.maxima;
        let mut rescan = false;
        for (cached, old_v, new_v) in [
            (&mut self.maxima.n_max, old.total(), new.total()),
            (&mut self.maxima.u_max, old.up, new.up),
            (&mut self.maxima.d_max, old.down, new.down),
        ] {
            if new_v >= *cached {
                *cached = new_v;
            } else if old_v == *cached && new_v < old_v {
                // this answer held the maximum and dropped below it
                rescan = true;
            }
        }
        if rescan {
            self.maxima = self.recompute_maxima();
        }
        Ok(self.maxima != before)
    }

    /// Maxima from a full scan of the entries.
    pub fn recompute_maxima(&self) -> RawMaxima {
        RawMaxima::scan(self.entries.iter().map(|e| &e.tally))
    }

    pub fn snapshot(&self) -> QuestionSnapshot {
        QuestionSnapshot {
            question_id: self.question_id.clone(),
            entries: self.entries.clone(),
            maxima: self.maxima,
        }
    }

    pub fn rank(&self, config: &ScoringConfig) -> RankedList {
        self.rank_by(&Scorer::Improved(*config))
    }

    pub fn rank_by(&self, scorer: &Scorer) -> RankedList {
        rank_entries(&self.entries, self.maxima, scorer)
    }
}

/// Read-only copy of a question at one point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionSnapshot {
    pub question_id: String,
    pub entries: Vec<AnswerEntry>,
    pub maxima: RawMaxima,
}

impl QuestionSnapshot {
    pub fn rank_by(&self, scorer: &Scorer) -> RankedList {
        rank_entries(&self.entries, self.maxima, scorer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub answer_id: String,
    pub tally: VoteTally,
    pub created_seq: u64,
    pub breakdown: ScoreBreakdown,
}

/// Answers in descending score order, with the scorer and maxima used.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
    pub scorer: Scorer,
    pub maxima: Maxima,
}

impl RankedList {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.answer_id.as_str()).collect()
    }

    pub fn top(&self) -> Option<&RankedEntry> {
        self.entries.first()
    }
}

/// Score desc, then up-votes desc, then creation order asc.
fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.breakdown
        .combined
        .total_cmp(&a.breakdown.combined)
        .then_with(|| b.tally.up.cmp(&a.tally.up))
        .then_with(|| a.created_seq.cmp(&b.created_seq))
}

/// Scores and sorts `entries` under `scorer`, flooring `raw` as configured.
pub fn rank_entries(entries: &[AnswerEntry], raw: RawMaxima, scorer: &Scorer) -> RankedList {
    let maxima = raw.floored(scorer.n_max_floor());
    let mut ranked: Vec<RankedEntry> = entries
        .iter()
        .map(|e| RankedEntry {
            answer_id: e.answer_id.clone(),
            tally: e.tally,
            created_seq: e.created_seq,
            breakdown: scorer.breakdown(e.tally, maxima),
        })
        .collect();
    ranked.sort_by(rank_order);
    RankedList {
        entries: ranked,
        scorer: *scorer,
        maxima,
    }
}

/// Many questions keyed by id, created on first event.
#[derive(Debug, Clone, Default)]
pub struct QuestionBook {
    order: Vec<String>,
    questions: HashMap<String, QuestionState>,
}

impl QuestionBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply_event(&mut self, event: &VoteEvent) -> Result<bool, RankingError> {
        if let Some(q) = self.questions.get_mut(&event.question_id) {
            return q.apply_event(event);
        }
        let mut q = QuestionState::new(event.question_id.clone());
        let changed = q.apply_event(event)?;
        self.order.push(event.question_id.clone());
        self.questions.insert(event.question_id.clone(), q);
        Ok(changed)
    }

    pub fn get(&self, question_id: &str) -> Option<&QuestionState> {
        self.questions.get(question_id)
    }

    /// Questions in order of first appearance.
    pub fn iter(&self) -> impl Iterator<Item = &QuestionState> {
        self.order.iter().map(|id| &self.questions[id])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}
