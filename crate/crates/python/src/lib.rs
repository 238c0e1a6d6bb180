//! Python bindings for `spotrank-core`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spotrank_core as core;
use spotrank_core::{Bound as IntervalBound, Maxima, Scorer, SiDenominator, SiKind, SiTransform, VoteTally};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(kind: &str) -> PyResult<SiKind> {
    kind.parse().map_err(value_err)
}

#[pyclass(name = "ScoringConfig", module = "spotrank", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyScoringConfig {
    inner: core::ScoringConfig,
}

#[pymethods]
impl PyScoringConfig {
    #[new]
    #[pyo3(signature = (z=2.0, p_weight=0.5, kind="whole", transform="linear", poly_a=2.0, bound="lower", n_max_floor=1, si_denominator="nmax"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        z: f64,
        p_weight: f64,
        kind: &str,
        transform: &str,
        poly_a: f64,
        bound: &str,
        n_max_floor: u64,
        si_denominator: &str,
    ) -> PyResult<Self> {
        let inner = core::ScoringConfig {
            z,
            p_weight,
            si_kind: parse_kind(kind)?,
            si_transform: SiTransform::parse(transform, poly_a).map_err(value_err)?,
            bound: bound.parse::<IntervalBound>().map_err(value_err)?,
            n_max_floor,
            si_denominator: si_denominator.parse::<SiDenominator>().map_err(value_err)?,
        }
        .validate()
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn z(&self) -> f64 {
        self.inner.z
    }

    #[getter]
    fn p_weight(&self) -> f64 {
        self.inner.p_weight
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.si_kind.as_str()
    }

    #[getter]
    fn transform(&self) -> String {
        self.inner.si_transform.to_string()
    }

    #[getter]
    fn bound(&self) -> &'static str {
        self.inner.bound.as_str()
    }

    #[getter]
    fn n_max_floor(&self) -> u64 {
        self.inner.n_max_floor
    }

    fn __repr__(&self) -> String {
        format!("ScoringConfig({})", Scorer::Improved(self.inner).label())
    }
}

#[pyclass(name = "ScoreBreakdown", module = "spotrank", frozen, get_all)]
pub struct PyScoreBreakdown {
    wilson_lower: f64,
    wilson_upper: f64,
    wilson_used: f64,
    si: f64,
    combined: f64,
}

impl From<core::ScoreBreakdown> for PyScoreBreakdown {
    fn from(b: core::ScoreBreakdown) -> Self {
        Self {
            wilson_lower: b.wilson.lower,
            wilson_upper: b.wilson.upper,
            wilson_used: b.wilson_used,
            si: b.si,
            combined: b.combined,
        }
    }
}

#[pymethods]
impl PyScoreBreakdown {
    fn __repr__(&self) -> String {
        format!(
            "ScoreBreakdown(wilson=({}, {}), si={}, combined={})",
            self.wilson_lower, self.wilson_upper, self.si, self.combined
        )
    }
}

/// Wilson score interval `(lower, upper)`.
#[pyfunction]
fn wilson_interval(up: u64, down: u64, z: f64) -> (f64, f64) {
    let w = core::wilson_interval(VoteTally::new(up, down), z);
    (w.lower, w.upper)
}

#[pyfunction]
fn average_rating(up: u64, down: u64) -> f64 {
    core::average_rating(VoteTally::new(up, down))
}

/// Floors raw `(n_max, u_max, d_max)`.
#[pyfunction]
#[pyo3(signature = (n_max, u_max, d_max, floor=1))]
fn effective_maxima(n_max: u64, u_max: u64, d_max: u64, floor: u64) -> (u64, u64, u64) {
    let m = core::effective_maxima(n_max, u_max, d_max, floor);
    (m.n_max(), m.u_max(), m.d_max())
}

#[pyfunction]
#[pyo3(signature = (up, down, n_max, u_max, d_max, kind="whole", transform="linear", poly_a=2.0, si_denominator="nmax"))]
#[allow(clippy::too_many_arguments)]
fn spotlight_index(
    up: u64,
    down: u64,
    n_max: u64,
    u_max: u64,
    d_max: u64,
    kind: &str,
    transform: &str,
    poly_a: f64,
    si_denominator: &str,
) -> PyResult<f64> {
    Ok(core::spotlight_index_with(
        VoteTally::new(up, down),
        Maxima::new(n_max, u_max, d_max),
        parse_kind(kind)?,
        SiTransform::parse(transform, poly_a).map_err(value_err)?,
        si_denominator.parse().map_err(value_err)?,
    ))
}

#[pyfunction]
fn si_range(kind: &str) -> PyResult<(f64, f64)> {
    Ok(core::si_range(parse_kind(kind)?, SiTransform::Linear))
}

/// Blended score of one tally; maxima are floored per the config.
#[pyfunction]
fn combined_score(
    up: u64,
    down: u64,
    n_max: u64,
    u_max: u64,
    d_max: u64,
    config: &PyScoringConfig,
) -> PyScoreBreakdown {
    let maxima = core::effective_maxima(n_max, u_max, d_max, config.inner.n_max_floor);
    core::combined_score(VoteTally::new(up, down), maxima, &config.inner).into()
}

#[pyfunction]
fn kendall_tau(a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
    core::kendall_tau(&a, &b).map_err(value_err)
}

fn scorer_from(name: &str, config: &core::ScoringConfig) -> PyResult<Scorer> {
    match name {
        "improved" => Ok(Scorer::Improved(*config)),
        "wilson" => Ok(Scorer::OriginalWilson {
            z: config.z,
            bound: config.bound,
        }),
        "average" => Ok(Scorer::AverageRating),
        other => Err(PyValueError::new_err(format!("unknown scorer `{other}`"))),
    }
}

/// Score grid as a list of rows (one per up-vote value).
#[pyfunction]
#[pyo3(signature = (u_range=1000, d_range=1000, step=1, n_max=2000, u_max=1000, d_max=1000, scorer="improved", config=None))]
#[allow(clippy::too_many_arguments)]
fn grid_scores(
    u_range: u64,
    d_range: u64,
    step: u64,
    n_max: u64,
    u_max: u64,
    d_max: u64,
    scorer: &str,
    config: Option<&PyScoringConfig>,
) -> PyResult<Vec<Vec<f64>>> {
    let config = config.map(|c| c.inner).unwrap_or_default();
    let spec = core::GridSpec {
        u_range,
        d_range,
        step,
        maxima: Maxima::new(n_max, u_max, d_max),
        scorer: scorer_from(scorer, &config)?,
    };
    let grid = core::grid_scores(&spec).map_err(value_err)?;
    Ok(grid.values.chunks(grid.cols()).map(<[f64]>::to_vec).collect())
}

/// Online state of one question.
#[pyclass(name = "QuestionState", module = "spotrank")]
pub struct PyQuestionState {
    inner: core::QuestionState,
}

#[pymethods]
impl PyQuestionState {
    #[new]
    #[pyo3(signature = (question_id="q"))]
    fn new(question_id: &str) -> Self {
        Self {
            inner: core::QuestionState::new(question_id),
        }
    }

    /// Applies a vote delta; returns whether any cached maximum changed.
    fn apply_event(&mut self, answer_id: &str, up_delta: i64, down_delta: i64) -> PyResult<bool> {
        let event = core::VoteEvent::new(self.inner.question_id(), answer_id, up_delta, down_delta);
        self.inner.apply_event(&event).map_err(value_err)
    }

    fn tally(&self, answer_id: &str) -> Option<(u64, u64)> {
        self.inner.get(answer_id).map(|e| (e.tally.up, e.tally.down))
    }

    /// Cached raw `(n_max, u_max, d_max)`.
    fn raw_maxima(&self) -> (u64, u64, u64) {
        let m = self.inner.raw_maxima();
        (m.n_max, m.u_max, m.d_max)
    }

    fn recompute_maxima(&self) -> (u64, u64, u64) {
        let m = self.inner.recompute_maxima();
        (m.n_max, m.u_max, m.d_max)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `[(answer_id, up, down, breakdown), ...]` best first.
    fn rank(&self, config: &PyScoringConfig) -> Vec<(String, u64, u64, PyScoreBreakdown)> {
        self.inner
            .rank(&config.inner)
            .entries
            .into_iter()
            .map(|e| (e.answer_id, e.tally.up, e.tally.down, e.breakdown.into()))
            .collect()
    }
}

/// Runs a seeded simulation and returns the stability report as a dict.
#[pyfunction]
#[pyo3(signature = (profiles, events, seed=0, cadence=100, scorers=vec!["wilson".to_string(), "improved".to_string()], config=None))]
fn simulate<'py>(
    py: Python<'py>,
    profiles: Vec<(String, f64, f64)>,
    events: u64,
    seed: u64,
    cadence: u64,
    scorers: Vec<String>,
    config: Option<&PyScoringConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = config.map(|c| c.inner).unwrap_or_default();
    let scorers = scorers
        .iter()
        .map(|s| scorer_from(s, &config))
        .collect::<PyResult<Vec<_>>>()?;
    let spec = core::StreamSpec {
        profiles: profiles
            .into_iter()
            .map(|(id, p, w)| core::AnswerProfile::new(id, p, w))
            .collect(),
        total_events: events,
        seed,
    };
    let trajectory = core::simulate(&spec, &scorers, cadence).map_err(value_err)?;
    let report = core::stability_report(&trajectory).map_err(value_err)?;
    let last = &trajectory.snapshots[trajectory.snapshots.len() - 1].rankings;

    let out = PyDict::new(py);
    let per_scorer = report
        .scorers
        .iter()
        .zip(last)
        .map(|(s, ranking)| {
            let d = PyDict::new(py);
            d.set_item("label", &s.label)?;
            d.set_item("mean_adjacent_tau", s.mean_adjacent_tau)?;
            d.set_item("rank1_changes", s.rank1_changes)?;
            d.set_item("final_ranking", ranking.ids())?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("scorers", per_scorer)?;
    let agreement: Vec<(usize, usize, f64)> = report.agreement.iter().map(|a| (a.first, a.second, a.tau)).collect();
    out.set_item("agreement", agreement)?;
    let tallies: Vec<(String, u64, u64)> = trajectory
        .final_state
        .entries()
        .iter()
        .map(|e| (e.answer_id.clone(), e.tally.up, e.tally.down))
        .collect();
    out.set_item("final_tallies", tallies)?;
    Ok(out)
}

#[pymodule]
pub fn spotrank(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScoringConfig>()?;
    m.add_class::<PyScoreBreakdown>()?;
    m.add_class::<PyQuestionState>()?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(average_rating, m)?)?;
    m.add_function(wrap_pyfunction!(effective_maxima, m)?)?;
    m.add_function(wrap_pyfunction!(spotlight_index, m)?)?;
    m.add_function(wrap_pyfunction!(si_range, m)?)?;
    m.add_function(wrap_pyfunction!(combined_score, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(grid_scores, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
