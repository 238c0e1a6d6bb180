//! Stateless scoring: the Wilson interval, the spotlight index family, the
//! average-rating baseline and the blended score.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Up/down vote counts for a single answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VoteTally {
    pub up: u64,
    pub down: u64,
}

impl VoteTally {
    pub const fn new(up: u64, down: u64) -> Self {
        Self { up, down }
    }

    /// Total number of votes.
    pub const fn total(&self) -> u64 {
        self.up + self.down
    }

    /// Share of up-votes, `None` when nobody voted.
    pub fn proportion(&self) -> Option<f64> {
        match self.total() {
            0 => None,
            n => Some(self.up as f64 / n as f64),
        }
    }
}

/// Per-question maxima used as spotlight denominators. Every component is at
/// least one; build it through [`effective_maxima`] or [`Maxima::new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Maxima {
    n_max: u64,
    u_max: u64,
    d_max: u64,
}

impl Maxima {
    /// Builds maxima with the zero-denominator guard (floor of one) applied.
    pub fn new(n_max: u64, u_max: u64, d_max: u64) -> Self {
        effective_maxima(n_max, u_max, d_max, 1)
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn u_max(&self) -> u64 {
        self.u_max
    }

    pub fn d_max(&self) -> u64 {
        self.d_max
    }

    /// Whether `tally` fits under these maxima.
    pub fn covers(&self, tally: VoteTally) -> bool {
        tally.total() <= self.n_max && tally.up <= self.u_max && tally.down <= self.d_max
    }
}

/// Replaces each raw maximum by `max(raw, floor)`.
///
/// A floor of one only guards the denominator; larger floors damp the
/// spotlight index while a question has received few votes.
pub fn effective_maxima(raw_n_max: u64, raw_u_max: u64, raw_d_max: u64, floor: u64) -> Maxima {
    let floor = floor.max(1);
    Maxima {
        n_max: raw_n_max.max(floor),
        u_max: raw_u_max.max(floor),
        d_max: raw_d_max.max(floor),
    }
}

/// Which vote quantity a spotlight index measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiKind {
    /// `u + d` over `n_max`.
    Whole,
    /// `u - d` over `n_max`.
    Net,
    /// `u` over `n_max`.
    Positive,
    /// `-d` over `n_max`.
    Negative,
    /// `u` over `u_max`.
    UpVote,
    /// `-d` over `d_max`.
    DownVote,
}

impl SiKind {
    pub const ALL: [SiKind; 6] = [
        SiKind::Whole,
        SiKind::Net,
        SiKind::Positive,
        SiKind::Negative,
        SiKind::UpVote,
        SiKind::DownVote,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SiKind::Whole => "whole",
            SiKind::Net => "net",
            SiKind::Positive => "positive",
            SiKind::Negative => "negative",
            SiKind::UpVote => "upvote",
            SiKind::DownVote => "downvote",
        }
    }

    /// True for the kinds normalized by `n_max`.
    pub fn uses_n_max(&self) -> bool {
        matches!(self, SiKind::Whole | SiKind::Net | SiKind::Positive | SiKind::Negative)
    }
}

impl fmt::Display for SiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown value `{value}` for {what}")]
pub struct ParseEnumError {
    pub what: &'static str,
    pub value: String,
}

impl FromStr for SiKind {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SiKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseEnumError {
                what: "kind",
                value: s.to_string(),
            })
    }
}

/// Monotone reshaping applied on top of a spotlight kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SiTransform {
    Linear,
    /// Base-10 logarithm with `+1` offsets.
    Logarithmic,
    Exponential,
    /// Power function with exponent `a > 0`.
    Polynomial(f64),
}

impl SiTransform {
    pub fn name(&self) -> &'static str {
        match self {
            SiTransform::Linear => "linear",
            SiTransform::Logarithmic => "log",
            SiTransform::Exponential => "exp",
            SiTransform::Polynomial(_) => "poly",
        }
    }

    /// Parses a transform name; `poly` takes its exponent from `poly_a`.
    pub fn parse(name: &str, poly_a: f64) -> Result<Self, ParseEnumError> {
        match name.to_ascii_lowercase().as_str() {
            "linear" => Ok(SiTransform::Linear),
            "log" | "logarithmic" => Ok(SiTransform::Logarithmic),
            "exp" | "exponential" => Ok(SiTransform::Exponential),
            "poly" | "polynomial" => Ok(SiTransform::Polynomial(poly_a)),
            _ => Err(ParseEnumError {
                what: "transform",
                value: name.to_string(),
            }),
        }
    }
}

impl fmt::Display for SiTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiTransform::Polynomial(a) => write!(f, "poly{a}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Which end of the Wilson interval feeds the blended score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Bound {
    #[default]
    Lower,
    Upper,
}

impl Bound {
    pub fn as_str(&self) -> &'static str {
        match self {
            Bound::Lower => "lower",
            Bound::Upper => "upper",
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bound {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(Bound::Lower),
            "upper" => Ok(Bound::Upper),
            _ => Err(ParseEnumError {
                what: "bound",
                value: s.to_string(),
            }),
        }
    }
}

/// Denominator form of the linear whole index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SiDenominator {
    /// `n / n_max`
    #[default]
    NMax,
    /// `n / (n_max + 1)`
    NMaxPlusOne,
    /// `(n + 1) / (n_max + 1)`
    NPlusOneOverNMaxPlusOne,
}

impl SiDenominator {
    pub fn as_str(&self) -> &'static str {
        match self {
            SiDenominator::NMax => "nmax",
            SiDenominator::NMaxPlusOne => "nmax-plus-one",
            SiDenominator::NPlusOneOverNMaxPlusOne => "n-plus-one",
        }
    }
}

impl FromStr for SiDenominator {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nmax" => Ok(SiDenominator::NMax),
            "nmax-plus-one" => Ok(SiDenominator::NMaxPlusOne),
            "n-plus-one" => Ok(SiDenominator::NPlusOneOverNMaxPlusOne),
            _ => Err(ParseEnumError {
                what: "si-denominator",
                value: s.to_string(),
            }),
        }
    }
}

/// Parameters of the blended score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    /// Normal quantile controlling the interval width.
    pub z: f64,
    /// Weight `P` of the Wilson term; the spotlight index gets `1 - P`.
    pub p_weight: f64,
    pub si_kind: SiKind,
    pub si_transform: SiTransform,
    pub bound: Bound,
    pub n_max_floor: u64,
    pub si_denominator: SiDenominator,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            z: 2.0,
            p_weight: 0.5,
            si_kind: SiKind::Whole,
            si_transform: SiTransform::Linear,
            bound: Bound::Lower,
            n_max_floor: 1,
            si_denominator: SiDenominator::NMax,
        }
    }
}

impl ScoringConfig {
    pub fn validate(self) -> Result<Self, ConfigError> {
        validate_config(self)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} = {value} is out of range [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("z = {0} must be a finite non-negative number")]
    NegativeZ(f64),
    #[error("polynomial exponent a = {0} must be positive")]
    NonPositiveExponent(f64),
    #[error("n_max floor = {0} must be at least 1")]
    NonPositiveFloor(u64),
}

impl ConfigError {
    /// Name of the offending field.
    pub fn field(&self) -> &'static str {
        match self {
            ConfigError::OutOfRange { field, .. } => field,
            ConfigError::NegativeZ(_) => "z",
            ConfigError::NonPositiveExponent(_) => "poly_a",
            ConfigError::NonPositiveFloor(_) => "n_max_floor",
        }
    }
}

/// Returns `config` unchanged when every field is in range.
pub fn validate_config(config: ScoringConfig) -> Result<ScoringConfig, ConfigError> {
    if !(config.p_weight >= 0.0 && config.p_weight <= 1.0) {
        return Err(ConfigError::OutOfRange {
            field: "p_weight",
            value: config.p_weight,
        });
    }
    if !(config.z >= 0.0 && config.z.is_finite()) {
        return Err(ConfigError::NegativeZ(config.z));
    }
    if let SiTransform::Polynomial(a) = config.si_transform {
        if !(a > 0.0 && a.is_finite()) {
            return Err(ConfigError::NonPositiveExponent(a));
        }
    }
    if config.n_max_floor == 0 {
        return Err(ConfigError::NonPositiveFloor(config.n_max_floor));
    }
    Ok(config)
}

/// Two-sided Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
}

impl WilsonInterval {
    pub fn get(&self, bound: Bound) -> f64 {
        match bound {
            Bound::Lower => self.lower,
            Bound::Upper => self.upper,
        }
    }
}

/// Wilson score interval for `tally` at quantile `z`.
///
/// With no votes the interval is `(0, 1)`. Results are clamped so that
/// `0 <= lower <= p <= upper <= 1` survives rounding.
pub fn wilson_interval(tally: VoteTally, z: f64) -> WilsonInterval {
    let n = tally.total();
    if n == 0 {
        return WilsonInterval { lower: 0.0, upper: 1.0 };
    }
    let n = n as f64;
    let p = tally.up as f64 / n;
    let z2 = z * z;
    let center = p + z2 / (2.0 * n);
    let spread = z / (2.0 * n) * (4.0 * n * (1.0 - p) * p + z2).sqrt();
    let denom = 1.0 + z2 / n;
    WilsonInterval {
        lower: ((center - spread) / denom).clamp(0.0, p),
        upper: ((center + spread) / denom).clamp(p, 1.0),
    }
}

/// Plain up-vote share, `0` when there are no votes.
pub fn average_rating(tally: VoteTally) -> f64 {
    tally.proportion().unwrap_or(0.0)
}

fn signum(x: i128) -> f64 {
    match x.cmp(&0) {
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => 1.0,
    }
}

/// Spotlight index of `tally` relative to `maxima`.
///
/// Uses the `n / n_max` denominator for the whole index; see
/// [`spotlight_index_with`] for the `+1` variants.
pub fn spotlight_index(tally: VoteTally, maxima: Maxima, kind: SiKind, transform: SiTransform) -> f64 {
    spotlight_index_with(tally, maxima, kind, transform, SiDenominator::NMax)
}

pub fn spotlight_index_with(
    tally: VoteTally,
    maxima: Maxima,
    kind: SiKind,
    transform: SiTransform,
    denominator: SiDenominator,
) -> f64 {
    let u = tally.up;
    let d = tally.down;
    let n = tally.total();
    let net = u as i128 - d as i128;
    let net_abs = net.unsigned_abs() as f64;
    let (u, d, n) = (u as f64, d as f64, n as f64);
    let n_max = maxima.n_max as f64;
    let u_max = maxima.u_max as f64;
    let d_max = maxima.d_max as f64;

    match transform {
        SiTransform::Linear => match kind {
            SiKind::Whole => match denominator {
                SiDenominator::NMax => n / n_max,
                SiDenominator::NMaxPlusOne => n / (n_max + 1.0),
                SiDenominator::NPlusOneOverNMaxPlusOne => (n + 1.0) / (n_max + 1.0),
            },
            SiKind::Net => net as f64 / n_max,
            SiKind::Positive => u / n_max,
            SiKind::Negative => -d / n_max,
            SiKind::UpVote => u / u_max,
            SiKind::DownVote => -d / d_max,
        },
        SiTransform::Logarithmic => {
            let log_ratio = |x: f64, m: f64| (x + 1.0).log10() / (m + 1.0).log10();
            match kind {
                SiKind::Whole => log_ratio(n, n_max),
                SiKind::Net => signum(net) * log_ratio(net_abs, n_max),
                SiKind::Positive => log_ratio(u, n_max),
                SiKind::Negative => -log_ratio(d, n_max),
                SiKind::UpVote => log_ratio(u, u_max),
                SiKind::DownVote => -log_ratio(d, d_max),
            }
        }
        // The exponent difference is formed first so large counts never
        // produce inf/inf.
        SiTransform::Exponential => match kind {
            SiKind::Whole => (n - n_max).exp(),
            SiKind::Net => (net as f64 - n_max).exp(),
            SiKind::Positive => (u - n_max).exp(),
            SiKind::Negative => -(d - n_max).exp(),
            SiKind::UpVote => (u - u_max).exp(),
            SiKind::DownVote => -(d - d_max).exp(),
        },
        SiTransform::Polynomial(a) => match kind {
            SiKind::Whole => (n / n_max).powf(a),
            SiKind::Net => signum(net) * (net_abs / n_max).powf(a),
            SiKind::Positive => (u / n_max).powf(a),
            SiKind::Negative => -(d / n_max).powf(a),
            SiKind::UpVote => (u / u_max).powf(a),
            SiKind::DownVote => -(d / d_max).powf(a),
        },
    }
}

/// Closed range every index of `kind` falls into, whatever the transform.
pub fn si_range(kind: SiKind, _transform: SiTransform) -> (f64, f64) {
    match kind {
        SiKind::Whole | SiKind::Positive | SiKind::UpVote => (0.0, 1.0),
        SiKind::Net => (-1.0, 1.0),
        SiKind::Negative | SiKind::DownVote => (-1.0, 0.0),
    }
}

/// All the parts that went into one answer's score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBreakdown {
    pub wilson: WilsonInterval,
    /// The Wilson bound selected by the configuration.
    pub wilson_used: f64,
    pub si: f64,
    pub combined: f64,
}

/// `P * W + (1 - P) * SI`. Not clamped: negative-kind indices can push the
/// score below zero.
pub fn combined_score(tally: VoteTally, maxima: Maxima, config: &ScoringConfig) -> ScoreBreakdown {
    let wilson = wilson_interval(tally, config.z);
    let wilson_used = wilson.get(config.bound);
    let si = spotlight_index_with(
        tally,
        maxima,
        config.si_kind,
        config.si_transform,
        config.si_denominator,
    );
    let combined = config.p_weight * wilson_used + (1.0 - config.p_weight) * si;
    ScoreBreakdown {
        wilson,
        wilson_used,
        si,
        combined,
    }
}

/// A way of turning a tally into a ranking score: the blended method or one
/// of the two baselines it is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scorer {
    /// Wilson bound alone.
    OriginalWilson {
        z: f64,
        bound: Bound,
    },
    /// Up-vote share.
    AverageRating,
    Improved(ScoringConfig),
}

impl Scorer {
    pub fn validate(self) -> Result<Self, ConfigError> {
        match self {
            Scorer::OriginalWilson { z, .. } if !(z >= 0.0 && z.is_finite()) => Err(ConfigError::NegativeZ(z)),
            Scorer::Improved(c) => validate_config(c).map(Scorer::Improved),
            other => Ok(other),
        }
    }

    /// Short stable identifier, e.g. `wilson`, `average`, `improved`.
    pub fn name(&self) -> &'static str {
        match self {
            Scorer::OriginalWilson { .. } => "wilson",
            Scorer::AverageRating => "average",
            Scorer::Improved(_) => "improved",
        }
    }

    /// Human-readable label that also encodes the parameters.
    pub fn label(&self) -> String {
        match self {
            Scorer::OriginalWilson { z, bound } => format!("wilson(z={z},{bound})"),
            Scorer::AverageRating => "average".to_string(),
            Scorer::Improved(c) => format!(
                "improved(z={},P={},{},{},{})",
                c.z, c.p_weight, c.si_kind, c.si_transform, c.bound
            ),
        }
    }

    /// Floor applied to raw maxima before scoring.
    pub fn n_max_floor(&self) -> u64 {
        match self {
            Scorer::Improved(c) => c.n_max_floor,
            _ => 1,
        }
    }

    /// Scores one tally. Baselines report `si = 0` and put their value in
    /// both `wilson_used` and `combined`.
    pub fn breakdown(&self, tally: VoteTally, maxima: Maxima) -> ScoreBreakdown {
        match self {
            Scorer::Improved(c) => combined_score(tally, maxima, c),
            Scorer::OriginalWilson { z, bound } => {
                let wilson = wilson_interval(tally, *z);
                let value = wilson.get(*bound);
                ScoreBreakdown {
                    wilson,
                    wilson_used: value,
                    si: 0.0,
                    combined: value,
                }
            }
            Scorer::AverageRating => {
                let value = average_rating(tally);
                ScoreBreakdown {
                    wilson: wilson_interval(tally, 0.0),
                    wilson_used: value,
                    si: 0.0,
                    combined: value,
                }
            }
        }
    }

    pub fn score(&self, tally: VoteTally, maxima: Maxima) -> f64 {
        self.breakdown(tally, maxima).combined
    }
}
