//! The five investor scorers plus shared ranking and selection rules.
//!
//! Each scorer returns every ticker in the frame, eligible or not, ordered by
//! the guru's ranking. [`apply_selection`] then cuts the ordered list down to
//! the names that go into the portfolio.

mod altman;
mod buffett;
mod graham;
mod greenblatt;
mod piotroski;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricFrame;

pub use altman::{altman_score, score_altman};
pub use buffett::{buffett_adjustments, buffett_valuation, score_buffett};
pub use graham::{graham_adjustments, score_graham, GrahamRaw};
pub use greenblatt::{competition_ranks, greenblatt_score, score_greenblatt};
pub use piotroski::{piotroski_score, score_piotroski, MIN_EVALUABLE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("empty universe: no eligible tickers")]
    EmptyUniverse,
    #[error("unknown guru {0:?}")]
    UnknownGuru(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guru {
    Graham,
    Altman,
    Greenblatt,
    Piotroski,
    Buffett,
}

impl Guru {
    pub const ALL: [Guru; 5] = [
        Guru::Graham,
        Guru::Buffett,
        Guru::Greenblatt,
        Guru::Piotroski,
        Guru::Altman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Guru::Graham => "graham",
            Guru::Altman => "altman",
            Guru::Greenblatt => "greenblatt",
            Guru::Piotroski => "piotroski",
            Guru::Buffett => "buffett",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Guru::Graham => "Benjamin Graham",
            Guru::Altman => "Edward Altman",
            Guru::Greenblatt => "Joel Greenblatt",
            Guru::Piotroski => "Joseph Piotroski",
            Guru::Buffett => "Warren Buffett",
        }
    }
}

impl fmt::Display for Guru {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Guru {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Guru::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| StrategyError::UnknownGuru(s.to_string()))
    }
}

/// Where a name sits in a tiered selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SelectionTier {
    /// Taken first (Altman Safe, Piotroski F >= 4).
    Preferred,
    /// Used to fill up to K.
    Fill,
    /// Only taken when the whole eligible universe is selected.
    Reserve,
}

/// One tie-break key. NA always sorts after any value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankKey {
    pub value: Option<f64>,
    pub higher_is_better: bool,
}

impl RankKey {
    pub fn higher(value: Option<f64>) -> Self {
        Self { value, higher_is_better: true }
    }

    pub fn lower(value: Option<f64>) -> Self {
        Self { value, higher_is_better: false }
    }

    fn cmp_better_first(&self, other: &Self) -> Ordering {
        match (self.value, other.value) {
            (Some(a), Some(b)) if self.higher_is_better => b.total_cmp(&a),
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredTicker {
    pub ticker: String,
    /// Final score in `[0, 1]`; 0 for ineligible names.
    pub score: f64,
    pub eligible: bool,
    pub tier: SelectionTier,
    /// Intermediate values for audit and reason strings. Keys prefixed `c.`
    /// are weighted contributions, `p.` penalties, `b.` bonuses.
    pub components: BTreeMap<String, f64>,
    pub rank_keys: Vec<RankKey>,
}

impl ScoredTicker {
    pub fn ineligible(ticker: &str) -> Self {
        Self {
            ticker: ticker.to_string(),
            score: 0.0,
            eligible: false,
            tier: SelectionTier::Reserve,
            components: BTreeMap::new(),
            rank_keys: Vec::new(),
        }
    }
}

/// Eligible first, then score descending, then the guru's tie-breakers,
/// then ticker ascending. Never returns `Equal` for distinct tickers.
pub fn rank_order(a: &ScoredTicker, b: &ScoredTicker) -> Ordering {
    b.eligible
        .cmp(&a.eligible)
        .then_with(|| b.score.total_cmp(&a.score))
        .then_with(|| {
            a.rank_keys
                .iter()
                .zip(&b.rank_keys)
                .map(|(x, y)| x.cmp_better_first(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.ticker.cmp(&b.ticker))
}

pub(crate) fn sort_ranked(mut scored: Vec<ScoredTicker>) -> Vec<ScoredTicker> {
    scored.sort_by(rank_order);
    scored
}

pub(crate) fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Threshold adjustment that fired, e.g. `("p.de", -0.05)`.
pub type Adjustment = (&'static str, f64);

/// `K = min(max_k, ceil(fraction * N))`, with every eligible name kept
/// when `N < small_universe_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionRule {
    pub max_k: usize,
    /// Fraction of the eligible universe, in percent.
    pub fraction_pct: usize,
    pub small_universe_threshold: usize,
}

impl Default for SelectionRule {
    fn default() -> Self {
        Self {
            max_k: 30,
            fraction_pct: 30,
            small_universe_threshold: 15,
        }
    }
}

impl SelectionRule {
    pub fn k(&self, n: usize) -> usize {
        self.max_k.min((n * self.fraction_pct).div_ceil(100))
    }
}

/// Ordered subset that goes into the portfolio.
///
/// Graham and Buffett keep every eligible name. Greenblatt takes the top K.
/// Altman and Piotroski take all preferred names when there are at least
/// `small_universe_threshold` of them, otherwise fill down the ranking to K;
/// Altman never fills with Distress names.
pub fn apply_selection(scored: &[ScoredTicker], rule: SelectionRule, guru: Guru) -> Vec<ScoredTicker> {
    let ranked: Vec<ScoredTicker> = sort_ranked(scored.iter().filter(|s| s.eligible).cloned().collect());
    let n = ranked.len();
    if matches!(guru, Guru::Graham | Guru::Buffett) || n < rule.small_universe_threshold {
        return ranked;
    }
    let k = rule.k(n);
    match guru {
        Guru::Greenblatt => ranked.into_iter().take(k).collect(),
        Guru::Altman | Guru::Piotroski => {
            let preferred = ranked.iter().filter(|s| s.tier == SelectionTier::Preferred).count();
            if preferred >= rule.small_universe_threshold {
                return ranked.into_iter().filter(|s| s.tier == SelectionTier::Preferred).collect();
            }
            let mut selected: Vec<ScoredTicker> =
                ranked.iter().filter(|s| s.tier == SelectionTier::Preferred).cloned().collect();
            for s in ranked.iter().filter(|s| s.tier == SelectionTier::Fill) {
                if selected.len() >= k {
                    break;
                }
                selected.push(s.clone());
            }
            sort_ranked(selected)
        }
        Guru::Graham | Guru::Buffett => unreachable!(),
    }
}

/// Scores every ticker in the frame for `guru`, best first.
pub fn score(guru: Guru, frame: &MetricFrame) -> Result<Vec<ScoredTicker>, StrategyError> {
    match guru {
        Guru::Graham => score_graham(frame),
        Guru::Altman => score_altman(frame),
        Guru::Greenblatt => score_greenblatt(frame),
        Guru::Piotroski => score_piotroski(frame),
        Guru::Buffett => score_buffett(frame),
    }
}

/// Scoring followed by the guru's selection rule.
pub fn select(guru: Guru, frame: &MetricFrame) -> Result<Vec<ScoredTicker>, StrategyError> {
    let scored = score(guru, frame)?;
    Ok(apply_selection(&scored, SelectionRule::default(), guru))
}
