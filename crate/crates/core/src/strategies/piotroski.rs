use std::collections::BTreeMap;

use super::{sort_ranked, RankKey, ScoredTicker, SelectionTier, StrategyError};
use crate::metrics::{MetricFrame, PiotroskiRow, PIOTROSKI_SIGNALS};

/// Fewest non-NA signals a ticker needs to be scored.
pub const MIN_EVALUABLE: u8 = 4;

/// `F / 9`, or `None` when fewer than [`MIN_EVALUABLE`] signals are evaluable.
pub fn piotroski_score(row: &PiotroskiRow) -> Option<f64> {
    (row.evaluable >= MIN_EVALUABLE).then(|| f64::from(row.f_score) / 9.0)
}

pub fn score_piotroski(frame: &MetricFrame) -> Result<Vec<ScoredTicker>, StrategyError> {
    if frame.is_empty() {
        return Err(StrategyError::EmptyUniverse);
    }
    let scored = frame
        .rows
        .iter()
        .map(|(ticker, m)| {
            let row = &m.piotroski;
            let Some(score) = piotroski_score(row) else {
                return ScoredTicker::ineligible(ticker);
            };
            let mut components = BTreeMap::from([
                ("f_score".to_string(), f64::from(row.f_score)),
                ("evaluable".to_string(), f64::from(row.evaluable)),
            ]);
            for (name, s) in PIOTROSKI_SIGNALS.iter().zip(row.signals) {
                if let Some(s) = s {
                    components.insert(format!("s.{name}"), if s { 1.0 } else { 0.0 });
                }
            }
            ScoredTicker {
                ticker: ticker.clone(),
                score,
                eligible: true,
                tier: if row.f_score >= 4 {
                    SelectionTier::Preferred
                } else {
                    SelectionTier::Fill
                },
                components,
                rank_keys: vec![
                    RankKey::higher(row.roa_t),
                    RankKey::higher(row.delta_gross_margin),
                ],
            }
        })
        .collect();
    Ok(sort_ranked(scored))
}
