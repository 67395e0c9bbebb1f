use std::collections::BTreeMap;

use super::{clip01, sort_ranked, RankKey, ScoredTicker, SelectionTier, StrategyError};
use crate::metrics::MetricFrame;

/// Descending competition ranks ("1224"): a value's rank is one plus the
/// number of strictly larger values.
pub fn competition_ranks(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|o| *o > v).count())
        .collect()
}

/// `1 - (combined_rank - 2) / (2N - 2)`, or 1 when `N == 1`.
pub fn greenblatt_score(combined_rank: usize, n: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    1.0 - (combined_rank as f64 - 2.0) / (2.0 * n as f64 - 2.0)
}

pub fn score_greenblatt(frame: &MetricFrame) -> Result<Vec<ScoredTicker>, StrategyError> {
    let eligible: Vec<(&String, f64, f64)> = frame
        .rows
        .iter()
        .filter_map(|(ticker, m)| {
            let g = &m.greenblatt;
            match (g.earnings_yield, g.roic, g.ev) {
                (Some(ey), Some(roic), Some(ev)) if ey > 0.0 && roic > 0.0 && ev > 0.0 => {
                    Some((ticker, ey, roic))
                }
                _ => None,
            }
        })
        .collect();
    if eligible.is_empty() {
        return Err(StrategyError::EmptyUniverse);
    }
    let n = eligible.len();
    let ey: Vec<f64> = eligible.iter().map(|e| e.1).collect();
    let roic: Vec<f64> = eligible.iter().map(|e| e.2).collect();
    let rank_ey = competition_ranks(&ey);
    let rank_roic = competition_ranks(&roic);

    let mut by_ticker: BTreeMap<&str, ScoredTicker> = BTreeMap::new();
    for (i, (ticker, ey, roic)) in eligible.iter().enumerate() {
        let m = &frame.rows[*ticker];
        let combined = rank_ey[i] + rank_roic[i];
        let base = greenblatt_score(combined, n);
        let mut components = BTreeMap::from([
            ("rank_ey".to_string(), rank_ey[i] as f64),
            ("rank_roic".to_string(), rank_roic[i] as f64),
            ("combined_rank".to_string(), combined as f64),
            ("n".to_string(), n as f64),
            ("base".to_string(), base),
        ]);
        let mut total = base;
        if m.liquidity.interest_coverage.is_some_and(|ic| ic < 3.0) {
            total -= 0.03;
            components.insert("p.ic".into(), -0.03);
        }
        if m.liquidity.debt_to_equity.is_some_and(|de| de > 1.0) {
            total -= 0.03;
            components.insert("p.de".into(), -0.03);
        }
        by_ticker.insert(
            ticker.as_str(),
            ScoredTicker {
                ticker: (*ticker).clone(),
                score: clip01(total),
                eligible: true,
                tier: SelectionTier::Fill,
                components,
                rank_keys: vec![RankKey::higher(Some(*ey)), RankKey::higher(Some(*roic))],
            },
        );
    }
    let scored = frame
        .tickers()
        .map(|t| by_ticker.remove(t).unwrap_or_else(|| ScoredTicker::ineligible(t)))
        .collect();
    Ok(sort_ranked(scored))
}
