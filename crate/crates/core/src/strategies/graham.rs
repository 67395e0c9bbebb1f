use std::collections::BTreeMap;

use super::{clip01, sort_ranked, Adjustment, RankKey, ScoredTicker, SelectionTier, StrategyError};
use crate::metrics::MetricFrame;
use crate::scaling::{renormalized_weights, scale_or_na};

/// Component keys and weights of the base score.
const WEIGHTS: [(&str, f64); 6] = [
    ("cr", 0.25),
    ("roe", 0.20),
    ("pm", 0.20),
    ("at", 0.15),
    ("wc", 0.10),
    ("ic", 0.10),
];

/// Raw (unscaled) values the penalty and bonus thresholds look at.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GrahamRaw {
    pub current_ratio: Option<f64>,
    pub debt_to_equity: Option<f64>,
    pub interest_coverage: Option<f64>,
    pub roe: Option<f64>,
    pub working_capital_ratio: Option<f64>,
}

pub fn graham_adjustments(raw: &GrahamRaw) -> Vec<Adjustment> {
    let fires = |v: Option<f64>, pred: fn(f64) -> bool| v.is_some_and(pred);
    let mut out = Vec::new();
    if fires(raw.debt_to_equity, |x| x > 0.5) {
        out.push(("p.de", -0.05));
    }
    if fires(raw.interest_coverage, |x| x < 5.0) {
        out.push(("p.ic", -0.05));
    }
    if fires(raw.roe, |x| x < 0.05) {
        out.push(("p.roe", -0.05));
    }
    if fires(raw.working_capital_ratio, |x| x > 0.20) {
        out.push(("b.wc", 0.05));
    }
    if fires(raw.current_ratio, |x| x >= 2.0) {
        out.push(("b.cr", 0.05));
    }
    out
}

pub fn score_graham(frame: &MetricFrame) -> Result<Vec<ScoredTicker>, StrategyError> {
    if frame.is_empty() {
        return Err(StrategyError::EmptyUniverse);
    }
    let columns = [
        scale_or_na(&frame.column(|m| m.liquidity.current_ratio)),
        scale_or_na(&frame.column(|m| m.profitability.roe)),
        scale_or_na(&frame.column(|m| m.profitability.profit_margin)),
        scale_or_na(&frame.column(|m| m.profitability.asset_turnover)),
        scale_or_na(&frame.column(|m| m.liquidity.working_capital_ratio)),
        scale_or_na(&frame.column(|m| m.liquidity.interest_coverage)),
    ];
    let weights: Vec<f64> = WEIGHTS.iter().map(|(_, w)| *w).collect();

    let scored = frame
        .rows
        .iter()
        .enumerate()
        .map(|(i, (ticker, m))| {
            let row: Vec<Option<f64>> = columns.iter().map(|c| c.values[i]).collect();
            let available: Vec<bool> = row.iter().map(Option::is_some).collect();
            let Some(eff) = renormalized_weights(&weights, &available) else {
                return ScoredTicker::ineligible(ticker);
            };
            let mut components = BTreeMap::new();
            let mut base = 0.0;
            for ((key, _), (w, x)) in WEIGHTS.iter().zip(eff.iter().zip(&row)) {
                if let Some(x) = x {
                    base += w * x;
                    components.insert(format!("c.{key}"), w * x);
                }
            }
            let raw = GrahamRaw {
                current_ratio: m.liquidity.current_ratio,
                debt_to_equity: m.liquidity.debt_to_equity,
                interest_coverage: m.liquidity.interest_coverage,
                roe: m.profitability.roe,
                working_capital_ratio: m.liquidity.working_capital_ratio,
            };
            let mut total = base;
            for (key, delta) in graham_adjustments(&raw) {
                total += delta;
                components.insert(key.to_string(), delta);
            }
            components.insert("base".into(), base);
            ScoredTicker {
                ticker: ticker.clone(),
                score: clip01(total),
                eligible: true,
                tier: SelectionTier::Fill,
                components,
                rank_keys: vec![
                    RankKey::higher(raw.current_ratio),
                    RankKey::lower(raw.debt_to_equity),
                    RankKey::higher(m.profitability.profit_margin),
                ],
            }
        })
        .collect();
    Ok(sort_ranked(scored))
}
