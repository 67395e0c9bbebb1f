use std::collections::BTreeMap;

use super::{clip01, sort_ranked, RankKey, ScoredTicker, SelectionTier, StrategyError};
use crate::metrics::{AltmanModel, Band, MetricFrame};

/// Position of `z` between the model's distress and safe cutoffs, clipped to `[0, 1]`.
pub fn altman_score(model: AltmanModel, z: f64) -> f64 {
    let (lower, upper) = model.cutoffs();
    clip01((z - lower) / (upper - lower))
}

pub fn score_altman(frame: &MetricFrame) -> Result<Vec<ScoredTicker>, StrategyError> {
    if frame.is_empty() {
        return Err(StrategyError::EmptyUniverse);
    }
    let scored = frame
        .rows
        .iter()
        .map(|(ticker, m)| {
            let row = &m.altman;
            let (Some(model), Some(z), Some(band)) = (row.model, row.z_score, row.band) else {
                return ScoredTicker::ineligible(ticker);
            };
            let mut components = BTreeMap::new();
            components.insert("z".to_string(), z);
            components.insert("model".to_string(), model as u8 as f64);
            components.insert("band".to_string(), band as u8 as f64);
            for (label, coef, x) in model.terms(&row.ratios) {
                if let Some(x) = x {
                    components.insert(format!("c.{label}"), coef * x);
                }
            }
            if let Some(de) = m.liquidity.debt_to_equity {
                components.insert("raw.de".to_string(), de);
            }
            ScoredTicker {
                ticker: ticker.clone(),
                score: altman_score(model, z),
                eligible: true,
                tier: match band {
                    Band::Safe => SelectionTier::Preferred,
                    Band::Grey => SelectionTier::Fill,
                    Band::Distress => SelectionTier::Reserve,
                },
                components,
                rank_keys: vec![
                    RankKey::higher(Some(z)),
                    RankKey::higher(row.ratios.ebit_ta),
                    RankKey::lower(m.liquidity.debt_to_equity),
                ],
            }
        })
        .collect();
    Ok(sort_ranked(scored))
}
