use std::collections::BTreeMap;

use super::{clip01, sort_ranked, Adjustment, RankKey, ScoredTicker, SelectionTier, StrategyError};
use crate::metrics::{MetricFrame, TickerMetrics};
use crate::scaling::{combine_row, invert, scale_or_na};

const VALUATION_WEIGHTS: [f64; 3] = [0.55, 0.25, 0.20];
const BASE_WEIGHTS: [(&str, f64); 7] = [
    ("roe", 0.28),
    ("ic", 0.22),
    ("pm", 0.18),
    ("at", 0.12),
    ("valuation", 0.10),
    ("cr", 0.05),
    ("wcr", 0.05),
];
/// Capex intensity carries a negative weight: it is subtracted.
const QUALITY_WEIGHTS: [(&str, f64); 5] = [
    ("roce", 0.18),
    ("cash_conversion", 0.10),
    ("margin_stability", 0.06),
    ("buyback_yield", 0.04),
    ("capex_intensity", -0.06),
];

/// Valuation subscore from scaled FCF yield and inverted-scaled PB and PE.
/// 0.50 when all three are NA.
pub fn buffett_valuation(fcf_yield: Option<f64>, inv_pb: Option<f64>, inv_pe: Option<f64>) -> f64 {
    combine_row(&VALUATION_WEIGHTS, &[fcf_yield, inv_pb, inv_pe]).unwrap_or(0.5)
}

/// Bonuses and penalties on raw metric values.
pub fn buffett_adjustments(m: &TickerMetrics) -> Vec<Adjustment> {
    let roe = m.profitability.roe;
    let de = m.liquidity.debt_to_equity;
    let ic = m.liquidity.interest_coverage;
    let pm = m.profitability.profit_margin;
    let b = &m.buffett;
    let is = |v: Option<f64>, pred: fn(f64) -> bool| v.is_some_and(pred);

    let mut out = Vec::new();
    if is(roe, |x| x >= 0.15) && is(de, |x| x <= 0.5) {
        out.push(("b.quality", 0.05));
    }
    if is(ic, |x| x >= 10.0) {
        out.push(("b.ic", 0.03));
    }
    if is(pm, |x| x >= 0.15) {
        out.push(("b.pm", 0.02));
    }
    if is(b.owner_earnings_yield, |x| x >= 0.05) {
        out.push(("b.oey", 0.03));
    }
    if is(b.buyback_yield, |x| x >= 0.02) {
        out.push(("b.buyback", 0.02));
    }
    if is(de, |x| x > 1.0) {
        out.push(("p.de", -0.08));
    }
    if is(de, |x| x > 2.0) {
        out.push(("p.de2", -0.05));
    }
    if is(ic, |x| x < 5.0) {
        out.push(("p.ic", -0.05));
    }
    if is(m.valuation.pe, |x| x > 35.0) || is(m.valuation.pb, |x| x > 6.0) {
        out.push(("p.multiple", -0.05));
    }
    if is(b.fcf_ttm, |x| x <= 0.0) {
        out.push(("p.fcf", -0.08));
    }
    out
}

pub fn score_buffett(frame: &MetricFrame) -> Result<Vec<ScoredTicker>, StrategyError> {
    if frame.is_empty() {
        return Err(StrategyError::EmptyUniverse);
    }
    let s = |f: fn(&TickerMetrics) -> Option<f64>| scale_or_na(&frame.column(f));
    let roe = s(|m| m.profitability.roe);
    let ic = s(|m| m.liquidity.interest_coverage);
    let pm = s(|m| m.profitability.profit_margin);
    let at = s(|m| m.profitability.asset_turnover);
    let cr = s(|m| m.liquidity.current_ratio);
    let wcr = s(|m| m.liquidity.working_capital_ratio);
    let fcf_yield = s(|m| m.buffett.fcf_yield);
    let inv_pb = invert(&s(|m| m.valuation.pb));
    let inv_pe = invert(&s(|m| m.valuation.pe));
    let roce = s(|m| m.buffett.roce);
    let cash_conversion = s(|m| m.buffett.cash_conversion);
    let margin_stability = s(|m| m.buffett.margin_stability);
    let buyback = s(|m| m.buffett.buyback_yield);
    let capex = s(|m| m.buffett.capex_intensity);

    let base_w: Vec<f64> = BASE_WEIGHTS.iter().map(|(_, w)| *w).collect();
    let quality_w: Vec<f64> = QUALITY_WEIGHTS.iter().map(|(_, w)| *w).collect();

    let scored = frame
        .rows
        .iter()
        .enumerate()
        .map(|(i, (ticker, m))| {
            let valuation =
                buffett_valuation(fcf_yield.values[i], inv_pb.values[i], inv_pe.values[i]);
            let base_row = [
                roe.values[i],
                ic.values[i],
                pm.values[i],
                at.values[i],
                Some(valuation),
                cr.values[i],
                wcr.values[i],
            ];
            let quality_row = [
                roce.values[i],
                cash_conversion.values[i],
                margin_stability.values[i],
                buyback.values[i],
                capex.values[i],
            ];
            let mut components = BTreeMap::new();
            let base = contributions(&BASE_WEIGHTS, &base_w, &base_row, &mut components)
                .expect("valuation is always present");
            let quality = contributions(&QUALITY_WEIGHTS, &quality_w, &quality_row, &mut components)
                .unwrap_or(0.0);
            let mut total = base + quality;
            for (key, delta) in buffett_adjustments(m) {
                total += delta;
                components.insert(key.to_string(), delta);
            }
            components.insert("base".into(), base);
            components.insert("quality_plus".into(), quality);
            components.insert("valuation".into(), valuation);
            ScoredTicker {
                ticker: ticker.clone(),
                score: clip01(total),
                eligible: true,
                tier: SelectionTier::Fill,
                components,
                rank_keys: vec![
                    RankKey::higher(m.profitability.roe),
                    RankKey::higher(m.liquidity.interest_coverage),
                    RankKey::lower(m.liquidity.debt_to_equity),
                    RankKey::higher(m.profitability.profit_margin),
                    RankKey::higher(m.buffett.roce),
                ],
            }
        })
        .collect();
    Ok(sort_ranked(scored))
}

/// Renormalized weighted sum that also records each `c.<key>` contribution.
fn contributions(
    keys: &[(&str, f64)],
    weights: &[f64],
    row: &[Option<f64>],
    components: &mut BTreeMap<String, f64>,
) -> Option<f64> {
    let available: Vec<bool> = row.iter().map(Option::is_some).collect();
    let eff = crate::scaling::renormalized_weights(weights, &available)?;
    let mut sum = 0.0;
    for ((key, _), (w, x)) in keys.iter().zip(eff.iter().zip(row)) {
        if let Some(x) = x {
            sum += w * x;
            components.insert(format!("c.{key}"), w * x);
        }
    }
    Some(sum)
}
