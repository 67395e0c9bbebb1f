//! Score-to-weight allocation and the four-column markdown portfolio table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::QuarterLabel;
use crate::metrics::{AltmanModel, Band, PIOTROSKI_SIGNALS};
use crate::strategies::{Guru, ScoredTicker};

pub const HEADER: &str = "| Ticker | Score | Weight (%) | Reason |";
pub const SEPARATOR: &str = "|--------|-------|------------|--------|";
pub const MAX_REASON_LEN: usize = 120;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PortfolioError {
    #[error("empty portfolio: nothing selected")]
    EmptyPortfolio,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("header mismatch: expected `{HEADER}`, got `{0}`")]
    HeaderMismatch(String),
    #[error("line {line}: bad separator row `{text}`")]
    BadSeparator { line: usize, text: String },
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("line {line}: score `{value}` is not a 2-decimal number in [0.00, 1.00]")]
    BadScoreFormat { line: usize, value: String },
    #[error("line {line}: weight `{value}` is not a non-negative integer")]
    BadWeight { line: usize, value: String },
    #[error("weights sum to {0}, expected 100")]
    WeightSumError(u64),
    #[error("line {line}: empty reason")]
    EmptyReason { line: usize },
    #[error("line {line}: duplicate ticker `{ticker}`")]
    DuplicateTicker { line: usize, ticker: String },
    #[error("line {line}: rows are not ordered by descending score")]
    OutOfOrder { line: usize },
}

/// Score in hundredths, displayed with exactly two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Score(u8);

impl Score {
    /// Rounds half-up to two decimals; input is clipped to `[0, 1]`.
    pub fn from_f64(x: f64) -> Self {
        Score((x.clamp(0.0, 1.0) * 100.0 + 0.5).floor().min(100.0) as u8)
    }

    pub fn hundredths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 100.0
    }

    fn parse(text: &str) -> Option<Self> {
        let b = text.as_bytes();
        let shaped = b.len() == 4
            && b[0].is_ascii_digit()
            && b[1] == b'.'
            && b[2].is_ascii_digit()
            && b[3].is_ascii_digit();
        if !shaped {
            return None;
        }
        let v = u32::from(b[0] - b'0') * 100 + u32::from(b[2] - b'0') * 10 + u32::from(b[3] - b'0');
        (v <= 100).then_some(Score(v as u8))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortfolioRow {
    pub ticker: String,
    pub score: Score,
    /// Integer percent.
    pub weight: u32,
    pub reason: String,
}

/// Validated rows: weights sum to 100, unique tickers, non-empty reasons,
/// scores non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortfolioTable {
    rows: Vec<PortfolioRow>,
}

impl PortfolioTable {
    pub fn new(rows: Vec<PortfolioRow>) -> Result<Self, TableError> {
        let mut seen = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            // data rows start on line 3
            let line = i + 3;
            if row.reason.trim().is_empty() {
                return Err(TableError::EmptyReason { line });
            }
            if row.ticker.is_empty() || row.ticker.contains('|') || row.reason.contains('|') {
                return Err(TableError::MalformedRow {
                    line,
                    message: "cells must be non-empty and must not contain `|`".into(),
                });
            }
            if !seen.insert(row.ticker.as_str()) {
                return Err(TableError::DuplicateTicker {
                    line,
                    ticker: row.ticker.clone(),
                });
            }
            if i > 0 && row.score > rows[i - 1].score {
                return Err(TableError::OutOfOrder { line });
            }
        }
        let sum: u64 = rows.iter().map(|r| u64::from(r.weight)).sum();
        if sum != 100 {
            return Err(TableError::WeightSumError(sum));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PortfolioRow] {
        &self.rows
    }

    pub fn weights(&self) -> BTreeMap<&str, u32> {
        self.rows.iter().map(|r| (r.ticker.as_str(), r.weight)).collect()
    }
}

/// A table tagged with the quarter it was scored for and the guru that built it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuarterPortfolio {
    pub quarter: QuarterLabel,
    pub guru: Guru,
    pub table: PortfolioTable,
}

/// Integer percentages proportional to `scores`.
///
/// All but the last row are rounded half-up and the last row absorbs the
/// remainder. If that remainder would be negative, or every score is zero,
/// falls back to largest-remainder apportionment.
pub fn allocate_weights(scores: &[f64]) -> Result<Vec<u32>, PortfolioError> {
    if scores.is_empty() {
        return Err(PortfolioError::EmptyPortfolio);
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return Ok(largest_remainder(&vec![100.0 / scores.len() as f64; scores.len()]));
    }
    let quotas: Vec<f64> = scores.iter().map(|s| 100.0 * s / total).collect();
    let head = &quotas[..quotas.len() - 1];
    let mut weights: Vec<i64> = head.iter().map(|q| (q + 0.5).floor() as i64).collect();
    let remainder = 100 - weights.iter().sum::<i64>();
    if remainder < 0 {
        return Ok(largest_remainder(&quotas));
    }
    weights.push(remainder);
    Ok(weights.into_iter().map(|w| w as u32).collect())
}

/// Floors every quota and hands the leftover units to the largest
/// fractional parts, earlier rows winning ties.
pub fn largest_remainder(quotas: &[f64]) -> Vec<u32> {
    let mut weights: Vec<u32> = quotas.iter().map(|q| q.max(0.0).floor() as u32).collect();
    let assigned: u32 = weights.iter().sum();
    let mut left = 100u32.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    while left > 0 {
        for &i in &order {
            if left == 0 {
                break;
            }
            weights[i] += 1;
            left -= 1;
        }
    }
    weights
}

/// Builds the table for an already ordered selection.
pub fn allocate(selected: &[ScoredTicker], guru: Guru) -> Result<PortfolioTable, PortfolioError> {
    let scores: Vec<f64> = selected.iter().map(|s| s.score).collect();
    let weights = allocate_weights(&scores)?;
    let rows = selected
        .iter()
        .zip(weights)
        .map(|(s, weight)| PortfolioRow {
            ticker: s.ticker.clone(),
            score: Score::from_f64(s.score),
            weight,
            reason: reason_string(&s.components, guru),
        })
        .collect();
    Ok(PortfolioTable::new(rows).expect("allocation upholds table invariants"))
}

/// Labels of the two largest positive contributions among `labels`, in
/// descending order; ties go to the earlier label.
fn top_two<'a>(components: &BTreeMap<String, f64>, labels: &[(&str, &'a str)]) -> Vec<&'a str> {
    let mut found: Vec<(usize, f64, &str)> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, (key, label))| {
            components
                .get(*key)
                .filter(|v| **v > 0.0)
                .map(|v| (i, *v, *label))
        })
        .collect();
    found.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    found.into_iter().take(2).map(|(_, _, l)| l).collect()
}

fn fired<'a>(components: &BTreeMap<String, f64>, labels: &[(&str, &'a str)]) -> Vec<&'a str> {
    let mut out: Vec<&str> = labels
        .iter()
        .filter(|(key, _)| components.contains_key(*key))
        .map(|(_, label)| *label)
        .collect();
    out.dedup();
    out
}

/// One-sentence rationale built from a scored ticker's components.
pub fn reason_string(components: &BTreeMap<String, f64>, guru: Guru) -> String {
    let text = match guru {
        Guru::Graham => {
            let top = top_two(
                components,
                &[
                    ("c.cr", "liquidity"),
                    ("c.roe", "returns"),
                    ("c.pm", "margins"),
                    ("c.at", "turnover"),
                    ("c.wc", "working capital"),
                    ("c.ic", "coverage"),
                ],
            );
            let mut s = if top.is_empty() {
                "weak fundamentals".to_string()
            } else {
                format!("strong {}", top.join(" & "))
            };
            let dings = fired(
                components,
                &[("p.de", "high D/E"), ("p.ic", "weak coverage"), ("p.roe", "low ROE")],
            );
            if !dings.is_empty() {
                s.push_str(&format!("; dinged for {}", dings.join(" & ")));
            }
            s
        }
        Guru::Buffett => {
            let top = top_two(
                components,
                &[
                    ("c.roe", "high ROE"),
                    ("c.ic", "strong coverage"),
                    ("c.pm", "fat margins"),
                    ("c.at", "efficient assets"),
                    ("c.valuation", "cash-rich valuation"),
                    ("c.cr", "ample liquidity"),
                    ("c.wcr", "solid working capital"),
                ],
            );
            let mut parts: Vec<&str> = top;
            parts.push(if components.contains_key("p.multiple") {
                "rich multiple"
            } else {
                "fair multiple"
            });
            let mut s = parts.join(", ");
            let dings = fired(
                components,
                &[
                    ("p.de", "heavy debt"),
                    ("p.de2", "heavy debt"),
                    ("p.ic", "thin coverage"),
                    ("p.fcf", "negative FCF"),
                ],
            );
            if !dings.is_empty() {
                s.push_str(&format!("; dinged for {}", dings.join(" & ")));
            }
            s
        }
        Guru::Greenblatt => {
            let n = components.get("n").copied().unwrap_or(1.0);
            let half = (n / 2.0).ceil();
            let strong_ey = components.get("rank_ey").is_some_and(|r| *r <= half);
            let strong_roic = components.get("rank_roic").is_some_and(|r| *r <= half);
            let mut s = match (strong_ey, strong_roic) {
                (true, true) => "high EY & ROIC".to_string(),
                (true, false) => "high EY; modest ROIC".to_string(),
                (false, true) => "high ROIC; modest EY".to_string(),
                (false, false) => "modest EY & ROIC".to_string(),
            };
            match (components.contains_key("p.de"), components.contains_key("p.ic")) {
                (true, true) => s.push_str("; mild D/E & coverage penalties"),
                (true, false) => s.push_str("; mild D/E penalty"),
                (false, true) => s.push_str("; mild coverage penalty"),
                (false, false) => {}
            }
            s
        }
        Guru::Piotroski => {
            let f = components.get("f_score").copied().unwrap_or(0.0) as u32;
            let priority = [
                ("roa_positive", "ROA"),
                ("delta_margin", "margins"),
                ("cfo_positive", "cash flow"),
                ("delta_turnover", "turnover"),
                ("delta_liquidity", "liquidity"),
                ("delta_roa", "ROA trend"),
                ("accruals", "accruals"),
                ("delta_leverage", "deleveraging"),
                ("no_equity_issuance", "no dilution"),
            ];
            debug_assert!(priority.iter().all(|(k, _)| PIOTROSKI_SIGNALS.contains(k)));
            let good: Vec<&str> = priority
                .iter()
                .filter(|(k, _)| components.get(&format!("s.{k}")) == Some(&1.0))
                .map(|(_, label)| *label)
                .take(2)
                .collect();
            if good.is_empty() {
                format!("F={f}/9; no positive signals")
            } else {
                format!("F={f}/9; positive {}", good.join(" & "))
            }
        }
        Guru::Altman => {
            let model = match components.get("model").copied().unwrap_or(0.0) as u8 {
                1 => AltmanModel::ZPrime,
                2 => AltmanModel::ZDoublePrime,
                _ => AltmanModel::Z,
            };
            let band = match components.get("band").copied().unwrap_or(1.0) as u8 {
                0 => Band::Safe,
                1 => Band::Grey,
                _ => Band::Distress,
            };
            let z = components.get("z").copied().unwrap_or(0.0);
            let labels: Vec<(String, &str)> = ["WC/TA", "RE/TA", "EBIT/TA", "MVE/TL", "Sales/TA", "BVE/TL"]
                .iter()
                .map(|l| (format!("c.{l}"), *l))
                .collect();
            let label_refs: Vec<(&str, &str)> = labels.iter().map(|(k, l)| (k.as_str(), *l)).collect();
            let top = top_two(components, &label_refs);
            let mut s = format!("{model}={z:.1} {band}");
            if top.is_empty() {
                s.push_str("; weak ratios");
            } else {
                s.push_str(&format!("; strong {}", top.join(" & ")));
            }
            match components.get("raw.de") {
                Some(de) if *de > 1.0 => s.push_str("; high D/E"),
                Some(_) => s.push_str("; modest D/E"),
                None => {}
            }
            s
        }
    };
    debug_assert!(text.len() <= MAX_REASON_LEN);
    text
}

/// Canonical markdown rendering, one line per row, trailing newline.
pub fn render_markdown(table: &PortfolioTable) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(SEPARATOR);
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            row.ticker, row.score, row.weight, row.reason
        ));
    }
    out
}

fn split_cells(line: &str) -> Option<Vec<&str>> {
    let inner = line.strip_prefix('|')?.strip_suffix('|')?;
    Some(inner.split('|').map(str::trim).collect())
}

/// Parses exactly one markdown table and validates it.
pub fn parse_markdown(text: &str) -> Result<PortfolioTable, TableError> {
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    let start = lines.iter().position(|l| !l.is_empty()).unwrap_or(lines.len());
    let end = lines.iter().rposition(|l| !l.is_empty()).map_or(start, |i| i + 1);
    let body = &lines[start..end];

    let header = body.first().copied().unwrap_or("");
    if header.trim_start() != HEADER {
        return Err(TableError::HeaderMismatch(header.to_string()));
    }
    let sep_line = start + 2;
    let separator = body.get(1).copied().unwrap_or("");
    let sep_ok = split_cells(separator.trim_start()).is_some_and(|cells| {
        cells.len() == 4 && cells.iter().all(|c| c.len() >= 3 && c.bytes().all(|b| b == b'-'))
    });
    if !sep_ok {
        return Err(TableError::BadSeparator {
            line: sep_line,
            text: separator.to_string(),
        });
    }

    let mut rows = Vec::new();
    for (offset, raw) in body.iter().enumerate().skip(2) {
        let line = start + offset + 1;
        let cells = split_cells(raw.trim_start()).ok_or_else(|| TableError::MalformedRow {
            line,
            message: "row must start and end with `|`".into(),
        })?;
        if cells.len() != 4 {
            return Err(TableError::MalformedRow {
                line,
                message: format!("expected 4 cells, found {}", cells.len()),
            });
        }
        if cells[0].is_empty() {
            return Err(TableError::MalformedRow {
                line,
                message: "empty ticker".into(),
            });
        }
        let score = Score::parse(cells[1]).ok_or_else(|| TableError::BadScoreFormat {
            line,
            value: cells[1].to_string(),
        })?;
        let weight = if !cells[2].is_empty() && cells[2].bytes().all(|b| b.is_ascii_digit()) {
            cells[2].parse::<u32>().ok()
        } else {
            None
        }
        .ok_or_else(|| TableError::BadWeight {
            line,
            value: cells[2].to_string(),
        })?;
        if cells[3].is_empty() {
            return Err(TableError::EmptyReason { line });
        }
        rows.push(PortfolioRow {
            ticker: cells[0].to_string(),
            score,
            weight,
            reason: cells[3].to_string(),
        });
    }
    PortfolioTable::new(rows).map_err(|e| shift_line(e, start))
}

/// `PortfolioTable::new` numbers rows as if the table starts on line 1.
fn shift_line(err: TableError, by: usize) -> TableError {
    match err {
        TableError::EmptyReason { line } => TableError::EmptyReason { line: line + by },
        TableError::MalformedRow { line, message } => TableError::MalformedRow { line: line + by, message },
        TableError::DuplicateTicker { line, ticker } => TableError::DuplicateTicker { line: line + by, ticker },
        TableError::OutOfOrder { line } => TableError::OutOfOrder { line: line + by },
        other => other,
    }
}
