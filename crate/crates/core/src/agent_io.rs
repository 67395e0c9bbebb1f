//! Shipped system prompts and comparison of externally produced tables
//! against the engine's own output.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::portfolio::{parse_markdown, PortfolioTable, TableError};
use crate::strategies::{Guru, StrategyError};

const GRAHAM: &str = include_str!("../prompts/graham.txt");
const ALTMAN: &str = include_str!("../prompts/altman.txt");
const GREENBLATT: &str = include_str!("../prompts/greenblatt.txt");
const PIOTROSKI: &str = include_str!("../prompts/piotroski.txt");
const BUFFETT: &str = include_str!("../prompts/buffett.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptAsset {
    pub guru: Guru,
    pub text: &'static str,
    /// Lowercase hex SHA-256 of `text`.
    pub checksum: String,
}

pub fn prompt(guru: Guru) -> PromptAsset {
    let text = match guru {
        Guru::Graham => GRAHAM,
        Guru::Altman => ALTMAN,
        Guru::Greenblatt => GREENBLATT,
        Guru::Piotroski => PIOTROSKI,
        Guru::Buffett => BUFFETT,
    };
    PromptAsset {
        guru,
        text,
        checksum: hex::encode(Sha256::digest(text.as_bytes())),
    }
}

/// Looks a prompt up by guru name.
pub fn render_prompt(name: &str) -> Result<PromptAsset, StrategyError> {
    name.parse::<Guru>().map(prompt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Match,
    Minor,
    Major,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickerDelta {
    pub ticker: String,
    /// External minus engine, in score units.
    pub score_delta: f64,
    /// External minus engine, in percentage points.
    pub weight_delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub in_both: Vec<String>,
    pub only_external: Vec<String>,
    pub only_engine: Vec<String>,
    pub deltas: Vec<TickerDelta>,
    pub max_abs_weight_delta: u64,
    pub verdict: Verdict,
}

/// Compares two tables. `match` needs equal ticker sets and every weight
/// within one point; other equal-set differences are `minor`.
pub fn compare_tables(external: &PortfolioTable, engine: &PortfolioTable) -> DivergenceReport {
    let ext: BTreeMap<&str, _> = external.rows().iter().map(|r| (r.ticker.as_str(), r)).collect();
    let eng: BTreeMap<&str, _> = engine.rows().iter().map(|r| (r.ticker.as_str(), r)).collect();
    let ext_set: BTreeSet<&str> = ext.keys().copied().collect();
    let eng_set: BTreeSet<&str> = eng.keys().copied().collect();
    let owned = |s: BTreeSet<&&str>| s.into_iter().map(|t| t.to_string()).collect::<Vec<_>>();

    let in_both = owned(ext_set.intersection(&eng_set).collect());
    let only_external = owned(ext_set.difference(&eng_set).collect());
    let only_engine = owned(eng_set.difference(&ext_set).collect());
    let deltas: Vec<TickerDelta> = in_both
        .iter()
        .map(|t| {
            let (x, e) = (ext[t.as_str()], eng[t.as_str()]);
            TickerDelta {
                ticker: t.clone(),
                score_delta: f64::from(i16::from(x.score.hundredths()) - i16::from(e.score.hundredths())) / 100.0,
                weight_delta: i64::from(x.weight) - i64::from(e.weight),
            }
        })
        .collect();
    let max_abs_weight_delta = deltas.iter().map(|d| d.weight_delta.unsigned_abs()).max().unwrap_or(0);
    let verdict = if !only_external.is_empty() || !only_engine.is_empty() {
        Verdict::Major
    } else if max_abs_weight_delta <= 1 {
        Verdict::Match
    } else {
        Verdict::Minor
    };
    DivergenceReport {
        in_both,
        only_external,
        only_engine,
        deltas,
        max_abs_weight_delta,
        verdict,
    }
}

/// Parses an external reply and compares it with the engine's table.
pub fn validate_external(table_text: &str, engine: &PortfolioTable) -> Result<DivergenceReport, TableError> {
    Ok(compare_tables(&parse_markdown(table_text)?, engine))
}
