//! Performance statistics on daily return series and cross-strategy comparison.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::scaling::percentile_sorted;

pub const TRADING_DAYS: f64 = 252.0;
/// Standard deviations below this are treated as zero variance.
pub const ZERO_VARIANCE: f64 = 1e-14;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
}

/// Risk-free rate 0, 252 trading days per year. Percent fields are scaled by 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerfReport {
    pub cagr_pct: f64,
    pub mean_daily: f64,
    pub std_daily: f64,
    pub mean_ann: f64,
    pub std_ann: f64,
    /// NA when the series has zero variance.
    pub sharpe_daily: Option<f64>,
    pub sharpe_ann: Option<f64>,
    pub mdd_pct: f64,
    pub var90_pct: f64,
    pub cvar90_pct: f64,
}

pub const PERF_FIELDS: [&str; 10] = [
    "cagr_pct",
    "mean_daily",
    "std_daily",
    "mean_ann",
    "std_ann",
    "sharpe_daily",
    "sharpe_ann",
    "mdd_pct",
    "var90_pct",
    "cvar90_pct",
];

impl PerfReport {
    /// Values in [`PERF_FIELDS`] order.
    pub fn values(&self) -> [Option<f64>; 10] {
        [
            Some(self.cagr_pct),
            Some(self.mean_daily),
            Some(self.std_daily),
            Some(self.mean_ann),
            Some(self.std_ann),
            self.sharpe_daily,
            self.sharpe_ann,
            Some(self.mdd_pct),
            Some(self.var90_pct),
            Some(self.cvar90_pct),
        ]
    }
}

/// Maximum drawdown in percent, peak starting at 1.0.
pub fn max_drawdown_pct(returns: &[f64]) -> f64 {
    let mut equity = 1.0;
    let mut peak = 1.0_f64;
    let mut worst = 0.0_f64;
    for r in returns {
        equity *= 1.0 + r;
        peak = peak.max(equity);
        worst = worst.min(equity / peak - 1.0);
    }
    worst * 100.0
}

pub fn perf(returns: &[f64]) -> Result<PerfReport, AnalyticsError> {
    let n = returns.len();
    if n < 2 {
        return Err(AnalyticsError::TooFewObservations(n));
    }
    let nf = n as f64;
    let growth: f64 = returns.iter().map(|r| 1.0 + r).product();
    let cagr_pct = (growth.powf(TRADING_DAYS / nf) - 1.0) * 100.0;

    let mean_daily = returns.iter().sum::<f64>() / nf;
    let var = returns.iter().map(|r| (r - mean_daily).powi(2)).sum::<f64>() / (nf - 1.0);
    let std_daily = var.sqrt();
    let sharpe_daily = (std_daily >= ZERO_VARIANCE).then(|| mean_daily / std_daily);

    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let var90 = percentile_sorted(&sorted, 0.10);
    let tail = &sorted[..n.div_ceil(10)];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    // The mean of a set never exceeds its maximum; clamp away rounding.
    let cvar90 = tail_mean.min(tail[tail.len() - 1]);

    Ok(PerfReport {
        cagr_pct,
        mean_daily,
        std_daily,
        mean_ann: TRADING_DAYS * mean_daily,
        std_ann: TRADING_DAYS.sqrt() * std_daily,
        sharpe_daily,
        sharpe_ann: sharpe_daily.map(|s| TRADING_DAYS.sqrt() * s),
        mdd_pct: max_drawdown_pct(returns),
        var90_pct: var90 * 100.0,
        cvar90_pct: cvar90 * 100.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Best,
    Second,
}

impl Mark {
    pub fn label(mark: Option<Mark>) -> &'static str {
        match mark {
            Some(Mark::Best) => "best",
            Some(Mark::Second) => "second",
            None => "",
        }
    }
}

/// Whether a larger value is better in each [`PERF_FIELDS`] column.
pub const HIGHER_IS_BETTER: [bool; 10] = [true, true, false, true, false, true, true, true, true, true];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub report: PerfReport,
    pub marks: [Option<Mark>; 10],
}

/// Marks best and second-best per column. Ties share a mark; the second
/// mark goes to the next distinct value.
pub fn compare(reports: &[(String, PerfReport)]) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|(name, report)| ComparisonRow {
            name: name.clone(),
            report: *report,
            marks: [None; 10],
        })
        .collect();
    for col in 0..PERF_FIELDS.len() {
        let mut distinct: Vec<f64> = rows.iter().filter_map(|r| r.report.values()[col]).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if HIGHER_IS_BETTER[col] {
            distinct.reverse();
        }
        for row in &mut rows {
            if let Some(v) = row.report.values()[col] {
                row.marks[col] = match distinct.iter().position(|d| *d == v) {
                    Some(0) => Some(Mark::Best),
                    Some(1) => Some(Mark::Second),
                    _ => None,
                };
            }
        }
    }
    rows
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `name,<fields>` one row per report; NA for undefined Sharpe.
pub fn write_perf_csv<W: Write>(reports: &[(String, PerfReport)], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["name"];
    header.extend(PERF_FIELDS);
    w.write_record(&header)?;
    for (name, report) in reports {
        let mut record = vec![name.clone()];
        record.extend(report.values().into_iter().map(cell));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// The comparison table followed by one `<field>_mark` column per field.
pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["name".to_string()];
    header.extend(PERF_FIELDS.iter().map(|f| f.to_string()));
    header.extend(PERF_FIELDS.iter().map(|f| format!("{f}_mark")));
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![row.name.clone()];
        record.extend(row.report.values().into_iter().map(cell));
        record.extend(row.marks.iter().map(|m| Mark::label(*m).to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
