//! End-to-end runs: score a quarter into a table, or a quarter range into a
//! backtest with its performance report.

use serde::Serialize;
use thiserror::Error;

use crate::analytics::{perf, AnalyticsError, PerfReport};
use crate::backtest::{run_backtest, BacktestError, BacktestResult};
use crate::ingest::{Fundamentals, PriceHistory, QuarterLabel};
use crate::metrics::MetricFrame;
use crate::portfolio::{allocate, PortfolioError, QuarterPortfolio};
use crate::strategies::{select, Guru, StrategyError};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("{guru} {quarter}: {source}")]
    Strategy {
        guru: Guru,
        quarter: QuarterLabel,
        source: StrategyError,
    },
    #[error("{guru} {quarter}: {source}")]
    Portfolio {
        guru: Guru,
        quarter: QuarterLabel,
        source: PortfolioError,
    },
    #[error("{1}: {0}")]
    Backtest(BacktestError, Guru),
    #[error("{1}: {0}")]
    Analytics(AnalyticsError, Guru),
}

impl PipelineError {
    /// Nothing could be selected, as opposed to bad input data.
    pub fn is_empty_portfolio(&self) -> bool {
        matches!(
            self,
            PipelineError::Strategy {
                source: StrategyError::EmptyUniverse,
                ..
            } | PipelineError::Portfolio { .. }
        )
    }
}

/// Metrics, scoring, selection and allocation for one guru and quarter.
pub fn score_quarter(
    guru: Guru,
    fundamentals: &Fundamentals,
    prices: &PriceHistory,
    quarter: QuarterLabel,
) -> Result<QuarterPortfolio, PipelineError> {
    let frame = MetricFrame::build(fundamentals, prices, quarter);
    let selected = select(guru, &frame).map_err(|source| PipelineError::Strategy { guru, quarter, source })?;
    let table = allocate(&selected, guru).map_err(|source| PipelineError::Portfolio { guru, quarter, source })?;
    Ok(QuarterPortfolio { quarter, guru, table })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuruRun {
    pub guru: Guru,
    pub tables: Vec<QuarterPortfolio>,
    pub result: BacktestResult,
    pub perf: PerfReport,
}

/// One table per quarter in `from..=to`, then the backtest over them.
pub fn run_guru(
    guru: Guru,
    fundamentals: &Fundamentals,
    prices: &PriceHistory,
    from: QuarterLabel,
    to: QuarterLabel,
    cost_rate: f64,
) -> Result<GuruRun, PipelineError> {
    let tables = QuarterLabel::range(from, to)
        .map(|q| score_quarter(guru, fundamentals, prices, q))
        .collect::<Result<Vec<_>, _>>()?;
    let result = run_backtest(&tables, prices, cost_rate).map_err(|e| PipelineError::Backtest(e, guru))?;
    let perf = perf(&result.daily_returns()).map_err(|e| PipelineError::Analytics(e, guru))?;
    Ok(GuruRun {
        guru,
        tables,
        result,
        perf,
    })
}
