//! Quarterly-rebalance simulation with drifting weights and turnover costs.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::{PriceHistory, QuarterLabel};
use crate::portfolio::{PortfolioTable, QuarterPortfolio};

/// One basis point of gross turnover.
pub const DEFAULT_COST_RATE: f64 = 0.0001;

#[derive(Debug, Error, PartialEq)]
pub enum BacktestError {
    #[error("no portfolio tables to trade")]
    NoTables,
    #[error("missing price for {ticker} on {date}")]
    MissingPrices { ticker: String, date: NaiveDate },
    #[error("calendar gap: {0}")]
    CalendarGap(String),
    #[error("degenerate weights on {0}: portfolio value would be non-positive")]
    Degenerate(String),
    #[error("cost rate must be finite and non-negative, got {0}")]
    BadCostRate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RebalanceEvent {
    pub quarter: QuarterLabel,
    pub trade_date: NaiveDate,
    pub target: PortfolioTable,
    /// `sum |target - drifted|` over tickers; cash is excluded.
    pub gross_turnover: f64,
    /// Fraction of portfolio value charged on the trade date.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub date: NaiveDate,
    pub ret: f64,
    pub equity: f64,
    pub event: bool,
    pub turnover: f64,
    pub cost: f64,
}

/// A held ticker that stopped printing and was moved to cash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Liquidation {
    pub date: NaiveDate,
    pub ticker: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestResult {
    pub ledger: Vec<LedgerRow>,
    pub events: Vec<RebalanceEvent>,
    pub liquidations: Vec<Liquidation>,
}

impl BacktestResult {
    pub fn daily_returns(&self) -> Vec<f64> {
        self.ledger.iter().map(|r| r.ret).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.ledger.iter().map(|r| r.date).collect()
    }

    pub fn final_equity(&self) -> f64 {
        self.ledger.last().map_or(1.0, |r| r.equity)
    }
}

/// `w_i (1 + r_i) / sum_j w_j (1 + r_j)`. Tickers without a return are flat.
pub fn drift(
    weights: &BTreeMap<String, f64>,
    returns: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, BacktestError> {
    let grown: BTreeMap<String, f64> = weights
        .iter()
        .map(|(t, w)| (t.clone(), w * (1.0 + returns.get(t).copied().unwrap_or(0.0))))
        .collect();
    let total: f64 = grown.values().sum();
    if !(total > 0.0) {
        return Err(BacktestError::Degenerate(format!("sum of grown weights is {total}")));
    }
    Ok(grown.into_iter().map(|(t, g)| (t, g / total)).collect())
}

/// `sum |target_i - current_i|` over the union of tickers.
pub fn gross_turnover(current: &BTreeMap<String, f64>, target: &BTreeMap<String, f64>) -> f64 {
    let mut sum = 0.0;
    for (t, w) in current {
        sum += (target.get(t).copied().unwrap_or(0.0) - w).abs();
    }
    for (t, w) in target {
        if !current.contains_key(t) {
            sum += w.abs();
        }
    }
    sum
}

fn target_weights(table: &PortfolioTable) -> BTreeMap<String, f64> {
    table
        .rows()
        .iter()
        .filter(|r| r.weight > 0)
        .map(|r| (r.ticker.clone(), f64::from(r.weight) / 100.0))
        .collect()
}

/// Runs consecutive quarterly tables over the union trading calendar.
///
/// Each table is bought at the close of the first trading day after its
/// quarter's snapshot date and held, drifting, until the next trade. The run
/// ends at the last calendar day on or before the end of the quarter after
/// the final table.
pub fn run_backtest(
    tables: &[QuarterPortfolio],
    prices: &PriceHistory,
    cost_rate: f64,
) -> Result<BacktestResult, BacktestError> {
    if !(cost_rate.is_finite() && cost_rate >= 0.0) {
        return Err(BacktestError::BadCostRate(cost_rate));
    }
    let Some(last) = tables.last() else {
        return Err(BacktestError::NoTables);
    };
    for pair in tables.windows(2) {
        if pair[1].quarter != pair[0].quarter.next() {
            return Err(BacktestError::CalendarGap(format!(
                "tables jump from {} to {}",
                pair[0].quarter, pair[1].quarter
            )));
        }
    }

    let calendar = prices.trading_calendar();
    let mut trades: BTreeMap<NaiveDate, &QuarterPortfolio> = BTreeMap::new();
    for table in tables {
        let end = table.quarter.end_date();
        let date = calendar.iter().copied().find(|d| *d > end).ok_or_else(|| {
            BacktestError::CalendarGap(format!("no trading day after {} snapshot", table.quarter))
        })?;
        trades.insert(date, table);
    }
    if trades.len() != tables.len() {
        return Err(BacktestError::CalendarGap("two quarters map to the same trade date".into()));
    }
    let start = *trades.keys().next().expect("non-empty");
    let stop = last.quarter.next().end_date();

    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    let mut cash = 1.0;
    let mut last_close: BTreeMap<String, f64> = BTreeMap::new();
    let mut equity = 1.0;
    let mut result = BacktestResult {
        ledger: Vec::new(),
        events: Vec::new(),
        liquidations: Vec::new(),
    };

    for &date in calendar.iter().filter(|d| **d >= start && **d <= stop) {
        let mut returns = BTreeMap::new();
        let mut dropped = Vec::new();
        for ticker in weights.keys() {
            match prices.close_on(ticker, date) {
                Some(close) => {
                    let prev = last_close[ticker];
                    returns.insert(ticker.clone(), close / prev - 1.0);
                }
                None => dropped.push(ticker.clone()),
            }
        }
        // Missing bar: the position went to cash at the last close.
        for ticker in dropped {
            cash += weights.remove(&ticker).unwrap_or(0.0);
            last_close.remove(&ticker);
            result.liquidations.push(Liquidation {
                date,
                ticker,
            });
        }

        let mut ret: f64 = weights.iter().map(|(t, w)| w * returns[t]).sum();
        if !weights.is_empty() {
            let mut book = weights.clone();
            book.insert(String::new(), cash);
            let drifted = drift(&book, &returns).map_err(|_| BacktestError::Degenerate(date.to_string()))?;
            cash = drifted[""];
            weights = drifted.into_iter().filter(|(t, _)| !t.is_empty()).collect();
        }
        for (ticker, close) in last_close.iter_mut() {
            if let Some(c) = prices.close_on(ticker, date) {
                *close = c;
            }
        }

        let mut row = LedgerRow {
            date,
            ret: 0.0,
            equity: 0.0,
            event: false,
            turnover: 0.0,
            cost: 0.0,
        };
        if let Some(table) = trades.get(&date) {
            let target = target_weights(&table.table);
            for ticker in target.keys() {
                let close = prices.close_on(ticker, date).ok_or_else(|| BacktestError::MissingPrices {
                    ticker: ticker.clone(),
                    date,
                })?;
                last_close.insert(ticker.clone(), close);
            }
            let turnover = gross_turnover(&weights, &target);
            let cost = cost_rate * turnover;
            ret -= cost;
            last_close.retain(|t, _| target.contains_key(t));
            weights = target;
            cash = 0.0;
            row.event = true;
            row.turnover = turnover;
            row.cost = cost;
            result.events.push(RebalanceEvent {
                quarter: table.quarter,
                trade_date: date,
                target: table.table.clone(),
                gross_turnover: turnover,
                cost,
            });
        }
        if !(1.0 + ret > 0.0) {
            return Err(BacktestError::Degenerate(date.to_string()));
        }
        equity *= 1.0 + ret;
        row.ret = ret;
        row.equity = equity;
        result.ledger.push(row);
    }
    Ok(result)
}

/// Daily close-to-close returns of a single series on `dates`, carrying the
/// last known close over missing days. The first date returns 0.
pub fn buy_and_hold(closes: &BTreeMap<NaiveDate, f64>, dates: &[NaiveDate]) -> Vec<f64> {
    let mut prev: Option<f64> = None;
    dates
        .iter()
        .map(|d| {
            let close = closes.range(..=*d).next_back().map(|(_, c)| *c);
            let r = match (prev, close) {
                (Some(p), Some(c)) if p > 0.0 => c / p - 1.0,
                _ => 0.0,
            };
            if close.is_some() {
                prev = close;
            }
            r
        })
        .collect()
}

/// `date,return,equity,event_flag,turnover,cost`.
pub fn write_ledger<W: Write>(result: &BacktestResult, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "return", "equity", "event_flag", "turnover", "cost"])?;
    for row in &result.ledger {
        w.write_record([
            row.date.to_string(),
            row.ret.to_string(),
            row.equity.to_string(),
            u8::from(row.event).to_string(),
            row.turnover.to_string(),
            row.cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_quarter, DailyBar};
    use crate::portfolio::{PortfolioRow, Score};
    use crate::strategies::Guru;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn drift_examples() {
        let w = drift(&map(&[("A", 0.5), ("B", 0.5)]), &map(&[("A", 0.10), ("B", 0.0)])).unwrap();
        assert!((w["A"] - 0.55 / 1.05).abs() < 1e-15);
        assert!((w["B"] - 0.50 / 1.05).abs() < 1e-15);
        let same = drift(&map(&[("A", 0.3), ("B", 0.7)]), &map(&[("A", 0.0), ("B", 0.0)])).unwrap();
        assert_eq!(same, map(&[("A", 0.3), ("B", 0.7)]));
        let one = drift(&map(&[("A", 1.0)]), &map(&[("A", -0.4)])).unwrap();
        assert_eq!(one["A"], 1.0);
        assert!(matches!(
            drift(&map(&[("A", 1.0)]), &map(&[("A", -1.0)])),
            Err(BacktestError::Degenerate(_))
        ));
    }

    #[test]
    fn turnover_examples() {
        let drifted = map(&[("A", 0.6), ("B", 0.4)]);
        let target = map(&[("A", 0.5), ("B", 0.5)]);
        let t = gross_turnover(&drifted, &target);
        assert!((t - 0.2).abs() < 1e-15);
        assert!((DEFAULT_COST_RATE * t - 0.00002).abs() < 1e-18);
        assert_eq!(gross_turnover(&BTreeMap::new(), &target), 1.0);
        assert_eq!(gross_turnover(&target, &target), 0.0);
        assert_eq!(gross_turnover(&map(&[("A", 1.0)]), &map(&[("B", 1.0)])), 2.0);
    }

    fn bar(ticker: &str, date: NaiveDate, close: f64) -> DailyBar {
        DailyBar {
            ticker: ticker.into(),
            date,
            open: close,
            high: close,
            low: close,
            close,
            volume: 100,
            num_shares: Some(1000),
        }
    }

    fn one_row(quarter: &str, ticker: &str) -> QuarterPortfolio {
        QuarterPortfolio {
            quarter: parse_quarter(quarter).unwrap(),
            guru: Guru::Graham,
            table: PortfolioTable::new(vec![PortfolioRow {
                ticker: ticker.into(),
                score: Score::from_f64(1.0),
                weight: 100,
                reason: "only name".into(),
            }])
            .unwrap(),
        }
    }

    #[test]
    fn single_asset_tracks_price() {
        let d = |m, day| NaiveDate::from_ymd_opt(2024, m, day).unwrap();
        let closes = [(d(3, 28), 10.0), (d(4, 1), 10.0), (d(4, 2), 11.0), (d(4, 3), 9.9), (d(6, 28), 12.0)];
        let prices = PriceHistory::from_bars(closes.iter().map(|(dt, c)| bar("A", *dt, *c))).unwrap();
        let result = run_backtest(&[one_row("2024Q1", "A")], &prices, 0.0).unwrap();
        assert_eq!(result.ledger.len(), 4);
        assert_eq!(result.ledger[0].date, d(4, 1));
        assert!(result.ledger[0].event);
        assert_eq!(result.ledger[0].turnover, 1.0);
        assert!((result.final_equity() - 1.2).abs() < 1e-12);
        let costly = run_backtest(&[one_row("2024Q1", "A")], &prices, DEFAULT_COST_RATE).unwrap();
        assert_eq!(costly.ledger[0].cost, 0.0001);
    }

    #[test]
    fn missing_bar_liquidates_to_cash() {
        let d = |m, day| NaiveDate::from_ymd_opt(2024, m, day).unwrap();
        let mut bars = vec![bar("A", d(4, 1), 10.0), bar("A", d(4, 2), 12.0)];
        bars.push(bar("B", d(4, 1), 5.0));
        bars.push(bar("B", d(4, 2), 5.0));
        bars.push(bar("B", d(4, 3), 6.0));
        let prices = PriceHistory::from_bars(bars).unwrap();
        let result = run_backtest(&[one_row("2024Q1", "A")], &prices, 0.0).unwrap();
        assert_eq!(result.liquidations.len(), 1);
        assert_eq!(result.ledger[2].ret, 0.0);
        assert!((result.final_equity() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn target_without_bar_is_an_error() {
        let d = |m, day| NaiveDate::from_ymd_opt(2024, m, day).unwrap();
        let prices = PriceHistory::from_bars(vec![bar("B", d(4, 1), 5.0)]).unwrap();
        assert!(matches!(
            run_backtest(&[one_row("2024Q1", "A")], &prices, 0.0),
            Err(BacktestError::MissingPrices { .. })
        ));
        let gap = [one_row("2024Q1", "B"), one_row("2024Q3", "B")];
        assert!(matches!(run_backtest(&gap, &prices, 0.0), Err(BacktestError::CalendarGap(_))));
        assert_eq!(run_backtest(&[], &prices, 0.0), Err(BacktestError::NoTables));
    }

    #[test]
    fn benchmark_returns_carry_forward() {
        let d = |day| NaiveDate::from_ymd_opt(2024, 4, day).unwrap();
        let closes = BTreeMap::from([(d(1), 100.0), (d(2), 110.0), (d(4), 99.0)]);
        let r = buy_and_hold(&closes, &[d(1), d(2), d(3), d(4)]);
        assert_eq!(r[0], 0.0);
        assert!((r[1] - 0.1).abs() < 1e-15);
        assert_eq!(r[2], 0.0);
        assert!((r[3] + 0.1).abs() < 1e-15);
    }
}
