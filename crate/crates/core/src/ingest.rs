//! Fundamentals and market-data loading.
//!
//! Everything downstream works off two immutable collections: [`Fundamentals`]
//! (one row per ticker-quarter) and [`PriceHistory`] (daily bars per ticker,
//! sorted by date). Missing cells are kept as `None` and never imputed.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("malformed quarter label {0:?} (expected YYYYQn)")]
    MalformedQuarter(String),
    #[error("no trading data for {ticker} on or before {date}")]
    NoTradingData { ticker: String, date: NaiveDate },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{}", format_rows(.0))]
    Rows(Vec<RowError>),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A single unparsable row, reported with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn format_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

impl From<csv::Error> for IngestError {
    fn from(err: csv::Error) -> Self {
        IngestError::Io(err.to_string())
    }
}

impl From<std::io::Error> for IngestError {
    fn from(err: std::io::Error) -> Self {
        IngestError::Io(err.to_string())
    }
}

/// Fiscal quarter label with canonical text form `YYYYQn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct QuarterLabel {
    year: i32,
    quarter: u8,
}

impl QuarterLabel {
    pub fn new(year: i32, quarter: u8) -> Result<Self, IngestError> {
        if !(1..=4).contains(&quarter) || !(0..=9999).contains(&year) {
            return Err(IngestError::MalformedQuarter(format!("{year}Q{quarter}")));
        }
        Ok(Self { year, quarter })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.quarter
    }

    fn ordinal(self) -> i64 {
        i64::from(self.year) * 4 + i64::from(self.quarter) - 1
    }

    fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(4) as i32,
            quarter: (ord.rem_euclid(4) + 1) as u8,
        }
    }

    /// Shift by `n` quarters (negative goes back in time).
    pub fn offset(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    pub fn prev(self) -> Self {
        self.offset(-1)
    }

    pub fn next(self) -> Self {
        self.offset(1)
    }

    /// Number of quarters from `self` to `other` (positive when `other` is later).
    pub fn quarters_until(self, other: Self) -> i64 {
        other.ordinal() - self.ordinal()
    }

    /// Last calendar day of the quarter (Mar 31, Jun 30, Sep 30, Dec 31).
    pub fn end_date(self) -> NaiveDate {
        let (month, day) = match self.quarter {
            1 => (3, 31),
            2 => (6, 30),
            3 => (9, 30),
            _ => (12, 31),
        };
        NaiveDate::from_ymd_opt(self.year, month, day).expect("valid quarter end")
    }

    pub fn start_date(self) -> NaiveDate {
        let month = u32::from(self.quarter - 1) * 3 + 1;
        NaiveDate::from_ymd_opt(self.year, month, 1).expect("valid quarter start")
    }

    /// Quarter containing a calendar date.
    pub fn containing(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            quarter: ((date.month() - 1) / 3 + 1) as u8,
        }
    }

    /// Inclusive range `from..=to`; empty when `to < from`.
    pub fn range(from: Self, to: Self) -> impl Iterator<Item = Self> {
        (from.ordinal()..=to.ordinal()).map(Self::from_ordinal)
    }
}

pub fn parse_quarter(text: &str) -> Result<QuarterLabel, IngestError> {
    let bytes = text.as_bytes();
    let well_formed = bytes.len() == 6
        && bytes[..4].iter().all(u8::is_ascii_digit)
        && bytes[4] == b'Q'
        && (b'1'..=b'4').contains(&bytes[5]);
    if !well_formed {
        return Err(IngestError::MalformedQuarter(text.to_string()));
    }
    let year: i32 = text[..4].parse().expect("four ascii digits");
    Ok(QuarterLabel {
        year,
        quarter: bytes[5] - b'0',
    })
}

impl FromStr for QuarterLabel {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_quarter(s)
    }
}

impl fmt::Display for QuarterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}Q{}", self.year, self.quarter)
    }
}

impl TryFrom<String> for QuarterLabel {
    type Error = IngestError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        parse_quarter(&value)
    }
}

impl From<QuarterLabel> for String {
    fn from(value: QuarterLabel) -> Self {
        value.to_string()
    }
}

/// One ticker-quarter of balance-sheet, income and cash-flow fields.
///
/// Balance-sheet fields are point-in-time at quarter end. Flow fields
/// (`revenue` through `capex`) hold single-quarter amounts; trailing sums are
/// always produced by [`ttm`]. `capex` is a positive spending amount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalsQuarter {
    pub ticker: String,
    pub quarter: QuarterLabel,
    pub total_assets: Option<f64>,
    pub current_assets: Option<f64>,
    pub current_liabilities: Option<f64>,
    pub total_liabilities: Option<f64>,
    pub long_term_debt: Option<f64>,
    pub shareholders_equity: Option<f64>,
    pub retained_earnings: Option<f64>,
    pub goodwill: Option<f64>,
    pub other_intangibles: Option<f64>,
    pub net_ppe: Option<f64>,
    pub cash_and_equivalents: Option<f64>,
    pub revenue: Option<f64>,
    pub gross_profit: Option<f64>,
    pub ebit: Option<f64>,
    pub net_income: Option<f64>,
    pub interest_expense: Option<f64>,
    pub cfo: Option<f64>,
    pub capex: Option<f64>,
}

pub const FUNDAMENTALS_COLUMNS: [&str; 20] = [
    "ticker",
    "quarter",
    "total_assets",
    "current_assets",
    "current_liabilities",
    "total_liabilities",
    "long_term_debt",
    "shareholders_equity",
    "retained_earnings",
    "goodwill",
    "other_intangibles",
    "net_ppe",
    "cash_and_equivalents",
    "revenue",
    "gross_profit",
    "ebit",
    "net_income",
    "interest_expense",
    "cfo",
    "capex",
];

pub const PRICES_COLUMNS: [&str; 8] = [
    "ticker",
    "date",
    "open",
    "high",
    "low",
    "close",
    "volume",
    "num_shares",
];

impl FundamentalsQuarter {
    /// Row with every numeric field NA.
    pub fn empty(ticker: impl Into<String>, quarter: QuarterLabel) -> Self {
        Self {
            ticker: ticker.into(),
            quarter,
            total_assets: None,
            current_assets: None,
            current_liabilities: None,
            total_liabilities: None,
            long_term_debt: None,
            shareholders_equity: None,
            retained_earnings: None,
            goodwill: None,
            other_intangibles: None,
            net_ppe: None,
            cash_and_equivalents: None,
            revenue: None,
            gross_profit: None,
            ebit: None,
            net_income: None,
            interest_expense: None,
            cfo: None,
            capex: None,
        }
    }

    /// Numeric fields in CSV column order.
    pub fn values(&self) -> [Option<f64>; 18] {
        [
            self.total_assets,
            self.current_assets,
            self.current_liabilities,
            self.total_liabilities,
            self.long_term_debt,
            self.shareholders_equity,
            self.retained_earnings,
            self.goodwill,
            self.other_intangibles,
            self.net_ppe,
            self.cash_and_equivalents,
            self.revenue,
            self.gross_profit,
            self.ebit,
            self.net_income,
            self.interest_expense,
            self.cfo,
            self.capex,
        ]
    }

    fn values_mut(&mut self) -> [&mut Option<f64>; 18] {
        [
            &mut self.total_assets,
            &mut self.current_assets,
            &mut self.current_liabilities,
            &mut self.total_liabilities,
            &mut self.long_term_debt,
            &mut self.shareholders_equity,
            &mut self.retained_earnings,
            &mut self.goodwill,
            &mut self.other_intangibles,
            &mut self.net_ppe,
            &mut self.cash_and_equivalents,
            &mut self.revenue,
            &mut self.gross_profit,
            &mut self.ebit,
            &mut self.net_income,
            &mut self.interest_expense,
            &mut self.cfo,
            &mut self.capex,
        ]
    }
}

/// Quarter-indexed rows for a single ticker.
pub type TickerHistory = BTreeMap<QuarterLabel, FundamentalsQuarter>;

/// All fundamentals, keyed by ticker then quarter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fundamentals {
    by_ticker: BTreeMap<String, TickerHistory>,
}

impl Fundamentals {
    /// Builds the collection, rejecting duplicate (ticker, quarter) keys.
    pub fn from_rows(rows: impl IntoIterator<Item = FundamentalsQuarter>) -> Result<Self, IngestError> {
        let mut by_ticker: BTreeMap<String, TickerHistory> = BTreeMap::new();
        for row in rows {
            let history = by_ticker.entry(row.ticker.clone()).or_default();
            if history.contains_key(&row.quarter) {
                return Err(IngestError::Schema(format!(
                    "duplicate row for ({}, {})",
                    row.ticker, row.quarter
                )));
            }
            history.insert(row.quarter, row);
        }
        Ok(Self { by_ticker })
    }

    pub fn history(&self, ticker: &str) -> Option<&TickerHistory> {
        self.by_ticker.get(ticker)
    }

    pub fn get(&self, ticker: &str, quarter: QuarterLabel) -> Option<&FundamentalsQuarter> {
        self.by_ticker.get(ticker)?.get(&quarter)
    }

    /// Tickers with a row for `quarter`, alphabetically.
    pub fn universe(&self, quarter: QuarterLabel) -> Vec<&str> {
        self.by_ticker
            .iter()
            .filter(|(_, h)| h.contains_key(&quarter))
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.by_ticker.keys().map(String::as_str)
    }

    pub fn rows(&self) -> impl Iterator<Item = &FundamentalsQuarter> {
        self.by_ticker.values().flat_map(|h| h.values())
    }

    pub fn len(&self) -> usize {
        self.by_ticker.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sum of the four quarterly values of `field` ending at `upto`; NA if any
/// of the four quarters is absent or NA.
pub fn ttm<F>(history: &TickerHistory, upto: QuarterLabel, field: F) -> Option<f64>
where
    F: Fn(&FundamentalsQuarter) -> Option<f64>,
{
    let mut flows = [None; 4];
    for (i, slot) in flows.iter_mut().enumerate() {
        *slot = history.get(&upto.offset(i as i64 - 3)).and_then(&field);
    }
    ttm_sum(&flows)
}

/// Sums four quarterly flows oldest-first; any NA makes the sum NA.
pub fn ttm_sum(flows: &[Option<f64>; 4]) -> Option<f64> {
    flows.iter().try_fold(0.0, |acc, v| v.map(|x| acc + x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyBar {
    pub ticker: String,
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: u64,
    pub num_shares: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuarterSnapshot {
    pub ticker: String,
    pub quarter: QuarterLabel,
    pub snapshot_date: NaiveDate,
    pub price: f64,
    pub shares: Option<u64>,
    pub mktcap: Option<f64>,
}

/// Snapshot at the latest bar on or before the quarter's last calendar day.
/// `bars` must be sorted by date.
pub fn quarter_end_snapshot(
    bars: &[DailyBar],
    quarter: QuarterLabel,
) -> Result<QuarterSnapshot, IngestError> {
    let end = quarter.end_date();
    let idx = bars.partition_point(|b| b.date <= end);
    let Some(bar) = idx.checked_sub(1).map(|i| &bars[i]) else {
        return Err(IngestError::NoTradingData {
            ticker: bars.first().map(|b| b.ticker.clone()).unwrap_or_default(),
            date: end,
        });
    };
    Ok(QuarterSnapshot {
        ticker: bar.ticker.clone(),
        quarter,
        snapshot_date: bar.date,
        price: bar.close,
        shares: bar.num_shares,
        mktcap: bar.num_shares.map(|s| bar.close * s as f64),
    })
}

/// Daily bars per ticker, each series sorted by date with unique dates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceHistory {
    by_ticker: BTreeMap<String, Vec<DailyBar>>,
}

impl PriceHistory {
    /// Groups and sorts bars; duplicate dates and non-positive closes are rejected.
    pub fn from_bars(bars: impl IntoIterator<Item = DailyBar>) -> Result<Self, IngestError> {
        let mut by_ticker: BTreeMap<String, Vec<DailyBar>> = BTreeMap::new();
        for bar in bars {
            if !(bar.close > 0.0) {
                return Err(IngestError::Schema(format!(
                    "non-positive close for {} on {}",
                    bar.ticker, bar.date
                )));
            }
            by_ticker.entry(bar.ticker.clone()).or_default().push(bar);
        }
        for series in by_ticker.values_mut() {
            series.sort_by_key(|b| b.date);
            if let Some(w) = series.windows(2).find(|w| w[0].date == w[1].date) {
                return Err(IngestError::Schema(format!(
                    "duplicate bar for ({}, {})",
                    w[0].ticker, w[0].date
                )));
            }
        }
        Ok(Self { by_ticker })
    }

    pub fn bars(&self, ticker: &str) -> Option<&[DailyBar]> {
        self.by_ticker.get(ticker).map(Vec::as_slice)
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.by_ticker.keys().map(String::as_str)
    }

    pub fn snapshot(&self, ticker: &str, quarter: QuarterLabel) -> Result<QuarterSnapshot, IngestError> {
        match self.by_ticker.get(ticker) {
            Some(bars) => quarter_end_snapshot(bars, quarter),
            None => Err(IngestError::NoTradingData {
                ticker: ticker.to_string(),
                date: quarter.end_date(),
            }),
        }
    }

    /// Close of `ticker` on exactly `date`.
    pub fn close_on(&self, ticker: &str, date: NaiveDate) -> Option<f64> {
        let bars = self.by_ticker.get(ticker)?;
        bars.binary_search_by_key(&date, |b| b.date)
            .ok()
            .map(|i| bars[i].close)
    }

    /// Sorted union of every bar date across tickers.
    pub fn trading_calendar(&self) -> Vec<NaiveDate> {
        let mut dates: Vec<NaiveDate> = self
            .by_ticker
            .values()
            .flat_map(|s| s.iter().map(|b| b.date))
            .collect();
        dates.sort_unstable();
        dates.dedup();
        dates
    }

    pub fn all_bars(&self) -> impl Iterator<Item = &DailyBar> {
        self.by_ticker.values().flatten()
    }
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<Vec<usize>, IngestError> {
    expected
        .iter()
        .map(|col| {
            headers
                .iter()
                .position(|h| h == *col)
                .ok_or_else(|| IngestError::Schema(format!("missing column `{col}`")))
        })
        .collect()
}

fn parse_opt_f64(cell: &str, column: &str) -> Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("column `{column}`: cannot parse {cell:?} as a number")),
    }
}

fn parse_f64(cell: &str, column: &str) -> Result<f64, String> {
    parse_opt_f64(cell, column)?.ok_or_else(|| format!("column `{column}` is required"))
}

fn parse_count(cell: &str, column: &str) -> Result<Option<u64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<u64>()
        .map(Some)
        .map_err(|_| format!("column `{column}`: cannot parse {cell:?} as a count"))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

pub fn read_fundamentals<R: Read>(reader: R) -> Result<Fundamentals, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let idx = check_header(rdr.headers()?, &FUNDAMENTALS_COLUMNS)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let cell = |i: usize| record.get(idx[i]).unwrap_or("");
        let parsed = (|| -> Result<FundamentalsQuarter, String> {
            let ticker = cell(0);
            if ticker.is_empty() {
                return Err("column `ticker` is required".into());
            }
            let quarter = parse_quarter(cell(1)).map_err(|e| e.to_string())?;
            let mut row = FundamentalsQuarter::empty(ticker, quarter);
            for (k, slot) in row.values_mut().into_iter().enumerate() {
                *slot = parse_opt_f64(cell(k + 2), FUNDAMENTALS_COLUMNS[k + 2])?;
            }
            Ok(row)
        })();
        match parsed {
            Ok(row) => rows.push(row),
            Err(message) => errors.push(RowError {
                line: line_of(&record),
                message,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(IngestError::Rows(errors));
    }
    Fundamentals::from_rows(rows)
}

pub fn read_bars<R: Read>(reader: R) -> Result<PriceHistory, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let idx = check_header(rdr.headers()?, &PRICES_COLUMNS)?;
    let mut bars = Vec::new();
    let mut errors = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let cell = |i: usize| record.get(idx[i]).unwrap_or("");
        let parsed = (|| -> Result<DailyBar, String> {
            let ticker = cell(0);
            if ticker.is_empty() {
                return Err("column `ticker` is required".into());
            }
            let date = NaiveDate::parse_from_str(cell(1), "%Y-%m-%d")
                .map_err(|_| format!("column `date`: cannot parse {:?} as YYYY-MM-DD", cell(1)))?;
            let close = parse_f64(cell(5), "close")?;
            if close <= 0.0 {
                return Err(format!("column `close` must be positive, got {close}"));
            }
            Ok(DailyBar {
                ticker: ticker.to_string(),
                date,
                open: parse_f64(cell(2), "open")?,
                high: parse_f64(cell(3), "high")?,
                low: parse_f64(cell(4), "low")?,
                close,
                volume: parse_count(cell(6), "volume")?
                    .ok_or_else(|| "column `volume` is required".to_string())?,
                num_shares: parse_count(cell(7), "num_shares")?,
            })
        })();
        match parsed {
            Ok(bar) => bars.push(bar),
            Err(message) => errors.push(RowError {
                line: line_of(&record),
                message,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(IngestError::Rows(errors));
    }
    PriceHistory::from_bars(bars)
}

pub fn load_fundamentals(path: impl AsRef<Path>) -> Result<Fundamentals, IngestError> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| IngestError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_fundamentals(std::io::BufReader::new(file))
}

pub fn load_bars(path: impl AsRef<Path>) -> Result<PriceHistory, IngestError> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| IngestError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_bars(std::io::BufReader::new(file))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes rows in schema column order. Numbers use the shortest text that
/// parses back to the same `f64`, so a load/write/load cycle is lossless.
pub fn write_fundamentals<'a, W: Write>(
    writer: W,
    rows: impl IntoIterator<Item = &'a FundamentalsQuarter>,
) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(FUNDAMENTALS_COLUMNS)?;
    for row in rows {
        let mut record = vec![row.ticker.clone(), row.quarter.to_string()];
        record.extend(row.values().into_iter().map(fmt_opt));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_bars<'a, W: Write>(
    writer: W,
    bars: impl IntoIterator<Item = &'a DailyBar>,
) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PRICES_COLUMNS)?;
    for bar in bars {
        wtr.write_record([
            bar.ticker.clone(),
            bar.date.format("%Y-%m-%d").to_string(),
            bar.open.to_string(),
            bar.high.to_string(),
            bar.low.to_string(),
            bar.close.to_string(),
            bar.volume.to_string(),
            bar.num_shares.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
