//! Deterministic synthetic universe for tests and demos.
//!
//! Randomness comes from a 64-bit linear congruential generator
//!
//! ```text
//! state' = 6364136223846793005 * state + 1442695040888963407  (mod 2^64)
//! uniform = (state' >> 11) / 2^53
//! ```
//!
//! seeded with `state = seed`. Normals are Irwin-Hall (sum of 12 uniforms
//! minus 6). Only `+ - * /` and rounding touch the draws, so any IEEE-754
//! implementation reproduces the same files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};

use crate::ingest::{
    write_bars, write_fundamentals, DailyBar, Fundamentals, FundamentalsQuarter, IngestError, PriceHistory,
    QuarterLabel,
};

pub const LCG_MULTIPLIER: u64 = 6364136223846793005;
pub const LCG_INCREMENT: u64 = 1442695040888963407;

#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(LCG_MULTIPLIER).wrapping_add(LCG_INCREMENT);
        self.state
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Approximately standard normal.
    pub fn normal(&mut self) -> f64 {
        (0..12).map(|_| self.uniform()).sum::<f64>() - 6.0
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

fn round_to(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUniverse {
    pub fundamentals: Vec<FundamentalsQuarter>,
    pub bars: Vec<DailyBar>,
}

impl SyntheticUniverse {
    pub fn fundamentals(&self) -> Fundamentals {
        Fundamentals::from_rows(self.fundamentals.iter().cloned()).expect("generator emits unique keys")
    }

    pub fn prices(&self) -> PriceHistory {
        PriceHistory::from_bars(self.bars.iter().cloned()).expect("generator emits valid bars")
    }

    pub fn write_fundamentals_csv<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        write_fundamentals(writer, &self.fundamentals)
    }

    pub fn write_prices_csv<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        write_bars(writer, &self.bars)
    }

    /// Equal-weight daily-rebalanced index of the universe, starting at 100.
    pub fn equal_weight_index(&self) -> BTreeMap<NaiveDate, f64> {
        let mut by_date: BTreeMap<NaiveDate, Vec<(&str, f64)>> = BTreeMap::new();
        for bar in &self.bars {
            by_date.entry(bar.date).or_default().push((&bar.ticker, bar.close));
        }
        let mut prev: BTreeMap<&str, f64> = BTreeMap::new();
        let mut level = 100.0;
        let mut index = BTreeMap::new();
        for (date, closes) in by_date {
            let returns: Vec<f64> = closes
                .iter()
                .filter_map(|(t, c)| prev.get(t).map(|p| c / p - 1.0))
                .collect();
            if !returns.is_empty() {
                level *= 1.0 + returns.iter().sum::<f64>() / returns.len() as f64;
            }
            index.insert(date, round_to(level, 6));
            prev.extend(closes);
        }
        index
    }

    /// `name,date,close` rows for the benchmark file.
    pub fn write_benchmarks_csv<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["name", "date", "close"])?;
        for (date, close) in self.equal_weight_index() {
            w.write_record(["equal_weight".to_string(), date.to_string(), close.to_string()])?;
        }
        w.flush().map_err(|e| IngestError::Io(e.to_string()))
    }

    /// Writes `fundamentals.csv`, `prices.csv` and `benchmarks.csv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), IngestError> {
        let dir = dir.as_ref();
        let io = |e: std::io::Error| IngestError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        self.write_fundamentals_csv(std::fs::File::create(dir.join("fundamentals.csv")).map_err(io)?)?;
        self.write_prices_csv(std::fs::File::create(dir.join("prices.csv")).map_err(io)?)?;
        self.write_benchmarks_csv(std::fs::File::create(dir.join("benchmarks.csv")).map_err(io)?)
    }
}

/// Per-ticker constants drawn once.
struct Profile {
    revenue: f64,
    growth: f64,
    gross_margin: f64,
    ebit_margin: f64,
    asset_turns: f64,
    current_frac: f64,
    cash_frac: f64,
    cl_ratio: f64,
    leverage: f64,
    debt_frac: f64,
    goodwill_frac: f64,
    intangible_frac: f64,
    capex_frac: f64,
    retained_frac: f64,
    shares: f64,
    share_drift: f64,
    pe: f64,
    mu: f64,
    sigma: f64,
}

impl Profile {
    fn draw(rng: &mut Lcg) -> Self {
        Self {
            revenue: rng.range(200.0, 2000.0),
            growth: rng.range(-0.02, 0.05),
            gross_margin: rng.range(0.25, 0.70),
            ebit_margin: rng.range(-0.05, 0.30),
            asset_turns: rng.range(0.15, 0.60),
            current_frac: rng.range(0.20, 0.60),
            cash_frac: rng.range(0.10, 0.50),
            cl_ratio: rng.range(0.30, 1.20),
            leverage: rng.range(0.15, 0.85),
            debt_frac: rng.range(0.0, 0.60),
            goodwill_frac: rng.range(0.0, 0.15),
            intangible_frac: rng.range(0.0, 0.10),
            capex_frac: rng.range(0.02, 0.12),
            retained_frac: rng.range(-0.20, 0.90),
            shares: rng.range(50.0, 500.0).round() * 1_000_000.0,
            share_drift: rng.range(-0.01, 0.01),
            pe: rng.range(6.0, 25.0),
            mu: rng.range(-0.0002, 0.0008),
            sigma: rng.range(0.008, 0.025),
        }
    }
}

fn weekdays(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    from.iter_days()
        .take_while(|d| *d <= to)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// `n_tickers` tickers named `T000`, `T001`, ... with fundamentals for every
/// quarter in `from..=to` and weekday bars through the end of the quarter
/// after `to`, so the last table can be held for a full quarter.
pub fn generate_universe(n_tickers: usize, from: QuarterLabel, to: QuarterLabel, seed: u64) -> SyntheticUniverse {
    let mut rng = Lcg::new(seed);
    let quarters: Vec<QuarterLabel> = QuarterLabel::range(from, to).collect();
    let days = weekdays(from.start_date(), to.next().end_date());
    let mut fundamentals = Vec::with_capacity(n_tickers * quarters.len());
    let mut bars = Vec::with_capacity(n_tickers * days.len());

    for i in 0..n_tickers {
        let ticker = format!("T{i:03}");
        let p = Profile::draw(&mut rng);
        let mut scale = 1.0;
        let mut shares = p.shares;
        let mut retained: Option<f64> = None;
        let mut share_path = Vec::with_capacity(quarters.len() + 1);
        let mut first_net_income = 0.0;

        for (k, &quarter) in quarters.iter().enumerate() {
            if k > 0 {
                scale *= 1.0 + p.growth + 0.02 * rng.normal();
                shares *= 1.0 + p.share_drift + 0.002 * rng.normal();
            }
            let revenue = p.revenue * scale * (1.0 + 0.05 * rng.normal());
            let total_assets = p.revenue * scale / p.asset_turns * (1.0 + 0.02 * rng.normal());
            let current_assets = total_assets * p.current_frac;
            let total_liabilities = total_assets * p.leverage;
            let current_liabilities = (current_assets * p.cl_ratio).min(total_liabilities);
            let long_term_debt = (total_liabilities - current_liabilities) * p.debt_frac;
            let equity = total_assets - total_liabilities;
            let goodwill = total_assets * p.goodwill_frac;
            let intangibles = total_assets * p.intangible_frac;
            let net_ppe = (total_assets - current_assets - goodwill - intangibles) * rng.range(0.6, 1.0);
            let gross_profit = revenue * (p.gross_margin + 0.02 * rng.normal());
            let ebit = revenue * (p.ebit_margin + 0.02 * rng.normal());
            let interest = long_term_debt * 0.012 + total_liabilities * 0.001;
            let net_income = (ebit - interest) * 0.79;
            let cfo = net_income * (1.0 + 0.3 * rng.normal()) + 0.01 * total_assets;
            let capex = revenue * p.capex_frac * rng.range(0.8, 1.2);
            if k == 0 {
                first_net_income = net_income;
            }
            let re = retained.map_or(equity * p.retained_frac, |r| r + net_income);
            retained = Some(re);
            let drop_debt = rng.chance(0.05);
            let drop_ppe = rng.chance(0.05);

            // Amounts are drawn in millions and stored in whole currency units.
            let units = |x: f64| (x * 1_000_000.0).round();
            let amount = |x: f64| Some(units(x));
            fundamentals.push(FundamentalsQuarter {
                ticker: ticker.clone(),
                quarter,
                total_assets: amount(total_assets),
                current_assets: amount(current_assets),
                current_liabilities: amount(current_liabilities),
                total_liabilities: amount(total_liabilities),
                long_term_debt: if drop_debt { None } else { amount(long_term_debt) },
                shareholders_equity: Some(units(total_assets) - units(total_liabilities)),
                retained_earnings: amount(re),
                goodwill: amount(goodwill),
                other_intangibles: amount(intangibles),
                net_ppe: if drop_ppe { None } else { amount(net_ppe) },
                cash_and_equivalents: amount(current_assets * p.cash_frac),
                revenue: amount(revenue),
                gross_profit: amount(gross_profit),
                ebit: amount(ebit),
                net_income: amount(net_income),
                interest_expense: amount(interest),
                cfo: amount(cfo),
                capex: amount(capex),
            });
            share_path.push(shares.round());
        }
        share_path.push((shares * (1.0 + p.share_drift)).round());

        // Opening price targets a PE on annualized first-quarter earnings.
        let earnings = (first_net_income * 4.0).abs().max(p.revenue * 0.2) * 1_000_000.0;
        let mut close = round_to(earnings * p.pe / p.shares, 2).max(1.0);
        for &date in &days {
            let r = (p.mu + p.sigma * rng.normal()).max(-0.5);
            let open = round_to(close * (1.0 + 0.2 * p.sigma * rng.normal()), 4).max(0.01);
            let next = round_to(close * (1.0 + r), 4).max(0.01);
            let high = round_to(open.max(next) * (1.0 + 0.5 * p.sigma * rng.uniform()), 4);
            let low = round_to(open.min(next) * (1.0 - 0.5 * p.sigma * rng.uniform()), 4).max(0.01);
            let volume = rng.range(200_000.0, 5_000_000.0).round() as u64;
            let q = QuarterLabel::containing(date);
            let idx = from.quarters_until(q).clamp(0, share_path.len() as i64 - 1) as usize;
            bars.push(DailyBar {
                ticker: ticker.clone(),
                date,
                open,
                high,
                low,
                close: next,
                volume,
                num_shares: Some(share_path[idx] as u64),
            });
            close = next;
        }
    }
    SyntheticUniverse { fundamentals, bars }
}

/// 10 tickers, 2022Q1 through 2025Q2, seed 42.
pub fn standard_fixture() -> SyntheticUniverse {
    generate_universe(
        10,
        QuarterLabel::new(2022, 1).expect("valid"),
        QuarterLabel::new(2025, 2).expect("valid"),
        42,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcg_reference_values() {
        let mut rng = Lcg::new(0);
        assert_eq!(rng.next_u64(), LCG_INCREMENT);
        assert_eq!(
            rng.next_u64(),
            LCG_INCREMENT.wrapping_mul(LCG_MULTIPLIER).wrapping_add(LCG_INCREMENT)
        );
        let u = Lcg::new(42).uniform();
        assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn same_seed_same_files() {
        let q = |s: &str| s.parse::<QuarterLabel>().unwrap();
        let a = generate_universe(3, q("2023Q1"), q("2023Q4"), 7);
        let b = generate_universe(3, q("2023Q1"), q("2023Q4"), 7);
        assert_eq!(a, b);
        let c = generate_universe(3, q("2023Q1"), q("2023Q4"), 8);
        assert_ne!(a, c);
    }

    #[test]
    fn row_counts_and_books() {
        let q = |s: &str| s.parse::<QuarterLabel>().unwrap();
        let u = generate_universe(10, q("2023Q1"), q("2024Q4"), 42);
        assert_eq!(u.fundamentals.len(), 80);
        for row in &u.fundamentals {
            assert!(row.current_assets <= row.total_assets);
            assert!(row.current_liabilities <= row.total_liabilities);
        }
        let last = u.bars.iter().map(|b| b.date).max().unwrap();
        assert_eq!(last, NaiveDate::from_ymd_opt(2025, 3, 31).unwrap());
        for bar in &u.bars {
            assert!(bar.low <= bar.open.min(bar.close) && bar.high >= bar.open.max(bar.close));
        }
    }
}
