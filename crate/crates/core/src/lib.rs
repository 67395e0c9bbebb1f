//! Deterministic engine for five rules-based value-investing strategies
//! (Graham, Altman, Greenblatt, Piotroski, Buffett), a quarterly-rebalance
//! backtester and performance analytics.
//!
//! The flow is ingest -> metrics -> scaling -> strategies -> portfolio ->
//! backtest -> analytics. [`pipeline`] wires the steps together and [`cli`]
//! exposes them as the `guru` binary.
//!
//! ```
//! use guru_engine::fixtures::standard_fixture;
//! use guru_engine::pipeline::score_quarter;
//! use guru_engine::portfolio::render_markdown;
//! use guru_engine::strategies::Guru;
//!
//! let data = standard_fixture();
//! let q = "2024Q2".parse().unwrap();
//! let table = score_quarter(Guru::Piotroski, &data.fundamentals(), &data.prices(), q).unwrap();
//! assert!(render_markdown(&table.table).starts_with("| Ticker | Score | Weight (%) | Reason |"));
//! ```

pub mod agent_io;
pub mod analytics;
pub mod backtest;
pub mod cli;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod portfolio;
pub mod scaling;
pub mod strategies;

pub use ingest::{Fundamentals, PriceHistory, QuarterLabel};
pub use portfolio::{PortfolioTable, QuarterPortfolio};
pub use strategies::Guru;
