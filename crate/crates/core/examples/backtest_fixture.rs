//! Quarterly-rebalance backtests for every guru on the fixture.
//!
//! cargo run --example backtest_fixture -- [FROM] [TO] [COST_BPS]

use guru_engine::fixtures::standard_fixture;
use guru_engine::pipeline::run_guru;
use guru_engine::strategies::Guru;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let from = args.next().unwrap_or_else(|| "2023Q4".into()).parse()?;
    let to = args.next().unwrap_or_else(|| "2025Q1".into()).parse()?;
    let bps: f64 = args.next().map_or(Ok(1.0), |a| a.parse())?;
    let data = standard_fixture();
    let (fundamentals, prices) = (data.fundamentals(), data.prices());
    for guru in Guru::ALL {
        let run = run_guru(guru, &fundamentals, &prices, from, to, bps / 10_000.0)?;
        println!("{guru:<10} final equity {:.4}  days {}", run.result.final_equity(), run.result.ledger.len());
        for e in &run.result.events {
            println!(
                "    {} trade {}  names {:>2}  turnover {:.4}  cost {:.6}",
                e.quarter,
                e.trade_date,
                e.target.rows().len(),
                e.gross_turnover,
                e.cost
            );
        }
        for l in &run.result.liquidations {
            println!("    {} {} moved to cash", l.date, l.ticker);
        }
    }
    Ok(())
}
