//! Earnings-yield and return-on-capital ranks, combined rank and score.
//!
//! cargo run --example magic_formula -- [QUARTER]

use guru_engine::fixtures::standard_fixture;
use guru_engine::metrics::MetricFrame;
use guru_engine::strategies::score_greenblatt;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quarter = std::env::args().nth(1).unwrap_or_else(|| "2024Q2".into()).parse()?;
    let data = standard_fixture();
    let frame = MetricFrame::build(&data.fundamentals(), &data.prices(), quarter);
    println!("{:<6} {:>8} {:>8} {:>4} {:>4} {:>5} {:>6}", "ticker", "EY", "ROIC", "rEY", "rROC", "comb", "score");
    for s in score_greenblatt(&frame)? {
        let g = &frame.rows[&s.ticker].greenblatt;
        if !s.eligible {
            println!("{:<6} ineligible", s.ticker);
            continue;
        }
        let c = &s.components;
        println!(
            "{:<6} {:>8.4} {:>8.4} {:>4} {:>4} {:>5} {:>6.2}",
            s.ticker,
            g.earnings_yield.unwrap_or(f64::NAN),
            g.roic.unwrap_or(f64::NAN),
            c["rank_ey"],
            c["rank_roic"],
            c["combined_rank"],
            s.score
        );
    }
    Ok(())
}
