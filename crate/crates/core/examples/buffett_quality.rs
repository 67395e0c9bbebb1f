//! Quality, valuation and adjustment terms behind each Buffett score.
//!
//! cargo run --example buffett_quality -- [QUARTER]

use guru_engine::fixtures::standard_fixture;
use guru_engine::metrics::MetricFrame;
use guru_engine::portfolio::reason_string;
use guru_engine::strategies::{score_buffett, Guru};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quarter = std::env::args().nth(1).unwrap_or_else(|| "2024Q2".into()).parse()?;
    let data = standard_fixture();
    let frame = MetricFrame::build(&data.fundamentals(), &data.prices(), quarter);
    for s in score_buffett(&frame)? {
        if !s.eligible {
            println!("{}  ineligible", s.ticker);
            continue;
        }
        println!("{}  {:.2}  {}", s.ticker, s.score, reason_string(&s.components, Guru::Buffett));
        for (k, v) in s.components.iter().filter(|(k, _)| k.starts_with("p.") || k.starts_with("b.")) {
            println!("      {k:<16} {v:+.3}");
        }
    }
    Ok(())
}
