//! The nine improvement signals per ticker. `.` marks a signal that could not
//! be evaluated.
//!
//! cargo run --example fscore -- [QUARTER]

use guru_engine::fixtures::standard_fixture;
use guru_engine::metrics::{MetricFrame, PIOTROSKI_SIGNALS};
use guru_engine::strategies::piotroski_score;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quarter = std::env::args().nth(1).unwrap_or_else(|| "2024Q2".into()).parse()?;
    let data = standard_fixture();
    let frame = MetricFrame::build(&data.fundamentals(), &data.prices(), quarter);
    println!("signals: {}", PIOTROSKI_SIGNALS.join(", "));
    for (ticker, m) in &frame.rows {
        let p = &m.piotroski;
        let bits: String = p
            .signals
            .iter()
            .map(|s| match s {
                Some(true) => '1',
                Some(false) => '0',
                None => '.',
            })
            .collect();
        let score = piotroski_score(p).map_or("ineligible".to_string(), |s| format!("{s:.2}"));
        println!("{ticker}  {bits}  F={}/{}  {score}", p.f_score, p.evaluable);
    }
    Ok(())
}
