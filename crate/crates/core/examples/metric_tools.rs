//! Prints every metric the scorers see for one ticker, NA included.
//!
//! cargo run --example metric_tools -- [TICKER] [QUARTER]

use guru_engine::fixtures::standard_fixture;
use guru_engine::metrics::MetricFrame;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let ticker = args.next().unwrap_or_else(|| "T003".into());
    let quarter = args.next().unwrap_or_else(|| "2024Q2".into()).parse()?;
    let data = standard_fixture();
    let frame = MetricFrame::build(&data.fundamentals(), &data.prices(), quarter);
    let metrics = frame.rows.get(&ticker).ok_or(format!("{ticker} has no row for {quarter}"))?;
    for (name, value) in metrics.named() {
        match value {
            Some(v) => println!("{name:>28}  {v:.6}"),
            None => println!("{name:>28}  NA"),
        }
    }
    Ok(())
}
