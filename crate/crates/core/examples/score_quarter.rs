//! Scores one quarter of the bundled fixture with every guru and prints the
//! portfolio tables.
//!
//! cargo run --example score_quarter -- [QUARTER]

use guru_engine::fixtures::standard_fixture;
use guru_engine::pipeline::score_quarter;
use guru_engine::portfolio::render_markdown;
use guru_engine::strategies::Guru;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quarter = std::env::args().nth(1).unwrap_or_else(|| "2024Q2".into()).parse()?;
    let data = standard_fixture();
    let (fundamentals, prices) = (data.fundamentals(), data.prices());
    for guru in Guru::ALL {
        println!("## {} {quarter}\n", guru.display_name());
        match score_quarter(guru, &fundamentals, &prices, quarter) {
            Ok(p) => println!("{}", render_markdown(&p.table)),
            Err(e) => println!("no portfolio: {e}\n"),
        }
    }
    Ok(())
}
