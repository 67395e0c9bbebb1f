//! Z-score model choice, zones and normalized scores, first on hand-picked
//! ratios and then across the fixture.
//!
//! cargo run --example altman_zones

use guru_engine::fixtures::standard_fixture;
use guru_engine::metrics::{AltmanRatios, AltmanRow, MetricFrame};
use guru_engine::strategies::{altman_score, score_altman};

fn show(label: &str, row: &AltmanRow) {
    match (row.model, row.z_score, row.band) {
        (Some(m), Some(z), Some(b)) => {
            println!("{label:<24} model {m:<4} z {z:>7.3}  {b:<8} score {:.2}", altman_score(m, z))
        }
        _ => println!("{label:<24} not evaluable"),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let public = AltmanRatios {
        wc_ta: Some(0.1),
        re_ta: Some(0.2),
        ebit_ta: Some(0.15),
        mve_tl: Some(1.0),
        sales_ta: Some(1.2),
        bve_tl: None,
    };
    show("public manufacturer", &AltmanRow::from_ratios(public));
    let services = AltmanRatios {
        mve_tl: None,
        sales_ta: None,
        bve_tl: Some(0.8),
        ..public
    };
    show("no market value", &AltmanRow::from_ratios(services));

    let data = standard_fixture();
    let frame = MetricFrame::build(&data.fundamentals(), &data.prices(), "2024Q2".parse()?);
    println!();
    for (ticker, m) in &frame.rows {
        show(ticker, &m.altman);
    }
    let ranked = score_altman(&frame)?;
    println!("\nranking: {}", ranked.iter().map(|s| s.ticker.as_str()).collect::<Vec<_>>().join(" "));
    Ok(())
}
