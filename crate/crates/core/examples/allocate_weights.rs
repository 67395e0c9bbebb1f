//! Integer weight allocation and the strict table round trip.
//!
//! cargo run --example allocate_weights -- [SCORE ...]

use guru_engine::portfolio::{allocate_weights, parse_markdown, render_markdown, PortfolioRow, PortfolioTable, Score};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut scores: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if scores.is_empty() {
        scores = vec![1.0, 1.0, 1.0];
    }
    scores.sort_by(|a, b| b.total_cmp(a));
    let weights = allocate_weights(&scores)?;
    let rows = scores
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(i, (s, w))| PortfolioRow {
            ticker: format!("TK{}", i + 1),
            score: Score::from_f64(*s),
            weight: *w,
            reason: "example".into(),
        })
        .collect();
    let table = PortfolioTable::new(rows)?;
    let text = render_markdown(&table);
    print!("{text}");
    assert_eq!(parse_markdown(&text)?, table);

    let broken = text.replacen("| example |", "|  |", 1);
    if let Err(e) = parse_markdown(&broken) {
        println!("\nrejected edit: {e}");
    }
    Ok(())
}
