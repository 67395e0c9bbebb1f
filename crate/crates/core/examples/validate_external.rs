//! Checks a table produced elsewhere (for example by a language model given
//! the shipped prompt) against the engine's own table for the same quarter.
//!
//! cargo run --example validate_external -- [TABLE.md]

use guru_engine::agent_io::validate_external;
use guru_engine::fixtures::standard_fixture;
use guru_engine::pipeline::score_quarter;
use guru_engine::portfolio::render_markdown;
use guru_engine::strategies::Guru;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = standard_fixture();
    let engine = score_quarter(Guru::Greenblatt, &data.fundamentals(), &data.prices(), "2024Q2".parse()?)?;
    let external = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        // Without a file, nudge the engine's own table: one point moves from
        // the first row to the last.
        None => {
            let rows = engine.table.rows();
            let (first, last) = (&rows[0], &rows[rows.len() - 1]);
            render_markdown(&engine.table)
                .replacen(
                    &format!("| {} | {} | {} |", first.ticker, first.score, first.weight),
                    &format!("| {} | {} | {} |", first.ticker, first.score, first.weight - 1),
                    1,
                )
                .replacen(
                    &format!("| {} | {} | {} |", last.ticker, last.score, last.weight),
                    &format!("| {} | {} | {} |", last.ticker, last.score, last.weight + 1),
                    1,
                )
        }
    };
    let report = validate_external(&external, &engine.table)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
