//! Writes the seed-42 synthetic universe to a directory.
//!
//! cargo run --example generate_fixture -- [OUTDIR]

use guru_engine::fixtures::standard_fixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixture".to_string());
    let data = standard_fixture();
    data.write_dir(&dir)?;
    println!(
        "wrote {} fundamentals rows and {} daily bars to {dir}/",
        data.fundamentals.len(),
        data.bars.len()
    );
    Ok(())
}
