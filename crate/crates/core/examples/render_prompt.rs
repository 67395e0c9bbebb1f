//! Prints a shipped system prompt and its SHA-256.
//!
//! cargo run --example render_prompt -- [GURU]

use guru_engine::agent_io::render_prompt;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "graham".into());
    let asset = render_prompt(&name)?;
    println!("{}", asset.text);
    eprintln!("sha256 {}", asset.checksum);
    Ok(())
}
