//! Winsorized min-max scaling and per-ticker weight renormalization.
//!
//! cargo run --example scaling

use guru_engine::scaling::{combine_row, invert, winsorize_minmax};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let column: Vec<Option<f64>> = (0..=100).map(|i| Some(f64::from(i))).chain([None, Some(1e6)]).collect();
    let scaled = winsorize_minmax(&column)?;
    println!("p5 {:.2}  p95 {:.2}", scaled.p5, scaled.p95);
    for i in [0, 5, 50, 95, 101, 102] {
        println!("  {:>9?} -> {:?}", column[i], scaled.values[i]);
    }
    let lower_is_better = invert(&scaled);
    println!("inverted 50 -> {:?}", lower_is_better.values[50]);

    let flat = winsorize_minmax(&[Some(7.0), Some(7.0), None])?;
    println!("no spread -> {:?}", flat.values);

    // The missing component's weight is spread over the present one.
    println!("weights 0.25/0.75 over NA/0.8 -> {:?}", combine_row(&[0.25, 0.75], &[None, Some(0.8)]));
    Ok(())
}
