//! Performance statistics for each guru next to an equal-weight benchmark,
//! with best and second-best marked per column.
//!
//! cargo run --example performance_report

use guru_engine::analytics::{compare, perf, Mark, PERF_FIELDS};
use guru_engine::backtest::buy_and_hold;
use guru_engine::fixtures::standard_fixture;
use guru_engine::pipeline::run_guru;
use guru_engine::strategies::Guru;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = standard_fixture();
    let (fundamentals, prices) = (data.fundamentals(), data.prices());
    let (from, to) = ("2023Q4".parse()?, "2025Q1".parse()?);
    let mut reports = Vec::new();
    let mut dates = Vec::new();
    for guru in Guru::ALL {
        let run = run_guru(guru, &fundamentals, &prices, from, to, 1e-4)?;
        dates = run.result.dates();
        reports.push((guru.display_name().to_string(), run.perf));
    }
    let index = buy_and_hold(&data.equal_weight_index(), &dates);
    reports.push(("Equal weight".to_string(), perf(&index)?));

    print!("{:<16}", "");
    for f in PERF_FIELDS {
        print!("{f:>13}");
    }
    println!();
    for row in compare(&reports) {
        print!("{:<16}", row.name);
        for (v, m) in row.report.values().iter().zip(row.marks) {
            let tag = match m {
                Some(Mark::Best) => "*",
                Some(Mark::Second) => "+",
                None => " ",
            };
            match v {
                Some(v) => print!("{:>12.4}{tag}", v),
                None => print!("{:>12}{tag}", "NA"),
            }
        }
        println!();
    }
    println!("\n* best, + second best");
    Ok(())
}
