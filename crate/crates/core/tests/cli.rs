use std::path::{Path, PathBuf};
use std::process::Command;

use guru_engine::cli::{self, EXIT_DATA, EXIT_EMPTY, EXIT_MAJOR, EXIT_MINOR, EXIT_OK, EXIT_USAGE};
use guru_engine::fixtures::standard_fixture;
use guru_engine::portfolio::parse_markdown;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn guru(args: &[&str]) -> Run {
    let mut argv = vec!["guru"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn fixture() -> (TempDir, PathBuf, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    standard_fixture().write_dir(dir.path()).unwrap();
    let p = |n: &str| dir.path().join(n);
    let (f, pr, b) = (p("fundamentals.csv"), p("prices.csv"), p("benchmarks.csv"));
    (dir, f, pr, b)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(guru(&["--help"]).code, EXIT_OK);
    assert_eq!(guru(&[]).code, EXIT_USAGE);
    assert_eq!(guru(&["frobnicate"]).code, EXIT_USAGE);
    let (_d, f, p, _) = fixture();
    let r = guru(&["score", "--guru", "soros", "--quarter", "2024Q2", "--fundamentals", s(&f), "--prices", s(&p)]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("soros"));
    let r = guru(&["score", "--guru", "graham", "--quarter", "2024Q5", "--fundamentals", s(&f), "--prices", s(&p)]);
    assert_eq!(r.code, EXIT_USAGE);
}

#[test]
fn score_prints_a_valid_table_for_every_guru() {
    let (_d, f, p, _) = fixture();
    for g in ["graham", "buffett", "greenblatt", "piotroski", "altman"] {
        let r = guru(&["score", "--guru", g, "--quarter", "2024Q1", "--fundamentals", s(&f), "--prices", s(&p)]);
        assert_eq!(r.code, EXIT_OK, "{g}: {}", r.stderr);
        let table = parse_markdown(&r.stdout).unwrap();
        assert_eq!(table.rows().iter().map(|r| r.weight).sum::<u32>(), 100);
    }
}

#[test]
fn score_without_fundamentals_is_empty() {
    let (_d, f, p, _) = fixture();
    let r = guru(&["score", "--guru", "graham", "--quarter", "2030Q1", "--fundamentals", s(&f), "--prices", s(&p)]);
    assert_eq!(r.code, EXIT_EMPTY, "{}", r.stderr);
}

#[test]
fn bad_rows_are_reported_with_line_numbers() {
    let (d, f, p, _) = fixture();
    let text = std::fs::read_to_string(&f).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[3].split(',').collect();
    cells[2] = "abc";
    lines[3] = cells.join(",");
    let broken = d.path().join("broken.csv");
    std::fs::write(&broken, lines.join("\n") + "\n").unwrap();
    let r = guru(&["score", "--guru", "graham", "--quarter", "2024Q1", "--fundamentals", s(&broken), "--prices", s(&p)]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("broken.csv:4:"), "{}", r.stderr);

    let r = guru(&["score", "--guru", "graham", "--quarter", "2024Q1", "--fundamentals", "/nonexistent.csv", "--prices", s(&p)]);
    assert_eq!(r.code, EXIT_DATA);
}

#[test]
fn validate_exit_codes() {
    let (d, f, p, _) = fixture();
    let own = d.path().join("own.md");
    let r = guru(&["score", "--guru", "buffett", "--quarter", "2024Q2", "--fundamentals", s(&f), "--prices", s(&p), "--out", s(&own)]);
    assert_eq!(r.code, EXIT_OK);
    let validate = |path: &Path| {
        guru(&["validate", "--guru", "buffett", "--quarter", "2024Q2", "--external", s(path), "--fundamentals", s(&f), "--prices", s(&p)])
    };
    let r = validate(&own);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.contains("\"verdict\": \"match\""));

    let text = std::fs::read_to_string(&own).unwrap();
    let table = parse_markdown(&text).unwrap();
    assert!(table.rows().len() >= 2);
    let shift = |delta: u32| -> String {
        let mut out = text.clone();
        let first = &table.rows()[0];
        let last = &table.rows()[table.rows().len() - 1];
        let head = format!("| {} | {} | {} |", first.ticker, first.score, first.weight);
        let tail = format!("| {} | {} | {} |", last.ticker, last.score, last.weight);
        out = out.replacen(&head, &format!("| {} | {} | {} |", first.ticker, first.score, first.weight - delta), 1);
        out.replacen(&tail, &format!("| {} | {} | {} |", last.ticker, last.score, last.weight + delta), 1)
    };
    let write = |name: &str, body: &str| {
        let path = d.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    };
    assert_eq!(validate(&write("one.md", &shift(1))).code, EXIT_OK);
    assert_eq!(validate(&write("minor.md", &shift(3))).code, EXIT_MINOR);

    let last = &table.rows()[table.rows().len() - 1];
    let renamed = text.replacen(&format!("| {} |", last.ticker), "| ZZZZ |", 1);
    let r = validate(&write("major.md", &renamed));
    assert_eq!(r.code, EXIT_MAJOR);
    assert!(r.stdout.contains("ZZZZ"));

    let header = text.replacen("Weight (%)", "Weight", 1);
    assert_eq!(validate(&write("header.md", &header)).code, EXIT_DATA);
    let first = &table.rows()[0];
    let short = text.replacen(
        &format!("| {} | {} | {} |", first.ticker, first.score, first.weight),
        &format!("| {} | {} | {} |", first.ticker, first.score, first.weight - 1),
        1,
    );
    let r = validate(&write("sum99.md", &short));
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("99"), "{}", r.stderr);
}

fn backtest(f: &Path, p: &Path, b: Option<&Path>, out: &Path, extra: &[&str]) -> Run {
    let mut args = vec!["backtest", "--gurus", "all", "--from", "2023Q4", "--to", "2025Q1", "--fundamentals", s(f), "--prices", s(p), "--outdir", s(out)];
    if let Some(b) = b {
        args.extend(["--benchmarks", s(b)]);
    }
    args.extend_from_slice(extra);
    guru(&args)
}

fn ledger(path: &Path) -> Vec<(String, f64, f64, bool, f64)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap(), r[2].parse().unwrap(), &r[3] == "1", r[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn backtest_writes_the_full_report() {
    let (d, f, p, b) = fixture();
    let out = d.path().join("out");
    let r = backtest(&f, &p, Some(&b), &out, &[]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    for g in ["graham", "buffett", "greenblatt", "piotroski", "altman"] {
        for stem in ["ledger", "weights"] {
            assert!(names.contains(&format!("{stem}_{g}.csv")), "{stem}_{g}.csv missing");
        }
        assert!(names.contains(&format!("portfolios_{g}.md")));
    }
    for n in ["perf.csv", "perf.json", "comparison.csv", "cumulative_returns.csv", "liquidations.csv"] {
        assert!(names.contains(&n.to_string()), "{n} missing");
    }
    let comparison = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(comparison.lines().count(), 1 + 5 + 1);
    assert!(comparison.contains("equal_weight"));
    let perf: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("perf.json")).unwrap()).unwrap();
    assert_eq!(perf.as_array().unwrap().len(), 6);

    // The first day of the run deploys cash: full turnover at 1 bp.
    let rows = ledger(&out.join("ledger_graham.csv"));
    assert!(rows[0].3);
    assert_eq!(rows[0].4, 1.0);
    assert_eq!(rows.iter().filter(|r| r.3).count(), 6);

    // Non-empty output directories are refused.
    assert_eq!(backtest(&f, &p, None, &out, &[]).code, EXIT_USAGE);
}

#[test]
fn cost_changes_only_event_days() {
    let (d, f, p, _) = fixture();
    let (free, paid) = (d.path().join("free"), d.path().join("paid"));
    assert_eq!(backtest(&f, &p, None, &free, &["--cost-bps", "0"]).code, EXIT_OK);
    assert_eq!(backtest(&f, &p, None, &paid, &["--cost-bps", "1"]).code, EXIT_OK);
    for g in ["graham", "buffett", "greenblatt", "piotroski", "altman"] {
        let a = ledger(&free.join(format!("ledger_{g}.csv")));
        let b = ledger(&paid.join(format!("ledger_{g}.csv")));
        let mut equity = 1.0;
        for (x, y) in a.iter().zip(&b) {
            let cost = if x.3 { 1e-4 * x.4 } else { 0.0 };
            assert!((x.1 - y.1 - cost).abs() < 1e-12, "{g} {}", x.0);
            equity *= 1.0 + x.1 - cost;
            assert!((equity - y.2).abs() < 1e-10, "{g} {}", x.0);
        }
        assert!(b.last().unwrap().2 < a.last().unwrap().2);
    }
}

#[test]
fn backtest_argument_checks() {
    let (d, f, p, _) = fixture();
    let out = d.path().join("x");
    let inverted = guru(&["backtest", "--gurus", "all", "--from", "2025Q1", "--to", "2023Q4", "--fundamentals", s(&f), "--prices", s(&p), "--outdir", s(&out)]);
    assert_eq!(inverted.code, EXIT_USAGE);
    assert_eq!(backtest(&f, &p, None, &out, &["--cost-bps", "-1"]).code, EXIT_USAGE);
    let r = guru(&["backtest", "--gurus", "graham,soros", "--from", "2023Q4", "--to", "2024Q1", "--fundamentals", s(&f), "--prices", s(&p), "--outdir", s(&out)]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(!out.exists());
}

#[test]
fn config_file_supplies_defaults() {
    let (d, f, p, _) = fixture();
    let out = d.path().join("cfg_out");
    let config = d.path().join("run.json");
    let body = serde_json::json!({
        "gurus": "greenblatt",
        "from": "2024Q1",
        "to": "2024Q2",
        "fundamentals": f,
        "prices": p,
        "outdir": out,
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let r = guru(&["backtest", "--config", s(&config), "--cost-bps", "0"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(out.join("ledger_greenblatt.csv").exists());
    assert!(!out.join("ledger_graham.csv").exists());

    let bad = d.path().join("bad.json");
    std::fs::write(&bad, r#"{"guru": "graham"}"#).unwrap();
    assert_eq!(guru(&["backtest", "--config", s(&bad)]).code, EXIT_USAGE);
}

#[test]
fn binary_matches_library_entry_point() {
    let (_d, f, p, _) = fixture();
    let bin = env!("CARGO_BIN_EXE_guru");
    let out = Command::new(bin)
        .args(["score", "--guru", "piotroski", "--quarter", "2024Q1", "--fundamentals", s(&f), "--prices", s(&p)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let lib = guru(&["score", "--guru", "piotroski", "--quarter", "2024Q1", "--fundamentals", s(&f), "--prices", s(&p)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), lib.stdout);

    let status = Command::new(bin).args(["score", "--guru", "nobody"]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_USAGE));
    let status = Command::new(bin)
        .args(["score", "--guru", "graham", "--quarter", "2030Q1", "--fundamentals", s(&f), "--prices", s(&p)])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(EXIT_EMPTY));
}
