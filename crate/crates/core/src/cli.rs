//! Command-line front end: `score`, `backtest` and `validate`.
//!
//! Exit codes: 0 ok, 1 usage, 2 data, 3 empty portfolio; `validate` also
//! returns 4 for a minor and 5 for a major divergence.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent_io::{validate_external, Verdict};
use crate::analytics::{compare, perf, write_comparison_csv, write_perf_csv, PerfReport};
use crate::backtest::{buy_and_hold, write_ledger};
use crate::ingest::{load_bars, load_fundamentals, Fundamentals, IngestError, PriceHistory, QuarterLabel};
use crate::pipeline::{run_guru, score_quarter, GuruRun, PipelineError};
use crate::portfolio::render_markdown;
use crate::strategies::Guru;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;
pub const EXIT_MINOR: i32 = 4;
pub const EXIT_MAJOR: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "guru", version, about = "Deterministic value-investing strategy engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one quarter and print the portfolio table.
    Score(ScoreArgs),
    /// Run quarterly-rebalance backtests and write reports.
    Backtest(BacktestArgs),
    /// Compare an externally produced table with the engine's.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    fundamentals: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    guru: String,
    #[arg(long)]
    quarter: String,
    #[command(flatten)]
    data: DataArgs,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    /// Comma-separated guru names, or `all`.
    #[arg(long)]
    gurus: Option<String>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    /// Cost per unit of gross turnover, in basis points.
    #[arg(long)]
    cost_bps: Option<f64>,
    #[command(flatten)]
    data: DataArgs,
    /// CSV with columns `name,date,close`.
    #[arg(long)]
    benchmarks: Option<PathBuf>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// JSON file with defaults for any of the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    guru: String,
    #[arg(long)]
    quarter: String,
    /// Markdown table produced elsewhere.
    #[arg(long)]
    external: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

/// Defaults for `backtest`; flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestConfig {
    pub gurus: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub cost_bps: Option<f64>,
    pub fundamentals: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub benchmarks: Option<PathBuf>,
    pub outdir: Option<PathBuf>,
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(err: PipelineError) -> Self {
        Self {
            code: if err.is_empty_portfolio() { EXIT_EMPTY } else { EXIT_DATA },
            message: err.to_string(),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if err.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", err.render());
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Score(args) => cmd_score(args, stdout),
        Command::Backtest(args) => cmd_backtest(args, stdout),
        Command::Validate(args) => cmd_validate(args, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            for line in failure.message.lines() {
                let _ = writeln!(stderr, "error: {line}");
            }
            failure.code
        }
    }
}

fn parse_guru(name: &str) -> Result<Guru, Failure> {
    name.parse().map_err(|e: crate::strategies::StrategyError| Failure::usage(e.to_string()))
}

fn parse_q(text: &str) -> Result<QuarterLabel, Failure> {
    text.parse().map_err(|e: IngestError| Failure::usage(e.to_string()))
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::usage(format!("missing required --{flag}")))
}

fn data_error(path: &Path, err: IngestError) -> Failure {
    match err {
        IngestError::Rows(rows) => Failure::data(
            rows.iter()
                .map(|r| format!("{}:{}: {}", path.display(), r.line, r.message))
                .collect::<Vec<_>>()
                .join("\n"),
        ),
        other => Failure::data(format!("{}: {other}", path.display())),
    }
}

fn load_data(fundamentals: &Path, prices: &Path) -> Result<(Fundamentals, PriceHistory), Failure> {
    let f = load_fundamentals(fundamentals).map_err(|e| data_error(fundamentals, e))?;
    let p = load_bars(prices).map_err(|e| data_error(prices, e))?;
    Ok((f, p))
}

fn cmd_score(args: ScoreArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let guru = parse_guru(&args.guru)?;
    let quarter = parse_q(&args.quarter)?;
    let (f, p) = load_data(
        &required(args.data.fundamentals, "fundamentals")?,
        &required(args.data.prices, "prices")?,
    )?;
    let table = render_markdown(&score_quarter(guru, &f, &p, quarter)?.table);
    match args.out {
        Some(path) => std::fs::write(&path, table).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?,
        None => stdout
            .write_all(table.as_bytes())
            .map_err(|e| Failure::data(e.to_string()))?,
    }
    Ok(EXIT_OK)
}

fn cmd_validate(args: ValidateArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let guru = parse_guru(&args.guru)?;
    let quarter = parse_q(&args.quarter)?;
    let (f, p) = load_data(
        &required(args.data.fundamentals, "fundamentals")?,
        &required(args.data.prices, "prices")?,
    )?;
    let text = std::fs::read_to_string(&args.external)
        .map_err(|e| Failure::data(format!("{}: {e}", args.external.display())))?;
    let engine = score_quarter(guru, &f, &p, quarter)?;
    let report = validate_external(&text, &engine.table)
        .map_err(|e| Failure::data(format!("{}: {e}", args.external.display())))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    writeln!(stdout, "{json}").map_err(|e| Failure::data(e.to_string()))?;
    Ok(match report.verdict {
        Verdict::Match => EXIT_OK,
        Verdict::Minor => EXIT_MINOR,
        Verdict::Major => EXIT_MAJOR,
    })
}

#[derive(Debug, Deserialize)]
struct BenchmarkRow {
    name: String,
    date: NaiveDate,
    close: f64,
}

/// Benchmark closes keyed by name, then date.
pub fn load_benchmarks(path: &Path) -> Result<BTreeMap<String, BTreeMap<NaiveDate, f64>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
    let mut out: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    let mut errors = Vec::new();
    for row in rdr.deserialize::<BenchmarkRow>() {
        match row {
            Ok(r) if r.close > 0.0 && r.close.is_finite() => {
                out.entry(r.name).or_default().insert(r.date, r.close);
            }
            Ok(r) => errors.push(crate::ingest::RowError {
                line: 0,
                message: format!("{} on {}: close must be positive", r.name, r.date),
            }),
            Err(e) => errors.push(crate::ingest::RowError {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(IngestError::Rows(errors))
    }
}

#[derive(Serialize)]
struct NamedPerf<'a> {
    name: &'a str,
    #[serde(flatten)]
    report: &'a PerfReport,
}

fn parse_gurus(list: &str) -> Result<Vec<Guru>, Failure> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Guru::ALL.to_vec());
    }
    let mut seen = BTreeSet::new();
    let mut gurus = Vec::new();
    for name in list.split(',').filter(|s| !s.trim().is_empty()) {
        let g = parse_guru(name)?;
        if seen.insert(g) {
            gurus.push(g);
        }
    }
    if gurus.is_empty() {
        return Err(Failure::usage("--gurus names no guru"));
    }
    Ok(gurus)
}

fn cmd_backtest(args: BacktestArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<BacktestConfig>(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => BacktestConfig::default(),
    };
    let gurus = parse_gurus(&args.gurus.or(config.gurus).unwrap_or_else(|| "all".into()))?;
    let from = parse_q(&required(args.from.or(config.from), "from")?)?;
    let to = parse_q(&required(args.to.or(config.to), "to")?)?;
    if to < from {
        return Err(Failure::usage(format!("--from {from} is after --to {to}")));
    }
    let cost_bps = args.cost_bps.or(config.cost_bps).unwrap_or(1.0);
    if !(cost_bps.is_finite() && cost_bps >= 0.0) {
        return Err(Failure::usage(format!("--cost-bps must be non-negative, got {cost_bps}")));
    }
    let outdir = required(args.outdir.or(config.outdir), "outdir")?;
    if outdir.exists() && std::fs::read_dir(&outdir).map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(Failure::usage(format!("{} exists and is not empty", outdir.display())));
    }
    let (f, p) = load_data(
        &required(args.data.fundamentals.or(config.fundamentals), "fundamentals")?,
        &required(args.data.prices.or(config.prices), "prices")?,
    )?;
    let benchmarks = match args.benchmarks.or(config.benchmarks) {
        Some(path) => load_benchmarks(&path).map_err(|e| data_error(&path, e))?,
        None => BTreeMap::new(),
    };

    let cost_rate = cost_bps / 10_000.0;
    let runs: Vec<GuruRun> = gurus
        .par_iter()
        .map(|&g| run_guru(g, &f, &p, from, to, cost_rate))
        .collect::<Result<_, _>>()?;

    let files = render_outputs(&runs, &benchmarks)?;
    write_atomically(&outdir, &files).map_err(|e| Failure::data(format!("{}: {e}", outdir.display())))?;
    for name in files.keys() {
        let _ = writeln!(stdout, "{}", outdir.join(name).display());
    }
    Ok(EXIT_OK)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("in-memory csv");
    buf
}

/// Every backtest output file, keyed by file name.
pub fn render_backtest_outputs(
    runs: &[GuruRun],
    benchmarks: &BTreeMap<String, BTreeMap<NaiveDate, f64>>,
) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    let Some(first) = runs.first() else {
        return Ok(files);
    };
    let dates = first.result.dates();

    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for run in runs {
        let mut ledger = Vec::new();
        write_ledger(&run.result, &mut ledger).map_err(|e| e.to_string())?;
        files.insert(format!("ledger_{}.csv", run.guru), ledger);
        files.insert(format!("weights_{}.csv", run.guru), weights_csv(run));
        let mut md = String::new();
        for table in &run.tables {
            md.push_str(&format!("## {} {}\n\n{}\n", run.guru, table.quarter, render_markdown(&table.table)));
        }
        files.insert(format!("portfolios_{}.md", run.guru), md.into_bytes());
        series.push((run.guru.to_string(), run.result.daily_returns()));
    }
    files.insert(
        "liquidations.csv".into(),
        csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["guru", "date", "ticker"])?;
            for run in runs {
                for l in &run.result.liquidations {
                    w.write_record([run.guru.name(), &l.date.to_string(), &l.ticker])?;
                }
            }
            w.flush()?;
            Ok(())
        }),
    );
    for (name, closes) in benchmarks {
        series.push((name.clone(), buy_and_hold(closes, &dates)));
    }

    let mut reports = Vec::new();
    for (name, returns) in &series {
        let report = perf(returns).map_err(|e| format!("{name}: {e}"))?;
        reports.push((name.clone(), report));
    }
    files.insert(
        "perf.csv".into(),
        csv_bytes(|b| write_perf_csv(&reports, b)),
    );
    let named: Vec<NamedPerf> = reports.iter().map(|(name, report)| NamedPerf { name, report }).collect();
    let mut json = serde_json::to_string_pretty(&named).expect("perf serializes");
    json.push('\n');
    files.insert("perf.json".into(), json.into_bytes());
    files.insert(
        "comparison.csv".into(),
        csv_bytes(|b| write_comparison_csv(&compare(&reports), b)),
    );
    files.insert(
        "cumulative_returns.csv".into(),
        csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            let mut header = vec!["date".to_string()];
            header.extend(series.iter().map(|(n, _)| n.clone()));
            w.write_record(&header)?;
            let mut growth = vec![1.0; series.len()];
            for (i, date) in dates.iter().enumerate() {
                let mut record = vec![date.to_string()];
                for (j, (_, returns)) in series.iter().enumerate() {
                    growth[j] *= 1.0 + returns[i];
                    record.push((growth[j] - 1.0).to_string());
                }
                w.write_record(&record)?;
            }
            w.flush()?;
            Ok(())
        }),
    );
    Ok(files)
}

fn render_outputs(
    runs: &[GuruRun],
    benchmarks: &BTreeMap<String, BTreeMap<NaiveDate, f64>>,
) -> Result<BTreeMap<String, Vec<u8>>, Failure> {
    render_backtest_outputs(runs, benchmarks).map_err(Failure::data)
}

/// Quarter by ticker matrix of integer weights.
fn weights_csv(run: &GuruRun) -> Vec<u8> {
    let tickers: BTreeSet<&str> = run
        .tables
        .iter()
        .flat_map(|t| t.table.rows().iter().map(|r| r.ticker.as_str()))
        .collect();
    csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        let mut header = vec!["quarter"];
        header.extend(tickers.iter().copied());
        w.write_record(&header)?;
        for table in &run.tables {
            let weights = table.table.weights();
            let mut record = vec![table.quarter.to_string()];
            record.extend(tickers.iter().map(|t| weights.get(t).copied().unwrap_or(0).to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Writes into a sibling temp directory and renames it into place.
fn write_atomically(outdir: &Path, files: &BTreeMap<String, Vec<u8>>) -> std::io::Result<()> {
    let parent = outdir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent)?;
    let name = outdir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp)?;
    }
    std::fs::create_dir(&tmp)?;
    let written = (|| {
        for (file, bytes) in files {
            std::fs::write(tmp.join(file), bytes)?;
        }
        if outdir.exists() {
            std::fs::remove_dir(outdir)?;
        }
        std::fs::rename(&tmp, outdir)
    })();
    if written.is_err() {
        let _ = std::fs::remove_dir_all(&tmp);
    }
    written
}
