//! Brute-force metric recomputation straight from CSV text, sharing no code
//! with the engine beyond the file format.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// `(year, quarter)`.
pub type Q = (i32, u8);

pub fn q_offset((y, q): Q, n: i32) -> Q {
    let ord = y * 4 + i32::from(q) - 1 + n;
    (ord.div_euclid(4), (ord.rem_euclid(4) + 1) as u8)
}

pub fn q_parse(s: &str) -> Q {
    let (y, q) = s.split_once('Q').expect("quarter label");
    (y.parse().unwrap(), q.parse().unwrap())
}

fn q_end((y, q): Q) -> String {
    let md = ["03-31", "06-30", "09-30", "12-31"][usize::from(q) - 1];
    format!("{y:04}-{md}")
}

pub type Row = BTreeMap<String, Option<f64>>;

pub struct Raw {
    pub fundamentals: BTreeMap<(String, Q), Row>,
    /// ticker -> rows of (date, close, shares), file order.
    pub bars: BTreeMap<String, Vec<(String, f64, Option<f64>)>>,
}

fn cell(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() || s == "NA" {
        None
    } else {
        Some(s.parse().expect("numeric cell"))
    }
}

impl Raw {
    pub fn parse(fundamentals_csv: &[u8], prices_csv: &[u8]) -> Raw {
        let mut fundamentals = BTreeMap::new();
        let mut rdr = csv::Reader::from_reader(fundamentals_csv);
        let header = rdr.headers().unwrap().clone();
        for rec in rdr.records() {
            let rec = rec.unwrap();
            let mut row = Row::new();
            for (name, value) in header.iter().zip(rec.iter()).skip(2) {
                row.insert(name.to_string(), cell(value));
            }
            fundamentals.insert((rec[0].to_string(), q_parse(&rec[1])), row);
        }
        let mut bars: BTreeMap<String, Vec<_>> = BTreeMap::new();
        let mut rdr = csv::Reader::from_reader(prices_csv);
        let header = rdr.headers().unwrap().clone();
        let col = |n: &str| header.iter().position(|h| h == n).unwrap();
        let (cd, cc, cs) = (col("date"), col("close"), col("num_shares"));
        for rec in rdr.records() {
            let rec = rec.unwrap();
            bars.entry(rec[0].to_string())
                .or_default()
                .push((rec[cd].to_string(), cell(&rec[cc]).unwrap(), cell(&rec[cs])));
        }
        Raw { fundamentals, bars }
    }

    pub fn quarters(&self) -> Vec<Q> {
        let mut qs: Vec<Q> = self.fundamentals.keys().map(|(_, q)| *q).collect();
        qs.sort();
        qs.dedup();
        qs
    }

    pub fn tickers_at(&self, q: Q) -> Vec<String> {
        self.fundamentals.keys().filter(|(_, k)| *k == q).map(|(t, _)| t.clone()).collect()
    }

    fn field(&self, t: &str, q: Q, name: &str) -> Option<f64> {
        self.fundamentals.get(&(t.to_string(), q))?.get(name).copied().flatten()
    }

    fn ttm(&self, t: &str, q: Q, name: &str) -> Option<f64> {
        let mut sum = 0.0;
        for back in (0..4).rev() {
            sum += self.field(t, q_offset(q, -back), name)?;
        }
        Some(sum)
    }

    /// (close, shares) of the last bar dated on or before the quarter end.
    fn snapshot(&self, t: &str, q: Q) -> Option<(f64, Option<f64>)> {
        let end = q_end(q);
        self.bars
            .get(t)?
            .iter()
            .filter(|(d, _, _)| *d <= end)
            .max_by(|a, b| a.0.cmp(&b.0))
            .map(|(_, c, s)| (*c, *s))
    }
}

fn ratio(n: Option<f64>, d: Option<f64>) -> Option<f64> {
    match (n, d) {
        (Some(n), Some(d)) if d > 0.0 && (n / d).is_finite() => Some(n / d),
        _ => None,
    }
}

fn minus(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

fn flag(b: Option<bool>) -> Option<f64> {
    b.map(|b| if b { 1.0 } else { 0.0 })
}

fn greater(a: Option<f64>, b: Option<f64>) -> Option<bool> {
    Some(a? > b?)
}

/// Every named metric for `ticker` at `q`.
pub fn oracle_metrics(raw: &Raw, t: &str, q: Q) -> Row {
    let f = |name: &str| raw.field(t, q, name);
    let p = |name: &str| raw.field(t, q_offset(q, -4), name);
    let ttm = |name: &str| raw.ttm(t, q, name);

    let snap = raw.snapshot(t, q);
    let prior_snap = raw.snapshot(t, q_offset(q, -4));
    let price = snap.map(|s| s.0);
    let shares = snap.and_then(|s| s.1);
    let prior_shares = prior_snap.and_then(|s| s.1);
    let mktcap = snap.and_then(|(c, s)| s.map(|s| c * s)).filter(|m| *m > 0.0);

    let (ta, ca, cl, tl) = (f("total_assets"), f("current_assets"), f("current_liabilities"), f("total_liabilities"));
    let equity = f("shareholders_equity");
    let cash = f("cash_and_equivalents");
    let (rev, ebit, ni, cfo, capex) = (ttm("revenue"), ttm("ebit"), ttm("net_income"), ttm("cfo"), ttm("capex"));
    let interest = ttm("interest_expense").map(f64::abs);

    let mut m = Row::new();
    let mut put = |k: &str, v: Option<f64>| {
        m.insert(k.to_string(), v);
    };

    put("current_ratio", ratio(ca, cl));
    put("debt_to_equity", ratio(tl, equity));
    put("interest_coverage", ratio(ebit, interest));
    put("working_capital_ratio", ratio(minus(ca, cl), ta));

    put("roe", ratio(ni, equity));
    put("roa", ratio(f("net_income"), ta));
    put("profit_margin", ratio(ni, rev));
    put("asset_turnover", ratio(rev, ta));

    let pe = ratio(mktcap, ni);
    let pb = ratio(mktcap, equity);
    let ncav = minus(ca, tl);
    put("price", price);
    put("mktcap", mktcap);
    put("pe", pe);
    put("pb", pb);
    put("pe_x_pb", match (pe, pb) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    });
    put("ncav", ncav);
    put("is_netnet", flag(greater(ncav, mktcap)));

    let debt = f("long_term_debt").or(minus(tl, cl));
    let ev = match (mktcap, debt, cash) {
        (Some(mc), Some(d), Some(c)) if mc + d - c > 0.0 => Some(mc + d - c),
        _ => None,
    };
    let ppe = f("net_ppe").or_else(|| {
        let intangibles = Some(f("goodwill")? + f("other_intangibles")?);
        minus(minus(ta, ca), intangibles)
    });
    let capital = match (ca, cash, cl, ppe) {
        (Some(a), Some(c), Some(l), Some(pp)) => Some((a - c - l) + pp),
        _ => None,
    };
    put("ebit_ttm", ebit);
    put("ev", ev);
    put("earnings_yield", ratio(ebit, ev));
    put("roic", ratio(ebit, capital));

    let wc_ta = ratio(minus(ca, cl), ta);
    let re_ta = ratio(f("retained_earnings"), ta);
    let ebit_ta = ratio(ebit, ta);
    let mve_tl = ratio(mktcap, tl);
    let sales_ta = ratio(rev, ta);
    let bve_tl = ratio(equity, tl);
    let models: [(&[(f64, Option<f64>)], f64, f64); 3] = [
        (&[(1.2, wc_ta), (1.4, re_ta), (3.3, ebit_ta), (0.6, mve_tl), (1.0, sales_ta)], 1.81, 2.99),
        (&[(0.717, wc_ta), (0.847, re_ta), (3.107, ebit_ta), (0.420, mve_tl), (0.998, sales_ta)], 1.23, 2.90),
        (&[(6.56, wc_ta), (3.26, re_ta), (6.72, ebit_ta), (1.05, bve_tl)], 1.10, 2.60),
    ];
    let chosen = models.iter().enumerate().find(|(_, (terms, _, _))| terms.iter().all(|(_, x)| x.is_some()));
    let (model, z, band) = match chosen {
        Some((i, (terms, lo, hi))) => {
            let mut z = 0.0;
            for (c, x) in terms.iter() {
                z += c * x.unwrap();
            }
            let band = if z < *lo { 2.0 } else if z > *hi { 0.0 } else { 1.0 };
            (Some(i as f64), Some(z), Some(band))
        }
        None => (None, None, None),
    };
    put("altman_model", model);
    put("z_score", z);
    put("altman_band", band);
    put("wc_ta", wc_ta);
    put("re_ta", re_ta);
    put("ebit_ta", ebit_ta);
    put("mve_tl", mve_tl);
    put("sales_ta", sales_ta);
    put("bve_tl", bve_tl);

    let roa_t = ratio(f("net_income"), ta);
    let roa_p = ratio(p("net_income"), p("total_assets"));
    let use_ltd = f("long_term_debt").is_some() && p("long_term_debt").is_some();
    let debt_field = if use_ltd { "long_term_debt" } else { "total_liabilities" };
    let gm_t = ratio(f("gross_profit"), f("revenue"));
    let gm_p = ratio(p("gross_profit"), p("revenue"));
    let dgm = minus(gm_t, gm_p);
    let signals = [
        ("roa_positive", roa_t.map(|r| r > 0.0)),
        ("cfo_positive", f("cfo").map(|c| c > 0.0)),
        ("delta_roa", greater(roa_t, roa_p)),
        ("accruals", greater(f("cfo"), f("net_income"))),
        ("delta_leverage", greater(ratio(p(debt_field), p("total_assets")), ratio(f(debt_field), ta))),
        ("delta_liquidity", greater(ratio(ca, cl), ratio(p("current_assets"), p("current_liabilities")))),
        ("no_equity_issuance", match (shares, prior_shares) {
            (Some(now), Some(before)) => Some(now <= before),
            _ => None,
        }),
        ("delta_margin", dgm.map(|d| d > 0.0)),
        ("delta_turnover", greater(ratio(f("revenue"), ta), ratio(p("revenue"), p("total_assets")))),
    ];
    let f_score = signals.iter().filter(|(_, s)| *s == Some(true)).count();
    for (name, s) in signals {
        put(&format!("signal_{name}"), flag(s));
    }
    put("f_score", Some(f_score as f64));
    put("roa_t", roa_t);
    put("delta_gross_margin", dgm);

    let fcf = minus(cfo, capex);
    let fcf_yield = ratio(fcf, mktcap);
    put("fcf_ttm", fcf);
    put("fcf_yield", fcf_yield);
    put("roce", ratio(ebit, minus(ta, cl)));
    put("cash_conversion", ratio(cfo, ni));
    let margins: Option<Vec<f64>> = (0..4)
        .rev()
        .map(|back| {
            let qq = q_offset(q, -back);
            ratio(raw.field(t, qq, "net_income"), raw.field(t, qq, "revenue"))
        })
        .collect();
    put("margin_stability", margins.map(|xs| {
        let mean = (xs[0] + xs[1] + xs[2] + xs[3]) / 4.0;
        let mut ss = 0.0;
        for x in &xs {
            ss += (x - mean) * (x - mean);
        }
        let sd = (ss / 3.0).sqrt();
        (1.0 - sd / (mean.abs() + 1e-9)).clamp(0.0, 1.0)
    }));
    put("buyback_yield", ratio(minus(prior_shares, shares), prior_shares));
    put("capex_intensity", ratio(capex, rev));
    put("owner_earnings_yield", fcf_yield);
    m
}

/// The fixture's two CSV files as bytes.
pub fn fixture_csv() -> (Vec<u8>, Vec<u8>) {
    let u = guru_engine::fixtures::standard_fixture();
    let mut f = Vec::new();
    let mut p = Vec::new();
    u.write_fundamentals_csv(&mut f).unwrap();
    u.write_prices_csv(&mut p).unwrap();
    (f, p)
}
