//! Financial metric tools with strict NA semantics.
//!
//! Every ratio returns `None` when an operand is missing, the denominator is
//! zero or negative, or the result is not finite. Nothing is imputed.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::ingest::{
    ttm, Fundamentals, FundamentalsQuarter, PriceHistory, QuarterLabel, QuarterSnapshot,
    TickerHistory,
};

/// `num / den`, NA unless `den > 0` and the quotient is finite.
pub(crate) fn div_pos(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    let (n, d) = (num?, den?);
    if d > 0.0 {
        Some(n / d).filter(|v| v.is_finite())
    } else {
        None
    }
}

fn sub(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

fn gt(a: Option<f64>, b: Option<f64>) -> Option<bool> {
    Some(a? > b?)
}

/// Trailing-twelve-month sums of the flow fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TtmFlows {
    pub revenue: Option<f64>,
    pub gross_profit: Option<f64>,
    pub ebit: Option<f64>,
    pub net_income: Option<f64>,
    pub interest_expense: Option<f64>,
    pub cfo: Option<f64>,
    pub capex: Option<f64>,
}

impl TtmFlows {
    pub fn from_history(history: &TickerHistory, upto: QuarterLabel) -> Self {
        Self {
            revenue: ttm(history, upto, |f| f.revenue),
            gross_profit: ttm(history, upto, |f| f.gross_profit),
            ebit: ttm(history, upto, |f| f.ebit),
            net_income: ttm(history, upto, |f| f.net_income),
            interest_expense: ttm(history, upto, |f| f.interest_expense),
            cfo: ttm(history, upto, |f| f.cfo),
            capex: ttm(history, upto, |f| f.capex),
        }
    }
}

/// Everything the metric tools need for one ticker at one evaluation quarter.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricInputs {
    pub current: FundamentalsQuarter,
    /// Same quarter one year earlier (t-4).
    pub prior_year: Option<FundamentalsQuarter>,
    pub ttm: TtmFlows,
    pub snapshot: Option<QuarterSnapshot>,
    pub prior_snapshot: Option<QuarterSnapshot>,
    /// Quarterly net margins for t-3..=t, oldest first.
    pub recent_margins: [Option<f64>; 4],
}

impl MetricInputs {
    /// Inputs with only the current row set; everything else NA.
    pub fn from_current(current: FundamentalsQuarter) -> Self {
        Self {
            current,
            prior_year: None,
            ttm: TtmFlows::default(),
            snapshot: None,
            prior_snapshot: None,
            recent_margins: [None; 4],
        }
    }

    /// Returns `None` when the ticker has no row for `quarter`.
    pub fn assemble(
        history: &TickerHistory,
        quarter: QuarterLabel,
        snapshot: Option<QuarterSnapshot>,
        prior_snapshot: Option<QuarterSnapshot>,
    ) -> Option<Self> {
        let current = history.get(&quarter)?.clone();
        let mut recent_margins = [None; 4];
        for (i, slot) in recent_margins.iter_mut().enumerate() {
            *slot = history
                .get(&quarter.offset(i as i64 - 3))
                .and_then(|f| div_pos(f.net_income, f.revenue));
        }
        Some(Self {
            current,
            prior_year: history.get(&quarter.offset(-4)).cloned(),
            ttm: TtmFlows::from_history(history, quarter),
            snapshot,
            prior_snapshot,
            recent_margins,
        })
    }

    fn mktcap(&self) -> Option<f64> {
        self.snapshot.as_ref()?.mktcap.filter(|m| *m > 0.0)
    }

    fn shares(&self) -> Option<f64> {
        self.snapshot.as_ref()?.shares.map(|s| s as f64)
    }

    fn prior_shares(&self) -> Option<f64> {
        self.prior_snapshot.as_ref()?.shares.map(|s| s as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LiquidityLeverage {
    pub current_ratio: Option<f64>,
    pub debt_to_equity: Option<f64>,
    pub interest_coverage: Option<f64>,
    pub working_capital_ratio: Option<f64>,
}

pub fn liquidity_leverage(m: &MetricInputs) -> LiquidityLeverage {
    let f = &m.current;
    LiquidityLeverage {
        current_ratio: div_pos(f.current_assets, f.current_liabilities),
        debt_to_equity: div_pos(f.total_liabilities, f.shareholders_equity),
        interest_coverage: div_pos(m.ttm.ebit, m.ttm.interest_expense.map(f64::abs)),
        working_capital_ratio: div_pos(sub(f.current_assets, f.current_liabilities), f.total_assets),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Profitability {
    pub roe: Option<f64>,
    pub roa: Option<f64>,
    pub profit_margin: Option<f64>,
    pub asset_turnover: Option<f64>,
}

pub fn profitability(m: &MetricInputs) -> Profitability {
    let f = &m.current;
    Profitability {
        roe: div_pos(m.ttm.net_income, f.shareholders_equity),
        roa: div_pos(f.net_income, f.total_assets),
        profit_margin: div_pos(m.ttm.net_income, m.ttm.revenue),
        asset_turnover: div_pos(m.ttm.revenue, f.total_assets),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Valuation {
    pub price: Option<f64>,
    pub mktcap: Option<f64>,
    pub pe: Option<f64>,
    pub pb: Option<f64>,
    pub pe_x_pb: Option<f64>,
    pub ncav: Option<f64>,
    pub is_netnet: Option<bool>,
}

pub fn valuation(m: &MetricInputs) -> Valuation {
    let f = &m.current;
    let mktcap = m.mktcap();
    let pe = div_pos(mktcap, m.ttm.net_income);
    let pb = div_pos(mktcap, f.shareholders_equity);
    let ncav = sub(f.current_assets, f.total_liabilities);
    Valuation {
        price: m.snapshot.as_ref().map(|s| s.price),
        mktcap,
        pe,
        pb,
        pe_x_pb: pe.zip(pb).map(|(a, b)| a * b),
        ncav,
        is_netnet: gt(ncav, mktcap),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GreenblattInputs {
    pub ebit_ttm: Option<f64>,
    pub ev: Option<f64>,
    pub earnings_yield: Option<f64>,
    pub roic: Option<f64>,
}

pub fn greenblatt_inputs(m: &MetricInputs) -> GreenblattInputs {
    let f = &m.current;
    // Total liabilities net of current liabilities stands in for missing debt.
    let debt = f
        .long_term_debt
        .or_else(|| sub(f.total_liabilities, f.current_liabilities));
    let ev = (|| Some(m.mktcap()? + debt? - f.cash_and_equivalents?))().filter(|ev| *ev > 0.0);
    let net_ppe = f.net_ppe.or_else(|| {
        Some(f.total_assets? - f.current_assets? - (f.goodwill? + f.other_intangibles?))
    });
    let capital =
        (|| Some((f.current_assets? - f.cash_and_equivalents? - f.current_liabilities?) + net_ppe?))();
    GreenblattInputs {
        ebit_ttm: m.ttm.ebit,
        ev,
        earnings_yield: div_pos(m.ttm.ebit, ev),
        roic: div_pos(m.ttm.ebit, capital),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AltmanModel {
    /// Public manufacturing.
    Z,
    /// Private manufacturing.
    ZPrime,
    /// Non-manufacturing / services.
    ZDoublePrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Band {
    Safe,
    Grey,
    Distress,
}

impl fmt::Display for AltmanModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AltmanModel::Z => "Z",
            AltmanModel::ZPrime => "Z'",
            AltmanModel::ZDoublePrime => "Z''",
        })
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Safe => "Safe",
            Band::Grey => "Grey",
            Band::Distress => "Distress",
        })
    }
}

/// The six Altman input ratios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AltmanRatios {
    pub wc_ta: Option<f64>,
    pub re_ta: Option<f64>,
    pub ebit_ta: Option<f64>,
    pub mve_tl: Option<f64>,
    pub sales_ta: Option<f64>,
    pub bve_tl: Option<f64>,
}

impl AltmanModel {
    pub const PREFERENCE: [AltmanModel; 3] =
        [AltmanModel::Z, AltmanModel::ZPrime, AltmanModel::ZDoublePrime];

    /// `(lower, upper)` zone cutoffs.
    pub fn cutoffs(self) -> (f64, f64) {
        match self {
            AltmanModel::Z => (1.81, 2.99),
            AltmanModel::ZPrime => (1.23, 2.90),
            AltmanModel::ZDoublePrime => (1.10, 2.60),
        }
    }

    /// Coefficient/ratio pairs in formula order.
    pub fn terms(self, r: &AltmanRatios) -> Vec<(&'static str, f64, Option<f64>)> {
        match self {
            AltmanModel::Z => vec![
                ("WC/TA", 1.2, r.wc_ta),
                ("RE/TA", 1.4, r.re_ta),
                ("EBIT/TA", 3.3, r.ebit_ta),
                ("MVE/TL", 0.6, r.mve_tl),
                ("Sales/TA", 1.0, r.sales_ta),
            ],
            AltmanModel::ZPrime => vec![
                ("WC/TA", 0.717, r.wc_ta),
                ("RE/TA", 0.847, r.re_ta),
                ("EBIT/TA", 3.107, r.ebit_ta),
                ("MVE/TL", 0.420, r.mve_tl),
                ("Sales/TA", 0.998, r.sales_ta),
            ],
            AltmanModel::ZDoublePrime => vec![
                ("WC/TA", 6.56, r.wc_ta),
                ("RE/TA", 3.26, r.re_ta),
                ("EBIT/TA", 6.72, r.ebit_ta),
                ("BVE/TL", 1.05, r.bve_tl),
            ],
        }
    }

    /// Z value, NA if any required ratio is NA.
    pub fn z(self, r: &AltmanRatios) -> Option<f64> {
        self.terms(r)
            .into_iter()
            .try_fold(0.0, |acc, (_, coef, x)| x.map(|x| acc + coef * x))
    }

    /// Distress below `lower`, Safe above `upper`, Grey on `[lower, upper]`.
    pub fn band(self, z: f64) -> Band {
        let (lower, upper) = self.cutoffs();
        if z < lower {
            Band::Distress
        } else if z > upper {
            Band::Safe
        } else {
            Band::Grey
        }
    }

    /// First model in preference order whose ratios are all available.
    pub fn select(r: &AltmanRatios) -> Option<AltmanModel> {
        Self::PREFERENCE
            .into_iter()
            .find(|m| m.terms(r).iter().all(|(_, _, x)| x.is_some()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AltmanRow {
    pub model: Option<AltmanModel>,
    pub z_score: Option<f64>,
    pub band: Option<Band>,
    #[serde(flatten)]
    pub ratios: AltmanRatios,
}

impl AltmanRow {
    pub fn from_ratios(ratios: AltmanRatios) -> Self {
        let model = AltmanModel::select(&ratios);
        let z_score = model.and_then(|m| m.z(&ratios));
        Self {
            model,
            z_score,
            band: model.zip(z_score).map(|(m, z)| m.band(z)),
            ratios,
        }
    }
}

pub fn altman_inputs(m: &MetricInputs) -> AltmanRow {
    let f = &m.current;
    AltmanRow::from_ratios(AltmanRatios {
        wc_ta: div_pos(sub(f.current_assets, f.current_liabilities), f.total_assets),
        re_ta: div_pos(f.retained_earnings, f.total_assets),
        ebit_ta: div_pos(m.ttm.ebit, f.total_assets),
        mve_tl: div_pos(m.mktcap(), f.total_liabilities),
        sales_ta: div_pos(m.ttm.revenue, f.total_assets),
        bve_tl: div_pos(f.shareholders_equity, f.total_liabilities),
    })
}

pub const PIOTROSKI_SIGNALS: [&str; 9] = [
    "roa_positive",
    "cfo_positive",
    "delta_roa",
    "accruals",
    "delta_leverage",
    "delta_liquidity",
    "no_equity_issuance",
    "delta_margin",
    "delta_turnover",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PiotroskiRow {
    /// `Some(true)` = 1, `Some(false)` = 0, `None` = not evaluable.
    pub signals: [Option<bool>; 9],
    pub f_score: u8,
    pub evaluable: u8,
    pub roa_t: Option<f64>,
    pub delta_gross_margin: Option<f64>,
}

impl PiotroskiRow {
    pub fn from_signals(
        signals: [Option<bool>; 9],
        roa_t: Option<f64>,
        delta_gross_margin: Option<f64>,
    ) -> Self {
        Self {
            signals,
            f_score: signals.iter().filter(|s| **s == Some(true)).count() as u8,
            evaluable: signals.iter().filter(|s| s.is_some()).count() as u8,
            roa_t,
            delta_gross_margin,
        }
    }
}

pub fn piotroski_signals(m: &MetricInputs) -> PiotroskiRow {
    let t = &m.current;
    let empty = FundamentalsQuarter::empty(t.ticker.clone(), t.quarter.offset(-4));
    let p = m.prior_year.as_ref().unwrap_or(&empty);

    let roa = |f: &FundamentalsQuarter| div_pos(f.net_income, f.total_assets);
    let current_ratio = |f: &FundamentalsQuarter| div_pos(f.current_assets, f.current_liabilities);
    let gross_margin = |f: &FundamentalsQuarter| div_pos(f.gross_profit, f.revenue);
    let turnover = |f: &FundamentalsQuarter| div_pos(f.revenue, f.total_assets);
    let leverage = |f: &FundamentalsQuarter, use_ltd: bool| {
        if use_ltd {
            div_pos(f.long_term_debt, f.total_assets)
        } else {
            div_pos(f.total_liabilities, f.total_assets)
        }
    };
    let use_ltd = t.long_term_debt.is_some() && p.long_term_debt.is_some();

    let roa_t = roa(t);
    let delta_gross_margin = sub(gross_margin(t), gross_margin(p));
    let signals = [
        roa_t.map(|r| r > 0.0),
        t.cfo.map(|c| c > 0.0),
        gt(roa_t, roa(p)),
        gt(t.cfo, t.net_income),
        gt(leverage(p, use_ltd), leverage(t, use_ltd)),
        gt(current_ratio(t), current_ratio(p)),
        m.shares().zip(m.prior_shares()).map(|(now, before)| now <= before),
        delta_gross_margin.map(|d| d > 0.0),
        gt(turnover(t), turnover(p)),
    ];
    PiotroskiRow::from_signals(signals, roa_t, delta_gross_margin)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BuffettExtras {
    pub fcf_ttm: Option<f64>,
    pub fcf_yield: Option<f64>,
    pub roce: Option<f64>,
    pub cash_conversion: Option<f64>,
    pub margin_stability: Option<f64>,
    pub buyback_yield: Option<f64>,
    pub capex_intensity: Option<f64>,
    pub owner_earnings_yield: Option<f64>,
}

/// `1 - stdev/|mean|` of four quarterly margins, clipped to `[0, 1]`.
/// Uses the sample standard deviation.
pub fn margin_stability(margins: &[Option<f64>; 4]) -> Option<f64> {
    let xs: Vec<f64> = margins.iter().copied().collect::<Option<Vec<_>>>()?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let value = 1.0 - var.sqrt() / (mean.abs() + 1e-9);
    Some(value.clamp(0.0, 1.0))
}

pub fn buffett_extras(m: &MetricInputs) -> BuffettExtras {
    let f = &m.current;
    let fcf_ttm = sub(m.ttm.cfo, m.ttm.capex);
    let fcf_yield = div_pos(fcf_ttm, m.mktcap());
    let prior_shares = m.prior_shares();
    BuffettExtras {
        fcf_ttm,
        fcf_yield,
        roce: div_pos(m.ttm.ebit, sub(f.total_assets, f.current_liabilities)),
        cash_conversion: div_pos(m.ttm.cfo, m.ttm.net_income),
        margin_stability: margin_stability(&m.recent_margins),
        buyback_yield: div_pos(sub(prior_shares, m.shares()), prior_shares),
        capex_intensity: div_pos(m.ttm.capex, m.ttm.revenue),
        owner_earnings_yield: fcf_yield,
    }
}

/// Every metric for one ticker.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TickerMetrics {
    pub liquidity: LiquidityLeverage,
    pub profitability: Profitability,
    pub valuation: Valuation,
    pub greenblatt: GreenblattInputs,
    pub altman: AltmanRow,
    pub piotroski: PiotroskiRow,
    pub buffett: BuffettExtras,
}

fn bool_metric(b: Option<bool>) -> Option<f64> {
    b.map(|b| if b { 1.0 } else { 0.0 })
}

impl TickerMetrics {
    pub fn compute(m: &MetricInputs) -> Self {
        Self {
            liquidity: liquidity_leverage(m),
            profitability: profitability(m),
            valuation: valuation(m),
            greenblatt: greenblatt_inputs(m),
            altman: altman_inputs(m),
            piotroski: piotroski_signals(m),
            buffett: buffett_extras(m),
        }
    }

    /// Flat metric-name map. Booleans and signals appear as 1.0/0.0, the
    /// Altman model and band as their ordinal position.
    pub fn named(&self) -> BTreeMap<String, Option<f64>> {
        let l = &self.liquidity;
        let p = &self.profitability;
        let v = &self.valuation;
        let g = &self.greenblatt;
        let a = &self.altman;
        let b = &self.buffett;
        let mut out: BTreeMap<String, Option<f64>> = [
            ("current_ratio", l.current_ratio),
            ("debt_to_equity", l.debt_to_equity),
            ("interest_coverage", l.interest_coverage),
            ("working_capital_ratio", l.working_capital_ratio),
            ("roe", p.roe),
            ("roa", p.roa),
            ("profit_margin", p.profit_margin),
            ("asset_turnover", p.asset_turnover),
            ("price", v.price),
            ("mktcap", v.mktcap),
            ("pe", v.pe),
            ("pb", v.pb),
            ("pe_x_pb", v.pe_x_pb),
            ("ncav", v.ncav),
            ("is_netnet", bool_metric(v.is_netnet)),
            ("ebit_ttm", g.ebit_ttm),
            ("ev", g.ev),
            ("earnings_yield", g.earnings_yield),
            ("roic", g.roic),
            ("altman_model", a.model.map(|m| m as u8 as f64)),
            ("z_score", a.z_score),
            ("altman_band", a.band.map(|b| b as u8 as f64)),
            ("wc_ta", a.ratios.wc_ta),
            ("re_ta", a.ratios.re_ta),
            ("ebit_ta", a.ratios.ebit_ta),
            ("mve_tl", a.ratios.mve_tl),
            ("sales_ta", a.ratios.sales_ta),
            ("bve_tl", a.ratios.bve_tl),
            ("f_score", Some(f64::from(self.piotroski.f_score))),
            ("roa_t", self.piotroski.roa_t),
            ("delta_gross_margin", self.piotroski.delta_gross_margin),
            ("fcf_ttm", b.fcf_ttm),
            ("fcf_yield", b.fcf_yield),
            ("roce", b.roce),
            ("cash_conversion", b.cash_conversion),
            ("margin_stability", b.margin_stability),
            ("buyback_yield", b.buyback_yield),
            ("capex_intensity", b.capex_intensity),
            ("owner_earnings_yield", b.owner_earnings_yield),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        for (name, s) in PIOTROSKI_SIGNALS.iter().zip(self.piotroski.signals) {
            out.insert(format!("signal_{name}"), bool_metric(s));
        }
        out
    }
}

/// Per-ticker metrics for one evaluation quarter, ordered by ticker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricFrame {
    pub quarter: QuarterLabel,
    pub rows: BTreeMap<String, TickerMetrics>,
}

impl MetricFrame {
    /// Universe = tickers with a fundamentals row for `quarter`. Missing price
    /// data leaves the market-based metrics NA.
    pub fn build(fundamentals: &Fundamentals, prices: &PriceHistory, quarter: QuarterLabel) -> Self {
        let rows = fundamentals
            .universe(quarter)
            .into_iter()
            .filter_map(|ticker| {
                let history = fundamentals.history(ticker)?;
                let snapshot = prices.snapshot(ticker, quarter).ok();
                let prior = prices.snapshot(ticker, quarter.offset(-4)).ok();
                let inputs = MetricInputs::assemble(history, quarter, snapshot, prior)?;
                Some((ticker.to_string(), TickerMetrics::compute(&inputs)))
            })
            .collect();
        Self { quarter, rows }
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One metric across the universe, aligned with [`MetricFrame::tickers`].
    pub fn column(&self, f: impl Fn(&TickerMetrics) -> Option<f64>) -> Vec<Option<f64>> {
        self.rows.values().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_quarter;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-12)
    }

    fn inputs() -> MetricInputs {
        MetricInputs::from_current(FundamentalsQuarter::empty("AAA", parse_quarter("2024Q4").unwrap()))
    }

    fn snap(mktcap: f64, shares: u64) -> QuarterSnapshot {
        QuarterSnapshot {
            ticker: "AAA".into(),
            quarter: parse_quarter("2024Q4").unwrap(),
            snapshot_date: chrono::NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
            price: mktcap / shares as f64,
            shares: Some(shares),
            mktcap: Some(mktcap),
        }
    }

    #[test]
    fn liquidity_examples() {
        let mut m = inputs();
        m.current.current_assets = Some(200.0);
        m.current.current_liabilities = Some(100.0);
        m.ttm.ebit = Some(50.0);
        m.ttm.interest_expense = Some(-10.0);
        let l = liquidity_leverage(&m);
        assert_eq!(l.current_ratio, Some(2.0));
        assert_eq!(l.interest_coverage, Some(5.0));

        m.current.current_liabilities = Some(0.0);
        assert_eq!(liquidity_leverage(&m).current_ratio, None);
    }

    #[test]
    fn profitability_examples() {
        let mut m = inputs();
        m.ttm.net_income = Some(10.0);
        m.current.shareholders_equity = Some(100.0);
        m.ttm.revenue = Some(0.0);
        let p = profitability(&m);
        assert!(close(p.roe, 0.10));
        assert_eq!(p.profit_margin, None);

        m.ttm.revenue = Some(400.0);
        m.current.total_assets = Some(200.0);
        assert_eq!(profitability(&m).asset_turnover, Some(2.0));
    }

    #[test]
    fn valuation_examples() {
        let mut m = inputs();
        m.snapshot = Some(snap(100.0, 10));
        m.ttm.net_income = Some(5.0);
        assert_eq!(valuation(&m).pe, Some(20.0));
        m.ttm.net_income = Some(-5.0);
        assert_eq!(valuation(&m).pe, None);

        m.snapshot = Some(snap(150.0, 10));
        m.current.current_assets = Some(300.0);
        m.current.total_liabilities = Some(100.0);
        let v = valuation(&m);
        assert_eq!(v.ncav, Some(200.0));
        assert_eq!(v.is_netnet, Some(true));
        assert_eq!(v.pe_x_pb, None);
    }

    #[test]
    fn greenblatt_examples() {
        let mut m = inputs();
        m.snapshot = Some(snap(90.0, 10));
        m.current.long_term_debt = Some(20.0);
        m.current.cash_and_equivalents = Some(10.0);
        m.ttm.ebit = Some(10.0);
        let g = greenblatt_inputs(&m);
        assert_eq!(g.ev, Some(100.0));
        assert!(close(g.earnings_yield, 0.10));

        m.current.cash_and_equivalents = Some(115.0);
        let g = greenblatt_inputs(&m);
        assert_eq!(g.ev, None);
        assert_eq!(g.earnings_yield, None);

        let mut m = inputs();
        m.current.current_assets = Some(100.0);
        m.current.cash_and_equivalents = Some(20.0);
        m.current.current_liabilities = Some(50.0);
        m.current.net_ppe = Some(70.0);
        m.ttm.ebit = Some(25.0);
        assert_eq!(greenblatt_inputs(&m).roic, Some(0.25));
    }

    #[test]
    fn greenblatt_fallbacks() {
        let mut m = inputs();
        m.snapshot = Some(snap(90.0, 10));
        m.current.total_liabilities = Some(50.0);
        m.current.current_liabilities = Some(30.0);
        m.current.cash_and_equivalents = Some(10.0);
        m.current.total_assets = Some(300.0);
        m.current.current_assets = Some(100.0);
        m.current.goodwill = Some(20.0);
        m.current.other_intangibles = Some(10.0);
        m.ttm.ebit = Some(33.0);
        let g = greenblatt_inputs(&m);
        // debt proxy = 50 - 30
        assert_eq!(g.ev, Some(100.0));
        // capital = (100 - 10 - 30) + (300 - 100 - 30)
        assert!(close(g.roic, 33.0 / 230.0));
    }

    #[test]
    fn altman_hand_evaluation() {
        let row = AltmanRow::from_ratios(AltmanRatios {
            wc_ta: Some(0.1),
            re_ta: Some(0.2),
            ebit_ta: Some(0.15),
            mve_tl: Some(1.0),
            sales_ta: Some(1.2),
            bve_tl: None,
        });
        assert_eq!(row.model, Some(AltmanModel::Z));
        assert!((row.z_score.unwrap() - 2.695).abs() < 1e-9);
        assert_eq!(row.band, Some(Band::Grey));

        let zero = AltmanRow::from_ratios(AltmanRatios {
            wc_ta: Some(0.0),
            re_ta: Some(0.0),
            ebit_ta: Some(0.0),
            mve_tl: Some(0.0),
            sales_ta: Some(0.0),
            bve_tl: None,
        });
        assert_eq!(zero.z_score, Some(0.0));
        assert_eq!(zero.band, Some(Band::Distress));
    }

    #[test]
    fn altman_model_selection_falls_back_to_services_model() {
        let row = AltmanRow::from_ratios(AltmanRatios {
            wc_ta: Some(0.1),
            re_ta: Some(0.2),
            ebit_ta: Some(0.1),
            mve_tl: None,
            sales_ta: None,
            bve_tl: Some(0.5),
        });
        assert_eq!(row.model, Some(AltmanModel::ZDoublePrime));
        let expected = 6.56 * 0.1 + 3.26 * 0.2 + 6.72 * 0.1 + 1.05 * 0.5;
        assert_eq!(row.z_score, Some(expected));

        let none = AltmanRow::from_ratios(AltmanRatios::default());
        assert_eq!((none.model, none.z_score, none.band), (None, None, None));
    }

    #[test]
    fn altman_band_boundaries_are_grey() {
        for model in AltmanModel::PREFERENCE {
            let (lo, hi) = model.cutoffs();
            assert_eq!(model.band(lo), Band::Grey);
            assert_eq!(model.band(hi), Band::Grey);
            assert_eq!(model.band(lo - 1e-9), Band::Distress);
            assert_eq!(model.band(hi + 1e-9), Band::Safe);
        }
    }

    #[test]
    fn piotroski_counts() {
        let row = PiotroskiRow::from_signals(
            [Some(true), Some(true), None, Some(true), None, None, Some(true), None, None],
            None,
            None,
        );
        assert_eq!(row.f_score, 4);
        assert_eq!(row.evaluable, 4);
    }

    #[test]
    fn piotroski_share_issuance_signal() {
        let mut m = inputs();
        m.snapshot = Some(snap(1000.0, 100));
        m.prior_snapshot = Some(snap(900.0, 90));
        assert_eq!(piotroski_signals(&m).signals[6], Some(false));
        m.snapshot = Some(snap(1000.0, 90));
        assert_eq!(piotroski_signals(&m).signals[6], Some(true));
    }

    #[test]
    fn piotroski_all_true() {
        let q = parse_quarter("2024Q4").unwrap();
        let mut t = FundamentalsQuarter::empty("AAA", q);
        let mut p = FundamentalsQuarter::empty("AAA", q.offset(-4));
        t.net_income = Some(10.0);
        p.net_income = Some(5.0);
        t.total_assets = Some(100.0);
        p.total_assets = Some(100.0);
        t.cfo = Some(12.0);
        t.long_term_debt = Some(10.0);
        p.long_term_debt = Some(20.0);
        t.current_assets = Some(50.0);
        p.current_assets = Some(40.0);
        t.current_liabilities = Some(20.0);
        p.current_liabilities = Some(20.0);
        t.gross_profit = Some(40.0);
        p.gross_profit = Some(30.0);
        t.revenue = Some(100.0);
        p.revenue = Some(90.0);
        let mut m = MetricInputs::from_current(t);
        m.prior_year = Some(p);
        m.snapshot = Some(snap(1000.0, 100));
        m.prior_snapshot = Some(snap(1000.0, 100));
        let row = piotroski_signals(&m);
        assert_eq!(row.f_score, 9);
        assert_eq!(row.evaluable, 9);
    }

    #[test]
    fn buffett_examples() {
        let mut m = inputs();
        m.ttm.cfo = Some(120.0);
        m.ttm.capex = Some(20.0);
        m.snapshot = Some(snap(1000.0, 100));
        m.prior_snapshot = Some(snap(1000.0, 110));
        m.current.total_assets = Some(200.0);
        m.current.current_liabilities = Some(200.0);
        m.ttm.ebit = Some(30.0);
        let b = buffett_extras(&m);
        assert!(close(b.fcf_yield, 0.10));
        assert_eq!(b.owner_earnings_yield, b.fcf_yield);
        assert_eq!(b.roce, None);
        assert!((b.buyback_yield.unwrap() - 0.0909).abs() < 1e-4);
    }

    #[test]
    fn margin_stability_rules() {
        assert_eq!(margin_stability(&[Some(0.1), Some(0.1), None, Some(0.1)]), None);
        assert_eq!(margin_stability(&[Some(0.1); 4]), Some(1.0));
        // mean 0, large spread: clipped at zero
        assert_eq!(margin_stability(&[Some(-1.0), Some(1.0), Some(-1.0), Some(1.0)]), Some(0.0));
    }
}
