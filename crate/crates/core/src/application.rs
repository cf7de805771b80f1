//! Return predictability on market data: ingestion, long-horizon returns,
//! horizon scans of the LTLS tests and memory estimates.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ltls::{preliminary_ols, KernelScaling, LtlsTest, SetupId};
use crate::memory::{self, MemoryMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Monthly,
    Quarterly,
}

impl Frequency {
    fn months(self) -> i64 {
        match self {
            Frequency::Monthly => 1,
            Frequency::Quarterly => 3,
        }
    }
}

/// A calendar period stored as a month ordinal (`12·year + month − 1`);
/// quarters are stored at their last month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Period(i64);

impl Period {
    pub fn from_year_month(year: i64, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(Period(12 * year + month as i64 - 1))
    }

    pub fn year(self) -> i64 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

/// Parses `yyyymm`, `yyyyq`, `YYYY-MM` or `YYYY-MM-DD`.
pub fn parse_period(s: &str) -> Option<Period> {
    let s = s.trim();
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if digits(s) {
        let year: i64 = s.get(..4)?.parse().ok()?;
        return match s.len() {
            6 => Period::from_year_month(year, s[4..].parse().ok()?),
            5 => {
                let q: u32 = s[4..].parse().ok()?;
                (1..=4).contains(&q).then(|| Period::from_year_month(year, 3 * q)).flatten()
            }
            _ => None,
        };
    }
    let parts: Vec<&str> = s.split('-').collect();
    if !(parts.len() == 2 || parts.len() == 3) || !parts.iter().all(|p| digits(p)) || parts[0].len() != 4 {
        return None;
    }
    if parts.len() == 3 {
        let day: u32 = parts[2].parse().ok()?;
        if !(1..=31).contains(&day) {
            return None;
        }
    }
    Period::from_year_month(parts[0].parse().ok()?, parts[1].parse().ok()?)
}

/// Where the predictor comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictorColumns {
    /// Use this column as is.
    Ready { predictor: String },
    /// `log(earnings) − log(price)`.
    EarningsPrice { earnings: String, price: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub date: String,
    pub index: String,
    #[serde(flatten)]
    pub predictor: PredictorColumns,
}

impl ColumnMap {
    /// `date,index,predictor`.
    pub fn simple() -> Self {
        Self {
            date: "date".into(),
            index: "index".into(),
            predictor: PredictorColumns::Ready { predictor: "predictor".into() },
        }
    }

    /// Layout of the monthly Welch–Goyal sheet exported to CSV: log
    /// earnings-to-price from 12-month earnings and the index level.
    pub fn welch_goyal() -> Self {
        Self {
            date: "yyyymm".into(),
            index: "Index".into(),
            predictor: PredictorColumns::EarningsPrice { earnings: "E12".into(), price: "Index".into() },
        }
    }

    /// As [`welch_goyal`](Self::welch_goyal) for the quarterly sheet.
    pub fn welch_goyal_quarterly() -> Self {
        Self { date: "yyyyq".into(), ..Self::welch_goyal() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketDataset {
    pub dates: Vec<Period>,
    pub index_level: Vec<f64>,
    pub predictor: Vec<f64>,
    pub frequency: Frequency,
}

impl MarketDataset {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let cleaned: String = s.trim().chars().filter(|&c| c != ',').collect();
    if cleaned.is_empty() {
        return None;
    }
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn ingest_csv(path: impl AsRef<Path>, map: &ColumnMap, declared: Option<Frequency>) -> Result<MarketDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest_reader(file, map, declared)
}

/// Row numbers in errors are file line numbers (the header is line 1).
pub fn ingest_reader<R: Read>(reader: R, map: &ColumnMap, declared: Option<Frequency>) -> Result<MarketDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Ingest { row: 1, msg: e.to_string() })?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Ingest { row: 1, msg: format!("missing column {name:?}") })
    };
    let date_c = col(&map.date)?;
    let index_c = col(&map.index)?;
    let pred_c = match &map.predictor {
        PredictorColumns::Ready { predictor } => (col(predictor)?, None),
        PredictorColumns::EarningsPrice { earnings, price } => (col(earnings)?, Some(col(price)?)),
    };

    let mut ds = MarketDataset {
        dates: Vec::new(),
        index_level: Vec::new(),
        predictor: Vec::new(),
        frequency: Frequency::Monthly,
    };
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Ingest { row, msg: e.to_string() })?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let bad = |what: &str, v: &str| Error::Ingest { row, msg: format!("cannot parse {what} {v:?}") };

        let date = parse_period(field(date_c)).ok_or_else(|| bad("date", field(date_c)))?;
        let level = parse_number(field(index_c)).ok_or_else(|| bad("index level", field(index_c)))?;
        if level <= 0.0 {
            return Err(Error::Ingest { row, msg: format!("index level must be positive, got {level}") });
        }
        let pred = match pred_c {
            (c, None) => parse_number(field(c)).ok_or_else(|| bad("predictor", field(c)))?,
            (e, Some(p)) => {
                let earn = parse_number(field(e)).ok_or_else(|| bad("earnings", field(e)))?;
                let price = parse_number(field(p)).ok_or_else(|| bad("price", field(p)))?;
                if earn <= 0.0 || price <= 0.0 {
                    return Err(Error::Ingest { row, msg: "earnings and price must be positive".into() });
                }
                earn.ln() - price.ln()
            }
        };
        if let Some(&last) = ds.dates.last() {
            if date <= last {
                return Err(Error::Ingest {
                    row,
                    msg: format!("dates must be strictly increasing ({date} after {last})"),
                });
            }
        }
        ds.dates.push(date);
        ds.index_level.push(level);
        ds.predictor.push(pred);
    }
    if ds.is_empty() {
        return Err(Error::Ingest { row: 2, msg: "no data rows".into() });
    }
    ds.frequency = match declared {
        Some(f) => f,
        None => infer_frequency(&ds.dates),
    };
    Ok(ds)
}

/// Monthly unless the median spacing is three months or more.
fn infer_frequency(dates: &[Period]) -> Frequency {
    let mut gaps: Vec<i64> = dates.windows(2).map(|w| w[1].0 - w[0].0).collect();
    if gaps.is_empty() {
        return Frequency::Monthly;
    }
    gaps.sort_unstable();
    if gaps[gaps.len() / 2] >= Frequency::Quarterly.months() {
        Frequency::Quarterly
    } else {
        Frequency::Monthly
    }
}

/// `r[k] = ln I_{k+m} − ln I_k`, `k = 0..n−m`.
pub fn long_horizon_returns(ds: &MarketDataset, m: usize) -> Result<Vec<f64>> {
    let n = ds.len();
    if m == 0 || m >= n {
        return Err(domain(format!("horizon must satisfy 1 <= m < n = {n}, got {m}")));
    }
    let logs: Vec<f64> = ds.index_level.iter().map(|v| v.ln()).collect();
    Ok((0..n - m).map(|k| logs[k + m] - logs[k]).collect())
}

/// The `n − m` regression pairs at horizon `m`: `x_k` predicts `r_{k+m}`.
pub fn horizon_pairs(ds: &MarketDataset, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = long_horizon_returns(ds, m)?;
    let x = ds.predictor[..r.len()].to_vec();
    Ok((r, x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEntry {
    pub setup: String,
    pub t_stat: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonScanResult {
    pub m: usize,
    pub n_effective: usize,
    pub entries: Vec<ScanEntry>,
}

impl HorizonScanResult {
    pub fn t_stat(&self, setup: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.setup == setup).and_then(|e| e.t_stat)
    }
}

/// LTLS tests of `β = 0` in `r_{k+m} = μ + β x_k + u_{k+m}` for each horizon.
///
/// S1 and S2 scale their kernel variances by the preliminary residual
/// variance. Failures are recorded per entry and the scan continues.
pub fn predictability_scan(ds: &MarketDataset, m_grid: &[usize], setups: &[SetupId]) -> Result<Vec<HorizonScanResult>> {
    let mut out = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let (r, x) = horizon_pairs(ds, m)?;
        let prelim = preliminary_ols(&r, &x);
        let entries = setups
            .iter()
            .map(|s| {
                let scaling = match s {
                    SetupId::S1 | SetupId::S2 => KernelScaling::ResidualScaled,
                    _ => KernelScaling::Fixed,
                };
                let res = prelim
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|p| LtlsTest::new(s.clone()).with_scaling(scaling).run_with_prelim(&r, &x, p));
                match res {
                    Ok(e) => ScanEntry { setup: s.label().into(), t_stat: Some(e.t_stat), error: None },
                    Err(e) => ScanEntry { setup: s.label().into(), t_stat: None, error: Some(e.to_string()) },
                }
            })
            .collect();
        out.push(HorizonScanResult { m, n_effective: r.len(), entries });
    }
    Ok(out)
}

pub fn write_scan_csv<W: Write>(rows: &[HorizonScanResult], mut out: W) -> Result<()> {
    writeln!(out, "m,setup,t_stat,n_eff")?;
    for r in rows {
        for e in &r.entries {
            let t = e.t_stat.map(|t| t.to_string()).unwrap_or_else(|| "NA".into());
            writeln!(out, "{},{},{},{}", r.m, e.setup, t, r.n_effective)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryRow {
    /// `returns` or `predictor`.
    pub series: &'static str,
    pub horizon: Option<usize>,
    pub b: f64,
    pub method: MemoryMethod,
    pub d_hat: Option<f64>,
    pub error: Option<String>,
}

fn demeaned(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// LW and ELW estimates for returns at each horizon and for the predictor,
/// at each bandwidth exponent. LW works on the demeaned series.
pub fn memory_table(ds: &MarketDataset, b_grid: &[f64], m_grid: &[usize]) -> Result<Vec<MemoryRow>> {
    let mut series: Vec<(&'static str, Option<usize>, Vec<f64>)> = Vec::new();
    for &m in m_grid {
        series.push(("returns", Some(m), long_horizon_returns(ds, m)?));
    }
    series.push(("predictor", None, ds.predictor.clone()));

    let mut rows = Vec::new();
    for (name, horizon, x) in &series {
        for &b in b_grid {
            for method in [MemoryMethod::Lw, MemoryMethod::Elw] {
                let res = match method {
                    MemoryMethod::Lw => memory::lw_estimate(&demeaned(x), b),
                    MemoryMethod::Elw => memory::elw_estimate(x, b),
                };
                let (d_hat, error) = match res {
                    Ok(e) => (Some(e.d_hat), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                rows.push(MemoryRow { series: name, horizon: *horizon, b, method, d_hat, error });
            }
        }
    }
    Ok(rows)
}

pub fn write_memory_csv<W: Write>(rows: &[MemoryRow], mut out: W) -> Result<()> {
    writeln!(out, "series,horizon,b,method,d_hat")?;
    for r in rows {
        let h = r.horizon.map(|h| h.to_string()).unwrap_or_default();
        let d = r.d_hat.map(|d| d.to_string()).unwrap_or_else(|| "NA".into());
        writeln!(out, "{},{},{},{},{}", r.series, h, r.b, r.method.label(), d)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_from(levels: &[f64]) -> MarketDataset {
        MarketDataset {
            dates: (0..levels.len()).map(|i| Period(24_000 + i as i64)).collect(),
            index_level: levels.to_vec(),
            predictor: (0..levels.len()).map(|i| (i as f64 * 0.7).sin()).collect(),
            frequency: Frequency::Monthly,
        }
    }

    #[test]
    fn period_formats() {
        assert_eq!(parse_period("192612").unwrap().to_string(), "1926-12");
        assert_eq!(parse_period("19474").unwrap().to_string(), "1947-12");
        assert_eq!(parse_period("2001-03").unwrap().to_string(), "2001-03");
        assert_eq!(parse_period("2001-03-31").unwrap().to_string(), "2001-03");
        for bad in ["192613", "19475", "2001-3-", "abc", "2001/03", "2001-03-40"] {
            assert!(parse_period(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn three_rows() {
        let text = "date,index,predictor\n200001,100,-2.5\n200002,\"1,010.5\",-2.4\n200003,99,-2.6\n";
        let ds = ingest_reader(text.as_bytes(), &ColumnMap::simple(), None).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.index_level[1], 1010.5);
        assert_eq!(ds.frequency, Frequency::Monthly);
    }

    #[test]
    fn negative_level_names_the_row() {
        let text = "date,index,predictor\n200001,100,1\n200002,-5,1\n";
        let err = ingest_reader(text.as_bytes(), &ColumnMap::simple(), None).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 3, .. }), "{err}");
    }

    #[test]
    fn gaps_and_order_are_rejected() {
        let gap = "date,index,predictor\n200001,100,1\n200002,101,\n";
        assert!(matches!(ingest_reader(gap.as_bytes(), &ColumnMap::simple(), None), Err(Error::Ingest { row: 3, .. })));
        let unordered = "date,index,predictor\n200002,100,1\n200001,101,1\n";
        assert!(matches!(
            ingest_reader(unordered.as_bytes(), &ColumnMap::simple(), None),
            Err(Error::Ingest { row: 3, .. })
        ));
        let empty = "date,index,predictor\n";
        assert!(ingest_reader(empty.as_bytes(), &ColumnMap::simple(), None).is_err());
        let missing = "when,index,predictor\n200001,1,1\n";
        assert!(matches!(
            ingest_reader(missing.as_bytes(), &ColumnMap::simple(), None),
            Err(Error::Ingest { row: 1, .. })
        ));
    }

    #[test]
    fn earnings_price_predictor_and_quarterly_inference() {
        let text = "yyyyq,Index,E12\n19471,15.2,2.1\n19472,14.8,2.2\n19473,15.5,2.3\n";
        let ds = ingest_reader(text.as_bytes(), &ColumnMap::welch_goyal_quarterly(), None).unwrap();
        assert_eq!(ds.frequency, Frequency::Quarterly);
        assert!((ds.predictor[0] - (2.1f64.ln() - 15.2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn returns_examples() {
        let e = std::f64::consts::E;
        let ds = ds_from(&[1.0, e, e * e]);
        let r1 = long_horizon_returns(&ds, 1).unwrap();
        assert!(r1.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!((long_horizon_returns(&ds, 2).unwrap()[0] - 2.0).abs() < 1e-15);
        assert!(long_horizon_returns(&ds, 3).is_err());
        assert!(long_horizon_returns(&ds, 0).is_err());
    }

    #[test]
    fn returns_telescope() {
        let levels: Vec<f64> = (0..120).map(|k| 100.0 * (1.0 + 0.3 * (k as f64 * 0.37).sin()) + k as f64).collect();
        let ds = ds_from(&levels);
        let r1 = long_horizon_returns(&ds, 1).unwrap();
        let r12 = long_horizon_returns(&ds, 12).unwrap();
        for (k, v) in r12.iter().enumerate() {
            let s: f64 = r1[k..k + 12].iter().sum();
            assert!((v - s).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_alignment_is_index_explicit() {
        let levels: Vec<f64> = (0..40).map(|k| 50.0 + (k as f64).sqrt()).collect();
        let ds = ds_from(&levels);
        for m in [1, 5, 12] {
            let (r, x) = horizon_pairs(&ds, m).unwrap();
            assert_eq!(r.len(), 40 - m);
            for k in 0..r.len() {
                assert_eq!(r[k], levels[k + m].ln() - levels[k].ln());
                assert_eq!(x[k], ds.predictor[k]);
            }
        }
    }

    #[test]
    fn scan_records_failures_and_continues() {
        let levels: Vec<f64> = (0..30).map(|k| 100.0 * (0.01 * k as f64).exp()).collect();
        let ds = ds_from(&levels);
        let res = predictability_scan(&ds, &[1, 2], &[SetupId::S1, SetupId::S3]).unwrap();
        assert_eq!(res.len(), 2);
        assert_eq!(res[0].n_effective, 29);
        // constant returns: zero residual variance
        assert!(res[0].entries.iter().all(|e| e.t_stat.is_none() && e.error.is_some()));
    }
}
