//! Size and power campaigns.
//!
//! A campaign is a grid of DGP cells crossed with a grid of true slopes. Every
//! replication of a cell draws one sample from its own stream and all methods
//! are evaluated on that sample. Rejections are accumulated as integer counts,
//! so results are identical for any thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{ivx_ttest, ols_ttest, IvxConfig};
use crate::dgp::{gen_series, DgpSpec, Regressor};
use crate::error::{domain, Error, Result};
use crate::ltls::{preliminary_ols, LtlsTest, PrelimStats, SetupId};
use crate::stats::two_sided_critical;
use crate::stream::{fnv1a, replication_stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    T1,
    T2,
    T3,
    #[serde(rename = "IVX")]
    Ivx,
    #[serde(rename = "OLS", alias = "LS")]
    Ols,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::T1, Method::T2, Method::T3, Method::Ivx, Method::Ols];

    pub fn label(self) -> &'static str {
        match self {
            Method::T1 => "T1",
            Method::T2 => "T2",
            Method::T3 => "T3",
            Method::Ivx => "IVX",
            Method::Ols => "OLS",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(Method::T1),
            "T2" => Ok(Method::T2),
            "T3" => Ok(Method::T3),
            "IVX" => Ok(Method::Ivx),
            "OLS" | "LS" => Ok(Method::Ols),
            _ => Err(domain(format!("unknown method {s:?}"))),
        }
    }

    fn setup(self) -> Option<SetupId> {
        match self {
            Method::T1 => Some(SetupId::S1),
            Method::T2 => Some(SetupId::S2),
            Method::T3 => Some(SetupId::S3),
            _ => None,
        }
    }
}

/// Test statistic of `method` for `H₀: β = 0` on one sample. The preliminary
/// regressions are computed once and shared by the LTLS variants.
fn statistic(method: Method, y: &[f64], x: &[f64], prelim: &mut Option<Result<PrelimStats>>) -> Result<f64> {
    match method.setup() {
        Some(setup) => {
            let p = prelim.get_or_insert_with(|| preliminary_ols(y, x)).as_ref().map_err(Clone::clone)?;
            LtlsTest::new(setup).run_with_prelim(y, x, p).map(|r| r.t_stat)
        }
        None if method == Method::Ivx => ivx_ttest(y, x, 0.0, IvxConfig::default()).map(|r| r.t_stat),
        None => ols_ttest(y, x, 0.0).map(|r| r.t_stat),
    }
}

/// Statistics of every method on the sample of replication `rep`.
pub fn replicate(spec: &DgpSpec, methods: &[Method], master_seed: u64, rep: u64) -> Result<Vec<Result<f64>>> {
    let mut rng = replication_stream(master_seed, cell_key(spec), rep);
    let s = gen_series(spec, &mut rng)?;
    let mut prelim = None;
    Ok(methods
        .iter()
        .map(|&m| {
            statistic(m, &s.y, &s.x, &mut prelim).and_then(|t| {
                if t.is_finite() {
                    Ok(t)
                } else {
                    Err(Error::DegenerateStudentization("non-finite statistic".into()))
                }
            })
        })
        .collect())
}

/// Stable key of a DGP cell; the method is deliberately excluded so that all
/// methods see the same samples.
pub fn cell_key(spec: &DgpSpec) -> u64 {
    let desc = format!(
        "{}|{:?}|{:?}|{:?}|{:?}|{}",
        spec.regressor.regime(),
        spec.regressor.parameter(),
        spec.delta,
        spec.beta,
        spec.mu,
        spec.n
    );
    fnv1a(desc.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCampaign {
    pub methods: Vec<Method>,
    pub dgp_grid: Vec<DgpSpec>,
    pub reps: usize,
    pub level: f64,
    pub master_seed: u64,
    /// True slopes; `[0.0]` for a size study.
    pub beta_grid: Vec<f64>,
}

impl McCampaign {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(domain("campaign has no methods"));
        }
        if self.dgp_grid.is_empty() || self.beta_grid.is_empty() {
            return Err(domain("campaign grid is empty"));
        }
        if self.reps < 100 {
            return Err(domain(format!("reps must be at least 100, got {}", self.reps)));
        }
        if !(self.level > 0.0 && self.level < 0.5) {
            return Err(domain(format!("level must lie in (0, 0.5), got {}", self.level)));
        }
        if self.beta_grid.iter().any(|b| !b.is_finite()) {
            return Err(domain("beta grid contains non-finite values"));
        }
        for d in &self.dgp_grid {
            d.validate()?;
        }
        Ok(())
    }

    /// Cells in output order: DGP grid, then slope, then method.
    pub fn cells(&self) -> Vec<DgpSpec> {
        self.dgp_grid.iter().flat_map(|d| self.beta_grid.iter().map(move |&beta| DgpSpec { beta, ..*d })).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub method: Method,
    /// The data-generating process, with `beta` the true slope.
    pub dgp: DgpSpec,
    pub reps: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mc_standard_error: f64,
    pub failures: usize,
}

impl McCell {
    fn from_counts(method: Method, dgp: DgpSpec, reps: usize, rejections: usize, failures: usize) -> Self {
        let ok = reps - failures;
        let p = if ok == 0 { f64::NAN } else { rejections as f64 / ok as f64 };
        Self {
            method,
            dgp,
            reps,
            rejections,
            rejection_rate: p,
            mc_standard_error: (p * (1.0 - p) / reps as f64).sqrt(),
            failures,
        }
    }
}

const CHUNK: usize = 64;

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| domain(format!("cannot build thread pool: {e}")))
}

/// Runs the campaign on `threads` worker threads.
pub fn run_campaign(c: &McCampaign, threads: usize) -> Result<Vec<McCell>> {
    c.validate()?;
    let crit = two_sided_critical(c.level)?;
    let cells = c.cells();
    let k = c.methods.len();

    let units: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|ci| (0..c.reps.div_ceil(CHUNK)).map(move |chunk| (ci, chunk))).collect();

    let counts: Vec<(usize, Vec<(usize, usize)>)> = pool(threads)?.install(|| {
        units
            .par_iter()
            .map(|&(ci, chunk)| {
                let mut acc = vec![(0usize, 0usize); k];
                let lo = chunk * CHUNK;
                let hi = (lo + CHUNK).min(c.reps);
                for rep in lo..hi {
                    match replicate(&cells[ci], &c.methods, c.master_seed, rep as u64) {
                        Ok(stats) => {
                            for (a, s) in acc.iter_mut().zip(stats) {
                                match s {
                                    Ok(t) if t.abs() > crit => a.0 += 1,
                                    Ok(_) => {}
                                    Err(_) => a.1 += 1,
                                }
                            }
                        }
                        Err(_) => acc.iter_mut().for_each(|a| a.1 += 1),
                    }
                }
                (ci, acc)
            })
            .collect()
    });

    let mut totals = vec![vec![(0usize, 0usize); k]; cells.len()];
    for (ci, acc) in counts {
        for (t, a) in totals[ci].iter_mut().zip(acc) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    Ok(cells
        .iter()
        .zip(totals)
        .flat_map(|(d, t)| {
            c.methods
                .iter()
                .zip(t)
                .map(|(&m, (rej, fail))| McCell::from_counts(m, *d, c.reps, rej, fail))
                .collect::<Vec<_>>()
        })
        .collect())
}

/// Raw statistics of `method` over `reps` replications of `spec`, in
/// replication order; failed replications are `None`.
pub fn simulate_statistics(
    spec: &DgpSpec,
    method: Method,
    reps: usize,
    master_seed: u64,
    threads: usize,
) -> Result<Vec<Option<f64>>> {
    spec.validate()?;
    Ok(pool(threads)?.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|rep| replicate(spec, &[method], master_seed, rep).ok().and_then(|mut v| v.pop()).and_then(|r| r.ok()))
            .collect()
    }))
}

/// One long-format output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub regime: &'static str,
    pub c_or_d: f64,
    pub delta: f64,
    pub n: usize,
    pub beta: f64,
    pub method: &'static str,
    pub reps: usize,
    pub reject_rate: f64,
    pub mc_se: f64,
    pub failures: usize,
}

/// Row ordering for [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableLayout {
    /// Campaign order.
    #[default]
    AsRun,
    /// Persistence block, then endogeneity, then slope, then sample size,
    /// then method. Persistence blocks run from the most persistent
    /// near-integrated value down, or upward in `d`.
    Blocked,
}

pub fn summarize(cells: &[McCell], layout: TableLayout) -> Result<Vec<SummaryRow>> {
    if cells.is_empty() {
        return Err(domain("nothing to summarize"));
    }
    let mut rows: Vec<(usize, &McCell)> = cells.iter().enumerate().collect();
    if layout == TableLayout::Blocked {
        let rank = |c: &McCell| {
            let p = match c.dgp.regressor {
                Regressor::NearIntegrated { c } => -c,
                Regressor::FractionalTypeII { d } => d,
            };
            let m = Method::ALL.iter().position(|&m| m == c.method).unwrap_or(0);
            (c.dgp.regressor.regime(), p, c.dgp.delta, c.dgp.beta.abs(), c.dgp.beta, c.dgp.n, m)
        };
        rows.sort_by(|(ia, a), (ib, b)| {
            let (ra, rb) = (rank(a), rank(b));
            ra.0.cmp(rb.0)
                .then(ra.1.total_cmp(&rb.1))
                .then(ra.2.total_cmp(&rb.2))
                .then(ra.3.total_cmp(&rb.3))
                .then(ra.4.total_cmp(&rb.4))
                .then(ra.5.cmp(&rb.5))
                .then(ra.6.cmp(&rb.6))
                .then(ia.cmp(ib))
        });
    }
    Ok(rows
        .into_iter()
        .map(|(_, c)| SummaryRow {
            regime: c.dgp.regressor.regime(),
            c_or_d: c.dgp.regressor.parameter(),
            delta: c.dgp.delta,
            n: c.dgp.n,
            beta: c.dgp.beta,
            method: c.method.label(),
            reps: c.reps,
            reject_rate: c.rejection_rate,
            mc_se: c.mc_standard_error,
            failures: c.failures,
        })
        .collect())
}

pub const CSV_HEADER: &str = "regime,c_or_d,delta,n,beta,method,reps,reject_rate,mc_se,failures";

/// Writes rows as CSV (header included). Floats use the shortest
/// round-trip representation, so identical cells give identical bytes.
pub fn write_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.regime, r.c_or_d, r.delta, r.n, r.beta, r.method, r.reps, r.reject_rate, r.mc_se, r.failures
        )?;
    }
    Ok(())
}

pub const TABLE1_C: [f64; 5] = [0.0, -5.0, -10.0, -20.0, -50.0];
pub const TABLE1_DELTA: [f64; 5] = [-0.95, -0.5, 0.0, 0.5, 0.95];
pub const TABLE_N: [usize; 4] = [250, 500, 750, 1000];
pub const TABLE2_D: [f64; 6] = [0.75, 0.8, 0.9, 1.0, 1.1, 1.2];
pub const TABLE2_DELTA: [f64; 3] = [-0.95, -0.5, 0.0];

fn grid(regressors: &[Regressor], deltas: &[f64], ns: &[usize]) -> Vec<DgpSpec> {
    let mut out = Vec::new();
    for &regressor in regressors {
        for &delta in deltas {
            for &n in ns {
                out.push(DgpSpec { delta, regressor, beta: 0.0, mu: 0.0, n });
            }
        }
    }
    out
}

/// Near-integrated size grid: 5 `c` × 5 `δ` × 4 `n`, all five methods.
pub fn table1_campaign(reps: usize, master_seed: u64) -> McCampaign {
    let regs: Vec<Regressor> = TABLE1_C.iter().map(|&c| Regressor::NearIntegrated { c }).collect();
    McCampaign {
        methods: Method::ALL.to_vec(),
        dgp_grid: grid(&regs, &TABLE1_DELTA, &TABLE_N),
        reps,
        level: 0.05,
        master_seed,
        beta_grid: vec![0.0],
    }
}

/// Fractional size grid: 6 `d` × 3 `δ` × 4 `n`, methods T3 and OLS.
pub fn table2_campaign(reps: usize, master_seed: u64) -> McCampaign {
    let regs: Vec<Regressor> = TABLE2_D.iter().map(|&d| Regressor::FractionalTypeII { d }).collect();
    McCampaign {
        methods: vec![Method::T3, Method::Ols],
        dgp_grid: grid(&regs, &TABLE2_DELTA, &TABLE_N),
        reps,
        level: 0.05,
        master_seed,
        beta_grid: vec![0.0],
    }
}

/// `0, step, 2·step, …, max` (inclusive, up to rounding).
pub fn beta_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && max >= 0.0) {
        return Err(domain("beta grid needs step > 0 and max >= 0"));
    }
    let k = (max / step + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> McCampaign {
        McCampaign {
            methods: Method::ALL.to_vec(),
            dgp_grid: vec![DgpSpec {
                delta: -0.5,
                regressor: Regressor::NearIntegrated { c: -5.0 },
                beta: 0.0,
                mu: 0.0,
                n: 100,
            }],
            reps,
            level: 0.05,
            master_seed: 7,
            beta_grid: vec![0.0, 0.1],
        }
    }

    #[test]
    fn campaign_is_thread_count_invariant() {
        let c = small(130);
        let a = run_campaign(&c, 1).unwrap();
        let b = run_campaign(&c, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        for cell in &a {
            assert!(cell.failures <= cell.reps);
            let p = cell.rejection_rate;
            assert_eq!(cell.mc_standard_error, (p * (1.0 - p) / cell.reps as f64).sqrt());
        }
    }

    #[test]
    fn methods_share_samples() {
        let c = small(100);
        let solo = McCampaign { methods: vec![Method::Ols], ..c.clone() };
        let all = run_campaign(&c, 1).unwrap();
        let ols = run_campaign(&solo, 1).unwrap();
        assert_eq!(ols[0].rejections, all[4].rejections);
        assert_eq!(ols[1].rejections, all[9].rejections);
    }

    #[test]
    fn validation() {
        let mut c = small(99);
        assert!(c.validate().is_err());
        c.reps = 100;
        c.level = 0.5;
        assert!(c.validate().is_err());
        c.level = 0.05;
        c.methods.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn failures_are_counted_not_rejected() {
        let cell = McCell::from_counts(Method::T1, small(100).dgp_grid[0], 100, 5, 50);
        assert_eq!(cell.rejection_rate, 0.1);
        assert_eq!(cell.failures, 50);
    }

    #[test]
    fn table_grids_have_published_shape() {
        let t1 = table1_campaign(100, 0);
        assert_eq!(t1.cells().len() * t1.methods.len(), 500);
        let t2 = table2_campaign(100, 0);
        assert_eq!(t2.cells().len() * t2.methods.len(), 144);
    }

    #[test]
    fn blocked_layout_orders_blocks() {
        let mk = |c: f64, delta: f64, n: usize, m: Method| {
            McCell::from_counts(
                m,
                DgpSpec { delta, regressor: Regressor::NearIntegrated { c }, beta: 0.0, mu: 0.0, n },
                100,
                5,
                0,
            )
        };
        let cells = vec![
            mk(-5.0, -0.95, 250, Method::T1),
            mk(0.0, 0.0, 500, Method::Ols),
            mk(0.0, 0.0, 250, Method::Ivx),
            mk(0.0, -0.95, 1000, Method::T3),
        ];
        let rows = summarize(&cells, TableLayout::Blocked).unwrap();
        let order: Vec<(f64, f64, usize)> = rows.iter().map(|r| (r.c_or_d, r.delta, r.n)).collect();
        assert_eq!(order, vec![(0.0, -0.95, 1000), (0.0, 0.0, 250), (0.0, 0.0, 500), (-5.0, -0.95, 250)]);
        assert_eq!(summarize(&cells[..1], TableLayout::AsRun).unwrap().len(), 1);
        assert!(summarize(&[], TableLayout::AsRun).is_err());
    }

    #[test]
    fn csv_layout() {
        let cells = run_campaign(&McCampaign { beta_grid: vec![0.0], ..small(100) }, 1).unwrap();
        let rows = summarize(&cells, TableLayout::AsRun).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().starts_with("ni,-5,-0.5,100,0,T1,100,"));
    }

    #[test]
    fn beta_grid_steps() {
        assert_eq!(beta_grid(0.02, 0.01).unwrap(), vec![0.0, 0.01, 0.02]);
        assert!(beta_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn method_labels_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.label()).unwrap(), m);
        }
        assert_eq!(Method::parse("ls").unwrap(), Method::Ols);
        assert!(Method::parse("T4").is_err());
    }
}
