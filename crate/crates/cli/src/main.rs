mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use ltls::application::{self, ColumnMap, Frequency, PredictorColumns};
use ltls::baselines::{ivx_ttest, ols_ttest, IvxConfig};
use ltls::dgp::{DgpSpec, Regressor};
use ltls::ltls::{ltls_estimate, preliminary_ols, resolve_setup, KernelScaling, LtlsTest, RegressionInput, SetupId};
use ltls::montecarlo::{self, McCampaign, Method, TableLayout};

use config::{check_level, Profile, Regime, RunConfig, SimSection, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "ltls", version, about = "LTLS predictive-regression tests: simulations and market-data scans")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for the random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replication preset.
    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,
    /// Worker threads (defaults to the available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Empirical size over a grid of DGPs.
    Size(SimArgs),
    /// Empirical power curves over a grid of true slopes.
    Power(SimArgs),
    /// All tests on one user-supplied series.
    Estimate(EstimateArgs),
    /// LTLS predictability tests across return horizons.
    Predict(DataArgs),
    /// LW and ELW memory estimates for returns and the predictor.
    Memory(DataArgs),
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, value_enum)]
    regime: Option<Regime>,
    /// `c` values (ni) or `d` values (fractional).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    persistence: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, allow_negative_numbers = true)]
    level: Option<f64>,
    /// Replications per cell, overriding the profile.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    beta_step: Option<f64>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    y_column: Option<String>,
    #[arg(long)]
    x_column: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    beta0: Option<f64>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Market data CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Return horizons, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    /// Setups for `predict`.
    #[arg(long, value_delimiter = ',')]
    setups: Option<Vec<String>>,
    /// Bandwidth exponents for `memory`.
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<f64>>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let common = Common {
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        profile: cli.profile.or(cfg.profile).unwrap_or(Profile::Desk),
        threads: cli
            .threads
            .or(cfg.threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
        out: cli.out.clone().or(cfg.out.clone()),
    };
    if common.threads == 0 {
        bail!("threads: must be at least 1");
    }
    match cli.command {
        Command::Size(a) => cmd_sim("size", &common, merge_sim(&cfg.size, a), false),
        Command::Power(a) => cmd_sim("power", &common, merge_sim(&cfg.power, a), true),
        Command::Estimate(a) => cmd_estimate(&common, &cfg, a),
        Command::Predict(a) => cmd_predict(&common, &cfg, a),
        Command::Memory(a) => cmd_memory(&common, &cfg, a),
    }
}

struct Common {
    seed: u64,
    profile: Profile,
    threads: usize,
    out: Option<PathBuf>,
}

fn merge_sim(file: &SimSection, a: SimArgs) -> SimSection {
    SimSection {
        regime: a.regime.or(file.regime),
        persistence: a.persistence.or_else(|| file.persistence.clone()),
        delta: a.delta.or_else(|| file.delta.clone()),
        n: a.n.or_else(|| file.n.clone()),
        methods: a.methods.or_else(|| file.methods.clone()),
        level: a.level.or(file.level),
        reps: a.reps.or(file.reps),
        beta_max: a.beta_max.or(file.beta_max),
        beta_step: a.beta_step.or(file.beta_step),
    }
}

/// Writes the provenance header and hands back the sink for the body.
fn open_output(common: &Common, command: &str, resolved: &impl Serialize) -> Result<Box<dyn Write>> {
    let text = toml::to_string(resolved).context("serializing resolved config")?;
    let hash = Sha256::digest(text.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let mut w: Box<dyn Write> = match &common.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    writeln!(w, "# ltls {} {command}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# config-sha256 {hex}")?;
    writeln!(w, "# seed {}", common.seed)?;
    for line in text.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(w)
}

#[derive(Debug, Serialize)]
struct ResolvedSim {
    seed: u64,
    regime: Regime,
    persistence: Vec<f64>,
    delta: Vec<f64>,
    n: Vec<usize>,
    methods: Vec<String>,
    level: f64,
    reps: usize,
    beta_grid: Vec<f64>,
}

fn cmd_sim(command: &str, common: &Common, s: SimSection, power: bool) -> Result<()> {
    let regime = s.regime.unwrap_or(Regime::Ni);
    let (def_p, def_d, def_m): (Vec<f64>, Vec<f64>, Vec<Method>) = match (regime, power) {
        (Regime::Ni, false) => (montecarlo::TABLE1_C.to_vec(), montecarlo::TABLE1_DELTA.to_vec(), Method::ALL.to_vec()),
        (Regime::Fractional, false) => {
            (montecarlo::TABLE2_D.to_vec(), montecarlo::TABLE2_DELTA.to_vec(), vec![Method::T3, Method::Ols])
        }
        (Regime::Ni, true) => {
            (vec![0.0, -20.0], vec![0.0, -0.5, -0.95], vec![Method::T1, Method::T2, Method::T3, Method::Ivx])
        }
        (Regime::Fractional, true) => (vec![0.8, 1.0, 1.2], vec![0.0, -0.5, -0.95], vec![Method::T3]),
    };
    let def_n: Vec<usize> = if power { vec![250] } else { montecarlo::TABLE_N.to_vec() };

    let persistence = s.persistence.unwrap_or(def_p);
    let delta = s.delta.unwrap_or(def_d);
    let n = s.n.unwrap_or(def_n);
    let methods = match s.methods {
        Some(v) => v
            .iter()
            .map(|m| Method::parse(m).map_err(|e| anyhow!("{command}.methods: {e}")))
            .collect::<Result<Vec<_>>>()?,
        None => def_m,
    };
    let level = s.level.unwrap_or(0.05);
    check_level(&format!("{command}.level"), level)?;
    let reps = s.reps.unwrap_or(common.profile.reps());
    let beta_grid = if power {
        let max = s.beta_max.unwrap_or(0.05);
        let step = s.beta_step.unwrap_or(0.005);
        montecarlo::beta_grid(max, step).map_err(|e| anyhow!("{command}.beta_step: {e}"))?
    } else {
        if s.beta_max.is_some() || s.beta_step.is_some() {
            bail!("size: beta_max/beta_step only apply to power");
        }
        vec![0.0]
    };

    let mut dgp_grid = Vec::new();
    for &p in &persistence {
        let regressor = match regime {
            Regime::Ni => Regressor::NearIntegrated { c: p },
            Regime::Fractional => Regressor::FractionalTypeII { d: p },
        };
        for &d in &delta {
            for &nn in &n {
                dgp_grid.push(DgpSpec { delta: d, regressor, beta: 0.0, mu: 0.0, n: nn });
            }
        }
    }
    let campaign = McCampaign { methods: methods.clone(), dgp_grid, reps, level, master_seed: common.seed, beta_grid };
    campaign.validate().map_err(|e| anyhow!("{command}: {e}"))?;

    let resolved = ResolvedSim {
        seed: common.seed,
        regime,
        persistence,
        delta,
        n,
        methods: methods.iter().map(|m| m.label().to_string()).collect(),
        level,
        reps,
        beta_grid: campaign.beta_grid.clone(),
    };
    let cells = montecarlo::run_campaign(&campaign, common.threads)?;
    let layout = if power { TableLayout::AsRun } else { TableLayout::Blocked };
    let rows = montecarlo::summarize(&cells, layout)?;
    let mut w = open_output(common, command, &resolved)?;
    montecarlo::write_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ResolvedEstimate {
    input: PathBuf,
    y_column: String,
    x_column: String,
    beta0: f64,
}

fn read_two_columns(path: &Path, y_col: &str, x_col: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers().with_context(|| format!("{}: reading header", path.display()))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("{}: missing column {name:?}", path.display()))
    };
    let (yi, xi) = (find(y_col)?, find(x_col)?);
    let (mut y, mut x) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.with_context(|| format!("{}: row {row}", path.display()))?;
        let parse = |c: usize| -> Result<f64> {
            let v = rec.get(c).unwrap_or("");
            v.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| anyhow!("{}: row {row}: cannot parse {v:?}", path.display()))
        };
        y.push(parse(yi)?);
        x.push(parse(xi)?);
    }
    if y.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok((y, x))
}

/// method, beta_hat, t_stat, c_n, l_n, status
type EstimateRow = (String, Option<f64>, Option<f64>, Option<f64>, Option<usize>, String);

fn ols_slope(y: &[f64], x: &[f64]) -> Option<f64> {
    let n = y.len() as f64;
    let (my, mx) = (y.iter().sum::<f64>() / n, x.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "NA".into())
}

fn cmd_estimate(common: &Common, cfg: &RunConfig, a: EstimateArgs) -> Result<()> {
    let e = &cfg.estimate;
    let resolved = ResolvedEstimate {
        input: a.input.or_else(|| e.input.clone()).ok_or_else(|| anyhow!("estimate.input: no input file given"))?,
        y_column: a.y_column.or_else(|| e.y_column.clone()).unwrap_or_else(|| "y".into()),
        x_column: a.x_column.or_else(|| e.x_column.clone()).unwrap_or_else(|| "x".into()),
        beta0: a.beta0.or(e.beta0).unwrap_or(0.0),
    };
    let (y, x) = read_two_columns(&resolved.input, &resolved.y_column, &resolved.x_column)?;
    let prelim = preliminary_ols(&y, &x).context("preliminary regressions")?;

    let mut rows: Vec<EstimateRow> = Vec::new();
    for setup in [SetupId::S1, SetupId::S2, SetupId::S3] {
        let label = match setup {
            SetupId::S1 => "T1",
            SetupId::S2 => "T2",
            _ => "T3",
        };
        let test = LtlsTest::new(setup.clone()).with_beta0(resolved.beta0);
        match resolve_setup(&setup, y.len(), &prelim, KernelScaling::Fixed) {
            Err(err) => rows.push((label.into(), None, None, None, None, err.to_string())),
            Ok(r) => {
                let (c_n, l_n) = (Some(r.scheme.c_n()), Some(r.scheme.l_n()));
                match test.run_with_prelim(&y, &x, &prelim) {
                    Ok(res) => rows.push((label.into(), Some(res.beta_hat), Some(res.t_stat), c_n, l_n, "ok".into())),
                    Err(err) => {
                        let b = ltls_estimate(&RegressionInput::new(&y, &x, r.scheme)).ok().map(|e| e.beta_hat);
                        rows.push((label.into(), b, None, c_n, l_n, err.to_string()));
                    }
                }
            }
        }
    }
    for (label, res) in
        [("IVX", ivx_ttest(&y, &x, resolved.beta0, IvxConfig::default())), ("OLS", ols_ttest(&y, &x, resolved.beta0))]
    {
        match res {
            Ok(r) => rows.push((label.into(), Some(r.beta_hat), Some(r.t_stat), None, None, "ok".into())),
            Err(err) => {
                let b = if label == "OLS" { ols_slope(&y, &x) } else { None };
                rows.push((label.into(), b, None, None, None, err.to_string()))
            }
        }
    }

    let mut w = open_output(common, "estimate", &resolved)?;
    writeln!(w, "# n {} delta_tilde {:.6} sigma_u2 {:.6e}", y.len(), prelim.delta_tilde, prelim.sigma_u2)?;
    writeln!(w, "method,beta_hat,t_stat,beta0,c_n,l_n,status")?;
    for (label, b, t, c_n, l_n, note) in &rows {
        writeln!(
            w,
            "{label},{},{},{},{},{},\"{}\"",
            fmt_opt(*b),
            fmt_opt(*t),
            resolved.beta0,
            fmt_opt(*c_n),
            l_n.map(|l| l.to_string()).unwrap_or_else(|| "NA".into()),
            note.replace('"', "'")
        )?;
    }
    w.flush()?;
    for (label, b, t, _, _, note) in &rows {
        eprintln!("{label:>4}  beta_hat {:>12}  t {:>10}  {note}", fmt_opt(*b), fmt_opt(*t));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ResolvedData {
    path: PathBuf,
    date: String,
    index: String,
    predictor: Option<String>,
    earnings: Option<String>,
    price: Option<String>,
    frequency: Option<String>,
}

fn resolve_data(cfg: &RunConfig, path: Option<PathBuf>) -> Result<(ResolvedData, ColumnMap, Option<Frequency>)> {
    let d = &cfg.data;
    let path = path
        .or_else(|| d.path.clone())
        .ok_or_else(|| anyhow!("data.path: no dataset given (use --data or [data] path)"))?;
    let date = d.date.clone().unwrap_or_else(|| "date".into());
    let index = d.index.clone().unwrap_or_else(|| "index".into());
    let predictor = match (&d.predictor, &d.earnings, &d.price) {
        (Some(p), None, None) => PredictorColumns::Ready { predictor: p.clone() },
        (None, Some(e), Some(p)) => PredictorColumns::EarningsPrice { earnings: e.clone(), price: p.clone() },
        (None, None, None) => PredictorColumns::Ready { predictor: "predictor".into() },
        _ => bail!("data: give either `predictor` or both `earnings` and `price`"),
    };
    let frequency = match d.frequency.as_deref() {
        None => None,
        Some("monthly") => Some(Frequency::Monthly),
        Some("quarterly") => Some(Frequency::Quarterly),
        Some(other) => bail!("data.frequency: expected monthly or quarterly, got {other:?}"),
    };
    let map = ColumnMap { date: date.clone(), index: index.clone(), predictor };
    let resolved = ResolvedData {
        path,
        date,
        index,
        predictor: d.predictor.clone(),
        earnings: d.earnings.clone(),
        price: d.price.clone(),
        frequency: d.frequency.clone(),
    };
    Ok((resolved, map, frequency))
}

#[derive(Debug, Serialize)]
struct ResolvedPredict {
    data: ResolvedData,
    horizons: Vec<usize>,
    setups: Vec<String>,
}

fn parse_setup(s: &str) -> Result<SetupId> {
    match s.to_ascii_uppercase().as_str() {
        "S1" => Ok(SetupId::S1),
        "S2" => Ok(SetupId::S2),
        "S3" => Ok(SetupId::S3),
        _ => bail!("predict.setups: unknown setup {s:?}"),
    }
}

fn cmd_predict(common: &Common, cfg: &RunConfig, a: DataArgs) -> Result<()> {
    let (data, map, freq) = resolve_data(cfg, a.data)?;
    let horizons = a.horizons.or_else(|| cfg.predict.horizons.clone()).unwrap_or_else(|| (1..=24).collect());
    let setups: Vec<String> =
        a.setups.or_else(|| cfg.predict.setups.clone()).unwrap_or_else(|| vec!["S1".into(), "S2".into(), "S3".into()]);
    let ids = setups.iter().map(|s| parse_setup(s)).collect::<Result<Vec<_>>>()?;
    let ds = application::ingest_csv(&data.path, &map, freq)?;
    let scan = application::predictability_scan(&ds, &horizons, &ids)?;
    let resolved = ResolvedPredict { data, horizons, setups };
    let mut w = open_output(common, "predict", &resolved)?;
    writeln!(w, "# critical value 1.959964 (5% two-sided)")?;
    application::write_scan_csv(&scan, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ResolvedMemory {
    data: ResolvedData,
    b: Vec<f64>,
    horizons: Vec<usize>,
}

fn cmd_memory(common: &Common, cfg: &RunConfig, a: DataArgs) -> Result<()> {
    let (data, map, freq) = resolve_data(cfg, a.data)?;
    let b = a.b.or_else(|| cfg.memory.b.clone()).unwrap_or_else(|| vec![0.55, 0.65, 0.75]);
    let horizons = a.horizons.or_else(|| cfg.memory.horizons.clone()).unwrap_or_else(|| vec![1]);
    let ds = application::ingest_csv(&data.path, &map, freq)?;
    let rows = application::memory_table(&ds, &b, &horizons)?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} b={} {}: {}", r.series, r.b, r.method.label(), r.error.as_deref().unwrap_or_default());
    }
    let resolved = ResolvedMemory { data, b, horizons };
    let mut w = open_output(common, "memory", &resolved)?;
    application::write_memory_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}
