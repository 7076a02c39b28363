//! `tripwire` command-line front end.
//!
//! Subcommands write data files only: `table1` (distances and operating loss
//! per pass count), `curve` (transmission against controlled loss),
//! `scaling` (invisibility and error bound against trial count) and
//! `montecarlo` (seeded campaign statistics against those bounds).
//!
//! Angles are given as fractions of pi: `--theta-total 0.5` means pi/2.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::hypothesis_stats::{invisibility_probability, max_error_bound, visibility_distance, TrialScaling};
use crate::monte_carlo::{
    empirical_error_rate, empirical_visibility, run_campaigns, write_transcript, CampaignSpec, NoiseModel, QSource,
    DEFAULT_BLOCK_LEN, DEFAULT_EMA_WEIGHT,
};
use crate::state_evolution::{strike_probability, Hypothesis};
use crate::zeno_optimizer::{
    crossover, distance_report, loss_grid, operating_point, transmission_curve, DistanceReport,
};

/// Environment variable naming the directory for outputs when `--out` is absent.
pub const OUT_DIR_ENV: &str = "TRIPWIRE_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

const TABLE1_N: &[u32] = &[5, 10, 11, 12, 13, 20, 50];
const CURVE_N: &[u32] = &[5, 10, 20, 50, 100];
const SCALING_N: &[u32] = &[20, 50];

#[derive(Debug, Parser)]
#[command(name = "tripwire", version, about = "Lossy multi-pass interaction-free measurement tripwire")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ratio C2/C_vis, C_vis and optimal loss per pass count.
    Table1(CommonArgs),
    /// Object-free transmission as a function of controlled loss.
    Curve(CommonArgs),
    /// Invisibility probability and error bound against trial count.
    Scaling(CommonArgs),
    /// Seeded Monte Carlo campaigns compared with the bounds.
    Montecarlo(MonteCarloArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Total rotation N*theta_N as fractions of pi (comma separated).
    #[arg(long = "theta-total", value_delimiter = ',', default_value = "0.5")]
    pub theta_total: Vec<f64>,
    /// Pass counts N (comma separated).
    #[arg(long = "n", value_delimiter = ',')]
    pub n: Vec<u32>,
    /// Trial counts M (comma separated).
    #[arg(long = "m", value_delimiter = ',')]
    pub m: Vec<u64>,
    /// Number of points in the loss grid.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Master seed for Monte Carlo photon draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; defaults to $TRIPWIRE_OUT_DIR/<command>.<format>, else stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Campaigns per (N, M, truth) combination.
    #[arg(long, default_value_t = 1000)]
    pub campaigns: u64,
    /// Whether the object is really there.
    #[arg(long, value_enum, default_value_t = TruthArg::Both)]
    pub truth: TruthArg,
    /// Extra per-pass loss from the environment.
    #[arg(long = "extra-loss", default_value_t = 0.0)]
    pub extra_loss: f64,
    /// Standard deviation of the per-pass phase noise in radians.
    #[arg(long = "phase-sigma", default_value_t = 0.0)]
    pub phase_sigma: f64,
    /// Seed for the environment noise streams.
    #[arg(long = "drift-seed", default_value_t = 0)]
    pub drift_seed: u64,
    /// Re-tune loss and phase every block of trials.
    #[arg(long)]
    pub feedback: bool,
    /// Object-free transmission used in decisions: controller estimate or noise-free optimum.
    #[arg(long = "q-source", value_enum, default_value_t = QSourceArg::Running)]
    pub q_source: QSourceArg,
    /// Also write one JSON line per campaign to this file.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthArg {
    Absent,
    Present,
    Both,
}

impl TruthArg {
    fn hypotheses(self) -> Vec<Hypothesis> {
        match self {
            TruthArg::Absent => vec![Hypothesis::ObjectAbsent],
            TruthArg::Present => vec![Hypothesis::ObjectPresent],
            TruthArg::Both => vec![Hypothesis::ObjectAbsent, Hypothesis::ObjectPresent],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QSourceArg {
    Running,
    Optimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Table1,
    Curve,
    Scaling,
    Montecarlo,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Table1 => "table1",
            CommandKind::Curve => "curve",
            CommandKind::Scaling => "scaling",
            CommandKind::Montecarlo => "montecarlo",
        }
    }
}

/// Fully resolved run configuration, echoed into JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Fractions of pi.
    pub theta_total: Vec<f64>,
    pub n_values: Vec<u32>,
    pub lambda_grid_size: usize,
    pub m_values: Vec<u64>,
    pub seed: u64,
    pub output_path: Option<String>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloConfig {
    pub campaigns: u64,
    pub truth: TruthArg,
    pub extra_loss: f64,
    pub phase_sigma: f64,
    pub drift_seed: u64,
    pub feedback: bool,
    pub q_source: QSourceArg,
    pub block_len: u64,
    pub ema_weight: f64,
    #[serde(skip)]
    pub transcript: Option<PathBuf>,
}

impl RunConfig {
    /// Resolves defaults; returns the config and any warnings for stderr.
    pub fn from_command(command: Command) -> Result<(Self, Vec<String>)> {
        let (kind, common, mc) = match command {
            Command::Table1(c) => (CommandKind::Table1, c, None),
            Command::Curve(c) => (CommandKind::Curve, c, None),
            Command::Scaling(c) => (CommandKind::Scaling, c, None),
            Command::Montecarlo(a) => (CommandKind::Montecarlo, a.common.clone(), Some(a)),
        };
        let mut warnings = Vec::new();
        let n_values = if common.n.is_empty() {
            match kind {
                CommandKind::Table1 => TABLE1_N.to_vec(),
                CommandKind::Curve => CURVE_N.to_vec(),
                CommandKind::Scaling => SCALING_N.to_vec(),
                CommandKind::Montecarlo => vec![20],
            }
        } else {
            common.n.clone()
        };
        let m_values = if common.m.is_empty() {
            match kind {
                CommandKind::Montecarlo => vec![50],
                _ => (0..=20).map(|i| i * 10).collect(),
            }
        } else {
            common.m.clone()
        };
        let seed = match common.seed {
            Some(s) => s,
            None => {
                if kind == CommandKind::Montecarlo {
                    warnings.push("warning: no --seed given, using seed 0".to_string());
                }
                0
            }
        };
        let output_path = match &common.out {
            Some(p) => Some(p.display().to_string()),
            None => std::env::var_os(OUT_DIR_ENV).map(|dir| {
                PathBuf::from(dir).join(format!("{}.{}", kind.name(), common.format.extension())).display().to_string()
            }),
        };
        let montecarlo = mc.map(|a| MonteCarloConfig {
            campaigns: a.campaigns,
            truth: a.truth,
            extra_loss: a.extra_loss,
            phase_sigma: a.phase_sigma,
            drift_seed: a.drift_seed,
            feedback: a.feedback,
            q_source: a.q_source,
            block_len: DEFAULT_BLOCK_LEN,
            ema_weight: DEFAULT_EMA_WEIGHT,
            transcript: a.transcript,
        });
        let cfg = RunConfig {
            command: kind,
            theta_total: common.theta_total,
            n_values,
            lambda_grid_size: common.grid,
            m_values,
            seed,
            output_path,
            format: common.format,
            montecarlo,
        };
        cfg.validate()?;
        Ok((cfg, warnings))
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.theta_total.is_empty() {
            return bad("at least one --theta-total is required".into());
        }
        if let Some(t) = self.theta_total.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return bad(format!("--theta-total must be positive, got {t}"));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return bad("--n values must be positive".into());
        }
        if self.lambda_grid_size < 2 {
            return bad("--grid must be at least 2".into());
        }
        if self.m_values.is_empty() {
            return bad("--m needs at least one value".into());
        }
        if let Some(mc) = &self.montecarlo {
            if mc.campaigns == 0 {
                return bad("--campaigns must be positive".into());
            }
            if self.m_values.contains(&0) {
                return bad("montecarlo needs --m values of at least 1".into());
            }
            NoiseModel::new(mc.extra_loss, mc.phase_sigma, mc.drift_seed)?;
        }
        Ok(())
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => sig9(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(_) | Cell::Missing => Value::Null,
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

/// Decimal rendering with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Tabular command output plus extra JSON-only blocks.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub extra: Map<String, Value>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Default::default() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Result<String> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("meta".into(), json!({ "config": cfg, "version": env!("CARGO_PKG_VERSION") }));
        top.insert("rows".into(), Value::Array(rows));
        for (k, v) in &self.extra {
            top.insert(k.clone(), v.clone());
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top))?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, cfg: &RunConfig) -> Result<String> {
        match cfg.format {
            Format::Csv => Ok(self.to_csv()),
            Format::Json => self.to_json(cfg),
        }
    }
}

fn radians(fraction: f64) -> f64 {
    fraction * PI
}

pub fn cmd_table1(cfg: &RunConfig) -> Result<Table> {
    let mut table =
        Table::new(&["theta_total_over_pi", "n", "ratio", "c_vis", "lambda", "c2", "p", "q_min", "boundary"]);
    let mut crossovers = Map::new();
    for &t in &cfg.theta_total {
        let mut reports: Vec<DistanceReport> = Vec::new();
        for &n in &cfg.n_values {
            let point = operating_point(n, radians(t))?;
            match distance_report(&point) {
                Ok(r) => {
                    table.push(vec![
                        t.into(),
                        Cell::Int(n.into()),
                        r.ratio.into(),
                        r.c_vis.into(),
                        point.lambda_opt.into(),
                        r.c2.into(),
                        point.p.into(),
                        point.q_min.into(),
                        Cell::Bool(point.boundary),
                    ]);
                    reports.push(r);
                }
                Err(Error::Degenerate(_) | Error::InvalidInput(_) | Error::Infinite(_)) => {
                    let c_vis = strike_probability(&point.pass_config()).and_then(visibility_distance).ok();
                    table.push(vec![
                        t.into(),
                        Cell::Int(n.into()),
                        Cell::Missing,
                        c_vis.into(),
                        point.lambda_opt.into(),
                        Cell::Missing,
                        point.p.into(),
                        point.q_min.into(),
                        Cell::Bool(true),
                    ]);
                }
                Err(e) => return Err(e),
            }
        }
        crossovers.insert(sig9(t), crossover(&reports).map_or(Value::Null, |n| json!(n)));
    }
    table.extra.insert("crossover".into(), Value::Object(crossovers));
    Ok(table)
}

pub fn cmd_transmission_curve(cfg: &RunConfig) -> Result<Table> {
    let grid = loss_grid(cfg.lambda_grid_size)?;
    let mut table = Table::new(&["theta_total_over_pi", "n", "lambda", "p_tr"]);
    for &t in &cfg.theta_total {
        for &n in &cfg.n_values {
            for (lam, q) in transmission_curve(n, radians(t), &grid)? {
                table.push(vec![t.into(), Cell::Int(n.into()), lam.into(), q.into()]);
            }
        }
    }
    Ok(table)
}

pub fn cmd_trial_scaling(cfg: &RunConfig) -> Result<Table> {
    let mut table = Table::new(&["theta_total_over_pi", "n", "m", "p_vis", "pe_max", "c2", "c_vis"]);
    for &t in &cfg.theta_total {
        for &n in &cfg.n_values {
            let r = distance_report(&operating_point(n, radians(t))?)?;
            for &m in &cfg.m_values {
                let s = TrialScaling::new(m, r.c2, r.c_vis)?;
                table.push(vec![
                    t.into(),
                    Cell::Int(n.into()),
                    Cell::Int(m as i64),
                    invisibility_probability(&s).into(),
                    max_error_bound(&s).into(),
                    r.c2.into(),
                    r.c_vis.into(),
                ]);
            }
        }
    }
    Ok(table)
}

pub fn cmd_montecarlo(cfg: &RunConfig) -> Result<Table> {
    let mc = cfg.montecarlo.as_ref().ok_or_else(|| Error::InvalidInput("montecarlo settings missing".into()))?;
    let noise = NoiseModel::new(mc.extra_loss, mc.phase_sigma, mc.drift_seed)?;
    let mut table = Table::new(&[
        "theta_total_over_pi",
        "n",
        "m",
        "truth",
        "campaigns",
        "empirical_error",
        "pe_max",
        "error_bound_3sigma",
        "error_within_bound",
        "empirical_invisibility",
        "p_vis",
        "invisibility_3sigma",
        "invisibility_consistent",
        "mean_transmission",
        "strikes",
    ]);
    let mut comparison = Vec::new();
    let mut transcript = Vec::new();
    for &t in &cfg.theta_total {
        for &n in &cfg.n_values {
            let point = operating_point(n, radians(t))?;
            let report = distance_report(&point)?;
            for &m in &cfg.m_values {
                let scaling = TrialScaling::new(m, report.c2, report.c_vis)?;
                let pe_max = max_error_bound(&scaling);
                let p_vis = invisibility_probability(&scaling);
                for truth in mc.truth.hypotheses() {
                    let mut spec = CampaignSpec::new(point.pass_config(), truth, noise, m, mc.feedback);
                    spec.q_source = match mc.q_source {
                        QSourceArg::Running => QSource::Running,
                        QSourceArg::Optimum => QSource::Optimum,
                    };
                    spec.block_len = mc.block_len;
                    spec.ema_weight = mc.ema_weight;
                    let results = run_campaigns(&spec, cfg.seed, mc.campaigns)?;
                    let count = results.len() as f64;
                    let error = empirical_error_rate(&results)?;
                    let error_band = pe_max + 3.0 * (pe_max * (1.0 - pe_max) / count).sqrt();
                    let (invisible, vis_band, vis_ok) = if truth == Hypothesis::ObjectPresent {
                        let v = empirical_visibility(&results)?;
                        let band = 3.0 * (p_vis * (1.0 - p_vis) / count).sqrt();
                        (Some(v), Some(band), Cell::Bool((v - p_vis).abs() <= band))
                    } else {
                        (None, None, Cell::Missing)
                    };
                    let mean_tr = results.iter().map(|r| r.empirical_transmission).sum::<f64>() / count;
                    let strikes: u64 = results.iter().map(|r| r.strikes).sum();
                    comparison.push(json!({
                        "theta_total_over_pi": t,
                        "n": n,
                        "m": m,
                        "truth": truth,
                        "empirical_error": error,
                        "pe_max": pe_max,
                        "error_within_bound": error <= error_band,
                        "empirical_invisibility": invisible,
                        "p_vis": p_vis,
                        "invisibility_consistent": match vis_ok { Cell::Bool(b) => json!(b), _ => Value::Null },
                    }));
                    table.push(vec![
                        t.into(),
                        Cell::Int(n.into()),
                        Cell::Int(m as i64),
                        Cell::Text(truth.to_string()),
                        Cell::Int(mc.campaigns as i64),
                        error.into(),
                        pe_max.into(),
                        error_band.into(),
                        Cell::Bool(error <= error_band),
                        invisible.into(),
                        p_vis.into(),
                        vis_band.into(),
                        vis_ok,
                        mean_tr.into(),
                        Cell::Int(strikes as i64),
                    ]);
                    if mc.transcript.is_some() {
                        transcript.extend(results);
                    }
                }
            }
        }
    }
    if let Some(path) = &mc.transcript {
        let mut buf = Vec::new();
        write_transcript(&mut buf, &transcript)?;
        write_file(path, &buf)?;
    }
    table.extra.insert("comparison".into(), Value::Array(comparison));
    Ok(table)
}

/// Runs a resolved configuration and returns the rendered output.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    let table = match cfg.command {
        CommandKind::Table1 => cmd_table1(cfg)?,
        CommandKind::Curve => cmd_transmission_curve(cfg)?,
        CommandKind::Scaling => cmd_trial_scaling(cfg)?,
        CommandKind::Montecarlo => cmd_montecarlo(cfg)?,
    };
    table.render(cfg)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::InvalidInput(_) | Error::Degenerate(_) | Error::Infinite(_) | Error::InconsistentData(_) => EXIT_INVALID,
    }
}

fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)
        .map_err(|e| std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())).into())
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output_path {
        Some(path) => write_file(std::path::Path::new(path), text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = RunConfig::from_command(cli.command).and_then(|(cfg, warnings)| {
        for w in warnings {
            eprintln!("{w}");
        }
        let text = execute(&cfg)?;
        emit(&cfg, &text)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
