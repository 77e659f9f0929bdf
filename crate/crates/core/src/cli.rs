//! Command-line driver: configuration, subcommands and result files.
//!
//! Every run resolves a [`RunConfig`] from an optional TOML file plus flag
//! overrides, writes the effective configuration next to its results, and
//! embeds tool version, seed and configuration in each output file. CSV
//! numbers carry 17 significant digits; JSON numbers use the shortest
//! representation that round-trips.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::fredholm::{fredholm_table, FredholmTable, SincKernel, TableOptions};
use crate::model::{dof_reference, ClusterParams, DerivedParams, DofReference};
use crate::montecarlo::{
    bound_sweep, claim_sim_experiment, concentration_experiment, fredholm_identity_check, scaling_grid, ChannelSource,
    ConcentrationReport, IdentityReport, KernelPoint, McEstimate, SweepResult,
};
use crate::spectra::LogBase;
use crate::{Error, TOOL_VERSION};

/// Version tag carried by every JSON summary.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical check failed: {0}")]
    Check(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Check(_) | CliError::Numerical(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    Spectrum,
    Fredholm,
    Verify,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Fredholm => "fredholm",
            Experiment::Verify => "verify",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyExperiment {
    Identity,
    Claim,
    Sweep,
    Concentration,
}

/// Seeds are written as TOML integers when they fit in `i64` and as decimal
/// strings otherwise.
mod seed_format {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(|_| de::Error::custom(format!("seed {t:?} is not a u64"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FredholmConfig {
    /// Bandwidth `m` of the sinc kernel.
    pub m: f64,
    /// Largest `d_k`; defaults to `max(⌈4m⌉, 4)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Largest iterated trace; defaults to `max(⌈4m⌉, 4)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<usize>,
}

impl Default for FredholmConfig {
    fn default() -> Self {
        Self { m: 10.0, k_max: None, p_max: None }
    }
}

/// Sweep grid: explicit `points`, then `scenario` with each of
/// `dist_values`, then `m = n^e` for every `n` in `ns` and `e` in
/// `exponents`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub points: Vec<ClusterParams>,
    pub dist_values: Vec<f64>,
    pub ns: Vec<usize>,
    pub exponents: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { points: Vec::new(), dist_values: Vec::new(), ns: vec![100, 200, 400, 800], exponents: vec![0.6, 0.8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub experiments: Vec<VerifyExperiment>,
    pub identity_ks: Vec<usize>,
    pub identity_ms: Vec<f64>,
    pub identity_trials: usize,
    pub claim_source: ChannelSource,
    pub concentration_ns: Vec<usize>,
    /// Concentration points use `m = n^concentration_exponent`.
    pub concentration_exponent: f64,
    pub concentration_trials: usize,
    /// Multiplies every tabulated `d_k` before the identity check. Anything
    /// other than 1 is a deliberate corruption for exercising the failure
    /// path.
    pub dk_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            experiments: vec![
                VerifyExperiment::Identity,
                VerifyExperiment::Claim,
                VerifyExperiment::Sweep,
                VerifyExperiment::Concentration,
            ],
            identity_ks: vec![1, 2, 3],
            identity_ms: vec![2.0, 5.0],
            identity_trials: 100_000,
            claim_source: ChannelSource::Los,
            concentration_ns: vec![100, 200, 400, 800],
            concentration_exponent: 0.6,
            concentration_trials: 30,
            dk_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(with = "seed_format")]
    pub seed: u64,
    pub trials: usize,
    /// Eigenvalue cutoff for the effective dof count.
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_n: Option<usize>,
    /// Report log-dets in bits instead of nats.
    pub bits: bool,
    pub out: PathBuf,
    pub scenario: ClusterParams,
    pub fredholm: FredholmConfig,
    pub sweep: SweepConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Spectrum,
            seed: 0,
            trials: 1,
            threshold: 1.0,
            quadrature_n: None,
            bits: false,
            out: PathBuf::from("out"),
            scenario: ClusterParams::reference_scenario(),
            fredholm: FredholmConfig::default(),
            sweep: SweepConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML; errors carry line and column.
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate().map_err(|(key, msg)| CliError::Config(locate(text, key, &msg)))?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn log_base(&self) -> LogBase {
        if self.bits {
            LogBase::Bits
        } else {
            LogBase::Nats
        }
    }

    /// Checks value ranges, naming the offending key on failure.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let check = |ok: bool, key: &'static str, msg: String| if ok { Ok(()) } else { Err((key, msg)) };
        check(self.trials >= 1, "trials", format!("trials must be at least 1, got {}", self.trials))?;
        check(
            self.threshold.is_finite() && self.threshold >= 0.0,
            "threshold",
            format!("threshold must be finite and non-negative, got {}", self.threshold),
        )?;
        if let Some(q) = self.quadrature_n {
            check(q >= 2, "quadrature_n", format!("quadrature_n must be at least 2, got {q}"))?;
        }
        self.scenario.validate().map_err(|e| ("scenario", e.to_string()))?;
        SincKernel::new(self.fredholm.m).map_err(|e| ("m", e.to_string()))?;
        for p in &self.sweep.points {
            p.validate().map_err(|e| ("points", e.to_string()))?;
        }
        for &d in &self.sweep.dist_values {
            ClusterParams { dist_d: d, ..self.scenario }.validate().map_err(|e| ("dist_values", e.to_string()))?;
        }
        check(self.sweep.ns.iter().all(|&n| n >= 2), "ns", "sweep sizes must be at least 2".into())?;
        check(
            self.sweep.exponents.iter().all(|e| e.is_finite() && *e > 0.0),
            "exponents",
            "sweep exponents must be positive".into(),
        )?;
        let v = &self.verify;
        check(v.identity_ks.iter().all(|&k| k >= 1), "identity_ks", "identity orders must be at least 1".into())?;
        for &m in &v.identity_ms {
            check(m > 0.0 && m.is_finite(), "identity_ms", format!("identity bandwidths must be positive, got {m}"))?;
        }
        check(v.identity_trials >= 1, "identity_trials", "identity_trials must be at least 1".into())?;
        check(v.concentration_trials >= 10, "concentration_trials", "concentration_trials must be at least 10".into())?;
        check(v.concentration_ns.iter().all(|&n| n >= 2), "concentration_ns", "sizes must be at least 2".into())?;
        check(
            v.concentration_exponent.is_finite() && v.concentration_exponent > 0.0,
            "concentration_exponent",
            "concentration_exponent must be positive".into(),
        )?;
        check(v.dk_scale.is_finite(), "dk_scale", "dk_scale must be finite".into())?;
        Ok(())
    }

    /// Fills in every default that depends on other fields.
    pub fn resolve(&mut self) {
        if matches!(self.experiment, Experiment::Fredholm) {
            let defaults = TableOptions::for_bandwidth(self.fredholm.m);
            self.quadrature_n.get_or_insert(defaults.quadrature_n);
            self.fredholm.k_max.get_or_insert(defaults.k_max);
            self.fredholm.p_max.get_or_insert(defaults.p_max);
        }
    }

    fn sweep_grid(&self) -> crate::Result<Vec<ClusterParams>> {
        let mut grid = self.sweep.points.clone();
        grid.extend(self.sweep.dist_values.iter().map(|&d| ClusterParams { dist_d: d, ..self.scenario }));
        for &e in &self.sweep.exponents {
            grid.extend(scaling_grid(&self.sweep.ns, e)?);
        }
        Ok(grid)
    }

    fn table_options(&self, m: f64) -> TableOptions {
        let defaults = TableOptions::for_bandwidth(m);
        TableOptions {
            quadrature_n: self.quadrature_n.unwrap_or(defaults.quadrature_n),
            p_max: self.fredholm.p_max.unwrap_or(defaults.p_max),
            k_max: self.fredholm.k_max.unwrap_or(defaults.k_max),
        }
    }
}

/// Attaches the line of the first assignment to `key`, when there is one.
fn locate(text: &str, key: &str, msg: &str) -> String {
    let line = text.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    });
    match line {
        Some(i) => format!("line {}: {key}: {msg}", i + 1),
        None => format!("{key}: {msg}"),
    }
}

#[derive(Debug, Parser)]
#[command(name = "losdof", version, about = "Line-of-sight MIMO degrees-of-freedom experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of nP·HH* and GG* for one random instance.
    Spectrum,
    /// Sinc-kernel eigenvalues, traces, Fredholm coefficients and decay fit.
    Fredholm,
    /// Identity and bound checks; exits 2 on an identity violation.
    Verify,
    /// Log-det quantities and implied constants over a scenario grid.
    Sweep,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::Spectrum => Experiment::Spectrum,
            Command::Fredholm => Experiment::Fredholm,
            Command::Verify => Experiment::Verify,
            Command::Sweep => Experiment::Sweep,
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long = "quadrature-n", global = true)]
    pub quadrature_n: Option<usize>,
    /// Report log-dets in bits.
    #[arg(long, global = true)]
    pub bits: bool,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Reads the config file (if any), applies flag overrides, validates and
/// resolves defaults.
pub fn effective_config(experiment: Experiment, overrides: &Overrides) -> CliResult<RunConfig> {
    let mut config = match &overrides.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            RunConfig::from_toml(&text).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?
        }
        None => RunConfig::default(),
    };
    config.experiment = experiment;
    if let Some(v) = overrides.seed {
        config.seed = v;
    }
    if let Some(v) = overrides.trials {
        config.trials = v;
    }
    if let Some(v) = overrides.threshold {
        config.threshold = v;
    }
    if let Some(v) = overrides.quadrature_n {
        config.quadrature_n = Some(v);
    }
    if overrides.bits {
        config.bits = true;
    }
    if let Some(v) = &overrides.out {
        config.out = v.clone();
    }
    config.validate().map_err(|(key, msg)| CliError::Config(format!("{key}: {msg}")))?;
    config.resolve();
    Ok(config)
}

/// 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn metadata_lines(config: &RunConfig) -> String {
    let json = serde_json::to_string(config).expect("configuration serializes to JSON");
    format!("# tool: {TOOL_VERSION}\n# seed: {}\n# config: {json}\n", config.seed)
}

/// CSV text with the metadata comment block, a header row and LF endings.
fn csv_text(config: &RunConfig, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(row).expect("in-memory write");
    }
    let body = String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("UTF-8 fields");
    metadata_lines(config) + &body
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes to JSON");
    text.push('\n');
    write_file(dir, name, &text)
}

fn prepare_out(config: &RunConfig) -> CliResult<PathBuf> {
    let dir = config.out.clone();
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    Ok(dir)
}

/// Writes the effective configuration as `<experiment>.config.toml`.
fn write_config_echo(dir: &Path, config: &RunConfig) -> CliResult<PathBuf> {
    let text = format!("# tool: {TOOL_VERSION}\n{}", config.to_toml());
    write_file(dir, &format!("{}.config.toml", config.experiment.name()), &text)
}

/// Fields common to every JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub tool: String,
    #[serde(with = "seed_format")]
    pub seed: u64,
    pub log_base: LogBase,
    pub config: RunConfig,
}

impl Provenance {
    fn new(config: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_VERSION.to_string(),
            seed: config.seed,
            log_base: config.log_base(),
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub params: ClusterParams,
    pub derived: DerivedParams,
    pub in_regime: bool,
    pub trial_seed: u64,
    pub threshold: f64,
    pub capacity_h: f64,
    pub capacity_g: f64,
    pub ratio: f64,
    pub dof_h: usize,
    pub dof_g: usize,
    pub dof_reference: DofReference,
}

/// Results of the spectrum subcommand, files already written.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub summary: T,
    pub files: Vec<PathBuf>,
}

pub fn run_spectrum(config: &RunConfig) -> CliResult<RunOutput<SpectrumSummary>> {
    let report = claim_sim_experiment(&config.scenario, 1, config.seed, config.threshold, ChannelSource::Los)?;
    let trial = &report.trials[0];
    let base = config.log_base();
    let summary = SpectrumSummary {
        provenance: Provenance::new(config),
        params: report.params,
        derived: report.derived,
        in_regime: report.in_regime,
        trial_seed: trial.seed,
        threshold: config.threshold,
        capacity_h: base.from_nats(trial.logdet_h),
        capacity_g: base.from_nats(trial.logdet_g),
        ratio: trial.ratio,
        dof_h: trial.dof_h,
        dof_g: trial.dof_g,
        dof_reference: dof_reference(&config.scenario),
    };
    let rows: Vec<Vec<String>> = trial
        .eigenvalues_h
        .iter()
        .zip(&trial.eigenvalues_g)
        .enumerate()
        .map(|(i, (h, g))| vec![i.to_string(), format_f64(*h), format_f64(*g)])
        .collect();
    let dir = prepare_out(config)?;
    let files = vec![
        write_file(&dir, "spectrum.csv", &csv_text(config, &["index", "eig_h", "eig_g"], &rows))?,
        write_json(&dir, "spectrum.json", &summary)?,
        write_config_echo(&dir, config)?,
    ];
    Ok(RunOutput { summary, files })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmSummary {
    #[serde(flatten)]
    pub provenance: Provenance,
    #[serde(flatten)]
    pub table: FredholmTable,
}

pub fn run_fredholm(config: &RunConfig) -> CliResult<RunOutput<FredholmSummary>> {
    let table = fredholm_table(config.fredholm.m, config.table_options(config.fredholm.m))?;
    let mu_rows: Vec<Vec<String>> =
        table.mu.iter().enumerate().map(|(i, v)| vec![i.to_string(), format_f64(*v)]).collect();
    let trace_rows: Vec<Vec<String>> =
        table.traces.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), format_f64(*v)]).collect();
    let dk_rows: Vec<Vec<String>> = (0..table.dk.len())
        .map(|k| {
            vec![
                k.to_string(),
                format_f64(table.dk[k]),
                format_f64(table.dk_recurrence[k]),
                format_f64(table.expected_subdeterminant(k).unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    let dir = prepare_out(config)?;
    let files = vec![
        write_file(&dir, "fredholm_mu.csv", &csv_text(config, &["index", "mu"], &mu_rows))?,
        write_file(&dir, "fredholm_traces.csv", &csv_text(config, &["p", "a_p"], &trace_rows))?,
        write_file(
            &dir,
            "fredholm_dk.csv",
            &csv_text(config, &["k", "d_k", "d_k_recurrence", "expected_subdeterminant"], &dk_rows),
        )?,
    ];
    let summary = FredholmSummary { provenance: Provenance::new(config), table };
    let mut files = files;
    files.push(write_json(&dir, "fredholm.json", &summary)?);
    files.push(write_config_echo(&dir, config)?);
    Ok(RunOutput { summary, files })
}

/// Spread of the implied constants over in-regime grid points with finite
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ConstantRange {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return None;
        }
        Some(Self {
            min: finite.iter().copied().fold(f64::INFINITY, f64::min),
            max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            points: finite.len(),
        })
    }

    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub k1: Option<ConstantRange>,
    pub k2: Option<ConstantRange>,
    #[serde(flatten)]
    pub result: SweepResult,
}

impl SweepSummary {
    fn new(config: &RunConfig, result: SweepResult) -> Self {
        let in_regime = || result.records.iter().filter(|r| r.in_regime);
        Self {
            provenance: Provenance::new(config),
            k1: ConstantRange::of(in_regime().map(|r| r.k1)),
            k2: ConstantRange::of(in_regime().map(|r| r.k2)),
            result,
        }
    }
}

pub const SWEEP_COLUMNS: [&str; 21] = [
    "n",
    "area_a",
    "dist_d",
    "lambda",
    "m",
    "p",
    "in_regime",
    "seed",
    "trials",
    "logdet_h_p",
    "logdet_h",
    "logdet_g",
    "dof_h",
    "dof_g",
    "dof_ref_lower",
    "dof_ref_upper",
    "envelope_lower",
    "envelope_upper",
    "k1",
    "k2",
    "k2_h",
];

fn sweep_rows(result: &SweepResult, base: LogBase) -> Vec<Vec<String>> {
    result
        .records
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                format_f64(r.area_a),
                format_f64(r.dist_d),
                format_f64(r.lambda),
                format_f64(r.m),
                format_f64(r.p),
                r.in_regime.to_string(),
                r.seed.to_string(),
                r.trials.to_string(),
                format_f64(base.from_nats(r.logdet_h_p)),
                format_f64(base.from_nats(r.logdet_h)),
                format_f64(base.from_nats(r.logdet_g)),
                r.dof_h.to_string(),
                r.dof_g.to_string(),
                format_f64(r.dof_ref_lower),
                format_f64(r.dof_ref_upper),
                format_f64(r.envelope_lower),
                format_f64(r.envelope_upper),
                format_f64(r.k1),
                format_f64(r.k2),
                format_f64(r.k2_h),
            ]
        })
        .collect()
}

fn convert_sweep(mut result: SweepResult, base: LogBase) -> SweepResult {
    for r in &mut result.records {
        r.logdet_h_p = base.from_nats(r.logdet_h_p);
        r.logdet_h = base.from_nats(r.logdet_h);
        r.logdet_g = base.from_nats(r.logdet_g);
    }
    result
}

pub fn run_sweep(config: &RunConfig) -> CliResult<RunOutput<SweepSummary>> {
    let grid = config.sweep_grid().map_err(|e| CliError::Config(e.to_string()))?;
    if grid.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    let result = bound_sweep(&grid, config.threshold, config.trials, config.seed)?;
    let base = config.log_base();
    let rows = sweep_rows(&result, base);
    let summary = SweepSummary::new(config, convert_sweep(result, base));
    let dir = prepare_out(config)?;
    let files = vec![
        write_file(&dir, "sweep.csv", &csv_text(config, &SWEEP_COLUMNS, &rows))?,
        write_json(&dir, "sweep.json", &summary)?,
        write_config_echo(&dir, config)?,
    ];
    Ok(RunOutput { summary, files })
}

/// Per-trial claim results without the eigenvalue lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSummary {
    pub params: ClusterParams,
    pub derived: DerivedParams,
    pub in_regime: bool,
    pub source: ChannelSource,
    pub logdet_h: Vec<f64>,
    pub logdet_g: Vec<f64>,
    pub dof_h: Vec<usize>,
    pub dof_g: Vec<usize>,
    pub ratio: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub identity: Vec<IdentityReport>,
    pub claim: Option<ClaimSummary>,
    pub sweep: Option<SweepSummary>,
    pub concentration: Option<ConcentrationReport>,
    /// Names of failed identity checks.
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

/// Runs the configured experiments and writes `verify.json`. The report is
/// returned even when a check fails; [`execute`] turns failures into exit
/// code 2.
pub fn run_verify(config: &RunConfig) -> CliResult<RunOutput<VerifyReport>> {
    let v = &config.verify;
    let base = config.log_base();
    let mut report = VerifyReport {
        provenance: Provenance::new(config),
        identity: Vec::new(),
        claim: None,
        sweep: None,
        concentration: None,
        failures: Vec::new(),
        warnings: Vec::new(),
    };
    if v.experiments.is_empty() {
        let msg = "verify: experiment list is empty, nothing to check".to_string();
        log::warn!("{msg}");
        report.warnings.push(msg);
    }
    for (slot, experiment) in v.experiments.iter().enumerate() {
        let seed = crate::rng::sub_seed(config.seed, slot as u64);
        match experiment {
            VerifyExperiment::Identity => {
                for (mi, &m) in v.identity_ms.iter().enumerate() {
                    let k_top = v.identity_ks.iter().copied().max().unwrap_or(1);
                    let mut options = config.table_options(m);
                    options.k_max = options.k_max.max(k_top);
                    let mut table = fredholm_table(m, options)?;
                    for d in table.dk.iter_mut().skip(1) {
                        *d *= v.dk_scale;
                    }
                    for (ki, &k) in v.identity_ks.iter().enumerate() {
                        let pair_seed = crate::rng::sub_seed(seed, (mi * v.identity_ks.len() + ki) as u64);
                        let r = fredholm_identity_check(k, v.identity_trials, pair_seed, &table)?;
                        if r.violation {
                            report.failures.push(format!("identity(k={k}, m={m}): z = {}", r.z_score));
                        }
                        report.identity.push(r);
                    }
                }
            }
            VerifyExperiment::Claim => {
                let r = claim_sim_experiment(&config.scenario, config.trials, seed, config.threshold, v.claim_source)?;
                report.claim = Some(ClaimSummary {
                    params: r.params,
                    derived: r.derived,
                    in_regime: r.in_regime,
                    source: r.source,
                    logdet_h: r.trials.iter().map(|t| base.from_nats(t.logdet_h)).collect(),
                    logdet_g: r.trials.iter().map(|t| base.from_nats(t.logdet_g)).collect(),
                    dof_h: r.trials.iter().map(|t| t.dof_h).collect(),
                    dof_g: r.trials.iter().map(|t| t.dof_g).collect(),
                    ratio: r.ratio,
                });
            }
            VerifyExperiment::Sweep => {
                let grid = config.sweep_grid()?;
                if grid.is_empty() {
                    let msg = "verify: sweep grid is empty, sweep skipped".to_string();
                    log::warn!("{msg}");
                    report.warnings.push(msg);
                } else {
                    let result = bound_sweep(&grid, config.threshold, config.trials, seed)?;
                    report.sweep = Some(SweepSummary::new(config, convert_sweep(result, base)));
                }
            }
            VerifyExperiment::Concentration => {
                let points: Vec<KernelPoint> = v
                    .concentration_ns
                    .iter()
                    .map(|&n| KernelPoint { n, m: (n as f64).powf(v.concentration_exponent) })
                    .collect();
                let mut r = concentration_experiment(&points, v.concentration_trials, seed)?;
                for p in &mut r.points {
                    p.mean = base.from_nats(p.mean);
                    p.std = base.from_nats(p.std);
                }
                report.concentration = Some(r);
            }
        }
    }
    if let Some(sweep) = &mut report.sweep {
        sweep.provenance = Provenance::new(config);
    }
    let dir = prepare_out(config)?;
    let files = vec![write_json(&dir, "verify.json", &report)?, write_config_echo(&dir, config)?];
    Ok(RunOutput { summary: report, files })
}

/// Runs one subcommand and reports the written files on stdout.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let config = effective_config(cli.command.experiment(), &cli.overrides)?;
    let (files, failures) = match cli.command {
        Command::Spectrum => (run_spectrum(&config)?.files, Vec::new()),
        Command::Fredholm => (run_fredholm(&config)?.files, Vec::new()),
        Command::Sweep => (run_sweep(&config)?.files, Vec::new()),
        Command::Verify => {
            let out = run_verify(&config)?;
            (out.files, out.summary.failures)
        }
    };
    let mut listing = String::new();
    for f in &files {
        let _ = writeln!(listing, "{}", f.display());
    }
    print!("{listing}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures.join("; ")))
    }
}

/// Entry point for the binary: parses `args`, runs, maps errors to exit
/// codes (usage errors count as invalid configuration).
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
