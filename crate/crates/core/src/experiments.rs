//! Reproducible experiments behind the command-line front end: configuration,
//! versioned result files, scans and CSV export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandlimit::{self, CutoffScan, FilterCandidate, FilteredFidelity, FilteredPropagation};
use crate::dla::{self, ControlSet, DlaReport};
use crate::error::{Error, Result};
use crate::hamiltonians::{Coupling, SpinChainSpec};
use crate::optimize::{self, OptimizationReport, OptimizerConfig, ScanMode, TimeScan};
use crate::propagation::{propagate, trace_fidelity, ControlSequence};
use crate::targets::{GateKind, TargetGate};

pub const SCHEMA_VERSION: u32 = 1;
/// Stored and recomputed fidelities must agree to this.
pub const REPLAY_TOL: f64 = 1e-12;

/// Number of slices and their duration; give either `slice_duration` or `total_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub n_pulses: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { n_pulses: 70, slice_duration: None, total_time: Some(28.0) }
    }
}

impl Schedule {
    pub fn with_total_time(n_pulses: usize, total_time: f64) -> Self {
        Schedule { n_pulses, slice_duration: None, total_time: Some(total_time) }
    }

    /// Slice duration `T`, checking `t_f = N_f T` when both are given.
    pub fn slice_duration(&self) -> Result<f64> {
        if self.n_pulses < 2 || self.n_pulses % 2 != 0 {
            return Err(Error::invalid("n_pulses", format!("{} must be even and >= 2", self.n_pulses)));
        }
        let nf = self.n_pulses as f64;
        let tau = match (self.slice_duration, self.total_time) {
            (Some(tau), None) => tau,
            (None, Some(tf)) => tf / nf,
            (Some(tau), Some(tf)) => {
                if (tau * nf - tf).abs() > 1e-12 * tf.abs().max(1.0) {
                    return Err(Error::invalid(
                        "total_time",
                        format!("t_f = {tf} is inconsistent with N_f T = {}", tau * nf),
                    ));
                }
                tau
            }
            (None, None) => return Err(Error::invalid("schedule", "give slice_duration or total_time")),
        };
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("slice_duration", format!("T = {tau} must be positive")));
        }
        Ok(tau)
    }

    pub fn total_time(&self) -> Result<f64> {
        Ok(self.slice_duration()? * self.n_pulses as f64)
    }
}

/// Inclusive arithmetic grid `start, start + step, ..., <= stop`, or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range { start: f64, stop: f64, step: f64 },
    Values(Vec<f64>),
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            Grid::Range { start, stop, step } => optimize::grid(*start, *stop, *step),
            Grid::Values(v) if v.is_empty() => Err(Error::invalid("grid", "no values")),
            Grid::Values(v) => Ok(v.clone()),
        }
    }
}

/// `start:stop:step` or a comma-separated list.
impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("grid", format!("`{t}` is not a number")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, b, c] => Ok(Grid::Range { start: num(a)?, stop: num(b)?, step: num(c)? }),
            [list] => Ok(Grid::Values(list.split(',').map(num).collect::<Result<_>>()?)),
            _ => Err(Error::invalid("grid", format!("`{s}` is neither start:stop:step nor a list"))),
        }
    }
}

/// Scan axes; only the one matching the subcommand is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanAxes {
    /// Total gate times (1/J).
    pub total_time: Grid,
    /// Cutoff frequencies (J).
    pub cutoff: Grid,
    /// Leakage rates.
    pub leakage: Grid,
    /// Global field strengths (J).
    pub global_field: Grid,
    /// Gate errors a time scan looks for.
    pub target_errors: Vec<f64>,
    pub mode: ScanMode,
}

impl Default for ScanAxes {
    fn default() -> Self {
        ScanAxes {
            total_time: Grid::Range { start: 10.0, stop: 35.0, step: 0.5 },
            cutoff: Grid::Range { start: 2.0, stop: 40.0, step: 1.0 },
            leakage: Grid::Range { start: 2.0, stop: 8.0, step: 0.1 },
            global_field: Grid::Values(vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.5]),
            target_errors: vec![1e-2],
            mode: ScanMode::StopAtFirst,
        }
    }
}

/// Everything an invocation needs; read from TOML and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SpinChainSpec,
    pub gate: TargetGate,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub scan: ScanAxes,
    #[serde(default)]
    pub filter: FilteredPropagation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Three-qubit Toffoli at `N_f = 70`, `t_f = 28`.
    pub fn for_gate(gate: TargetGate) -> Self {
        ExperimentConfig {
            spec: SpinChainSpec::xxx(gate.n_qubits),
            gate,
            schedule: Schedule::default(),
            optimizer: OptimizerConfig::default(),
            scan: ScanAxes::default(),
            filter: FilteredPropagation::default(),
            output: None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(s)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.gate.n_qubits != self.spec.n_qubits {
            return Err(Error::invalid(
                "gate",
                format!("{} acts on {} qubits but the chain has {}", self.gate, self.gate.n_qubits, self.spec.n_qubits),
            ));
        }
        self.gate.matrix()?;
        self.schedule.slice_duration()?;
        self.optimizer.validate()?;
        self.filter.validate()?;
        for &e in &self.scan.target_errors {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::invalid("target_errors", format!("{e} is not in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// `toffoli`, `fredkin`, `cnot` (qubits 2,3), `cnot:C,T`, `eswap:THETA`
/// (two qubits) or `eswap:THETA@A,B` (three qubits). `THETA` may be written
/// as `pi/k`.
pub fn parse_gate(s: &str) -> Result<TargetGate> {
    let lower = s.trim().to_ascii_lowercase();
    let (name, arg) = match lower.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (lower.as_str(), None),
    };
    let pair = |a: &str| -> Result<(usize, usize)> {
        let v: Vec<usize> = a
            .split(',')
            .map(|q| q.trim().parse().map_err(|_| Error::invalid("gate", format!("bad qubit `{q}`"))))
            .collect::<Result<_>>()?;
        match v.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(Error::invalid("gate", format!("expected two qubits, got `{a}`"))),
        }
    };
    let gate = match (name, arg) {
        ("toffoli", None) => TargetGate::toffoli(),
        ("fredkin", None) => TargetGate::fredkin(),
        ("cnot", None) => TargetGate::cnot_23(),
        ("cnot", Some(a)) => {
            let (control, target) = pair(a)?;
            TargetGate { kind: GateKind::Cnot { control, target }, n_qubits: 3 }
        }
        ("eswap", Some(a)) => match a.split_once('@') {
            None => TargetGate::eswap(parse_angle(a)?),
            Some((theta, q)) => TargetGate {
                kind: GateKind::Eswap { theta: parse_angle(theta)?, qubits: pair(q)? },
                n_qubits: 3,
            },
        },
        _ => return Err(Error::invalid("gate", format!("unknown gate `{s}`"))),
    };
    gate.matrix()?;
    Ok(gate)
}

fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::invalid("gate", format!("bad angle `{s}`"));
    if let Some(rest) = s.strip_prefix("pi") {
        let denom = match rest.strip_prefix('/') {
            Some(d) => d.parse::<f64>().map_err(|_| bad())?,
            None if rest.is_empty() => 1.0,
            None => return Err(bad()),
        };
        return Ok(std::f64::consts::PI / denom);
    }
    s.parse().map_err(|_| bad())
}

/// `xxx`, `xxz:DELTA` or `xyz:JX,JY,JZ`.
pub fn parse_coupling(s: &str) -> Result<Coupling> {
    let lower = s.trim().to_ascii_lowercase();
    let nums = |a: &str| -> Result<Vec<f64>> {
        a.split(',')
            .map(|v| v.trim().parse().map_err(|_| Error::invalid("coupling", format!("bad number `{v}`"))))
            .collect()
    };
    match lower.split_once(':') {
        None if lower == "xxx" => Ok(Coupling::Xxx),
        Some(("xxz", a)) => match nums(a)?.as_slice() {
            [delta] => Ok(Coupling::Xxz { delta: *delta }),
            _ => Err(Error::invalid("coupling", "xxz takes one anisotropy")),
        },
        Some(("xyz", a)) => match nums(a)?.as_slice() {
            [jx, jy, jz] => Ok(Coupling::Xyz { jx: *jx, jy: *jy, jz: *jz }),
            _ => Err(Error::invalid("coupling", "xyz takes three constants")),
        },
        _ => Err(Error::invalid("coupling", format!("unknown coupling `{s}`"))),
    }
}

/// When and with what the result was produced; excluded from replay comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

struct Clock {
    started_unix: f64,
    started: Instant,
}

impl Clock {
    fn start() -> Self {
        Clock { started_unix: unix_now(), started: Instant::now() }
    }

    fn finish(self) -> Provenance {
        Provenance {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started_unix,
            finished_unix: unix_now(),
            wall_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Re-evaluation of one stored sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fidelity: f64,
    pub gate_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtered: Option<FilteredFidelity>,
    /// Distinct optima ranked by filtered fidelity, when the filtered
    /// sequence was chosen among them rather than taken as the best one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<FilterCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageRow {
    pub leakage: f64,
    pub fidelity: f64,
    pub gate_error: f64,
}

/// Benchmark curve of a fixed optimum under leakage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageScan {
    /// Leakage-free fidelity of the evaluated sequence.
    pub source_fidelity: f64,
    /// Seed of the search that produced the sequence, if known.
    pub source_seed: Option<u64>,
    pub rows: Vec<LeakageRow>,
}

impl LeakageScan {
    /// Provenance label for plots and CSV comments.
    pub fn label(&self, gate: &TargetGate) -> String {
        match self.source_seed {
            Some(seed) => format!("{gate} optimum, F = {:.12}, seed {seed}", self.source_fidelity),
            None => format!("{gate} sequence, F = {:.12}", self.source_fidelity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScanRow {
    pub global_field: f64,
    pub target_error: f64,
    pub shortest_time: Option<f64>,
}

/// Table of shortest gate times per global field and target error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScan {
    pub rows: Vec<FieldScanRow>,
    pub scans: Vec<(f64, TimeScan)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: u32,
    pub command: String,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<OptimizationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_scan: Option<TimeScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_scan: Option<CutoffScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage_scan: Option<LeakageScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_scan: Option<FieldScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dla: Option<DlaReport>,
    pub provenance: Provenance,
}

impl ResultFile {
    fn new(command: &str, config: &ExperimentConfig, clock: Clock) -> Self {
        ResultFile {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config: config.clone(),
            report: None,
            evaluation: None,
            time_scan: None,
            cutoff_scan: None,
            leakage_scan: None,
            field_scan: None,
            dla: None,
            provenance: clock.finish(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ResultFile = serde_json::from_str(s)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("{} is not supported (expected {SCHEMA_VERSION})", file.schema_version),
            ));
        }
        file.config.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid("input", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Serde(m) => Error::invalid("input", format!("{} is not a valid result file: {m}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Serialized form without the provenance section, for byte comparisons.
    pub fn numeric_content(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("provenance");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    /// The stored best sequence, or the error if none is stored.
    pub fn best_sequence(&self) -> Result<&ControlSequence> {
        self.report
            .as_ref()
            .map(|r| &r.best_sequence)
            .ok_or_else(|| Error::invalid("input", "result file holds no optimized sequence"))
    }

    /// Recomputes the stored best fidelity and checks it against the stored value.
    pub fn replay(&self) -> Result<f64> {
        let report = self
            .report
            .as_ref()
            .ok_or_else(|| Error::invalid("input", "result file holds no optimized sequence"))?;
        let f = trace_fidelity(&propagate(&self.config.spec, &report.best_sequence)?, &self.config.gate)?;
        if (f - report.best_fidelity).abs() > REPLAY_TOL {
            return Err(Error::Numerical(format!(
                "stored fidelity {} does not replay (recomputed {f})",
                report.best_fidelity
            )));
        }
        Ok(f)
    }
}

/// Global search at the configured schedule.
pub fn cmd_optimize(config: &ExperimentConfig) -> Result<ResultFile> {
    config.validate()?;
    let clock = Clock::start();
    let tau = config.schedule.slice_duration()?;
    let report = optimize::global_search(&config.spec, &config.gate, config.schedule.n_pulses, tau, &config.optimizer)?;
    let mut file = ResultFile::new("optimize", config, clock);
    file.report = Some(report);
    file.provenance.finished_unix = unix_now();
    Ok(file)
}

/// Re-evaluates the stored best sequence.
pub fn cmd_evaluate(input: &ResultFile) -> Result<ResultFile> {
    let clock = Clock::start();
    let fidelity = input.replay()?;
    let mut file = ResultFile::new("evaluate", &input.config, clock);
    file.report = input.report.clone();
    file.evaluation = Some(Evaluation { fidelity, gate_error: 1.0 - fidelity, filtered: None, candidates: Vec::new() });
    Ok(file)
}

/// Filtered fidelity at `cutoff` of the stored best sequence, or, with
/// `select_below = Some(e)`, of the most filter-robust distinct optimum whose
/// unfiltered error is at most `e`.
pub fn cmd_filter(input: &ResultFile, cutoff: f64, select_below: Option<f64>) -> Result<ResultFile> {
    let clock = Clock::start();
    let replayed = input.replay()?;
    let config = &input.config;
    let (fidelity, filtered, candidates) = match select_below {
        None => {
            let seq = input.best_sequence()?;
            let f = bandlimit::filtered_fidelity(&config.spec, &bandlimit::filter_fields(seq, cutoff)?, &config.gate, &config.filter)?;
            (replayed, f, Vec::new())
        }
        Some(max_error) => {
            let report = input.report.as_ref().ok_or_else(|| Error::invalid("input", "no optimization report"))?;
            let ranked = bandlimit::rank_by_filtered_fidelity(&config.spec, &config.gate, report, max_error, cutoff, &config.filter)?;
            let top = ranked.first().ok_or_else(|| {
                Error::Numerical(format!("no converged optimum with gate error <= {max_error:e}"))
            })?;
            let f = trace_fidelity(&propagate(&config.spec, &top.sequence)?, &config.gate)?;
            (f, top.filtered, ranked)
        }
    };
    let mut file = ResultFile::new("filter", config, clock);
    file.report = input.report.clone();
    file.evaluation = Some(Evaluation { fidelity, gate_error: 1.0 - fidelity, filtered: Some(filtered), candidates });
    Ok(file)
}

/// Shortest gate time over the configured `t_f` grid for the tightest target error.
pub fn cmd_scan_time(config: &ExperimentConfig) -> Result<ResultFile> {
    config.validate()?;
    let clock = Clock::start();
    let target = tightest(&config.scan.target_errors)?;
    let scan = optimize::gate_time_scan(
        &config.spec,
        &config.gate,
        config.schedule.n_pulses,
        &config.scan.total_time.points()?,
        target,
        &config.optimizer,
        config.scan.mode,
    )?;
    let mut file = ResultFile::new("scan-time", config, clock);
    file.time_scan = Some(scan);
    Ok(file)
}

fn tightest(errors: &[f64]) -> Result<f64> {
    errors
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::invalid("target_errors", "at least one target error is required"))
}

/// Filtered-field error of the stored sequence over the cutoff grid.
pub fn cmd_scan_cutoff(input: &ResultFile, cutoffs: &Grid) -> Result<ResultFile> {
    let clock = Clock::start();
    input.replay()?;
    let scan = bandlimit::cutoff_scan(
        &input.config.spec,
        input.best_sequence()?,
        &input.config.gate,
        &cutoffs.points()?,
        &input.config.filter,
    )?;
    let mut config = input.config.clone();
    config.scan.cutoff = cutoffs.clone();
    let mut file = ResultFile::new("scan-cutoff", &config, clock);
    file.report = input.report.clone();
    file.cutoff_scan = Some(scan);
    Ok(file)
}

/// Fidelity of `seq` (optimized without leakage) under each leakage rate.
pub fn leakage_scan(
    spec: &SpinChainSpec,
    seq: &ControlSequence,
    gate: &TargetGate,
    rates: &[f64],
    source_seed: Option<u64>,
) -> Result<LeakageScan> {
    let clean = spec.clone().with_leakage(None);
    let source_fidelity = trace_fidelity(&propagate(&clean, seq)?, gate)?;
    let rows = rates
        .par_iter()
        .map(|&mu| {
            let f = trace_fidelity(&propagate(&clean.clone().with_leakage(Some(mu)), seq)?, gate)?;
            Ok(LeakageRow { leakage: mu, fidelity: f, gate_error: 1.0 - f })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LeakageScan { source_fidelity, source_seed, rows })
}

pub fn cmd_leakage_scan(input: &ResultFile, rates: &Grid) -> Result<ResultFile> {
    let clock = Clock::start();
    input.replay()?;
    let seed = input.report.as_ref().map(|r| r.rng_seed);
    let scan = leakage_scan(&input.config.spec, input.best_sequence()?, &input.config.gate, &rates.points()?, seed)?;
    let mut config = input.config.clone();
    config.scan.leakage = rates.clone();
    let mut file = ResultFile::new("scan-leakage", &config, clock);
    file.report = input.report.clone();
    file.leakage_scan = Some(scan);
    Ok(file)
}

/// Re-optimizes the stored problem with leakage `mu`: a single global search
/// at the stored schedule, or a time scan when `times` is given.
pub fn cmd_reoptimize_with_leakage(input: &ResultFile, mu: f64, times: Option<&Grid>) -> Result<ResultFile> {
    let mut config = input.config.clone();
    config.spec.leakage = Some(mu);
    match times {
        None => {
            let mut file = cmd_optimize(&config)?;
            file.command = "reopt-leakage".into();
            Ok(file)
        }
        Some(grid) => {
            config.scan.total_time = grid.clone();
            let mut file = cmd_scan_time(&config)?;
            file.command = "reopt-leakage".into();
            Ok(file)
        }
    }
}

/// Shortest times per global field and target error.
pub fn field_scan(
    spec: &SpinChainSpec,
    gate: &TargetGate,
    n_pulses: usize,
    fields: &[f64],
    times: &[f64],
    target_errors: &[f64],
    config: &OptimizerConfig,
    mode: ScanMode,
) -> Result<FieldScan> {
    let target = tightest(target_errors)?;
    let mut rows = Vec::new();
    let mut scans = Vec::new();
    for &omega in fields {
        let s = spec.clone().with_global_field(omega);
        let scan = optimize::gate_time_scan(&s, gate, n_pulses, times, target, config, mode)?;
        for &e in target_errors {
            rows.push(FieldScanRow { global_field: omega, target_error: e, shortest_time: scan.shortest_for(e) });
        }
        scans.push((omega, scan));
    }
    Ok(FieldScan { rows, scans })
}

pub fn cmd_field_scan(config: &ExperimentConfig) -> Result<ResultFile> {
    config.validate()?;
    let clock = Clock::start();
    let scan = field_scan(
        &config.spec,
        &config.gate,
        config.schedule.n_pulses,
        &config.scan.global_field.points()?,
        &config.scan.total_time.points()?,
        &config.scan.target_errors,
        &config.optimizer,
        config.scan.mode,
    )?;
    let mut file = ResultFile::new("scan-field", config, clock);
    file.field_scan = Some(scan);
    Ok(file)
}

pub fn cmd_dla(spec: &SpinChainSpec, controls: ControlSet) -> Result<DlaReport> {
    dla::dla_dimension(&dla::chain_generators(spec, controls)?)
}

/// Human-readable DLA summary, ending in PASS or SUBSPACE.
pub fn format_dla(report: &DlaReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "generators: {}", report.generators.join(", "));
    let _ = writeln!(s, "dimension: {} (su(2^{}) has {})", report.dimension, report.n_qubits, report.expected_dimension);
    let _ = writeln!(s, "sweeps: {}, commutators: {}", report.sweeps, report.commutators_evaluated);
    let verdict = match report.controllability {
        dla::Controllability::Full => "PASS",
        dla::Controllability::Subspace => "SUBSPACE",
    };
    let _ = write!(s, "{verdict}");
    s
}

/// Writes a CSV whose header names every column with its unit.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV tables carried by a result file, keyed by a file-name suffix.
pub fn csv_tables(file: &ResultFile) -> Vec<(&'static str, Vec<&'static str>, Vec<Vec<String>>)> {
    let mut out = Vec::new();
    if let Some(scan) = &file.time_scan {
        out.push((
            "time",
            vec!["t_f [1/J]", "fidelity [dimensionless]", "gate_error [dimensionless]", "converged [bool]"],
            scan.rows
                .iter()
                .map(|r| vec![num(r.total_time), num(r.best_fidelity), num(r.gate_error), r.converged.to_string()])
                .collect(),
        ));
    }
    if let Some(scan) = &file.cutoff_scan {
        out.push((
            "cutoff",
            vec!["omega0 [J]", "gate_error [dimensionless]", "fidelity [dimensionless]", "substeps [count]"],
            scan.rows
                .iter()
                .map(|r| vec![num(r.cutoff), num(r.gate_error), num(r.fidelity), r.substeps.to_string()])
                .collect(),
        ));
    }
    if let Some(scan) = &file.leakage_scan {
        out.push((
            "leakage",
            vec!["mu_L [dimensionless]", "fidelity [dimensionless]", "gate_error [dimensionless]"],
            scan.rows.iter().map(|r| vec![num(r.leakage), num(r.fidelity), num(r.gate_error)]).collect(),
        ));
    }
    if let Some(scan) = &file.field_scan {
        out.push((
            "field",
            vec!["omega [J]", "target_error [dimensionless]", "shortest_t_f [1/J]"],
            scan.rows
                .iter()
                .map(|r| vec![num(r.global_field), num(r.target_error), opt(r.shortest_time)])
                .collect(),
        ));
    }
    out
}

/// Samples of the filtered fields as `(t [1/J], h_x [J], h_y [J])` rows.
pub fn write_field_trace(path: &Path, seq: &ControlSequence, cutoff: f64, n_points: usize) -> Result<()> {
    let f = bandlimit::filter_fields(seq, cutoff)?;
    let rows: Vec<Vec<String>> = f.trace(n_points).into_iter().map(|(t, x, y)| vec![num(t), num(x), num(y)]).collect();
    write_csv(path, &["t [1/J]", "h_x [J]", "h_y [J]"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_strings() {
        assert_eq!(parse_gate("Toffoli").unwrap(), TargetGate::toffoli());
        assert_eq!(parse_gate("cnot").unwrap(), TargetGate::cnot_23());
        assert_eq!(parse_gate("eswap:pi/4").unwrap(), TargetGate::eswap(std::f64::consts::FRAC_PI_4));
        assert_eq!(parse_gate("eswap:0.5@2,3").unwrap(), TargetGate::eswap_embedded(0.5));
        assert!(parse_gate("cnot:2,2").is_err());
        assert!(parse_gate("swap").is_err());
    }

    #[test]
    fn couplings() {
        assert_eq!(parse_coupling("xxz:0.5").unwrap(), Coupling::Xxz { delta: 0.5 });
        assert_eq!(parse_coupling("XYZ:1,0.9,1.1").unwrap(), Coupling::Xyz { jx: 1.0, jy: 0.9, jz: 1.1 });
        assert!(parse_coupling("xxz").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!("1:2:0.5".parse::<Grid>().unwrap().points().unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!("3,5".parse::<Grid>().unwrap().points().unwrap(), vec![3.0, 5.0]);
        assert!("a:b".parse::<Grid>().is_err());
    }

    #[test]
    fn schedule_consistency() {
        let s = Schedule { n_pulses: 70, slice_duration: Some(0.4), total_time: Some(28.0) };
        assert!((s.slice_duration().unwrap() - 0.4).abs() < 1e-15);
        let bad = Schedule { total_time: Some(27.0), ..s };
        assert!(matches!(bad.slice_duration(), Err(Error::Invalid { field, .. }) if field == "total_time"));
        assert!(Schedule { n_pulses: 7, ..s }.slice_duration().is_err());
    }

    #[test]
    fn config_rejects_qubit_mismatch() {
        let mut c = ExperimentConfig::for_gate(TargetGate::toffoli());
        c.spec.n_qubits = 2;
        assert!(c.validate().is_err());
    }
}
