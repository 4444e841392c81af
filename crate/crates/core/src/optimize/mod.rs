//! Gate-fidelity maximization: BFGS local searches seeded by a multistart
//! clustering global strategy.
//!
//! Internally the local searches minimize the gate error `1 - F`.

pub mod bfgs;
pub mod objective;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::SpinChainSpec;
use crate::propagation::{propagate, trace_fidelity, ControlSequence};
use crate::targets::TargetGate;

pub use bfgs::{BfgsOutcome, BfgsSettings, Objective, Termination};
pub use objective::{fidelity_gradient, GateObjective, GradientMode};

/// Two converged optima are the same cluster when their fidelities agree to
/// this tolerance...
pub const CLUSTER_FIDELITY_TOL: f64 = 1e-9;
/// ...and their amplitude vectors agree to this in the infinity norm.
pub const CLUSTER_AMPLITUDE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Random sample size.
    pub n_starts: usize,
    /// Best samples handed to local search.
    pub n_select: usize,
    /// Amplitude box half-width A_max (J).
    pub amplitude_box: f64,
    pub gradient_mode: GradientMode,
    /// Stop a local search when an accepted step changes F by less than this.
    pub convergence_tol: f64,
    /// Stop a local search when the infinity norm of dF/dh drops below this.
    pub gradient_tol: f64,
    pub max_iters: usize,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            n_starts: 1000,
            n_select: 20,
            amplitude_box: 20.0,
            gradient_mode: GradientMode::Analytic,
            convergence_tol: 1e-12,
            gradient_tol: 1e-10,
            max_iters: 5000,
            rng_seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::invalid("n_starts", "must be >= 1"));
        }
        if self.n_select == 0 || self.n_select > self.n_starts {
            return Err(Error::invalid(
                "n_select",
                format!("{} must be in 1..=n_starts ({})", self.n_select, self.n_starts),
            ));
        }
        if !(self.amplitude_box > 0.0 && self.amplitude_box.is_finite()) {
            return Err(Error::invalid("amplitude_box", "must be positive and finite"));
        }
        if let GradientMode::FiniteDifference { step } = self.gradient_mode {
            if !(step > 0.0) {
                return Err(Error::invalid("gradient_mode.step", "must be > 0"));
            }
        }
        if !(self.convergence_tol >= 0.0) || !(self.gradient_tol >= 0.0) {
            return Err(Error::invalid("convergence_tol", "tolerances must be >= 0"));
        }
        Ok(())
    }

    fn bfgs_settings(&self) -> BfgsSettings {
        BfgsSettings {
            value_tol: self.convergence_tol,
            grad_tol: self.gradient_tol,
            max_iters: self.max_iters,
            bound: self.amplitude_box,
            ..BfgsSettings::default()
        }
    }
}

/// Outcome of one local search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchRecord {
    /// Index of the random sample the search started from; seeds supplied by
    /// the caller are numbered after the random samples.
    pub start_index: usize,
    pub initial_fidelity: f64,
    pub final_fidelity: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// Flattened amplitudes where the search stopped.
    pub final_amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_sequence: ControlSequence,
    pub best_fidelity: f64,
    pub gate_error: f64,
    /// Whether the local search that produced the best sequence converged.
    pub converged: bool,
    pub best_start_index: usize,
    pub n_starts: usize,
    pub local_searches: Vec<LocalSearchRecord>,
    /// Number of distinct converged optima after clustering.
    pub distinct_optima: usize,
    pub rng_seed: u64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl OptimizationReport {
    pub fn per_start_fidelities(&self) -> Vec<f64> {
        self.local_searches.iter().map(|r| r.final_fidelity).collect()
    }

    pub fn total_iterations(&self) -> usize {
        self.local_searches.iter().map(|r| r.iterations).sum()
    }

    /// Report equality ignoring wall-clock time.
    pub fn same_result(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_seconds = other.wall_seconds;
        a == *other
    }
}

struct GateError<'a> {
    objective: &'a GateObjective,
    mode: GradientMode,
}

impl Objective for GateError<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(1.0 - self.objective.fidelity(x)?)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (f, mut g) = self.objective.fidelity_and_gradient(x, self.mode)?;
        g.iter_mut().for_each(|v| *v = -*v);
        Ok((1.0 - f, g))
    }
}

/// Runs one BFGS search maximizing F from `seed`.
pub fn local_search(objective: &GateObjective, seed: &[f64], config: &OptimizerConfig) -> Result<BfgsOutcome> {
    let err = GateError { objective, mode: config.gradient_mode };
    let mut out = bfgs::minimize(&err, seed, &config.bfgs_settings())?;
    // Report fidelities rather than errors.
    out.value = 1.0 - out.value;
    out.history.iter_mut().for_each(|v| *v = 1.0 - *v);
    out.gradient.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}

/// Local search from a given schedule, packaged as a report.
pub fn local_search_bfgs(
    spec: &SpinChainSpec,
    seed_seq: &ControlSequence,
    gate: &TargetGate,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    config.validate()?;
    seed_seq.validate()?;
    seed_seq.check_box(config.amplitude_box)?;
    let started = Instant::now();
    let objective = GateObjective::new(spec, gate, seed_seq.n_pulses(), seed_seq.slice_duration)?;
    let seed = seed_seq.flattened();
    let initial = objective.fidelity(&seed)?;
    let out = local_search(&objective, &seed, config)?;
    let record = LocalSearchRecord {
        start_index: 0,
        initial_fidelity: initial,
        final_fidelity: out.value,
        iterations: out.iterations,
        evaluations: out.evaluations,
        termination: out.termination,
        final_amplitudes: out.x,
    };
    finish_report(spec, gate, &objective, vec![record], 1, config.rng_seed, started)
}

/// Multistart clustering search over `n_pulses` slices of duration `slice_duration`.
pub fn global_search(
    spec: &SpinChainSpec,
    gate: &TargetGate,
    n_pulses: usize,
    slice_duration: f64,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    global_search_seeded(spec, gate, n_pulses, slice_duration, config, &[])
}

/// [`global_search`] with additional caller-supplied seeds that always
/// receive a local search on top of the `n_select` best random samples.
pub fn global_search_seeded(
    spec: &SpinChainSpec,
    gate: &TargetGate,
    n_pulses: usize,
    slice_duration: f64,
    config: &OptimizerConfig,
    extra_seeds: &[ControlSequence],
) -> Result<OptimizationReport> {
    config.validate()?;
    let started = Instant::now();
    let objective = GateObjective::new(spec, gate, n_pulses, slice_duration)?;
    let a = config.amplitude_box;

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let samples: Vec<Vec<f64>> = (0..config.n_starts)
        .map(|_| (0..n_pulses).map(|_| rng.random_range(-a..=a)).collect())
        .collect();
    let sample_fidelities = samples
        .par_iter()
        .map(|s| objective.fidelity(s))
        .collect::<Result<Vec<f64>>>()?;

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| sample_fidelities[j].total_cmp(&sample_fidelities[i]).then(i.cmp(&j)));
    let mut seeds: Vec<(usize, Vec<f64>, f64)> = order
        .into_iter()
        .take(config.n_select)
        .map(|i| (i, samples[i].clone(), sample_fidelities[i]))
        .collect();
    for (k, seq) in extra_seeds.iter().enumerate() {
        if seq.n_pulses() != n_pulses || seq.slice_duration != slice_duration {
            return Err(Error::invalid("seed", "extra seed does not match the schedule"));
        }
        seq.check_box(a)?;
        let x = seq.flattened();
        let f = objective.fidelity(&x)?;
        seeds.push((config.n_starts + k, x, f));
    }

    let results = seeds
        .par_iter()
        .map(|(index, x0, f0)| {
            let out = local_search(&objective, x0, config)?;
            let record = LocalSearchRecord {
                start_index: *index,
                initial_fidelity: *f0,
                final_fidelity: out.value,
                iterations: out.iterations,
                evaluations: out.evaluations,
                termination: out.termination,
                final_amplitudes: out.x,
            };
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;

    finish_report(spec, gate, &objective, results, config.n_starts, config.rng_seed, started)
}

/// Whether two local searches ended at the same optimum.
pub fn same_optimum(a: &LocalSearchRecord, b: &LocalSearchRecord) -> bool {
    (a.final_fidelity - b.final_fidelity).abs() <= CLUSTER_FIDELITY_TOL
        && a.final_amplitudes.len() == b.final_amplitudes.len()
        && a.final_amplitudes
            .iter()
            .zip(&b.final_amplitudes)
            .all(|(x, y)| (x - y).abs() <= CLUSTER_AMPLITUDE_TOL)
}

/// One representative per cluster of converged searches, in input order.
pub fn distinct_optima(results: &[LocalSearchRecord]) -> Vec<&LocalSearchRecord> {
    let mut reps: Vec<&LocalSearchRecord> = Vec::new();
    for rec in results.iter().filter(|r| r.termination.converged()) {
        if !reps.iter().any(|r| same_optimum(r, rec)) {
            reps.push(rec);
        }
    }
    reps
}

fn finish_report(
    spec: &SpinChainSpec,
    gate: &TargetGate,
    objective: &GateObjective,
    results: Vec<LocalSearchRecord>,
    n_starts: usize,
    rng_seed: u64,
    started: Instant,
) -> Result<OptimizationReport> {
    // Highest fidelity wins; ties go to the lowest start index.
    let best = results
        .iter()
        .max_by(|a, b| {
            a.final_fidelity
                .total_cmp(&b.final_fidelity)
                .then(b.start_index.cmp(&a.start_index))
        })
        .ok_or_else(|| Error::Numerical("no local searches were run".into()))?;
    let best_sequence = objective.sequence(&best.final_amplitudes)?;
    // Independent re-evaluation through the public propagation path.
    let best_fidelity = trace_fidelity(&propagate(spec, &best_sequence)?, gate)?;
    let converged = best.termination.converged();
    let best_start_index = best.start_index;
    let distinct_optima = distinct_optima(&results).len();
    Ok(OptimizationReport {
        best_sequence,
        best_fidelity,
        gate_error: 1.0 - best_fidelity,
        converged,
        best_start_index,
        n_starts,
        local_searches: results,
        distinct_optima,
        rng_seed,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// Run every grid point.
    Full,
    /// Walk the grid in ascending order and stop at the first qualifying point.
    StopAtFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScanRow {
    pub total_time: f64,
    pub best_fidelity: f64,
    pub gate_error: f64,
    pub converged: bool,
    pub best_sequence: ControlSequence,
    #[serde(skip)]
    pub report: Option<OptimizationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScan {
    pub n_pulses: usize,
    pub target_error: f64,
    pub rows: Vec<TimeScanRow>,
    /// Smallest scanned `t_f` with `1 - F <= target_error`.
    pub shortest_time: Option<f64>,
}

impl TimeScan {
    pub fn shortest(&self) -> Result<f64> {
        self.shortest_time.ok_or_else(|| {
            Error::Numerical(format!("threshold not reached for target error {:e}", self.target_error))
        })
    }

    /// Shortest scanned time reaching an arbitrary error level.
    pub fn shortest_for(&self, target_error: f64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.gate_error <= target_error)
            .map(|r| r.total_time)
            .reduce(f64::min)
    }
}

/// Runs [`global_search`] at each total time and reports the shortest one
/// reaching `1 - F <= target_error`.
pub fn gate_time_scan(
    spec: &SpinChainSpec,
    gate: &TargetGate,
    n_pulses: usize,
    total_times: &[f64],
    target_error: f64,
    config: &OptimizerConfig,
    mode: ScanMode,
) -> Result<TimeScan> {
    if total_times.is_empty() {
        return Err(Error::invalid("t_f", "scan grid is empty"));
    }
    if !(target_error > 0.0 && target_error < 1.0) {
        return Err(Error::invalid("target_error", "must lie in (0, 1)"));
    }
    let mut times = total_times.to_vec();
    if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("t_f", "scan times must be positive"));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut rows = Vec::with_capacity(times.len());
    for &t_f in &times {
        let report = global_search(spec, gate, n_pulses, t_f / n_pulses as f64, config)?;
        let hit = report.gate_error <= target_error;
        rows.push(TimeScanRow {
            total_time: t_f,
            best_fidelity: report.best_fidelity,
            gate_error: report.gate_error,
            converged: report.converged,
            best_sequence: report.best_sequence.clone(),
            report: Some(report),
        });
        if hit && mode == ScanMode::StopAtFirst {
            break;
        }
    }
    let mut scan = TimeScan { n_pulses, target_error, rows, shortest_time: None };
    scan.shortest_time = scan.shortest_for(target_error);
    Ok(scan)
}

/// Evenly spaced grid `start, start + step, ..., <= stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && stop >= start) {
        return Err(Error::invalid("grid", format!("need start <= stop and step > 0 (got {start}:{stop}:{step})")));
    }
    let n = ((stop - start) / step + 1e-9).floor();
    if n > 1e6 {
        return Err(Error::invalid("grid", "more than a million points"));
    }
    Ok((0..=n as usize).map(|k| start + k as f64 * step).collect())
}
