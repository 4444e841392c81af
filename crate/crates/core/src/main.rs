use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chaingate::dla::ControlSet;
use chaingate::experiments::{self, ExperimentConfig, Grid, ResultFile, Schedule};
use chaingate::optimize::ScanMode;
use chaingate::{Error, Result, SpinChainSpec};

#[derive(Parser)]
#[command(name = "chaingate", version, about = "Single-shot gate synthesis for Heisenberg qubit chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Problem definition; flags override values read from `--config`.
#[derive(Args, Debug, Default)]
struct Problem {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// toffoli, fredkin, cnot, cnot:C,T, eswap:THETA or eswap:THETA@A,B.
    #[arg(long)]
    gate: Option<String>,
    /// Number of pulses N_f (even).
    #[arg(long)]
    nf: Option<usize>,
    /// Total time t_f in 1/J; a grid (start:stop:step or a,b,c) for scans.
    #[arg(long)]
    tf: Option<Grid>,
    /// Global field Omega in J; a grid for scan-field.
    #[arg(long)]
    omega: Option<Grid>,
    /// Leakage rate mu_L.
    #[arg(long)]
    mu: Option<f64>,
    /// xxx, xxz:DELTA or xyz:JX,JY,JZ.
    #[arg(long)]
    coupling: Option<String>,
    /// Random start points (n_starts).
    #[arg(long)]
    restarts: Option<usize>,
    /// Start points refined by local search (n_select).
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Amplitude box half-width A_max in J.
    #[arg(long = "box")]
    amplitude_box: Option<f64>,
    /// Target gate error(s) for scans, comma separated.
    #[arg(long, value_delimiter = ',')]
    target_error: Vec<f64>,
    /// Evaluate every grid point instead of stopping at the first hit.
    #[arg(long)]
    full: bool,
    /// Result file (JSON); CSV tables are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Stored {
    /// Result file holding an optimized sequence.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Multistart optimization at one schedule.
    Optimize(Problem),
    /// Replay the stored sequence and check its fidelity.
    Evaluate(Stored),
    /// Shortest gate time over a t_f grid.
    ScanTime(Problem),
    /// Filtered-field fidelity of a stored optimum at one cutoff.
    Filter {
        #[command(flatten)]
        stored: Stored,
        /// Cutoff omega0 in J.
        #[arg(long)]
        cutoff: f64,
        /// Pick the most filter-robust distinct optimum with at most this
        /// unfiltered gate error instead of the best one.
        #[arg(long)]
        select_below: Option<f64>,
        /// Write filtered field samples (t, h_x, h_y) to this CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 2001)]
        trace_points: usize,
    },
    /// Filtered gate error over a cutoff grid.
    ScanCutoff {
        #[command(flatten)]
        stored: Stored,
        /// Cutoff grid in J.
        #[arg(long, default_value = "2:40:1")]
        cutoff: Grid,
    },
    /// Benchmark curve of a leakage-free optimum under leakage.
    ScanLeakage {
        #[command(flatten)]
        stored: Stored,
        /// Leakage-rate grid.
        #[arg(long, default_value = "2:8:0.1")]
        mu: Grid,
    },
    /// Re-optimize the stored problem in the presence of leakage.
    ReoptLeakage {
        #[command(flatten)]
        stored: Stored,
        #[arg(long)]
        mu: f64,
        /// Scan these total times instead of reusing the stored schedule.
        #[arg(long)]
        tf: Option<Grid>,
        #[arg(long, value_delimiter = ',')]
        target_error: Vec<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Shortest gate times versus global field.
    ScanField(Problem),
    /// Dimension of the dynamical Lie algebra.
    Dla {
        #[arg(long, default_value_t = 3)]
        qubits: usize,
        /// xy, x or y.
        #[arg(long, default_value = "xy")]
        controls: ControlSet,
        #[arg(long, default_value = "xxx")]
        coupling: String,
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        #[arg(long)]
        mu: Option<f64>,
    },
}

fn single(grid: &Grid, name: &str) -> Result<f64> {
    match grid.points()?.as_slice() {
        [v] => Ok(*v),
        _ => Err(Error::Invalid { field: name.into(), reason: "expected a single value".into() }),
    }
}

impl Problem {
    /// Config file (or defaults) with flag overrides applied. `scan_axis`
    /// names the flag read as a grid.
    fn config(&self, scan_axis: Option<&str>) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::for_gate(experiments::parse_gate(self.gate.as_deref().unwrap_or("toffoli"))?),
        };
        if let Some(g) = &self.gate {
            c.gate = experiments::parse_gate(g)?;
            c.spec.n_qubits = c.gate.n_qubits;
        }
        if let Some(nf) = self.nf {
            let tf = c.schedule.total_time().ok();
            c.schedule = Schedule { n_pulses: nf, slice_duration: None, total_time: tf };
        }
        if let Some(tf) = &self.tf {
            if scan_axis == Some("tf") {
                c.scan.total_time = tf.clone();
            } else {
                c.schedule = Schedule::with_total_time(c.schedule.n_pulses, single(tf, "tf")?);
            }
        }
        if let Some(omega) = &self.omega {
            if scan_axis == Some("omega") {
                c.scan.global_field = omega.clone();
            } else {
                c.spec.global_field = single(omega, "omega")?;
            }
        }
        if let Some(mu) = self.mu {
            c.spec.leakage = Some(mu);
        }
        if let Some(k) = &self.coupling {
            c.spec.coupling = experiments::parse_coupling(k)?;
        }
        if let Some(n) = self.restarts {
            c.optimizer.n_starts = n;
        }
        if let Some(n) = self.top {
            c.optimizer.n_select = n;
        }
        if let Some(s) = self.seed {
            c.optimizer.rng_seed = s;
        }
        if let Some(a) = self.amplitude_box {
            c.optimizer.amplitude_box = a;
        }
        if !self.target_error.is_empty() {
            c.scan.target_errors = self.target_error.clone();
        }
        if self.full {
            c.scan.mode = ScanMode::Full;
        }
        if self.out.is_some() {
            c.output = self.out.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn default_out(config: &ExperimentConfig, command: &str) -> PathBuf {
    config.output.clone().unwrap_or_else(|| PathBuf::from(format!("{command}.json")))
}

/// Writes the result file and its CSV tables (`<stem>.<table>.csv`).
fn write_outputs(file: &ResultFile, path: &Path) -> Result<()> {
    file.save(path)?;
    println!("wrote {}", path.display());
    for (suffix, header, rows) in experiments::csv_tables(file) {
        let csv = path.with_extension(format!("{suffix}.csv"));
        experiments::write_csv(&csv, &header, &rows)?;
        println!("wrote {}", csv.display());
    }
    Ok(())
}

fn summarize(file: &ResultFile) {
    if let Some(r) = &file.report {
        let status = if r.converged { "converged" } else { "NOT converged" };
        println!(
            "{}: best F = {:.12}, gate error = {:.3e} ({status}), {} distinct optima, {:.1} s",
            file.config.gate, r.best_fidelity, r.gate_error, r.distinct_optima, file.provenance.wall_seconds
        );
    }
    if let Some(e) = &file.evaluation {
        println!("replayed F = {:.15}", e.fidelity);
        if let Some(f) = &e.filtered {
            println!(
                "filtered (omega0 = {} J): F = {:.12}, gate error = {:.3e}, K = {}",
                f.cutoff, f.fidelity, f.gate_error, f.substeps
            );
        }
    }
    if let Some(s) = &file.time_scan {
        match s.shortest_time {
            Some(t) => println!("shortest t_f for gate error <= {:e}: {t} /J", s.target_error),
            None => println!("threshold not reached for gate error <= {:e}", s.target_error),
        }
    }
    if let Some(s) = &file.cutoff_scan {
        println!("unfiltered F = {:.12}", s.pwc_fidelity);
        for r in &s.rows {
            println!("omega0 = {:>8} J  gate error = {:.3e}", r.cutoff, r.gate_error);
        }
    }
    if let Some(s) = &file.leakage_scan {
        println!("{}", s.label(&file.config.gate));
        for r in &s.rows {
            println!("mu_L = {:>6}  F = {:.9}", r.leakage, r.fidelity);
        }
    }
    if let Some(s) = &file.field_scan {
        for r in &s.rows {
            let t = r.shortest_time.map(|t| format!("{t} /J")).unwrap_or_else(|| "not reached".into());
            println!("Omega = {:>5} J  error {:e}: {t}", r.global_field, r.target_error);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Optimize(p) => {
            let config = p.config(None)?;
            let file = experiments::cmd_optimize(&config)?;
            summarize(&file);
            write_outputs(&file, &default_out(&config, "optimize"))
        }
        Command::Evaluate(s) => {
            let file = experiments::cmd_evaluate(&ResultFile::load(&s.input)?)?;
            summarize(&file);
            match s.out {
                Some(path) => write_outputs(&file, &path),
                None => Ok(()),
            }
        }
        Command::ScanTime(p) => {
            let config = p.config(Some("tf"))?;
            let file = experiments::cmd_scan_time(&config)?;
            summarize(&file);
            write_outputs(&file, &default_out(&config, "scan-time"))
        }
        Command::Filter { stored, cutoff, select_below, trace, trace_points } => {
            let input = ResultFile::load(&stored.input)?;
            let file = experiments::cmd_filter(&input, cutoff, select_below)?;
            summarize(&file);
            if let Some(path) = trace {
                let seq = match file.evaluation.as_ref().and_then(|e| e.candidates.first()) {
                    Some(c) => c.sequence.clone(),
                    None => input.best_sequence()?.clone(),
                };
                experiments::write_field_trace(&path, &seq, cutoff, trace_points)?;
                println!("wrote {}", path.display());
            }
            match stored.out {
                Some(path) => write_outputs(&file, &path),
                None => Ok(()),
            }
        }
        Command::ScanCutoff { stored, cutoff } => {
            let file = experiments::cmd_scan_cutoff(&ResultFile::load(&stored.input)?, &cutoff)?;
            summarize(&file);
            write_outputs(&file, &stored.out.unwrap_or_else(|| "scan-cutoff.json".into()))
        }
        Command::ScanLeakage { stored, mu } => {
            let file = experiments::cmd_leakage_scan(&ResultFile::load(&stored.input)?, &mu)?;
            summarize(&file);
            write_outputs(&file, &stored.out.unwrap_or_else(|| "scan-leakage.json".into()))
        }
        Command::ReoptLeakage { stored, mu, tf, target_error, restarts, top, seed } => {
            let mut input = ResultFile::load(&stored.input)?;
            let opt = &mut input.config.optimizer;
            opt.n_starts = restarts.unwrap_or(opt.n_starts);
            opt.n_select = top.unwrap_or(opt.n_select);
            opt.rng_seed = seed.unwrap_or(opt.rng_seed);
            if !target_error.is_empty() {
                input.config.scan.target_errors = target_error;
            }
            input.config.validate()?;
            let file = experiments::cmd_reoptimize_with_leakage(&input, mu, tf.as_ref())?;
            summarize(&file);
            write_outputs(&file, &stored.out.unwrap_or_else(|| "reopt-leakage.json".into()))
        }
        Command::ScanField(p) => {
            let config = p.config(Some("omega"))?;
            let file = experiments::cmd_field_scan(&config)?;
            summarize(&file);
            write_outputs(&file, &default_out(&config, "scan-field"))
        }
        Command::Dla { qubits, controls, coupling, omega, mu } => {
            let spec = SpinChainSpec::xxx(qubits)
                .with_coupling(experiments::parse_coupling(&coupling)?)
                .with_global_field(omega)
                .with_leakage(mu);
            let report = experiments::cmd_dla(&spec, controls)?;
            println!("{}", experiments::format_dla(&report));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
