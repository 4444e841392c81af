use std::path::Path;
use std::process::{Command, Output};

use chaingate::experiments::{cmd_evaluate, cmd_optimize, ExperimentConfig, ResultFile, Schedule};
use chaingate::{propagate, trace_fidelity, TargetGate};
use tempfile::tempdir;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaingate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &[&str] = &["--gate", "cnot", "--nf", "20", "--tf", "8", "--restarts", "12", "--top", "2", "--box", "6", "--seed", "3"];

fn optimize(dir: &Path, out: &str) -> Output {
    let mut args = vec!["optimize"];
    args.extend_from_slice(SMALL);
    args.extend(["--out", out]);
    run(&args, dir)
}

#[test]
fn optimize_then_evaluate_replays() {
    let dir = tempdir().unwrap();
    let o = optimize(dir.path(), "run.json");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let file = ResultFile::load(&dir.path().join("run.json")).unwrap();
    let report = file.report.as_ref().unwrap();
    let replayed = trace_fidelity(&propagate(&file.config.spec, &report.best_sequence).unwrap(), &file.config.gate).unwrap();
    assert!((replayed - report.best_fidelity).abs() <= 1e-12);
    assert_eq!(file.config.gate, TargetGate::cnot_23());
    assert_eq!(report.best_sequence.n_pulses(), 20);
    assert!((report.best_sequence.total_time() - 8.0).abs() < 1e-12);

    let e = run(&["evaluate", "--input", "run.json", "--out", "eval.json"], dir.path());
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    assert!(stdout(&e).contains("replayed F"));
    let eval = ResultFile::load(&dir.path().join("eval.json")).unwrap();
    assert!((eval.evaluation.unwrap().fidelity - report.best_fidelity).abs() <= 1e-12);
}

#[test]
fn results_are_byte_stable() {
    let (da, db) = (tempdir().unwrap(), tempdir().unwrap());
    assert!(optimize(da.path(), "run.json").status.success());
    assert!(optimize(db.path(), "run.json").status.success());
    let a = ResultFile::load(&da.path().join("run.json")).unwrap();
    let b = ResultFile::load(&db.path().join("run.json")).unwrap();
    assert_eq!(a.numeric_content().unwrap(), b.numeric_content().unwrap());

    // A save/load round trip reproduces every amplitude bit for bit.
    let text = a.to_json().unwrap();
    let back = ResultFile::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    assert_eq!(back.report.unwrap().best_sequence, a.report.unwrap().best_sequence);
}

#[test]
fn library_and_binary_agree() {
    let dir = tempdir().unwrap();
    assert!(optimize(dir.path(), "run.json").status.success());
    let file = ResultFile::load(&dir.path().join("run.json")).unwrap();
    let mut config = ExperimentConfig::for_gate(TargetGate::cnot_23());
    config.schedule = Schedule::with_total_time(20, 8.0);
    config.optimizer.n_starts = 12;
    config.optimizer.n_select = 2;
    config.optimizer.amplitude_box = 6.0;
    config.optimizer.rng_seed = 3;
    config.output = Some("run.json".into());
    let lib = cmd_optimize(&config).unwrap();
    // The library and the binary are separate codegen units, so rounding may
    // differ in the last bit; the optimum itself must agree.
    assert_eq!(lib.config, file.config);
    let (l, b) = (lib.report.as_ref().unwrap(), file.report.as_ref().unwrap());
    assert_eq!(l.best_start_index, b.best_start_index);
    assert!((l.best_fidelity - b.best_fidelity).abs() <= 1e-10);
    let (la, ba) = (l.best_sequence.flattened(), b.best_sequence.flattened());
    assert!(la.iter().zip(&ba).all(|(x, y)| (x - y).abs() <= 1e-8));
    assert!(cmd_evaluate(&lib).is_ok());
}

#[test]
fn csv_tables_carry_units() {
    let dir = tempdir().unwrap();
    let mut args = vec!["scan-time"];
    args.extend_from_slice(SMALL);
    args.retain(|a| *a != "8");
    let args: Vec<&str> = args
        .iter()
        .flat_map(|a| if *a == "--tf" { vec!["--tf", "2:4:1"] } else { vec![*a] })
        .chain(["--target-error", "1e-1", "--full", "--out", "scan.json"])
        .collect();
    let o = run(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tables: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert!(!tables.is_empty());
    for t in tables {
        let text = std::fs::read_to_string(&t).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.contains("t_f [1/J]"), "{header}");
        assert!(header.contains("[dimensionless]"), "{header}");
        assert_eq!(text.lines().count(), 4, "{}", t.display());
    }
}

#[test]
fn dla_reports_full_algebra() {
    let dir = tempdir().unwrap();
    let o = run(&["dla", "--qubits", "3"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("63") && text.contains("PASS"), "{text}");
    let o = run(&["dla", "--qubits", "3", "--controls", "x"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("18") && stdout(&o).contains("SUBSPACE"));
    let o = run(&["dla", "--qubits", "2", "--coupling", "xxz:0.5"], dir.path());
    assert!(stdout(&o).contains("15"));
}

#[test]
fn exit_codes() {
    let dir = tempdir().unwrap();
    let bad_nf = run(&["optimize", "--gate", "toffoli", "--nf", "7", "--tf", "5", "--restarts", "2", "--top", "1"], dir.path());
    assert_eq!(bad_nf.status.code(), Some(1));
    let bad_gate = run(&["optimize", "--gate", "toffolli"], dir.path());
    assert_eq!(bad_gate.status.code(), Some(1));
    let missing = run(&["evaluate", "--input", "nope.json"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let unknown = run(&["optimize", "--frobnicate"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
    let bad_cutoff = run(&["dla", "--qubits", "1"], dir.path());
    assert_eq!(bad_cutoff.status.code(), Some(1));

    // A tampered fidelity no longer replays: a numerical failure.
    assert!(optimize(dir.path(), "run.json").status.success());
    let path = dir.path().join("run.json");
    let mut file = ResultFile::load(&path).unwrap();
    file.report.as_mut().unwrap().best_fidelity -= 1e-6;
    file.save(&path).unwrap();
    let tampered = run(&["evaluate", "--input", "run.json"], dir.path());
    assert_eq!(tampered.status.code(), Some(2), "{}", String::from_utf8_lossy(&tampered.stderr));
}
