//! Acceptance suite: one test per criterion, each printing a single
//! `[criterion N] PASS|FAIL ...` line before asserting.
//!
//! Run with `cargo test -p varosc --test acceptance -- --nocapture --test-threads=1`
//! to see the lines in order.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use varosc::averages::{
    oscillation_sum, oscillation_sum_with, variation_sum, variation_sum_with, Engine, StreamOptions,
};
use varosc::dilation::{build_dilation, verify_dilation};
use varosc::harness::{
    divergence_closed_form, divergence_demo, roj_check, run_variation_ensemble, spectral_envelope,
    ExperimentConfig, ExperimentKind, ExperimentReport, OperatorSpec, SQUARE_VARIATION_BOUND,
};
use varosc::linalg::{derive_seed, random_contraction, HVector, Operator, C64};
use varosc::sequences::{geometric_lacunary, IndexSeq, LacunarySeq};
use varosc::symbol::{
    chord_lower_bound_audit, kernel_audit, sweep_sup, symbol, symbol_variation, SweepResult,
    SymbolFunctional,
};

const GRID: usize = 100_000;
const REFINE: usize = 40;
const STABILITY: f64 = 0.01;

fn report(n: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[criterion {n}] {tag}: {detail}");
}

fn baseline(key: &str) -> f64 {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/baselines.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v[key]["summary"]["sup_estimate"].as_f64().unwrap()
}

fn powers_of_two() -> LacunarySeq {
    geometric_lacunary(2.0, 30, 1).unwrap()
}

fn powers_of_three_m() -> IndexSeq {
    geometric_lacunary(3.0, 19, 1).unwrap().into_index_seq()
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs()
}

fn auto() -> StreamOptions {
    StreamOptions::with_engine(Engine::Auto)
}

/// Trials whose ratio exceeds `bound`, and the largest ratio seen.
fn excess(report: &ExperimentReport, bound: f64) -> (usize, f64) {
    let over = report.rows.iter().filter(|r| r.ratio > bound).count();
    (over, report.summary.max_ratio)
}

#[test]
fn criterion_01_symbol_closed_form() {
    let start = Instant::now();
    let mut max_err = 0.0f64;
    for i in 1..=1000 {
        let theta = PI * i as f64 / 1000.0;
        let mut sum = C64::new(0.0, 0.0);
        for n in 1..=10_000u64 {
            sum += C64::cis(n as f64 * theta);
            let direct = sum / n as f64;
            max_err = max_err.max((symbol(n, theta).unwrap() - direct).norm());
        }
    }
    let elapsed = start.elapsed();
    let pass = max_err < 1e-12 && elapsed < Duration::from_secs(30);
    report(
        1,
        pass,
        &format!("max |closed − direct| = {max_err:.3e} over 10^4 × 10^3 points, {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_bound_audits() {
    let start = Instant::now();
    let chord_grid: Vec<f64> = (1..=1_000_000).map(|i| PI * i as f64 / 1e6).collect();
    let chord = chord_lower_bound_audit(&chord_grid).unwrap();
    let (lo, hi) = (1e-3f64.ln(), 1e3f64.ln());
    let x_grid: Vec<f64> = (0..100_000)
        .map(|i| (lo + (hi - lo) * i as f64 / 99_999.0).exp())
        .collect();
    let kernel = kernel_audit(&x_grid).unwrap();
    let elapsed = start.elapsed();
    let pass = chord.all_pass()
        && kernel.bound_holds()
        && kernel.derivative_matches()
        && elapsed < Duration::from_secs(10);
    report(
        2,
        pass,
        &format!(
            "chord: {} violations, min slack {:.3e}; kernel (x+1)/x²: {} of {} points violate \
             (max ratio {:.4} at x = {:.4}, first at {:?}); (x+2)/x²: {} violations; \
             finite differences: {} failures (max rel err {:.2e}); {elapsed:.2?}",
            chord.violations,
            chord.min_slack,
            kernel.bound_violations,
            kernel.points,
            kernel.max_bound_ratio,
            kernel.worst_x,
            kernel.first_violation,
            kernel.relaxed_violations,
            kernel.fd_failures,
            kernel.max_fd_rel_error,
        ),
    );
    assert!(chord.all_pass());
    assert!(kernel.derivative_matches());
    assert_eq!(kernel.relaxed_violations, 0);
    assert!(pass);
}

struct UnitaryRun {
    sweep: SweepResult,
    doubled: SweepResult,
    report: ExperimentReport,
    envelope_violations: usize,
}

fn unitary_protocol(kind: ExperimentKind) -> UnitaryRun {
    let nk = powers_of_two();
    let m = match kind {
        ExperimentKind::Oscillation => Some(powers_of_three_m()),
        _ => None,
    };
    let sweep = sweep_sup(&nk, m.as_ref(), GRID, REFINE).unwrap();
    let doubled = sweep_sup(&nk, m.as_ref(), 2 * GRID, REFINE).unwrap();

    let mut cfg = ExperimentConfig::new(kind, nk.terms().to_vec());
    cfg.m = m.as_ref().map(|m| m.terms().to_vec());
    cfg.dims = vec![1, 2, 4, 8, 16];
    cfg.trials = 100;
    cfg.seed = 5;
    cfg.engine = Engine::Auto;
    let report = run_variation_ensemble(&cfg).unwrap();

    let functional = match &m {
        Some(m) => SymbolFunctional::oscillation(&nk, m).unwrap(),
        None => SymbolFunctional::variation(&nk).unwrap(),
    };
    let envelope_violations = (0..cfg.trials)
        .filter(|&t| {
            let inputs = cfg.trial_inputs(t).unwrap();
            let env = spectral_envelope(&inputs.op, &inputs.f, &functional).unwrap();
            report.rows[t].value > env * (1.0 + 1e-9) + 1e-12
        })
        .count();
    UnitaryRun {
        sweep,
        doubled,
        report,
        envelope_violations,
    }
}

#[test]
fn criterion_03_unitary_variation() {
    let start = Instant::now();
    let run = unitary_protocol(ExperimentKind::Variation);
    let s = run.sweep.sup_estimate;
    let drift = rel_change(s, run.doubled.sup_estimate);
    let pinned = rel_change(baseline("variation_beta2"), s);
    let bound = s + run.sweep.tail_at_star();
    let (over, max_ratio) = excess(&run.report, bound);
    let elapsed = start.elapsed();
    let pass = s.is_finite()
        && drift < STABILITY
        && pinned < STABILITY
        && over == 0
        && elapsed < Duration::from_secs(300);
    report(
        3,
        pass,
        &format!(
            "S*(2) = {s:.6} (grid-doubling drift {drift:.2e}, vs pinned {pinned:.2e}); \
             bound S* + tail = {bound:.6}; {over}/100 unitary trials exceed it, max ratio \
             {max_ratio:.4}; spectral envelope Σ|c_j|V(θ_j) violated by {} trials; {elapsed:.2?}",
            run.envelope_violations
        ),
    );
    assert!(drift < STABILITY && pinned < STABILITY);
    assert_eq!(run.envelope_violations, 0);
    assert!(pass);
}

#[test]
fn criterion_04_unitary_oscillation() {
    let start = Instant::now();
    let run = unitary_protocol(ExperimentKind::Oscillation);
    let s = run.sweep.sup_estimate;
    let drift = rel_change(s, run.doubled.sup_estimate);
    let pinned = rel_change(baseline("oscillation_beta2_m3"), s);
    let bound = s + run.sweep.tail_at_star();
    let (over, max_ratio) = excess(&run.report, bound);

    let nk = powers_of_two();
    let mut nonzero = 0;
    let mut cfg = ExperimentConfig::new(ExperimentKind::Oscillation, nk.terms().to_vec());
    cfg.m = Some(nk.terms().to_vec());
    cfg.dims = vec![1, 2, 4, 8, 16];
    cfg.trials = 100;
    cfg.seed = 5;
    cfg.engine = Engine::Auto;
    for r in &run_variation_ensemble(&cfg).unwrap().rows {
        if r.value != 0.0 {
            nonzero += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = s.is_finite()
        && drift < STABILITY
        && pinned < STABILITY
        && over == 0
        && nonzero == 0
        && elapsed < Duration::from_secs(300);
    report(
        4,
        pass,
        &format!(
            "oscillation sup (M = 3^k) = {s:.6} (drift {drift:.2e}, vs pinned {pinned:.2e}); \
             {over}/100 unitary trials exceed sup + tail = {bound:.6}, max ratio {max_ratio:.4}; \
             envelope violated by {}; M = nk gives {nonzero} nonzero trials; {elapsed:.2?}",
            run.envelope_violations
        ),
    );
    assert_eq!(nonzero, 0);
    assert_eq!(run.envelope_violations, 0);
    assert!(pass);
}

#[test]
fn criterion_05_contraction_reduction() {
    let start = Instant::now();
    let nk = powers_of_two();
    let m = powers_of_three_m();
    let var_sweep = sweep_sup(&nk, None, GRID, REFINE).unwrap();
    let osc_sweep = sweep_sup(&nk, Some(&m), GRID, REFINE).unwrap();
    let var_bound = var_sweep.sup_estimate + var_sweep.tail_at_star();
    let osc_bound = osc_sweep.sup_estimate + osc_sweep.tail_at_star();

    let mut cfg = ExperimentConfig::new(ExperimentKind::Variation, nk.terms().to_vec());
    cfg.op = OperatorSpec::RandomContraction(vec![0.5, 0.9, 1.0]);
    cfg.dims = vec![1, 2, 4, 8];
    cfg.trials = 100;
    cfg.seed = 7;
    cfg.engine = Engine::Auto;
    let var = run_variation_ensemble(&cfg).unwrap();
    cfg.kind = ExperimentKind::Oscillation;
    cfg.m = Some(m.terms().to_vec());
    let osc = run_variation_ensemble(&cfg).unwrap();

    let (var_over, var_max) = excess(&var, var_bound);
    let (osc_over, osc_max) = excess(&osc, osc_bound);
    let elapsed = start.elapsed();
    let pass = var_over == 0 && osc_over == 0 && elapsed < Duration::from_secs(180);
    report(
        5,
        pass,
        &format!(
            "variation: {var_over}/100 contractions exceed {var_bound:.6} (max {var_max:.4}); \
             oscillation: {osc_over}/100 exceed {osc_bound:.6} (max {osc_max:.4}); {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_dilation_certification() {
    let start = Instant::now();
    let steps = 32;
    let caps = [0.5, 0.9, 1.0];
    let mut worst_unitarity = 0.0f64;
    let mut worst_power = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut failures = 0;
    for i in 0..20u64 {
        let t = random_contraction(4, derive_seed(6, i), caps[i as usize % 3]).unwrap();
        let pack = build_dilation(&t, steps).unwrap();
        let r = verify_dilation(&pack, &t, 20, derive_seed(66, i)).unwrap();
        worst_unitarity = worst_unitarity.max(r.unitarity_residual);
        worst_power = worst_power.max(r.max_power_error);
        worst_gap = worst_gap.max(r.functional_gap.unwrap());
        if !r.passed {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    let unitarity_tol = 1e-10 * (steps as f64 + 1.0) * 4.0;
    let pass = worst_unitarity < unitarity_tol
        && worst_power < 1e-8
        && worst_gap < 1e-8
        && failures == 0
        && elapsed < Duration::from_secs(60);
    report(
        6,
        pass,
        &format!(
            "20 contractions (dim 4, N = 32, caps 0.5/0.9/1.0): unitarity ≤ {worst_unitarity:.2e} \
             (tol {unitarity_tol:.2e}), power error ≤ {worst_power:.2e}, functional gap ≤ \
             {worst_gap:.2e}; {failures} failed reports; {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_square_variation_oracle() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(ExperimentKind::RojCheck, vec![]);
    cfg.op = OperatorSpec::Mixed(vec![0.5, 0.9, 1.0]);
    cfg.dims = vec![1, 2, 4, 8, 16];
    cfg.trials = 500;
    cfg.seed = 25;
    let r = roj_check(&cfg).unwrap();
    r.check_integrity().unwrap();
    let elapsed = start.elapsed();
    let pass = r.summary.bound_holds == Some(true)
        && r.summary.max_ratio <= SQUARE_VARIATION_BOUND
        && elapsed < Duration::from_secs(300);
    report(
        7,
        pass,
        &format!(
            "500 trials (unitaries and contractions, random increasing sequences): max p=2 \
             ratio {:.6} at trial {} (bound 25); {elapsed:.2?}",
            r.summary.max_ratio, r.summary.argmax_trial
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_lacunarity_necessity() {
    let start = Instant::now();
    let rows = divergence_demo(10_000).unwrap();
    let last = rows.last().unwrap();
    let exact = divergence_closed_form(10_000);
    let floor = 0.4 * (10_000f64).ln();
    let s_star = baseline("variation_beta2");
    let nk = powers_of_two();
    let scalar = symbol_variation(&nk, PI).unwrap();
    let minus_one = Operator::scalar(C64::new(-1.0, 0.0)).unwrap();
    let one = HVector::from_real(&[1.0]).unwrap();
    let operator = variation_sum_with(&minus_one, &one, &nk, 1.0, &auto()).unwrap();
    let elapsed = start.elapsed();
    let pass = last.n == 10_000
        && last.v >= floor
        && (last.v - exact).abs() < 1e-12
        && scalar < s_star
        && (operator - scalar).abs() < 1e-12
        && elapsed < Duration::from_secs(5);
    report(
        8,
        pass,
        &format!(
            "V(10^4) = {:.12} (closed form {exact:.12}, 0.4 ln N = {floor:.4}); lacunary 2^k at \
             θ = π: {scalar:.6} (operator route {operator:.6}) < S*(2) = {s_star:.6}; {elapsed:.2?}",
            last.v
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_closed_form_regression() {
    let fs = [C64::new(1.0, 0.0), C64::new(2.5, 0.0), C64::cis(1.0) * 1e-3];
    let minus_one = Operator::scalar(C64::new(-1.0, 0.0)).unwrap();
    let mut worst = 0.0f64;
    for k in 2..=25usize {
        let nk = geometric_lacunary(3.0, k, 3).unwrap();
        let expect = (1.0 - 3f64.powi(-(k as i32 - 1))) / 3.0;
        for &c in &fs {
            let f = HVector::new(vec![c]).unwrap();
            let v = if k <= 10 {
                variation_sum(&minus_one, &f, &nk, 1.0).unwrap()
            } else {
                variation_sum_with(&minus_one, &f, &nk, 1.0, &auto()).unwrap()
            };
            worst = worst.max((v - expect * c.norm()).abs());
        }
    }
    let one = HVector::from_real(&[1.0]).unwrap();
    let toy = oscillation_sum(
        &minus_one,
        &one,
        &IndexSeq::new(vec![2, 8, 32]).unwrap(),
        &IndexSeq::new(vec![3, 4, 16]).unwrap(),
    )
    .unwrap();
    let toy_doubling = oscillation_sum_with(
        &minus_one,
        &one,
        &IndexSeq::new(vec![2, 8, 32]).unwrap(),
        &IndexSeq::new(vec![3, 4, 16]).unwrap(),
        &StreamOptions::with_engine(Engine::Doubling),
    )
    .unwrap();
    let pass = worst < 1e-12 && toy == 1.0 / 3.0 && toy_doubling == 1.0 / 3.0;
    report(
        9,
        pass,
        &format!(
            "nk = 3^k, K = 2..25, three f: max |V − (1/3)(1 − 3^{{−(K−1)}})‖f‖| = {worst:.2e}; \
             oscillation toy = {toy:?} (doubling engine {toy_doubling:?})"
        ),
    );
    assert!(pass);
}

fn run_cli<S: AsRef<std::ffi::OsStr>>(workers: usize, args: &[S]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_varosc"))
        .args(args)
        .env("VAROSC_WORKERS", workers.to_string())
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
    )
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let experiments: Vec<(&str, Vec<&str>)> = vec![
        (
            "sweep",
            vec![
                "sweep", "--beta", "2", "--count", "20", "--grid", "20000", "--refine", "20",
            ],
        ),
        (
            "variation",
            vec![
                "variation",
                "--seq",
                "geometric:2:16",
                "--dim",
                "1,3,8",
                "--trials",
                "40",
                "--seed",
                "3",
            ],
        ),
        (
            "oscillation",
            vec![
                "oscillation",
                "--seq",
                "geometric:2:14",
                "--m-seq",
                "geometric:3:9",
                "--op",
                "random-contraction:0.5,0.9,1",
                "--dim",
                "2,5",
                "--trials",
                "30",
                "--seed",
                "4",
            ],
        ),
        ("roj", vec!["roj-check", "--trials", "60", "--seed", "9"]),
        (
            "curve",
            vec![
                "constant-curve",
                "--beta",
                "1.5,2,4",
                "--count",
                "15",
                "--grid",
                "5000",
                "--refine",
                "10",
            ],
        ),
        ("diverge", vec!["diverge", "--n-max", "5000"]),
    ];
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (name, args) in &experiments {
        let mut reference: Option<(Vec<u8>, String)> = None;
        for workers in [1usize, 4, 16] {
            for rep in 0..2 {
                let path = dir.path().join(format!("{name}-{workers}-{rep}.csv"));
                let mut full: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                full.push("--out".into());
                full.push(path.to_str().unwrap().into());
                let (code, stdout) = run_cli(workers, &full);
                assert_eq!(code, 0, "{name} exited with {code}");
                let bytes = std::fs::read(&path).unwrap();
                compared += 1;
                match &reference {
                    None => reference = Some((bytes, stdout)),
                    Some((b, s)) => {
                        if *b != bytes || *s != stdout {
                            mismatches.push(format!("{name} workers={workers} rep={rep}"));
                        }
                    }
                }
            }
        }
    }
    let dilate: Vec<String> = [1usize, 4, 16]
        .iter()
        .map(|&w| {
            run_cli(
                w,
                &["dilate", "--trials", "6", "--steps", "16", "--samples", "5"],
            )
            .1
        })
        .collect();
    if dilate.iter().any(|s| s != &dilate[0]) {
        mismatches.push("dilate".into());
    }
    let pass = mismatches.is_empty();
    report(
        10,
        pass,
        &format!(
            "{compared} CSV outputs across 6 experiments × workers {{1, 4, 16}} × 2 runs, plus \
             dilate JSON; mismatches: {mismatches:?}"
        ),
    );
    assert!(pass);
}
