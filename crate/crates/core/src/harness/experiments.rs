//! Constant curves, the non-lacunary divergence demo, the square-variation
//! check against the absolute constant 25, and batch dilation certification.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, ExperimentReport, TrialRow};
use super::ensemble::trial_value;
use crate::averages::{average_stream, CheckpointPlan};
use crate::dilation::{build_dilation_with, verify_dilation, DilationReport};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::{derive_seed, HVector, Operator, Prng, C64};
use crate::sequences::{geometric_lacunary, IndexSeq, LacunarySeq};
use crate::symbol::{sweep_sup, SweepResult};

/// Absolute constant of the square-variation bound for arbitrary increasing times.
pub const SQUARE_VARIATION_BOUND: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub beta: f64,
    /// Lacunarity of `M` when the row comes from an oscillation sweep.
    pub alpha: Option<f64>,
    pub beta_certified: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub sup_estimate: f64,
    pub theta_star: f64,
    pub tail_at_star: f64,
}

impl CurveRow {
    fn from_sweep(beta: f64, alpha: Option<f64>, nk: &LacunarySeq, r: &SweepResult) -> Self {
        CurveRow {
            beta,
            alpha,
            beta_certified: nk.beta_certified(),
            k: nk.len(),
            sup_estimate: r.sup_estimate,
            theta_star: r.theta_star,
            tail_at_star: r.tail_at_star(),
        }
    }
}

/// Variation sweep over `geometric_lacunary(β, K, 1)` for each `β`.
pub fn constant_curve(
    betas: &[f64],
    k: usize,
    grid: usize,
    refine: usize,
) -> Result<Vec<CurveRow>> {
    betas
        .iter()
        .map(|&beta| {
            let nk = geometric_lacunary(beta, k, 1)?;
            let r = sweep_sup(&nk, None, grid, refine)?;
            Ok(CurveRow::from_sweep(beta, None, &nk, &r))
        })
        .collect()
}

/// Oscillation sweeps over every `(β, α)` pair, with `M` geometric of ratio `α`
/// and extended until it passes the last `n_k`. Rows are in `β`-major order.
pub fn constant_table(
    betas: &[f64],
    alphas: &[f64],
    k: usize,
    grid: usize,
    refine: usize,
) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(betas.len() * alphas.len());
    for &beta in betas {
        let nk = geometric_lacunary(beta, k, 1)?;
        for &alpha in alphas {
            let m = geometric_up_to(alpha, nk.last())?;
            let r = sweep_sup(&nk, Some(&m), grid, refine)?;
            rows.push(CurveRow::from_sweep(beta, Some(alpha), &nk, &r));
        }
    }
    Ok(rows)
}

/// Shortest geometric sequence from 1 whose last term reaches `n_max`
/// (or the longest that fits in 63 bits).
pub fn geometric_up_to(alpha: f64, n_max: u64) -> Result<IndexSeq> {
    let mut best = geometric_lacunary(alpha, 2, 1)?;
    let mut count = 3;
    while best.last() < n_max {
        match geometric_lacunary(alpha, count, 1) {
            Ok(s) => best = s,
            Err(Error::Overflow { .. }) => break,
            Err(e) => return Err(e),
        }
        count += 1;
    }
    Ok(best.into_index_seq())
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "beta",
        "alpha",
        "beta_certified",
        "K",
        "sup_estimate",
        "theta_star",
        "tail_at_star",
    ])?;
    for r in rows {
        wtr.write_record([
            fmt_f64(r.beta),
            r.alpha.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.beta_certified),
            r.k.to_string(),
            fmt_f64(r.sup_estimate),
            fmt_f64(r.theta_star),
            fmt_f64(r.tail_at_star),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    #[serde(rename = "N")]
    pub n: u64,
    /// `Σ_{k<N} |A_{k+1} f − A_k f|` for `U = (−1)`, `f = 1`, from the averages engine.
    pub v: f64,
    /// Same quantity from the harmonic-sum closed form.
    pub closed_form: f64,
    pub ln_n: f64,
}

/// `1 + 2 Σ_{odd m, 3 ≤ m ≤ N−1} 1/m + [N odd] / N`.
///
/// With `a_k(−1) = −1/k` for odd `k` and `0` for even `k`, the step from `k`
/// to `k+1` has size `1/k` (odd `k`) or `1/(k+1)` (even `k`): each odd
/// `m < N` is met twice, and an odd `N` once more from `k = N − 1`.
pub fn divergence_closed_form(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    let mut m = if (n - 1) % 2 == 1 { n - 1 } else { n - 2 };
    while m >= 3 {
        s += 1.0 / m as f64;
        m -= 2;
    }
    let last = if n % 2 == 1 { 1.0 / n as f64 } else { 0.0 };
    1.0 + 2.0 * s + last
}

/// Partial sums at `N = 10, 10², …` up to `n_max` (and at `n_max` itself).
pub fn divergence_demo(n_max: u64) -> Result<Vec<DivergenceRow>> {
    if n_max < 10 {
        return Err(Error::invalid("divergence_demo needs N_max >= 10"));
    }
    let minus_one = Operator::scalar(C64::new(-1.0, 0.0))?;
    let f = HVector::from_real(&[1.0])?;
    let plan = CheckpointPlan::new((1..=n_max).collect())?;
    let trace = average_stream(&minus_one, &f, &plan)?;

    let mut marks: Vec<u64> = std::iter::successors(Some(10u64), |&n| n.checked_mul(10))
        .take_while(|&n| n <= n_max)
        .collect();
    if marks.last() != Some(&n_max) {
        marks.push(n_max);
    }

    let pairs = trace.pairs();
    let mut rows = Vec::with_capacity(marks.len());
    let mut v = 0.0;
    let mut next = marks.iter().copied().peekable();
    for k in 1..=n_max {
        if next.peek() == Some(&k) {
            next.next();
            rows.push(DivergenceRow {
                n: k,
                v,
                closed_form: divergence_closed_form(k),
                ln_n: (k as f64).ln(),
            });
        }
        if k < n_max {
            v += pairs[k as usize].1.distance(&pairs[k as usize - 1].1)?;
        }
    }
    Ok(rows)
}

pub fn write_divergence_csv<W: Write>(rows: &[DivergenceRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["N", "V", "closed_form", "ln_N"])?;
    for r in rows {
        wtr.write_record([
            r.n.to_string(),
            fmt_f64(r.v),
            fmt_f64(r.closed_form),
            fmt_f64(r.ln_n),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Strictly increasing sequence of 2–40 terms with gaps drawn from a
/// per-sequence scale in `{1, 3, 10, 100}`.
pub fn random_increasing_seq(seed: u64) -> Result<IndexSeq> {
    let mut rng = Prng::new(seed);
    let len = rng.next_range(2, 40) as usize;
    let gap_max = [1u64, 3, 10, 100][rng.next_range(0, 3) as usize];
    let mut cur = rng.next_range(1, 10);
    let mut terms = Vec::with_capacity(len);
    for _ in 0..len {
        terms.push(cur);
        cur += rng.next_range(1, gap_max);
    }
    IndexSeq::new(terms)
}

/// `p = 2` functional over the ensemble, checked against [`SQUARE_VARIATION_BOUND`].
///
/// With an empty `cfg.nk` every trial draws its own increasing sequence from
/// the trial seed. The summary's `bound_holds` records the finding.
pub fn roj_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.kind = ExperimentKind::RojCheck;
    cfg.p = 2.0;
    cfg.validate()?;
    let fixed = if cfg.nk.is_empty() {
        None
    } else {
        Some(IndexSeq::new(cfg.nk.clone())?)
    };
    let rows: Vec<TrialRow> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let inputs = cfg.trial_inputs(trial)?;
            let nk = match &fixed {
                Some(s) => s.clone(),
                None => random_increasing_seq(derive_seed(inputs.seed, 3))?,
            };
            let value = trial_value(&cfg, &inputs, &nk, None)?;
            Ok(TrialRow::new(&inputs, value))
        })
        .collect::<Result<_>>()?;
    ExperimentReport::from_rows(rows, cfg, Some(SQUARE_VARIATION_BOUND))
}

#[derive(Debug, Clone, Serialize)]
pub struct DilationBatch {
    pub steps: usize,
    pub samples: usize,
    pub reports: Vec<DilationReport>,
    pub all_passed: bool,
}

/// Builds and verifies one dilation per trial of `cfg`, with `samples` random vectors each.
pub fn dilation_check(
    cfg: &ExperimentConfig,
    steps: usize,
    samples: usize,
    budget: usize,
) -> Result<DilationBatch> {
    let mut cfg = cfg.clone();
    cfg.kind = ExperimentKind::DilationCheck;
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let reports: Vec<DilationReport> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let inputs = cfg.trial_inputs(trial)?;
            let pack = build_dilation_with(&inputs.op, steps, budget)?;
            verify_dilation(&pack, &inputs.op, samples, derive_seed(inputs.seed, 4))
        })
        .collect::<Result<_>>()?;
    let all_passed = reports.iter().all(|r| r.passed);
    Ok(DilationBatch {
        steps,
        samples,
        reports,
        all_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::OperatorSpec;

    #[test]
    fn closed_form_small_cases() {
        assert_eq!(divergence_closed_form(2), 1.0);
        assert!((divergence_closed_form(3) - 4.0 / 3.0).abs() < 1e-15);
        assert!((divergence_closed_form(4) - 5.0 / 3.0).abs() < 1e-15);
        assert!((divergence_closed_form(5) - (5.0 / 3.0 + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn demo_matches_closed_form_and_grows() {
        let rows = divergence_demo(2500).unwrap();
        let ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![10, 100, 1000, 2500]);
        for w in rows.windows(2) {
            assert!(w[1].v >= w[0].v);
        }
        for r in &rows {
            assert!((r.v - r.closed_form).abs() < 1e-12, "N = {}", r.n);
        }
        assert!(divergence_demo(9).is_err());
    }

    #[test]
    fn random_sequences_are_increasing() {
        for s in 0..50 {
            let seq = random_increasing_seq(s).unwrap();
            assert!(seq.len() >= 2 && seq.len() <= 40);
            assert!(seq.first() >= 1);
        }
    }

    #[test]
    fn roj_check_identity_and_alternating() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RojCheck, vec![]);
        cfg.op = OperatorSpec::Identity;
        cfg.trials = 3;
        let r = roj_check(&cfg).unwrap();
        assert_eq!(r.summary.max_ratio, 0.0);
        assert_eq!(r.summary.bound_holds, Some(true));

        let odd: Vec<u64> = (0..50).map(|k| 2 * k + 1).collect();
        let mut cfg = ExperimentConfig::new(ExperimentKind::RojCheck, odd.clone());
        cfg.op = OperatorSpec::Diag(vec![std::f64::consts::PI]);
        let r = roj_check(&cfg).unwrap();
        // a_n(−1) = −1/n on odd n
        let direct = odd
            .windows(2)
            .map(|w| (1.0 / w[0] as f64 - 1.0 / w[1] as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((r.rows[0].ratio - direct).abs() < 1e-12);
    }

    #[test]
    fn small_constant_curve_and_table() {
        let rows = constant_curve(&[4.0], 12, 2000, 10).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].sup_estimate.is_finite() && rows[0].sup_estimate > 0.0);
        let table = constant_table(&[2.0, 3.0], &[2.0, 5.0], 8, 500, 5).unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(table[1].alpha, Some(5.0));
        let m = geometric_up_to(5.0, 128).unwrap();
        assert_eq!(m.terms(), &[1, 5, 25, 125, 625]);
    }

    #[test]
    fn dilation_batch_passes() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::DilationCheck, vec![]);
        cfg.op = OperatorSpec::RandomContraction(vec![0.9]);
        cfg.dims = vec![3];
        cfg.trials = 3;
        let b = dilation_check(&cfg, 8, 4, 4096).unwrap();
        assert!(b.all_passed);
        assert_eq!(b.reports.len(), 3);
    }
}
