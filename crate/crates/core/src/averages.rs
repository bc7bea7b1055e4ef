//! Ergodic averages `A_n f = (1/n) Σ_{j=1}^n B^j f` at checkpoint indices,
//! and the variation and oscillation functionals built on them.
//!
//! The reference engine is a single streaming pass over `j = 1..n_max`
//! (`g_j = B g_{j−1}`, `S_j = S_{j−1} + g_j`), performing exactly `n_max`
//! matrix–vector products and guarded by a work budget on `n_max·dim²`.
//! `S_j` is kept as a Neumaier pair `(hi, lo)` and `S_n/n` is formed with a
//! remainder correction, so `A_n f = f` holds exactly for `B = I` while
//! `n < 2^26`, and integer cancellations (`B = −1`) stay exact.
//! For very long sequences a doubling engine precomputes `B^{2^i}` and
//! `Σ_{j=1}^{2^i} B^j` and jumps between checkpoints in `O(dim² log n)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::{check_dim, HVector, Operator, C64, CONTRACTION_TOL};
use crate::sequences::IndexSeq;

/// Default cap on `n_max·dim²` for the streaming engine.
pub const DEFAULT_WORK_BUDGET: u64 = 1 << 34;
/// [`Engine::Auto`] streams while `n_max·dim²` stays below this.
pub const AUTO_STREAM_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Stream,
    Doubling,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamOptions {
    pub budget: u64,
    pub engine: Engine,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            budget: DEFAULT_WORK_BUDGET,
            engine: Engine::Stream,
        }
    }
}

impl StreamOptions {
    pub fn with_engine(engine: Engine) -> Self {
        StreamOptions {
            engine,
            ..Self::default()
        }
    }
}

/// Sorted, de-duplicated set of indices at which averages are recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointPlan {
    indices: Vec<u64>,
}

impl CheckpointPlan {
    pub fn new(mut indices: Vec<u64>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::invalid("checkpoint plan must be non-empty"));
        }
        if indices[0] == 0 {
            return Err(Error::invalid("checkpoint indices must be positive"));
        }
        Ok(CheckpointPlan { indices })
    }

    pub fn for_variation(nk: &IndexSeq) -> Self {
        CheckpointPlan {
            indices: nk.terms().to_vec(),
        }
    }

    /// `(n_k)` together with every `m ∈ M` that falls in some window `[n_k, n_{k+1})`.
    pub fn for_oscillation(nk: &IndexSeq, m: &IndexSeq) -> Self {
        let mut indices = nk.terms().to_vec();
        for w in nk.terms().windows(2) {
            indices.extend_from_slice(m.window(w[0], w[1]));
        }
        indices.sort_unstable();
        indices.dedup();
        CheckpointPlan { indices }
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn n_max(&self) -> u64 {
        *self.indices.last().expect("plan is non-empty")
    }
}

/// Pairs `(n, A_n f)` in ascending `n`.
#[derive(Debug, Clone)]
pub struct AverageTrace {
    pairs: Vec<(u64, HVector)>,
}

impl AverageTrace {
    pub fn pairs(&self) -> &[(u64, HVector)] {
        &self.pairs
    }

    pub fn get(&self, n: u64) -> Option<&HVector> {
        self.pairs
            .binary_search_by_key(&n, |(k, _)| *k)
            .ok()
            .map(|i| &self.pairs[i].1)
    }

    fn require(&self, n: u64) -> Result<&HVector> {
        self.get(n)
            .ok_or_else(|| Error::invalid(format!("index {n} is not in the checkpoint plan")))
    }

    /// CSV with columns `n, re_0, im_0, re_1, im_1, …`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let dim = self.pairs.first().map_or(0, |(_, v)| v.dim());
        let mut header = vec!["n".to_string()];
        for i in 0..dim {
            header.push(format!("re_{i}"));
            header.push(format!("im_{i}"));
        }
        wtr.write_record(&header)?;
        for (n, v) in &self.pairs {
            let mut row = vec![n.to_string()];
            for z in v.coords() {
                row.push(fmt_f64(z.re));
                row.push(fmt_f64(z.im));
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn average_stream(b: &Operator, f: &HVector, plan: &CheckpointPlan) -> Result<AverageTrace> {
    average_stream_with(b, f, plan, &StreamOptions::default())
}

/// Computes the trace with the engine selected in `opts`.
pub fn average_stream_with(
    b: &Operator,
    f: &HVector,
    plan: &CheckpointPlan,
    opts: &StreamOptions,
) -> Result<AverageTrace> {
    check_dim(b.dim(), f.dim())?;
    let d2 = (b.dim() as u64).saturating_mul(b.dim() as u64);
    let work = plan.n_max().saturating_mul(d2);
    match opts.engine {
        Engine::Doubling => average_doubling(b, f, plan),
        Engine::Auto if work > AUTO_STREAM_LIMIT => average_doubling(b, f, plan),
        _ => {
            if work > opts.budget {
                return Err(Error::Budget {
                    what: "work (n_max·dim²)",
                    required: work,
                    budget: opts.budget,
                });
            }
            Ok(stream(b.entries(), f.as_dvector(), plan))
        }
    }
}

fn stream(b: &DMatrix<C64>, f: &DVector<C64>, plan: &CheckpointPlan) -> AverageTrace {
    let d = f.len();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut g = f.clone();
    let mut next = DVector::zeros(d);
    let mut hi: DVector<C64> = DVector::zeros(d);
    let mut lo: DVector<C64> = DVector::zeros(d);
    let mut pairs = Vec::with_capacity(plan.indices.len());
    let mut checkpoints = plan.indices.iter().copied().peekable();
    for j in 1..=plan.n_max() {
        next.gemv(one, b, &g, zero);
        std::mem::swap(&mut g, &mut next);
        for i in 0..d {
            hi[i].re = neumaier_add(hi[i].re, g[i].re, &mut lo[i].re);
            hi[i].im = neumaier_add(hi[i].im, g[i].im, &mut lo[i].im);
        }
        if checkpoints.peek() == Some(&j) {
            checkpoints.next();
            let n = j as f64;
            let mean = DVector::from_fn(d, |i, _| {
                C64::new(
                    pair_div(hi[i].re, lo[i].re, n),
                    pair_div(hi[i].im, lo[i].im, n),
                )
            });
            pairs.push((j, HVector::from_dvector(mean)));
        }
    }
    AverageTrace { pairs }
}

fn neumaier_add(s: f64, x: f64, c: &mut f64) -> f64 {
    let t = s + x;
    if s.abs() >= x.abs() {
        *c += (s - t) + x;
    } else {
        *c += (x - t) + s;
    }
    t
}

/// `(hi + lo)/n` rounded once: the quotient of `hi` plus the corrected remainder.
fn pair_div(hi: f64, lo: f64, n: f64) -> f64 {
    let q = hi / n;
    let r = (-q).mul_add(n, hi) + lo;
    q + r / n
}

/// Doubling engine: `S_{n+2^i} = S_n + G_i B^n f` with `G_i = Σ_{j=1}^{2^i} B^j`.
pub fn average_doubling(b: &Operator, f: &HVector, plan: &CheckpointPlan) -> Result<AverageTrace> {
    check_dim(b.dim(), f.dim())?;
    let levels = (u64::BITS - plan.n_max().leading_zeros()) as usize;
    let mut powers: Vec<DMatrix<C64>> = Vec::with_capacity(levels);
    let mut sums: Vec<DMatrix<C64>> = Vec::with_capacity(levels);
    powers.push(b.entries().clone());
    sums.push(b.entries().clone());
    for i in 1..levels {
        let g = &sums[i - 1] + &powers[i - 1] * &sums[i - 1];
        let p = &powers[i - 1] * &powers[i - 1];
        sums.push(g);
        powers.push(p);
    }
    let mut cur = 0u64;
    let mut g = f.as_dvector().clone();
    let mut s: DVector<C64> = DVector::zeros(f.dim());
    let mut pairs = Vec::with_capacity(plan.indices.len());
    for &n in &plan.indices {
        let delta = n - cur;
        for (i, (gi, pi)) in sums.iter().zip(&powers).enumerate() {
            if delta >> i & 1 == 1 {
                s += gi * &g;
                g = pi * &g;
            }
        }
        cur = n;
        pairs.push((n, HVector::from_dvector(s.unscale(n as f64))));
    }
    Ok(AverageTrace { pairs })
}

/// `‖A_{n_{k+1}} f − A_{n_k} f‖` for `k = 1..K−1`.
pub fn variation_terms(trace: &AverageTrace, nk: &IndexSeq) -> Result<Vec<f64>> {
    nk.terms()
        .windows(2)
        .map(|w| trace.require(w[1])?.distance(trace.require(w[0])?))
        .collect()
}

/// `max_{m ∈ M, n_k ≤ m < n_{k+1}} ‖A_m f − A_{n_k} f‖` for `k = 1..K−1`; empty windows give 0.
pub fn oscillation_terms(trace: &AverageTrace, nk: &IndexSeq, m: &IndexSeq) -> Result<Vec<f64>> {
    nk.terms()
        .windows(2)
        .map(|w| {
            let base = trace.require(w[0])?;
            m.window(w[0], w[1]).iter().try_fold(0.0f64, |acc, &mm| {
                Ok(acc.max(trace.require(mm)?.distance(base)?))
            })
        })
        .collect()
}

/// `(Σ t^p)^{1/p}`, summed in ascending order.
pub fn p_sum(terms: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        terms.iter().sum()
    } else if p == 2.0 {
        terms.iter().map(|t| t * t).sum::<f64>().sqrt()
    } else {
        terms.iter().map(|t| t.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "p must be a finite real >= 1, got {p}"
        )))
    }
}

fn check_len(nk: &IndexSeq) -> Result<()> {
    if nk.len() < 2 {
        Err(Error::invalid(
            "the index sequence needs at least two terms",
        ))
    } else {
        Ok(())
    }
}

pub fn variation_sum(b: &Operator, f: &HVector, nk: &IndexSeq, p: f64) -> Result<f64> {
    variation_sum_with(b, f, nk, p, &StreamOptions::default())
}

/// `(Σ_k ‖A_{n_{k+1}} f − A_{n_k} f‖^p)^{1/p}` over the finite sequence.
pub fn variation_sum_with(
    b: &Operator,
    f: &HVector,
    nk: &IndexSeq,
    p: f64,
    opts: &StreamOptions,
) -> Result<f64> {
    check_p(p)?;
    check_len(nk)?;
    let trace = average_stream_with(b, f, &CheckpointPlan::for_variation(nk), opts)?;
    Ok(p_sum(&variation_terms(&trace, nk)?, p))
}

pub fn oscillation_sum(b: &Operator, f: &HVector, nk: &IndexSeq, m: &IndexSeq) -> Result<f64> {
    oscillation_sum_with(b, f, nk, m, &StreamOptions::default())
}

/// `Σ_k max_{m ∈ M, n_k ≤ m < n_{k+1}} ‖A_m f − A_{n_k} f‖`, from one pass.
pub fn oscillation_sum_with(
    b: &Operator,
    f: &HVector,
    nk: &IndexSeq,
    m: &IndexSeq,
    opts: &StreamOptions,
) -> Result<f64> {
    check_len(nk)?;
    let trace = average_stream_with(b, f, &CheckpointPlan::for_oscillation(nk, m), opts)?;
    Ok(oscillation_terms(&trace, nk, m)?.iter().sum())
}

fn check_contraction(t: &Operator) -> Result<()> {
    let norm = t.operator_norm();
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(Error::ContractViolation(format!(
            "operator norm {norm} exceeds 1 + {CONTRACTION_TOL:e}; not a contraction"
        )));
    }
    Ok(())
}

/// Variation sum of `A_n(T) f`, computed from the powers of `T` itself.
pub fn contraction_variation(t: &Operator, f: &HVector, nk: &IndexSeq, p: f64) -> Result<f64> {
    contraction_variation_with(t, f, nk, p, &StreamOptions::default())
}

pub fn contraction_variation_with(
    t: &Operator,
    f: &HVector,
    nk: &IndexSeq,
    p: f64,
    opts: &StreamOptions,
) -> Result<f64> {
    check_contraction(t)?;
    variation_sum_with(t, f, nk, p, opts)
}

pub fn contraction_oscillation(
    t: &Operator,
    f: &HVector,
    nk: &IndexSeq,
    m: &IndexSeq,
) -> Result<f64> {
    contraction_oscillation_with(t, f, nk, m, &StreamOptions::default())
}

pub fn contraction_oscillation_with(
    t: &Operator,
    f: &HVector,
    nk: &IndexSeq,
    m: &IndexSeq,
    opts: &StreamOptions,
) -> Result<f64> {
    check_contraction(t)?;
    oscillation_sum_with(t, f, nk, m, opts)
}
