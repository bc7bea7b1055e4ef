//! Supremum estimation of a symbol functional over `θ ∈ (0, π]`.
//!
//! The functional is sampled on a log-uniform grid (the interesting
//! transitions sit at `θ ≈ 1/n_k`, across many scales), then the five best
//! grid points are refined by golden-section search inside their
//! neighbouring brackets. The estimate is a lower bound on the true supremum.
//! Every reduction is a max with smallest-`θ` tie-break over an ordered
//! sample list, so the result does not depend on how evaluations are
//! scheduled across threads.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SymbolDecomposition, SymbolFunctional};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::sequences::{IndexSeq, LacunarySeq};

const TOP_BRACKETS: usize = 5;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid_points: usize,
    pub refine_iters: usize,
    /// Defaults to `1/(10·n_K)`.
    pub theta_min: Option<f64>,
    /// Defaults to `π`.
    pub theta_max: Option<f64>,
}

impl SweepConfig {
    pub fn new(grid_points: usize, refine_iters: usize) -> Self {
        SweepConfig {
            grid_points,
            refine_iters,
            theta_min: None,
            theta_max: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub sup_estimate: f64,
    pub theta_star: f64,
    pub at_star: SymbolDecomposition,
    /// Every evaluated point: the grid in ascending `θ`, then refinement
    /// evaluations bracket by bracket.
    pub samples: Vec<SymbolDecomposition>,
    pub beta: Option<f64>,
    pub k: usize,
    pub grid_points: usize,
    pub refine_iters: usize,
    pub oscillation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub sup_estimate: f64,
    pub theta_star: f64,
    pub beta: Option<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub grid_points: usize,
    pub refine_iters: usize,
}

impl SweepResult {
    pub fn summary(&self) -> SweepSummary {
        SweepSummary {
            sup_estimate: self.sup_estimate,
            theta_star: self.theta_star,
            beta: self.beta,
            k: self.k,
            grid_points: self.grid_points,
            refine_iters: self.refine_iters,
        }
    }

    /// Tail bound at the maximizer.
    pub fn tail_at_star(&self) -> f64 {
        self.at_star.tail_bound
    }

    /// Largest tail bound among all samples (attained at the smallest `θ`).
    pub fn max_tail_bound(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.tail_bound)
            .fold(0.0, f64::max)
    }

    /// CSV with header `theta,total,I1,I2,k0,tail_bound`; `k0` is empty when undefined.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["theta", "total", "I1", "I2", "k0", "tail_bound"])?;
        for s in &self.samples {
            wtr.write_record([
                fmt_f64(s.theta),
                fmt_f64(s.total),
                fmt_f64(s.i1),
                fmt_f64(s.i2),
                s.k0.map(|k| k.to_string()).unwrap_or_default(),
                fmt_f64(s.tail_bound),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Sweep of the variation sum (or the oscillation sum when `m` is given).
pub fn sweep_sup(
    nk: &LacunarySeq,
    m: Option<&IndexSeq>,
    grid_points: usize,
    refine_iters: usize,
) -> Result<SweepResult> {
    let functional = match m {
        Some(m) => SymbolFunctional::oscillation(nk, m)?,
        None => SymbolFunctional::variation(nk)?,
    };
    sweep_with(&functional, &SweepConfig::new(grid_points, refine_iters))
}

pub fn sweep_with(functional: &SymbolFunctional, cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.grid_points < 2 {
        return Err(Error::invalid("grid_points must be at least 2"));
    }
    let n_last = *functional.nk().last().expect("functional has terms");
    let lo = cfg.theta_min.unwrap_or(1.0 / (10.0 * n_last as f64));
    let hi = cfg.theta_max.unwrap_or(PI);
    if !(lo > 0.0 && lo < hi && hi <= PI) {
        return Err(Error::invalid(format!(
            "degenerate theta range [{lo}, {hi}]; need 0 < theta_min < theta_max <= π"
        )));
    }

    let grid = log_grid(lo, hi, cfg.grid_points);
    let mut samples: Vec<SymbolDecomposition> = grid
        .par_iter()
        .map(|&t| functional.decompose_unchecked(t))
        .collect();

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| rank(&samples[a], &samples[b]));
    let brackets: Vec<(f64, f64)> = order
        .iter()
        .take(TOP_BRACKETS)
        .map(|&i| (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]))
        .collect();

    let refined: Vec<Vec<SymbolDecomposition>> = brackets
        .par_iter()
        .map(|&(a, b)| golden_section(functional, a, b, cfg.refine_iters))
        .collect();
    samples.extend(refined.into_iter().flatten());

    let best = *samples
        .iter()
        .min_by(|a, b| rank(a, b))
        .expect("grid is non-empty");
    Ok(SweepResult {
        sup_estimate: best.total,
        theta_star: best.theta,
        at_star: best,
        samples,
        beta: functional.beta(),
        k: functional.nk().len(),
        grid_points: cfg.grid_points,
        refine_iters: cfg.refine_iters,
        oscillation: functional.is_oscillation(),
    })
}

/// Ordering that puts larger totals first and breaks ties by smaller `θ`.
fn rank(a: &SymbolDecomposition, b: &SymbolDecomposition) -> std::cmp::Ordering {
    b.total
        .total_cmp(&a.total)
        .then_with(|| a.theta.total_cmp(&b.theta))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}

/// Golden-section search for a maximum on `[a, b]`, returning every evaluation.
fn golden_section(
    functional: &SymbolFunctional,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> Vec<SymbolDecomposition> {
    let mut evals = Vec::with_capacity(iters + 2);
    if iters == 0 || a >= b {
        return evals;
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = functional.decompose_unchecked(c);
    let mut fd = functional.decompose_unchecked(d);
    evals.push(fc);
    evals.push(fd);
    for _ in 0..iters {
        if fc.total >= fd.total {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = functional.decompose_unchecked(c);
            evals.push(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = functional.decompose_unchecked(d);
            evals.push(fd);
        }
    }
    evals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::geometric_lacunary;

    #[test]
    fn grid_is_log_uniform_and_clamped() {
        let g = log_grid(1e-3, PI, 5);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[4], PI);
        let r1 = g[1] / g[0];
        let r2 = g[3] / g[2];
        assert!((r1 - r2).abs() < 1e-12 * r1);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        // |a_2 − a_1| = |γ − 1|/2 is increasing on (0, π]
        let nk = LacunarySeq::from_terms(vec![1, 2]).unwrap();
        let f = SymbolFunctional::variation(&nk).unwrap();
        let evals = golden_section(&f, 2.0, PI, 60);
        let best = evals.iter().map(|e| e.theta).fold(0.0, f64::max);
        assert!((best - PI).abs() < 1e-6);
    }

    #[test]
    fn even_sequence_maximum_is_interior() {
        let nk = geometric_lacunary(2.0, 20, 2).unwrap();
        let r = sweep_sup(&nk, None, 2000, 20).unwrap();
        assert!(r.sup_estimate > 0.0);
        assert!(r.theta_star < PI);
        let at_pi = SymbolFunctional::variation(&nk).unwrap().value(PI).unwrap();
        assert!(at_pi < 1e-15);
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        let nk = geometric_lacunary(2.0, 5, 1).unwrap();
        assert!(sweep_sup(&nk, None, 1, 0).is_err());
        let f = SymbolFunctional::variation(&nk).unwrap();
        let mut cfg = SweepConfig::new(10, 0);
        cfg.theta_min = Some(2.0);
        cfg.theta_max = Some(1.0);
        assert!(sweep_with(&f, &cfg).is_err());
        cfg.theta_min = Some(0.1);
        cfg.theta_max = Some(4.0);
        assert!(sweep_with(&f, &cfg).is_err());
    }

    #[test]
    fn csv_has_fixed_header() {
        let nk = geometric_lacunary(2.0, 4, 1).unwrap();
        let r = sweep_sup(&nk, None, 3, 1).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,total,I1,I2,k0,tail_bound\n"));
        assert_eq!(text.lines().count(), 1 + r.samples.len());
    }
}
