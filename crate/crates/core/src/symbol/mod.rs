//! Scalar spectral side: the averaging symbol `a_n(γ) = (1/n) Σ_{j=1}^n γ^j`
//! on the unit circle and the variation / oscillation sums built from it.
//!
//! Angles are taken in `(0, π]`; a point `θ ∈ [π, 2π)` is represented by its
//! conjugate `2π − θ`, which leaves every modulus `|a_m(γ) − a_n(γ)|`
//! unchanged. The point `γ = 1` is excluded and carries the convention
//! `a_n(1) = 1` at call sites (see [`symbol_on_circle`]).

mod audit;
mod sweep;

pub use audit::{
    chord_lower_bound_audit, kernel_audit, kernel_derivative, ChordAudit, KernelAudit,
};
pub use sweep::{sweep_sup, sweep_with, SweepConfig, SweepResult, SweepSummary};

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::sequences::{IndexSeq, LacunarySeq};

/// A point `γ = e^{iθ}` of the circle minus `{1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePoint {
    theta: f64,
}

impl CirclePoint {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < TAU) {
            return Err(Error::invalid(format!(
                "theta = {theta} is outside (0, 2π)"
            )));
        }
        Ok(CirclePoint { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Representative in `(0, π]`: `θ` itself or `2π − θ` for the conjugate point.
    pub fn reduced(&self) -> f64 {
        if self.theta > PI {
            TAU - self.theta
        } else {
            self.theta
        }
    }

    pub fn gamma(&self) -> C64 {
        C64::cis(self.theta)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= PI {
        Ok(())
    } else {
        Err(Error::invalid(format!("theta = {theta} is outside (0, π]")))
    }
}

/// `a_n(e^{iθ})` for `θ ∈ (0, π]`, via `e^{iθ(n+1)/2} · sin(nθ/2) / (n sin(θ/2))`.
pub fn symbol(n: u64, theta: f64) -> Result<C64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    check_theta(theta)?;
    Ok(symbol_unchecked(n, theta))
}

#[inline]
pub(crate) fn symbol_unchecked(n: u64, theta: f64) -> C64 {
    let nf = n as f64;
    let amp = (0.5 * nf * theta).sin() / (nf * (0.5 * theta).sin());
    C64::cis(0.5 * theta * (nf + 1.0)) * amp
}

/// `a_n(e^{iθ})` for any finite `θ`, with `a_n(1) = 1`.
pub fn symbol_on_circle(n: u64, theta: f64) -> C64 {
    let t = theta.rem_euclid(TAU);
    if t == 0.0 {
        C64::new(1.0, 0.0)
    } else if t > PI {
        symbol_unchecked(n, TAU - t).conj()
    } else {
        symbol_unchecked(n, t)
    }
}

/// `16β / ((β − 1)·θ·n_K)`: bound on the part of the infinite sum beyond the last term.
///
/// Each discarded term is at most `|a_m| + |a_{n_k}| ≤ 16/(θ n_k)` by
/// `|a_n(γ)| ≤ 2/(n|1 − γ|)` and `|1 − e^{iθ}| ≥ θ/4`, and `n_k ≥ β^{k−K} n_K`.
pub fn tail_bound(beta: f64, theta: f64, n_last: u64) -> f64 {
    16.0 * beta / ((beta - 1.0) * theta * n_last as f64)
}

/// Split of a symbol sum at the threshold index `k₀` (first `k` with `θ·n_k ≥ 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolDecomposition {
    pub theta: f64,
    /// 1-based index of the first term with `θ·n_k ≥ 1`, if any.
    pub k0: Option<usize>,
    /// Terms with `θ·n_k < 1`.
    pub i1: f64,
    /// Terms with `θ·n_k ≥ 1`.
    pub i2: f64,
    pub total: f64,
    pub tail_bound: f64,
}

/// Precomputed variation or oscillation sum over a fixed `(n_k)` (and `M`).
#[derive(Debug, Clone)]
pub struct SymbolFunctional {
    nk: Vec<u64>,
    beta: Option<f64>,
    windows: Option<Vec<Vec<u64>>>,
}

impl SymbolFunctional {
    /// `Σ_k |a_{n_{k+1}} − a_{n_k}|` over a lacunary sequence.
    pub fn variation(nk: &LacunarySeq) -> Result<Self> {
        let mut f = Self::variation_plain(nk)?;
        f.beta = Some(nk.beta_certified());
        Ok(f)
    }

    /// Variation sum over any increasing sequence; no tail bound is available.
    pub fn variation_plain(nk: &IndexSeq) -> Result<Self> {
        if nk.len() < 2 {
            return Err(Error::invalid("the sequence needs at least two terms"));
        }
        Ok(SymbolFunctional {
            nk: nk.terms().to_vec(),
            beta: None,
            windows: None,
        })
    }

    /// `Σ_k max_{m ∈ M, n_k ≤ m < n_{k+1}} |a_m − a_{n_k}|`.
    pub fn oscillation(nk: &LacunarySeq, m: &IndexSeq) -> Result<Self> {
        let mut f = Self::variation(nk)?;
        f.windows = Some(
            f.nk.windows(2)
                .map(|w| m.window(w[0], w[1]).to_vec())
                .collect(),
        );
        Ok(f)
    }

    pub fn is_oscillation(&self) -> bool {
        self.windows.is_some()
    }

    pub fn nk(&self) -> &[u64] {
        &self.nk
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// The `K − 1` summands at `θ ∈ (0, π]`, in ascending `k`.
    pub fn terms(&self, theta: f64) -> Result<Vec<f64>> {
        check_theta(theta)?;
        Ok(self.terms_unchecked(theta))
    }

    fn terms_unchecked(&self, theta: f64) -> Vec<f64> {
        let a: Vec<C64> = self
            .nk
            .iter()
            .map(|&n| symbol_unchecked(n, theta))
            .collect();
        match &self.windows {
            None => a.windows(2).map(|w| (w[1] - w[0]).norm()).collect(),
            Some(windows) => windows
                .iter()
                .zip(&a)
                .map(|(win, &ank)| {
                    win.iter()
                        .map(|&m| (symbol_unchecked(m, theta) - ank).norm())
                        .fold(0.0, f64::max)
                })
                .collect(),
        }
    }

    pub fn value(&self, theta: f64) -> Result<f64> {
        Ok(self.terms(theta)?.iter().sum())
    }

    /// Value at an arbitrary point of the circle; `0` at `γ = 1`.
    pub fn value_on_circle(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(TAU);
        if t == 0.0 {
            return 0.0;
        }
        let t = if t > PI { TAU - t } else { t };
        self.terms_unchecked(t).iter().sum()
    }

    pub fn decompose(&self, theta: f64) -> Result<SymbolDecomposition> {
        check_theta(theta)?;
        Ok(self.decompose_unchecked(theta))
    }

    pub(crate) fn decompose_unchecked(&self, theta: f64) -> SymbolDecomposition {
        let terms = self.terms_unchecked(theta);
        let k0 = self.nk.iter().position(|&n| theta * n as f64 >= 1.0);
        let (mut i1, mut i2, mut total) = (0.0, 0.0, 0.0);
        for (k, t) in terms.iter().enumerate() {
            if k0.is_some_and(|k0| k >= k0) {
                i2 += t;
            } else {
                i1 += t;
            }
            total += t;
        }
        let tail = match self.beta {
            Some(b) => tail_bound(b, theta, *self.nk.last().unwrap()),
            None => f64::INFINITY,
        };
        SymbolDecomposition {
            theta,
            k0: k0.map(|k| k + 1),
            i1,
            i2,
            total,
            tail_bound: tail,
        }
    }
}

pub fn symbol_variation(nk: &IndexSeq, theta: f64) -> Result<f64> {
    SymbolFunctional::variation_plain(nk)?.value(theta)
}

pub fn symbol_oscillation(nk: &LacunarySeq, m: &IndexSeq, theta: f64) -> Result<f64> {
    SymbolFunctional::oscillation(nk, m)?.value(theta)
}

pub fn decompose(nk: &LacunarySeq, theta: f64) -> Result<SymbolDecomposition> {
    SymbolFunctional::variation(nk)?.decompose(theta)
}

pub fn decompose_oscillation(
    nk: &LacunarySeq,
    m: &IndexSeq,
    theta: f64,
) -> Result<SymbolDecomposition> {
    SymbolFunctional::oscillation(nk, m)?.decompose(theta)
}
