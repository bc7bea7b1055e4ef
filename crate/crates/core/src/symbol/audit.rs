//! Grid audits of the two elementary estimates behind the symbol bounds:
//! the chord bound `|e^{iθ} − 1| ≥ θ/4` on `(0, π]`, and the derivative
//! bound `|F′(x)| ≤ (x+1)/x²` for the kernel `F(r) = (e^{ir} − 1)/r`.
//!
//! Audits report what they find. They never fail on a violated inequality;
//! callers decide what to do with the counts.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Debug, Clone, Serialize)]
pub struct ChordAudit {
    pub points: usize,
    pub violations: usize,
    /// `min_θ (2 sin(θ/2) − θ/4)` over the grid.
    pub min_slack: f64,
    pub argmin_theta: f64,
    /// `max_θ | |e^{iθ} − 1| − 2 sin(θ/2) |`, the direct chord against its sine form.
    pub max_identity_error: f64,
}

impl ChordAudit {
    pub fn all_pass(&self) -> bool {
        self.violations == 0
    }
}

pub fn chord_lower_bound_audit(theta_grid: &[f64]) -> Result<ChordAudit> {
    if let Some(&t) = theta_grid.iter().find(|&&t| !(t > 0.0 && t <= PI)) {
        return Err(Error::invalid(format!("grid point {t} is outside (0, π]")));
    }
    let mut audit = ChordAudit {
        points: theta_grid.len(),
        violations: 0,
        min_slack: f64::INFINITY,
        argmin_theta: f64::NAN,
        max_identity_error: 0.0,
    };
    for &theta in theta_grid {
        let chord = 2.0 * (0.5 * theta).sin();
        let direct = (C64::cis(theta) - 1.0).norm();
        audit.max_identity_error = audit.max_identity_error.max((direct - chord).abs());
        let slack = chord - 0.25 * theta;
        if slack < 0.0 {
            audit.violations += 1;
        }
        if slack < audit.min_slack {
            audit.min_slack = slack;
            audit.argmin_theta = theta;
        }
    }
    Ok(audit)
}

/// `F(x) = (e^{ix} − 1)/x`, with `e^{ix} − 1 = −2 sin²(x/2) + i sin x`.
fn kernel(x: f64) -> C64 {
    let s = (0.5 * x).sin();
    C64::new(-2.0 * s * s, x.sin()) / x
}

/// `F′(x) = (i x e^{ix} − (e^{ix} − 1)) / x²`.
pub fn kernel_derivative(x: f64) -> C64 {
    let s = (0.5 * x).sin();
    let em1 = C64::new(-2.0 * s * s, x.sin());
    (C64::new(0.0, x) * C64::cis(x) - em1) / (x * x)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelAudit {
    pub points: usize,
    /// Grid points where `|F′(x)| > (x+1)/x²`.
    pub bound_violations: usize,
    /// `max_x |F′(x)| x² / (x + 1)`.
    pub max_bound_ratio: f64,
    pub worst_x: f64,
    pub first_violation: Option<f64>,
    /// Grid points where `|F′(x)| > (x+2)/x²`, a bound that does hold:
    /// `|e^{ix}(ix − 1) + 1| ≤ √(1+x²) + 1`.
    pub relaxed_violations: usize,
    /// Largest relative gap between `F′` and a centered difference of `F`.
    pub max_fd_rel_error: f64,
    pub fd_failures: usize,
}

impl KernelAudit {
    pub fn bound_holds(&self) -> bool {
        self.bound_violations == 0
    }

    pub fn derivative_matches(&self) -> bool {
        self.fd_failures == 0
    }
}

const FD_REL_TOL: f64 = 1e-4;

pub fn kernel_audit(x_grid: &[f64]) -> Result<KernelAudit> {
    if let Some(&x) = x_grid.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(format!(
            "grid point {x} is not a positive real"
        )));
    }
    let mut audit = KernelAudit {
        points: x_grid.len(),
        bound_violations: 0,
        max_bound_ratio: 0.0,
        worst_x: f64::NAN,
        first_violation: None,
        relaxed_violations: 0,
        max_fd_rel_error: 0.0,
        fd_failures: 0,
    };
    for &x in x_grid {
        let d = kernel_derivative(x);
        let modulus = d.norm();
        let ratio = modulus * x * x / (x + 1.0);
        if ratio > 1.0 {
            audit.bound_violations += 1;
            audit.first_violation.get_or_insert(x);
        }
        if modulus * x * x > x + 2.0 {
            audit.relaxed_violations += 1;
        }
        if ratio > audit.max_bound_ratio {
            audit.max_bound_ratio = ratio;
            audit.worst_x = x;
        }
        let h = (1e-8 * x).max(1e-6);
        let fd = (kernel(x + h) - kernel(x - h)) / (2.0 * h);
        let rel = (fd - d).norm() / modulus;
        if rel > FD_REL_TOL {
            audit.fd_failures += 1;
        }
        audit.max_fd_rel_error = audit.max_fd_rel_error.max(rel);
    }
    Ok(audit)
}
