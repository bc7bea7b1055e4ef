//! Finite-step unitary dilation of a contraction.
//!
//! For a contraction `T` on `ℋ = ℂ^d` and `N ≥ 1`, the operator `U` on
//! `ℋ^{N+1}` with blocks
//!
//! ```text
//! U[0,0] = T     U[0,N] = D_{T*}
//! U[1,0] = D_T   U[1,N] = −T*
//! U[i,i−1] = I   (2 ≤ i ≤ N)
//! ```
//!
//! is unitary, and `P U^j ι = T^j` for `0 ≤ j ≤ N`, where `ι` places `ℋ` in
//! block 0 and `P` projects onto it. Starting from block 0, the defect part
//! `D_T f` travels down the identity chain and only reaches the last block,
//! where it can feed back into block 0, after `N` steps.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::averages::{average_stream, variation_sum, variation_terms, CheckpointPlan};
use crate::error::{Error, Result};
use crate::linalg::{
    check_dim, derive_seed, max_abs_deviation, random_unit_vector, HVector, Operator, Role, C64,
    CONTRACTION_TOL, UNITARY_TOL_PER_DIM,
};
use crate::sequences::IndexSeq;

pub const DEFAULT_DILATION_BUDGET: usize = 4096;
pub const POWER_TOL: f64 = 1e-8;
pub const FUNCTIONAL_TOL: f64 = 1e-8;
pub const INTERTWINING_TOL: f64 = 1e-8;

/// `(D_T, D_{T*}) = ((I − T*T)^{1/2}, (I − TT*)^{1/2})`.
pub fn defects(t: &Operator) -> Result<(Operator, Operator)> {
    check_contraction(t)?;
    let d = t.dim();
    let a = t.entries();
    let id = DMatrix::<C64>::identity(d, d);
    let dt = hermitian_part(&id - a.adjoint() * a).psd_sqrt()?;
    let dts = hermitian_part(&id - a * a.adjoint()).psd_sqrt()?;
    Ok((dt, dts))
}

fn hermitian_part(m: DMatrix<C64>) -> Operator {
    let sym = (&m + m.adjoint()).scale(0.5);
    Operator::general(sym).expect("square finite matrix")
}

/// `‖T D_T − D_{T*} T‖_max`.
pub fn intertwining_residual(t: &Operator, dt: &Operator, dts: &Operator) -> f64 {
    max_abs_deviation(
        &(t.entries() * dt.entries()),
        &(dts.entries() * t.entries()),
    )
}

fn check_contraction(t: &Operator) -> Result<()> {
    let norm = t.operator_norm();
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(Error::ContractViolation(format!(
            "operator norm {norm} exceeds 1 + {CONTRACTION_TOL:e}"
        )));
    }
    Ok(())
}

/// The enlarged unitary together with the block layout needed for `ι` and `P`.
#[derive(Debug, Clone)]
pub struct DilationPack {
    unitary: Operator,
    steps: usize,
    base_dim: usize,
}

impl DilationPack {
    /// Assembles a pack from raw parts without checking unitarity; for fixtures
    /// and negative controls.
    pub fn from_parts(entries: DMatrix<C64>, steps: usize, base_dim: usize) -> Result<Self> {
        let unitary = Operator::general(entries)?;
        check_dim((steps + 1) * base_dim, unitary.dim())?;
        Ok(DilationPack {
            unitary,
            steps,
            base_dim,
        })
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn total_dim(&self) -> usize {
        self.unitary.dim()
    }

    /// `ι f = (f, 0, …, 0)`.
    pub fn embed(&self, f: &HVector) -> Result<HVector> {
        check_dim(self.base_dim, f.dim())?;
        let mut coords = vec![C64::new(0.0, 0.0); self.total_dim()];
        coords[..self.base_dim].copy_from_slice(f.coords());
        HVector::new(coords)
    }

    /// `P v`: the first block of `v`.
    pub fn project(&self, v: &HVector) -> Result<HVector> {
        check_dim(self.total_dim(), v.dim())?;
        HVector::new(v.coords()[..self.base_dim].to_vec())
    }
}

pub fn build_dilation(t: &Operator, steps: usize) -> Result<DilationPack> {
    build_dilation_with(t, steps, DEFAULT_DILATION_BUDGET)
}

pub fn build_dilation_with(t: &Operator, steps: usize, budget: usize) -> Result<DilationPack> {
    if steps == 0 {
        return Err(Error::invalid("dilation needs N >= 1 steps"));
    }
    let d = t.dim();
    let total = (steps as u64 + 1).saturating_mul(d as u64);
    if total > budget as u64 {
        return Err(Error::Budget {
            what: "dilation dimension",
            required: total,
            budget: budget as u64,
        });
    }
    let (dt, dts) = defects(t)?;
    let total = total as usize;
    let n = steps;
    let mut u = DMatrix::<C64>::zeros(total, total);
    u.view_mut((0, 0), (d, d)).copy_from(t.entries());
    u.view_mut((0, n * d), (d, d)).copy_from(dts.entries());
    u.view_mut((d, 0), (d, d)).copy_from(dt.entries());
    u.view_mut((d, n * d), (d, d))
        .copy_from(&(-t.entries().adjoint()));
    for i in 2..=n {
        u.view_mut((i * d, (i - 1) * d), (d, d))
            .fill_with_identity();
    }
    let unitary = Operator::new(u, Role::Unitary)?;
    Ok(DilationPack {
        unitary,
        steps,
        base_dim: d,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DilationReport {
    pub dim: usize,
    #[serde(rename = "N")]
    pub steps: usize,
    pub unitarity_residual: f64,
    pub unitarity_tol: f64,
    /// `max_{j ≤ N} ‖P U^j ι − T^j‖_max` together with the sampled-vector errors.
    pub max_power_error: f64,
    pub intertwining_residual: f64,
    /// `max_f |V(T, f) − Σ_k ‖P(A_{n_{k+1}}(U) − A_{n_k}(U)) ι f‖|`; `None` when
    /// fewer than two checkpoints fit below `N`.
    pub functional_gap: Option<f64>,
    /// Whether `V(T, f) ≤ V(U, ι f)` held on every sampled `f`.
    pub dilated_dominates: bool,
    pub trials: usize,
    pub passed: bool,
}

/// Default checkpoints for the functional comparison: powers of two up to `N`.
pub fn default_checkpoints(steps: usize) -> Vec<u64> {
    std::iter::successors(Some(1u64), |&n| n.checked_mul(2))
        .take_while(|&n| n <= steps as u64)
        .collect()
}

pub fn verify_dilation(
    pack: &DilationPack,
    t: &Operator,
    trials: usize,
    seed: u64,
) -> Result<DilationReport> {
    verify_dilation_with(pack, t, trials, seed, &default_checkpoints(pack.steps))
}

/// Measures every property of the pack; violations are reported in the result.
pub fn verify_dilation_with(
    pack: &DilationPack,
    t: &Operator,
    trials: usize,
    seed: u64,
    nk: &[u64],
) -> Result<DilationReport> {
    check_dim(pack.base_dim, t.dim())?;
    let d = pack.base_dim;
    let n = pack.steps;
    let u = pack.unitary.entries();
    let unitarity_residual = pack.unitary.unitarity_residual();
    let unitarity_tol = UNITARY_TOL_PER_DIM * pack.total_dim() as f64;

    // Columnwise operator check: X_j = U^j ι against T^j.
    let mut max_power_error = 0.0f64;
    let mut x = DMatrix::<C64>::zeros(pack.total_dim(), d);
    x.view_mut((0, 0), (d, d)).fill_with_identity();
    let mut tj = DMatrix::<C64>::identity(d, d);
    for _ in 1..=n {
        x = u * &x;
        tj = t.entries() * &tj;
        let top = x.view((0, 0), (d, d)).into_owned();
        max_power_error = max_power_error.max(max_abs_deviation(&top, &tj));
    }

    let intertwining = match defects(t) {
        Ok((dt, dts)) => intertwining_residual(t, &dt, &dts),
        Err(_) => f64::INFINITY,
    };

    let nk = nk
        .iter()
        .copied()
        .filter(|&k| k as usize <= n)
        .collect::<Vec<_>>();
    let nk = if nk.len() >= 2 {
        Some(IndexSeq::new(nk)?)
    } else {
        None
    };
    let mut functional_gap: Option<f64> = None;
    let mut dilated_dominates = true;

    for trial in 0..trials {
        let f = random_unit_vector(d, derive_seed(seed, trial as u64))?;
        let mut v = pack.embed(&f)?;
        let mut w = f.clone();
        for _ in 1..=n {
            v = pack.unitary.apply(&v)?;
            w = t.apply(&w)?;
            max_power_error = max_power_error.max(pack.project(&v)?.distance(&w)?);
        }
        if let Some(nk) = &nk {
            let direct = variation_sum(t, &f, nk, 1.0)?;
            let trace = average_stream(
                &pack.unitary,
                &pack.embed(&f)?,
                &CheckpointPlan::for_variation(nk),
            )?;
            let mut through = 0.0;
            for w in nk.terms().windows(2) {
                let hi = pack.project(trace.get(w[1]).expect("checkpoint"))?;
                let lo = pack.project(trace.get(w[0]).expect("checkpoint"))?;
                through += hi.distance(&lo)?;
            }
            let full: f64 = variation_terms(&trace, nk)?.iter().sum();
            let gap = (direct - through).abs();
            functional_gap = Some(functional_gap.map_or(gap, |g| g.max(gap)));
            if direct > full + FUNCTIONAL_TOL {
                dilated_dominates = false;
            }
        }
    }

    let passed = unitarity_residual <= unitarity_tol
        && max_power_error <= POWER_TOL
        && intertwining <= INTERTWINING_TOL
        && functional_gap.is_none_or(|g| g <= FUNCTIONAL_TOL)
        && dilated_dominates;
    Ok(DilationReport {
        dim: d,
        steps: n,
        unitarity_residual,
        unitarity_tol,
        max_power_error,
        intertwining_residual: intertwining,
        functional_gap,
        dilated_dominates,
        trials,
        passed,
    })
}
