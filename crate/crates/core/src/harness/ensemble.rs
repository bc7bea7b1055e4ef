//! Random operator ensembles for the variation and oscillation functionals.

use nalgebra::Schur;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, ExperimentReport, TrialInputs, TrialRow};
use crate::averages::{
    contraction_oscillation_with, contraction_variation_with, oscillation_sum_with,
    variation_sum_with,
};
use crate::error::{Error, Result};
use crate::linalg::{HVector, Operator, Role};
use crate::sequences::IndexSeq;
use crate::symbol::SymbolFunctional;

/// Functional value for one trial; contractions go through the contraction entry points.
pub fn trial_value(
    cfg: &ExperimentConfig,
    inputs: &TrialInputs,
    nk: &IndexSeq,
    m: Option<&IndexSeq>,
) -> Result<f64> {
    let opts = cfg.stream_options();
    let contraction = inputs.op.role() == Role::Contraction;
    match (m, contraction) {
        (None, false) => variation_sum_with(&inputs.op, &inputs.f, nk, cfg.p, &opts),
        (None, true) => contraction_variation_with(&inputs.op, &inputs.f, nk, cfg.p, &opts),
        (Some(m), false) => oscillation_sum_with(&inputs.op, &inputs.f, nk, m, &opts),
        (Some(m), true) => contraction_oscillation_with(&inputs.op, &inputs.f, nk, m, &opts),
    }
}

/// Runs every trial of a `variation` or `oscillation` config on the current rayon pool.
///
/// Rows come back in trial order whatever the number of workers.
pub fn run_variation_ensemble(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let m = match cfg.kind {
        ExperimentKind::Variation => None,
        ExperimentKind::Oscillation => {
            Some(IndexSeq::new(cfg.m.clone().ok_or_else(|| {
                Error::invalid("oscillation needs an M sequence")
            })?)?)
        }
        other => {
            return Err(Error::invalid(format!(
                "run_variation_ensemble expects kind variation or oscillation, got {other:?}"
            )))
        }
    };
    let nk = IndexSeq::new(cfg.nk.clone())?;
    let rows: Vec<TrialRow> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let inputs = cfg.trial_inputs(trial)?;
            let value = trial_value(cfg, &inputs, &nk, m.as_ref())?;
            Ok(TrialRow::new(&inputs, value))
        })
        .collect::<Result<_>>()?;
    ExperimentReport::from_rows(rows, cfg.clone(), None)
}

/// `Σ_j |⟨f, v_j⟩| · S(θ_j)` over an eigenbasis `U v_j = e^{iθ_j} v_j` of a unitary,
/// where `S` is the scalar symbol functional.
///
/// Writing `f = Σ c_j v_j`, each operator difference is `Σ_j c_j Δ(γ_j) v_j`,
/// so the triangle inequality in each term bounds the operator functional
/// (with `p = 1`) by this envelope.
pub fn spectral_envelope(u: &Operator, f: &HVector, functional: &SymbolFunctional) -> Result<f64> {
    if u.role() != Role::Unitary {
        return Err(Error::invalid("spectral_envelope needs a unitary operator"));
    }
    let (q, t) = Schur::new(u.entries().clone()).unpack();
    let coeffs = q.ad_mul(f.as_dvector());
    Ok((0..u.dim())
        .map(|j| coeffs[j].norm() * functional.value_on_circle(t[(j, j)].arg()))
        .sum())
}
