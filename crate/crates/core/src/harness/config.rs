//! Experiment configuration, operator specifications and per-trial reports.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::averages::{Engine, StreamOptions, DEFAULT_WORK_BUDGET};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::{
    derive_seed, make_diagonal_unitary, random_contraction, random_unit_vector, random_unitary,
    HVector, Operator,
};
use crate::sequences::validate_lacunary;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Contraction caps used by `mixed` and bare `random-contraction` specs.
pub const DEFAULT_CAPS: [f64; 3] = [0.5, 0.9, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Variation,
    Oscillation,
    Sweep,
    ConstantCurve,
    Diverge,
    DilationCheck,
    RojCheck,
}

impl ExperimentKind {
    /// Kinds whose sequences may be any strictly increasing list.
    pub fn allows_non_lacunary(self) -> bool {
        matches!(self, ExperimentKind::Diverge | ExperimentKind::RojCheck)
    }
}

/// Which operator each trial draws.
///
/// Text forms: `identity`, `diag:<θ1>,<θ2>,…`, `random-unitary`,
/// `random-contraction[:<cap>,…]`, `mixed[:<cap>,…]`. Multiple caps are used
/// in turn by trial index; `mixed` alternates unitaries (even trials) with
/// contractions (odd trials).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum OperatorSpec {
    Identity,
    Diag(Vec<f64>),
    RandomUnitary,
    RandomContraction(Vec<f64>),
    Mixed(Vec<f64>),
}

impl OperatorSpec {
    /// Dimension implied by the operator description, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            OperatorSpec::Diag(angles) => Some(angles.len()),
            _ => None,
        }
    }

    pub fn build(&self, dim: usize, trial: usize, trial_seed: u64) -> Result<(Operator, String)> {
        let op_seed = derive_seed(trial_seed, 1);
        match self {
            OperatorSpec::Identity => Ok((Operator::identity(dim)?, "identity".into())),
            OperatorSpec::Diag(angles) => {
                if angles.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: angles.len(),
                        got: dim,
                    });
                }
                Ok((make_diagonal_unitary(angles)?, "diag".into()))
            }
            OperatorSpec::RandomUnitary => Ok((random_unitary(dim, op_seed)?, "unitary".into())),
            OperatorSpec::RandomContraction(caps) => {
                let cap = caps[trial % caps.len()];
                Ok((
                    random_contraction(dim, op_seed, cap)?,
                    format!("contraction:{cap}"),
                ))
            }
            OperatorSpec::Mixed(caps) => {
                if trial.is_multiple_of(2) {
                    Ok((random_unitary(dim, op_seed)?, "unitary".into()))
                } else {
                    let cap = caps[(trial / 2) % caps.len()];
                    Ok((
                        random_contraction(dim, op_seed, cap)?,
                        format!("contraction:{cap}"),
                    ))
                }
            }
        }
    }
}

fn parse_list(body: &str, what: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad {what} '{s}'")))
        })
        .collect()
}

fn parse_caps(body: Option<&str>) -> Result<Vec<f64>> {
    let caps = match body {
        None => DEFAULT_CAPS.to_vec(),
        Some(b) => parse_list(b, "norm cap")?,
    };
    if let Some(c) = caps.iter().find(|&&c| !(c > 0.0 && c <= 1.0)) {
        return Err(Error::invalid(format!("norm cap {c} is outside (0, 1]")));
    }
    Ok(caps)
}

impl FromStr for OperatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, body) = match s.split_once(':') {
            Some((h, b)) => (h, Some(b)),
            None => (s, None),
        };
        match (head, body) {
            ("identity", None) => Ok(OperatorSpec::Identity),
            ("random-unitary", None) => Ok(OperatorSpec::RandomUnitary),
            ("diag", Some(b)) => {
                let angles = parse_list(b, "angle")?;
                if angles.iter().any(|a| !a.is_finite()) {
                    return Err(Error::invalid("diag angles must be finite"));
                }
                Ok(OperatorSpec::Diag(angles))
            }
            ("random-contraction", b) => Ok(OperatorSpec::RandomContraction(parse_caps(b)?)),
            ("mixed", b) => Ok(OperatorSpec::Mixed(parse_caps(b)?)),
            _ => Err(Error::invalid(format!(
                "unknown operator spec '{s}'; expected identity, diag:<angles>, \
                 random-unitary, random-contraction:<cap> or mixed"
            ))),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::Identity => write!(f, "identity"),
            OperatorSpec::Diag(a) => write!(f, "diag:{}", join(a)),
            OperatorSpec::RandomUnitary => write!(f, "random-unitary"),
            OperatorSpec::RandomContraction(c) => write!(f, "random-contraction:{}", join(c)),
            OperatorSpec::Mixed(c) => write!(f, "mixed:{}", join(c)),
        }
    }
}

impl From<OperatorSpec> for String {
    fn from(s: OperatorSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for OperatorSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// `(n_k)`; may be empty for `roj-check`, which then draws a sequence per trial.
    pub nk: Vec<u64>,
    pub m: Option<Vec<u64>>,
    pub p: f64,
    pub op: OperatorSpec,
    pub engine: Engine,
    pub budget: u64,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, nk: Vec<u64>) -> Self {
        ExperimentConfig {
            kind,
            dims: vec![1],
            trials: 1,
            seed: 0,
            nk,
            m: None,
            p: 1.0,
            op: OperatorSpec::RandomUnitary,
            engine: Engine::Stream,
            budget: DEFAULT_WORK_BUDGET,
        }
    }

    pub fn stream_options(&self) -> StreamOptions {
        StreamOptions {
            budget: self.budget,
            engine: self.engine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::invalid(
                "dims must be a non-empty list of positive integers",
            ));
        }
        if let Some(d) = self.op.fixed_dim() {
            if let Some(&bad) = self.dims.iter().find(|&&x| x != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: bad,
                });
            }
        }
        if !self.kind.allows_non_lacunary() {
            validate_lacunary(&self.nk)?;
            if let Some(m) = &self.m {
                validate_lacunary(m)?;
            }
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.seed, trial as u64)
    }

    pub fn trial_dim(&self, trial: usize) -> usize {
        self.dims[trial % self.dims.len()]
    }

    /// The operator and unit vector drawn for one trial.
    pub fn trial_inputs(&self, trial: usize) -> Result<TrialInputs> {
        let seed = self.trial_seed(trial);
        let dim = self.trial_dim(trial);
        let (op, label) = self.op.build(dim, trial, seed)?;
        let f = random_unit_vector(dim, derive_seed(seed, 2))?;
        Ok(TrialInputs {
            trial,
            seed,
            dim,
            op,
            label,
            f,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrialInputs {
    pub trial: usize,
    pub seed: u64,
    pub dim: usize,
    pub op: Operator,
    pub label: String,
    pub f: HVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub dim: usize,
    pub operator: String,
    pub value: f64,
    pub f_norm: f64,
    pub ratio: f64,
}

impl TrialRow {
    pub fn new(inputs: &TrialInputs, value: f64) -> Self {
        let f_norm = inputs.f.norm();
        TrialRow {
            trial: inputs.trial,
            seed: inputs.seed,
            dim: inputs.dim,
            operator: inputs.label.clone(),
            value,
            f_norm,
            ratio: value / f_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub trials: usize,
    pub max_ratio: f64,
    /// First trial attaining `max_ratio`.
    pub argmax_trial: usize,
    pub mean_ratio: f64,
    /// Bound asserted by the experiment, if any, and whether every row met it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound_holds: Option<bool>,
    pub config: ExperimentConfig,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    pub summary: ReportSummary,
}

pub const CSV_HEADER: [&str; 7] = [
    "trial", "seed", "dim", "operator", "value", "f_norm", "ratio",
];

impl ExperimentReport {
    /// Assembles the summary from the rows; rows must be non-empty.
    pub fn from_rows(
        rows: Vec<TrialRow>,
        config: ExperimentConfig,
        bound: Option<f64>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("a report needs at least one row"));
        }
        let (argmax_trial, max_ratio) =
            rows.iter()
                .map(|r| (r.trial, r.ratio))
                .fold((0, f64::NEG_INFINITY), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });
        let mean_ratio = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64;
        let bound_holds = bound.map(|b| rows.iter().all(|r| r.ratio <= b));
        Ok(ExperimentReport {
            summary: ReportSummary {
                trials: rows.len(),
                max_ratio,
                argmax_trial,
                mean_ratio,
                bound,
                bound_holds,
                config,
                version: CODE_VERSION.to_string(),
            },
            rows,
        })
    }

    /// Recomputes every derived field and compares exactly.
    pub fn check_integrity(&self) -> Result<()> {
        for r in &self.rows {
            if r.ratio != r.value / r.f_norm {
                return Err(Error::ContractViolation(format!(
                    "row {}: ratio {} != value/f_norm {}",
                    r.trial,
                    r.ratio,
                    r.value / r.f_norm
                )));
            }
        }
        let rebuilt = Self::from_rows(
            self.rows.clone(),
            self.summary.config.clone(),
            self.summary.bound,
        )?;
        if rebuilt.summary.max_ratio != self.summary.max_ratio
            || rebuilt.summary.argmax_trial != self.summary.argmax_trial
            || rebuilt.summary.trials != self.summary.trials
            || rebuilt.summary.bound_holds != self.summary.bound_holds
        {
            return Err(Error::ContractViolation(
                "summary does not match the rows it was built from".into(),
            ));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.rows {
            wtr.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                r.dim.to_string(),
                r.operator.clone(),
                fmt_f64(r.value),
                fmt_f64(r.f_norm),
                fmt_f64(r.ratio),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv_rows(path: impl AsRef<Path>) -> Result<Vec<TrialRow>> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::invalid(format!("unexpected CSV header {header:?}")));
        }
        rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a JSON report and verifies its integrity.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: ExperimentReport = serde_json::from_str(text)?;
        report.check_integrity()?;
        Ok(report)
    }
}
