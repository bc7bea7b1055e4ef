//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 budget or I/O failure,
//! 4 a failed check (a bound that did not hold, a dilation that did not certify).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, ExperimentReport, OperatorSpec};
use super::experiments::{
    constant_curve, constant_table, dilation_check, divergence_demo, roj_check, write_curve_csv,
    write_divergence_csv,
};
use super::{ensemble::run_variation_ensemble, pool};
use crate::averages::{Engine, DEFAULT_WORK_BUDGET};
use crate::dilation::DEFAULT_DILATION_BUDGET;
use crate::error::{Error, Result};
use crate::sequences::{
    geometric_lacunary, parse_seq_spec, read_seq_file, validate_lacunary, IndexSeq, LacunarySeq,
};
use crate::symbol::{sweep_with, SweepConfig, SymbolFunctional};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "varosc",
    version,
    about = "Variation and oscillation of ergodic averages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the supremum of the scalar symbol functional over θ.
    Sweep(SweepArgs),
    /// Variation functional over a random operator ensemble.
    Variation(EnsembleArgs),
    /// Oscillation functional over a random operator ensemble (needs --m-seq).
    Oscillation(EnsembleArgs),
    /// Sweep estimates as a function of β (and of α for M with --alpha).
    ConstantCurve(CurveArgs),
    /// Growth of the variation along n_k = k for U = −1.
    Diverge(DivergeArgs),
    /// Build and certify finite unitary dilations of random contractions.
    Dilate(DilateArgs),
    /// Square variation over arbitrary increasing sequences against the constant 25.
    RojCheck(EnsembleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SeqArgs {
    /// Ratio of a geometric sequence (used with --count and --n1).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 30)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    n1: u64,
    /// Inline sequence: `geometric:<beta>:<count>[:<n1>]`, `a,b,c` or `@file`.
    #[arg(long, conflicts_with_all = ["beta", "seq_file"])]
    seq: Option<String>,
    /// One integer per line; blank lines and `#` comments are skipped.
    #[arg(long, conflicts_with = "beta")]
    seq_file: Option<PathBuf>,
    /// The set M for oscillation, in the --seq grammar.
    #[arg(long)]
    m_seq: Option<String>,
    /// Reject sequences whose certified β is below --min-beta.
    #[arg(long)]
    require_lacunary: bool,
    #[arg(long)]
    min_beta: Option<f64>,
}

impl SeqArgs {
    fn nk(&self) -> Result<Option<IndexSeq>> {
        let seq = if let Some(s) = &self.seq {
            Some(parse_seq_spec(s)?)
        } else if let Some(p) = &self.seq_file {
            Some(read_seq_file(p)?)
        } else if let Some(beta) = self.beta {
            Some(geometric_lacunary(beta, self.count, self.n1)?.into_index_seq())
        } else {
            None
        };
        if let Some(s) = &seq {
            if self.require_lacunary || self.min_beta.is_some() {
                let beta = validate_lacunary(s.terms())?;
                let min = self.min_beta.unwrap_or(1.0);
                if beta < min || beta <= 1.0 {
                    return Err(Error::invalid(format!(
                        "certified beta {beta} is below the required minimum {min}"
                    )));
                }
            }
        }
        Ok(seq)
    }

    fn require_nk(&self) -> Result<IndexSeq> {
        self.nk()?
            .ok_or_else(|| Error::invalid("no sequence given; use --seq, --seq-file or --beta"))
    }

    fn m(&self) -> Result<Option<IndexSeq>> {
        self.m_seq.as_deref().map(parse_seq_spec).transpose()
    }
}

#[derive(Debug, Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
    #[arg(long, default_value_t = 40)]
    refine: usize,
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    #[command(flatten)]
    seq: SeqArgs,
    /// Dimensions, used in turn by trial index.
    #[arg(long, value_delimiter = ',')]
    dim: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// identity | diag:<angles> | random-unitary | random-contraction:<cap> | mixed
    #[arg(long)]
    op: Option<String>,
    /// Cap on n_max·dim² for the streaming engine.
    #[arg(long, default_value_t = DEFAULT_WORK_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value_t = Engine::Stream)]
    engine: Engine,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// Comma-separated β values.
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    /// Comma-separated α values for M; switches to the oscillation table.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    count: usize,
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
    #[arg(long, default_value_t = 40)]
    refine: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct DivergeArgs {
    #[arg(long, default_value_t = 10_000)]
    n_max: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct DilateArgs {
    #[arg(long, value_delimiter = ',')]
    dim: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "random-contraction:0.9")]
    op: String,
    /// Number of certified power steps N.
    #[arg(long, default_value_t = 32)]
    steps: usize,
    /// Random vectors per dilation.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Pass threshold for the power and functional errors.
    #[arg(long, default_value_t = crate::dilation::POWER_TOL)]
    tol: f64,
    /// Cap on the dilation dimension (N+1)·d.
    #[arg(long, default_value_t = DEFAULT_DILATION_BUDGET as u64)]
    budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    let result =
        pool::worker_count().and_then(|w| pool::with_workers(w, || dispatch(cli.command))?);
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Budget { .. } | Error::Io(_) => EXIT_RESOURCE,
        _ => EXIT_INVALID,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Sweep(a) => sweep(a),
        Command::Variation(a) => ensemble(a, ExperimentKind::Variation),
        Command::Oscillation(a) => ensemble(a, ExperimentKind::Oscillation),
        Command::RojCheck(a) => ensemble(a, ExperimentKind::RojCheck),
        Command::ConstantCurve(a) => curve(a),
        Command::Diverge(a) => diverge(a),
        Command::Dilate(a) => dilate(a),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `dir/name.csv` → `dir/name.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.json"))
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let nk = LacunarySeq::certify(a.seq.require_nk()?)?;
    let functional = match a.seq.m()? {
        Some(m) => SymbolFunctional::oscillation(&nk, &m)?,
        None => SymbolFunctional::variation(&nk)?,
    };
    let cfg = SweepConfig {
        grid_points: a.grid,
        refine_iters: a.refine,
        theta_min: a.theta_min,
        theta_max: a.theta_max,
    };
    let result = sweep_with(&functional, &cfg)?;
    let summary = result.summary();
    match (&a.out.out, a.out.format) {
        (Some(path), Format::Csv) => {
            let mut w = create(path)?;
            result.write_csv(&mut w)?;
            w.flush()?;
            write_json_file(&summary_path(path), &summary)?;
        }
        (Some(path), Format::Json) => write_json_file(path, &summary)?,
        (None, _) => {}
    }
    print_json(&summary)?;
    Ok(EXIT_OK)
}

fn ensemble(a: EnsembleArgs, kind: ExperimentKind) -> Result<i32> {
    let nk = match kind {
        ExperimentKind::RojCheck => a.seq.nk()?.map(|s| s.terms().to_vec()).unwrap_or_default(),
        _ => a.seq.require_nk()?.terms().to_vec(),
    };
    let mut cfg = ExperimentConfig::new(kind, nk);
    let default_op = match kind {
        ExperimentKind::RojCheck => "mixed",
        _ => "random-unitary",
    };
    cfg.op =
        a.op.as_deref()
            .unwrap_or(default_op)
            .parse::<OperatorSpec>()?;
    cfg.dims = if !a.dim.is_empty() {
        a.dim.clone()
    } else if let Some(d) = cfg.op.fixed_dim() {
        vec![d]
    } else if kind == ExperimentKind::RojCheck {
        vec![1, 2, 4, 8, 16]
    } else {
        vec![1]
    };
    cfg.trials = a.trials.unwrap_or(if kind == ExperimentKind::RojCheck {
        500
    } else {
        1
    });
    cfg.seed = a.seed;
    cfg.p = a.p;
    cfg.m = a.seq.m()?.map(|m| m.terms().to_vec());
    cfg.engine = a.engine;
    cfg.budget = a.budget;

    let report = match kind {
        ExperimentKind::RojCheck => roj_check(&cfg)?,
        _ => run_variation_ensemble(&cfg)?,
    };
    write_report(&report, &a.out)?;
    print_json(&report.summary)?;
    Ok(if report.summary.bound_holds == Some(false) {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

fn write_report(report: &ExperimentReport, out: &OutArgs) -> Result<()> {
    let Some(path) = &out.out else { return Ok(()) };
    match out.format {
        Format::Csv => {
            let mut w = create(path)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            write_json_file(&summary_path(path), &report.summary)
        }
        Format::Json => write_json_file(path, report),
    }
}

fn curve(a: CurveArgs) -> Result<i32> {
    let rows = if a.alpha.is_empty() {
        constant_curve(&a.beta, a.count, a.grid, a.refine)?
    } else {
        constant_table(&a.beta, &a.alpha, a.count, a.grid, a.refine)?
    };
    match (&a.out.out, a.out.format) {
        (Some(path), Format::Csv) => {
            let mut w = create(path)?;
            write_curve_csv(&rows, &mut w)?;
            w.flush()?;
        }
        (Some(path), Format::Json) => write_json_file(path, &rows)?,
        (None, _) => {}
    }
    print_json(&rows)?;
    Ok(EXIT_OK)
}

fn diverge(a: DivergeArgs) -> Result<i32> {
    let rows = divergence_demo(a.n_max)?;
    match (&a.out.out, a.out.format) {
        (Some(path), Format::Csv) => {
            let mut w = create(path)?;
            write_divergence_csv(&rows, &mut w)?;
            w.flush()?;
        }
        (Some(path), Format::Json) => write_json_file(path, &rows)?,
        (None, _) => {}
    }
    print_json(&rows)?;
    Ok(EXIT_OK)
}

fn dilate(a: DilateArgs) -> Result<i32> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::DilationCheck, vec![]);
    cfg.op = a.op.parse()?;
    cfg.dims = if a.dim.is_empty() {
        vec![cfg.op.fixed_dim().unwrap_or(4)]
    } else {
        a.dim.clone()
    };
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    let budget = usize::try_from(a.budget).unwrap_or(usize::MAX);
    let mut batch = dilation_check(&cfg, a.steps, a.samples, budget)?;
    for r in &mut batch.reports {
        r.passed = r.unitarity_residual <= r.unitarity_tol
            && r.max_power_error <= a.tol
            && r.functional_gap.is_none_or(|g| g <= a.tol)
            && r.dilated_dominates;
    }
    batch.all_passed = batch.reports.iter().all(|r| r.passed);
    if let Some(path) = &a.out {
        write_json_file(path, &batch)?;
    }
    print_json(&batch)?;
    Ok(if batch.all_passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn summary_path_replaces_extension() {
        assert_eq!(
            summary_path(Path::new("/tmp/x/sweep.csv")),
            PathBuf::from("/tmp/x/sweep.summary.json")
        );
        assert_eq!(
            summary_path(Path::new("rows")),
            PathBuf::from("rows.summary.json")
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["varosc", "--help"]), EXIT_OK);
        assert_eq!(run(["varosc", "sweep", "--bogus"]), EXIT_INVALID);
        assert_eq!(
            exit_code(&Error::Budget {
                what: "x",
                required: 2,
                budget: 1
            }),
            EXIT_RESOURCE
        );
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_INVALID);
    }
}
