//! Dense complex linear algebra on finite-dimensional Hilbert spaces.
//!
//! [`HVector`] models a vector of `ℂ^d` with the Euclidean norm and
//! [`Operator`] a square complex matrix tagged with the structural role it
//! is expected to satisfy. Roles are checked when an operator is built, so a
//! value tagged [`Role::Unitary`] or [`Role::Contraction`] always satisfies
//! its invariant up to the crate tolerances.

mod random;

pub use random::{derive_seed, random_contraction, random_unit_vector, random_unitary, Prng};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Per-dimension unitarity tolerance: `‖A*A − I‖_max ≤ 1e-10·dim`.
pub const UNITARY_TOL_PER_DIM: f64 = 1e-10;
/// Slack allowed above 1 for the operator norm of a contraction.
pub const CONTRACTION_TOL: f64 = 1e-9;
/// Negative eigenvalues down to `-PSD_CLIP_TOL` are treated as rounding and clipped.
pub const PSD_CLIP_TOL: f64 = 1e-10;
/// Maximum entrywise deviation from `H*` accepted by [`Operator::psd_sqrt`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const NORM_REL_TOL: f64 = 1e-13;
const NORM_MAX_ITERS: usize = 50_000;

/// Vector of a finite-dimensional complex Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct HVector(DVector<C64>);

impl HVector {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("vector dimension must be at least 1"));
        }
        if coords
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("vector coordinates must be finite"));
        }
        Ok(HVector(DVector::from_vec(coords)))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// The `i`-th standard basis vector of `ℂ^dim`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::invalid(format!(
                "basis index {i} out of range for dim {dim}"
            )));
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![C64::new(0.0, 0.0); dim])
    }

    pub(crate) fn from_dvector(v: DVector<C64>) -> Self {
        debug_assert!(!v.is_empty());
        HVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn coords(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn scale(&self, c: C64) -> HVector {
        HVector(&self.0 * c)
    }

    pub fn sub(&self, other: &HVector) -> Result<HVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(HVector(&self.0 - &other.0))
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &HVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn inner(&self, other: &HVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.dotc(&other.0))
    }
}

/// Structural role an [`Operator`] is certified to play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Unitary,
    Contraction,
    General,
}

/// Square complex matrix acting on `ℂ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: DMatrix<C64>,
    role: Role,
}

impl Operator {
    /// Builds an operator and checks the invariant implied by `role`.
    pub fn new(entries: DMatrix<C64>, role: Role) -> Result<Self> {
        let op = Self::general(entries)?;
        op.with_role(role)
    }

    /// Builds an operator with [`Role::General`]; only the shape is checked.
    pub fn general(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::invalid(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::invalid("operator dimension must be at least 1"));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("operator entries must be finite"));
        }
        Ok(Operator {
            entries,
            role: Role::General,
        })
    }

    /// Re-tags the operator, verifying the new role's invariant.
    pub fn with_role(mut self, role: Role) -> Result<Self> {
        match role {
            Role::Unitary => {
                let tol = UNITARY_TOL_PER_DIM * self.dim() as f64;
                let res = self.unitarity_residual();
                if res > tol {
                    return Err(Error::ContractViolation(format!(
                        "unitarity residual {res:e} exceeds {tol:e}"
                    )));
                }
            }
            Role::Contraction => {
                let norm = self.operator_norm();
                if norm > 1.0 + CONTRACTION_TOL {
                    return Err(Error::ContractViolation(format!(
                        "operator norm {norm} exceeds 1 + {CONTRACTION_TOL:e}"
                    )));
                }
            }
            Role::General => {}
        }
        self.role = role;
        Ok(self)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim), Role::Unitary)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(dim, dim), Role::Contraction)
    }

    /// Diagonal operator with the given entries; the role is inferred from the moduli.
    pub fn diagonal(diag: &[C64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("diagonal must be non-empty"));
        }
        let op = Self::general(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))?;
        let max_mod = diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = UNITARY_TOL_PER_DIM * diag.len() as f64;
        if diag.iter().all(|z| (z.norm_sqr() - 1.0).abs() <= tol) {
            op.with_role(Role::Unitary)
        } else if max_mod <= 1.0 + CONTRACTION_TOL {
            op.with_role(Role::Contraction)
        } else {
            Ok(op)
        }
    }

    /// 1×1 operator acting as multiplication by `c`.
    pub fn scalar(c: C64) -> Result<Self> {
        Self::diagonal(&[c])
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn apply(&self, v: &HVector) -> Result<HVector> {
        check_dim(self.dim(), v.dim())?;
        Ok(HVector(&self.entries * &v.0))
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            entries: self.entries.adjoint(),
            role: self.role,
        }
    }

    /// Matrix product `self · rhs`, tagged [`Role::General`].
    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Operator {
            entries: &self.entries * &rhs.entries,
            role: Role::General,
        })
    }

    /// `‖A*A − I‖_max`.
    pub fn unitarity_residual(&self) -> f64 {
        let gram = self.entries.adjoint() * &self.entries;
        max_abs_deviation(&gram, &DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    /// `‖A − A*‖_max`.
    pub fn hermitian_residual(&self) -> f64 {
        max_abs_deviation(&self.entries, &self.entries.adjoint())
    }

    /// Largest singular value, by power iteration on `A*A`.
    ///
    /// The iteration starts from the normalized all-ones vector and runs
    /// until the Rayleigh quotient changes by less than `1e-13` relative. A
    /// second run from an index-weighted start covers the case where the
    /// all-ones vector has no component along the top singular space; the
    /// larger of the two estimates is returned.
    pub fn operator_norm(&self) -> f64 {
        let d = self.dim();
        let ones = DVector::from_element(d, C64::new(1.0, 0.0));
        let weighted = DVector::from_fn(d, |i, _| C64::new(1.0 + (i + 1) as f64 / d as f64, 0.0));
        let first = power_iteration(&self.entries, ones);
        let second = power_iteration(&self.entries, weighted);
        first.max(second).sqrt()
    }

    /// Hermitian positive-semidefinite square root via eigendecomposition.
    pub fn psd_sqrt(&self) -> Result<Operator> {
        let herm = self.hermitian_residual();
        if herm > HERMITIAN_TOL {
            return Err(Error::invalid(format!(
                "psd_sqrt needs a Hermitian matrix, deviation {herm:e}"
            )));
        }
        let sym = (&self.entries + self.entries.adjoint()).scale(0.5);
        let eig = sym.symmetric_eigen();
        let mut roots = Vec::with_capacity(self.dim());
        for &lambda in eig.eigenvalues.iter() {
            if lambda < -PSD_CLIP_TOL {
                return Err(Error::NotPositiveSemidefinite {
                    eigenvalue: lambda,
                    tol: PSD_CLIP_TOL,
                });
            }
            roots.push(C64::new(lambda.max(0.0).sqrt(), 0.0));
        }
        let v = &eig.eigenvectors;
        let scaled = v * DMatrix::from_diagonal(&DVector::from_vec(roots));
        Operator::general(scaled * v.adjoint())
    }
}

/// Power iteration on `A*A`, returning the converged Rayleigh quotient `λ ≈ σ_max²`.
fn power_iteration(a: &DMatrix<C64>, start: DVector<C64>) -> f64 {
    let d = a.nrows();
    let mut v = start.normalize();
    let mut w = DVector::zeros(d);
    let mut u = DVector::zeros(d);
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut prev = f64::NAN;
    let mut lambda = 0.0;
    for _ in 0..NORM_MAX_ITERS {
        w.gemv(one, a, &v, zero);
        lambda = w.norm_squared();
        u.gemv_ad(one, a, &w, zero);
        let nrm = u.norm();
        if nrm == 0.0 {
            return lambda;
        }
        v.copy_from(&u);
        v.unscale_mut(nrm);
        if (lambda - prev).abs() <= NORM_REL_TOL * lambda {
            break;
        }
        prev = lambda;
    }
    lambda
}

/// Diagonal unitary `diag(e^{iθ_1}, …, e^{iθ_d})`: the finite model of a
/// multiplication operator on the circle.
pub fn make_diagonal_unitary(phases: &[f64]) -> Result<Operator> {
    if phases.is_empty() {
        return Err(Error::invalid("phase list must be non-empty"));
    }
    if phases.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("phases must be finite"));
    }
    let diag: Vec<C64> = phases.iter().map(|&t| C64::cis(t)).collect();
    Operator::general(DMatrix::from_diagonal(&DVector::from_vec(diag)))?.with_role(Role::Unitary)
}

pub fn operator_norm(a: &Operator) -> f64 {
    a.operator_norm()
}

pub fn psd_sqrt(h: &Operator) -> Result<Operator> {
    h.psd_sqrt()
}

pub fn is_unitary(a: &Operator, tol: f64) -> bool {
    a.is_unitary(tol)
}

pub(crate) fn max_abs_deviation(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
