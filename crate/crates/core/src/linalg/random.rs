//! Reproducible random ensembles.
//!
//! All randomness flows through [`Prng`], a xoshiro256++ generator whose
//! 256-bit state is expanded from a 64-bit seed with SplitMix64. Uniform
//! doubles take the top 53 bits of each output (`(x >> 11) · 2^-53`), and
//! standard complex Gaussians `(z₀ + i z₁)/√2` come from one Box–Muller pair
//! `z₀ = r cos 2πu₂`, `z₁ = r sin 2πu₂`, `r = √(−2 ln(1 − u₁))`.
//! Matrices are filled in column-major order.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::{DMatrix, DVector};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

use super::{HVector, Operator, Role, C64};
use crate::error::{Error, Result};

/// One SplitMix64 step applied to `seed ^ stream`.
///
/// Used to derive per-trial seeds so that trial `i` sees the same stream no
/// matter how trials are scheduled across workers.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    SplitMix64::seed_from_u64(seed ^ stream).next_u64()
}

#[derive(Debug, Clone)]
pub struct Prng(Xoshiro256PlusPlus);

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn next_range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let span = hi - lo + 1;
        lo + (self.next_f64() * span as f64) as u64 % span
    }

    /// Standard complex Gaussian, `E|z|² = 1`.
    pub fn complex_gaussian(&mut self) -> C64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        C64::new(r * c, r * s) * FRAC_1_SQRT_2
    }

    pub fn gaussian_matrix(&mut self, dim: usize) -> DMatrix<C64> {
        DMatrix::from_fn(dim, dim, |_, _| self.complex_gaussian())
    }
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian
/// matrix, with `Q` rescaled column-wise by `R_jj/|R_jj|`.
pub fn random_unitary(dim: usize, seed: u64) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let z = Prng::new(seed).gaussian_matrix(dim);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    Operator::new(q, Role::Unitary)
}

/// Complex Gaussian matrix rescaled so that its largest singular value equals `norm_cap`.
pub fn random_contraction(dim: usize, seed: u64, norm_cap: f64) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(norm_cap > 0.0 && norm_cap <= 1.0) {
        return Err(Error::invalid(format!(
            "norm_cap must lie in (0, 1], got {norm_cap}"
        )));
    }
    let z = Prng::new(seed).gaussian_matrix(dim);
    let sigma = z.singular_values().max();
    let scaled = z * C64::new(norm_cap / sigma, 0.0);
    Operator::new(scaled, Role::Contraction)
}

/// Complex Gaussian vector normalized to unit length.
pub fn random_unit_vector(dim: usize, seed: u64) -> Result<HVector> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut rng = Prng::new(seed);
    let v = DVector::from_fn(dim, |_, _| rng.complex_gaussian());
    Ok(HVector::from_dvector(v.normalize()))
}
