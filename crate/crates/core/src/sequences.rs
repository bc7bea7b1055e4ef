//! Index sequences `(n_k)` and `M`, lacunarity certification, and window queries.
//!
//! Lacunarity checks are done in exact integer arithmetic: a ratio
//! `a/b ≥ β` for a double `β = m·2^e` is decided as `a·2^{-e} ≥ m·b` (or the
//! symmetric form when `e ≥ 0`) in 128-bit integers. The certified ratio is
//! then rounded to the nearest double, so `beta_certified ≥ beta_claimed`
//! whenever the exact ratios are.

use std::ops::Deref;
use std::path::Path;

use crate::error::{Error, Result};

/// Largest admissible term; sequences must fit in a signed 64-bit integer.
pub const MAX_TERM: u64 = i64::MAX as u64;

/// Strictly increasing list of positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSeq(Vec<u64>);

impl IndexSeq {
    pub fn new(terms: Vec<u64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("sequence must be non-empty"));
        }
        if terms[0] == 0 {
            return Err(Error::invalid("sequence terms must be positive"));
        }
        if let Some(&t) = terms.iter().find(|&&t| t > MAX_TERM) {
            return Err(Error::invalid(format!(
                "term {t} does not fit in a signed 64-bit integer"
            )));
        }
        if let Some(i) = terms.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "sequence is not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(IndexSeq(terms))
    }

    pub fn terms(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> u64 {
        self.0[0]
    }

    pub fn last(&self) -> u64 {
        self.0[self.0.len() - 1]
    }

    /// Terms `m` with `lo ≤ m < hi`, ascending. Empty when `lo ≥ hi`.
    pub fn window(&self, lo: u64, hi: u64) -> &[u64] {
        if lo >= hi {
            return &[];
        }
        let start = self.0.partition_point(|&m| m < lo);
        let end = self.0.partition_point(|&m| m < hi);
        &self.0[start..end]
    }
}

/// Strictly increasing sequence with a certified lacunarity constant `β > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LacunarySeq {
    seq: IndexSeq,
    beta_claimed: Option<f64>,
    beta_certified: f64,
}

impl LacunarySeq {
    /// Certifies an explicit list of terms.
    pub fn from_terms(terms: Vec<u64>) -> Result<Self> {
        let beta_certified = validate_lacunary(&terms)?;
        Ok(LacunarySeq {
            seq: IndexSeq(terms),
            beta_claimed: None,
            beta_certified,
        })
    }

    /// Certifies an existing index sequence.
    pub fn certify(seq: IndexSeq) -> Result<Self> {
        let beta_certified = validate_lacunary(seq.terms())?;
        Ok(LacunarySeq {
            seq,
            beta_claimed: None,
            beta_certified,
        })
    }

    pub fn beta_claimed(&self) -> Option<f64> {
        self.beta_claimed
    }

    /// Minimum consecutive ratio, correctly rounded.
    pub fn beta_certified(&self) -> f64 {
        self.beta_certified
    }

    pub fn as_index_seq(&self) -> &IndexSeq {
        &self.seq
    }

    pub fn into_index_seq(self) -> IndexSeq {
        self.seq
    }
}

impl Deref for LacunarySeq {
    type Target = IndexSeq;

    fn deref(&self) -> &IndexSeq {
        &self.seq
    }
}

/// `n_1 = n1`, `n_{k+1} = max(⌈β·n_k⌉, n_k + 1)`, with `⌈β·n_k⌉` computed exactly.
pub fn geometric_lacunary(beta: f64, count: usize, n1: u64) -> Result<LacunarySeq> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(Error::NotLacunary {
            index: 0,
            reason: format!("ratio bound beta = {beta} must be finite and > 1"),
        });
    }
    if count < 2 {
        return Err(Error::invalid("count must be at least 2"));
    }
    if n1 == 0 || n1 > MAX_TERM {
        return Err(Error::invalid(
            "n1 must be a positive signed 64-bit integer",
        ));
    }
    let (mant, exp) = decompose(beta);
    let mut terms = Vec::with_capacity(count);
    terms.push(n1);
    for index in 1..count {
        let prev = terms[index - 1];
        let next = ceil_scaled(mant, exp, prev)
            .filter(|&v| v <= MAX_TERM as u128)
            .ok_or(Error::Overflow { index })? as u64;
        let next = next.max(prev + 1);
        if next > MAX_TERM {
            return Err(Error::Overflow { index });
        }
        terms.push(next);
    }
    debug_assert!(terms.windows(2).all(|w| ratio_at_least(w[1], w[0], beta)));
    let beta_certified = validate_lacunary(&terms)?;
    Ok(LacunarySeq {
        seq: IndexSeq(terms),
        beta_claimed: Some(beta),
        beta_certified,
    })
}

/// Returns the minimum consecutive ratio of `terms` if every ratio exceeds 1.
///
/// A finite list is lacunary iff its minimum ratio is > 1; at least two
/// terms are needed for a ratio to exist.
pub fn validate_lacunary(terms: &[u64]) -> Result<f64> {
    if terms.len() < 2 {
        return Err(Error::invalid(
            "at least two terms are needed to certify a ratio",
        ));
    }
    if terms[0] == 0 {
        return Err(Error::NotLacunary {
            index: 0,
            reason: "terms must be positive".into(),
        });
    }
    let mut best = (terms[1], terms[0]);
    for (i, w) in terms.windows(2).enumerate() {
        let (prev, next) = (w[0], w[1]);
        if next <= prev {
            return Err(Error::NotLacunary {
                index: i + 1,
                reason: format!("ratio {next}/{prev} is not > 1"),
            });
        }
        if next > MAX_TERM {
            return Err(Error::NotLacunary {
                index: i + 1,
                reason: format!("term {next} does not fit in a signed 64-bit integer"),
            });
        }
        // next/prev < best.0/best.1
        if (next as u128) * (best.1 as u128) < (best.0 as u128) * (prev as u128) {
            best = (next, prev);
        }
    }
    Ok(rounded_ratio(best.0, best.1))
}

/// Free-function form of [`IndexSeq::window`].
pub fn window(m: &IndexSeq, lo: u64, hi: u64) -> Vec<u64> {
    m.window(lo, hi).to_vec()
}

/// Exact test of `num/den ≥ beta` for positive integers and a finite `beta > 0`.
pub fn ratio_at_least(num: u64, den: u64, beta: f64) -> bool {
    let (mant, exp) = decompose(beta);
    if exp >= 0 {
        // num ≥ mant·den·2^exp
        match (mant as u128)
            .checked_mul(den as u128)
            .and_then(|v| checked_shl(v, exp as u32))
        {
            Some(rhs) => (num as u128) >= rhs,
            None => false,
        }
    } else {
        // num·2^{-exp} ≥ mant·den
        let lhs = checked_shl(num as u128, (-exp) as u32);
        let rhs = (mant as u128) * (den as u128);
        lhs.is_none_or(|l| l >= rhs)
    }
}

/// Parses `geometric:<beta>:<count>[:<n1>]`, a comma-separated integer list,
/// or `@<path>` (one integer per line).
pub fn parse_seq_spec(spec: &str) -> Result<IndexSeq> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(Error::invalid(format!("bad geometric spec `{spec}`")));
        }
        let beta: f64 = parse_num(parts[0], spec)?;
        let count: usize = parse_num(parts[1], spec)?;
        let n1: u64 = match parts.get(2) {
            Some(p) => parse_num(p, spec)?,
            None => 1,
        };
        return Ok(geometric_lacunary(beta, count, n1)?.into_index_seq());
    }
    if let Some(path) = spec.strip_prefix('@') {
        return read_seq_file(path);
    }
    let terms = spec
        .split(',')
        .map(|t| parse_num(t.trim(), spec))
        .collect::<Result<Vec<u64>>>()?;
    IndexSeq::new(terms)
}

/// Reads one integer per line; blank lines and `#` comments are skipped.
pub fn read_seq_file(path: impl AsRef<Path>) -> Result<IndexSeq> {
    let text = std::fs::read_to_string(path)?;
    parse_seq_lines(&text)
}

pub fn parse_seq_lines(text: &str) -> Result<IndexSeq> {
    let terms = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| parse_num(l, l))
        .collect::<Result<Vec<u64>>>()?;
    IndexSeq::new(terms)
}

pub fn write_seq_lines(seq: &IndexSeq) -> String {
    let mut out = String::new();
    for t in seq.terms() {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

fn parse_num<T: std::str::FromStr>(s: &str, ctx: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::invalid(format!("cannot parse `{s}` in sequence spec `{ctx}`")))
}

/// Splits a finite positive double into `(m, e)` with `x = m·2^e` and `m` odd.
fn decompose(x: f64) -> (u64, i32) {
    debug_assert!(x.is_finite() && x > 0.0);
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let tz = mant.trailing_zeros();
    mant >>= tz;
    exp += tz as i32;
    (mant, exp)
}

/// `⌈m·2^e·n⌉` in 128-bit arithmetic, `None` on overflow.
fn ceil_scaled(mant: u64, exp: i32, n: u64) -> Option<u128> {
    let prod = (mant as u128).checked_mul(n as u128)?;
    if exp >= 0 {
        checked_shl(prod, exp as u32)
    } else {
        let s = (-exp) as u32;
        if s >= 128 {
            return Some(if prod == 0 { 0 } else { 1 });
        }
        let q = prod >> s;
        let rem = prod & ((1u128 << s) - 1);
        Some(if rem != 0 { q + 1 } else { q })
    }
}

fn checked_shl(v: u128, s: u32) -> Option<u128> {
    if v == 0 {
        return Some(0);
    }
    if s >= 128 || v.leading_zeros() < s {
        None
    } else {
        Some(v << s)
    }
}

/// `num/den` rounded to the nearest double.
fn rounded_ratio(num: u64, den: u64) -> f64 {
    let wide = (num as u128) << 64;
    let mut q = wide / den as u128;
    if !wide.is_multiple_of(den as u128) {
        // sticky bit: q carries ≥ 64 significant bits, far below the rounding position
        q |= 1;
    }
    q as f64 * 2f64.powi(-64)
}
