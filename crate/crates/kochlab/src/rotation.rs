//! Continued fractions, Diophantine diagnostics and exact circle arithmetic.
//!
//! Points on the circle are stored as 128-bit fixed-point fractions of the
//! unit interval, so addition and integer multiples are exact modulo 1 and
//! orbits of length 10^7 and beyond carry no accumulated rounding error
//! beyond the initial representation of alpha (below 2^-128 per step).

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Maximum |n| accepted by orbit arithmetic. The representation error of a
/// single orbit step is 2^-128, so even at the budget the accumulated error
/// stays far below 2^-64 per unit of |n|.
pub const ORBIT_BUDGET: i64 = 1 << 40;

fn one_shl_128() -> BigUint {
    BigUint::from(1u8) << 128
}

/// A point of the circle R/Z as a 128-bit binary fraction: value = bits / 2^128.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct CirclePos(u128);

impl CirclePos {
    pub const ZERO: CirclePos = CirclePos(0);

    pub fn from_bits(bits: u128) -> Self {
        CirclePos(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    /// Reduce an f64 modulo 1. Carries only the 53 bits of the input.
    pub fn from_f64(x: f64) -> Self {
        let r = x.rem_euclid(1.0);
        if r >= 1.0 {
            return CirclePos(0);
        }
        let hi = (r * 18446744073709551616.0).floor(); // 2^64
        let lo = (r * 18446744073709551616.0 - hi) * 18446744073709551616.0;
        CirclePos(((hi as u128) << 64) | (lo as u128))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 340282366920938463463374607431768211456.0 // 2^128
    }

    /// 1 - x as an f64 with full relative precision (0 maps to 0).
    pub fn complement_f64(self) -> f64 {
        self.0.wrapping_neg() as f64 / 340282366920938463463374607431768211456.0
    }

    pub fn add(self, other: CirclePos) -> CirclePos {
        CirclePos(self.0.wrapping_add(other.0))
    }

    pub fn sub(self, other: CirclePos) -> CirclePos {
        CirclePos(self.0.wrapping_sub(other.0))
    }

    /// n * x mod 1, exact for the stored fraction (wrapping mul is mod 2^128).
    pub fn mul_int(self, n: i64) -> CirclePos {
        let m = self.0.wrapping_mul(n.unsigned_abs() as u128);
        if n >= 0 {
            CirclePos(m)
        } else {
            CirclePos(m.wrapping_neg())
        }
    }

    pub fn dist(self, other: CirclePos) -> CircleDistance {
        let d = self.0.wrapping_sub(other.0);
        CircleDistance(d.min(d.wrapping_neg()))
    }

    pub fn dist_to_zero(self) -> CircleDistance {
        self.dist(CirclePos::ZERO)
    }
}

/// Distance ||x - y|| to the nearest integer, in [0, 1/2].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct CircleDistance(u128);

impl CircleDistance {
    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 340282366920938463463374607431768211456.0
    }
}

/// ||x - y|| as a plain f64.
pub fn circle_dist(x: CirclePos, y: CirclePos) -> CircleDistance {
    x.dist(y)
}

/// An irrational rotation angle with its continued-fraction data.
///
/// `cf_terms[k]` is a_{k+1} and `convergents[k]` is (p_{k+1}, q_{k+1}) in the
/// usual indexing alpha = [0; a_1, a_2, ...], q_{n+1} = a_{n+1} q_n + q_{n-1}.
#[derive(Clone, Debug)]
pub struct Rotation {
    alpha: CirclePos,
    cf_terms: Vec<u64>,
    convergents: Vec<(u128, u128)>,
}

impl Rotation {
    pub fn alpha(&self) -> CirclePos {
        self.alpha
    }

    pub fn cf_terms(&self) -> &[u64] {
        &self.cf_terms
    }

    /// Convergent pairs (p_n, q_n) for n = 1..=depth.
    pub fn convergents(&self) -> &[(u128, u128)] {
        &self.convergents
    }

    /// q_n for n starting at 1.
    pub fn denominator(&self, n: usize) -> Result<u128> {
        if n == 0 || n > self.convergents.len() {
            return Err(Error::ConvergentRange {
                requested: n,
                stored: self.convergents.len(),
            });
        }
        Ok(self.convergents[n - 1].1)
    }

    pub fn depth(&self) -> usize {
        self.cf_terms.len()
    }

    /// (sqrt(5)-1)/2, terms all 1, Fibonacci denominators.
    pub fn golden(depth: usize) -> Result<Rotation> {
        Rotation::from_cf_terms(&vec![1u64; depth.max(1)])
    }

    /// sqrt(2)-1, terms all 2, Pell denominators.
    pub fn sqrt2m1(depth: usize) -> Result<Rotation> {
        Rotation::from_cf_terms(&vec![2u64; depth.max(1)])
    }

    /// Builds a rotation directly from continued-fraction terms. The stored
    /// alpha is the final convergent rounded to 128 bits, so the claimed
    /// terms are exact for that representation.
    pub fn from_cf_terms(terms: &[u64]) -> Result<Rotation> {
        if terms.is_empty() {
            return Err(Error::ZeroDepth);
        }
        let convergents = convergents_from_terms(terms)?;
        let (p, q) = *convergents.last().unwrap();
        let bits = (BigUint::from(p) * one_shl_128()) / BigUint::from(q);
        let bits = biguint_to_u128(&bits).unwrap_or(u128::MAX);
        Ok(Rotation {
            alpha: CirclePos::from_bits(bits),
            cf_terms: terms.to_vec(),
            convergents,
        })
    }
}

fn biguint_to_u128(x: &BigUint) -> Option<u128> {
    let digits = x.to_u64_digits();
    match digits.len() {
        0 => Some(0),
        1 => Some(digits[0] as u128),
        2 => Some((digits[1] as u128) << 64 | digits[0] as u128),
        _ => None,
    }
}

fn convergents_from_terms(terms: &[u64]) -> Result<Vec<(u128, u128)>> {
    let mut convergents = Vec::with_capacity(terms.len());
    // p_{-1} = 1, p_0 = 0; q_{-1} = 0, q_0 = 1 for alpha = [0; a_1, ...].
    let (mut p_prev, mut p_cur): (u128, u128) = (1, 0);
    let (mut q_prev, mut q_cur): (u128, u128) = (0, 1);
    for (k, &a) in terms.iter().enumerate() {
        if a == 0 {
            return Err(Error::Config(format!("continued fraction term {} is zero", k + 1)));
        }
        let p_next = (a as u128)
            .checked_mul(p_cur)
            .and_then(|v| v.checked_add(p_prev))
            .ok_or(Error::ConvergentOverflow { index: k + 1 })?;
        let q_next = (a as u128)
            .checked_mul(q_cur)
            .and_then(|v| v.checked_add(q_prev))
            .ok_or(Error::ConvergentOverflow { index: k + 1 })?;
        convergents.push((p_next, q_next));
        p_prev = p_cur;
        p_cur = p_next;
        q_prev = q_cur;
        q_cur = q_next;
    }
    Ok(convergents)
}

/// Expands alpha in (0,1) to `depth` continued-fraction terms.
///
/// The expansion runs exact integer Euclid on the 128-bit fraction, so the
/// terms are exact for the given representation of alpha. A zero remainder
/// within `depth` means the representation is rational and is rejected.
pub fn cf_expand(alpha: CirclePos, depth: usize) -> Result<Rotation> {
    if depth == 0 {
        return Err(Error::ZeroDepth);
    }
    if alpha.bits() == 0 {
        return Err(Error::AlphaOutOfRange { value: 0.0 });
    }
    let mut r_prev = one_shl_128();
    let mut r_cur = BigUint::from(alpha.bits());
    let mut terms = Vec::with_capacity(depth);
    for k in 0..depth {
        if r_cur == BigUint::from(0u8) {
            return Err(Error::RationalAlpha { index: k });
        }
        let a = &r_prev / &r_cur;
        let r_next = &r_prev % &r_cur;
        let a = biguint_to_u128(&a).ok_or(Error::ConvergentOverflow { index: k + 1 })?;
        if a > u64::MAX as u128 {
            return Err(Error::ConvergentOverflow { index: k + 1 });
        }
        terms.push(a as u64);
        r_prev = r_cur;
        r_cur = r_next;
    }
    let convergents = convergents_from_terms(&terms)?;
    Ok(Rotation {
        alpha,
        cf_terms: terms,
        convergents,
    })
}

/// One row of the growth-condition report.
#[derive(Clone, Debug)]
pub struct GrowthRow {
    pub n: usize,
    pub q_n: u128,
    pub q_next: u128,
    /// q_n * ln(q_n) * (ln n)^2
    pub rhs_factor: f64,
    pub pass: bool,
}

/// Report for the denominator growth condition q_{n+1} < C q_n log q_n (log n)^2.
///
/// Membership in the full-measure class is an asymptotic condition; this
/// report only covers the stored range, which `checked_range` records.
#[derive(Clone, Debug)]
pub struct GrowthReport {
    pub c: f64,
    pub checked_range: (usize, usize),
    pub rows: Vec<GrowthRow>,
    pub all_pass: bool,
    /// Smallest C that would make every checked row pass.
    pub minimal_c: f64,
}

/// Checks q_{n+1} < C q_n ln(q_n) (ln n)^2 for n in `n_range` (inclusive).
pub fn in_class_d(rot: &Rotation, c: f64, n_range: (usize, usize)) -> Result<GrowthReport> {
    let (lo, hi) = n_range;
    if lo == 0 || hi < lo {
        return Err(Error::Precondition(format!("bad n range [{lo}, {hi}]")));
    }
    if hi + 1 > rot.convergents.len() {
        return Err(Error::ConvergentRange {
            requested: hi + 1,
            stored: rot.convergents.len(),
        });
    }
    let mut rows = Vec::new();
    let mut minimal_c: f64 = 0.0;
    for n in lo..=hi {
        let q_n = rot.denominator(n)?;
        let q_next = rot.denominator(n + 1)?;
        let rhs_factor = q_n as f64 * (q_n as f64).ln() * (n as f64).ln().powi(2);
        let pass = (q_next as f64) < c * rhs_factor;
        if rhs_factor > 0.0 {
            minimal_c = minimal_c.max(q_next as f64 / rhs_factor);
        } else {
            minimal_c = f64::INFINITY;
        }
        rows.push(GrowthRow {
            n,
            q_n,
            q_next,
            rhs_factor,
            pass,
        });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(GrowthReport {
        c,
        checked_range: (lo, hi),
        rows,
        all_pass,
        minimal_c,
    })
}

/// {x + n alpha} together with the documented error bound.
///
/// The reduction is a single wrapping multiply of the 128-bit fraction, so
/// the only error is the representation of alpha itself: |n| * 2^-128.
pub fn orbit_point(rot: &Rotation, x: CirclePos, n: i64) -> Result<(CirclePos, f64)> {
    if n.unsigned_abs() > ORBIT_BUDGET as u64 {
        return Err(Error::PrecisionBudget {
            n,
            budget: ORBIT_BUDGET,
        });
    }
    let p = x.add(rot.alpha.mul_int(n));
    let err = n.unsigned_abs() as f64 * 2.0f64.powi(-128);
    Ok((p, err))
}

/// min_{j in [0,M)} ||z + j alpha|| and the minimizing j.
pub fn min_orbit_distance(rot: &Rotation, z: CirclePos, m: u64) -> Result<(CircleDistance, u64)> {
    if m == 0 {
        return Err(Error::Precondition("M must be >= 1".into()));
    }
    if m > ORBIT_BUDGET as u64 {
        return Err(Error::PrecisionBudget {
            n: m as i64,
            budget: ORBIT_BUDGET,
        });
    }
    let mut best = z.dist_to_zero();
    let mut argmin = 0u64;
    let mut cur = z;
    for j in 1..m {
        cur = cur.add(rot.alpha);
        let d = cur.dist_to_zero();
        if d < best {
            best = d;
            argmin = j;
        }
    }
    Ok((best, argmin))
}
