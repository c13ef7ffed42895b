//! Derivation of the backward-error thresholds `theta_d`.
//!
//! The computation behind a degree-`d` threshold:
//!
//! 1. Form the power series of `h_d(x) = log(e^{-x} T_d(x))`, where `T_d` is
//!    the degree-`d` Taylor truncation of `e^x`. The product series has exact
//!    rational coefficients: the coefficient of `x^n` for `n > d` is
//!    `(-1)^{n+d} C(n-1, d) / n!`, and everything below cancels.
//! 2. Take absolute values of the log-series coefficients `c_k` to build the
//!    majorant `hbar_d(x) = sum_{k >= d} |c_{k+1}| x^k`.
//! 3. Bisect for the largest `theta` with `hbar_d(theta) <= tol`.
//!
//! The series work runs in fixed 192-bit binary floating point on `BigInt`
//! mantissas, so coefficient cancellation in the logarithm costs nothing at
//! double precision. This is an offline tool; the shipped table is frozen in
//! `assets/theta_default.txt` and embedded at build time.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Series truncation length (number of powers of x retained).
const SERIES_TERMS: usize = 260;

/// Mantissa precision in bits for the series arithmetic.
const PRECISION: u64 = 192;

/// Binary big-float: `mant * 2^exp`, mantissa capped at [`PRECISION`] bits.
#[derive(Debug, Clone)]
struct BigF {
    mant: BigInt,
    exp: i64,
}

impl BigF {
    fn zero() -> Self {
        Self { mant: BigInt::zero(), exp: 0 }
    }

    fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    fn normalize(mut self) -> Self {
        if self.mant.is_zero() {
            self.exp = 0;
            return self;
        }
        let bits = self.mant.bits();
        if bits > PRECISION {
            let shift = bits - PRECISION;
            self.mant >>= shift;
            self.exp += shift as i64;
        }
        self
    }

    /// Rounded quotient of two integers.
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        assert!(!den.is_zero());
        if num.is_zero() {
            return Self::zero();
        }
        let num_bits = num.bits() as i64;
        let den_bits = den.bits() as i64;
        let shift = (den_bits - num_bits + PRECISION as i64 + 16).max(0) as u64;
        let mant = (num << shift) / den;
        Self { mant, exp: -(shift as i64) }.normalize()
    }

    fn mul(&self, other: &Self) -> Self {
        Self { mant: &self.mant * &other.mant, exp: self.exp + other.exp }.normalize()
    }

    fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        // Positions of the most significant bits; a summand more than
        // PRECISION + 64 bits below the other cannot affect the result.
        let msb_a = self.mant.bits() as i64 + self.exp;
        let msb_b = other.mant.bits() as i64 + other.exp;
        let guard = PRECISION as i64 + 64;
        if msb_a > msb_b + guard {
            return self.clone();
        }
        if msb_b > msb_a + guard {
            return other.clone();
        }
        let (lo, hi) = if self.exp <= other.exp { (self, other) } else { (other, self) };
        let shift = (hi.exp - lo.exp) as u64;
        let mant = (&hi.mant << shift) + &lo.mant;
        Self { mant, exp: lo.exp }.normalize()
    }

    fn abs(&self) -> Self {
        Self { mant: self.mant.abs(), exp: self.exp }
    }

    fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let shift = bits.saturating_sub(53);
        let top = (&self.mant >> shift).to_f64().expect("53-bit mantissa fits f64");
        let e = self.exp + shift as i64;
        // Exponents far outside the double range underflow to zero or
        // overflow to infinity, which is the behaviour we want here.
        if e > 2000 {
            return f64::INFINITY * top.signum();
        }
        if e < -2000 {
            return 0.0;
        }
        top * 2f64.powi(e as i32)
    }
}

/// Coefficients `|c_{k+1}|` (as doubles) of the majorant `hbar_d`, indexed by
/// `k = 0..SERIES_TERMS-1`; entries below `k = d` are zero.
fn majorant_coefficients(d: usize) -> Vec<f64> {
    let k_max = SERIES_TERMS;

    // u(x) = e^{-x} T_d(x) - 1, coefficients for n = d+1 .. k_max.
    let mut u = vec![BigF::zero(); k_max + 1];
    let mut factorial = BigInt::from(1u32);
    for n in 1..=k_max {
        factorial *= BigInt::from(n as u64);
        if n > d {
            // C(n-1, d), exact.
            let mut binom = BigInt::from(1u32);
            for i in 0..d {
                binom = binom * BigInt::from((n - 1 - i) as u64) / BigInt::from((i + 1) as u64);
            }
            let sign = if (n + d) % 2 == 0 { 1 } else { -1 };
            u[n] = BigF::from_ratio(&(binom * BigInt::from(sign)), &factorial);
        }
    }

    // log(1 + u) = sum_j (-1)^{j+1} u^j / j, truncated at degree k_max.
    let mut log_coeffs = u.clone();
    let mut u_pow = u.clone();
    let mut j = 2usize;
    while j * (d + 1) <= k_max {
        // u_pow <- u_pow * u, truncated.
        let mut next = vec![BigF::zero(); k_max + 1];
        let lo_pow = (j - 1) * (d + 1);
        for n in (j * (d + 1))..=k_max {
            let mut acc = BigF::zero();
            for i in (d + 1)..=(n - lo_pow) {
                if !u[i].is_zero() && !u_pow[n - i].is_zero() {
                    acc = acc.add(&u[i].mul(&u_pow[n - i]));
                }
            }
            next[n] = acc;
        }
        u_pow = next;

        let sign = if j % 2 == 0 { -1 } else { 1 };
        let weight = BigF::from_ratio(&BigInt::from(sign), &BigInt::from(j as u64));
        for n in (j * (d + 1))..=k_max {
            if !u_pow[n].is_zero() {
                log_coeffs[n] = log_coeffs[n].add(&u_pow[n].mul(&weight));
            }
        }
        j += 1;
    }

    // hbar coefficient at power k is |c_{k+1}|.
    (0..k_max).map(|k| log_coeffs[k + 1].abs().to_f64()).collect()
}

fn evaluate_majorant(coeffs: &[f64], d: usize, theta: f64) -> f64 {
    let mut acc = 0.0f64;
    for k in (d..coeffs.len()).rev() {
        acc = acc * theta + coeffs[k];
    }
    acc * theta.powi(d as i32)
}

/// Largest `theta` such that the degree-`d` quasi-backward error majorant
/// stays at or below `tol`. Offline tool; see the module docs.
pub fn derive_theta(d: usize, tol: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("theta derivation needs degree >= 2, got {d}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance out of range: {tol}")));
    }
    let coeffs = majorant_coefficients(d);

    let mut lo = 1e-12;
    if evaluate_majorant(&coeffs, d, lo) > tol {
        return Err(Error::Bisection);
    }
    let mut hi = lo;
    loop {
        hi *= 2.0;
        if evaluate_majorant(&coeffs, d, hi) > tol {
            break;
        }
        if hi > 1e3 {
            return Err(Error::Bisection);
        }
    }
    // Bisect well past three significant digits so the rounded value is
    // stable.
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if evaluate_majorant(&coeffs, d, mid) <= tol {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-8 * lo {
            break;
        }
    }
    Ok(lo)
}

/// Rounds to `figs` significant decimal figures.
pub fn round_to_sig_figs(x: f64, figs: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(figs - 1 - magnitude);
    (x * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1.1102230246251565e-16; // 2^-53

    #[test]
    fn theta_6_matches_published_value() {
        let theta = derive_theta(6, TOL).unwrap();
        assert_eq!(round_to_sig_figs(theta, 2), 9.1e-3);
    }

    #[test]
    fn theta_16_matches_published_value() {
        let theta = derive_theta(16, TOL).unwrap();
        assert_eq!(round_to_sig_figs(theta, 2), 7.8e-1);
    }

    #[test]
    fn odd_degrees_interleave() {
        let t8 = derive_theta(8, TOL).unwrap();
        let t9 = derive_theta(9, TOL).unwrap();
        let t10 = derive_theta(10, TOL).unwrap();
        assert!(t8 < t9 && t9 < t10, "{t8} {t9} {t10}");

        let t24 = derive_theta(24, TOL).unwrap();
        let t25 = derive_theta(25, TOL).unwrap();
        let t26 = derive_theta(26, TOL).unwrap();
        assert!(t24 < t25 && t25 < t26, "{t24} {t25} {t26}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(derive_theta(1, TOL).is_err());
        assert!(derive_theta(6, -1.0).is_err());
    }

    #[test]
    fn rounding_helper() {
        assert_eq!(round_to_sig_figs(0.0091234, 2), 9.1e-3);
        assert_eq!(round_to_sig_figs(3.456, 2), 3.5);
        assert_eq!(round_to_sig_figs(0.7849, 2), 0.78);
    }
}
