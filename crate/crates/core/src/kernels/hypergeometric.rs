//! Generalized hypergeometric function ₁F₂(a; b₁, b₂; z) for real arguments.
//!
//! ₁F₂(a; b₁, b₂; z) = Σₙ (a)ₙ / ((b₁)ₙ (b₂)ₙ) · zⁿ / n!
//!
//! For moderate |z| the series is summed in f64 with compensated summation.
//! For large negative z the terms grow to ~e^{2√|z|} before decaying while the
//! sum stays O(1), so f64 loses every digit; there the series is summed
//! exactly in big-integer fixed point, with all parameters taken as the exact
//! dyadic rationals their f64 representations denote.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::physcore::quad::Neumaier;
use crate::{Error, Result};

/// Largest |z| accepted; the Karolyhazy correlator never needs more for the
/// supported cutoff range.
pub const MAX_ABS_Z: f64 = 1.0e4;
const MAX_TERMS: usize = 20_000;

/// A series value with its estimated relative error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub rel_error: f64,
    pub terms: usize,
}

fn is_nonpositive_integer(b: f64) -> bool {
    b <= 0.0 && b.fract() == 0.0
}

/// ₁F₂(a; b₁, b₂; z).
pub fn hyp1f2(a: f64, b1: f64, b2: f64, z: f64) -> Result<f64> {
    hyp1f2_with_error(a, b1, b2, z).map(|v| v.value)
}

pub fn hyp1f2_with_error(a: f64, b1: f64, b2: f64, z: f64) -> Result<SeriesValue> {
    for (name, b) in [("b1", b1), ("b2", b2)] {
        if is_nonpositive_integer(b) {
            return Err(Error::domain(name, format!("nonpositive integer {b}")));
        }
    }
    if !a.is_finite() || !b1.is_finite() || !b2.is_finite() || !z.is_finite() {
        return Err(Error::domain("z", "arguments must be finite"));
    }
    if z.abs() > MAX_ABS_Z {
        return Err(Error::domain(
            "z",
            format!(
                "|z| = {:e} exceeds the supported range {MAX_ABS_Z:e}",
                z.abs()
            ),
        ));
    }
    if z == 0.0 {
        return Ok(SeriesValue {
            value: 1.0,
            rel_error: 0.0,
            terms: 1,
        });
    }
    let f = series_f64(a, b1, b2, z)?;
    // f64 summation is trustworthy while the largest term is not much bigger
    // than the result.
    if f.max_term <= 16.0 * f.value.abs().max(f64::MIN_POSITIVE) && f.max_term < 1e3 {
        let rel = (f.terms as f64 + 1.0) * f64::EPSILON * f.max_term / f.value.abs();
        return Ok(SeriesValue {
            value: f.value,
            rel_error: rel.max(f64::EPSILON),
            terms: f.terms,
        });
    }
    series_fixed_point(a, b1, b2, z, f.max_log2)
}

struct F64Series {
    value: f64,
    max_term: f64,
    max_log2: f64,
    terms: usize,
}

fn series_f64(a: f64, b1: f64, b2: f64, z: f64) -> Result<F64Series> {
    let mut term = 1.0f64;
    let mut log2_term = 0.0f64;
    let mut max_log2 = 0.0f64;
    let mut sum = Neumaier::default();
    sum.add(1.0);
    let mut max_term = 1.0f64;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) * z / ((b1 + nf) * (b2 + nf) * (nf + 1.0));
        if ratio == 0.0 {
            return Ok(F64Series {
                value: sum.total(),
                max_term,
                max_log2,
                terms: n + 1,
            });
        }
        term *= ratio;
        log2_term += ratio.abs().log2();
        max_log2 = max_log2.max(log2_term);
        if term.is_finite() {
            max_term = max_term.max(term.abs());
            sum.add(term);
        }
        if log2_term < max_log2 - 60.0 && log2_term < -60.0 && nf > z.abs().sqrt() {
            return Ok(F64Series {
                value: sum.total(),
                max_term: if term.is_finite() {
                    max_term
                } else {
                    f64::INFINITY
                },
                max_log2,
                terms: n + 2,
            });
        }
    }
    Err(Error::Convergence {
        terms: MAX_TERMS,
        partial_sum: sum.total(),
    })
}

/// Exact dyadic decomposition x = mantissa · 2^exp.
fn dyadic(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    (BigInt::from(sign) * BigInt::from(mant), exp)
}

/// x + n as an integer over the common power of two 2^e (e ≤ 0).
fn shifted(num: &BigInt, e: i64, n: u64) -> BigInt {
    num + (BigInt::from(n) << ((-e) as usize))
}

fn series_fixed_point(a: f64, b1: f64, b2: f64, z: f64, max_log2: f64) -> Result<SeriesValue> {
    // Common exponents so that a+n etc. stay integers.
    let (an, ae) = dyadic(a);
    let (b1n, b1e) = dyadic(b1);
    let (b2n, b2e) = dyadic(b2);
    let (zn, ze) = dyadic(z);
    let ea = ae.min(0);
    let eb1 = b1e.min(0);
    let eb2 = b2e.min(0);
    let an = an << ((ae - ea) as usize);
    let b1n = b1n << ((b1e - eb1) as usize);
    let b2n = b2n << ((b2e - eb2) as usize);
    // term_{n+1} = term_n · (a+n)·z / ((b1+n)(b2+n)(n+1))
    let shift = ea + ze - eb1 - eb2;

    let guard: i64 = 96;
    let precision = (max_log2.max(0.0).ceil() as i64) + guard;
    let one = BigInt::one() << (precision as usize);
    let mut term = one.clone();
    let mut sum = one.clone();
    let cutoff = BigInt::one();
    let mut n: u64 = 0;
    loop {
        let num = shifted(&an, ea, n) * &zn;
        if num.is_zero() {
            break;
        }
        let den = shifted(&b1n, eb1, n) * shifted(&b2n, eb2, n) * BigInt::from(n + 1);
        let mut t = term * num;
        let mut d = den;
        if shift >= 0 {
            t <<= shift as usize;
        } else {
            d <<= (-shift) as usize;
        }
        term = t / d;
        sum += &term;
        n += 1;
        let past_peak = (n as f64) > z.abs().sqrt() + 2.0;
        if past_peak && term.abs() < cutoff {
            break;
        }
        if n as usize >= MAX_TERMS {
            return Err(Error::Convergence {
                terms: MAX_TERMS,
                partial_sum: to_f64_scaled(&sum, precision),
            });
        }
    }
    let value = to_f64_scaled(&sum, precision);
    // One unit of truncation per step, amplified at most by the peak growth.
    let abs_err = (n as f64 + 1.0) * 2f64.powi(-(guard as i32) + 8);
    Ok(SeriesValue {
        value,
        rel_error: abs_err / value.abs() + f64::EPSILON,
        terms: n as usize + 1,
    })
}

fn to_f64_scaled(x: &BigInt, precision: i64) -> f64 {
    let bits = x.bits() as i64;
    if bits <= 1000 {
        x.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(precision as i32))
    } else {
        let drop = bits - 900;
        (x >> (drop as usize)).to_f64().unwrap_or(f64::NAN) * 2f64.powi((drop - precision) as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    /// Independent oracle: exact rational partial sums.
    fn rational_series(
        a: (i64, i64),
        b1: (i64, i64),
        b2: (i64, i64),
        z: (i64, i64),
        terms: u64,
    ) -> f64 {
        let q = |p: (i64, i64)| BigRational::new(BigInt::from(p.0), BigInt::from(p.1));
        let (a, b1, b2, z) = (q(a), q(b1), q(b2), q(z));
        let mut term = BigRational::one();
        let mut sum = BigRational::one();
        for n in 0..terms {
            let nn = BigRational::from_integer(BigInt::from(n));
            term =
                term * (&a + &nn) * &z / ((&b1 + &nn) * (&b2 + &nn) * (&nn + BigRational::one()));
            sum += &term;
        }
        // scale to f64 via a big fixed-point division
        let scaled = (sum * BigRational::from_integer(BigInt::one() << 200)).to_integer();
        scaled.to_f64().unwrap() / 2f64.powi(200)
    }

    #[test]
    fn zero_argument_is_one() {
        assert_eq!(hyp1f2(2.0 / 3.0, 1.5, 5.0 / 3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn minus_one_matches_rational_oracle() {
        let oracle = rational_series((2, 3), (3, 2), (5, 3), (-1, 1), 200);
        let v = hyp1f2(2.0 / 3.0, 1.5, 5.0 / 3.0, -1.0).unwrap();
        assert!((v / oracle - 1.0).abs() < 1e-14, "{v} vs {oracle}");
    }

    #[test]
    fn bessel_type_series_at_two() {
        // ₁F₂(1;1,1;z) = Σ zⁿ/(n!)², i.e. I₀(2√z)
        let oracle = rational_series((1, 1), (1, 1), (1, 1), (2, 1), 60);
        let v = hyp1f2(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((v / oracle - 1.0).abs() < 1e-14);
        assert!((v - 4.252_350_879_502_624).abs() < 1e-12);
    }

    #[test]
    fn large_negative_argument_uses_exact_summation() {
        for z in [-400i64, -2500, -10_000] {
            let oracle = rational_series(
                (2, 3),
                (3, 2),
                (5, 3),
                (z, 1),
                (6.0 * (z.abs() as f64).sqrt()) as u64 + 200,
            );
            let r = hyp1f2_with_error(2.0 / 3.0, 1.5, 5.0 / 3.0, z as f64).unwrap();
            assert!(r.rel_error <= 1e-10, "{z}: error estimate {}", r.rel_error);
            assert!(
                (r.value / oracle - 1.0).abs() < 1e-12,
                "{z}: {} vs {oracle}",
                r.value
            );
        }
    }

    #[test]
    fn rejects_poles_and_range() {
        assert!(hyp1f2(1.0, -2.0, 1.0, 0.5).is_err());
        assert!(hyp1f2(1.0, 1.0, 0.0, 0.5).is_err());
        assert!(hyp1f2(1.0, 1.5, 2.0, -2e4).is_err());
    }

    #[test]
    fn terminating_series() {
        // a = -2: 1 + (-2)z/(b1 b2) + (-2)(-1)z²/(b1(b1+1) b2(b2+1) 2)
        let (b1, b2, z) = (1.5, 2.5, 3.0);
        let expect = 1.0 - 2.0 * z / (b1 * b2) + z * z / (b1 * (b1 + 1.0) * b2 * (b2 + 1.0));
        assert!((hyp1f2(-2.0, b1, b2, z).unwrap() - expect).abs() < 1e-14);
    }
}
