//! Exact counting primitives: capped compositions ("balls into containers with
//! a per-container capacity"), their partial sums, and entropy-style
//! asymptotics, all in arbitrary precision.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Binomial coefficient C(a, k) with the totalizing convention that the value
/// is 0 whenever `a < 0`, `k < 0`, or `k > a`. The convention is what makes
/// the alternating sum in [`ext_binom`] valid for small `b`.
pub fn binomial(a: i128, k: i128) -> BigInt {
    if k < 0 || a < 0 || k > a {
        return BigInt::zero();
    }
    let k = k.min(a - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(a - i) / BigInt::from(i + 1);
    }
    acc
}

/// Number of ways to place `b` identical balls into `n` distinct containers
/// with at most `cap` balls per container, i.e. the number of integer tuples
/// `(a_1, ..., a_n)` with `0 <= a_i <= cap` and `sum a_i = b`.
///
/// Computed by inclusion-exclusion over the containers that overflow:
/// `sum_i (-1)^i C(n, i) C(b + n - 1 - i (cap + 1), n - 1)`.
pub fn ext_binom(n: u64, b: u64, cap: u64) -> Result<BigInt> {
    if n == 0 {
        return Err(Error::invalid("ext_binom: container count n must be >= 1"));
    }
    if cap == 0 {
        return Ok(if b == 0 { BigInt::one() } else { BigInt::zero() });
    }
    let n128 = n as i128;
    let b128 = b as i128;
    let cap128 = cap as i128;
    if b128 > n128 * cap128 {
        return Ok(BigInt::zero());
    }
    let module = cap128 + 1;
    let i_max = (b128 / module).min(n128);
    let mut acc = BigInt::zero();
    for i in 0..=i_max {
        let term = binomial(n128, i) * binomial(b128 + n128 - 1 - i * module, n128 - 1);
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    debug_assert!(!acc.is_negative());
    Ok(acc)
}

/// Partial row sum `sum_{b=0}^{b_max} ext_binom(n, b, cap)`, exact.
pub fn partial_sum_ext_binom(n: u64, b_max: u64, cap: u64) -> Result<BigInt> {
    if n == 0 {
        return Err(Error::invalid(
            "partial_sum_ext_binom: container count n must be >= 1",
        ));
    }
    let top = b_max.min(n.saturating_mul(cap));
    let mut acc = BigInt::zero();
    for b in 0..=top {
        acc += ext_binom(n, b, cap)?;
    }
    Ok(acc)
}

/// Binary entropy `H(q) = -q log2 q - (1-q) log2 (1-q)`, with the boundary
/// convention `H(0) = H(1) = 0`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!(
            "binary_entropy: q must lie in [0, 1], got {q}"
        )));
    }
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    Ok(-q * q.log2() - (1.0 - q) * (1.0 - q).log2())
}

/// Exact tail ratio `sum_{b=0}^{floor(q n cap)} ext_binom(n, b, cap) / (cap+1)^n`
/// for a rational `q` in `[0, 1/2)`. The floor is taken in exact rational
/// arithmetic so boundary values of `q` cannot be mis-rounded.
pub fn ratio_tail(q: &BigRational, cap: u64, n: u64) -> Result<BigRational> {
    if n == 0 || cap == 0 {
        return Err(Error::invalid("ratio_tail: need n >= 1 and cap >= 1"));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if q.is_negative() || *q >= half {
        return Err(Error::invalid(format!(
            "ratio_tail: q must lie in [0, 1/2), got {q}"
        )));
    }
    let b_floor = (q * BigRational::from_integer(BigInt::from(n as u128 * cap as u128)))
        .floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::invalid("ratio_tail: floor(q n cap) out of range"))?;
    let numer = partial_sum_ext_binom(n, b_floor, cap)?;
    let exp = u32::try_from(n).map_err(|_| Error::invalid("ratio_tail: n too large"))?;
    let denom = BigInt::from(cap + 1).pow(exp);
    Ok(BigRational::new(numer, denom))
}

/// Finite-`n` estimate `(1/n) ln ext_binom(n, round(rho n), cap)` of the
/// exponential growth rate of capped compositions at density `rho`.
/// `rho n` is rounded to the nearest integer, ties to even.
pub fn empirical_h(n: u64, rho: f64, cap: u64) -> Result<f64> {
    if n == 0 || cap == 0 {
        return Err(Error::invalid("empirical_h: need n >= 1 and cap >= 1"));
    }
    if !rho.is_finite() || rho < 0.0 || rho > cap as f64 {
        return Err(Error::invalid(format!(
            "empirical_h: rho must lie in [0, {cap}], got {rho}"
        )));
    }
    let b = (rho * n as f64).round_ties_even();
    // A product that rounds just above n*cap would make the count 0; clamp to
    // the top of the valid range instead.
    let b = (b as u64).min(n.saturating_mul(cap));
    let count = ext_binom(n, b, cap)?;
    debug_assert!(count.is_positive());
    Ok(ln_bigint(&count) / n as f64)
}

/// Natural log of a positive big integer, accurate to f64 precision even when
/// the integer itself overflows f64 range.
pub(crate) fn ln_bigint(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits f64 range").ln();
    }
    let shift = bits - 64;
    let mantissa = (x >> shift).to_f64().expect("64-bit mantissa");
    mantissa.ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force oracle: count tuples in {0..=cap}^n summing to b.
    fn count_by_enumeration(n: u64, b: u64, cap: u64) -> BigInt {
        let n = n as usize;
        let mut digits = vec![0u64; n];
        let mut hits = BigInt::zero();
        loop {
            if digits.iter().sum::<u64>() == b {
                hits += 1;
            }
            let mut pos = n;
            loop {
                if pos == 0 {
                    return hits;
                }
                pos -= 1;
                if digits[pos] < cap {
                    digits[pos] += 1;
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    #[test]
    fn binomial_conventions() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(0, 0), BigInt::one());
        assert_eq!(binomial(-1, 0), BigInt::zero());
        assert_eq!(binomial(3, -1), BigInt::zero());
        assert_eq!(binomial(3, 4), BigInt::zero());
        assert_eq!(binomial(60, 30).to_string(), "118264581564861424");
    }

    #[test]
    fn ext_binom_pinned_values() {
        assert_eq!(ext_binom(3, 3, 2).unwrap(), BigInt::from(7));
        assert_eq!(ext_binom(5, 0, 3).unwrap(), BigInt::one());
        assert_eq!(ext_binom(4, 2, 1).unwrap(), BigInt::from(6));
        assert_eq!(ext_binom(2, 5, 2).unwrap(), BigInt::zero());
        assert_eq!(ext_binom(3, 0, 0).unwrap(), BigInt::one());
        assert_eq!(ext_binom(3, 1, 0).unwrap(), BigInt::zero());
        assert!(ext_binom(0, 1, 1).is_err());
    }

    #[test]
    fn ext_binom_matches_enumeration() {
        for n in 1..=6u64 {
            for cap in 0..=4u64 {
                for b in 0..=(n * cap + 1) {
                    assert_eq!(
                        ext_binom(n, b, cap).unwrap(),
                        count_by_enumeration(n, b, cap),
                        "n={n} b={b} cap={cap}"
                    );
                }
            }
        }
    }

    #[test]
    fn row_sums_give_total_tuple_count() {
        for n in 1..=12u64 {
            for cap in 0..=5u64 {
                let mut total = BigInt::zero();
                for b in 0..=(n * cap) {
                    total += ext_binom(n, b, cap).unwrap();
                }
                assert_eq!(total, BigInt::from(cap + 1).pow(n as u32), "n={n} cap={cap}");
            }
        }
    }

    #[test]
    fn symmetry_under_complement() {
        for n in 1..=8u64 {
            for cap in 1..=4u64 {
                for b in 0..=(n * cap) {
                    assert_eq!(
                        ext_binom(n, b, cap).unwrap(),
                        ext_binom(n, n * cap - b, cap).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn cap_one_reduces_to_binomial() {
        for n in 1..=30u64 {
            for b in 0..=n {
                assert_eq!(ext_binom(n, b, 1).unwrap(), binomial(n as i128, b as i128));
            }
        }
    }

    #[test]
    fn partial_sum_pinned_values() {
        assert_eq!(partial_sum_ext_binom(2, 4, 2).unwrap(), BigInt::from(9));
        assert_eq!(partial_sum_ext_binom(2, 1, 1).unwrap(), BigInt::from(3));
        assert_eq!(partial_sum_ext_binom(1, 0, 5).unwrap(), BigInt::one());
        // Saturates at the full row sum once b_max >= n*cap.
        assert_eq!(partial_sum_ext_binom(3, 1000, 2).unwrap(), BigInt::from(27));
    }

    #[test]
    fn entropy_pinned_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert!((binary_entropy(0.25).unwrap() - 0.811278).abs() < 1e-6);
        assert_eq!(binary_entropy(0.25).unwrap(), binary_entropy(0.75).unwrap());
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn entropy_bound_on_binomial_tails() {
        // sum_{b<=m} C(n,b) <= 2^(H(m/n) n) for 0 < m < n/2.
        for n in 2..=60u64 {
            for m in 1..n.div_ceil(2) {
                let mut lhs = BigInt::zero();
                for b in 0..=m {
                    lhs += binomial(n as i128, b as i128);
                }
                let rhs_ln =
                    binary_entropy(m as f64 / n as f64).unwrap() * n as f64 * std::f64::consts::LN_2;
                assert!(ln_bigint(&lhs) <= rhs_ln + 1e-9, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn ratio_tail_pinned_values() {
        let q0 = BigRational::from_integer(BigInt::zero());
        assert_eq!(
            ratio_tail(&q0, 2, 3).unwrap(),
            BigRational::new(BigInt::one(), BigInt::from(27))
        );
        // floor(0.4 * 5) = 2, and C(5,0)+C(5,1)+C(5,2) = 16 out of 32.
        let q = BigRational::new(BigInt::from(2), BigInt::from(5));
        assert_eq!(
            ratio_tail(&q, 1, 5).unwrap(),
            BigRational::new(BigInt::one(), BigInt::from(2))
        );
        let mut brute = BigInt::zero();
        for b in 0..=2i128 {
            brute += binomial(5, b);
        }
        assert_eq!(brute, BigInt::from(16));
    }

    #[test]
    fn ratio_tail_rejects_bad_q() {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        assert!(ratio_tail(&half, 1, 5).is_err());
        let neg = BigRational::from_integer(BigInt::from(-1));
        assert!(ratio_tail(&neg, 1, 5).is_err());
    }

    #[test]
    fn ratio_tail_decays_along_n() {
        let qs = [
            BigRational::new(BigInt::one(), BigInt::from(4)),
            BigRational::new(BigInt::from(2), BigInt::from(5)),
        ];
        for q in &qs {
            for cap in 1..=3u64 {
                for n in [25u64, 50, 100] {
                    let small = ratio_tail(q, cap, 4 * n).unwrap();
                    let large = ratio_tail(q, cap, n).unwrap();
                    assert!(small < large, "q={q} cap={cap} n={n}");
                }
            }
        }
    }

    #[test]
    fn empirical_h_pinned_values() {
        assert!(empirical_h(100, 1.0, 2).unwrap() < 3f64.ln());
        assert!((empirical_h(200, 1.0, 2).unwrap() - 3f64.ln()).abs() < 0.05);
        assert_eq!(empirical_h(50, 0.0, 3).unwrap(), 0.0);
        assert!(empirical_h(50, 3.5, 3).is_err());
        assert!(empirical_h(50, -0.1, 3).is_err());
    }

    #[test]
    fn ln_bigint_handles_huge_values() {
        let x = BigInt::from(3).pow(5000);
        let expect = 5000.0 * 3f64.ln();
        assert!((ln_bigint(&x) - expect).abs() / expect < 1e-12);
    }

    proptest! {
        #[test]
        fn prop_ext_binom_matches_enumeration(n in 1u64..=5, b in 0u64..=20, cap in 0u64..=4) {
            prop_assert_eq!(ext_binom(n, b, cap).unwrap(), count_by_enumeration(n, b, cap));
        }

        #[test]
        fn prop_pascal_identity(a in 1i128..=80, k in 0i128..=80) {
            prop_assert_eq!(binomial(a, k), binomial(a - 1, k - 1) + binomial(a - 1, k));
        }

        #[test]
        fn prop_partial_sum_monotone(n in 1u64..=6, cap in 1u64..=4, b in 0u64..=24) {
            let lo = partial_sum_ext_binom(n, b, cap).unwrap();
            let hi = partial_sum_ext_binom(n, b + 1, cap).unwrap();
            prop_assert!(lo <= hi);
        }
    }
}
