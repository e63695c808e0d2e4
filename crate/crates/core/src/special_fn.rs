//! Exact combinatorial kernels and modified Bessel functions.
//!
//! The exact kernels (ballot function, Catalan numbers, binomials, the
//! terminating hypergeometric sum) run on arbitrary-precision rationals and
//! convert to `f64` only at the boundary; the alternating hypergeometric sum
//! cancels catastrophically in floating point once `n` gets past ~30.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Exact rational value, always stored in lowest terms with positive
/// denominator.
pub type ExactRational = BigRational;

/// Binomial coefficient `C(n, k)` as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Ballot function `F(m) = C(m, floor(m/2)) / 2^m`, the probability that a
/// symmetric +/-1 walk of length `m` stays non-negative at every prefix.
pub fn ballot_f(m: u64) -> ExactRational {
    BigRational::new(binomial(m, m / 2), BigInt::one() << m)
}

/// `F(m)` as a float.
pub fn ballot_f_f64(m: u64) -> f64 {
    ballot_f(m).to_f64().expect("ballot value fits in f64")
}

/// Catalan number `C_k = C(2k, k) / (k+1)`, exact.
pub fn catalan(k: u64) -> BigInt {
    binomial(2 * k, k) / BigInt::from(k + 1)
}

/// The alternating-sum form of the Catalan number,
/// `sum_{j=0}^k (-1)^j 2^{k-j} C(k,j) C(j, floor(j/2))`,
/// evaluated exactly in integer arithmetic.
pub fn catalan_alternating_sum(k: u64) -> BigInt {
    let mut acc = BigInt::zero();
    for j in 0..=k {
        let term = (BigInt::one() << (k - j)) * binomial(k, j) * binomial(j, j / 2);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

// Largest argument for which e^z * (scaled value) stays inside f64 range.
const BESSEL_Z_MAX: f64 = 700.0;
// Crossover between the power series and the asymptotic expansion.
const BESSEL_SERIES_MAX: f64 = 20.0;

fn bessel_series(order: u32, z: f64) -> f64 {
    // I_0 = sum (z^2/4)^k / (k!)^2,  I_1 = (z/2) sum (z^2/4)^k / (k!(k+1)!)
    let q = z * z / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..200u32 {
        let kf = f64::from(k);
        term *= q
            / match order {
                0 => (kf + 1.0) * (kf + 1.0),
                _ => (kf + 1.0) * (kf + 2.0),
            };
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    if order == 0 {
        sum
    } else {
        sum * z / 2.0
    }
}

fn bessel_asymptotic_scaled(order: u32, z: f64) -> f64 {
    // e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} sum_k t_k with
    // t_k = (-1)^k prod_{j<=k} (mu - (2j-1)^2) / (k! (8z)^k), mu = 4 nu^2.
    let mu = f64::from(4 * order * order);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 0..60u32 {
        let odd = 2.0 * f64::from(k) + 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * z * (f64::from(k) + 1.0));
        if next.abs() >= term.abs() {
            break; // divergence onset; truncate at the smallest term
        }
        term = next;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// Exponentially scaled modified Bessel function `e^{-z} I_order(z)` for
/// `order` in {0, 1}. Valid for all `z >= 0`; never overflows.
pub fn bessel_i_scaled(order: u32, z: f64) -> f64 {
    assert!(order <= 1, "only orders 0 and 1 are supported");
    assert!(z >= 0.0, "argument must be non-negative");
    if z <= BESSEL_SERIES_MAX {
        bessel_series(order, z) * (-z).exp()
    } else {
        bessel_asymptotic_scaled(order, z)
    }
}

/// Modified Bessel function `I_order(z)` for `order` in {0, 1}.
///
/// Relative error <= 1e-12 on `z` in [0, 700]; larger arguments are rejected
/// since the unscaled value overflows.
pub fn bessel_i(order: u32, z: f64) -> Result<f64> {
    assert!(order <= 1, "only orders 0 and 1 are supported");
    if z < 0.0 {
        return Err(Error::InvalidArgument(format!("negative argument {z}")));
    }
    if z > BESSEL_Z_MAX {
        return Err(Error::BesselOverflow(z));
    }
    if z <= BESSEL_SERIES_MAX {
        Ok(bessel_series(order, z))
    } else {
        Ok(bessel_asymptotic_scaled(order, z) * z.exp())
    }
}

/// Terminating hypergeometric sum
/// `sum_{k=0}^n (-1)^k/(k+1) C(2k,k) C(n,k) (u/2)^k`,
/// accumulated in exact rationals and converted to float at the end.
///
/// Equals `E[F(S)]` for `S ~ Binomial(n, u)`.
pub fn hyp2f1_terminating(n: u64, u: f64) -> f64 {
    assert!((0.0..=0.5).contains(&u), "u must lie in [0, 1/2]");
    if u == 0.0 {
        return 1.0;
    }
    // u = a / 2^e exactly, so with C(2k,k)/(k+1) = Cat(k) every term is an
    // integer over the common denominator 2^{(e+1)n}; integer accumulation
    // with incremental Cat(k) and C(n,k) updates avoids a rational
    // reduction per term.
    let exact = BigRational::from_float(u).expect("u is finite");
    let a = exact.numer().clone();
    let shift = exact.denom().bits() as usize; // e + 1
    let mut cat = BigInt::one();
    let mut binom = BigInt::one();
    let mut apow = BigInt::one();
    let mut acc = BigInt::zero();
    for k in 0..=n {
        let term = (&cat * &binom * &apow) << (shift * (n - k) as usize);
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
        if k < n {
            cat = cat * (2 * (2 * k + 1)) / (k + 2);
            binom = binom * (n - k) / (k + 1);
            apow *= &a;
        }
    }
    BigRational::new(acc, BigInt::one() << (shift * n as usize))
        .to_f64()
        .expect("sum fits in f64")
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (positive half).
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_3,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_93,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, &x) in GK_NODES.iter().enumerate() {
        let fv = if x == 0.0 {
            f(c)
        } else {
            f(c - h * x) + f(c + h * x)
        };
        kronrod += GK_WEIGHTS_K[i] * fv;
        if i % 2 == 1 {
            // odd-indexed Kronrod nodes (and the center) are the Gauss-7 nodes
            gauss += GK_WEIGHTS_G[i / 2] * fv;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= 30 {
        return value;
    }
    let c = 0.5 * (a + b);
    adaptive_gk(f, a, c, tol / 2.0, depth + 1) + adaptive_gk(f, c, b, tol / 2.0, depth + 1)
}

/// Euler-integral route to the same quantity as [`hyp2f1_terminating`]:
/// `(2/pi) int_0^1 t^{-1/2} (1-t)^{1/2} (1-2ut)^n dt`,
/// computed after the substitution `t = s^2` which removes the endpoint
/// singularity. Absolute error <= 1e-9.
pub fn euler_integral_check(n: u64, u: f64) -> f64 {
    assert!(n >= 1, "n must be positive");
    assert!(u > 0.0 && u <= 0.5, "u must lie in (0, 1/2]");
    let integrand =
        move |s: f64| (1.0 - s * s).max(0.0).sqrt() * (1.0 - 2.0 * u * s * s).powi(n as i32);
    let value = adaptive_gk(&integrand, 0.0, 1.0, 1e-10, 0);
    4.0 / std::f64::consts::PI * value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rational(num: i64, den: i64) -> ExactRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn ballot_small_values() {
        assert_eq!(ballot_f(0), rational(1, 1));
        assert_eq!(ballot_f(1), rational(1, 2));
        assert_eq!(ballot_f(4), rational(3, 8));
    }

    #[test]
    fn ballot_matches_walk_enumeration() {
        // Fraction of the 2^m sign sequences whose prefix sums stay >= 0.
        for m in 0..=16u64 {
            let mut good = 0u64;
            for mask in 0u64..(1 << m) {
                let mut s = 0i64;
                let mut ok = true;
                for i in 0..m {
                    s += if mask >> i & 1 == 1 { 1 } else { -1 };
                    if s < 0 {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    good += 1;
                }
            }
            assert_eq!(ballot_f(m), BigRational::new(good.into(), BigInt::one() << m));
        }
    }

    #[test]
    fn ballot_monotone_and_paired() {
        for j in 0..30u64 {
            assert_eq!(ballot_f(2 * j + 1), ballot_f(2 * j + 2));
            assert!(ballot_f(j + 1) <= ballot_f(j));
        }
    }

    #[test]
    fn catalan_values() {
        assert_eq!(catalan(0), BigInt::from(1));
        assert_eq!(catalan(3), BigInt::from(5));
        assert_eq!(catalan(10), BigInt::from(16796));
    }

    #[test]
    fn catalan_identity_exact() {
        for k in 0..=30u64 {
            assert_eq!(catalan_alternating_sum(k), catalan(k), "k = {k}");
        }
    }

    #[test]
    fn catalan_alternating_term_by_term() {
        // k = 3: 8 - 12 + 12 - 3 = 5
        assert_eq!(catalan_alternating_sum(3), BigInt::from(5));
        assert_eq!(catalan_alternating_sum(12), catalan(12));
    }

    #[test]
    fn bessel_at_zero() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bessel_series_oracle_small_z() {
        // Truncated-series oracle, independent of the implementation path.
        for &z in &[0.1, 0.5, 1.0, 3.0, 7.5, 15.0, 20.0] {
            let q: f64 = z * z / 4.0;
            let mut fact = 1.0f64;
            let mut i0 = 0.0;
            let mut i1 = 0.0;
            for k in 0..60u32 {
                if k > 0 {
                    fact *= f64::from(k);
                }
                i0 += q.powi(k as i32) / (fact * fact);
                i1 += q.powi(k as i32) / (fact * fact * f64::from(k + 1)) * (z / 2.0);
            }
            let got0 = bessel_i(0, z).unwrap();
            let got1 = bessel_i(1, z).unwrap();
            assert!((got0 - i0).abs() <= 1e-12 * i0, "I0({z})");
            assert!((got1 - i1).abs() <= 1e-12 * i1.max(1.0), "I1({z})");
        }
    }

    #[test]
    fn bessel_series_asymptotic_agree_at_crossover() {
        for &z in &[16.0, 18.0, 20.0, 22.0, 30.0] {
            let series = bessel_series(0, z) * (-z).exp();
            let asym = bessel_asymptotic_scaled(0, z);
            assert!((series - asym).abs() <= 1e-13 * series, "z = {z}");
            let series = bessel_series(1, z) * (-z).exp();
            let asym = bessel_asymptotic_scaled(1, z);
            assert!((series - asym).abs() <= 1e-13 * series, "z = {z}");
        }
    }

    #[test]
    fn bessel_overflow_signaled() {
        assert!(matches!(bessel_i(0, 710.0), Err(Error::BesselOverflow(_))));
        // scaled form stays finite
        assert!(bessel_i_scaled(0, 710.0).is_finite());
    }

    #[test]
    fn bessel_pair_ordering() {
        for &z in &[0.01, 0.5, 2.0, 10.0, 50.0, 400.0] {
            let i0 = bessel_i_scaled(0, z);
            let i1 = bessel_i_scaled(1, z);
            assert!(i1 >= 0.0 && i1 < i0, "z = {z}");
        }
    }

    #[test]
    fn turan_inequality_on_grid() {
        // I2 from the recurrence I2 = I0 - (2/z) I1; scaled values cancel
        // the e^{-z} factors so the inequality is unchanged.
        for i in 0..=80 {
            let z = 0.01 * (100.0f64 / 0.01).powf(f64::from(i) / 80.0);
            let i0 = bessel_i_scaled(0, z);
            let i1 = bessel_i_scaled(1, z);
            let i2 = i0 - 2.0 / z * i1;
            assert!(i0 * i2 <= i1 * i1 + 1e-12 * i1 * i1.max(i0 * i0), "z = {z}");
        }
    }

    #[test]
    fn envelope_derivative_inequality_on_grid() {
        // z I0(z) <= 2 (1+z) I1(z), the inequality behind the envelope's
        // monotonicity.
        for i in 0..=80 {
            let z = 0.01 * (100.0f64 / 0.01).powf(f64::from(i) / 80.0);
            let i0 = bessel_i_scaled(0, z);
            let i1 = bessel_i_scaled(1, z);
            assert!(z * i0 <= 2.0 * (1.0 + z) * i1 * (1.0 + 1e-14), "z = {z}");
        }
    }

    #[test]
    fn hyp2f1_trivial_and_hand_expanded() {
        for n in [1, 5, 20] {
            assert_eq!(hyp2f1_terminating(n, 0.0), 1.0);
        }
        // n = 1, u = 1/2: k=0 term 1, k=1 term -(1/2) C(2,1) C(1,1) (1/4) = -1/4
        assert!((hyp2f1_terminating(1, 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn hyp2f1_matches_binomial_expectation() {
        // E[F(S)], S ~ Binomial(n, u), by direct summation over outcomes.
        for n in 1..=15u64 {
            for step in 1..=10 {
                let u = 0.05 * f64::from(step);
                let mut expect = 0.0;
                for s in 0..=n {
                    let pmf = binomial(n, s).to_f64().unwrap()
                        * u.powi(s as i32)
                        * (1.0 - u).powi((n - s) as i32);
                    expect += pmf * ballot_f_f64(s);
                }
                let hyp = hyp2f1_terminating(n, u);
                assert!((hyp - expect).abs() <= 1e-12, "n = {n}, u = {u}");
            }
        }
    }

    #[test]
    fn euler_integral_agrees_with_sum() {
        assert!((euler_integral_check(1, 0.5) - 0.75).abs() < 1e-9);
        let a = euler_integral_check(10, 0.25);
        let b = hyp2f1_terminating(10, 0.25);
        assert!((a - b).abs() <= 1e-9);
        // u -> 0+ limit is Beta(1/2, 3/2) * 2/pi = 1
        assert!((euler_integral_check(3, 1e-9) - 1.0).abs() < 1e-7);
    }
}
