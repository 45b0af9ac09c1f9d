//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use fplds::{FpFormat, FpNumber, Lds, TieRule};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

pub fn pow(base: u32, k: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(base));
    if k >= 0 {
        num_traits::pow(b, k as usize)
    } else {
        num_traits::pow(b.recip(), (-k) as usize)
    }
}

/// Rounds `x` the slow way: locate the exponent by comparison, take the
/// first `p + 1` digits by flooring, then apply the tie rule. Returns
/// `(negative, digits, exponent)` or `None` for zero.
pub fn oracle_round(x: &BigRational, base: u32, p: u32, tie: TieRule) -> Option<(bool, u64, i64)> {
    if x.is_zero() {
        return None;
    }
    let neg = x.is_negative();
    let a = x.abs();
    let mut e = 0i64;
    while a >= pow(base, e) {
        e += 1;
    }
    while a < pow(base, e - 1) {
        e -= 1;
    }
    let scaled = &a * pow(base, p as i64 + 1 - e);
    let q: u64 = scaled.floor().to_integer().try_into().unwrap();
    let b = base as u64;
    let (mut digits, rest) = (q / b, q % b);
    let up = if 2 * rest > b {
        true
    } else if 2 * rest < b {
        false
    } else {
        match tie {
            TieRule::HalfAwayFromZero => true,
            TieRule::HalfToEven => digits % 2 == 1,
            TieRule::HalfUp => !neg,
            TieRule::HalfDown => neg,
        }
    };
    if up {
        digits += 1;
    }
    if digits == b.pow(p) {
        digits /= b;
        e += 1;
    }
    Some((neg, digits, e))
}

/// A random rational with numerator and denominator of a few digits, scaled
/// by a random power of `base`.
pub fn random_rational(r: &mut ChaCha8Rng, base: u32) -> BigRational {
    let num: i64 = r.gen_range(-1_000_000_000..=1_000_000_000);
    let den: i64 = r.gen_range(1..=1_000_000);
    BigRational::new(num.into(), den.into()) * pow(base, r.gen_range(-12..=12))
}

/// A random non-negative integer system: dimension `1..=max_d`, entries in
/// `[0, max_entry]` with about a third of them nonzero.
pub fn random_system(r: &mut ChaCha8Rng, max_d: usize, max_entry: i64, precisions: &[u32]) -> Lds {
    let d = r.gen_range(1..=max_d);
    let density = r.gen_range(0.2..0.6);
    let m: Vec<Vec<i64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if r.gen_bool(density) {
                        r.gen_range(1..=max_entry)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let mut x: Vec<i64> = (0..d)
        .map(|_| if r.gen_bool(0.7) { r.gen_range(0..=max_entry) } else { 0 })
        .collect();
    if x.iter().all(|&v| v == 0) {
        x[0] = 1;
    }
    let p = precisions[r.gen_range(0..precisions.len())];
    let tie = TieRule::ALL[r.gen_range(0..TieRule::ALL.len())];
    Lds::from_integers(&m, &x, FpFormat::with_tie(10, p, tie).unwrap()).unwrap()
}

/// Exact orbit values `x⁽⁰⁾ … x⁽ʰ⁾` as rationals.
pub fn rational_orbit(lds: &Lds, horizon: u64) -> Vec<Vec<BigRational>> {
    lds.orbit()
        .take(horizon as usize + 1)
        .map(|pt| pt.v.iter().map(|x| x.to_rational()).collect())
        .collect()
}

/// A polynomial kept as explicit `(coefficient, exponent vector)` terms so it
/// can be evaluated without the library.
#[derive(Debug, Clone)]
pub struct RawPoly {
    pub terms: Vec<(BigRational, Vec<u32>)>,
}

impl RawPoly {
    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        self.terms
            .iter()
            .map(|(c, e)| {
                e.iter()
                    .zip(x)
                    .fold(c.clone(), |acc, (&k, v)| acc * num_traits::pow(v.clone(), k as usize))
            })
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Sign of the polynomial at an orbit point, computed on `m·b^k` pairs
    /// with integer arithmetic only (coefficients are scaled by the lcm of
    /// their denominators, which keeps the sign).
    pub fn sign_at(&self, v: &[FpNumber]) -> std::cmp::Ordering {
        let base = v.first().map_or(10, |x| x.base());
        let den = self.terms.iter().fold(BigInt::one(), |acc, (c, _)| acc.lcm(c.denom()));
        let mut parts: Vec<(BigInt, i64)> = Vec::new();
        for (c, e) in &self.terms {
            let mut m = c.numer() * (&den / c.denom());
            let mut k = 0i64;
            for (x, &power) in v.iter().zip(e) {
                if power == 0 {
                    continue;
                }
                let Some(exp) = x.exponent().finite() else {
                    m = BigInt::zero();
                    break;
                };
                let mut d = BigInt::from(x.digits());
                if x.is_negative() {
                    d = -d;
                }
                m *= num_traits::pow(d, power as usize);
                k += (exp - x.precision() as i64) * power as i64;
            }
            if !m.is_zero() {
                parts.push((m, k));
            }
        }
        let low = parts.iter().map(|(_, k)| *k).min().unwrap_or(0);
        let total: BigInt = parts
            .into_iter()
            .map(|(m, k)| m * num_traits::pow(BigInt::from(base), (k - low) as usize))
            .sum();
        total.sign().cmp(&num_bigint::Sign::NoSign)
    }

    pub fn to_polynomial(&self) -> fplds::Polynomial {
        let mut p = fplds::Polynomial::zero();
        for (c, e) in &self.terms {
            let mut m = fplds::Polynomial::constant(c.clone());
            for (j, &k) in e.iter().enumerate() {
                m = &m * &fplds::Polynomial::variable(j).pow(k);
            }
            p = &p + &m;
        }
        p
    }

    pub fn random(r: &mut ChaCha8Rng, dim: usize, max_degree: u32) -> RawPoly {
        let n = r.gen_range(1..=4);
        let mut terms = Vec::new();
        for _ in 0..n {
            let mut e = vec![0u32; dim];
            let deg = r.gen_range(1..=max_degree);
            for _ in 0..deg {
                e[r.gen_range(0..dim)] += 1;
            }
            let c = r.gen_range(-5i64..=5);
            if c != 0 {
                terms.push((int(c), e));
            }
        }
        if terms.is_empty() {
            let mut e = vec![0u32; dim];
            e[0] = 1;
            terms.push((BigRational::one(), e));
        }
        terms.push((int(r.gen_range(-50..=50)), vec![0; dim]));
        RawPoly { terms }
    }
}
