//! Bernoulli numbers: exact values, reductions modulo prime powers, power
//! sums and Kummer congruences.
//!
//! Two independent exact routes exist. [`bernoulli_exact`] runs the classical
//! recurrence `sum_{j<=m} C(m+1, j) B_j = 0` and is bounded (default 64).
//! Larger indices, needed for `B_{2p-4}` and friends, come from tangent
//! numbers, which only need integer arithmetic. Tests hold the two against
//! each other.

use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::arith::{rational_residue, split_valuation, Modulus, Rational, Residue};
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_BOUND: u64 = 64;

/// `B_k` as a p-adic number known modulo `p^a`: `unit * p^valuation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PadicValue {
    Zero,
    Value { valuation: i64, unit: Residue },
}

impl PadicValue {
    pub fn valuation(&self) -> Option<i64> {
        match self {
            PadicValue::Zero => None,
            PadicValue::Value { valuation, .. } => Some(*valuation),
        }
    }

    /// The residue of a p-integral value modulo `p^a`.
    pub fn to_residue(&self, modulus: &Modulus) -> Result<Residue> {
        match self {
            PadicValue::Zero => Ok(Residue::zero(modulus)),
            PadicValue::Value { valuation, unit } => {
                if *valuation < 0 {
                    return Err(Error::PreconditionViolated("value is not p-integral".into()));
                }
                let v = *valuation as u32;
                if v >= modulus.exponent() {
                    return Ok(Residue::zero(modulus));
                }
                if unit.modulus().exponent() + v < modulus.exponent() {
                    return Err(Error::PreconditionViolated(format!(
                        "unit known modulo {} only, {} requested",
                        unit.modulus(),
                        modulus
                    )));
                }
                let unit = unit.reduce(modulus.exponent() - v)?;
                let lifted = Residue::new(&BigInt::from(unit.value().clone()), modulus);
                Ok(lifted.mul_p_power(v))
            }
        }
    }

    pub(crate) fn from_rational(x: &Rational, modulus: &Modulus) -> Result<Self> {
        if x.is_zero() {
            return Ok(PadicValue::Zero);
        }
        let (v, u) = split_valuation(x, modulus.p());
        Ok(PadicValue::Value { valuation: v, unit: rational_residue(&u, modulus)? })
    }
}

fn recurrence_table() -> &'static RwLock<Vec<Rational>> {
    static TABLE: OnceLock<RwLock<Vec<Rational>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(vec![Rational::one()]))
}

/// Exact `B_k` from the defining recurrence, for `k <= 64`.
pub fn bernoulli_exact(k: u64) -> Result<Rational> {
    bernoulli_exact_with_bound(k, DEFAULT_EXACT_BOUND)
}

pub fn bernoulli_exact_with_bound(k: u64, bound: u64) -> Result<Rational> {
    if k > bound {
        return Err(Error::BoundExceeded { index: k, bound });
    }
    if let Some(b) = recurrence_table().read().expect("bernoulli table poisoned").get(k as usize) {
        return Ok(b.clone());
    }
    let mut table = recurrence_table().write().expect("bernoulli table poisoned");
    while table.len() <= k as usize {
        let m = table.len() as u64;
        // B_m = -1/(m+1) * sum_{j<m} C(m+1, j) B_j
        let mut binom = BigInt::one();
        let mut acc = Rational::zero();
        for (j, b) in table.iter().enumerate() {
            if !b.is_zero() {
                acc += b * Rational::from_integer(binom.clone());
            }
            binom = binom * BigInt::from(m + 1 - j as u64) / BigInt::from(j as u64 + 1);
        }
        table.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    Ok(table[k as usize].clone())
}

fn tangent_table() -> &'static RwLock<Vec<Rational>> {
    static TABLE: OnceLock<RwLock<Vec<Rational>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(Vec::new()))
}

/// `B_{2j}` for `j = 1..=n` through the tangent numbers `T_j`:
/// `B_{2j} = (-1)^(j-1) 2j T_j / (4^j (4^j - 1))`.
fn tangent_bernoulli(n: usize) -> Vec<Rational> {
    let mut t: Vec<BigInt> = vec![BigInt::zero(); n + 1];
    if n >= 1 {
        t[1] = BigInt::one();
    }
    for k in 2..=n {
        t[k] = &t[k - 1] * BigInt::from(k - 1);
    }
    for k in 2..=n {
        for j in k..=n {
            t[j] = &t[j - 1] * BigInt::from(j - k) + &t[j] * BigInt::from(j - k + 2);
        }
    }
    (1..=n)
        .map(|j| {
            let four_j = BigInt::one() << (2 * j);
            let den = &four_j * (&four_j - 1u32);
            let num = &t[j] * BigInt::from(2 * j);
            let b = Rational::new(num, den);
            if j % 2 == 0 {
                -b
            } else {
                b
            }
        })
        .collect()
}

/// Exact `B_k` without an index bound.
pub(crate) fn bernoulli_unbounded(k: u64) -> Rational {
    match k {
        0 => return Rational::one(),
        1 => return Rational::new(BigInt::from(-1), BigInt::from(2)),
        k if k % 2 == 1 => return Rational::zero(),
        _ => {}
    }
    let j = (k / 2) as usize;
    if let Some(b) = tangent_table().read().expect("bernoulli table poisoned").get(j - 1) {
        return b.clone();
    }
    let mut table = tangent_table().write().expect("bernoulli table poisoned");
    if table.len() < j {
        let n = j.max(2 * table.len()).max(32);
        *table = tangent_bernoulli(n);
    }
    table[j - 1].clone()
}

/// `B_k` modulo `p^a`, with its p-adic valuation (`-1` exactly when
/// `(p-1) | k`, `k > 0` even). Requires `k <= 3p`.
pub fn bernoulli_mod_pk(k: u64, p: u64, a: u32) -> Result<PadicValue> {
    if k > 3 * p {
        return Err(Error::BoundExceeded { index: k, bound: 3 * p });
    }
    PadicValue::from_rational(&bernoulli_unbounded(k), &Modulus::new(p, a)?)
}

/// `B_{p-w} mod p` for odd `3 <= w <= p-2`, read off from
/// `sum_{j<p} j^(p-w) = p B_{p-w} (mod p^2)`.
pub fn bernoulli_top_mod_p(p: u64, w: u64) -> Result<Residue> {
    let m = Modulus::new(p, 1)?;
    if p < 5 || w % 2 == 0 || w < 3 || w + 2 > p {
        return Err(Error::BadWeight { p, w });
    }
    let p2 = p as u128 * p as u128;
    let k = p - w;
    let mut sum: u128 = 0;
    for j in 1..p {
        let mut base = j as u128;
        let mut e = k;
        let mut acc: u128 = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p2;
            }
            base = base * base % p2;
            e >>= 1;
        }
        sum = (sum + acc) % p2;
    }
    debug_assert_eq!(sum % p as u128, 0);
    Ok(Residue::from_u64((sum / p as u128) as u64, &m))
}

/// `B_k` to precision `p^prec`, taking the power-sum shortcut when the
/// index has the shape `p - w` and only one digit is wanted.
pub(crate) fn bernoulli_padic(k: u64, p: u64, prec: u32) -> Result<PadicValue> {
    if k % 2 == 1 && k >= 3 {
        return Ok(PadicValue::Zero);
    }
    if prec == 1 && k >= 2 && k + 3 <= p && p >= 5 {
        let r = bernoulli_top_mod_p(p, p - k)?;
        if !r.is_zero() {
            return Ok(PadicValue::Value { valuation: 0, unit: r });
        }
    }
    PadicValue::from_rational(&bernoulli_unbounded(k), &Modulus::new(p, prec)?)
}

/// `sum_{0 < j < n} j^m` reduced modulo `p^a`.
pub fn power_sum_direct(m: u64, n: u64, modulus: &Modulus) -> Residue {
    let q = modulus.q();
    let e = BigUint::from(m);
    let mut acc = BigUint::zero();
    for j in 1..n {
        acc += BigUint::from(j).modpow(&e, q);
    }
    Residue::from_reduced(acc % q, modulus)
}

/// Exact `sum_{0 < j < n} j^m` via `1/(m+1) sum_k C(m+1, k) B_k n^(m+1-k)`.
pub fn power_sum_formula(m: u64, n: u64) -> Result<Rational> {
    if m == 0 {
        // the formula counts j = 0 as 0^0 = 1
        return Ok(Rational::from_integer(BigInt::from(n.saturating_sub(1))));
    }
    let nb = BigInt::from(n);
    let mut binom = BigInt::one();
    let mut acc = Rational::zero();
    for k in 0..=m {
        let b = bernoulli_exact(k)?;
        if !b.is_zero() {
            let power = num_traits::pow(nb.clone(), (m + 1 - k) as usize);
            acc += b * Rational::from_integer(&binom * power);
        }
        binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
    }
    Ok(acc / Rational::from_integer(BigInt::from(m + 1)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KummerCheck {
    pub holds: bool,
    pub left: Residue,
    pub right: Residue,
}

/// Compares `B_{m1}/m1` and `B_{m2}/m2` modulo `p`.
pub fn kummer_check(p: u64, m1: u64, m2: u64) -> Result<KummerCheck> {
    let modulus = Modulus::new(p, 1)?;
    let violated = |why: String| Err(Error::PreconditionViolated(why));
    for m in [m1, m2] {
        if m == 0 || m % 2 == 1 {
            return violated(format!("{m} is not a positive even index"));
        }
        if m % (p - 1) == 0 {
            return violated(format!("{} divides {m}", p - 1));
        }
    }
    if m1 % (p - 1) != m2 % (p - 1) {
        return violated(format!("{m1} and {m2} differ modulo {}", p - 1));
    }
    let ratio = |m: u64| -> Result<Residue> {
        let b = bernoulli_exact(m)? / Rational::from_integer(BigInt::from(m));
        rational_residue(&b, &modulus)
            .map_err(|_| Error::PreconditionViolated(format!("B_{m}/{m} is not {p}-integral")))
    };
    let (left, right) = (ratio(m1)?, ratio(m2)?);
    Ok(KummerCheck { holds: left == right, left, right })
}

/// Sum of `w^l` for `0 < w < p^s` modulo `p^a`; used for the parity rule
/// on full power sums.
pub fn full_power_sum(l: u64, s: u32, modulus: &Modulus) -> Residue {
    let n = num_traits::pow(BigUint::from(modulus.p()), s as usize);
    let n: u64 = n.try_into().expect("desk-scale range");
    power_sum_direct(l, n, modulus)
}
