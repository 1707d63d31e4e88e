//! Exact residue arithmetic modulo prime powers, primes, CRT and Lucas
//! binomials.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rationals. `BigRational` keeps numerator and denominator coprime
/// with a positive denominator.
pub type Rational = num_rational::BigRational;

/// The modulus `p^a` for a prime `p` and exponent `a >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    p: u64,
    a: u32,
    q: BigUint,
}

impl Modulus {
    pub fn new(p: u64, a: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if a == 0 {
            return Err(Error::ZeroExponent);
        }
        Ok(Modulus { p, a, q: BigUint::from(p).pow(a) })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exponent(&self) -> u32 {
        self.a
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    /// `q` as a machine word when it leaves headroom for lazy reduction.
    pub(crate) fn small_q(&self) -> Option<u64> {
        self.q.to_u64().filter(|&q| q < (1 << 62))
    }

    /// Same prime, different exponent.
    pub fn with_exponent(&self, a: u32) -> Result<Self> {
        if a == 0 {
            return Err(Error::ZeroExponent);
        }
        Ok(Modulus { p: self.p, a, q: BigUint::from(self.p).pow(a) })
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.q)
    }
}

/// An element of `Z / p^a Z`, always stored in `[0, p^a)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    value: BigUint,
    modulus: Modulus,
}

impl Residue {
    pub fn new(value: &BigInt, modulus: &Modulus) -> Self {
        let q = BigInt::from_biguint(Sign::Plus, modulus.q.clone());
        let v = value.mod_floor(&q);
        Residue { value: v.to_biguint().expect("mod_floor is non-negative"), modulus: modulus.clone() }
    }

    pub fn from_u64(value: u64, modulus: &Modulus) -> Self {
        Residue { value: BigUint::from(value) % &modulus.q, modulus: modulus.clone() }
    }

    pub fn from_i64(value: i64, modulus: &Modulus) -> Self {
        Self::new(&BigInt::from(value), modulus)
    }

    pub(crate) fn from_reduced(value: BigUint, modulus: &Modulus) -> Self {
        debug_assert!(value < modulus.q);
        Residue { value, modulus: modulus.clone() }
    }

    pub fn zero(modulus: &Modulus) -> Self {
        Residue { value: BigUint::zero(), modulus: modulus.clone() }
    }

    pub fn one(modulus: &Modulus) -> Self {
        Self::from_u64(1, modulus)
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn same_modulus(&self, other: &Residue) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::MixedModulus {
                left: self.modulus.to_string(),
                right: other.modulus.to_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Residue) -> Result<Residue> {
        self.same_modulus(other)?;
        let mut v = &self.value + &other.value;
        if v >= self.modulus.q {
            v -= &self.modulus.q;
        }
        Ok(Residue { value: v, modulus: self.modulus.clone() })
    }

    pub fn sub(&self, other: &Residue) -> Result<Residue> {
        self.same_modulus(other)?;
        let v = if self.value >= other.value {
            &self.value - &other.value
        } else {
            &self.modulus.q - &other.value + &self.value
        };
        Ok(Residue { value: v, modulus: self.modulus.clone() })
    }

    pub fn mul(&self, other: &Residue) -> Result<Residue> {
        self.same_modulus(other)?;
        Ok(Residue { value: (&self.value * &other.value) % &self.modulus.q, modulus: self.modulus.clone() })
    }

    pub fn neg(&self) -> Residue {
        if self.value.is_zero() {
            return self.clone();
        }
        Residue { value: &self.modulus.q - &self.value, modulus: self.modulus.clone() }
    }

    pub fn scale(&self, k: &BigInt) -> Residue {
        let v = BigInt::from_biguint(Sign::Plus, self.value.clone()) * k;
        Residue::new(&v, &self.modulus)
    }

    pub fn pow(&self, exp: u64) -> Residue {
        Residue { value: self.value.modpow(&BigUint::from(exp), &self.modulus.q), modulus: self.modulus.clone() }
    }

    pub fn inverse(&self) -> Result<Residue> {
        inverse(self)
    }

    /// Projection onto `p^a'` for `a' <= a`.
    pub fn reduce(&self, a: u32) -> Result<Residue> {
        if a > self.modulus.a {
            return Err(Error::PreconditionViolated(format!(
                "cannot lift a residue mod {} to exponent {a}",
                self.modulus
            )));
        }
        let m = self.modulus.with_exponent(a)?;
        Ok(Residue { value: &self.value % &m.q, modulus: m })
    }

    /// p-adic valuation of the representative, `None` for zero.
    pub fn valuation(&self) -> Option<u32> {
        if self.value.is_zero() {
            return None;
        }
        let p = BigUint::from(self.modulus.p);
        let mut v = self.value.clone();
        let mut e = 0;
        while (&v % &p).is_zero() {
            v /= &p;
            e += 1;
        }
        Some(e)
    }

    /// Exact division by `p^k`; the result lives modulo `p^(a-k)`.
    pub fn div_p_power(&self, k: u32) -> Result<Residue> {
        if k == 0 {
            return Ok(self.clone());
        }
        let pk = BigUint::from(self.modulus.p).pow(k);
        if k >= self.modulus.a || !(&self.value % &pk).is_zero() {
            return Err(Error::NotDivisible { value: self.value.to_string(), p: self.modulus.p, k });
        }
        let m = self.modulus.with_exponent(self.modulus.a - k)?;
        Ok(Residue { value: &self.value / pk, modulus: m })
    }

    /// Multiplication by `p^k`, keeping the modulus.
    pub fn mul_p_power(&self, k: u32) -> Residue {
        let pk = BigUint::from(self.modulus.p).pow(k);
        Residue { value: (&self.value * pk) % &self.modulus.q, modulus: self.modulus.clone() }
    }

    /// Signed representative in `(-q/2, q/2]`.
    pub fn centered(&self) -> BigInt {
        let v = BigInt::from_biguint(Sign::Plus, self.value.clone());
        let q = BigInt::from_biguint(Sign::Plus, self.modulus.q.clone());
        if &v * 2 > q {
            v - q
        } else {
            v
        }
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Primes up to and including `limit`, ascending.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod_u64(r, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for the whole `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn mod_pow(base: &Residue, exp: u64) -> Residue {
    base.pow(exp)
}

/// Inverse by the extended Euclidean algorithm.
pub fn inverse(x: &Residue) -> Result<Residue> {
    let q = BigInt::from_biguint(Sign::Plus, x.modulus.q.clone());
    let v = BigInt::from_biguint(Sign::Plus, x.value.clone());
    let eg = v.extended_gcd(&q);
    if !eg.gcd.is_one() {
        return Err(Error::NonInvertible { value: x.value.to_string(), modulus: x.modulus.to_string() });
    }
    Ok(Residue::new(&eg.x, &x.modulus))
}

pub fn rational_residue(x: &Rational, m: &Modulus) -> Result<Residue> {
    let den = Residue::new(x.denom(), m);
    let inv = inverse(&den).map_err(|_| Error::NonInvertible {
        value: x.denom().to_string(),
        modulus: m.to_string(),
    })?;
    Residue::new(x.numer(), m).mul(&inv)
}

/// Combines residues with pairwise coprime moduli into `(V, M)` with
/// `0 <= V < M`.
pub fn crt_combine(parts: &[Residue]) -> Result<(BigUint, BigUint)> {
    let mut value = BigInt::zero();
    let mut modulus = BigInt::one();
    for part in parts {
        let q = BigInt::from_biguint(Sign::Plus, part.modulus.q.clone());
        let v = BigInt::from_biguint(Sign::Plus, part.value.clone());
        let eg = modulus.extended_gcd(&q);
        if !eg.gcd.is_one() {
            return Err(Error::ModuliNotCoprime(modulus.to_string(), q.to_string()));
        }
        // modulus * eg.x == 1 (mod q)
        let t = ((&v - &value) * &eg.x).mod_floor(&q);
        value += &modulus * t;
        modulus *= &q;
    }
    Ok((value.to_biguint().unwrap_or_default(), modulus.to_biguint().expect("positive")))
}

fn binomial_small(n: u64, k: u64, p: u64) -> u64 {
    if k > n {
        return 0;
    }
    let (mut num, mut den) = (1u64, 1u64);
    for i in 0..k {
        num = mul_mod_u64(num, (n - i) % p, p);
        den = mul_mod_u64(den, (i + 1) % p, p);
    }
    mul_mod_u64(num, pow_mod_u64(den, p - 2, p), p)
}

/// `C(n, k) mod p` by Lucas' theorem.
pub fn binomial_lucas(n: u64, k: u64, p: u64) -> Result<Residue> {
    let m = Modulus::new(p, 1)?;
    if k > n {
        return Ok(Residue::zero(&m));
    }
    let (mut n, mut k, mut acc) = (n, k, 1u64);
    while k > 0 || n > 0 {
        let c = binomial_small(n % p, k % p, p);
        if c == 0 {
            return Ok(Residue::zero(&m));
        }
        acc = mul_mod_u64(acc, c, p);
        n /= p;
        k /= p;
    }
    Ok(Residue::from_u64(acc, &m))
}

/// p-adic valuation of a non-zero integer.
pub fn valuation_int(x: &BigInt, p: u64) -> u32 {
    debug_assert!(!x.is_zero());
    let p = BigInt::from(p);
    let mut v = x.abs();
    let mut e = 0;
    loop {
        let (quo, rem) = v.div_rem(&p);
        if !rem.is_zero() {
            return e;
        }
        v = quo;
        e += 1;
    }
}

/// Splits a non-zero rational as `p^v * u` with `u` a p-adic unit.
pub fn split_valuation(x: &Rational, p: u64) -> (i64, Rational) {
    let vn = valuation_int(x.numer(), p);
    let vd = valuation_int(x.denom(), p);
    let pb = BigInt::from(p);
    let num = x.numer() / num_traits::pow(pb.clone(), vn as usize);
    let den = x.denom() / num_traits::pow(pb, vd as usize);
    (vn as i64 - vd as i64, Rational::new(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn md(p: u64, a: u32) -> Modulus {
        Modulus::new(p, a).unwrap()
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(sieve_primes(10), vec![2, 3, 5, 7]);
        assert_eq!(sieve_primes(2), vec![2]);
        assert!(sieve_primes(1).is_empty());
        let trial: Vec<u64> = (2..=30u64).filter(|&n| (2..n).all(|d| n % d != 0)).collect();
        assert_eq!(sieve_primes(30), trial);
    }

    #[test]
    fn primality_matches_sieve() {
        let sieved = sieve_primes(5000);
        let tested: Vec<u64> = (0..=5000).filter(|&n| is_prime(n)).collect();
        assert_eq!(sieved, tested);
        assert!(is_prime(1_000_003));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2, 3, 5, 7
        assert!(is_prime(18_446_744_073_709_551_557));
    }

    #[test]
    fn modulus_rejects_composites() {
        assert_eq!(Modulus::new(4, 1), Err(Error::NotPrime(4)));
        assert_eq!(Modulus::new(5, 0), Err(Error::ZeroExponent));
    }

    #[test]
    fn mod_pow_examples() {
        // 1000 is not a prime power; check the arithmetic on 2^10 mod 5^3 and 2^3 separately
        assert_eq!(mod_pow(&Residue::from_u64(2, &md(5, 3)), 10).value(), &BigUint::from(1024u32 % 125));
        assert_eq!(mod_pow(&Residue::from_u64(2, &md(2, 3)), 10).value(), &BigUint::zero());
        assert_eq!(mod_pow(&Residue::from_u64(9, &md(7, 2)), 0), Residue::one(&md(7, 2)));
        assert_eq!(mod_pow(&Residue::from_u64(5, &md(7, 1)), 6), Residue::one(&md(7, 1)));
    }

    #[test]
    fn mod_pow_crt_recovers_composite_modulus() {
        // (2 mod 1000)^10 = 24 mod 1000, assembled from 2^3 and 5^3
        let a = mod_pow(&Residue::from_u64(2, &md(2, 3)), 10);
        let b = mod_pow(&Residue::from_u64(2, &md(5, 3)), 10);
        let (v, m) = crt_combine(&[a, b]).unwrap();
        assert_eq!((v, m), (BigUint::from(24u32), BigUint::from(1000u32)));
    }

    #[test]
    fn inverse_examples() {
        let m = md(5, 2);
        assert_eq!(inverse(&Residue::from_u64(6, &m)).unwrap(), Residue::from_u64(21, &m));
        assert_eq!(inverse(&Residue::one(&m)).unwrap(), Residue::one(&m));
        assert!(matches!(inverse(&Residue::from_u64(5, &m)), Err(Error::NonInvertible { .. })));
    }

    #[test]
    fn rational_residue_examples() {
        let r = Rational::new(BigInt::from(-1), BigInt::from(3));
        assert_eq!(rational_residue(&r, &md(5, 1)).unwrap(), Residue::from_u64(3, &md(5, 1)));
        assert!(rational_residue(&Rational::zero(), &md(11, 3)).unwrap().is_zero());
        let fifth = Rational::new(BigInt::from(1), BigInt::from(5));
        assert!(matches!(rational_residue(&fifth, &md(5, 2)), Err(Error::NonInvertible { .. })));
    }

    #[test]
    fn mixed_moduli_are_an_error() {
        let a = Residue::from_u64(1, &md(5, 1));
        let b = Residue::from_u64(1, &md(5, 2));
        assert!(matches!(a.add(&b), Err(Error::MixedModulus { .. })));
        assert!(matches!(a.mul(&b), Err(Error::MixedModulus { .. })));
    }

    #[test]
    fn crt_examples() {
        let parts = [Residue::from_u64(2, &md(3, 1)), Residue::from_u64(3, &md(5, 2))];
        assert_eq!(crt_combine(&parts).unwrap(), (BigUint::from(53u32), BigUint::from(75u32)));
        let single = [Residue::from_u64(17, &md(7, 2))];
        assert_eq!(crt_combine(&single).unwrap(), (BigUint::from(17u32), BigUint::from(49u32)));
        let minus_two: Vec<_> = [5, 7, 11].iter().map(|&p| Residue::from_i64(-2, &md(p, 1))).collect();
        assert_eq!(crt_combine(&minus_two).unwrap(), (BigUint::from(383u32), BigUint::from(385u32)));
        let clash = [Residue::from_u64(1, &md(5, 1)), Residue::from_u64(2, &md(5, 2))];
        assert!(matches!(crt_combine(&clash), Err(Error::ModuliNotCoprime(..))));
    }

    #[test]
    fn lucas_examples() {
        assert_eq!(binomial_lucas(10, 2, 7).unwrap().value(), &BigUint::from(3u32));
        assert_eq!(binomial_lucas(123, 0, 11).unwrap().value(), &BigUint::one());
        assert!(binomial_lucas(3, 5, 7).unwrap().is_zero());
    }

    #[test]
    fn lucas_matches_exact_binomials() {
        for &p in &[3u64, 5, 7, 11, 13] {
            let mut row = vec![BigUint::one()];
            for n in 0..=200u64 {
                for (k, c) in row.iter().enumerate() {
                    let expect = c % p;
                    assert_eq!(binomial_lucas(n, k as u64, p).unwrap().value(), &expect, "C({n},{k}) mod {p}");
                }
                let mut next = vec![BigUint::one(); row.len() + 1];
                for k in 1..row.len() {
                    next[k] = &row[k - 1] + &row[k];
                }
                row = next;
            }
        }
    }

    #[test]
    fn p_power_division() {
        let m = md(7, 5);
        let x = Residue::from_u64(3 * 7u64.pow(4), &m);
        assert_eq!(x.valuation(), Some(4));
        let y = x.div_p_power(4).unwrap();
        assert_eq!(y, Residue::from_u64(3, &md(7, 1)));
        assert!(x.div_p_power(5).is_err());
        assert_eq!(Residue::from_u64(3, &md(7, 1)).centered(), BigInt::from(3));
        assert_eq!(Residue::from_u64(5, &md(7, 1)).centered(), BigInt::from(-2));
    }

    proptest! {
        #[test]
        fn inverse_is_an_involution(x in 1u64..1_000_000, pi in 0usize..6, a in 1u32..4) {
            let p = [5u64, 7, 11, 13, 101, 1009][pi];
            prop_assume!(x % p != 0);
            let m = md(p, a);
            let r = Residue::from_u64(x, &m);
            let inv = inverse(&r).unwrap();
            prop_assert_eq!(inverse(&inv).unwrap(), r.clone());
            prop_assert_eq!(r.mul(&inv).unwrap(), Residue::one(&m));
        }

        #[test]
        fn crt_is_order_independent(vals in proptest::collection::vec(0u64..10_000, 4), seed in 0usize..24) {
            let primes = [5u64, 7, 11, 13];
            let parts: Vec<_> = primes.iter().zip(&vals).map(|(&p, &v)| Residue::from_u64(v, &md(p, 2))).collect();
            let mut perm = parts.clone();
            // walk through the 24 permutations by rotations and one swap
            perm.rotate_left(seed % 4);
            if seed / 4 % 2 == 1 { perm.swap(0, 1); }
            if seed / 8 == 1 { perm.swap(2, 3); }
            prop_assert_eq!(crt_combine(&parts).unwrap(), crt_combine(&perm).unwrap());
        }

        #[test]
        fn residue_ops_match_integers(xs in proptest::collection::vec(-1_000_000i64..1_000_000, 1..12), pi in 0usize..4) {
            let p = [5u64, 7, 11, 13][pi];
            let m = md(p, 3);
            let mut acc = Residue::one(&m);
            let mut exact = BigInt::one();
            for (i, &x) in xs.iter().enumerate() {
                let r = Residue::from_i64(x, &m);
                match i % 3 {
                    0 => { acc = acc.add(&r).unwrap(); exact += x; }
                    1 => { acc = acc.sub(&r).unwrap(); exact -= x; }
                    _ => { acc = acc.mul(&r).unwrap(); exact *= x; }
                }
            }
            prop_assert_eq!(acc, Residue::new(&exact, &m));
        }
    }
}
