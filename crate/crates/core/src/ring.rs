//! Hot-loop residue rings. Evaluators are generic over [`Ring`] and
//! dispatched through [`with_ring!`]: a word-sized ring when `p^a < 2^62`,
//! arbitrary precision otherwise.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::{Modulus, Residue};

pub(crate) trait Ring: Sync {
    type E: Clone + Send + Sync + PartialEq + std::fmt::Debug;

    fn modulus(&self) -> &Modulus;
    fn zero(&self) -> Self::E;
    fn from_u64(&self, x: u64) -> Self::E;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn inv(&self, a: &Self::E) -> Option<Self::E>;
    fn to_residue(&self, a: &Self::E) -> Residue;

    fn one(&self) -> Self::E {
        self.from_u64(1)
    }

    fn pow(&self, a: &Self::E, mut e: u64) -> Self::E {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// `sum a[i] * b[i]` over the common prefix.
    fn dot(&self, a: &[Self::E], b: &[Self::E]) -> Self::E {
        a.iter().zip(b).fold(self.zero(), |acc, (x, y)| self.add(&acc, &self.mul(x, y)))
    }
}

pub(crate) struct SmallRing {
    q: u64,
    modulus: Modulus,
}

impl SmallRing {
    pub(crate) fn new(modulus: &Modulus, q: u64) -> Self {
        SmallRing { q, modulus: modulus.clone() }
    }
}

impl Ring for SmallRing {
    type E = u64;

    fn modulus(&self) -> &Modulus {
        &self.modulus
    }
    fn zero(&self) -> u64 {
        0
    }
    fn from_u64(&self, x: u64) -> u64 {
        x % self.q
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.q as u128) as u64
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        let (mut r0, mut r1) = (self.q as i128, *a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let quo = r0 / r1;
            (r0, r1) = (r1, r0 - quo * r1);
            (t0, t1) = (t1, t0 - quo * t1);
        }
        (r0 == 1).then(|| t0.rem_euclid(self.q as i128) as u64)
    }
    fn to_residue(&self, a: &u64) -> Residue {
        Residue::from_reduced(BigUint::from(*a), &self.modulus)
    }

    fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        let q = self.q as u128;
        if self.q < (1 << 32) {
            // each product is below 2^64, so a u128 accumulator never overflows
            let s: u128 = a.iter().zip(b).map(|(&x, &y)| x as u128 * y as u128).sum();
            (s % q) as u64
        } else {
            let mut s: u128 = 0;
            for (&x, &y) in a.iter().zip(b) {
                s += (x as u128 * y as u128) % q;
                if s >= 1 << 126 {
                    s %= q;
                }
            }
            (s % q) as u64
        }
    }
}

pub(crate) struct BigRing {
    q: BigUint,
    modulus: Modulus,
}

impl BigRing {
    pub(crate) fn new(modulus: &Modulus) -> Self {
        BigRing { q: modulus.q().clone(), modulus: modulus.clone() }
    }
}

impl Ring for BigRing {
    type E = BigUint;

    fn modulus(&self) -> &Modulus {
        &self.modulus
    }
    fn zero(&self) -> BigUint {
        BigUint::zero()
    }
    fn from_u64(&self, x: u64) -> BigUint {
        BigUint::from(x) % &self.q
    }
    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.q {
            s - &self.q
        } else {
            s
        }
    }
    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.q
    }
    fn inv(&self, a: &BigUint) -> Option<BigUint> {
        let q = BigInt::from_biguint(Sign::Plus, self.q.clone());
        let eg = BigInt::from_biguint(Sign::Plus, a.clone()).extended_gcd(&q);
        eg.gcd.is_one().then(|| eg.x.mod_floor(&q).to_biguint().expect("non-negative"))
    }
    fn to_residue(&self, a: &BigUint) -> Residue {
        Residue::from_reduced(a.clone(), &self.modulus)
    }
}

/// Runs `$body` with `$ring` bound to the cheapest ring for `$modulus`.
macro_rules! with_ring {
    ($modulus:expr, $ring:ident => $body:expr) => {{
        let __m: &$crate::arith::Modulus = $modulus;
        match __m.small_q() {
            Some(q) => {
                let $ring = $crate::ring::SmallRing::new(__m, q);
                $body
            }
            None => {
                let $ring = $crate::ring::BigRing::new(__m);
                $body
            }
        }
    }};
}
pub(crate) use with_ring;

/// Inverses of `1..n` modulo the ring, `None` where `p | u`. Uses one
/// modular inversion for the whole table (prefix products).
pub(crate) fn unit_inverses<R: Ring>(ring: &R, n: u64) -> Vec<Option<R::E>> {
    let p = ring.modulus().p();
    let units: Vec<u64> = (1..n).filter(|u| u % p != 0).collect();
    let mut prefix = Vec::with_capacity(units.len());
    let mut acc = ring.one();
    for &u in &units {
        acc = ring.mul(&acc, &ring.from_u64(u));
        prefix.push(acc.clone());
    }
    let mut table: Vec<Option<R::E>> = vec![None; n as usize];
    if units.is_empty() {
        return table;
    }
    let mut inv_acc = ring.inv(&acc).expect("product of units is a unit");
    for i in (0..units.len()).rev() {
        let before = if i == 0 { ring.one() } else { prefix[i - 1].clone() };
        table[units[i] as usize] = Some(ring.mul(&inv_acc, &before));
        inv_acc = ring.mul(&inv_acc, &ring.from_u64(units[i]));
    }
    table
}
