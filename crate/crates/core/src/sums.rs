//! Composition sums `sum 1/(i_1 ... i_n)` over ordered compositions of `N`
//! with every part prime to `p`: `T_n(p, r)` at `N = p^r` and
//! `R_n^(m)(p)` at `N = m p`, plus the three-variable sub-sum `sigma(p^r)`.
//!
//! Each sum has a naive enumerator (the oracle) and a convolution over
//! exact partial sums (the evaluator used everywhere else).

use num_bigint::BigUint;
use num_integer::binomial;
use rayon::prelude::*;

use crate::arith::{Modulus, Residue};
use crate::error::{Error, Result};
use crate::mhs::{constrained_mhs, unshift, ConstraintSet, Index};
use crate::ring::{unit_inverses, with_ring, Ring};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Above this many partial sums the convolution fans out over threads.
const PARALLEL_CUTOFF: usize = 4096;

fn power(p: u64, r: u32) -> Result<u64> {
    p.checked_pow(r).ok_or_else(|| Error::PreconditionViolated(format!("{p}^{r} overflows")))
}

fn check_budget(n: usize, total: u64, budget: u64) -> Result<()> {
    if total == 0 || n == 0 {
        return Ok(());
    }
    let count = binomial(BigUint::from(total - 1), BigUint::from(n as u64 - 1));
    if count > BigUint::from(budget) {
        return Err(Error::BudgetExceeded { needed: count.to_string(), budget });
    }
    Ok(())
}

struct Enumerate<'a, R: Ring> {
    ring: &'a R,
    inv: &'a [Option<R::E>],
    total: R::E,
}

impl<R: Ring> Enumerate<'_, R> {
    fn run(&mut self, parts_left: usize, remaining: u64, acc: &R::E) {
        if parts_left == 1 {
            if let Some(x) = &self.inv[remaining as usize] {
                self.total = self.ring.add(&self.total, &self.ring.mul(acc, x));
            }
            return;
        }
        for i in 1..=(remaining - (parts_left as u64 - 1)) {
            if let Some(x) = &self.inv[i as usize] {
                let next = self.ring.mul(acc, x);
                self.run(parts_left - 1, remaining - i, &next);
            }
        }
    }
}

/// Enumerates every composition of `total` into `n` parts prime to `p`.
fn composition_naive(n: usize, total: u64, modulus: &Modulus, budget: u64) -> Result<Residue> {
    if n == 0 {
        return Err(Error::PreconditionViolated("need at least one part".into()));
    }
    check_budget(n, total, budget)?;
    if total < n as u64 {
        return Ok(Residue::zero(modulus));
    }
    Ok(with_ring!(modulus, ring => {
        let inv = unit_inverses(&ring, total + 1);
        let mut walk = Enumerate { ring: &ring, inv: &inv, total: ring.zero() };
        walk.run(n, total, &ring.one());
        ring.to_residue(&walk.total)
    }))
}

/// `f_1(t) = t^-1`, `f_{j+1}(t) = sum_i i^-1 f_j(t - i)`, answer `f_n(total)`.
/// `f_j` is kept reversed so every convolution is a contiguous dot product.
fn composition_dp(n: usize, total: u64, modulus: &Modulus) -> Result<Residue> {
    if n == 0 {
        return Err(Error::PreconditionViolated("need at least one part".into()));
    }
    if total < n as u64 {
        return Ok(Residue::zero(modulus));
    }
    let len = total as usize + 1;
    Ok(with_ring!(modulus, ring => {
        let inv: Vec<_> = unit_inverses(&ring, total + 1)
            .into_iter()
            .map(|x| x.unwrap_or_else(|| ring.zero()))
            .collect();
        // rev[k] = f_j(total - k)
        let mut rev: Vec<_> = inv.iter().rev().cloned().collect();
        // only f_n(total) is needed from the last step
        for j in 1..n {
            let at = |t: usize| {
                if t <= j {
                    ring.zero()
                } else {
                    ring.dot(&inv[1..t], &rev[len - t..len - 1])
                }
            };
            rev = if j + 1 == n {
                vec![at(len - 1)]
            } else if len > PARALLEL_CUTOFF {
                (0..len).into_par_iter().map(|k| at(len - 1 - k)).collect()
            } else {
                (0..len).map(|k| at(len - 1 - k)).collect()
            };
        }
        ring.to_residue(&rev[0])
    }))
}

/// `T_n(p, r)` by enumerating compositions; refuses more than `budget` of them.
pub fn t_n_naive(n: usize, r: u32, modulus: &Modulus, budget: u64) -> Result<Residue> {
    composition_naive(n, power(modulus.p(), r)?, modulus, budget)
}

/// `T_n(p, r)` by convolution, `O(n p^(2r))` ring operations.
pub fn t_n_fast(n: usize, r: u32, modulus: &Modulus) -> Result<Residue> {
    composition_dp(n, power(modulus.p(), r)?, modulus)
}

/// `R_n^(m)(p)`: compositions of `m p` into `n` parts prime to `p`.
pub fn r_nm_naive(n: usize, m: u64, modulus: &Modulus, budget: u64) -> Result<Residue> {
    composition_naive(n, m * modulus.p(), modulus, budget)
}

pub fn r_nm_fast(n: usize, m: u64, modulus: &Modulus) -> Result<Residue> {
    composition_dp(n, m * modulus.p(), modulus)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaParts {
    pub sigma: Residue,
    pub s_i: Residue,
    pub s_ii: Residue,
    pub s_iii: Residue,
}

/// `sigma(p^r)` over `0 < u_1 < u_2 < u_3 < p^r` with `u_1, u_3, u_2 - u_1,
/// u_3 - u_2` prime to `p`, and its inclusion-exclusion parts.
pub fn sigma_parts(r: u32, modulus: &Modulus) -> Result<SigmaParts> {
    let p = modulus.p();
    let n = power(p, r)?;
    let three = Index::new(vec![1, 1, 1])?;
    let pair = |i, j| -> Result<Residue> {
        constrained_mhs(n, &three, &ConstraintSet::restricted_pair(i, j)?, modulus)
    };
    let s_i = pair(1, 1)?;
    let s_ii = pair(1, 2)?.add(&pair(2, 3)?)?;
    let s_iii = constrained_mhs(n, &three, &ConstraintSet::all_congruent(3), modulus)?;
    Ok(SigmaParts { sigma: sigma(r, modulus)?, s_i, s_ii, s_iii })
}

/// `sigma(p^r)` directly: for each middle value `u_2 = p^e w` the outer
/// variables factor into two single sums, evaluated at precision raised by
/// `p^(r-1)` to absorb `1/u_2`.
pub fn sigma(r: u32, modulus: &Modulus) -> Result<Residue> {
    let p = modulus.p();
    let n = power(p, r)?;
    let shift = r.saturating_sub(1);
    let work = modulus.with_exponent(modulus.exponent() + shift)?;
    let lifted = with_ring!(&work, ring => {
        let inv = unit_inverses(&ring, n);
        let zero = ring.zero();
        let get = |u: u64| inv[u as usize].as_ref().unwrap_or(&zero);
        let unit = |u: u64| u % p != 0;
        let mut total = ring.zero();
        for u2 in 2..n.saturating_sub(1) {
            let mut e = 0;
            let mut w = u2;
            while w % p == 0 {
                w /= p;
                e += 1;
            }
            let mut below = ring.zero();
            for u1 in (1..u2).filter(|&u1| unit(u1) && unit(u2 - u1)) {
                below = ring.add(&below, get(u1));
            }
            let mut above = ring.zero();
            for u3 in (u2 + 1..n).filter(|&u3| unit(u3) && unit(u3 - u2)) {
                above = ring.add(&above, get(u3));
            }
            let w_inv = ring.inv(&ring.from_u64(w)).expect("unit part");
            let scale = ring.pow(&ring.from_u64(p), (shift - e) as u64);
            let term = ring.mul(&ring.mul(&below, &above), &ring.mul(&w_inv, &scale));
            total = ring.add(&total, &term);
        }
        ring.to_residue(&total)
    });
    unshift(&lifted, shift)
}

/// `T_4(p, r) = 24 sigma(p^r) / p^r`, with `sigma` evaluated modulo
/// `p^(a+r)` so the division is exact.
pub fn t4_via_sigma(r: u32, modulus: &Modulus) -> Result<Residue> {
    let work = modulus.with_exponent(modulus.exponent() + r)?;
    let s = sigma(r, &work)?.scale(&24.into());
    if s.is_zero() {
        return Ok(Residue::zero(modulus));
    }
    s.div_p_power(r)
}
