//! Multiple harmonic sums with coprimality and residue-class constraints.
//!
//! An [`Index`] stores exponents in ascending order of the summation
//! variables: `parts[0]` is attached to the smallest variable `u_1`. Papers
//! in this area usually print the arguments the other way round,
//! `H_n(s_d, ..., s_1)`; use [`Index::from_display`] for that order.
//!
//! Terms with `p | u_i` are allowed whenever the constraints permit them.
//! Such sums are evaluated at a raised precision `p^(a+V)`, where `V` bounds
//! the total p-power in any denominator, and the result is divided back down
//! by `p^V`. A sum that is not p-integral is reported as
//! [`Error::NotPIntegral`].

use std::collections::BTreeMap;
use std::fmt;

use crate::arith::{Modulus, Residue};
use crate::error::{Error, Result};
use crate::ring::{with_ring, Ring};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Index(Vec<u32>);

impl Index {
    /// Exponents in ascending-variable order.
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidIndex(format!("{parts:?} has a zero part")));
        }
        Ok(Index(parts))
    }

    /// Exponents in display order `H(s_d, ..., s_1)`.
    pub fn from_display(parts: &[u32]) -> Result<Self> {
        Self::new(parts.iter().rev().copied().collect())
    }

    pub fn empty() -> Self {
        Index(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Which summation variables must be prime to `p`, and which must agree
/// modulo `p`. Positions are 1-based; a congruence `(i, 0)` means
/// `u_i = 0 (mod p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSet {
    depth: usize,
    coprime: Vec<bool>,
    congruences: Vec<(usize, usize)>,
    plan: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Slot {
    coprime: bool,
    zero: bool,
    /// earlier 0-based position this one must match modulo p
    anchor: Option<usize>,
    /// the class contains a coprime position, so every member is a unit
    unit: bool,
}

impl ConstraintSet {
    pub fn new(depth: usize, coprime: Vec<bool>, congruences: Vec<(usize, usize)>) -> Result<Self> {
        if coprime.len() != depth {
            return Err(Error::InvalidConstraint(format!("{} coprime flags for depth {depth}", coprime.len())));
        }
        // union-find over positions 0..=depth, node 0 is the class of multiples of p
        let mut parent: Vec<usize> = (0..=depth).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        for &(i, j) in &congruences {
            if i == 0 || i > depth || j > depth {
                return Err(Error::InvalidConstraint(format!("congruence ({i},{j}) outside depth {depth}")));
            }
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a.max(b)] = a.min(b);
        }
        let roots: Vec<usize> = (0..=depth).map(|x| find(&mut parent, x)).collect();
        let mut plan = Vec::with_capacity(depth);
        for pos in 1..=depth {
            let root = roots[pos];
            let zero = root == roots[0];
            let unit = (1..=depth).any(|q| roots[q] == root && coprime[q - 1]);
            if zero && unit {
                return Err(Error::InvalidConstraint(format!(
                    "position {pos} is forced both prime to p and divisible by p"
                )));
            }
            let anchor = (1..pos).find(|&q| roots[q] == root).map(|q| q - 1);
            plan.push(Slot { coprime: coprime[pos - 1], zero, anchor, unit });
        }
        Ok(ConstraintSet { depth, coprime, congruences, plan })
    }

    /// Every variable prime to `p`: the p-restricted sums.
    pub fn all_coprime(depth: usize) -> Self {
        Self::new(depth, vec![true; depth], Vec::new()).expect("consistent")
    }

    pub fn unrestricted(depth: usize) -> Self {
        Self::new(depth, vec![false; depth], Vec::new()).expect("consistent")
    }

    /// Depth 3, `u_1` and `u_3` prime to `p`, and `u_i = u_j (mod p)`.
    pub fn restricted_pair(i: usize, j: usize) -> Result<Self> {
        let congruences = if i == j { Vec::new() } else { vec![(i, j)] };
        Self::new(3, vec![true, false, true], congruences)
    }

    /// `u_1` prime to `p` and all variables congruent to each other.
    pub fn all_congruent(depth: usize) -> Self {
        let mut coprime = vec![false; depth];
        if depth > 0 {
            coprime[0] = true;
        }
        Self::new(depth, coprime, (2..=depth).map(|i| (i, 1)).collect()).expect("consistent")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coprime(&self) -> &[bool] {
        &self.coprime
    }

    pub fn congruences(&self) -> &[(usize, usize)] {
        &self.congruences
    }

    fn admits(&self, pos: usize, u: u64, chosen: &[u64], p: u64) -> bool {
        let slot = &self.plan[pos];
        let r = u % p;
        if slot.coprime && r == 0 {
            return false;
        }
        if slot.zero && r != 0 {
            return false;
        }
        match slot.anchor {
            Some(a) => chosen[a] % p == r,
            None => true,
        }
    }
}

/// Formal Z-linear combination of indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormalSum(BTreeMap<Index, i64>);

impl FormalSum {
    pub fn add_term(&mut self, idx: Index, coeff: i64) {
        let entry = self.0.entry(idx.clone()).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.0.remove(&idx);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Index, i64)> {
        self.0.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coefficient(&self, idx: &Index) -> i64 {
        self.0.get(idx).copied().unwrap_or(0)
    }
}

/// Largest `e` with `p^e <= n - 1`.
fn max_valuation(n: u64, p: u64) -> u32 {
    let mut e = 0;
    let mut pe = p;
    while pe < n {
        e += 1;
        pe = match pe.checked_mul(p) {
            Some(x) => x,
            None => break,
        };
    }
    e
}

/// Per-integer data for valuation-aware sums over `1..n`: the exponent `e`
/// in `u = p^e w` and `w^(-s)` for each exponent `s` in use.
pub(crate) struct LiftedTable<E> {
    pub(crate) val: Vec<u32>,
    pub(crate) inv_pow: BTreeMap<u32, Vec<E>>,
    pub(crate) p_pow: Vec<E>,
}

pub(crate) fn lifted_table<R: Ring>(ring: &R, n: u64, exponents: &[u32], max_shift: u32) -> LiftedTable<R::E> {
    let p = ring.modulus().p();
    let mut val = vec![0u32; n as usize];
    let mut units = vec![0u64; n as usize];
    for u in 1..n {
        let (mut w, mut e) = (u, 0);
        while w % p == 0 {
            w /= p;
            e += 1;
        }
        val[u as usize] = e;
        units[u as usize] = w;
    }
    // batch-invert the distinct unit parts (all < n)
    let inv = crate::ring::unit_inverses(ring, n);
    let mut inv_pow = BTreeMap::new();
    for &s in exponents {
        inv_pow.entry(s).or_insert_with(|| {
            let mut row = vec![ring.zero(); n as usize];
            for u in 1..n as usize {
                let w_inv = inv[units[u] as usize].as_ref().expect("unit part");
                row[u] = ring.pow(w_inv, s as u64);
            }
            row
        });
    }
    let pe = ring.from_u64(p);
    let mut p_pow = vec![ring.one()];
    for _ in 0..max_shift {
        let last = p_pow.last().expect("non-empty").clone();
        p_pow.push(ring.mul(&last, &pe));
    }
    LiftedTable { val, inv_pow, p_pow }
}

struct Walk<'a, R: Ring> {
    ring: &'a R,
    table: &'a LiftedTable<R::E>,
    parts: &'a [u32],
    cs: &'a ConstraintSet,
    n: u64,
    p: u64,
    shift: u32,
    chosen: Vec<u64>,
    total: R::E,
}

impl<R: Ring> Walk<'_, R> {
    fn run(&mut self, pos: usize, lo: u64, acc: &R::E, used: u32) {
        let depth = self.parts.len();
        let remaining = (depth - pos) as u64;
        if lo + remaining > self.n {
            return;
        }
        let s = self.parts[pos];
        let row = &self.table.inv_pow[&s];
        for u in lo..=(self.n - remaining) {
            if !self.cs.admits(pos, u, &self.chosen, self.p) {
                continue;
            }
            let used_here = used + s * self.table.val[u as usize];
            if used_here > self.shift {
                // only reachable through an inconsistent shift bound
                continue;
            }
            let next = self.ring.mul(acc, &row[u as usize]);
            if pos + 1 == depth {
                let term = self.ring.mul(&next, &self.table.p_pow[(self.shift - used_here) as usize]);
                self.total = self.ring.add(&self.total, &term);
            } else {
                self.chosen[pos] = u;
                self.run(pos + 1, u + 1, &next, used_here);
            }
        }
    }
}

/// `sum_{0 < u_1 < ... < u_d < n, constraints} prod u_i^(-s_i)` modulo
/// `p^a`. Depth 0 gives 1.
pub fn constrained_mhs(n: u64, idx: &Index, cs: &ConstraintSet, modulus: &Modulus) -> Result<Residue> {
    if cs.depth() != idx.depth() {
        return Err(Error::InvalidConstraint(format!(
            "constraints for depth {} applied to index {idx}",
            cs.depth()
        )));
    }
    if idx.depth() == 0 {
        return Ok(Residue::one(modulus));
    }
    if n <= idx.depth() as u64 {
        return Ok(Residue::zero(modulus));
    }
    let p = modulus.p();
    let maxv = max_valuation(n, p);
    let shift: u32 = idx.parts().iter().zip(&cs.plan).filter(|(_, slot)| !slot.unit).map(|(&s, _)| s * maxv).sum();
    let work = modulus.with_exponent(modulus.exponent() + shift)?;
    let lifted = with_ring!(&work, ring => {
        let table = lifted_table(&ring, n, idx.parts(), shift);
        let mut walk = Walk {
            ring: &ring,
            table: &table,
            parts: idx.parts(),
            cs,
            n,
            p,
            shift,
            chosen: vec![0; idx.depth()],
            total: ring.zero(),
        };
        walk.run(0, 1, &ring.one(), 0);
        ring.to_residue(&walk.total)
    });
    unshift(&lifted, shift)
}

/// Divides a `p^shift`-scaled sum back down, or reports the valuation.
pub(crate) fn unshift(lifted: &Residue, shift: u32) -> Result<Residue> {
    if shift == 0 {
        return Ok(lifted.clone());
    }
    match lifted.valuation() {
        Some(v) if v < shift => {
            Err(Error::NotPIntegral { p: lifted.modulus().p(), valuation: v as i64 - shift as i64 })
        }
        _ => {
            let target = lifted.modulus().with_exponent(lifted.modulus().exponent() - shift)?;
            if lifted.is_zero() {
                return Ok(Residue::zero(&target));
            }
            lifted.div_p_power(shift)
        }
    }
}

/// The p-restricted sum `H_n(idx)` with every variable prime to `p`.
pub fn mhs(n: u64, idx: &Index, modulus: &Modulus) -> Result<Residue> {
    constrained_mhs(n, idx, &ConstraintSet::all_coprime(idx.depth()), modulus)
}

/// `S_k(x, p^r) = sum_{0 < i < p^r, i = x (mod p)} i^(-k)`.
pub fn s_k_x(x: u64, k: u32, r: u32, modulus: &Modulus) -> Result<Residue> {
    let p = modulus.p();
    if x == 0 || x >= p {
        return Err(Error::PreconditionViolated(format!("x = {x} must lie in [1, {}]", p - 1)));
    }
    let count = p.checked_pow(r - 1).ok_or_else(|| Error::PreconditionViolated("p^r overflows".into()))?;
    Ok(with_ring!(modulus, ring => {
        let mut acc = ring.zero();
        for j in 0..count {
            let i = ring.from_u64(x + j * p);
            let inv = ring.inv(&i).expect("i is prime to p");
            acc = ring.add(&acc, &ring.pow(&inv, k as u64));
        }
        ring.to_residue(&acc)
    }))
}

fn stuffle_rec(s: &[u32], t: &[u32]) -> Vec<Vec<u32>> {
    if s.is_empty() {
        return vec![t.to_vec()];
    }
    if t.is_empty() {
        return vec![s.to_vec()];
    }
    let mut out = Vec::new();
    let prefix = |head: u32, tails: Vec<Vec<u32>>, out: &mut Vec<Vec<u32>>| {
        for mut tail in tails {
            tail.insert(0, head);
            out.push(tail);
        }
    };
    prefix(s[0], stuffle_rec(&s[1..], t), &mut out);
    prefix(t[0], stuffle_rec(s, &t[1..]), &mut out);
    prefix(s[0] + t[0], stuffle_rec(&s[1..], &t[1..]), &mut out);
    out
}

/// The quasi-shuffle (stuffle) product of two indices.
pub fn stuffle_product(s: &Index, t: &Index) -> FormalSum {
    let mut sum = FormalSum::default();
    for parts in stuffle_rec(s.parts(), t.parts()) {
        sum.add_term(Index(parts), 1);
    }
    sum
}

/// Checks `H(s) H(t) = sum c H(u)` over the stuffle expansion, all sums
/// p-restricted over `0 < u < n`.
pub fn stuffle_check(s: &Index, t: &Index, n: u64, modulus: &Modulus) -> Result<bool> {
    let left = mhs(n, s, modulus)?.mul(&mhs(n, t, modulus)?)?;
    let mut right = Residue::zero(modulus);
    for (idx, c) in stuffle_product(s, t).terms() {
        right = right.add(&mhs(n, idx, modulus)?.scale(&c.into()))?;
    }
    Ok(left == right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rational_residue, Rational};
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    fn md(p: u64, a: u32) -> Modulus {
        Modulus::new(p, a).unwrap()
    }

    fn idx(parts: &[u32]) -> Index {
        Index::new(parts.to_vec()).unwrap()
    }

    /// Brute force over exact rationals, no modular arithmetic at all.
    fn exact_sum(n: u64, parts: &[u32], keep: impl Fn(&[u64]) -> bool) -> Rational {
        fn rec(n: u64, parts: &[u32], lo: u64, chosen: &mut Vec<u64>, keep: &dyn Fn(&[u64]) -> bool, acc: &mut Rational) {
            if chosen.len() == parts.len() {
                if keep(chosen) {
                    let mut den = BigInt::one();
                    for (u, &s) in chosen.iter().zip(parts) {
                        den *= num_traits::pow(BigInt::from(*u), s as usize);
                    }
                    *acc += Rational::new(BigInt::one(), den);
                }
                return;
            }
            for u in lo..n {
                chosen.push(u);
                rec(n, parts, u + 1, chosen, keep, acc);
                chosen.pop();
            }
        }
        let mut acc = Rational::zero();
        rec(n, parts, 1, &mut Vec::new(), &keep, &mut acc);
        acc
    }

    #[test]
    fn empty_and_short_ranges() {
        let m = md(5, 2);
        assert!(mhs(1, &idx(&[1, 2]), &m).unwrap().is_zero());
        assert!(mhs(1, &idx(&[1]), &m).unwrap().is_zero());
        assert_eq!(mhs(10, &Index::empty(), &m).unwrap(), Residue::one(&m));
    }

    #[test]
    fn harmonic_number_at_p() {
        // 1 + 1/2 + 1/3 + 1/4 = 25/12
        assert!(mhs(5, &idx(&[1]), &md(5, 2)).unwrap().is_zero());
        assert_eq!(mhs(5, &idx(&[1]), &md(5, 3)).unwrap().valuation(), Some(2));
    }

    #[test]
    fn triple_sum_at_49() {
        let m = md(7, 5);
        let h = mhs(49, &idx(&[1, 1, 1]), &m).unwrap();
        // -(2/5) B_2 7^4 = 6 * 7^4
        assert_eq!(h, Residue::from_u64(14406, &m));
        let exact = exact_sum(49, &[1, 1, 1], |u| u.iter().all(|x| x % 7 != 0));
        assert_eq!(h, rational_residue(&exact, &m).unwrap());
    }

    #[test]
    fn middle_multiple_of_p_vanishes() {
        let m = md(7, 5);
        let cs = ConstraintSet::new(3, vec![true, false, true], vec![(2, 0)]).unwrap();
        let h = constrained_mhs(49, &idx(&[1, 1, 1]), &cs, &m).unwrap();
        assert!(h.is_zero());
        let exact = exact_sum(49, &[1, 1, 1], |u| u[0] % 7 != 0 && u[2] % 7 != 0 && u[1] % 7 == 0);
        assert!(crate::arith::valuation_int(exact.numer(), 7) as i64 - crate::arith::valuation_int(exact.denom(), 7) as i64 >= 5);
    }

    #[test]
    fn lifted_sums_match_exact_rationals() {
        // u_2 unconstrained: denominators pick up powers of p
        for (p, r) in [(5u64, 2u32), (7, 2), (3, 3)] {
            let n = p.pow(r);
            let m = md(p, 4);
            for parts in [[1u32, 1, 1], [1, 2, 1], [2, 1, 1]] {
                let cs = ConstraintSet::restricted_pair(1, 1).unwrap();
                let exact = exact_sum(n, &parts, |u| u[0] % p != 0 && u[2] % p != 0);
                match constrained_mhs(n, &idx(&parts), &cs, &m) {
                    Ok(h) => assert_eq!(h, rational_residue(&exact, &m).unwrap(), "p={p} parts={parts:?}"),
                    Err(Error::NotPIntegral { valuation, .. }) => {
                        let (v, _) = crate::arith::split_valuation(&exact, p);
                        assert_eq!(v, valuation, "p={p} parts={parts:?}");
                    }
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn inconsistent_constraints_rejected() {
        assert!(ConstraintSet::new(2, vec![true, false], vec![(2, 1), (2, 0)]).is_err());
        assert!(ConstraintSet::new(2, vec![true, true], vec![(1, 0)]).is_err());
        assert!(ConstraintSet::new(2, vec![true, true], vec![(3, 1)]).is_err());
        assert!(ConstraintSet::new(2, vec![true], vec![]).is_err());
    }

    #[test]
    fn decomposition_h11_is_plain_plus_middle_zero() {
        for p in [5u64, 7, 11, 13] {
            for r in 1..=2u32 {
                let n = p.pow(r);
                let m = md(p, 2 * r + 1);
                let three = idx(&[1, 1, 1]);
                let h11 = constrained_mhs(n, &three, &ConstraintSet::restricted_pair(1, 1).unwrap(), &m).unwrap();
                let plain = mhs(n, &three, &m).unwrap();
                let zero = ConstraintSet::new(3, vec![true, false, true], vec![(2, 0)]).unwrap();
                let h20 = constrained_mhs(n, &three, &zero, &m).unwrap();
                assert_eq!(h11, plain.add(&h20).unwrap(), "p={p} r={r}");
            }
        }
    }

    #[test]
    fn s_k_x_examples() {
        let m = md(5, 3);
        assert_eq!(s_k_x(3, 2, 1, &m).unwrap(), Residue::from_u64(3, &m).inverse().unwrap().pow(2));
        let mut expect = Residue::zero(&m);
        for i in [1u64, 6, 11, 16, 21] {
            expect = expect.add(&Residue::from_u64(i, &m).inverse().unwrap()).unwrap();
        }
        assert_eq!(s_k_x(1, 1, 2, &m).unwrap(), expect);
        let m25 = md(5, 2);
        let s1 = s_k_x(2, 1, 1, &m25).unwrap();
        assert_eq!(s_k_x(2, 1, 2, &m25).unwrap(), s1.mul_p_power(1));
    }

    #[test]
    fn residue_classes_partition_the_restricted_range() {
        for p in [5u64, 7, 11, 13] {
            for r in 1..=3u32 {
                for k in 1..=3u32 {
                    let m = md(p, r + 2);
                    let mut total = Residue::zero(&m);
                    for x in 1..p {
                        total = total.add(&s_k_x(x, k, r, &m).unwrap()).unwrap();
                    }
                    assert_eq!(total, mhs(p.pow(r), &idx(&[k]), &m).unwrap());
                }
            }
        }
    }

    #[test]
    fn stuffle_product_examples() {
        let (a, b, c) = (2u32, 3u32, 5u32);
        let two = stuffle_product(&idx(&[a]), &idx(&[b]));
        assert_eq!(two.len(), 3);
        for parts in [vec![a, b], vec![b, a], vec![a + b]] {
            assert_eq!(two.coefficient(&idx(&parts)), 1);
        }
        let three = stuffle_product(&idx(&[a, b]), &idx(&[c]));
        assert_eq!(three.len(), 5);
        for parts in [vec![a, b, c], vec![a, c, b], vec![c, a, b], vec![a + c, b], vec![a, b + c]] {
            assert_eq!(three.coefficient(&idx(&parts)), 1, "{parts:?}");
        }
        let unit = stuffle_product(&Index::empty(), &idx(&[4]));
        assert_eq!(unit.terms().collect::<Vec<_>>(), vec![(&idx(&[4]), 1)]);
        // repeated parts merge coefficients: (1)*(1) = 2(1,1) + (2)
        let sq = stuffle_product(&idx(&[1]), &idx(&[1]));
        assert_eq!(sq.coefficient(&idx(&[1, 1])), 2);
    }

    #[test]
    fn stuffle_examples() {
        assert!(stuffle_check(&idx(&[1]), &idx(&[1]), 25, &md(5, 3)).unwrap());
        assert!(stuffle_check(&idx(&[1]), &idx(&[2]), 49, &md(7, 3)).unwrap());
        assert!(stuffle_check(&Index::empty(), &idx(&[3]), 49, &md(7, 3)).unwrap());
    }

    fn compositions_up_to(weight: u32, depth: usize) -> Vec<Index> {
        let mut out = vec![Index::empty()];
        let mut frontier = vec![Vec::<u32>::new()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for f in &frontier {
                let used: u32 = f.iter().sum();
                for s in 1..=weight.saturating_sub(used) {
                    let mut g = f.clone();
                    g.push(s);
                    out.push(Index(g.clone()));
                    next.push(g);
                }
            }
            frontier = next;
        }
        out
    }

    #[test]
    fn stuffle_identities_low_weight() {
        let all = compositions_up_to(5, 2);
        for p in [5u64, 7, 11] {
            let m = md(p, 3);
            for n in [p, p * p] {
                for s in &all {
                    for t in &all {
                        if s.weight() + t.weight() <= 5 && s.depth() + t.depth() <= 4 {
                            assert!(stuffle_check(s, t, n, &m).unwrap(), "{s}*{t} n={n}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn display_order_is_reversed() {
        assert_eq!(Index::from_display(&[1, 2]).unwrap().parts(), &[2, 1]);
        assert!(Index::new(vec![1, 0]).is_err());
    }
}
