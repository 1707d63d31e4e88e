//! Integer relations between per-prime residue windows: CRT images,
//! rational reconstruction, exact integral LLL, and the Bernoulli monomial
//! bases that relations are sought in.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::arith::{crt_combine, rational_residue, sieve_primes, Modulus, Rational, Residue};
use crate::bernoulli::bernoulli_top_mod_p;
use crate::cache::Cache;
use crate::error::{Error, Result};
use crate::sums::{r_nm_fast, t_n_fast};

/// Default bound on the entries of an accepted relation vector.
pub const DEFAULT_HEIGHT_BOUND: u64 = 1_000_000_000_000;

/// A relation only counts if a random vector of its height would satisfy
/// it with probability below `2^-SIGNIFICANCE_BITS`.
const SIGNIFICANCE_BITS: usize = 20;

/// Residues at a finite set of primes, all modulo `p^a` for one `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeWindow {
    exponent: u32,
    entries: BTreeMap<u64, Residue>,
}

impl PrimeWindow {
    /// Entries must come with strictly increasing primes and share `exponent`.
    pub fn new(exponent: u32, entries: impl IntoIterator<Item = Residue>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut last = 0;
        for e in entries {
            let p = e.modulus().p();
            if p <= last {
                return Err(Error::PreconditionViolated("window primes must increase".into()));
            }
            if e.modulus().exponent() != exponent {
                return Err(Error::MismatchedWindows);
            }
            last = p;
            map.insert(p, e);
        }
        Ok(PrimeWindow { exponent, entries: map })
    }

    /// Evaluates `f` at every prime in parallel.
    pub fn collect<F>(primes: &[u64], exponent: u32, f: F) -> Result<Self>
    where
        F: Fn(&Modulus) -> Result<Residue> + Sync,
    {
        let values: Vec<Residue> = primes
            .par_iter()
            .map(|&p| f(&Modulus::new(p, exponent)?))
            .collect::<Result<_>>()?;
        PrimeWindow::new(exponent, values)
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn primes(&self) -> Vec<u64> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, p: u64) -> Option<&Residue> {
        self.entries.get(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Residue)> {
        self.entries.iter().map(|(&p, r)| (p, r))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn same_shape(&self, other: &PrimeWindow) -> bool {
        self.exponent == other.exponent && self.entries.keys().eq(other.entries.keys())
    }

    /// Entrywise product.
    pub fn mul(&self, other: &PrimeWindow) -> Result<PrimeWindow> {
        if !self.same_shape(other) {
            return Err(Error::MismatchedWindows);
        }
        let entries = self.entries.values().zip(other.entries.values()).map(|(a, b)| a.mul(b));
        PrimeWindow::new(self.exponent, entries.collect::<Result<Vec<_>>>()?)
    }

    /// `p^k * x` modulo `p^exponent`; needs `a + k >= exponent` to be well defined.
    pub fn shifted(&self, k: u32, exponent: u32) -> Result<PrimeWindow> {
        if self.exponent + k < exponent {
            return Err(Error::PreconditionViolated(format!(
                "p^{k} times a residue mod p^{} is not defined mod p^{exponent}",
                self.exponent
            )));
        }
        let entries = self.entries.iter().map(|(&p, x)| {
            let m = Modulus::new(p, exponent)?;
            Ok(Residue::new(&BigInt::from_biguint(Sign::Plus, x.value().clone()), &m).mul_p_power(k))
        });
        PrimeWindow::new(exponent, entries.collect::<Result<Vec<_>>>()?)
    }

    /// Exact division of every entry by `p^k`, or `None` if some entry is
    /// not divisible.
    pub fn unshifted(&self, k: u32) -> Option<PrimeWindow> {
        let entries: Option<Vec<Residue>> = self.entries.values().map(|x| x.div_p_power(k).ok()).collect();
        PrimeWindow::new(self.exponent.checked_sub(k)?, entries?).ok()
    }

    pub fn crt(&self) -> Result<CrtImage> {
        let parts: Vec<Residue> = self.entries.values().cloned().collect();
        let (value, modulus) = crt_combine(&parts)?;
        Ok(CrtImage { value, modulus })
    }
}

/// `value` is the unique residue in `[0, modulus)` matching every entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrtImage {
    pub value: BigUint,
    pub modulus: BigUint,
}

/// A product of A-Bernoulli numbers `beta_w = B_(p-w)/w`, weights sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BernoulliMonomial {
    weights: Vec<u64>,
}

impl BernoulliMonomial {
    pub fn new(mut weights: Vec<u64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| w < 3 || w % 2 == 0) {
            return Err(Error::PreconditionViolated(format!("weights {weights:?} must be odd and at least 3")));
        }
        weights.sort_unstable();
        Ok(BernoulliMonomial { weights })
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// The factor turning a coefficient of this monomial into one of
    /// `prod B_(p-w)`: `1 / prod w`.
    pub fn bernoulli_scale(&self) -> Rational {
        Rational::new(BigInt::one(), self.weights.iter().map(|&w| BigInt::from(w)).product())
    }

    /// The same monomial written with `B_(p-w)`, e.g. `B_(p-3)^2 B_(p-5)`.
    pub fn bernoulli_label(&self) -> String {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.weights.len() {
            let w = self.weights[i];
            let n = self.weights[i..].iter().take_while(|&&x| x == w).count();
            out.push(if n == 1 { format!("B_(p-{w})") } else { format!("B_(p-{w})^{n}") });
            i += n;
        }
        out.join(" ")
    }
}

impl fmt::Display for BernoulliMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// All multisets of odd parts `>= 3` summing to `w`, in lexicographic order.
pub fn basis_monomials(w: u64) -> Vec<BernoulliMonomial> {
    fn go(rest: u64, min: u64, cur: &mut Vec<u64>, out: &mut Vec<BernoulliMonomial>) {
        if rest == 0 {
            out.push(BernoulliMonomial { weights: cur.clone() });
            return;
        }
        let mut part = min;
        while part <= rest {
            cur.push(part);
            go(rest - part, part, cur, out);
            cur.pop();
            part += 2;
        }
    }
    let mut out = Vec::new();
    if w > 0 {
        go(w, 3, &mut Vec::new(), &mut out);
    }
    out
}

/// `B_(p-w) / w mod p` at every prime; needs `p >= w + 2`.
pub fn beta_window(w: u64, primes: &[u64]) -> Result<PrimeWindow> {
    if w < 3 || w % 2 == 0 {
        return Err(Error::PreconditionViolated(format!("weight {w} must be odd and at least 3")));
    }
    if let Some(&p) = primes.iter().find(|&&p| p < w + 2) {
        return Err(Error::PrimeTooSmall { p, w });
    }
    PrimeWindow::collect(primes, 1, |m| {
        let b = bernoulli_top_mod_p(m.p(), w)?;
        b.mul(&rational_residue(&Rational::from_integer(BigInt::from(w)), m)?.inverse()?)
    })
}

/// Entrywise product of the beta windows of each weight.
pub fn monomial_window(mono: &BernoulliMonomial, primes: &[u64]) -> Result<PrimeWindow> {
    let mut acc = beta_window(mono.weights[0], primes)?;
    for &w in &mono.weights[1..] {
        acc = acc.mul(&beta_window(w, primes)?)?;
    }
    Ok(acc)
}

/// The fraction `a/b` with `b*V = a (mod M)`, `|a|, b <= sqrt(M/2)` and
/// `gcd(b, M) = 1`, if there is one.
pub fn rational_reconstruction(v: &BigUint, m: &BigUint) -> Option<Rational> {
    if m.is_zero() {
        return None;
    }
    let bound = BigInt::from_biguint(Sign::Plus, (m / 2u32).sqrt());
    let mm = BigInt::from_biguint(Sign::Plus, m.clone());
    let (mut r0, mut r1) = (mm.clone(), BigInt::from_biguint(Sign::Plus, v % m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        (r0, r1, t0, t1) = (r1, r2, t1, t2);
    }
    let (mut a, mut b) = (r1, t1);
    if b.is_negative() {
        a = -a;
        b = -b;
    }
    if b.is_zero() || b > bound || a.abs() > bound || !b.gcd(&mm).is_one() {
        return None;
    }
    Some(Rational::new(a, b))
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LLL reduction with `delta = 3/4` in exact integer arithmetic (the
/// integral variant carrying the Gram determinants `d_i` and the scaled
/// Gram-Schmidt coefficients `lambda_ij = d_j mu_ij`). Rows must be
/// linearly independent and of equal length.
pub fn lll_reduce(basis: &[Vec<BigInt>]) -> Result<Vec<Vec<BigInt>>> {
    let n = basis.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if basis.iter().any(|row| row.len() != basis[0].len()) {
        return Err(Error::PreconditionViolated("rows have different lengths".into()));
    }
    // 1-based throughout, index 0 unused for b and lam.
    let mut b: Vec<Vec<BigInt>> = std::iter::once(Vec::new()).chain(basis.iter().cloned()).collect();
    let mut d = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n + 1]; n + 1];
    d[0] = BigInt::one();
    d[1] = dot(&b[1], &b[1]);
    if d[1].is_zero() {
        return Err(Error::SingularInput);
    }
    let (mut k, mut kmax) = (2usize, 1usize);
    while k <= n {
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = dot(&b[k], &b[j]);
                for i in 1..j {
                    u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
                }
                if j < k {
                    lam[k][j] = u;
                } else if u.is_zero() {
                    return Err(Error::SingularInput);
                } else {
                    d[k] = u;
                }
            }
        }
        size_reduce(&mut b, &mut lam, &d, k, k - 1);
        let l = &lam[k][k - 1];
        if BigInt::from(4) * &d[k] * &d[k - 2] < BigInt::from(3) * &d[k - 1] * &d[k - 1] - BigInt::from(4) * l * l {
            swap_rows(&mut b, &mut lam, &mut d, k, kmax);
            k = (k - 1).max(2);
        } else {
            for l in (1..k - 1).rev() {
                size_reduce(&mut b, &mut lam, &d, k, l);
            }
            k += 1;
        }
    }
    b.remove(0);
    Ok(b)
}

fn size_reduce(b: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &[BigInt], k: usize, l: usize) {
    if BigInt::from(2) * lam[k][l].abs() <= d[l] {
        return;
    }
    // Nearest integer to lam/d, ties rounded up.
    let q = (BigInt::from(2) * &lam[k][l] + &d[l]).div_floor(&(BigInt::from(2) * &d[l]));
    let bl = b[l].clone();
    for (x, y) in b[k].iter_mut().zip(&bl) {
        *x -= &q * y;
    }
    lam[k][l] -= &q * &d[l];
    for i in 1..l {
        let t = &q * &lam[l][i];
        lam[k][i] -= t;
    }
}

fn swap_rows(b: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &mut [BigInt], k: usize, kmax: usize) {
    b.swap(k, k - 1);
    for j in 1..k - 1 {
        let t = std::mem::take(&mut lam[k][j]);
        lam[k][j] = std::mem::replace(&mut lam[k - 1][j], t);
    }
    let l = lam[k][k - 1].clone();
    let big = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
    for i in k + 1..=kmax {
        let t = lam[i][k].clone();
        lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
        lam[i][k - 1] = (&big * &t + &l * &lam[i][k]) / &d[k];
    }
    d[k - 1] = big;
}

/// `target = sum_i coefficients[i] * basis[i]` at every prime of the window.
/// `relation_vector` is `(x_0, x_1, ..)` with `x_0 target + sum x_i basis_i = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationResult {
    pub coefficients: Vec<Rational>,
    pub relation_vector: Vec<BigInt>,
    pub height: BigUint,
    pub per_prime: Vec<(u64, bool)>,
    pub verified: bool,
    /// Other significant relations involving the target.
    pub alternatives: Vec<Vec<BigInt>>,
    /// Significant relations among the basis windows alone.
    pub basis_relations: Vec<Vec<BigInt>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Discovery {
    Found(RelationResult),
    /// No verified significant relation of height at most `height_bound`;
    /// `shortest` is the height of the shortest relation involving the
    /// target that the reduction produced.
    NoResult { height_bound: BigUint, shortest: Option<BigUint> },
}

fn height(v: &[BigInt]) -> BigUint {
    v.iter().map(|x| x.magnitude().clone()).max().unwrap_or_default()
}

/// Sign and content normalization: primitive, first nonzero entry positive.
fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        v.iter_mut().for_each(|x| *x /= &g);
    }
    if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        v.iter_mut().for_each(|x| *x = -&*x);
    }
    v
}

fn significant(h: &BigUint, dim: usize, modulus: &BigUint) -> bool {
    let span = h * 2u32 + 1u32;
    span.pow(dim as u32) << SIGNIFICANCE_BITS < *modulus
}

fn check_relation(x: &[BigInt], target: &PrimeWindow, basis: &[PrimeWindow]) -> Vec<(u64, bool)> {
    target
        .iter()
        .map(|(p, t)| {
            let m = t.modulus();
            let x0 = Residue::new(&x[0], m);
            if x0.inverse().is_err() {
                return (p, false);
            }
            let mut acc = x0.mul(t).expect("same modulus");
            for (xi, w) in x[1..].iter().zip(basis) {
                let bi = w.get(p).expect("same primes");
                acc = acc.add(&Residue::new(xi, m).mul(bi).expect("same modulus")).expect("same modulus");
            }
            (p, acc.is_zero())
        })
        .collect()
}

/// Searches for `target = sum q_i basis_i` with rational `q_i` by reducing
/// the lattice spanned by `(e_j, K V_j)` and `(0, K M)`, where `V_j` are the
/// CRT images, `M` their common modulus and `K = M`.
pub fn discover_combination(target: &PrimeWindow, basis: &[PrimeWindow], height_bound: &BigUint) -> Result<Discovery> {
    if basis.is_empty() || target.is_empty() {
        return Err(Error::PreconditionViolated("need a nonempty target and basis".into()));
    }
    if basis.iter().any(|b| !b.same_shape(target)) {
        return Err(Error::MismatchedWindows);
    }
    let images: Vec<CrtImage> =
        std::iter::once(target).chain(basis).map(|w| w.crt()).collect::<Result<_>>()?;
    let modulus = images[0].modulus.clone();
    let big_m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let k = basis.len();
    let dim = k + 2;
    let mut rows = Vec::with_capacity(dim);
    for (j, img) in images.iter().enumerate() {
        let mut row = vec![BigInt::zero(); dim];
        row[j] = BigInt::one();
        row[dim - 1] = &big_m * BigInt::from_biguint(Sign::Plus, img.value.clone());
        rows.push(row);
    }
    let mut last = vec![BigInt::zero(); dim];
    last[dim - 1] = &big_m * &big_m;
    rows.push(last);
    let reduced = lll_reduce(&rows)?;

    let mut with_target = Vec::new();
    let mut basis_relations = Vec::new();
    for row in reduced {
        if !row[dim - 1].is_zero() {
            continue;
        }
        let x = primitive(row[..dim - 1].to_vec());
        let h = height(&x);
        if x[0].is_zero() {
            if significant(&h, k + 1, &modulus) {
                basis_relations.push(x);
            }
        } else {
            with_target.push((h, x));
        }
    }
    with_target.sort();
    let shortest = with_target.first().map(|(h, _)| h.clone());
    let mut accepted = Vec::new();
    for (h, x) in &with_target {
        if h > height_bound || !significant(h, k + 1, &modulus) {
            continue;
        }
        let per_prime = check_relation(x, target, basis);
        if per_prime.iter().all(|&(_, ok)| ok) {
            accepted.push((x.clone(), h.clone(), per_prime));
        }
    }
    if accepted.is_empty() {
        return Ok(Discovery::NoResult { height_bound: height_bound.clone(), shortest });
    }
    let (x, h, per_prime) = accepted.remove(0);
    let coefficients = x[1..].iter().map(|xi| Rational::new(-xi.clone(), x[0].clone())).collect();
    Ok(Discovery::Found(RelationResult {
        coefficients,
        relation_vector: x,
        height: h,
        verified: true,
        per_prime,
        alternatives: accepted.into_iter().map(|(x, _, _)| x).collect(),
        basis_relations,
    }))
}

/// Coefficients `c_0..c_degree` of the polynomial through the points, in
/// increasing degree. With `vanish_at_zero` the point `(0, 0)` is added.
/// Points beyond the first `degree + 1` must lie on the polynomial.
pub fn fit_coefficient_polynomial(
    per_m: &BTreeMap<u64, Rational>,
    degree: usize,
    vanish_at_zero: bool,
) -> Result<Vec<Rational>> {
    let mut points: Vec<(u64, Rational)> = per_m.iter().map(|(&m, v)| (m, v.clone())).collect();
    if vanish_at_zero {
        match per_m.get(&0) {
            Some(v) if !v.is_zero() => return Err(Error::InconsistentData { degree, m: 0 }),
            Some(_) => {}
            None => points.insert(0, (0, Rational::zero())),
        }
    }
    if points.len() < degree + 1 {
        return Err(Error::InsufficientData { needed: degree + 1, got: points.len() });
    }
    let (fit, extra) = points.split_at(degree + 1);
    let xs: Vec<Rational> = fit.iter().map(|(m, _)| Rational::from_integer(BigInt::from(*m))).collect();
    // Newton divided differences, then expansion into the monomial basis.
    let mut dd: Vec<Rational> = fit.iter().map(|(_, v)| v.clone()).collect();
    for j in 1..=degree {
        for i in (j..=degree).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - j]);
        }
    }
    let mut coeffs = vec![Rational::zero(); degree + 1];
    for i in (0..=degree).rev() {
        // coeffs <- coeffs * (x - xs[i]) + dd[i]
        let mut next = vec![Rational::zero(); degree + 1];
        for (e, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if e + 1 <= degree {
                next[e + 1] += c;
            }
            next[e] -= c * &xs[i];
        }
        next[0] += &dd[i];
        coeffs = next;
    }
    for (m, v) in extra {
        let x = Rational::from_integer(BigInt::from(*m));
        let y = coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * &x + c);
        if &y != v {
            return Err(Error::InconsistentData { degree, m: *m });
        }
    }
    Ok(coeffs)
}

/// The quantities whose Bernoulli expressions can be searched for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// `T_3(p,1) mod p`.
    Zhao,
    /// `T_n(p,1) mod p` for odd `n`.
    ZhouCai(usize),
    /// `R_n^(m)(p) mod p`.
    R(usize),
    /// `T_n(p,r) mod p^(r+1)`, searched as `p^r` times a Bernoulli expression.
    T { n: usize, r: u32 },
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::PreconditionViolated(format!("unknown target `{s}` (zhao, zhoucai<n>, r<n>, t<n>_r<r>)"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        if s == "zhao" {
            return Ok(Target::Zhao);
        }
        if let Some(n) = s.strip_prefix("zhoucai").map(|t| t.trim_start_matches([':', '_'])) {
            let n = num(n)?;
            return if n >= 3 && n % 2 == 1 { Ok(Target::ZhouCai(n)) } else { Err(bad()) };
        }
        if let Some((n, r)) = s.strip_prefix('t').and_then(|t| t.split_once("_r")) {
            let (n, r) = (num(n)?, num(r)? as u32);
            return if n >= 2 && r >= 1 { Ok(Target::T { n, r }) } else { Err(bad()) };
        }
        if let Some(n) = s.strip_prefix('r') {
            let n = num(n)?;
            return if n >= 2 { Ok(Target::R(n)) } else { Err(bad()) };
        }
        Err(bad())
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Zhao => write!(f, "zhao"),
            Target::ZhouCai(n) => write!(f, "zhoucai{n}"),
            Target::R(n) => write!(f, "r{n}"),
            Target::T { n, r } => write!(f, "t{n}_r{r}"),
        }
    }
}

impl Target {
    pub fn uses_m(&self) -> bool {
        matches!(self, Target::R(_))
    }

    /// Weight of the Bernoulli monomials expected on the right side.
    pub fn natural_weight(&self) -> u64 {
        match *self {
            Target::Zhao => 3,
            Target::ZhouCai(n) | Target::R(n) => n as u64,
            Target::T { n, .. } => n as u64 + 1,
        }
    }

    /// Smallest prime at which the quantity is defined.
    fn min_prime(&self) -> u64 {
        match *self {
            Target::Zhao => 3,
            Target::ZhouCai(n) => n as u64 + 3,
            Target::R(n) | Target::T { n, .. } => n as u64 + 1,
        }
    }

    /// Exponent of the raw window and the power of `p` in front of the
    /// Bernoulli part.
    fn shape(&self) -> (u32, u32) {
        match *self {
            Target::T { r, .. } => (r + 1, r),
            _ => (1, 0),
        }
    }

    /// Cache tag of the raw window, e.g. `zhao` or `r8_m2`.
    pub fn tag(&self, m: u64) -> String {
        if self.uses_m() {
            format!("{self}_m{m}")
        } else {
            self.to_string()
        }
    }

    /// Inverse of [`Target::tag`].
    pub fn from_tag(tag: &str) -> Option<(Target, u64)> {
        if let Some((t, m)) = tag.rsplit_once("_m") {
            let t: Target = t.parse().ok()?;
            return t.uses_m().then_some(()).and(m.parse().ok().map(|m| (t, m)));
        }
        let t: Target = tag.parse().ok()?;
        (!t.uses_m()).then_some((t, 0))
    }

    pub fn evaluate(&self, m: u64, modulus: &Modulus) -> Result<Residue> {
        match *self {
            Target::Zhao => t_n_fast(3, 1, modulus),
            Target::ZhouCai(n) => t_n_fast(n, 1, modulus),
            Target::R(n) => r_nm_fast(n, m, modulus),
            Target::T { n, r } => t_n_fast(n, r, modulus),
        }
    }

    /// The raw window over `primes`, read from and written to `cache`.
    pub fn window(&self, m: u64, primes: &[u64], cache: Option<&Cache>) -> Result<PrimeWindow> {
        let (a, _) = self.shape();
        let tag = self.tag(m);
        PrimeWindow::collect(primes, a, |modulus| {
            let p = modulus.p();
            if let Some(v) = cache.and_then(|c| c.window(&tag, p, a)) {
                if v < *modulus.q() {
                    return Ok(Residue::new(&BigInt::from_biguint(Sign::Plus, v), modulus));
                }
            }
            let v = self.evaluate(m, modulus)?;
            if let Some(c) = cache {
                c.put_window(&tag, p, a, v.value());
            }
            Ok(v)
        })
    }
}

#[derive(Clone, Debug)]
pub struct DiscoveryJob {
    pub target: Target,
    pub weight: u64,
    pub m: u64,
    pub primes: usize,
    pub height_bound: BigUint,
}

impl DiscoveryJob {
    pub fn new(target: Target, primes: usize) -> Self {
        DiscoveryJob {
            target,
            weight: target.natural_weight(),
            m: 1,
            primes,
            height_bound: BigUint::from(DEFAULT_HEIGHT_BOUND),
        }
    }

    /// The first `self.primes` primes at which the target and every basis
    /// monomial are defined.
    pub fn prime_set(&self) -> Vec<u64> {
        let lo = self.target.min_prime().max(self.weight + 2).max(5);
        let mut limit = 64 + lo * 2;
        loop {
            let ps: Vec<u64> = sieve_primes(limit).into_iter().filter(|&p| p >= lo).take(self.primes).collect();
            if ps.len() == self.primes {
                return ps;
            }
            limit *= 2;
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiscoveryReport {
    pub target: Target,
    pub m: u64,
    pub basis: Vec<BernoulliMonomial>,
    pub primes: Vec<u64>,
    /// Exponent of the windows the lattice was built from.
    pub exponent: u32,
    /// Whether the known power of `p` was divided out before the CRT.
    pub normalized: bool,
    pub outcome: Discovery,
}

impl DiscoveryReport {
    /// Coefficients with respect to `prod B_(p-w)` instead of `prod beta_w`.
    pub fn bernoulli_coefficients(&self) -> Option<Vec<Rational>> {
        match &self.outcome {
            Discovery::Found(res) => {
                Some(res.coefficients.iter().zip(&self.basis).map(|(c, b)| c * b.bernoulli_scale()).collect())
            }
            Discovery::NoResult { .. } => None,
        }
    }
}

/// Collects the target and basis windows and runs the lattice search.
/// Known `p`-power factors are divided out per prime when every entry
/// allows it; otherwise the basis is multiplied by them instead.
pub fn run_discovery(job: &DiscoveryJob, cache: Option<&Cache>) -> Result<DiscoveryReport> {
    if job.primes == 0 {
        return Err(Error::PreconditionViolated("need at least one prime".into()));
    }
    if let Target::R(n) = job.target {
        if job.m == 0 || job.m >= n as u64 {
            return Err(Error::PreconditionViolated(format!("R_{n}^(m) needs 1 <= m < {n}, got m = {}", job.m)));
        }
    }
    let basis = basis_monomials(job.weight);
    if basis.is_empty() {
        return Err(Error::PreconditionViolated(format!("no Bernoulli monomials of weight {}", job.weight)));
    }
    let primes = job.prime_set();
    let raw = job.target.window(job.m, &primes, cache)?;
    if let Some(c) = cache {
        c.flush()?;
    }
    let windows: Vec<PrimeWindow> = basis.iter().map(|b| monomial_window(b, &primes)).collect::<Result<_>>()?;
    let (a, shift) = job.target.shape();
    let (target, basis_windows, normalized) = match raw.unshifted(shift) {
        Some(t) => (t.shifted(0, 1)?, windows, true),
        None => {
            let scaled = windows.iter().map(|w| w.shifted(shift, a)).collect::<Result<Vec<_>>>()?;
            (raw, scaled, false)
        }
    };
    let exponent = target.exponent();
    let outcome = discover_combination(&target, &basis_windows, &job.height_bound)?;
    Ok(DiscoveryReport { target: job.target, m: job.m, basis, primes, exponent, normalized, outcome })
}
