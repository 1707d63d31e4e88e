//! Registry of congruence statements, with uniform evaluation of both sides
//! and sweeps over prime grids.
//!
//! Every registered claim pairs a left side computed by the sum engines
//! with a right side built from Bernoulli numbers `B_{a p - b}`. Lemmas
//! about the residue-class sums `S_k(x, p^r)` are checked instance by
//! instance. Claims whose statement involves several displays report the
//! first failing display.
//!
//! Grid coordinates a claim does not use are reported as 0. The Zhou–Cai
//! claims carry the number of parts `n` in the `m` coordinate.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, rational_residue, split_valuation, Modulus, Rational, Residue};
use crate::bernoulli::{bernoulli_padic, PadicValue};
use crate::cache::Cache;
use crate::error::{Error, Result};
use crate::mhs::{constrained_mhs, s_k_x, ConstraintSet, Index};
use crate::sums::{r_nm_fast, sigma, t_n_fast};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Polynomials in `m` with rational coefficients, lowest degree first.
pub mod poly {
    use super::*;

    pub fn constant(c: Rational) -> Vec<Rational> {
        vec![c]
    }

    pub fn from_ints(coeffs: &[i64]) -> Vec<Rational> {
        coeffs.iter().map(|&c| qi(c)).collect()
    }

    pub fn mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    /// `C(m + s, k)` as a polynomial in `m`.
    pub fn binomial_shifted(s: i64, k: u32) -> Vec<Rational> {
        let mut out = vec![Rational::one()];
        let mut fact = BigInt::one();
        for j in 0..k as i64 {
            out = mul(&out, &[qi(s - j), Rational::one()]);
            fact *= BigInt::from(j + 1);
        }
        let f = Rational::from_integer(fact);
        out.into_iter().map(|c| c / &f).collect()
    }

    pub fn eval(coeffs: &[Rational], m: u64) -> Rational {
        let x = Rational::from_integer(BigInt::from(m));
        coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * &x + c)
    }
}

/// `B_{p_mult * p - offset}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BernoulliFactor {
    pub p_mult: u64,
    pub offset: u64,
}

impl BernoulliFactor {
    /// `B_{p-w}`.
    pub fn top(w: u64) -> Self {
        BernoulliFactor { p_mult: 1, offset: w }
    }

    pub fn index(&self, p: u64) -> Result<u64> {
        (self.p_mult * p)
            .checked_sub(self.offset)
            .ok_or_else(|| Error::OutOfDomain(format!("B_({}p-{}) at p = {p}", self.p_mult, self.offset)))
    }
}

impl fmt::Display for BernoulliFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p_mult {
            1 => write!(f, "B_(p-{})", self.offset),
            k => write!(f, "B_({k}p-{})", self.offset),
        }
    }
}

/// `coeff * poly(m) * p^(c0 + c1 r) * prod B / prod (a p + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprTerm {
    pub coeff: Rational,
    pub m_poly: Vec<Rational>,
    pub p_exp: (i64, i64),
    pub factors: Vec<BernoulliFactor>,
    pub denominators: Vec<(i64, i64)>,
}

impl ExprTerm {
    pub fn new(coeff: Rational) -> Self {
        ExprTerm { coeff, m_poly: vec![Rational::one()], p_exp: (0, 0), factors: Vec::new(), denominators: Vec::new() }
    }

    /// Multiplies by `B_{p-w}` for each listed `w`.
    pub fn weights(mut self, ws: &[u64]) -> Self {
        self.factors.extend(ws.iter().map(|&w| BernoulliFactor::top(w)));
        self
    }

    pub fn factor(mut self, f: BernoulliFactor) -> Self {
        self.factors.push(f);
        self
    }

    pub fn p_power(mut self, c0: i64, c1: i64) -> Self {
        self.p_exp = (c0, c1);
        self
    }

    pub fn poly(mut self, m_poly: Vec<Rational>) -> Self {
        self.m_poly = m_poly;
        self
    }

    /// Divides by `a p + b`.
    pub fn over(mut self, a: i64, b: i64) -> Self {
        self.denominators.push((a, b));
        self
    }

    fn evaluate(&self, p: u64, r: u32, m: u64, modulus: &Modulus) -> Result<Residue> {
        let e = modulus.exponent() as i64;
        let mut c = &self.coeff * poly::eval(&self.m_poly, m);
        for &(a, b) in &self.denominators {
            let d = BigInt::from(a) * BigInt::from(p) + BigInt::from(b);
            if d.is_zero() {
                return Err(Error::OutOfDomain(format!("factor {a}p{b:+} vanishes at p = {p}")));
            }
            c /= Rational::from_integer(d);
        }
        if c.is_zero() {
            return Ok(Residue::zero(modulus));
        }
        let (vc, uc) = split_valuation(&c, p);
        let base = self.p_exp.0 + self.p_exp.1 * r as i64 + vc;
        let prec = (e - base).max(1) as u32;
        let mut total = base;
        let mut units = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let k = f.index(p)?;
            match bernoulli_padic(k, p, prec)? {
                PadicValue::Zero => return Ok(Residue::zero(modulus)),
                PadicValue::Value { valuation, .. } if valuation < 0 => {
                    return Err(Error::ValuationError { index: k, p })
                }
                PadicValue::Value { valuation, unit } => {
                    total += valuation;
                    units.push(unit);
                }
            }
        }
        if total < 0 {
            return Err(Error::NotPIntegral { p, valuation: total });
        }
        if total >= e {
            return Ok(Residue::zero(modulus));
        }
        let need = Modulus::new(p, (e - total) as u32)?;
        let mut unit = rational_residue(&uc, &need)?;
        for u in units {
            unit = unit.mul(&u.reduce(need.exponent())?)?;
        }
        Ok(Residue::new(&BigInt::from(unit.value().clone()), modulus).mul_p_power(total as u32))
    }
}

impl fmt::Display for ExprTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        if self.m_poly.len() > 1 || self.m_poly.first() != Some(&Rational::one()) {
            let parts: Vec<String> = self.m_poly.iter().map(|c| c.to_string()).collect();
            write!(f, "*P(m)[{}]", parts.join(","))?;
        }
        match self.p_exp {
            (0, 0) => {}
            (c0, 0) => write!(f, "*p^{c0}")?,
            (0, 1) => write!(f, "*p^r")?,
            (c0, c1) => write!(f, "*p^({c0}+{c1}r)")?,
        }
        for b in &self.factors {
            write!(f, "*{b}")?;
        }
        for (a, b) in &self.denominators {
            write!(f, "/({a}p{b:+})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BernoulliExpression {
    pub terms: Vec<ExprTerm>,
}

impl BernoulliExpression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(term: ExprTerm) -> Self {
        BernoulliExpression { terms: vec![term] }
    }

    pub fn plus(mut self, term: ExprTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn negated(&self) -> Self {
        let terms = self.terms.iter().map(|t| ExprTerm { coeff: -&t.coeff, ..t.clone() }).collect();
        BernoulliExpression { terms }
    }

    /// Value modulo `modulus` at the grid point `(p, r, m)`.
    pub fn evaluate(&self, r: u32, m: u64, modulus: &Modulus) -> Result<Residue> {
        let mut acc = Residue::zero(modulus);
        for t in &self.terms {
            acc = acc.add(&t.evaluate(modulus.p(), r, m, modulus)?)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for BernoulliExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Constraint shapes used by the depth-3 sub-sums and their relatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Plain,
    /// `u_1, u_3` prime to `p`, `u_i = u_j (mod p)`.
    Pair(usize, usize),
    /// All three variables prime to `p`, `u_i = u_j (mod p)`.
    CoprimePair(usize, usize),
    /// `u_1, u_3` prime to `p`, `p | u_2`.
    MiddleZero,
    /// `u_1` prime to `p`, all variables congruent.
    AllCongruent,
}

impl Shape {
    fn constraints(&self, depth: usize) -> Result<ConstraintSet> {
        match self {
            Shape::Plain => Ok(ConstraintSet::all_coprime(depth)),
            Shape::Pair(i, j) => ConstraintSet::restricted_pair(*i, *j),
            Shape::CoprimePair(i, j) => ConstraintSet::new(3, vec![true; 3], vec![(*i, *j)]),
            Shape::MiddleZero => ConstraintSet::new(3, vec![true, false, true], vec![(2, 0)]),
            Shape::AllCongruent => Ok(ConstraintSet::all_congruent(depth)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Lhs {
    /// `T_n(p, r)`; a fixed `r` overrides the grid.
    T { n: usize, r: Option<u32> },
    /// `T_m(p, 1)` with the part count taken from the `m` coordinate.
    TPartsFromM,
    /// `R_n^(m)(p)`.
    R { n: usize },
    /// `sum c * H^shape_{p^r}(display)`, in display order.
    Mhs(Vec<(i64, Vec<u32>, Shape)>),
    /// `sigma(p^r)`.
    Sigma,
}

impl Lhs {
    fn evaluate(&self, r: u32, m: u64, modulus: &Modulus) -> Result<Residue> {
        match self {
            Lhs::T { n, r: fixed } => t_n_fast(*n, fixed.unwrap_or(r), modulus),
            Lhs::TPartsFromM => t_n_fast(m as usize, 1, modulus),
            Lhs::R { n } => r_nm_fast(*n, m, modulus),
            Lhs::Sigma => sigma(r, modulus),
            Lhs::Mhs(terms) => {
                let n = modulus.p().checked_pow(r).ok_or_else(|| Error::OutOfDomain("p^r overflows".into()))?;
                let mut acc = Residue::zero(modulus);
                for (c, display, shape) in terms {
                    let idx = Index::from_display(display)?;
                    let h = constrained_mhs(n, &idx, &shape.constraints(idx.depth())?, modulus)?;
                    acc = acc.add(&h.scale(&BigInt::from(*c)))?;
                }
                Ok(acc)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Expr(BernoulliExpression),
    /// `-(n-1)! B_{p-n}`, `n` odd.
    ZhouCaiOdd,
    /// `-n n! / (2(n+1)) p B_{p-n-1}`, `n` even.
    ZhouCaiEven,
}

impl Rhs {
    pub fn expression(&self, m: u64) -> BernoulliExpression {
        let fact = |n: u64| (1..=n as i64).product::<i64>();
        match self {
            Rhs::Expr(e) => e.clone(),
            Rhs::ZhouCaiOdd => BernoulliExpression::single(ExprTerm::new(qi(-fact(m - 1))).weights(&[m])),
            Rhs::ZhouCaiEven => BernoulliExpression::single(
                ExprTerm::new(q(-(m as i64) * fact(m), 2 * (m as i64 + 1))).p_power(1, 0).weights(&[m + 1]),
            ),
        }
    }
}

/// One displayed congruence: `lhs = rhs (mod p^(c0 + c1 r))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub lhs: Lhs,
    pub rhs: Rhs,
    pub exponent: (u32, u32),
}

/// Properties of `S_k(x, p^r)`; `k` is the `m` coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyPart {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Congruence(Vec<Relation>),
    Key(KeyPart),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub p_min: u64,
    pub p_max: Option<u64>,
    /// `(r_min, r_max_hint)`; `None` when the claim does not depend on `r`.
    pub r: Option<(u32, u32)>,
    /// `(m_min, m_max_hint)`; `None` when unused.
    pub m: Option<(u64, u64)>,
    pub m_parity: Option<Parity>,
    /// Requires `p >= m + k`.
    pub p_over_m: Option<u64>,
}

impl Domain {
    fn base(p_min: u64) -> Self {
        Domain { p_min, p_max: None, r: None, m: None, m_parity: None, p_over_m: None }
    }

    fn with_r(mut self, lo: u32, hi: u32) -> Self {
        self.r = Some((lo, hi));
        self
    }

    fn with_m(mut self, lo: u64, hi: u64) -> Self {
        self.m = Some((lo, hi));
        self
    }

    /// `Ok` with the normalized `(r, m)`, or the reason the point is outside.
    pub fn check(&self, p: u64, r: u32, m: u64) -> std::result::Result<(u32, u64), String> {
        if !is_prime(p) {
            return Err(format!("{p} is not prime"));
        }
        if p < self.p_min {
            return Err(format!("p = {p} is below p_min = {}", self.p_min));
        }
        if let Some(hi) = self.p_max {
            if p > hi {
                return Err(format!("p = {p} is above p_max = {hi}"));
            }
        }
        let r = match self.r {
            None => 0,
            Some((lo, _)) if r < lo => return Err(format!("r = {r} is below r_min = {lo}")),
            Some(_) => r,
        };
        let m = match self.m {
            None => 0,
            Some((lo, _)) if m < lo => return Err(format!("m = {m} is below {lo}")),
            Some(_) => m,
        };
        match self.m_parity {
            Some(Parity::Odd) if m % 2 == 0 => return Err(format!("m = {m} must be odd")),
            Some(Parity::Even) if m % 2 == 1 => return Err(format!("m = {m} must be even")),
            _ => {}
        }
        if let Some(k) = self.p_over_m {
            if p < m + k {
                return Err(format!("needs p >= m + {k}"));
            }
        }
        Ok((r, m))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claim {
    pub id: &'static str,
    pub description: &'static str,
    pub statement: Statement,
    pub domain: Domain,
    /// Reported but not expected to hold everywhere.
    pub exploratory: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped(String),
    Error(String),
}

impl Status {
    pub fn is_pass(&self) -> bool {
        matches!(self, Status::Pass)
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Status::Fail | Status::Error(_))
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Pass => write!(f, "pass"),
            Status::Fail => write!(f, "fail"),
            Status::Skipped(why) => write!(f, "skipped: {why}"),
            Status::Error(why) => write!(f, "error: {why}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationRecord {
    pub claim: String,
    pub p: u64,
    pub r: u32,
    pub m: u64,
    pub lhs: Option<Residue>,
    pub rhs: Option<Residue>,
    pub status: Status,
}

/// Flat form shared by the TSV and JSON reports and the cache.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRow {
    pub claim: String,
    pub p: u64,
    pub r: u32,
    pub m: u64,
    pub lhs: String,
    pub rhs: String,
    pub modulus: String,
    pub status: String,
}

pub const TSV_HEADER: &str = "claim\tp\tr\tm\tlhs\trhs\tmodulus\tstatus";

impl VerificationRecord {
    pub fn row(&self) -> RecordRow {
        let show = |x: &Option<Residue>| x.as_ref().map_or("-".to_string(), |r| r.value().to_string());
        let modulus = self.lhs.as_ref().or(self.rhs.as_ref()).map_or("-".to_string(), |r| r.modulus().to_string());
        RecordRow {
            claim: self.claim.clone(),
            p: self.p,
            r: self.r,
            m: self.m,
            lhs: show(&self.lhs),
            rhs: show(&self.rhs),
            modulus,
            status: self.status.to_string(),
        }
    }

    pub fn from_row(row: &RecordRow) -> Result<Self> {
        let bad = |what: &str| Error::Cache(format!("malformed {what} in record for {}", row.claim));
        let status = match row.status.as_str() {
            "pass" => Status::Pass,
            "fail" => Status::Fail,
            s => match (s.strip_prefix("skipped: "), s.strip_prefix("error: ")) {
                (Some(why), _) => Status::Skipped(why.to_string()),
                (_, Some(why)) => Status::Error(why.to_string()),
                _ => return Err(bad("status")),
            },
        };
        let modulus = if row.modulus == "-" {
            None
        } else {
            let q: BigUint = row.modulus.parse().map_err(|_| bad("modulus"))?;
            Some(modulus_from_q(row.p, &q).ok_or_else(|| bad("modulus"))?)
        };
        let residue = |s: &str| -> Result<Option<Residue>> {
            if s == "-" {
                return Ok(None);
            }
            let m = modulus.as_ref().ok_or_else(|| bad("modulus"))?;
            let v: BigUint = s.parse().map_err(|_| bad("residue"))?;
            if &v >= m.q() {
                return Err(bad("residue"));
            }
            Ok(Some(Residue::new(&BigInt::from(v), m)))
        };
        Ok(VerificationRecord {
            claim: row.claim.clone(),
            p: row.p,
            r: row.r,
            m: row.m,
            lhs: residue(&row.lhs)?,
            rhs: residue(&row.rhs)?,
            status,
        })
    }
}

impl RecordRow {
    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.claim, self.p, self.r, self.m, self.lhs, self.rhs, self.modulus, self.status
        )
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("plain fields serialize")
    }
}

fn modulus_from_q(p: u64, q: &BigUint) -> Option<Modulus> {
    let mut a = 0u32;
    let mut x = q.clone();
    let pb = BigUint::from(p);
    while x > BigUint::one() {
        if !(&x % &pb).is_zero() {
            return None;
        }
        x /= &pb;
        a += 1;
    }
    Modulus::new(p, a).ok()
}

fn relation(lhs: Lhs, rhs: BernoulliExpression, exponent: (u32, u32)) -> Relation {
    Relation { lhs, rhs: Rhs::Expr(rhs), exponent }
}

/// `c * p^(2r) * B_{p-5}`, the shape of every weight-5 lemma.
fn weight5(c: Rational) -> BernoulliExpression {
    BernoulliExpression::single(ExprTerm::new(c).p_power(0, 2).weights(&[5]))
}

fn mhs1(display: &[u32], shape: Shape) -> Lhs {
    Lhs::Mhs(vec![(1, display.to_vec(), shape)])
}

fn conj_r11() -> BernoulliExpression {
    let a = poly::mul(&poly::binomial_shifted(2, 5), &poly::from_ints(&[33, 0, 1]));
    let b = poly::from_ints(&[0, 193248, 0, 152900, 0, 16401, 0, 330, 0, 1]);
    BernoulliExpression::single(ExprTerm::new(qi(88 * 120)).poly(a).weights(&[3, 3, 5]))
        .plus(ExprTerm::new(qi(10)).poly(b).weights(&[11]))
}

fn conj_r12() -> BernoulliExpression {
    let c3 = poly::binomial_shifted(1, 3);
    let a = poly::binomial_shifted(3, 7);
    let b = poly::mul(&c3, &poly::from_ints(&[32256, 0, 6196, 0, 211, 0, 1]));
    let c = poly::mul(&c3, &poly::from_ints(&[31392, 0, 6508, 0, 187, 0, 1]));
    BernoulliExpression::single(ExprTerm::new(q(-55 * 40320, 9)).poly(a).weights(&[3, 3, 3, 3]))
        .plus(ExprTerm::new(q(-22 * 120, 9)).poly(b).weights(&[3, 9]))
        .plus(ExprTerm::new(q(-66 * 24, 7)).poly(c).weights(&[5, 7]))
}

fn build_registry() -> Vec<Claim> {
    use Statement::{Congruence, Key};
    let single = |lhs, rhs, exponent| Congruence(vec![relation(lhs, rhs, exponent)]);
    let term = |c: Rational, ws: &[u64]| ExprTerm::new(c).weights(ws);
    let t = |n| Lhs::T { n, r: None };
    let t1 = |n| Lhs::T { n, r: Some(1) };
    let key = |id, description, part, r_min| Claim {
        id,
        description,
        statement: Key(part),
        domain: Domain::base(3).with_r(r_min, 3).with_m(1, 2),
        exploratory: false,
    };
    let r_expr = |c: Rational, m_poly: Vec<Rational>, ws: &[u64], c0: i64| {
        BernoulliExpression::single(ExprTerm::new(c).poly(m_poly).p_power(c0, 0).weights(ws))
    };
    let mut zhoucai_odd = Domain::base(3).with_m(3, 7);
    zhoucai_odd.m_parity = Some(Parity::Odd);
    zhoucai_odd.p_over_m = Some(3);
    let mut zhoucai_even = Domain::base(3).with_m(2, 6);
    zhoucai_even.m_parity = Some(Parity::Even);
    zhoucai_even.p_over_m = Some(3);
    let mut n4_p5 = Domain::base(5).with_r(2, 3);
    n4_p5.p_max = Some(5);

    vec![
        Claim {
            id: "zhao",
            description: "T_3(p,1) = -2 B_(p-3) mod p",
            statement: single(t1(3), BernoulliExpression::single(term(qi(-2), &[3])), (1, 0)),
            domain: Domain::base(3),
            exploratory: false,
        },
        Claim {
            id: "zhoucai_odd",
            description: "T_n(p,1) = -(n-1)! B_(p-n) mod p, n odd (n in the m slot)",
            statement: Congruence(vec![Relation { lhs: Lhs::TPartsFromM, rhs: Rhs::ZhouCaiOdd, exponent: (1, 0) }]),
            domain: zhoucai_odd,
            exploratory: false,
        },
        Claim {
            id: "zhoucai_even",
            description: "T_n(p,1) = -n n!/(2(n+1)) p B_(p-n-1) mod p^2, n even (n in the m slot)",
            statement: Congruence(vec![Relation { lhs: Lhs::TPartsFromM, rhs: Rhs::ZhouCaiEven, exponent: (2, 0) }]),
            domain: zhoucai_even,
            exploratory: false,
        },
        Claim {
            id: "xiacai",
            description: "T_3(p,1) = -12 B_(p-3)/(p-3) - 3 B_(2p-4)/(p-4) mod p^2",
            statement: single(
                t1(3),
                BernoulliExpression::single(term(qi(-12), &[3]).over(1, -3)).plus(
                    ExprTerm::new(qi(-3)).factor(BernoulliFactor { p_mult: 2, offset: 4 }).over(1, -4),
                ),
                (2, 0),
            ),
            domain: Domain::base(7),
            exploratory: false,
        },
        Claim {
            id: "xiacai_corrected",
            description: "T_3(p,1) = 12 B_(p-3)/(p-3) - 3 B_(2p-4)/(p-2) mod p^2",
            statement: single(
                t1(3),
                BernoulliExpression::single(term(qi(12), &[3]).over(1, -3)).plus(
                    ExprTerm::new(qi(-3)).factor(BernoulliFactor { p_mult: 2, offset: 4 }).over(1, -2),
                ),
                (2, 0),
            ),
            domain: Domain::base(5),
            exploratory: true,
        },
        Claim {
            id: "wangcai",
            description: "T_3(p,r) = -2 p^(r-1) B_(p-3) mod p^r",
            statement: single(
                t(3),
                BernoulliExpression::single(term(qi(-2), &[3]).p_power(-1, 1)),
                (0, 1),
            ),
            domain: Domain::base(3).with_r(1, 3),
            exploratory: false,
        },
        Claim {
            id: "main_n2",
            description: "T_2(p,r) = -(2/3) p^r B_(p-3) mod p^(r+1)",
            statement: single(t(2), BernoulliExpression::single(term(q(-2, 3), &[3]).p_power(0, 1)), (1, 1)),
            domain: Domain::base(5).with_r(1, 3),
            exploratory: false,
        },
        Claim {
            id: "main_n4",
            description: "T_4(p,r) = -(24/5) p^r B_(p-5) mod p^(r+1)",
            statement: single(t(4), BernoulliExpression::single(term(q(-24, 5), &[5]).p_power(0, 1)), (1, 1)),
            domain: Domain::base(7).with_r(2, 3),
            exploratory: false,
        },
        Claim {
            id: "main_n4_p5",
            description: "the n = 4 congruence at p = 5, where B_(p-5) = B_0",
            statement: single(t(4), BernoulliExpression::single(term(q(-24, 5), &[5]).p_power(0, 1)), (1, 1)),
            domain: n4_p5,
            exploratory: true,
        },
        Claim {
            id: "lemma_h2zero",
            description: "H^(2=0)_{p^r}(1,1,1) = 0 mod p^(2r+1)",
            statement: single(mhs1(&[1, 1, 1], Shape::MiddleZero), BernoulliExpression::zero(), (1, 2)),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: false,
        },
        Claim {
            id: "lemma_h111",
            description: "H^{1,1}_{p^r}(1,1,1) = H_{p^r}(1,1,1) = -(2/5) B_(p-5) p^(2r) mod p^(2r+1)",
            statement: Congruence(vec![
                relation(mhs1(&[1, 1, 1], Shape::Pair(1, 1)), weight5(q(-2, 5)), (1, 2)),
                relation(mhs1(&[1, 1, 1], Shape::Plain), weight5(q(-2, 5)), (1, 2)),
            ]),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: false,
        },
        key("lemma_key_i", "S_k(x,p^(r+1)) = p S_k(x,p^r), and the twisted sums over x", KeyPart::I, 1),
        key("lemma_key_ii", "S_k(x,p^r) = 0 mod p^(r-1)", KeyPart::II, 2),
        key("lemma_key_iii", "S_k(x,p^(r+1))^d = p^d S_k(x,p^r)^d mod p^(dr+2)", KeyPart::III, 2),
        key("lemma_key_iv", "S_k(x,p^r)^d two-term expansion mod p^(d(r-1)+2)", KeyPart::IV, 2),
        key("lemma_key_v", "sum_x S_k(x,p^r)^d = dk/(dk+1) p^(d(r-1)+1) B_(p-1-dk)", KeyPart::V, 2),
        key("lemma_key_vi", "S_1 S_2 at p^(r+1) versus p^r, and sum_x S_1 S_2 = 0 mod p^(2r+1)", KeyPart::VI, 2),
        Claim {
            id: "lemma_h12_h21",
            description: "H^(2)(1,2) + H^(2)(2,1) = (6/5) B_(p-5) p^(2r); H(3) = -(6/5) B_(p-5) p^(2r)",
            statement: Congruence(vec![
                relation(
                    Lhs::Mhs(vec![(1, vec![1, 2], Shape::AllCongruent), (1, vec![2, 1], Shape::AllCongruent)]),
                    weight5(q(6, 5)),
                    (1, 2),
                ),
                relation(mhs1(&[3], Shape::Plain), weight5(q(-6, 5)), (1, 2)),
            ]),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: false,
        },
        Claim {
            id: "cor_h3_111",
            description: "H^(3)_{p^r}(1,1,1) = -(2/5) B_(p-5) p^(2r) mod p^(2r+1)",
            statement: single(mhs1(&[1, 1, 1], Shape::AllCongruent), weight5(q(-2, 5)), (1, 2)),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: false,
        },
        Claim {
            id: "lemma_h13_111",
            description: "H^{1,3}_{p^r}(1,1,1) = -(3/5) p^(2r) B_(p-5) mod p^(2r+1), u_2 prime to p",
            statement: single(mhs1(&[1, 1, 1], Shape::CoprimePair(1, 3)), weight5(q(-3, 5)), (1, 2)),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: false,
        },
        Claim {
            id: "lemma_h13_111_literal",
            description: "lemma_h13_111 with u_2 unrestricted",
            statement: single(mhs1(&[1, 1, 1], Shape::Pair(1, 3)), weight5(q(-3, 5)), (1, 2)),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: true,
        },
        Claim {
            id: "lemma_h12_h23_111",
            description: "H^{1,2}(1,1,1) + H^{2,3}(1,1,1) = -(3/5) p^(2r) B_(p-5) mod p^(2r+1)",
            statement: single(
                Lhs::Mhs(vec![(1, vec![1, 1, 1], Shape::Pair(1, 2)), (1, vec![1, 1, 1], Shape::Pair(2, 3))]),
                weight5(q(-3, 5)),
                (1, 2),
            ),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: false,
        },
        Claim {
            id: "sigma_value",
            description: "sigma(p^r) = -(1/5) p^(2r) B_(p-5) mod p^(2r+1)",
            statement: single(Lhs::Sigma, weight5(q(-1, 5)), (1, 2)),
            domain: Domain::base(5).with_r(2, 3),
            exploratory: false,
        },
        Claim {
            id: "r4_formula",
            description: "R_4^(m)(p) = -(4!/5) m(m^2+1) B_(p-5) p mod p^2",
            statement: single(
                Lhs::R { n: 4 },
                r_expr(q(-24, 5), poly::from_ints(&[0, 1, 0, 1]), &[5], 1),
                (2, 0),
            ),
            domain: Domain::base(7).with_m(1, 3),
            exploratory: false,
        },
        Claim {
            id: "r8_formula",
            description: "R_8^(m)(p) = (112/5) m(m^2+16)(m^2-1) B_(p-3) B_(p-5) mod p",
            statement: single(
                Lhs::R { n: 8 },
                r_expr(
                    q(112, 5),
                    poly::mul(&poly::from_ints(&[0, 16, 0, 1]), &poly::from_ints(&[-1, 0, 1])),
                    &[3, 5],
                    0,
                ),
                (1, 0),
            ),
            domain: Domain::base(11).with_m(1, 5),
            exploratory: false,
        },
        Claim {
            id: "conj_r11",
            description: "R_11^(m)(p) in terms of B_(p-3)^2 B_(p-5) and B_(p-11), as stated",
            statement: single(Lhs::R { n: 11 }, conj_r11(), (1, 0)),
            domain: Domain::base(13).with_m(1, 4),
            exploratory: false,
        },
        Claim {
            id: "conj_r12",
            description: "R_12^(m)(p) in terms of B_(p-3)^4, B_(p-3) B_(p-9), B_(p-5) B_(p-7), as stated",
            statement: single(Lhs::R { n: 12 }, conj_r12(), (1, 0)),
            domain: Domain::base(13).with_m(1, 4),
            exploratory: false,
        },
        Claim {
            id: "conj_r11_signfix",
            description: "conj_r11 with the right side negated",
            statement: single(Lhs::R { n: 11 }, conj_r11().negated(), (1, 0)),
            domain: Domain::base(13).with_m(1, 4),
            exploratory: true,
        },
        Claim {
            id: "conj_r12_signfix",
            description: "conj_r12 with the right side negated",
            statement: single(Lhs::R { n: 12 }, conj_r12().negated(), (1, 0)),
            domain: Domain::base(13).with_m(1, 4),
            exploratory: true,
        },
    ]
}

/// The full registry, in a fixed order.
pub fn list_claims() -> &'static [Claim] {
    static REGISTRY: OnceLock<Vec<Claim>> = OnceLock::new();
    REGISTRY.get_or_init(build_registry)
}

pub fn find_claim(id: &str) -> Result<&'static Claim> {
    list_claims().iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownClaim(id.to_string()))
}

/// One checked congruence: both sides share a modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub label: String,
    pub lhs: Residue,
    pub rhs: Residue,
}

impl Instance {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

fn pm(p: u64, a: u32) -> Result<Modulus> {
    Modulus::new(p, a)
}

/// `S_k(x, p^s)` for `x = 1..p-1`, modulo `p^a`.
fn s_table(k: u32, s: u32, modulus: &Modulus) -> Result<Vec<Residue>> {
    (1..modulus.p()).map(|x| s_k_x(x, k, s, modulus)).collect()
}

fn key_instances(part: KeyPart, p: u64, r: u32, k: u32) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let mut push = |label: String, lhs: Residue, rhs: Residue| out.push(Instance { label, lhs, rhs });
    let xs = 1..p;
    match part {
        KeyPart::I => {
            if r == 1 {
                let m = pm(p, 2)?;
                let (hi, lo) = (s_table(k, 2, &m)?, s_table(k, 1, &m)?);
                for (x, (a, b)) in xs.zip(hi.iter().zip(&lo)) {
                    push(format!("x={x}"), a.clone(), b.mul_p_power(1));
                }
            } else {
                let m = pm(p, r + 3)?;
                let (hi, lo) = (s_table(k, r + 1, &m)?, s_table(k, r, &m)?);
                let diff: Vec<Residue> =
                    hi.iter().zip(&lo).map(|(a, b)| a.sub(&b.mul_p_power(1))).collect::<Result<_>>()?;
                for (x, d) in xs.clone().zip(&diff) {
                    let d = d.reduce(r + 2)?;
                    push(format!("x={x}"), d.clone(), Residue::zero(d.modulus()));
                }
                for l in 0..=3u64 {
                    let mut acc = Residue::zero(&m);
                    for (x, d) in xs.clone().zip(&diff) {
                        acc = acc.add(&d.mul(&Residue::from_u64(x, &m).pow(l))?)?;
                    }
                    push(format!("twisted l={l}"), acc, Residue::zero(&m));
                }
            }
        }
        KeyPart::II => {
            let m = pm(p, r - 1)?;
            for (x, s) in xs.zip(s_table(k, r, &m)?) {
                push(format!("x={x}"), s, Residue::zero(&m));
            }
        }
        KeyPart::III => {
            for d in 1..=3u32 {
                let m = pm(p, d * r + 2)?;
                let (hi, lo) = (s_table(k, r + 1, &m)?, s_table(k, r, &m)?);
                for (x, (a, b)) in xs.clone().zip(hi.iter().zip(&lo)) {
                    push(format!("d={d} x={x}"), a.pow(d as u64), b.pow(d as u64).mul_p_power(d));
                }
            }
        }
        KeyPart::IV => {
            for d in 1..=3u32 {
                let m = pm(p, d * (r - 1) + 2)?;
                let dk = (d * k) as u64;
                let half = rational_residue(&q(dk as i64, 2), &m)?;
                for (x, s) in xs.clone().zip(s_table(k, r, &m)?) {
                    let xi = Residue::from_u64(x, &m).inverse()?;
                    let lead = xi.pow(dk).mul_p_power(d * (r - 1));
                    let next = half.mul(&xi.pow(dk + 1))?.mul_p_power(d * (r - 1) + 1);
                    push(format!("d={d} x={x}"), s.pow(d as u64), lead.add(&next)?);
                }
            }
        }
        KeyPart::V => {
            for d in 1..=3u32 {
                let dk = (d * k) as u64;
                if dk + 1 >= p {
                    continue;
                }
                let m = pm(p, d * (r - 1) + 2)?;
                let mut acc = Residue::zero(&m);
                for s in s_table(k, r, &m)? {
                    acc = acc.add(&s.pow(d as u64))?;
                }
                let rhs = BernoulliExpression::single(
                    ExprTerm::new(q(dk as i64, dk as i64 + 1))
                        .p_power(1 - d as i64, d as i64)
                        .factor(BernoulliFactor::top(1 + dk)),
                );
                push(format!("d={d}"), acc, rhs.evaluate(r, 0, &m)?);
            }
        }
        KeyPart::VI => {
            let m = pm(p, 2 * r + 2)?;
            let prod = |s: u32| -> Result<Vec<Residue>> {
                let (a, b) = (s_table(1, s, &m)?, s_table(2, s, &m)?);
                a.iter().zip(&b).map(|(x, y)| x.mul(y)).collect()
            };
            let (hi, lo) = (prod(r + 1)?, prod(r)?);
            for (x, (a, b)) in xs.zip(hi.iter().zip(&lo)) {
                push(format!("x={x}"), a.clone(), b.mul_p_power(2));
            }
            let mut acc = Residue::zero(&m);
            for v in &lo {
                acc = acc.add(v)?;
            }
            let acc = acc.reduce(2 * r + 1)?;
            push("sum over x".into(), acc.clone(), Residue::zero(acc.modulus()));
        }
    }
    Ok(out)
}

/// Every instance of the claim at an in-domain point.
pub fn instances(c: &Claim, p: u64, r: u32, m: u64) -> Result<Vec<Instance>> {
    let (r, m) = c.domain.check(p, r, m).map_err(Error::OutOfDomain)?;
    match &c.statement {
        Statement::Key(part) => key_instances(*part, p, r, m as u32),
        Statement::Congruence(displays) => displays
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let modulus = pm(p, d.exponent.0 + d.exponent.1 * r)?;
                let lhs = d.lhs.evaluate(r, m, &modulus)?;
                let rhs = d.rhs.expression(m).evaluate(r, m, &modulus)?;
                Ok(Instance { label: format!("display {}", i + 1), lhs, rhs })
            })
            .collect(),
    }
}

pub fn evaluate_lhs(c: &Claim, p: u64, r: u32, m: u64) -> Result<Residue> {
    Ok(pick(instances(c, p, r, m)?).lhs)
}

pub fn evaluate_rhs(c: &Claim, p: u64, r: u32, m: u64) -> Result<Residue> {
    Ok(pick(instances(c, p, r, m)?).rhs)
}

/// The first failing instance, else the first one.
fn pick(mut all: Vec<Instance>) -> Instance {
    let at = all.iter().position(|i| !i.holds()).unwrap_or(0);
    all.swap_remove(at)
}

pub fn verify_claim(c: &Claim, p: u64, r: u32, m: u64) -> VerificationRecord {
    let (rn, mn) = c.domain.check(p, r, m).unwrap_or((r, m));
    let mut record =
        VerificationRecord { claim: c.id.to_string(), p, r: rn, m: mn, lhs: None, rhs: None, status: Status::Pass };
    match instances(c, p, r, m) {
        Ok(all) if all.is_empty() => record.status = Status::Skipped("no instances at this point".into()),
        Ok(all) => {
            let chosen = pick(all);
            record.status = if chosen.holds() { Status::Pass } else { Status::Fail };
            record.lhs = Some(chosen.lhs);
            record.rhs = Some(chosen.rhs);
        }
        Err(Error::OutOfDomain(why)) => record.status = Status::Skipped(why),
        Err(e @ Error::BudgetExceeded { .. }) => record.status = Status::Skipped(e.to_string()),
        Err(e) => record.status = Status::Error(e.to_string()),
    }
    record
}

/// A sweep grid: primes are filtered per claim; `None` ranges fall back to
/// each claim's own hints.
#[derive(Clone, Debug, Default)]
pub struct Grid {
    pub primes: Vec<u64>,
    pub r: Option<(u32, u32)>,
    pub m: Option<(u64, u64)>,
}

fn grid_points(c: &Claim, grid: &Grid) -> Vec<(u64, u32, u64)> {
    let rs: Vec<u32> = match c.domain.r {
        None => vec![0],
        Some((lo, hi)) => {
            let (a, b) = grid.r.unwrap_or((lo, hi));
            (a.max(lo)..=b).collect()
        }
    };
    let ms: Vec<u64> = match c.domain.m {
        None => vec![0],
        Some((lo, hi)) => {
            let (a, b) = grid.m.unwrap_or((lo, hi));
            (a.max(lo)..=b).collect()
        }
    };
    let mut out = Vec::new();
    for &p in &grid.primes {
        for &r in &rs {
            for &m in &ms {
                if c.domain.check(p, r, m).is_ok() {
                    out.push((p, r, m));
                }
            }
        }
    }
    out
}

/// Verifies every in-domain grid point of the named claims, in canonical
/// `(id, p, r, m)` order regardless of scheduling. A cache, when given,
/// answers repeated points and records fresh ones.
pub fn sweep_claims(ids: &[&str], grid: &Grid, cache: Option<&Cache>) -> Result<Vec<VerificationRecord>> {
    let mut claims = ids.iter().map(|id| find_claim(id)).collect::<Result<Vec<_>>>()?;
    claims.sort_by_key(|c| c.id);
    claims.dedup_by_key(|c| c.id);
    let mut jobs = Vec::new();
    for c in claims {
        let mut pts = grid_points(c, grid);
        pts.sort_unstable();
        pts.dedup();
        jobs.extend(pts.into_iter().map(|(p, r, m)| (c, p, r, m)));
    }
    let records = jobs
        .into_par_iter()
        .map(|(c, p, r, m)| {
            if let Some(hit) = cache.and_then(|k| k.record(c.id, p, r, m)) {
                return hit;
            }
            let rec = verify_claim(c, p, r, m);
            if let Some(k) = cache {
                k.put_record(&rec);
            }
            rec
        })
        .collect();
    if let Some(k) = cache {
        k.flush()?;
    }
    Ok(records)
}

/// Exit-style summary of a batch: 0 all pass, 1 otherwise.
pub fn all_pass(records: &[VerificationRecord]) -> bool {
    records.iter().all(|r| !r.status.is_failure())
}
