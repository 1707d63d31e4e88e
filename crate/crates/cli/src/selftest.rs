//! Oracle-equivalence and invariant suites, plus an audit that re-derives
//! every cached value it is asked to check.

use mhsc::arith::{crt_combine, rational_residue, sieve_primes, Modulus, Rational, Residue};
use mhsc::bernoulli::{kummer_check, power_sum_formula};
use mhsc::cache::Cache;
use mhsc::claims::{find_claim, sweep_claims, verify_claim, Grid};
use mhsc::discover::{rational_reconstruction, Target};
use mhsc::mhs::{stuffle_check, Index};
use mhsc::sums::{r_nm_fast, r_nm_naive, t_n_fast, t_n_naive};
use mhsc::Error;
use num_bigint::BigInt;

/// Records that cost more than this many `p^max(r,1)` units are skipped by
/// the quick cache audit.
const QUICK_AUDIT_COST: u64 = 400;

pub struct Suite {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, checks: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn error(&mut self, what: String, e: Error) {
        self.checks += 1;
        self.failures.push(format!("{what}: {e}"));
    }
}

pub fn run(quick: bool, budget: u64, cache: Option<&Cache>) -> Vec<Suite> {
    let mut out = vec![
        compositions(quick, budget),
        restricted_compositions(quick, budget),
        stuffle(quick),
        power_sums(quick),
        kummer(quick),
        reconstruction(quick),
        claims(quick),
    ];
    if let Some(c) = cache {
        out.push(audit(c, quick));
    }
    out
}

fn compositions(quick: bool, budget: u64) -> Suite {
    let mut s = Suite::new("t_n fast = naive");
    let primes: &[u64] = if quick { &[5, 7] } else { &[3, 5, 7, 11] };
    for &p in primes {
        for n in 2..=4 {
            for r in 1..=2 {
                let m = Modulus::new(p, r + 1).expect("prime");
                match (t_n_fast(n, r, &m), t_n_naive(n, r, &m, budget)) {
                    (Ok(a), Ok(b)) => s.check(a == b, || format!("T_{n}({p},{r}): {a} vs {b}")),
                    (_, Err(Error::BudgetExceeded { .. })) => {}
                    (Err(e), _) | (_, Err(e)) => s.error(format!("T_{n}({p},{r})"), e),
                }
            }
        }
    }
    s
}

fn restricted_compositions(quick: bool, budget: u64) -> Suite {
    let mut s = Suite::new("r_nm fast = naive");
    let primes: &[u64] = if quick { &[7, 11] } else { &[7, 11, 13] };
    let nmax = if quick { 4 } else { 6 };
    for &p in primes {
        let m = Modulus::new(p, 1).expect("prime");
        for n in 2..=nmax {
            for k in 1..n as u64 {
                match (r_nm_fast(n, k, &m), r_nm_naive(n, k, &m, budget)) {
                    (Ok(a), Ok(b)) => s.check(a == b, || format!("R_{n}^({k})({p}): {a} vs {b}")),
                    (_, Err(Error::BudgetExceeded { .. })) => {}
                    (Err(e), _) | (_, Err(e)) => s.error(format!("R_{n}^({k})({p})"), e),
                }
            }
        }
    }
    s
}

/// Compositions of every weight up to `w`, as indices of depth at most 2.
fn small_indices(w: u32) -> Vec<Index> {
    let mut out = Vec::new();
    for a in 1..=w {
        out.push(Index::new(vec![a]).expect("positive"));
        for b in 1..=w - a {
            out.push(Index::new(vec![a, b]).expect("positive"));
        }
    }
    out
}

fn stuffle(quick: bool) -> Suite {
    let mut s = Suite::new("stuffle");
    let primes: &[u64] = if quick { &[5, 7] } else { &[5, 7, 11] };
    let idx = small_indices(if quick { 4 } else { 5 });
    for &p in primes {
        let m = Modulus::new(p, 2).expect("prime");
        for a in &idx {
            for b in &idx {
                if a.depth() + b.depth() > 2 || a.weight() + b.weight() > 5 {
                    continue;
                }
                match stuffle_check(a, b, p * p, &m) {
                    Ok(ok) => s.check(ok, || format!("{a} * {b} at p = {p}")),
                    Err(e) => s.error(format!("{a} * {b} at p = {p}"), e),
                }
            }
        }
    }
    s
}

fn power_sums(quick: bool) -> Suite {
    let mut s = Suite::new("power sums");
    let nmax: u64 = if quick { 20 } else { 50 };
    for m in 0..=12u32 {
        for n in 1..=nmax {
            let direct: BigInt = (1..n).map(|j| BigInt::from(j).pow(m)).sum();
            match power_sum_formula(m as u64, n) {
                Ok(f) => s.check(f == Rational::from_integer(direct.clone()), || format!("sum j^{m}, j < {n}")),
                Err(e) => s.error(format!("sum j^{m}, j < {n}"), e),
            }
        }
    }
    s
}

fn kummer(quick: bool) -> Suite {
    let mut s = Suite::new("kummer");
    let primes: &[u64] = if quick { &[5, 7] } else { &[5, 7, 11, 13] };
    for &p in primes {
        for m1 in (2..=24u64).step_by(2) {
            for m2 in (m1 + 2..=24).step_by(2) {
                if m1 % (p - 1) == 0 || (m2 - m1) % (p - 1) != 0 {
                    continue;
                }
                match kummer_check(p, m1, m2) {
                    Ok(k) => s.check(k.holds, || format!("B_{m1}/{m1} vs B_{m2}/{m2} mod {p}")),
                    Err(e) => s.error(format!("B_{m1}/{m1} vs B_{m2}/{m2} mod {p}"), e),
                }
            }
        }
    }
    s
}

fn reconstruction(quick: bool) -> Suite {
    let mut s = Suite::new("rational reconstruction");
    let h: i64 = if quick { 12 } else { 40 };
    // The product of these primes exceeds 2 h^2 for every h used here.
    let primes: Vec<u64> = sieve_primes(200).into_iter().filter(|&p| p > 100).take(3).collect();
    for a in -h..=h {
        for b in 1..=h {
            let x = Rational::new(BigInt::from(a), BigInt::from(b));
            let parts: Vec<Residue> = primes
                .iter()
                .map(|&p| rational_residue(&x, &Modulus::new(p, 1).expect("prime")).expect("unit denominator"))
                .collect();
            match crt_combine(&parts) {
                Ok((v, m)) => s.check(rational_reconstruction(&v, &m) == Some(x.clone()), || format!("{x}")),
                Err(e) => s.error(format!("{x}"), e),
            }
        }
    }
    s
}

fn claims(quick: bool) -> Suite {
    let mut s = Suite::new("claims");
    let grids: Vec<(&str, u64, Option<(u32, u32)>)> = if quick {
        vec![("zhao", 50, None), ("main_n2", 23, Some((1, 2))), ("wangcai", 13, Some((1, 2)))]
    } else {
        vec![("zhao", 199, None), ("main_n2", 97, Some((1, 3))), ("wangcai", 13, Some((1, 3))), ("main_n4", 13, Some((2, 2)))]
    };
    for (id, pmax, r) in grids {
        let grid = Grid { primes: sieve_primes(pmax), r, m: None };
        match sweep_claims(&[id], &grid, None) {
            Ok(recs) => {
                for rec in recs {
                    s.check(rec.status.is_pass(), || rec.row().tsv());
                }
            }
            Err(e) => s.error(id.to_string(), e),
        }
    }
    s
}

fn audit(cache: &Cache, quick: bool) -> Suite {
    let mut s = Suite::new("cache");
    for (line, text) in cache.corrupt_lines() {
        s.check(false, || format!("{}:{line}: unreadable entry {text}", cache.path().display()));
    }
    let cost = |p: u64, r: u32| p.saturating_pow(r.max(1));
    for rec in cache.records() {
        if quick && cost(rec.p, rec.r) > QUICK_AUDIT_COST {
            continue;
        }
        let label = format!("record {} p={} r={} m={}", rec.claim, rec.p, rec.r, rec.m);
        match find_claim(&rec.claim) {
            Ok(c) => {
                let fresh = verify_claim(c, rec.p, rec.r, rec.m);
                s.check(fresh == rec, || format!("{label} disagrees with a fresh evaluation"));
            }
            Err(e) => s.error(label, e),
        }
    }
    for (tag, p, a, value) in cache.windows() {
        let label = format!("window {tag} p={p} a={a}");
        let Some((target, m)) = Target::from_tag(&tag) else {
            s.check(false, || format!("{label}: unknown tag"));
            continue;
        };
        if quick && cost(p, a.saturating_sub(1)) > QUICK_AUDIT_COST {
            continue;
        }
        match Modulus::new(p, a).and_then(|md| target.evaluate(m, &md)) {
            Ok(v) => s.check(v.value() == &value, || format!("{label} disagrees with a fresh evaluation")),
            Err(e) => s.error(label, e),
        }
    }
    s
}
