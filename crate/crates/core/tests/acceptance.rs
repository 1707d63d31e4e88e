//! Acceptance criteria AC1-AC10. Prints one line per criterion, then exits
//! non-zero if any criterion's outcome differs from the expected one.
//! Criteria expected to fail carry the exact set of failing sub-checks;
//! anything outside that set, or a listed failure that starts passing, is
//! an error.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use mhsc::arith::{crt_combine, rational_residue, sieve_primes, Modulus, Rational, Residue};
use mhsc::bernoulli::{kummer_check, power_sum_direct, power_sum_formula};
use mhsc::claims::{poly, sweep_claims, Grid, VerificationRecord};
use mhsc::discover::{rational_reconstruction, run_discovery, Discovery, DiscoveryJob, Target};
use mhsc::mhs::{stuffle_check, Index};
use mhsc::sums::{r_nm_fast, r_nm_naive, sigma_parts, t_n_fast, t_n_naive, DEFAULT_BUDGET};
use num_bigint::BigInt;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

/// Sub-check label to outcome.
#[derive(Default)]
struct Outcome {
    checks: BTreeMap<String, bool>,
    notes: Vec<String>,
}

impl Outcome {
    fn record(&mut self, label: impl Into<String>, ok: bool) {
        let e = self.checks.entry(label.into()).or_insert(true);
        *e &= ok;
    }

    fn records(&mut self, recs: &[VerificationRecord], by_prime: bool) {
        for r in recs {
            let label = if by_prime { format!("{} p={}", r.claim, r.p) } else { r.claim.clone() };
            self.record(label, r.status.is_pass());
        }
    }

    fn failing(&self) -> BTreeSet<String> {
        self.checks.iter().filter(|(_, &ok)| !ok).map(|(l, _)| l.clone()).collect()
    }
}

fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    sieve_primes(hi).into_iter().filter(|&p| p >= lo).collect()
}

fn sweep(id: &str, primes: Vec<u64>, r: Option<(u32, u32)>, m: Option<(u64, u64)>) -> Vec<VerificationRecord> {
    let recs = sweep_claims(&[id], &Grid { primes, r, m }, None).expect("registered id");
    assert!(!recs.is_empty(), "{id}: empty grid");
    recs
}

fn md(p: u64, a: u32) -> Modulus {
    Modulus::new(p, a).unwrap()
}

fn summary(recs: &[VerificationRecord]) -> String {
    let pass = recs.iter().filter(|r| r.status.is_pass()).count();
    format!("{}: {pass}/{} pass", recs[0].claim, recs.len())
}

fn ac1() -> Outcome {
    let mut o = Outcome::default();
    let recs = sweep("main_n2", primes_in(5, 97), Some((1, 3)), None);
    o.records(&recs, false);
    o.notes.push(summary(&recs));
    o
}

fn ac2() -> Outcome {
    let mut o = Outcome::default();
    let mut recs = sweep("main_n4", vec![7, 11, 13], Some((2, 2)), None);
    recs.extend(sweep("main_n4", vec![7], Some((3, 3)), None));
    o.records(&recs, false);
    o.notes.push(summary(&recs));
    let m = md(7, 3);
    let fast = t_n_fast(4, 2, &m).unwrap();
    let naive = t_n_naive(4, 2, &m, DEFAULT_BUDGET).unwrap();
    o.record("t_n_fast = t_n_naive at (7,2)", fast == naive);
    // Reported, not asserted.
    let p5 = sweep("main_n4_p5", vec![5], Some((2, 3)), None);
    o.notes.push(format!("exploratory {}", summary(&p5)));
    o
}

fn ac3() -> Outcome {
    let mut o = Outcome::default();
    for p in [5u64, 7, 11] {
        let (r, a) = (2u32, 4u32);
        // sigma lifted to p^(a+r) so that p^r T_4 is compared exactly modulo p^(a+r).
        let parts = sigma_parts(r, &md(p, a + r)).unwrap();
        let t4 = t_n_fast(4, r, &md(p, a)).unwrap();
        let lifted = Residue::new(&BigInt::from(t4.value().clone()), &md(p, a + r)).mul_p_power(r);
        o.record(format!("24 sigma = p^r T_4 at p={p}"), parts.sigma.scale(&24.into()) == lifted);
        let ie = parts.s_i.sub(&parts.s_ii).unwrap().add(&parts.s_iii).unwrap();
        o.record(format!("sigma = s_I - s_II + s_III at p={p}"), parts.sigma == ie);
    }
    o.notes.push(format!("{} identities", o.checks.len()));
    o
}

fn ac4() -> Outcome {
    let mut o = Outcome::default();
    for id in ["lemma_h2zero", "lemma_h111", "lemma_h12_h21", "cor_h3_111", "lemma_h13_111", "lemma_h12_h23_111"] {
        let recs = sweep(id, vec![7, 11, 13], Some((2, 2)), None);
        o.records(&recs, false);
        // Weight 5 at p = 5 is reported, not asserted.
        let p5 = sweep(id, vec![5], Some((2, 2)), None);
        o.notes.push(format!("{id} at p=5: {}", p5[0].status));
    }
    for id in ["lemma_key_i", "lemma_key_ii", "lemma_key_iii", "lemma_key_iv", "lemma_key_v", "lemma_key_vi"] {
        let recs = sweep(id, vec![5, 7, 11, 13], Some((2, 3)), Some((1, 2)));
        o.records(&recs, true);
    }
    o
}

fn ac5() -> Outcome {
    let mut o = Outcome::default();
    let groups = [
        sweep("zhao", primes_in(3, 199), None, None),
        sweep("zhoucai_odd", primes_in(3, 53), None, Some((3, 7))),
        sweep("zhoucai_even", primes_in(3, 53), None, Some((2, 6))),
        sweep("xiacai", primes_in(7, 53), None, None),
        sweep("wangcai", vec![5, 7, 11, 13], Some((1, 3)), None),
    ];
    for g in &groups {
        o.records(g, false);
        o.notes.push(summary(g));
    }
    let fixed = sweep("xiacai_corrected", primes_in(7, 53), None, None);
    o.notes.push(format!("exploratory {}", summary(&fixed)));
    o
}

fn ac6() -> Outcome {
    let mut o = Outcome::default();
    for g in [
        sweep("r4_formula", primes_in(7, 37), None, Some((1, 3))),
        sweep("r8_formula", primes_in(11, 97), None, Some((1, 5))),
    ] {
        o.records(&g, false);
        o.notes.push(summary(&g));
    }
    o
}

fn ac7() -> Outcome {
    let mut o = Outcome::default();
    for id in ["conj_r11", "conj_r12"] {
        let g = sweep(id, primes_in(13, 149), None, Some((1, 4)));
        o.records(&g, false);
        o.notes.push(summary(&g));
    }
    for id in ["conj_r11_signfix", "conj_r12_signfix"] {
        let g = sweep(id, primes_in(13, 149), None, Some((1, 4)));
        o.notes.push(format!("exploratory {}", summary(&g)));
    }
    o
}

fn ac8() -> Outcome {
    let mut o = Outcome::default();
    for p in [3u64, 5, 7, 11] {
        for n in 2..=4 {
            for r in 1..=2 {
                let m = md(p, r + 1);
                let ok = t_n_fast(n, r, &m).unwrap() == t_n_naive(n, r, &m, DEFAULT_BUDGET).unwrap();
                o.record(format!("T_{n}({p},{r})"), ok);
            }
        }
    }
    for p in [3u64, 5, 7, 11, 13] {
        let m = md(p, 2);
        for n in 2..=6usize {
            for k in 1..n as u64 {
                let ok = r_nm_fast(n, k, &m).unwrap() == r_nm_naive(n, k, &m, DEFAULT_BUDGET).unwrap();
                o.record(format!("R_{n}^({k})({p})"), ok);
            }
        }
    }
    o.notes.push(format!("{} grid points", o.checks.len()));
    o
}

fn discovered(target: &str, weight: u64, m: u64, primes: usize) -> (Discovery, Option<Vec<Rational>>) {
    let mut job = DiscoveryJob::new(target.parse::<Target>().unwrap(), primes);
    job.weight = weight;
    job.m = m;
    let rep = run_discovery(&job, None).unwrap();
    let coeffs = rep.bernoulli_coefficients();
    (rep.outcome, coeffs)
}

fn q(a: i64, b: i64) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

fn ac9() -> Outcome {
    let mut o = Outcome::default();
    let (_, zhao) = discovered("zhao", 3, 1, 30);
    o.record("zhao: -2 B_(p-3)", zhao == Some(vec![q(-2, 1)]));

    let (_, zc) = discovered("zhoucai5", 5, 1, 30);
    o.record("zhoucai n=5: -4! B_(p-5)", zc == Some(vec![q(-24, 1)]));

    // (112/5) m (m^2+16)(m^2-1) at m = 2.
    let r8 = poly::eval(&poly::from_ints(&[0, -16, 0, 15, 0, 1]), 2) * q(112, 5);
    let (_, got) = discovered("r8", 8, 2, 40);
    o.record("r8 m=2", got == Some(vec![r8.clone()]));

    // The printed R_11 coefficients at m = 1: 88 5! C(3,5) (1+33) and 10 (1+330+16401+152900+193248).
    let printed = vec![q(0, 1), q(10 * (1 + 330 + 16401 + 152900 + 193248), 1)];
    let (_, got) = discovered("r11", 11, 1, 30);
    o.notes.push(format!(
        "r11 m=1 recovered {:?}",
        got.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>())
    ));
    o.record("conj_r11 m=1", got == Some(printed));

    let (t6, _) = discovered("t6_r2", 7, 1, 15);
    if let Discovery::NoResult { shortest: Some(h), .. } = &t6 {
        o.notes.push(format!("t6 shortest relation height {h}"));
    }
    o.record("t6 probe: no relation under 1e12", matches!(t6, Discovery::NoResult { .. }));
    o
}

fn ac10() -> Outcome {
    let mut o = Outcome::default();
    let mut idx = Vec::new();
    for a in 1..=5u32 {
        idx.push(Index::new(vec![a]).unwrap());
        for b in 1..=5 - a {
            idx.push(Index::new(vec![a, b]).unwrap());
        }
    }
    for p in [5u64, 7, 11] {
        let m = md(p, 2);
        for s in &idx {
            for t in &idx {
                if s.depth() + t.depth() <= 2 && s.weight() + t.weight() <= 5 {
                    o.record(format!("stuffle {s}*{t} p={p}"), stuffle_check(s, t, p * p, &m).unwrap());
                }
            }
        }
    }
    // power sums reduced modulo a prime power large enough that the formula's
    // denominators are units.
    let big = md(1_000_003, 2);
    for e in 0..=12u64 {
        for n in 1..=50u64 {
            let f = rational_residue(&power_sum_formula(e, n).unwrap(), &big).unwrap();
            o.record(format!("power sum m={e} n={n}"), f == power_sum_direct(e, n, &big));
        }
    }
    for p in sieve_primes(13).into_iter().filter(|&p| p >= 5) {
        for m1 in (2..=24u64).step_by(2) {
            for m2 in (m1 + 2..=24).step_by(2) {
                if m1 % (p - 1) != 0 && (m2 - m1) % (p - 1) == 0 {
                    o.record(format!("kummer p={p} {m1},{m2}"), kummer_check(p, m1, m2).unwrap().holds);
                }
            }
        }
    }
    let mut runner = TestRunner::deterministic();
    let strat = (-100_000i64..100_000, 1i64..100_000);
    let primes: Vec<u64> = primes_in(1_000, 2_000).into_iter().take(6).collect();
    for i in 0..100 {
        let (a, b) = strat.new_tree(&mut runner).unwrap().current();
        let x = q(a, b);
        let parts: Vec<Residue> = primes.iter().map(|&p| rational_residue(&x, &md(p, 1)).unwrap()).collect();
        let (v, m) = crt_combine(&parts).unwrap();
        o.record(format!("reconstruction #{i}"), rational_reconstruction(&v, &m) == Some(x));
    }
    o.notes.push(format!("{} checks", o.checks.len()));
    o
}

struct Criterion {
    name: &'static str,
    title: &'static str,
    run: fn() -> Outcome,
    expected_failures: &'static [&'static str],
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "AC1", title: "T_2 congruence", run: ac1, expected_failures: &[] },
    Criterion { name: "AC2", title: "T_4 congruence", run: ac2, expected_failures: &[] },
    Criterion { name: "AC3", title: "sigma reduction", run: ac3, expected_failures: &[] },
    Criterion {
        name: "AC4",
        title: "lemma suite",
        run: ac4,
        // Twisted display of (i) at l = k+1; (v) at dk = p-2; (vi) sum display at p = 5.
        expected_failures: &[
            "lemma_key_i p=11",
            "lemma_key_i p=13",
            "lemma_key_i p=5",
            "lemma_key_i p=7",
            "lemma_key_v p=5",
            "lemma_key_vi p=5",
        ],
    },
    Criterion { name: "AC5", title: "prior-work congruences", run: ac5, expected_failures: &["xiacai"] },
    Criterion { name: "AC6", title: "R_4 and R_8 formulas", run: ac6, expected_failures: &[] },
    Criterion { name: "AC7", title: "R_11 and R_12 conjecture", run: ac7, expected_failures: &["conj_r11", "conj_r12"] },
    Criterion { name: "AC8", title: "oracle equivalence", run: ac8, expected_failures: &[] },
    Criterion { name: "AC9", title: "discovery round-trips", run: ac9, expected_failures: &["conj_r11 m=1"] },
    Criterion { name: "AC10", title: "property suites", run: ac10, expected_failures: &[] },
];

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = Vec::new();
    for c in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.eq_ignore_ascii_case(f)) {
            continue;
        }
        let start = Instant::now();
        let out = (c.run)();
        let failing = out.failing();
        let expected: BTreeSet<String> = c.expected_failures.iter().map(|s| s.to_string()).collect();
        let verdict = if failing.is_empty() { "PASS" } else { "FAIL" };
        let tag = if failing == expected {
            if expected.is_empty() { "" } else { " (expected)" }
        } else {
            unexpected.push(c.name);
            " (UNEXPECTED)"
        };
        println!(
            "{} {verdict}{tag}  {}  [{} checks, {:.1?}]",
            c.name,
            c.title,
            out.checks.len(),
            start.elapsed()
        );
        for f in &failing {
            println!("      failing: {f}");
        }
        for f in expected.difference(&failing) {
            println!("      now passing: {f}");
        }
        for n in &out.notes {
            println!("      {n}");
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance outcomes: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
