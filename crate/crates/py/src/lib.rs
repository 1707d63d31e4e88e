//! Python bindings. Residues come back as Python ints, rationals as
//! `fractions.Fraction`, records and reports as dicts.

use mhsc::arith::{Modulus, Rational};
use mhsc::bernoulli::{bernoulli_exact, bernoulli_mod_pk, PadicValue};
use mhsc::cache::Cache;
use mhsc::claims::{find_claim, list_claims, sweep_claims, verify_claim, Grid, VerificationRecord};
use mhsc::discover::{run_discovery, Discovery, DiscoveryJob, Target};
use mhsc::mhs::Index;
use mhsc::sums::{r_nm_fast, t_n_fast};
use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn err(e: mhsc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, x: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((x.numer().clone(), x.denom().clone()))
}

fn record_dict<'py>(py: Python<'py>, rec: &VerificationRecord) -> PyResult<Bound<'py, PyDict>> {
    let row = rec.row();
    let d = PyDict::new(py);
    d.set_item("claim", row.claim)?;
    d.set_item("p", row.p)?;
    d.set_item("r", row.r)?;
    d.set_item("m", row.m)?;
    d.set_item("lhs", rec.lhs.as_ref().map(|x| x.value().clone()))?;
    d.set_item("rhs", rec.rhs.as_ref().map(|x| x.value().clone()))?;
    d.set_item("modulus", rec.lhs.as_ref().or(rec.rhs.as_ref()).map(|x| x.modulus().q().clone()))?;
    d.set_item("status", row.status)?;
    d.set_item("passed", rec.status.is_pass())?;
    Ok(d)
}

fn open_cache(path: Option<&str>) -> PyResult<Option<Cache>> {
    path.map(Cache::open).transpose().map_err(err)
}

/// Every registered claim as `{id, description, exploratory}`.
#[pyfunction]
fn claims(py: Python<'_>) -> PyResult<Bound<'_, PyList>> {
    let out = PyList::empty(py);
    for c in list_claims() {
        let d = PyDict::new(py);
        d.set_item("id", c.id)?;
        d.set_item("description", c.description)?;
        d.set_item("exploratory", c.exploratory)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Checks one claim at one point. `r` and `m` default to the smallest
/// values the claim's domain admits.
#[pyfunction]
#[pyo3(signature = (claim, p, r=None, m=None))]
fn verify<'py>(py: Python<'py>, claim: &str, p: u64, r: Option<u32>, m: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let c = find_claim(claim).map_err(err)?;
    let r = r.unwrap_or_else(|| c.domain.r.map_or(0, |(lo, _)| lo));
    let m = m.unwrap_or_else(|| c.domain.m.map_or(0, |(lo, _)| lo));
    c.domain.check(p, r, m).map_err(|why| PyValueError::new_err(format!("{claim}: {why}")))?;
    let rec = py.detach(|| verify_claim(c, p, r, m));
    record_dict(py, &rec)
}

/// Checks claims over every admissible point of a grid, in parallel.
/// Ranges are inclusive `(lo, hi)` pairs.
#[pyfunction]
#[pyo3(signature = (claims, primes, r=None, m=None, cache=None))]
fn sweep<'py>(
    py: Python<'py>,
    claims: Vec<String>,
    primes: Vec<u64>,
    r: Option<(u32, u32)>,
    m: Option<(u64, u64)>,
    cache: Option<&str>,
) -> PyResult<Bound<'py, PyList>> {
    let cache = open_cache(cache)?;
    let ids: Vec<&str> = claims.iter().map(String::as_str).collect();
    let grid = Grid { primes, r, m };
    let recs = py.detach(|| sweep_claims(&ids, &grid, cache.as_ref())).map_err(err)?;
    let out = PyList::empty(py);
    for rec in &recs {
        out.append(record_dict(py, rec)?)?;
    }
    Ok(out)
}

/// `H_n(s) mod p^a` for the index `s`.
#[pyfunction]
fn mhs(n: u64, index: Vec<u32>, p: u64, a: u32) -> PyResult<BigUint> {
    let idx = Index::new(index).map_err(err)?;
    let md = Modulus::new(p, a).map_err(err)?;
    mhsc::mhs::mhs(n, &idx, &md).map(|x| x.value().clone()).map_err(err)
}

/// `T_n(p, r) mod p^a`.
#[pyfunction]
fn t_n(n: usize, r: u32, p: u64, a: u32) -> PyResult<BigUint> {
    let md = Modulus::new(p, a).map_err(err)?;
    t_n_fast(n, r, &md).map(|x| x.value().clone()).map_err(err)
}

/// `R_n^(m)(p) mod p^a`.
#[pyfunction]
#[pyo3(signature = (n, m, p, a=1))]
fn r_nm(n: usize, m: u64, p: u64, a: u32) -> PyResult<BigUint> {
    let md = Modulus::new(p, a).map_err(err)?;
    r_nm_fast(n, m, &md).map(|x| x.value().clone()).map_err(err)
}

/// The exact Bernoulli number `B_k` (`B_1 = -1/2`).
#[pyfunction]
fn bernoulli(py: Python<'_>, k: u64) -> PyResult<Bound<'_, PyAny>> {
    let b = bernoulli_exact(k).map_err(err)?;
    fraction(py, &b)
}

/// `B_k` modulo `p^a` as `(valuation, unit)`, or `None` when `B_k = 0`.
#[pyfunction]
fn bernoulli_mod(k: u64, p: u64, a: u32) -> PyResult<Option<(i64, BigUint)>> {
    match bernoulli_mod_pk(k, p, a).map_err(err)? {
        PadicValue::Zero => Ok(None),
        PadicValue::Value { valuation, unit } => Ok(Some((valuation, unit.value().clone()))),
    }
}

/// The unique `a/b` with `|a|, b <= sqrt(modulus/2)` congruent to `value`,
/// if there is one.
#[pyfunction]
fn rational_reconstruction(py: Python<'_>, value: BigUint, modulus: BigUint) -> PyResult<Option<Bound<'_, PyAny>>> {
    mhsc::discover::rational_reconstruction(&value, &modulus).map(|x| fraction(py, &x)).transpose()
}

/// Searches for the target as a rational combination of weight-`w`
/// Bernoulli monomials over `primes` primes.
#[pyfunction]
#[pyo3(signature = (target, weight=None, m=1, primes=30, height_bound=None, cache=None))]
fn discover<'py>(
    py: Python<'py>,
    target: &str,
    weight: Option<u64>,
    m: u64,
    primes: usize,
    height_bound: Option<BigUint>,
    cache: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let target: Target = target.parse().map_err(err)?;
    let mut job = DiscoveryJob::new(target, primes);
    job.m = m;
    if let Some(w) = weight {
        job.weight = w;
    }
    if let Some(h) = height_bound {
        job.height_bound = h;
    }
    let cache = open_cache(cache)?;
    let rep = py.detach(|| run_discovery(&job, cache.as_ref())).map_err(err)?;

    let d = PyDict::new(py);
    d.set_item("target", rep.target.to_string())?;
    d.set_item("m", rep.m)?;
    d.set_item("weight", job.weight)?;
    d.set_item("primes", rep.primes.clone())?;
    d.set_item("exponent", rep.exponent)?;
    d.set_item("normalized", rep.normalized)?;
    d.set_item("basis", rep.basis.iter().map(|b| b.weights().to_vec()).collect::<Vec<_>>())?;
    d.set_item("labels", rep.basis.iter().map(|b| b.bernoulli_label()).collect::<Vec<_>>())?;
    let fractions = |xs: &[Rational]| -> PyResult<Vec<Bound<'py, PyAny>>> { xs.iter().map(|x| fraction(py, x)).collect() };
    match &rep.outcome {
        Discovery::Found(res) => {
            d.set_item("found", true)?;
            d.set_item("relation", res.relation_vector.clone())?;
            d.set_item("coefficients", fractions(&res.coefficients)?)?;
            d.set_item("bernoulli_coefficients", fractions(&rep.bernoulli_coefficients().unwrap_or_default())?)?;
            d.set_item("verified", res.verified)?;
            d.set_item("alternatives", res.alternatives.clone())?;
            d.set_item("basis_relations", res.basis_relations.clone())?;
        }
        Discovery::NoResult { height_bound, shortest } => {
            d.set_item("found", false)?;
            d.set_item("height_bound", height_bound.clone())?;
            d.set_item("shortest", shortest.clone())?;
        }
    }
    Ok(d)
}

#[pymodule]
fn pymhsc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ENGINE_VERSION", mhsc::cache::ENGINE_VERSION)?;
    m.add_function(wrap_pyfunction!(claims, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(mhs, m)?)?;
    m.add_function(wrap_pyfunction!(t_n, m)?)?;
    m.add_function(wrap_pyfunction!(r_nm, m)?)?;
    m.add_function(wrap_pyfunction!(bernoulli, m)?)?;
    m.add_function(wrap_pyfunction!(bernoulli_mod, m)?)?;
    m.add_function(wrap_pyfunction!(rational_reconstruction, m)?)?;
    m.add_function(wrap_pyfunction!(discover, m)?)?;
    Ok(())
}

