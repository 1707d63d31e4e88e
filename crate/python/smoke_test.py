"""Smoke test for the pymhsc extension.

Build and install first:
    pip install maturin
    pip install --no-build-isolation crates/py
"""

from fractions import Fraction
from itertools import combinations

import pymhsc


def brute_t(n, total, p, q):
    """Sum of 1/(i_1...i_n) over compositions of `total` into parts prime to p, mod q."""
    table = {0: Fraction(1)}
    for _ in range(n):
        nxt = {}
        for s, v in table.items():
            for i in range(1, total - s + 1):
                if i % p:
                    nxt[s + i] = nxt.get(s + i, 0) + v / i
        table = nxt
    x = table.get(total, Fraction(0))
    return x.numerator * pow(x.denominator, -1, q) % q


def brute_mhs(n, index, p, q):
    """Sum over 0 < u_1 < ... < u_d < n, all prime to p, of prod u_i^(-s_i), mod q."""
    acc = Fraction(0)
    units = [u for u in range(1, n) if u % p]
    for us in combinations(units, len(index)):
        term = Fraction(1)
        for u, s in zip(us, index):
            term /= u**s
        acc += term
    return acc.numerator * pow(acc.denominator, -1, q) % q


def main():
    ids = {c["id"] for c in pymhsc.claims()}
    assert {"zhao", "main_n4", "conj_r11"} <= ids, ids

    rec = pymhsc.verify("zhao", 5)
    assert rec["passed"] and rec["lhs"] == rec["rhs"] == 3 and rec["modulus"] == 5, rec
    assert not pymhsc.verify("xiacai", 7)["passed"]
    try:
        pymhsc.verify("zhao", 4)
    except ValueError as e:
        assert "not prime" in str(e)
    else:
        raise AssertionError("composite prime accepted")

    recs = pymhsc.sweep(["zhao", "main_n2"], [5, 7, 11, 13], r=(1, 2))
    assert recs and all(r["passed"] for r in recs), recs

    for p, r in [(5, 1), (5, 2), (7, 1)]:
        q = p ** (r + 1)
        for n in (2, 3, 4):
            assert pymhsc.t_n(n, r, p, r + 1) == brute_t(n, p**r, p, q), (n, p, r)
    for n, m in [(3, 2), (4, 3)]:
        assert pymhsc.r_nm(n, m, 7) == brute_t(n, m * 7, 7, 7)
    for index in ([1], [2, 1], [1, 1, 1]):
        assert pymhsc.mhs(11, index, 11, 2) == brute_mhs(11, index, 11, 121), index

    assert pymhsc.bernoulli(12) == Fraction(-691, 2730)
    assert pymhsc.bernoulli(7) == 0
    assert pymhsc.bernoulli_mod(7, 5, 2) is None
    val, unit = pymhsc.bernoulli_mod(12, 691, 2)
    assert val == 1 and unit == -pow(2730, -1, 691**2) % 691**2

    assert pymhsc.rational_reconstruction(7, 15) == Fraction(-1, 2)
    assert pymhsc.rational_reconstruction(383, 385) == -2

    rep = pymhsc.discover("zhao", weight=3, primes=20)
    assert rep["found"] and rep["verified"], rep
    assert rep["bernoulli_coefficients"] == [Fraction(-2)], rep
    rep = pymhsc.discover("r8", weight=8, m=2, primes=40)
    assert rep["bernoulli_coefficients"] == [Fraction(2688)], rep
    rep = pymhsc.discover("t6_r2", weight=7, primes=15, height_bound=10**12)
    assert not rep["found"] and rep["height_bound"] == 10**12, rep

    print("ok")


if __name__ == "__main__":
    main()
