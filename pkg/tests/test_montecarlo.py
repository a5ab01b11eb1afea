import csv
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from cflimsup.cfcore import cylinder, gauss_measure_interval, tail_interval
from cflimsup.growth import parse_growth
from cflimsup.montecarlo import (DigitSampler, dump_hits_csv, hit_scan, mc_experiment,
                                 sample_digits, sample_many, union_bound)


def cond_tail(base, prefix, c):
    """P(next digit >= c | prefix), exactly (Lebesgue) or at 200 bits (Gauss)."""
    left, right = tail_interval(prefix, c)
    if prefix:
        cyl = cylinder(prefix)
        pl, pr = cyl.left, cyl.right
    else:
        pl, pr = Fraction(0), Fraction(1)
    if base == "lebesgue":
        return (right - left) / (pr - pl)
    with mpmath.workprec(200):
        return (mpmath.mpf(gauss_measure_interval(left, right, 200).value)
                / mpmath.mpf(gauss_measure_interval(pl, pr, 200).value))


def oracle_digits(base, J, k):
    out = []
    for j in J[:k]:
        U = Fraction(int(j) + 1, 2 ** 64)
        if base == "gauss":
            with mpmath.workprec(200):
                U = mpmath.mpf(U.numerator) / U.denominator
        hi = 1
        while cond_tail(base, tuple(out), 2 * hi) >= U:
            hi *= 2
        lo, hi = hi, 2 * hi        # tail(lo) >= U > tail(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if cond_tail(base, tuple(out), mid) >= U:
                lo = mid
            else:
                hi = mid
        out.append(lo)
    return out


@pytest.mark.parametrize("base", ["lebesgue", "gauss"])
def test_digits_match_exact_inversion(backend, base):
    s = DigitSampler(base, 11)
    for sid in range(6):
        w = sample_digits(s, sid, 8)
        assert list(w) == oracle_digits(base, s.raw(sid, 8), 8)


def test_determinism_and_streams(backend):
    s = DigitSampler("gauss", 5)
    a = sample_digits(s, 3, 500)
    assert np.array_equal(a, sample_digits(s, 3, 500))
    assert not np.array_equal(a, sample_digits(s, 4, 500))
    assert not np.array_equal(a, sample_digits(DigitSampler("gauss", 6), 3, 500))
    # prefix property: asking for more digits does not change earlier ones
    assert np.array_equal(a[:100], sample_digits(s, 3, 100))


def test_backends_identical(monkeypatch):
    from cflimsup import _accel
    if not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    s = DigitSampler("gauss", 9)
    out = []
    for flag in (True, False):
        monkeypatch.setattr(_accel, "USE_NUMBA", flag)
        out.append((sample_many(s, range(40), 300), sample_digits(s, 7, 2000)))
    assert np.array_equal(out[0][0], out[1][0])
    assert np.array_equal(out[0][1], out[1][1])


def test_sample_many_rows(backend):
    s = DigitSampler("lebesgue", 2)
    rows = sample_many(s, [0, 5, 9], 200)
    for i, sid in enumerate([0, 5, 9]):
        assert np.array_equal(rows[i], sample_digits(s, sid, 200))


def test_bad_base():
    with pytest.raises(ValueError):
        DigitSampler("uniform")


# ----------------------------------------------------------------- hits

def test_hit_scan_examples():
    w = [5] + [1] * 20
    assert hit_scan(w, (1, 1), parse_growth("poly(0)"), 1, 10).hits == tuple(range(1, 11))
    assert hit_scan([1] * 30, (1, 1), parse_growth("pow(2)"), 1, 20).hits == ()
    rep = hit_scan([2, 50, 3] + [1] * 5, (2, 1), parse_growth("poly(3)"), 1, 1)
    assert rep.hits == (1,)


def test_hit_scan_exact_ties():
    # 4 * 25 = 100 = Psi(10) for Psi = n^2: equality counts as a hit
    w = [1] * 9 + [4, 25] + [1] * 5
    assert 10 in hit_scan(w, (1, 1), parse_growth("n^2"), 1, 12).hits
    w = [1] * 9 + [3, 33] + [1] * 5
    assert 10 not in hit_scan(w, (1, 1), parse_growth("n^2"), 1, 12).hits


def test_hit_scan_window_error():
    with pytest.raises(ValueError):
        hit_scan([1, 2, 3], (1, 1), parse_growth("n"), 1, 3)


def test_hit_scan_matches_direct():
    rng = np.random.default_rng(0)
    w = rng.integers(1, 200, size=300)
    e = parse_growth("n^1.5")
    hits = hit_scan(w, (1, 2), e, 1, 299).hits
    # a b^2 >= n^1.5  <=>  a^2 b^4 >= n^3
    direct = tuple(n for n in range(1, 300) if int(w[n - 1]) ** 2 * int(w[n]) ** 4 >= n ** 3)
    assert hits == direct


# ----------------------------------------------------------------- experiment

def test_union_bound_geometric():
    b = union_bound((1,), parse_growth("2^n"), 50, 200)
    with mpmath.workdps(40):
        exact = mpmath.fsum(mpmath.log(1 + mpmath.mpf(2) ** -n) / mpmath.log(2) for n in range(50, 201))
    assert b.lo <= exact <= b.hi


def test_union_bound_blocked_contains_exact():
    e = parse_growth("n^3")
    exact = union_bound((1, 1), e, 100, 1500, exact_limit=10**6)
    blocked = union_bound((1, 1), e, 100, 1500, exact_limit=10)
    assert blocked.lo <= exact.lo and exact.hi <= blocked.hi
    assert blocked.hi < 1.1 * exact.hi


def test_mc_small_run(tmp_path):
    r = mc_experiment(30, (1, 1), "n", "gauss", seed=1, window=(1, 300), keep_reports=True)
    assert r.samples == 30 and 0 <= r.empirical_hit_prob <= 1
    assert r.analytic_bracket.lo > 1      # divergent: expected hits in the window > 1
    path = tmp_path / "hits.csv"
    dump_hits_csv(r.reports, path)
    rows = list(csv.reader(open(path)))
    assert len(rows) >= 1


def test_mc_deterministic():
    a = mc_experiment(20, (1,), "n^2", "lebesgue", seed=3, window=(1, 200), with_bracket=False)
    b = mc_experiment(20, (1,), "n^2", "lebesgue", seed=3, window=(1, 200), with_bracket=False)
    assert a == b


@dataclass(frozen=True)
class FixedDraws(DigitSampler):
    """Sampler with hand-picked raw draws, to hit the exact-arithmetic path."""
    draws: tuple = ()

    def raw(self, sample_id, N):
        return np.array(self.draws[:N], dtype=np.uint64)


@pytest.mark.parametrize("base", ["lebesgue", "gauss"])
def test_boundary_draws_use_exact_step(backend, base):
    half = 2 ** 63 - 1             # U = 1/2 exactly
    draws = (half, 0, half, 2 ** 64 - 1, 12345, half, 1, 2 ** 62)
    s = FixedDraws(base, 0, draws)
    assert list(sample_digits(s, 0, len(draws))) == oracle_digits(base, np.array(draws, dtype=np.uint64),
                                                                  len(draws))
