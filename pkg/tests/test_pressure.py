import itertools
import math

import mpmath
import pytest

from cflimsup.cfcore import continuant_pairs
from cflimsup.errors import BudgetError, ConfigurationError
from cflimsup.ffuncs import FSpec
from cflimsup.growth import parse_growth
from cflimsup.pressure import (hdim_dispatch, hurwitz_block, parse_branch, pressure_spectral,
                               pressure_wordsum, s_of_B, solve_s, transfer_iterate, wordsum)

GOLD = (math.sqrt(5) - 1) / 2


def brute_wordsum(M, n, s):
    """ln sum q_n^{-2s} with exact integer continuants and mpmath powers."""
    tot = mpmath.mpf(0)
    for w in itertools.product(range(1, M + 1), repeat=n):
        q = continuant_pairs(w)[3]
        tot += mpmath.mpf(q) ** (-2 * s)
    return float(mpmath.log(tot))


# ----------------------------------------------------------------- enumeration

def test_wordsum_examples(backend):
    assert wordsum(1, 3, 0.5) == pytest.approx(math.log(1 / 3), abs=1e-15)
    assert wordsum(2, 1, 0.5) == pytest.approx(math.log(1.5), abs=1e-15)


@pytest.mark.parametrize("M,n,s", [(2, 6, 0.53), (3, 5, 0.7), (5, 3, 0.9), (4, 4, 0.0)])
def test_wordsum_vs_bruteforce(backend, M, n, s):
    assert wordsum(M, n, s) == pytest.approx(brute_wordsum(M, n, s), abs=1e-12)


def test_wordsum_vs_transfer_m2_n12(backend):
    for s in (0.53, 0.7):
        assert wordsum(2, 12, s) == pytest.approx(transfer_iterate(2, 12, s, 0.0), abs=1e-12)


def test_engines_agree_across_backends(monkeypatch):
    from cflimsup import _accel
    if not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    vals = []
    for flag in (True, False):
        monkeypatch.setattr(_accel, "USE_NUMBA", flag)
        vals.append((wordsum(6, 6, 0.62), transfer_iterate(6, 6, 0.62, 0.3)))
    assert vals[0] == pytest.approx(vals[1], abs=1e-13)


def test_wordsum_cost_and_budget():
    assert wordsum(3, 4, 0.6, c=0.25) == pytest.approx(wordsum(3, 4, 0.6) - 1.0)
    with pytest.raises(BudgetError, match="spectral"):
        wordsum(8, 12, 0.7)
    with pytest.raises(BudgetError):
        transfer_iterate(10, 9, 0.7)


def test_rescaling_keeps_long_words_finite(backend):
    v = pressure_wordsum(1, 2000, 0.5)
    assert v == pytest.approx(math.log(GOLD), abs=2e-3)


# ----------------------------------------------------------------- spectral

@pytest.mark.parametrize("s", [0.2, 0.5, 0.9])
def test_single_branch_golden(s):
    v = pressure_spectral(1, s).value
    assert v == pytest.approx(2 * s * math.log(GOLD), abs=1e-11)


def test_full_alphabet_at_one():
    assert abs(pressure_spectral(None, 1.0).value) < 1e-10
    vals = [pressure_spectral(M, 1.0).value for M in (8, 64, 512)]
    assert all(v < 0 for v in vals)
    assert vals == sorted(vals)


def test_pressure_decreasing_in_s():
    vals = [pressure_spectral(16, s).value for s in (0.55, 0.6, 0.7, 0.8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_cost_shift():
    a = pressure_spectral(4, 0.6).value
    assert pressure_spectral(4, 0.6, c=0.3).value == pytest.approx(a - 0.3, abs=1e-14)


def aitken(x):
    a, b, c = x[-3:]
    den = c - 2 * b + a
    return c if den == 0 else c - (c - b) ** 2 / den


@pytest.mark.parametrize("s", [0.55, 0.9])
def test_spectral_vs_wordsum_extrapolation(s):
    M = 2
    d = [wordsum(M, n + 1, s) - wordsum(M, n, s) for n in range(10, 16)]
    assert pressure_spectral(M, s).value == pytest.approx(aitken(d), abs=1e-6)


@pytest.mark.parametrize("sigma,u,v", [(1.2, 49.0, 400.0), (1.0, 49.37, 5000.37),
                                       (2.6, 50.0, None), (1.8, 49.0, None)])
def test_hurwitz_block(sigma, u, v):
    got = hurwitz_block([sigma], [u], None if v is None else [v])[0, 0]
    with mpmath.workdps(30):
        if v is None:
            ref = mpmath.zeta(sigma, u)
        else:       # direct sum; zeta(1, u) is a pole
            ref = mpmath.fsum(mpmath.mpf(u + j) ** -sigma for j in range(round(v - u) + 1))
    assert got == pytest.approx(float(ref), rel=1e-14)


def test_large_alphabet_uses_block_sums():
    # M above the direct range: compare with the direct-sum operator on a fine check
    assert pressure_spectral(400, 0.6).value > pressure_spectral(48, 0.6).value
    d = [wordsum(60, n + 1, 0.8) - wordsum(60, n, 0.8) for n in range(1, 4)]
    assert pressure_spectral(60, 0.8).value == pytest.approx(aitken(d), abs=1e-3)


def test_grid_validation():
    with pytest.raises(ValueError):
        pressure_spectral(4, 0.5, grid=4)
    with pytest.raises(ValueError):
        pressure_spectral(4, 1.5)


# ----------------------------------------------------------------- roots

def test_solve_s_wordsum_depth1():
    r = solve_s(2, 4, (1, 1), engine="wordsum", depth=1, tol=1e-12)
    # 1^(-2s) + 2^(-2s) = 4^(s^2)
    assert 1 + 2 ** (-2 * r) == pytest.approx(4 ** (r * r), rel=1e-10)


def test_solve_s_monotone_in_B():
    assert solve_s(8, 16, (1, 1)) < solve_s(8, 2, (1, 1))


def test_solve_s_B_to_one():
    # f ln B -> 0: root of the unpenalised pressure on {1..M}
    r = solve_s(6, 1 + 1e-9, (1, 1), tol=1e-10)
    assert abs(pressure_spectral(6, r).value) < 1e-7


def test_solve_s_checks():
    with pytest.raises(ValueError):
        solve_s(4, 1.0, (1, 1))
    with pytest.raises(ConfigurationError):
        solve_s(None, 4, (1, 1), engine="wordsum")


def test_s_of_B_moderate():
    r = s_of_B(4, (1, 1), tol=1e-6)
    assert r.value == pytest.approx(0.747157, abs=5e-6)
    assert not r.info["lower_bound_only"]
    assert r.info["s_inf"] >= r.value - 1e-6


def test_s_of_B_single_penalty_known_value():
    # m = 1: f(s) = s; cross-check with an independent bisection on the full alphabet
    r = s_of_B(4, (1,), tol=1e-7)
    full = solve_s(None, 4, (1,), FSpec((1,), "single"), tol=1e-9)
    assert r.value == pytest.approx(full, abs=5e-6)


# ----------------------------------------------------------------- dispatcher

def test_parse_branch():
    assert parse_branch("B=1").branch == "B=1"
    b = parse_branch("B=inf, b=2")
    assert (b.branch, b.b) == ("B=inf", 2.0)
    assert parse_branch("B=4").B == 4.0
    with pytest.raises(ValueError):
        parse_branch("b=2")


def test_dispatch_closed_branches():
    r = hdim_dispatch(parse_growth("doubleexp(e, 2)"), (2, 1))
    assert (r.lower, r.upper, r.branch) == (1 / 3, 1 / 3, "B_infinite")
    r = hdim_dispatch(parse_growth("poly(2)"), (3, 1))
    assert (r.lower, r.upper, r.branch) == (1.0, 1.0, "B_equals_1")


def test_dispatch_override_for_non_preset():
    e = parse_growth("n^2 * 3^n")
    with pytest.raises(Exception):
        hdim_dispatch(e, (1, 1))
    r = hdim_dispatch(e, (1, 1), branch_override="B=3", tol=1e-6)
    assert r.branch == "finiteB_exact_m2"


def test_dispatch_pow_matches_s_of_B():
    r = hdim_dispatch(parse_growth("pow(4)"), (1, 1), tol=1e-6)
    direct = s_of_B(4, (1, 1), FSpec((1, 1), "pair"), tol=1e-6)
    assert r.branch == "finiteB_exact_m2"
    assert r.value == pytest.approx(direct.value, abs=1e-12)


def test_dispatch_kink_branch():
    r = hdim_dispatch(parse_growth("pow(4)"), (1, 2), tol=1e-6)
    assert "kink_branch_root" in r.diagnostics
    assert r.value == pytest.approx(r.diagnostics["kink_branch_root"], abs=1e-5)
