import math

import pytest

from cflimsup.growth import (GrowthDomainError, GrowthNameError, GrowthSyntaxError,
                             classify_branch, estimate_exponents, eval_exact, eval_log_growth,
                             log_growth_array, parse_growth, series_test)


@pytest.mark.parametrize("text,preset", [
    ("2^n", "pow(2)"),
    ("2**n", "pow(2)"),
    ("n^3", "poly(3)"),
    ("pow(4)", "pow(4)"),
    ("e^(1.5^n)", "doubleexp(e,1.5)"),
    ("doubleexp(e, 2)", "doubleexp(e,2)"),
])
def test_presets_recognised(text, preset):
    assert str(parse_growth(text).preset) == preset


def test_bare_n_is_linear():
    e = parse_growth("n")
    assert e.preset.kind == "poly"
    assert eval_log_growth(e, 10) == pytest.approx(math.log(10), rel=1e-15)


def test_product_is_not_a_preset():
    e = parse_growth("n^3 * log(n+1)")
    assert e.preset is None
    assert eval_log_growth(e, 10) == pytest.approx(3 * math.log(10) + math.log(math.log(11)))


@pytest.mark.parametrize("bad,exc", [
    ("n^", GrowthSyntaxError), ("(n", GrowthSyntaxError), ("2 $ n", GrowthSyntaxError),
    ("foo(n)", GrowthNameError), ("m^2", GrowthNameError),
])
def test_parse_errors(bad, exc):
    with pytest.raises(exc):
        parse_growth(bad)


def test_syntax_error_position():
    with pytest.raises(GrowthSyntaxError) as ei:
        parse_growth("n^")
    assert ei.value.pos == 2


@pytest.mark.parametrize("text,n,val", [
    ("pow(2)", 10, 10 * math.log(2)),
    ("poly(3)", 10, 3 * math.log(10)),
    ("doubleexp(e, 2)", 20, 2.0 ** 20),
])
def test_log_growth_examples(text, n, val):
    assert eval_log_growth(parse_growth(text), n) == pytest.approx(val, rel=1e-14)


def test_huge_values_stay_in_log_space():
    v = eval_log_growth(parse_growth("doubleexp(e, 3)"), 600)
    assert v == pytest.approx(3.0 ** 600, rel=1e-14)


def test_domain_error_names_n():
    with pytest.raises(GrowthDomainError) as ei:
        eval_log_growth(parse_growth("n - 5"), 2)
    assert ei.value.n == 2


def test_array_matches_scalar():
    e = parse_growth("n^2 * log(n + 2)^3 + 7")
    ns = list(range(1, 400, 7))
    arr = log_growth_array(e, ns)
    for n, v in zip(ns, arr):
        assert v == pytest.approx(eval_log_growth(e, n), rel=1e-13)


def test_eval_exact():
    from fractions import Fraction
    assert eval_exact(parse_growth("n^3"), 7) == 343
    assert eval_exact(parse_growth("2^n / 3"), 5) == Fraction(32, 3)
    assert eval_exact(parse_growth("log(n)"), 5) is None


def test_exponent_estimates():
    B, b = estimate_exponents(parse_growth("pow(3)"), 1000)
    assert B.value == 3.0
    assert b.value == pytest.approx(1.0, abs=0.01)     # (n ln 3)^(1/n) -> 1
    B, _ = estimate_exponents(parse_growth("poly(2)"), 1000)
    assert 1.0 <= B.value <= 1.02
    _, b = estimate_exponents(parse_growth("doubleexp(e, 1.5)"), 200)
    assert b.value == 1.5


def test_classify_branch():
    assert classify_branch(parse_growth("poly(2)")).branch == "B=1"
    info = classify_branch(parse_growth("pow(4)"))
    assert (info.branch, info.B) == ("finiteB", 4.0)
    info = classify_branch(parse_growth("doubleexp(e, 2)"))
    assert (info.branch, info.b) == ("B=inf", 2.0)
    with pytest.raises(Exception) as ei:
        classify_branch(parse_growth("n^2 * 3^n"))
    assert "override" in str(ei.value).lower()


@pytest.mark.parametrize("psi,t,verdict", [
    ("poly(3)", (1, 1), "Convergent"),
    ("poly(1)", (1, 1), "Divergent"),
    ("pow(2)", (1,), "Convergent"),
    ("n", (1,), "Divergent"),
    ("n^2", (2, 1), "Divergent"),     # t_max = 2: terms ~ 1/n
    ("n^3", (2, 1), "Convergent"),    # terms ~ n^-1.5
    ("n * log(n + 2)^2", (1,), "Convergent"),     # Bertrand, exponent 2
    ("n * sqrt(log(n + 2))", (1,), "Divergent"),  # Bertrand, exponent 1/2
    ("n^1.0001", (1,), "Convergent"),
    ("n^0.9", (1,), "Divergent"),
    ("n * log(n + 2)", (1,), "Undecided"),        # boundary of the scale
])
def test_series_verdicts(psi, t, verdict):
    assert series_test(parse_growth(psi), t, 5000).verdict == verdict


def test_series_pow2_partial_sum():
    v = series_test(parse_growth("pow(2)"), (1,), 256)
    assert v.partial_sum == pytest.approx(1.0, abs=1e-12)


def test_series_permutation_invariant():
    e = parse_growth("n^2")
    got = {series_test(e, t, 3000).verdict for t in [(2, 1, 2), (2, 2, 1), (1, 2, 2)]}
    assert got == {"Divergent"}
