from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cflimsup.ffuncs import FSpec, f_general_iter, f_pair, f_single, f_unit_iter, pair_kink_side


def test_single():
    assert f_single(2, 0.6) == pytest.approx(0.3)
    assert f_single(0.5, 0.5) == 1.0
    assert f_single(1, 0.37) == 0.37


@pytest.mark.parametrize("t0,t1,s,val", [(1, 1, 0.7, 0.49), (2, 1, 0.6, 0.225), (1, 2, 0.8, 0.4)])
def test_pair(t0, t1, s, val):
    assert f_pair(t0, t1, s) == pytest.approx(val, abs=1e-15)


def test_unit_iter():
    assert f_unit_iter(2, 0.7) == pytest.approx(0.49)
    assert f_unit_iter(3, 0.6) == pytest.approx(0.216 / 0.76, rel=1e-15)
    assert f_unit_iter(1, 0.3) == 0.3
    assert f_unit_iter(4, 0.0) == 0.0


def unit_exact(m, s: Fraction):
    f = s
    for _ in range(m - 1):
        f = s * f / (1 - s + f)
    return f


@given(st.integers(1, 8), st.fractions(Fraction(1, 1000), 1))
def test_unit_iter_vs_rational(m, s):
    assert f_unit_iter(m, float(s)) == pytest.approx(float(unit_exact(m, s)), rel=1e-13)


def test_general_iter_base_and_pair():
    assert f_general_iter((3,), 0.6) == pytest.approx(0.2)
    assert f_general_iter((2, 1), 0.6) == pytest.approx(0.225, abs=1e-15)


@given(st.fractions(Fraction(1, 4), 4), st.fractions(Fraction(1, 4), 4),
       st.floats(0.01, 0.99))
def test_general_two_step_is_pair(t0, t1, s):
    assert f_general_iter((t0, t1), s) == pytest.approx(f_pair(t0, t1, s), rel=1e-13)


def test_kink_side():
    # (1,2): f = s/2 exactly past s = 2/3
    assert pair_kink_side(1, 2, 0.8)
    assert not pair_kink_side(1, 2, 0.5)
    assert f_pair(1, 2, 0.8) == pytest.approx(0.8 / 2)


def test_vectorised():
    s = np.linspace(0, 1, 11)
    assert f_pair(1, 1, s) == pytest.approx(s * s)
    assert f_general_iter((1, 1, 1), s) == pytest.approx(f_unit_iter(3, s))


def test_fspec():
    assert FSpec("2,1", "pair")(0.6) == pytest.approx(0.225)
    assert FSpec("1,1,1", "unit")(0.6) == pytest.approx(f_unit_iter(3, 0.6))
    assert FSpec("3,1,2", "single", 2)(0.6) == pytest.approx(0.3)
    assert FSpec("3,1,2", "pair", 1).label() == "pair(t1,t2)"
    with pytest.raises(ValueError):
        FSpec("2", "pair")
