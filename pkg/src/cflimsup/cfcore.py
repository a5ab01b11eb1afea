"""
Exact continued-fraction arithmetic.

Words are tuples of positive ints.  Convergents use the seed
``p_{-1}=1, q_{-1}=0, p_0=0, q_0=1`` so that ``p_n/q_n = [a_1, ..., a_n]``
for x in [0, 1) and the cylinder length is ``1/(q_n (q_n + q_{n-1}))``.
Everything here is exact (Python ints / Fractions) except the Gauss measure,
which needs a logarithm and is returned with an error bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import mpmath

Word = tuple  # tuple[int, ...], every digit >= 1

_GAUSS_PREC = 113  # bits used for Gauss-measure logarithms


class CFDomainError(ValueError):
    """Input outside the domain of a continued-fraction operation."""


def as_word(digits: Iterable[int]) -> Word:
    w = tuple(int(a) for a in digits)
    for a in w:
        if a < 1:
            raise CFDomainError(f"partial quotients must be >= 1, got {a}")
    return w


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(str(x).strip()) if isinstance(x, str) else Fraction(x)


class Convergent(NamedTuple):
    p: int
    q: int
    index: int


@dataclass(frozen=True)
class MeasureValue:
    """A real number together with an absolute error bound."""
    value: object
    abs_error_bound: float
    info: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)

    @property
    def interval(self):
        v = float(self.value)
        return (v - self.abs_error_bound, v + self.abs_error_bound)


@dataclass(frozen=True)
class Cylinder:
    """I_n(w): the points of [0, 1) whose expansion starts with ``word``.

    ``left_closed`` follows the parity rule: the endpoint p_n/q_n is the
    included one, and it sits on the left exactly when n is even.
    """
    word: Word
    left: Fraction
    right: Fraction
    left_closed: bool
    q: int
    q_prev: int

    @property
    def order(self) -> int:
        return len(self.word)

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    def __contains__(self, x) -> bool:
        x = as_fraction(x)
        if self.left < x < self.right:
            return True
        if x == self.left:
            return self.left_closed
        if x == self.right:
            return not self.left_closed and x < 1
        return False


def expand_rational(x, max_depth: int | None = None) -> Word:
    """Partial quotients of a rational x in [0, 1) via the Gauss map.

    The expansion terminates with a last digit >= 2 (the canonical form),
    or earlier at ``max_depth`` digits.
    """
    x = as_fraction(x)
    if not 0 <= x < 1:
        raise CFDomainError(f"x must lie in [0, 1), got {x}")
    if max_depth is not None and max_depth < 0:
        raise CFDomainError("max_depth must be >= 0")
    p, q = x.numerator, x.denominator
    digits = []
    while p != 0 and (max_depth is None or len(digits) < max_depth):
        a, r = divmod(q, p)
        digits.append(a)
        p, q = r, p
    return tuple(digits)


def continuant_pairs(word: Sequence[int]):
    """Return ``(p_{n-1}, q_{n-1}, p_n, q_n)`` for the word."""
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in word:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
    return p0, q0, p1, q1


def convergents(word: Sequence[int]) -> list[Convergent]:
    word = as_word(word)
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    for k, a in enumerate(word, start=1):
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append(Convergent(p1, q1, k))
    return out


def evaluate(word: Sequence[int]) -> Fraction:
    """[a_1, ..., a_n] as an exact rational (0 for the empty word)."""
    _, _, p, q = continuant_pairs(as_word(word))
    return Fraction(p, q)


def cylinder(word: Sequence[int]) -> Cylinder:
    word = as_word(word)
    pp, qp, p, q = continuant_pairs(word)
    a = Fraction(p, q)
    b = Fraction(p + pp, q + qp)
    even = len(word) % 2 == 0
    left, right = (a, b) if even else (b, a)
    return Cylinder(word, left, right, even, q, qp)


def tail_interval(word: Sequence[int], c: int) -> tuple[Fraction, Fraction]:
    """Closure of {x in I_n(word): a_{n+1}(x) >= c}, as (left, right).

    With y = T^n x the set is y in (0, 1/c], whose image under the inverse
    branch is the interval between p_n/q_n and (c p_n + p_{n-1})/(c q_n + q_{n-1});
    its length is 1/(q_n (c q_n + q_{n-1})).
    """
    if c < 1:
        raise CFDomainError("c must be >= 1")
    pp, qp, p, q = continuant_pairs(as_word(word))
    a = Fraction(p, q)
    b = Fraction(c * p + pp, c * q + qp)
    return (a, b) if a < b else (b, a)


def child_cylinders(word: Sequence[int], upto: int) -> list[Cylinder]:
    word = as_word(word)
    return [cylinder(word + (a,)) for a in range(1, upto + 1)]


def lebesgue_measure(c: Cylinder) -> Fraction:
    return c.length


def gauss_measure_interval(left, right, prec: int = _GAUSS_PREC) -> MeasureValue:
    """mu_G([l, r]) = log2((1 + r)/(1 + l)), computed as log1p of an exact ratio."""
    left, right = as_fraction(left), as_fraction(right)
    if not 0 <= left <= right <= 1:
        raise CFDomainError("need 0 <= left <= right <= 1")
    delta = (right - left) / (1 + left)  # exact
    with mpmath.workprec(prec):
        d = mpmath.mpf(delta.numerator) / delta.denominator
        val = mpmath.log1p(d) / mpmath.log(2)
        # a handful of roundings, each relative 2^-prec
        err = float(abs(val)) * 2.0 ** (-prec + 4)
    return MeasureValue(val, err)


def gauss_measure(c: Cylinder) -> MeasureValue:
    return gauss_measure_interval(c.left, c.right)
