"""
Two-sided brackets for weighted tail sums and exceedance-event measures.

The digit weights 1/(a(a+1)) form a probability law on the positive
integers with P(a >= c) = 1/c, so the weighted tail sum is the probability
that prod a_i^{t_i} >= g for independent digits drawn from that law.  The
last coordinate is always closed exactly through the telescoping tail; the
others are enumerated up to ``cutoff`` and the remaining digits are
bracketed on a fixed geometric block grid using monotonicity in the digit.
Because the grid does not depend on the cutoff, raising the cutoff only
refines blocks, so brackets are nested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from .cfcore import as_fraction, continuant_pairs, gauss_measure_interval

LN2 = math.log(2.0)
_PAD = 1e-13          # outward relative pad covering float rounding in sums
_BLOCKS_PER_OCTAVE = 16
_EXACT_INT = 2.0 ** 50
_LOG_CAP = 600.0      # beyond e^600 (m >= 2) only the monotone bound [0, mu(cap)] is given
_G_CAP = Fraction(2 ** 865)   # ln = 599.6


class WeightsError(ValueError):
    pass


@dataclass(frozen=True)
class Weights:
    """Exponent tuple (t_0, ..., t_{m-1}) kept as exact rationals."""
    t: tuple

    def __post_init__(self):
        vals = tuple(as_fraction(x) for x in self.t)
        if not vals:
            raise WeightsError("need at least one exponent")
        if any(v <= 0 for v in vals):
            raise WeightsError("exponents must be positive")
        object.__setattr__(self, "t", vals)

    @classmethod
    def parse(cls, raw) -> "Weights":
        """From "2,1", "1.5 1", a Weights, or any sequence of numbers."""
        if isinstance(raw, Weights):
            return raw
        if isinstance(raw, str):
            parts = [p for p in raw.replace(",", " ").split() if p]
            return cls(tuple(Fraction(p) for p in parts))
        if isinstance(raw, (int, float, Fraction)):
            raw = (raw,)
        return cls(tuple(Fraction(str(x)) if isinstance(x, float) else as_fraction(x)
                         for x in raw))

    @property
    def m(self) -> int:
        return len(self.t)

    @property
    def t_max(self) -> Fraction:
        return max(self.t)

    @property
    def ell(self) -> int:
        tm = self.t_max
        return sum(1 for x in self.t if x == tm)

    def floats(self) -> tuple:
        return tuple(float(x) for x in self.t)

    def __str__(self):
        return ",".join(str(x) if x.denominator == 1 else str(float(x)) for x in self.t)


@dataclass(frozen=True)
class Bracket:
    lo: object
    hi: object

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (float(self.lo) + float(self.hi))

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other: "Bracket") -> "Bracket":
        return Bracket(self.lo + other.lo, self.hi + other.hi)

    def scaled(self, lo_factor, hi_factor) -> "Bracket":
        return Bracket(self.lo * lo_factor, self.hi * hi_factor)


def _as_weights(t) -> Weights:
    return t if isinstance(t, Weights) else Weights.parse(t)


def _threshold(g) -> Fraction:
    g = as_fraction(g)
    if g < 1:
        raise ValueError(f"threshold must be >= 1, got {g}")
    return g


def _pow_ge(digits, exps, g: Fraction) -> bool:
    """Exact test prod digits_i^exps_i >= g for rational exponents."""
    den = reduce(math.lcm, (e.denominator for e in exps), 1)
    lhs = 1
    for a, e in zip(digits, exps):
        lhs *= int(a) ** int(e * den)
    return lhs * g.denominator ** den >= g.numerator ** den


def _log(g: Fraction) -> float:
    """ln g without converting g to float (g may exceed 1e308)."""
    return math.log(g.numerator) - math.log(g.denominator)


def _iroot_ceil(X: int, p: int) -> int:
    """Smallest a with a^p >= X, for integers X >= 1, p >= 1."""
    a = 1 << -(-X.bit_length() // p)     # a^p >= X
    while True:                           # Newton from above
        b = ((p - 1) * a + X // a ** (p - 1)) // p
        if b >= a:
            break
        a = b
    while a ** p < X:
        a += 1
    while a > 1 and (a - 1) ** p >= X:
        a -= 1
    return a


def min_digit(t, g) -> int:
    """Smallest integer a >= 1 with a^t >= g (exact)."""
    t, g = as_fraction(t), _threshold(g)
    if g <= 1:
        return 1
    x = _log(g) / float(t)
    if x > 30:     # beyond float resolution of the digit
        # a^p >= g^q  <=>  a^p >= ceil(num^q / den^q)
        p, q = t.numerator, t.denominator
        return _iroot_ceil(-(-g.numerator ** q // g.denominator ** q), p)
    a = max(1, math.ceil(math.exp(x)))
    while a > 1 and _pow_ge((a - 1,), (t,), g):
        a -= 1
    while not _pow_ge((a,), (t,), g):
        a += 1
    return a


def tail_sum_1d(t, g) -> Fraction:
    """sum over a with a^t >= g of 1/(a(a+1)), which telescopes to 1/ceil(g^(1/t))."""
    return Fraction(1, min_digit(t, g))


def asymptotic_envelope(t, g) -> float:
    """(ln g)^(ell-1) * g^(-1/t_max)."""
    w = _as_weights(t)
    lg = _log(as_fraction(g)) if not isinstance(g, float) else math.log(g)
    return lg ** (w.ell - 1) * math.exp(-lg / float(w.t_max))


# --------------------------------------------------------------------------
# minimum-digit search on float thresholds, with exact tie resolution


class _Ctx:
    """Exact data needed to resolve near-ties: the original threshold and the
    exponents in the order digits are enumerated."""

    def __init__(self, g: Fraction, exps):
        self.g = g
        self.exps = tuple(exps)
        self.tol = 1e-10 * (1.0 + abs(_log(g)))


def _min_digit_vec(t: float, L: np.ndarray, ctx: _Ctx, prefix, lead=None):
    """Smallest a with t*ln(a) >= L, elementwise.

    Returns float arrays (a_lo, a_hi) enclosing the true value; they agree
    except where the digit exceeds 2^50 and floats cannot pin it down.
    ``prefix`` holds the fixed digits before this one and ``lead`` an optional
    array of per-element digits right before it (both only used for ties).
    """
    L = np.asarray(L, dtype=float)
    x = np.maximum(L, 0.0) / t
    big = x > math.log(_EXACT_INT)
    a = np.ceil(np.exp(np.minimum(x, math.log(_EXACT_INT))))
    a = np.maximum(a, 1.0)
    lo = a.copy()
    hi = a.copy()
    small = ~big & (L > -ctx.tol)
    if np.any(small):
        idx = np.nonzero(small)[0]
        av = a[idx]
        Lv = L[idx]
        for _ in range(3):
            up = t * np.log(av) < Lv - ctx.tol
            down = (av > 1) & (t * np.log(np.maximum(av - 1, 1.0)) >= Lv + ctx.tol)
            if not (up.any() or down.any()):
                break
            av = av + up - down
        r1 = t * np.log(av) - Lv
        r0 = np.where(av > 1, t * np.log(np.maximum(av - 1, 1.0)) - Lv, -np.inf)
        amb = (np.abs(r1) <= ctx.tol) | (np.abs(r0) <= ctx.tol)
        for k in np.nonzero(amb)[0]:
            digs = list(prefix)
            if lead is not None:
                digs.append(int(lead[idx[k]]))
            av[k] = _exact_min_digit(digs, ctx, int(av[k]))
        lo[idx] = av
        hi[idx] = av
    neg = L <= -ctx.tol
    lo[neg] = 1.0
    hi[neg] = 1.0
    if np.any(big):
        y = np.exp(x[big])
        lo[big] = np.floor(y * (1 - 1e-13))
        hi[big] = np.ceil(y * (1 + 1e-13)) + 1
    return lo, hi


def _exact_min_digit(prefix, ctx: _Ctx, guess: int) -> int:
    root, used = _resolve_ctx(ctx)
    digs = list(used) + list(prefix)
    exps = root.exps[: len(digs) + 1]

    def ok(a):
        return _pow_ge(digs + [a], exps, root.g)

    a = max(1, guess)
    while a > 1 and ok(a - 1):
        a -= 1
    while not ok(a):
        a += 1
    return a


def _block_edges(start: float, stop: float) -> np.ndarray:
    """Fixed geometric grid restricted to [start, stop]; block j covers
    [e_j, e_{j+1} - 1]."""
    if stop < start:
        return np.array([start, stop + 1.0])
    j0 = math.floor(_BLOCKS_PER_OCTAVE * math.log2(start)) + 1
    j1 = math.ceil(_BLOCKS_PER_OCTAVE * math.log2(stop + 1.0))
    grid = np.floor(2.0 ** (np.arange(j0, j1 + 1) / _BLOCKS_PER_OCTAVE))
    grid = grid[(grid > start) & (grid <= stop)]
    return np.unique(np.concatenate(([start], grid, [stop + 1.0])))


# --------------------------------------------------------------------------
# product-law tail probability


def _digit_mass(a):
    return 1.0 / (a * (a + 1.0))


def _range_mass(u, v):
    """P(u <= a <= v) = 1/u - 1/(v+1), written without cancellation."""
    return ((v + 1.0 - u) / (v + 1.0)) / u


def _prob(ts, L, prefix, ctx, K):
    """(lo, hi) for P(prod_{j >= i} a_j^{ts[j]} >= e^L), i = len(prefix)."""
    i = len(prefix)
    t = ts[i]
    if L <= -ctx.tol:
        return 1.0, 1.0
    if i == len(ts) - 1:
        lo, hi = _min_digit_vec(t, np.array([L]), ctx, prefix)
        return 1.0 / hi[0], 1.0 / lo[0]
    A_lo, A_hi = _min_digit_vec(t, np.array([L]), ctx, prefix)
    A_lo, A_hi = A_lo[0], A_hi[0]
    # digits a >= A satisfy the event whatever the rest
    tail_lo, tail_hi = 1.0 / A_hi, 1.0 / A_lo
    n_exact = min(float(K), A_lo - 1.0)
    s_lo = s_hi = 0.0
    if n_exact >= 1:
        if i == len(ts) - 2:
            a = np.arange(1.0, n_exact + 1.0)
            c_lo, c_hi = _min_digit_vec(ts[i + 1], L - t * np.log(a), ctx, prefix, lead=a)
            w = _digit_mass(a)
            s_lo = float(np.sum(w / c_hi))
            s_hi = float(np.sum(w / c_lo))
        else:
            for a in range(1, int(n_exact) + 1):
                lo, hi = _prob(ts, L - t * math.log(a), prefix + (a,), ctx, K)
                wa = _digit_mass(float(a))
                s_lo += wa * lo
                s_hi += wa * hi
    # unresolved digits n_exact < a < A_lo (plus the fuzzy zone up to A_hi)
    b_lo = b_hi = 0.0
    if A_lo - 1.0 > n_exact:
        edges = _block_edges(n_exact + 1.0, A_lo - 1.0)
        u = edges[:-1]
        v = edges[1:] - 1.0
        mass = _range_mass(u, v)
        if i == len(ts) - 2:
            _, cu_hi = _min_digit_vec(ts[i + 1], L - t * np.log(u), ctx, prefix, lead=u)
            cv_lo, _ = _min_digit_vec(ts[i + 1], L - t * np.log(v), ctx, prefix, lead=v)
            b_lo = float(np.sum(mass / cu_hi))
            b_hi = float(np.sum(mass / cv_lo))
        else:
            for uu, vv, mm in zip(u, v, mass):
                lo, _ = _prob(ts, L - t * math.log(uu), prefix + (int(uu),), ctx, K)
                _, hi = _prob(ts, L - t * math.log(vv), prefix + (int(vv),), ctx, K)
                b_lo += mm * lo
                b_hi += mm * hi
    # digits in [A_lo, A_hi) (only when A exceeds 2^50) count as [0, 1]
    return s_lo + b_lo + tail_lo, s_hi + b_hi + tail_hi


def _default_cutoff(m: int) -> int:
    return 10 ** 4 if m <= 3 else 200


def weighted_tail_sum(t, g, cutoff: int | None = None) -> Bracket:
    """Bracket of sum over prod a_i^{t_i} >= g of prod 1/(a_i(a_i+1))."""
    w = _as_weights(t)
    g = _threshold(g)
    K = _default_cutoff(w.m) if cutoff is None else int(cutoff)
    if K < 2:
        raise ValueError("cutoff must be >= 2")
    if w.m == 1:
        v = tail_sum_1d(w.t[0], g)
        return Bracket(v, v)
    if g == 1:
        return Bracket(Fraction(1), Fraction(1))
    if _log(g) > _LOG_CAP:
        return Bracket(0.0, weighted_tail_sum(w, _G_CAP, K).hi)
    # the sum is symmetric in the coordinates: enumerate the largest
    # exponents (fewest digits below the threshold) and close the smallest
    order = sorted(w.t, reverse=True)
    ctx = _Ctx(g, order)
    lo, hi = _prob(tuple(float(x) for x in order), _log(g), (), ctx, K)
    return Bracket(max(0.0, float(lo) * (1 - _PAD)), min(1.0, float(hi) * (1 + _PAD)))


# --------------------------------------------------------------------------
# exceedance events as unions of cylinders


def _interval_measure(length, left, gauss: bool):
    if not gauss:
        return length
    return np.log1p(length / (1.0 + left)) / LN2


def _span(p0, q0, p1, q1, u, v):
    """Geometry of {x in I(w): u <= a_{n+1}(x) <= v} from the continuant state
    (p_{n-1}, q_{n-1}, p_n, q_n); v may be inf.  Returns (length, left)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        x_u = (u * p1 + p0) / (u * q1 + q0)
        if np.isscalar(v) and math.isinf(v):
            x_v = p1 / q1
            length = (1.0 / q1) / (u * q1 + q0)
        else:
            x_v = ((v + 1.0) * p1 + p0) / ((v + 1.0) * q1 + q0)
            length = ((v + 1.0 - u) / ((v + 1.0) * q1 + q0)) / (u * q1 + q0)
            inf_v = np.isinf(v)
            if np.any(inf_v):
                length = np.where(inf_v, (1.0 / q1) / (u * q1 + q0), length)
                x_v = np.where(inf_v, p1 / q1, x_v)
    return length, np.minimum(x_u, x_v)


def _event(ts, L, state, prefix, ctx, K, gauss):
    """(lo, hi) measure of {x in I(prefix): prod_{j>=i} a_{j+1}^{ts[j]} >= e^L}."""
    i = len(prefix)
    p0, q0, p1, q1 = state
    t = ts[i]
    if L <= -ctx.tol:
        ln, left = _span(p0, q0, p1, q1, 1.0, math.inf)
        v = float(_interval_measure(ln, left, gauss))
        return v, v
    A_lo, A_hi = _min_digit_vec(t, np.array([L]), ctx, prefix)
    A_lo, A_hi = A_lo[0], A_hi[0]
    ln, left = _span(p0, q0, p1, q1, A_hi, math.inf)
    tail_lo = float(_interval_measure(ln, left, gauss))
    ln, left = _span(p0, q0, p1, q1, A_lo, math.inf)
    tail_hi = float(_interval_measure(ln, left, gauss))
    if i == len(ts) - 1:
        return tail_lo, tail_hi
    n_exact = min(float(K), A_lo - 1.0)
    s_lo = s_hi = 0.0
    if n_exact >= 1:
        if i == len(ts) - 2:
            a = np.arange(1.0, n_exact + 1.0)
            np0, nq0, np1, nq1 = p1, q1, a * p1 + p0, a * q1 + q0
            c_lo, c_hi = _min_digit_vec(ts[i + 1], L - t * np.log(a), ctx, prefix, lead=a)
            ln, left = _span(np0, nq0, np1, nq1, c_hi, np.inf)
            s_lo = float(np.sum(_interval_measure(ln, left, gauss)))
            ln, left = _span(np0, nq0, np1, nq1, c_lo, np.inf)
            s_hi = float(np.sum(_interval_measure(ln, left, gauss)))
        else:
            for a in range(1, int(n_exact) + 1):
                st = (p1, q1, a * p1 + p0, a * q1 + q0)
                lo, hi = _event(ts, L - t * math.log(a), st, prefix + (a,), ctx, K, gauss)
                s_lo += lo
                s_hi += hi
    b_lo = b_hi = 0.0
    if A_lo - 1.0 > n_exact:
        edges = _block_edges(n_exact + 1.0, A_lo - 1.0)
        u = edges[:-1]
        v = edges[1:] - 1.0
        ln, left = _span(p0, q0, p1, q1, u, v)
        mass = _interval_measure(ln, left, gauss)
        # relative measure of the later-digit event inside I(w, a) is within a
        # factor (1 + 1/a)^2 of its Lebesgue measure from the origin; Gauss
        # density adds a factor 1 + |J| across the block J
        distort = (1.0 + 1.0 / u) ** 2
        if gauss:
            distort = distort * (1.0 + ln)
        sub_ts = ts[i + 1:]
        if len(sub_ts) == 1:
            # one digit left: its event {a >= c} has Lebesgue measure 1/c
            _, cu_hi = _min_digit_vec(sub_ts[0], L - t * np.log(u), ctx, prefix, lead=u)
            cv_lo, _ = _min_digit_vec(sub_ts[0], L - t * np.log(v), ctx, prefix, lead=v)
            b_lo = float(np.sum(mass / cu_hi / distort))
            b_hi = float(np.sum(mass * np.minimum(1.0, distort / cv_lo)))
            return s_lo + b_lo + tail_lo, s_hi + b_hi + tail_hi
        for k in range(len(u)):
            rel_lo, _ = _sub_event(sub_ts, ctx, L - t * math.log(u[k]), prefix, u[k], K)
            _, rel_hi = _sub_event(sub_ts, ctx, L - t * math.log(v[k]), prefix, v[k], K)
            b_lo += mass[k] * rel_lo / distort[k]
            b_hi += mass[k] * min(1.0, rel_hi * distort[k])
    return s_lo + b_lo + tail_lo, s_hi + b_hi + tail_hi


def _sub_event(sub_ts, ctx, L, prefix, a, K):
    """Lebesgue measure (bracket) of the event on the remaining digits, read
    from the origin.  The exact threshold is g / prod(prefix, a)."""
    if L <= -ctx.tol:
        return 1.0, 1.0
    sub_ctx = _SubCtx(ctx, tuple(prefix) + (int(a),))
    return _event(sub_ts, L, (1.0, 0.0, 0.0, 1.0), (), sub_ctx, K, False)


class _SubCtx(_Ctx):
    """Tie context for a suffix event: digits are prefixed with ``used``."""

    def __init__(self, parent: _Ctx, used):
        self.g = parent.g
        self.used = tuple(used)
        self.parent = parent
        self.tol = parent.tol


def _resolve_ctx(ctx):
    """Flatten nested suffix contexts into (full exps, digits to prepend)."""
    used = ()
    while isinstance(ctx, _SubCtx):
        used = ctx.used + used
        ctx = ctx.parent
    return ctx, used


def measure_of_event(t, threshold, measure: str = "lebesgue", cutoff: int | None = None) -> Bracket:
    """Bracket of mu{x : prod_{i=1}^m a_i(x)^{t_{i-1}} >= threshold}.

    The event is the union of the order-m cylinders it contains; ``measure``
    is "lebesgue" or "gauss".
    """
    w = _as_weights(t)
    g = _threshold(threshold)
    gauss = _measure_kind(measure)
    K = _default_cutoff(w.m) if cutoff is None else int(cutoff)
    if K < 2:
        raise ValueError("cutoff must be >= 2")
    if g == 1:
        return Bracket(Fraction(1), Fraction(1))
    if w.m == 1:
        c = min_digit(w.t[0], g)
        if not gauss:
            return Bracket(Fraction(1, c), Fraction(1, c))
        mv = gauss_measure_interval(0, Fraction(1, c))
        v = float(mv.value)
        return Bracket(max(0.0, math.nextafter(v - mv.abs_error_bound, -math.inf)),
                       math.nextafter(v + mv.abs_error_bound, math.inf))
    if _log(g) > _LOG_CAP:
        return Bracket(0.0, measure_of_event(w, _G_CAP, measure, K).hi)
    ctx = _Ctx(g, w.t)
    lo, hi = _event(w.floats(), _log(g), (1.0, 0.0, 0.0, 1.0), (), ctx, K, gauss)
    return Bracket(max(0.0, float(lo) * (1 - _PAD)), min(1.0, float(hi) * (1 + _PAD)))


def _measure_kind(measure: str) -> bool:
    m = measure.lower()
    if m not in ("lebesgue", "gauss"):
        raise ValueError(f"measure must be 'lebesgue' or 'gauss', got {measure!r}")
    return m == "gauss"
