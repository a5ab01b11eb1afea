"""
Monte Carlo check of the zero-one law for weighted digit products.

Digits are drawn by exact sequential conditioning: given a_1..a_k the next
digit has law mu(I_{k+1}(w, a)) / mu(I_k(w)), inverted in closed form.  The
random stream is counter based: sample ``i`` of seed ``s`` uses Philox keyed
by (s, i), and digit ``k`` consumes the k-th 64-bit output, so any sample
can be regenerated on its own.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import mpmath
import numpy as np

from . import _accel, kernels
from .cfcore import continuant_pairs
from .growth import (GrowthExpr, eval_exact, eval_log_growth_mp, log_growth_array,
                     parse_growth)
from .tailsums import Bracket, Weights, _pow_ge, measure_of_event

LN2 = math.log(2.0)
_TWO64 = 1 << 64
_MASK = _TWO64 - 1


@dataclass(frozen=True)
class DigitSampler:
    base: str = "gauss"    # "gauss" | "lebesgue"
    seed: int = 0

    def __post_init__(self):
        b = self.base.lower()
        if b not in ("gauss", "lebesgue"):
            raise ValueError(f"base must be 'gauss' or 'lebesgue', got {self.base!r}")
        object.__setattr__(self, "base", b)

    @property
    def gauss(self) -> bool:
        return self.base == "gauss"

    def raw(self, sample_id: int, N: int) -> np.ndarray:
        key = np.array([self.seed & _MASK, sample_id & _MASK], dtype=np.uint64)
        return np.random.Philox(key=key).random_raw(N)


def _uniforms(J: np.ndarray) -> np.ndarray:
    """U = (J + 1) / 2^64 in (0, 1]."""
    return (J.astype(np.float64) + 1.0) * 2.0 ** -64


# ------------------------------------------------------------- exact step

def exact_digit(gauss: bool, prefix, J: int) -> int:
    """The digit after ``prefix`` for raw draw J, in exact arithmetic."""
    pp, qp, p, q = continuant_pairs([int(a) for a in prefix])
    if not gauss:
        # (q + q')/(c q + q') >= (J+1)/2^64
        return max(1, ((q + qp) * _TWO64 - qp * (J + 1)) // (q * (J + 1)))
    s = q + p
    eps = pp * q - qp * p                  # +-1
    U = mpmath.mpf(J + 1) / _TWO64

    def G(c, prec):
        with mpmath.workprec(prec):
            num = mpmath.log1p(mpmath.mpf(eps) / ((c * q + qp) * s))
            den = mpmath.log1p(mpmath.mpf(eps) / ((q + qp) * s))
            return num / den

    def ge(c):
        # G(c) >= U, raising precision until the comparison is clear
        for prec in (128, 256, 512, 1024, 2048):
            with mpmath.workprec(prec):
                diff = G(c, prec) - mpmath.mpf(J + 1) / _TWO64
                if abs(diff) > mpmath.ldexp(1, -prec + 16):
                    return diff > 0
        return True

    bits = 128 + 2 * (q * s).bit_length()
    with mpmath.workprec(bits):
        den = mpmath.log1p(mpmath.mpf(eps) / ((q + qp) * s))
        y = mpmath.expm1(U * den)
        # c* + r = eps / ((y) q s)  with r = q'/q
        cstar = mpmath.mpf(eps) / (y * q * s) - mpmath.mpf(qp) / q
        c = max(1, int(mpmath.floor(cstar)))
    while c > 1 and not ge(c):
        c -= 1
    while ge(c + 1):
        c += 1
    return c


# ------------------------------------------------------------- sampling

def _advance(a, r, rp, d, gauss):
    r = 1.0 / (a + r)
    if gauss:
        rp = 1.0 / (a + rp)
        d = -d * r * rp
    return r, rp, d


def sample_digits(sampler: DigitSampler, sample_id: int, N: int) -> np.ndarray:
    """First N digits of sample ``sample_id``; int64 array, or an object
    array of Python ints in the (astronomically rare) case a digit overflows."""
    if N < 1:
        raise ValueError("N must be >= 1")
    J = sampler.raw(sample_id, N)
    U = _uniforms(J)
    gauss = sampler.gauss
    out = np.zeros(N, dtype=np.int64)
    r, rp, d = 0.0, 1.0, 1.0
    big = None
    k = 0
    while k < N:
        if _accel.USE_NUMBA and big is None:
            k, r, rp, d = kernels.sample_nb(U, k, out, r, rp, d, gauss)
            if k >= N:
                break
        else:
            a, amb = kernels.sample_step_np(U[k:k + 1], np.array([r]), np.array([rp]),
                                            np.array([d]), gauss)
            if not amb[0]:
                a = int(a[0])
                (big if big is not None else out)[k] = a
                r, rp, d = _advance(float(a), r, rp, d, gauss)
                k += 1
                continue
        prefix = big[:k] if big is not None else out[:k]
        a = exact_digit(gauss, prefix, int(J[k]))
        if a > np.iinfo(np.int64).max and big is None:
            big = out.astype(object)
        (big if big is not None else out)[k] = a
        r, rp, d = _advance(float(a), r, rp, d, gauss)
        k += 1
    return big if big is not None else out


def sample_many(sampler: DigitSampler, ids: Iterable[int], N: int) -> np.ndarray:
    """Digits for several samples as an (S, N) array.  The numpy path steps
    all samples together; results equal ``sample_digits`` row by row."""
    ids = list(ids)
    if _accel.USE_NUMBA:
        rows = [sample_digits(sampler, i, N) for i in ids]
        if any(r.dtype == object for r in rows):
            return np.array(rows, dtype=object)
        return np.vstack(rows) if rows else np.zeros((0, N), dtype=np.int64)
    S = len(ids)
    J = np.vstack([sampler.raw(i, N) for i in ids]) if S else np.zeros((0, N), np.uint64)
    U = _uniforms(J)
    gauss = sampler.gauss
    out = np.zeros((S, N), dtype=np.int64)
    r = np.zeros(S)
    rp = np.ones(S)
    d = np.ones(S)
    overflow = {}
    for k in range(N):
        a, amb = kernels.sample_step_np(U[:, k], r, rp, d, gauss)
        for i in np.nonzero(amb)[0]:
            prefix = overflow[i][:k] if i in overflow else out[i, :k]
            v = exact_digit(gauss, prefix, int(J[i, k]))
            if v > np.iinfo(np.int64).max and i not in overflow:
                overflow[i] = list(out[i])
            if i in overflow:
                overflow[i][k] = v
                a[i] = float(v)
            else:
                a[i] = float(v)
                out[i, k] = v
        ok = ~amb
        out[ok, k] = a[ok].astype(np.int64)
        r = 1.0 / (a + r)
        if gauss:
            rp = 1.0 / (a + rp)
            d = -d * r * rp
    if overflow:
        obj = out.astype(object)
        for i, row in overflow.items():
            obj[i] = row
        return obj
    return out


# ------------------------------------------------------------- hit scan

@dataclass(frozen=True)
class HitReport:
    sample_id: int | None
    hits: tuple
    window: tuple
    log_products: tuple = field(default=(), compare=False)
    log_psi: tuple = field(default=(), compare=False)

    @property
    def first_hit(self):
        return self.hits[0] if self.hits else None


def _log_digits(w) -> np.ndarray:
    if isinstance(w, np.ndarray) and w.dtype != object:
        return np.log(w.astype(np.float64))
    return np.array([math.log(int(a)) for a in w])


def _exact_hit(digits, t: Weights, e: GrowthExpr, n: int) -> bool:
    g = eval_exact(e, n)
    if g is not None:
        if g < 1:
            return True
        return _pow_ge(digits, t.t, Fraction(g))
    for prec in (113, 226, 452, 904):
        with mpmath.workprec(prec):
            lhs = mpmath.fsum(mpmath.mpf(x.numerator) / x.denominator * mpmath.log(int(a))
                              for a, x in zip(digits, t.t))
            rhs = eval_log_growth_mp(e, n, prec)
            if abs(lhs - rhs) > mpmath.ldexp(1, -prec + 24) * (1 + abs(rhs)):
                return lhs > rhs
    return True   # indistinguishable at 904 bits: counted as equality


def hit_scan(w, t, e: GrowthExpr, n0: int, n1: int, sample_id=None,
             keep_logs: bool = False) -> HitReport:
    """All n in [n0, n1] with sum_i t_i ln a_{n+i} >= ln Psi(n).

    Comparisons closer than 1e-12 (relative to ln Psi) are settled exactly
    when Psi(n) is rational, and in raised precision otherwise.
    """
    t = t if isinstance(t, Weights) else Weights.parse(t)
    e = e if isinstance(e, GrowthExpr) else parse_growth(e)
    m = t.m
    if n0 < 1 or n1 < n0:
        raise ValueError("need 1 <= n0 <= n1")
    if n1 + m - 1 > len(w):
        raise ValueError(f"window [{n0},{n1}] needs {n1 + m - 1} digits, word has {len(w)}")
    la = _log_digits(w)
    L = n1 - n0 + 1
    S = np.zeros(L)
    for i, ti in enumerate(t.floats()):
        S += ti * la[n0 - 1 + i: n0 - 1 + i + L]
    ns = np.arange(n0, n1 + 1)
    lp = log_growth_array(e, ns)
    diff = S - lp
    amb = np.abs(diff) <= 1e-12 * np.maximum(1.0, np.abs(lp))
    hit = diff >= 0
    for k in np.nonzero(amb)[0]:
        n = int(ns[k])
        hit[k] = _exact_hit([w[n - 1 + i] for i in range(m)], t, e, n)
    idx = np.nonzero(hit)[0]
    hits = tuple(int(x) for x in ns[idx])
    if keep_logs:
        return HitReport(sample_id, hits, (n0, n1), tuple(S[idx].tolist()), tuple(lp[idx].tolist()))
    return HitReport(sample_id, hits, (n0, n1))


# ------------------------------------------------------------- experiment

@dataclass(frozen=True)
class MCSummary:
    samples: int
    hit_samples: int
    empirical_hit_prob: float
    mean_hit_count: float
    binomial_sigma: float
    analytic_bracket: Bracket | None
    note: str
    reports: tuple = field(default=(), compare=False, repr=False)


def _threshold_bounds(e: GrowthExpr, n: int):
    """Rationals g_lo <= Psi(n) <= g_hi."""
    g = eval_exact(e, n)
    if g is not None:
        g = max(Fraction(g), Fraction(1))
        return g, g
    with mpmath.workprec(160):
        lg = eval_log_growth_mp(e, n, 160)
        if lg > 1500:
            return None, None
        v = mpmath.exp(lg)
        lo = mpmath.fmul(v, 1 - mpmath.ldexp(1, -120))
        hi = mpmath.fmul(v, 1 + mpmath.ldexp(1, -120))
        f_lo = Fraction(int(lo.man)) * Fraction(2) ** int(lo.exp)
        f_hi = Fraction(int(hi.man)) * Fraction(2) ** int(hi.exp)
    return max(f_lo, Fraction(1)), max(f_hi, Fraction(1))


def _event_bounds(t, e, n, cutoff, cache):
    """(lo, hi) of mu_G(A(Psi(n)))."""
    g_lo, g_hi = _threshold_bounds(e, n)
    key = (g_lo, g_hi)
    if key not in cache:
        if g_lo is None:    # Psi(n) > e^1500: monotone bound only
            cache[key] = (0.0, float(measure_of_event(t, Fraction(2) ** 2000, "gauss", cutoff).hi))
        elif g_lo == g_hi:
            b = measure_of_event(t, g_lo, "gauss", cutoff)
            cache[key] = (float(b.lo), float(b.hi))
        else:
            cache[key] = (float(measure_of_event(t, g_hi, "gauss", cutoff).lo),
                          float(measure_of_event(t, g_lo, "gauss", cutoff).hi))
    return cache[key]


def _breakpoints(n0, n1, ratio):
    pts = [n0]
    while pts[-1] <= n1:
        pts.append(max(pts[-1] + 1, int(pts[-1] * ratio)))
    pts[-1] = n1 + 1
    return pts


def union_bound(t, e: GrowthExpr, n0: int, n1: int, base: str = "gauss",
                cutoff: int = 1000, exact_limit: int = 2000,
                block_ratio: float = 1 + 1 / 64) -> Bracket:
    """Bracket of sum_{n=n0}^{n1} mu(A_n), with A_n the exceedance event at
    time n.  Under the Gauss measure mu(A_n) equals the measure of the event
    at time 1 (invariance); under Lebesgue it is within [ln 2, 2 ln 2] times
    that (density ratio).  The upper end bounds P(some hit in the window).

    Windows longer than ``exact_limit`` with nondecreasing Psi are summed in
    geometric blocks, each bounded by the measures at its two ends."""
    t = t if isinstance(t, Weights) else Weights.parse(t)
    e = e if isinstance(e, GrowthExpr) else parse_growth(e)
    cache = {}
    lo_sum, hi_sum = [], []
    blocked = False
    if n1 - n0 + 1 > exact_limit:
        lp = log_growth_array(e, np.arange(n0, n1 + 1))
        blocked = bool(np.all(np.diff(lp) >= -1e-12 * np.maximum(1.0, np.abs(lp[1:]))))
    if blocked:
        pts = _breakpoints(n0, n1, block_ratio)
        for a, b in zip(pts[:-1], pts[1:]):
            k = b - a
            lo_sum.append(k * _event_bounds(t, e, b - 1, cutoff, cache)[0])
            hi_sum.append(k * _event_bounds(t, e, a, cutoff, cache)[1])
    else:
        for n in range(n0, n1 + 1):
            b_lo, b_hi = _event_bounds(t, e, n, cutoff, cache)
            lo_sum.append(b_lo)
            hi_sum.append(b_hi)
    lo = math.fsum(lo_sum) * (1 - 1e-12)
    hi = math.fsum(hi_sum) * (1 + 1e-12)
    if base == "lebesgue":
        lo, hi = lo * LN2, hi * 2 * LN2
    return Bracket(lo, hi)


def mc_experiment(samples: int, t, psi, base: str = "gauss", seed: int = 0,
                  window=(1, 1000), N: int | None = None, cutoff: int = 1000,
                  with_bracket: bool = True, keep_reports: bool = False) -> MCSummary:
    """Fraction of samples with at least one hit in ``window``.

    A finite window stands in for "infinitely often".  The analytic bracket
    is the union bound over the window and is an upper bound on the hit
    probability (not an estimate of it).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    t = t if isinstance(t, Weights) else Weights.parse(t)
    e = psi if isinstance(psi, GrowthExpr) else parse_growth(psi)
    n0, n1 = window
    N = n1 + t.m - 1 if N is None else N
    sampler = DigitSampler(base, seed)
    reports = []
    hit_samples = 0
    total_hits = 0
    for sid in range(samples):
        w = sample_digits(sampler, sid, N)
        rep = hit_scan(w, t, e, n0, n1, sample_id=sid, keep_logs=keep_reports)
        hit_samples += bool(rep.hits)
        total_hits += len(rep.hits)
        if keep_reports:
            reports.append(rep)
    p = hit_samples / samples
    sigma = math.sqrt(max(p * (1 - p), 0.0) / samples)
    bracket = union_bound(t, e, n0, n1, base, cutoff) if with_bracket else None
    note = (f"window [{n0},{n1}] surrogate for infinitely many n; "
            f"bracket is the union bound, an upper bound on the hit probability")
    return MCSummary(samples, hit_samples, p, total_hits / samples, sigma, bracket, note,
                     tuple(reports))


def dump_hits_csv(reports, path):
    """Rows (sampleId, n, logProduct, logPsi) for every recorded hit."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["sampleId", "n", "logProduct", "logPsi"])
        for rep in reports:
            for n, lp, ls in zip(rep.hits, rep.log_products, rep.log_psi):
                wr.writerow([rep.sample_id, n, format(lp, ".17g"), format(ls, ".17g")])
