"""
Penalty multipliers f(s) that turn the growth rate ln B into the constant
subtracted from the potential -s ln|T'|.

All functions accept scalars or numpy arrays for ``s`` in [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tailsums import Weights


def f_single(t0, s):
    return s / float(t0)


def f_pair(t0, t1, s):
    """s^2 / (t0 t1 max{s/t1 + (1-s)/t0, s/t0})."""
    t0, t1 = float(t0), float(t1)
    s = np.asarray(s, dtype=float)
    m = np.maximum(s / t1 + (1.0 - s) / t0, s / t0)
    out = s * s / (t0 * t1 * m)
    return float(out) if out.ndim == 0 else out


def pair_kink_side(t0, t1, s) -> bool:
    """True where s/t1 - (2s-1)/t0 <= 0, i.e. where f_pair reduces to s/t1."""
    return s / float(t1) - (2.0 * s - 1.0) / float(t0) <= 0


def f_unit_iter(m: int, s):
    """f_1 = s, f_{k+1} = s f_k / (1 - s + f_k); the value at s = 0 is 0."""
    if m < 1:
        raise ValueError("m must be >= 1")
    s = np.asarray(s, dtype=float)
    f = s.copy()
    for _ in range(m - 1):
        den = 1.0 - s + f
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(den > 0, s * f / np.where(den > 0, den, 1.0), 0.0)
    return float(f) if f.ndim == 0 else f


def f_general_iter(t, s):
    """f_{t_0} = s/t_0, then f <- s f / (t_l f + max{0, s - (2s-1) t_l / max_{i<l} t_i})."""
    w = t if isinstance(t, Weights) else Weights.parse(t)
    ts = w.floats()
    s = np.asarray(s, dtype=float)
    f = s / ts[0]
    run_max = ts[0]
    for tl in ts[1:]:
        den = tl * f + np.maximum(0.0, s - (2.0 * s - 1.0) * tl / run_max)
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(den > 0, s * f / np.where(den > 0, den, 1.0), 0.0)
        run_max = max(run_max, tl)
    return float(f) if f.ndim == 0 else f


@dataclass(frozen=True)
class FSpec:
    """Which f to use: kind in {"single", "pair", "unit", "general"}.

    "single" uses the first exponent, "pair" the first two (and needs m = 2
    unless ``pair_index`` selects a consecutive pair), "unit" is the
    unit-weight iteration of order m, "general" the weighted iteration.
    """
    weights: Weights
    kind: str
    pair_index: int = 0

    def __post_init__(self):
        w = self.weights if isinstance(self.weights, Weights) else Weights.parse(self.weights)
        object.__setattr__(self, "weights", w)
        if self.kind not in ("single", "pair", "unit", "general"):
            raise ValueError(f"unknown f kind {self.kind!r}")
        if self.kind == "pair" and w.m < 2:
            raise ValueError("pair needs two exponents")

    def __call__(self, s):
        w = self.weights
        if self.kind == "single":
            return f_single(w.t[self.pair_index], s)
        if self.kind == "pair":
            i = self.pair_index
            return f_pair(w.t[i], w.t[i + 1], s)
        if self.kind == "unit":
            return f_unit_iter(w.m, s)
        return f_general_iter(w, s)

    def label(self) -> str:
        if self.kind == "single":
            return f"single(t{self.pair_index})"
        if self.kind == "pair":
            return f"pair(t{self.pair_index},t{self.pair_index + 1})"
        return self.kind
