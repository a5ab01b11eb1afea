"""
Pressure of the potential -s ln|T'| - c over the alphabet {1..M}, its root
in s, and the Hausdorff-dimension dispatcher built on top.

Two engines:

``wordsum``
    (1/n) ln sum over {1..M}^n of e^{-nc} q_n^{-2s}, by enumeration.
``spectral``
    ln of the leading eigenvalue of (Lf)(x) = sum_a (a+x)^{-2s} f(1/(a+x)),
    discretised on Chebyshev-Lobatto nodes and found by power iteration.
    Branches a <= 48 are applied directly.  For a > 48 the interpolant is
    expanded in monomials of y = 1/(a+x) and the sums over a become
    Hurwitz-type sums evaluated by Euler-Maclaurin, so the cost does not
    depend on M and M = inf is allowed when s > 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from . import _accel
from . import kernels
from .cfcore import MeasureValue
from .errors import BudgetError, ConfigurationError, ConvergenceError
from .ffuncs import FSpec, f_pair, f_single, pair_kink_side
from .growth import BranchInfo, GrowthError, GrowthExpr, classify_branch
from .tailsums import Weights

WORD_BUDGET = 10 ** 8
K_DIRECT = 48
DEFAULT_GRID = 32
M_CAP_EXP = 1000          # schedule stops at M = 2^1000
_BERN = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730)   # B_2 .. B_12


# ------------------------------------------------------------- enumeration

def _check_budget(M, n, budget):
    if M < 1 or n < 1:
        raise ValueError("need M >= 1 and n >= 1")
    if float(M) ** n > budget:
        raise BudgetError(f"{M}^{n} words exceed the enumeration budget {budget:.3g}; "
                          f"use the spectral engine")


def wordsum(M: int, n: int, s: float, c: float = 0.0, budget: float = WORD_BUDGET) -> float:
    """ln sum_{w in {1..M}^n} e^{-nc} q_n(w)^{-2s}."""
    _check_budget(M, n, budget)
    if not (0.0 <= s <= 1.0) or c < 0:
        raise ValueError("need 0 <= s <= 1 and c >= 0")
    fn = kernels.wordsum_nb if _accel.USE_NUMBA else kernels.wordsum_np
    return float(fn(int(M), int(n), 2.0 * s)) - n * c


def transfer_iterate(M: int, n: int, s: float, x: float = 0.0, budget: float = WORD_BUDGET) -> float:
    """ln (L^n 1)(x), evaluated through the branch points x -> 1/(a+x)."""
    _check_budget(M, n, budget)
    fn = kernels.transfer_nb if _accel.USE_NUMBA else kernels.transfer_np
    return float(fn(int(M), int(n), 2.0 * s, float(x)))


def pressure_wordsum(M: int, n: int, s: float, c: float = 0.0, budget: float = WORD_BUDGET) -> float:
    return wordsum(M, n, s, c, budget) / n


# ------------------------------------------------------------- spectral

@lru_cache(maxsize=None)
def _grid(N: int):
    """Lobatto nodes on [0,1], barycentric weights, and the matrix taking
    node values to monomial coefficients in y."""
    j = np.arange(N)
    x = (1.0 - np.cos(np.pi * j / (N - 1))) / 2.0
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    C = np.empty((N, N))
    for k in range(N):
        e = np.zeros(N)
        e[k] = 1.0
        # degree N-1 interpolant of the k-th Lagrange basis, then to monomials
        cc = _cheb.chebfit(2.0 * x - 1.0, e, N - 1)
        mono = _cheb.Chebyshev(cc, domain=[0.0, 1.0]).convert(kind=np.polynomial.Polynomial)
        C[:, k] = np.pad(mono.coef, (0, N - len(mono.coef)))
    return x, w, C


def _bary_matrix(x, w, y):
    """Interpolation matrix: rows are points y, columns node weights."""
    d = y[:, None] - x[None, :]
    exact = d == 0.0
    d = np.where(exact, 1.0, d)
    r = w[None, :] / d
    r /= r.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if hit.any():
        r[hit] = exact[hit].astype(float)
    return r


@lru_cache(maxsize=None)
def _direct_tensor(N: int, K: int):
    """E[a-1, i, j] = l_j(1/(a + x_i)) for a = 1..K."""
    x, w, _ = _grid(N)
    a = np.arange(1.0, K + 1.0)
    y = 1.0 / (a[:, None] + x[None, :])
    E = _bary_matrix(x, w, y.ravel()).reshape(K, N, N)
    return a, E


def hurwitz_block(sigma, u, v=None):
    """sum_{j=0}^{V} (u + j)^{-sigma} for every (u_i, sigma_k), where the
    last term is at v = u + V (v = None means infinity, needing sigma > 1).

    Euler-Maclaurin with six Bernoulli corrections; accurate to about 1e-16
    relative once u >= 40.  The integral is written with expm1 so sigma
    near 1 loses nothing.
    """
    S = np.asarray(sigma, dtype=float)[None, :]
    U = np.asarray(u, dtype=float)[:, None]
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        if v is None:
            integral = U ** (1.0 - S) / (S - 1.0)
            ends = 0.5 * U ** (-S)
            Vp = None
        else:
            V = np.asarray(v, dtype=float)[:, None]
            L = np.log(V / U)
            z = (1.0 - S) * L
            phi = np.where(z == 0.0, 1.0, np.expm1(z) / np.where(z == 0.0, 1.0, z))
            integral = U ** (1.0 - S) * L * phi
            ends = 0.5 * (U ** (-S) + V ** (-S))
            Vp = V
        corr = np.zeros(np.broadcast(U, S).shape)
        poch = S.copy()                       # (S)_{2j-1}
        fact = 2.0                            # (2j)!
        for j, b in enumerate(_BERN, start=1):
            r = 2 * j - 1
            term = U ** (-S - r)
            if Vp is not None:
                term = term - Vp ** (-S - r)
            corr = corr + b / fact * poch * term
            poch = poch * (S + r) * (S + r + 1)
            fact *= (2 * j + 1) * (2 * j + 2)
        out = integral + ends + corr
    return np.nan_to_num(out, nan=0.0, posinf=np.inf)


def _operator(N: int, M, s: float):
    x, w, C = _grid(N)
    K = K_DIRECT if (M is None or M > K_DIRECT) else int(M)
    a, E = _direct_tensor(N, K)
    wts = (a[:, None] + x[None, :]) ** (-2.0 * s)
    A = np.einsum("ai,aij->ij", wts, E)
    if M is None or M > K_DIRECT:
        if M is None and s <= 0.5:
            raise ConfigurationError("the full alphabet needs s > 1/2")
        sig = 2.0 * s + np.arange(N)
        u = K_DIRECT + 1.0 + x
        v = None if M is None else float(M) + x
        Z = hurwitz_block(sig, u, v)
        A = A + Z @ C
    return A


def _power(A, tol=1e-12, max_iter=20000):
    f = np.ones(A.shape[0])
    lam = 0.0
    res = math.inf
    for it in range(1, max_iter + 1):
        g = A @ f
        lam_new = float(np.max(np.abs(g)))
        g = g / lam_new
        res = float(np.max(np.abs(A @ g - lam_new * g))) / lam_new
        f = g
        lam = lam_new
        if res <= tol:
            return lam, res, it, f
    raise ConvergenceError("power iteration did not converge", res)


def _as_M(M):
    if M is None or (isinstance(M, float) and math.isinf(M)):
        return None
    M = int(M)
    if M < 1:
        raise ValueError("M must be >= 1")
    return M


def pressure_spectral(M, s: float, c: float = 0.0, grid: int = DEFAULT_GRID,
                      tol: float = 1e-12) -> MeasureValue:
    """P_{1..M}(T, -s ln|T'| - c); M may be ``inf``/None for all digits."""
    if grid < 8:
        raise ValueError("grid must be >= 8")
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    Mi = _as_M(M)
    A = _operator(grid, Mi, s)
    lam, res, it, _ = _power(A, tol)
    if lam <= 0:
        raise ConvergenceError("non-positive leading eigenvalue", res)
    val = math.log(lam) - c
    return MeasureValue(val, max(res, 1e-15), {"M": "inf" if Mi is None else Mi,
                                               "grid": grid, "iterations": it,
                                               "residual": res})


# ------------------------------------------------------------- root finding

def _fspec(t, fkind):
    if isinstance(fkind, FSpec):
        return fkind
    if callable(fkind):
        return fkind
    w = t if isinstance(t, Weights) else Weights.parse(t)
    kind = fkind or ("single" if w.m == 1 else "pair" if w.m == 2 else "general")
    return FSpec(w, kind)


def _pressure_fn(M, engine, depth, grid):
    if engine == "spectral":
        return lambda s: pressure_spectral(M, s, 0.0, grid).value
    if engine == "wordsum":
        if M is None:
            raise ConfigurationError("the wordsum engine needs a finite alphabet")
        return lambda s: wordsum(M, depth, s) / depth
    raise ValueError(f"unknown engine {engine!r}")


def _bisect(F, lo, hi, tol):
    flo, fhi = F(lo), F(hi)
    steps = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        steps += 1
        if fm > 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi), steps


def solve_s(M, B: float, t, fkind=None, tol: float = 1e-8, engine: str = "spectral",
            depth: int = 1, grid: int = DEFAULT_GRID, lo: float | None = None,
            hi: float | None = None) -> float:
    """Root in s of P_{1..M}(T, -s ln|T'| - f(s) ln B) = 0 by bisection.

    The left side is strictly decreasing in s.  ``lo`` may pass a known lower
    bound for the root and ``hi`` a guess for an upper one (checked, and
    dropped if wrong); the M-schedule uses both.
    """
    if not B > 1:
        raise ValueError("B must be > 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    f = _fspec(t, fkind)
    lnB = math.log(B)
    Mi = _as_M(M)
    P = _pressure_fn(Mi, engine, depth, grid)

    def F(s):
        return P(s) - float(f(s)) * lnB

    if Mi is None:
        a, b = 0.5 + 1e-9, 1.0
    else:
        a, b = 0.0, 1.0
    if lo is not None:
        a = max(a, lo - tol)
    if hi is not None and a < hi < b and F(hi) <= 0:
        b = hi
    elif F(b) > 0:
        raise ConfigurationError("pressure equation is positive at s = 1")
    if F(a) < 0:
        if Mi is None or lo is not None:
            raise ConfigurationError(f"pressure equation is negative at s = {a:.6g}")
        if a == 0.0:
            return 0.0
    # the root sits above 1/2 for large alphabets; one evaluation tells
    mid = 0.5
    if hi is None and a < mid < b:
        if F(mid) > 0:
            a = mid
        else:
            b = mid
    root, _ = _bisect(F, a, b, tol)
    return root


def s_of_B(B: float, t, fkind=None, tol: float = 1e-8, grid: int = DEFAULT_GRID,
           max_doublings: int = M_CAP_EXP) -> MeasureValue:
    """sup over finite alphabets of the pressure root, via M = 2, 4, 8, ...

    Stops when successive roots differ by less than tol/2.  The full-alphabet
    root is computed alongside as a check; the error bound covers the gap to
    it.  If the doubling budget runs out the result is flagged a lower bound.
    """
    f = _fspec(t, fkind)
    sched = []
    prev = None
    inc = math.inf
    M = 1
    stopped = False
    for k in range(1, max_doublings + 1):
        M = 2 ** k
        guess = None if not math.isfinite(inc) else prev + 4 * max(inc, tol)
        root = solve_s(M, B, t, f, tol / 4, grid=grid, lo=prev, hi=guess)
        if prev is not None:
            if root < prev - tol:
                raise ConvergenceError(f"M-schedule decreased at M=2^{k}: {prev} -> {root}")
            inc = root - prev
        sched.append((k, root))
        prev = root
        if inc < tol / 2:
            stopped = True
            break
    try:
        s_inf = solve_s(None, B, t, f, tol / 4, grid=grid)
    except (ConfigurationError, ConvergenceError):
        s_inf = None
    gap = 0.0 if s_inf is None else max(0.0, s_inf - prev)
    err = max(inc if math.isfinite(inc) else 1.0, gap) + tol
    info = {"M_last": f"2^{sched[-1][0]}", "doublings": len(sched), "last_increment": inc,
            "s_inf": s_inf, "lower_bound_only": not stopped,
            "f": f.label() if isinstance(f, FSpec) else "custom"}
    return MeasureValue(prev, err, info)


# ------------------------------------------------------------- dispatcher

@dataclass(frozen=True)
class DimensionResult:
    lower: float
    upper: float
    branch: str   # B_equals_1 | B_infinite | finiteB_exact_m1 | finiteB_exact_m2 | finiteB_bracket_m_gt_2
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"bad dimension bracket [{self.lower}, {self.upper}]")

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)


def parse_branch(raw) -> BranchInfo:
    """"B=1", "B=inf,b=2" or "B=4" (any finite B > 1)."""
    if isinstance(raw, BranchInfo):
        return raw
    parts = dict(p.split("=", 1) for p in str(raw).replace(" ", "").split(",") if p)
    if "B" not in parts:
        raise ValueError(f"branch override needs B=..., got {raw!r}")
    Bs = parts["B"].lower()
    if Bs in ("inf", "infinity"):
        if "b" not in parts:
            raise ValueError("B=inf needs b=...")
        return BranchInfo("B=inf", math.inf, float(parts["b"]), True)
    B = float(Bs)
    if B == 1:
        return BranchInfo("B=1", 1.0, None, True)
    if B < 1:
        raise ValueError("B must be >= 1")
    return BranchInfo("finiteB", B, None, True)


def hdim_dispatch(e: GrowthExpr, t, branch_override=None, tol: float = 1e-8,
                  grid: int = DEFAULT_GRID) -> DimensionResult:
    w = t if isinstance(t, Weights) else Weights.parse(t)
    if branch_override is not None:
        info = parse_branch(branch_override)
    else:
        info = classify_branch(e)
    diag = {"branch_source": "override" if branch_override is not None else "preset",
            "B": info.B, "b": info.b, "tol": tol}
    if info.branch == "B=1":
        return DimensionResult(1.0, 1.0, "B_equals_1", diag)
    if info.branch == "B=inf":
        if not info.b or info.b < 1:
            raise ValueError("B=inf branch needs b >= 1")
        v = 1.0 / (1.0 + info.b)
        return DimensionResult(v, v, "B_infinite", diag)
    B = info.B

    def root(f):
        r = s_of_B(B, w, f, tol, grid)
        return r

    if w.m == 1:
        r = root(FSpec(w, "single"))
        diag.update(r.info, err=r.abs_error_bound)
        return _clamped(r.value, r.value, "finiteB_exact_m1", diag)
    if w.m == 2:
        r = root(FSpec(w, "pair"))
        s = r.value
        diag.update(r.info, err=r.abs_error_bound)
        if pair_kink_side(w.t[0], w.t[1], s):
            alt = root(lambda x: f_single(w.t[1], x))
            diag["kink_branch_root"] = alt.value
            if abs(alt.value - s) > 2 * tol + r.abs_error_bound:
                raise ConvergenceError(f"reduced penalty s/t1 gives {alt.value}, pair gives {s}")
        return _clamped(s, s, "finiteB_exact_m2", diag)
    lows = {}
    for i in range(w.m - 1):
        lows[f"pair{i}"] = root(FSpec(w, "pair", i)).value
    for i in range(w.m):
        lows[f"single{i}"] = root(FSpec(w, "single", i)).value
    up = root(FSpec(w, "general"))
    lo = max(lows.values())
    diag.update(candidates=lows, upper_err=up.abs_error_bound, lower_source=max(lows, key=lows.get))
    hi = up.value
    if lo > hi + 2 * tol:
        diag["inconsistent"] = True
    return _clamped(min(lo, hi), max(lo, hi), "finiteB_bracket_m_gt_2", diag)


def _clamped(lo, hi, branch, diag):
    return DimensionResult(min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0), branch, diag)
