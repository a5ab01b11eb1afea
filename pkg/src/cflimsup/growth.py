"""
Growth functions Psi: N -> [1, inf) given as small expressions in ``n``.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' factor)?
    base   := number | 'n' | 'e' | 'pi' | ident '(' args ')' | '(' expr ')'

Functions: log, exp, sqrt and the presets pow(B) = B^n, poly(a) = n^a,
doubleexp(c, beta) = c^(beta^n).  The shapes ``B^n``, ``n^a`` and
``c^(beta^n)`` with numeric B, a, c, beta are folded into the presets.

Values are carried as (sign, log|v|), so ``e^(2^n)`` at n = 10^4 is fine.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .tailsums import Weights

_PREC = 113


class GrowthError(ValueError):
    pass


class GrowthSyntaxError(GrowthError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class GrowthNameError(GrowthError):
    pass


class GrowthDomainError(GrowthError):
    def __init__(self, msg, n=None):
        super().__init__(msg if n is None else f"{msg} (n={n})")
        self.n = n


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Num:
    text: str

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Var:
    def __str__(self):
        return "n"


@dataclass(frozen=True)
class Const:
    name: str  # "e" or "pi"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    arg: object

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"({self.left}{self.op}{self.right})"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def __str__(self):
        return f"{self.name}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class Preset:
    kind: str      # "pow" | "poly" | "doubleexp"
    params: tuple  # mpmath-free float-able nodes (Num/Const)

    def __str__(self):
        return f"{self.kind}({','.join(map(str, self.params))})"

    def values(self):
        return tuple(_const_value(p) for p in self.params)


_FUNCS = {"log": 1, "exp": 1, "sqrt": 1, "pow": 1, "poly": 1, "doubleexp": 2}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^(),]))")


def _tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise GrowthSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                                    pos + len(text[pos:]) - len(text[pos:].lstrip()))
        start = m.start(m.lastindex)
        kind = ("num", "id", "op")[m.lastindex - 1]
        tok = m.group(m.lastindex)
        out.append((kind, "^" if tok == "**" else tok, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise GrowthSyntaxError(f"expected {value!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise GrowthSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            node = BinOp("^", node, self.factor())
        return node

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(val)
        if kind == "id":
            if val == "n":
                return Var()
            if val in ("e", "pi"):
                return Const(val)
            if val not in _FUNCS:
                raise GrowthNameError(f"unknown identifier {val!r} at position {pos}")
            self.take("(")
            args = [self.expr()]
            while self.peek()[1] == ",":
                self.take()
                args.append(self.expr())
            self.take(")")
            if len(args) != _FUNCS[val]:
                raise GrowthSyntaxError(f"{val} takes {_FUNCS[val]} argument(s), got {len(args)}", pos)
            if val in ("pow", "poly", "doubleexp"):
                for a in args:
                    if not _is_const(a):
                        raise GrowthSyntaxError(f"{val} parameters must be numeric", pos)
                return Preset(val, tuple(args))
            return Call(val, tuple(args))
        if val == "(":
            node = self.expr()
            self.take(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise GrowthSyntaxError(f"unexpected {what}", pos)


def _is_const(node) -> bool:
    if isinstance(node, (Num, Const)):
        return True
    if isinstance(node, Neg):
        return _is_const(node.arg)
    return False


def _const_value(node) -> float:
    if isinstance(node, Num):
        return float(node.text)
    if isinstance(node, Const):
        return math.e if node.name == "e" else math.pi
    if isinstance(node, Neg):
        return -_const_value(node.arg)
    raise TypeError(node)


def _fold(node):
    """Rewrite B^n, n^a, c^(beta^n) and a bare n into presets."""
    if isinstance(node, BinOp):
        node = BinOp(node.op, _fold(node.left), _fold(node.right))
        if node.op == "^":
            L, R = node.left, node.right
            if _is_const(L) and isinstance(R, Var):
                return Preset("pow", (L,))
            if isinstance(L, Var) and _is_const(R):
                return Preset("poly", (R,))
            if _is_const(L) and isinstance(R, Preset) and R.kind == "pow":
                return Preset("doubleexp", (L, R.params[0]))
        return node
    if isinstance(node, Neg):
        return Neg(_fold(node.arg))
    if isinstance(node, Call):
        return Call(node.name, tuple(_fold(a) for a in node.args))
    return node


@dataclass(frozen=True)
class GrowthExpr:
    text: str
    root: object = field(compare=False)

    @property
    def preset(self) -> Preset | None:
        r = self.root
        if isinstance(r, Var):
            return Preset("poly", (Num("1"),))
        return r if isinstance(r, Preset) else None

    def __str__(self):
        return self.text


def parse_growth(text: str) -> GrowthExpr:
    if not isinstance(text, str) or not text.strip():
        raise GrowthSyntaxError("empty expression", 0)
    root = _fold(_Parser(text).parse())
    e = GrowthExpr(text.strip(), root)
    p = e.preset
    if p is not None:
        _check_preset(p)
    return e


def _check_preset(p: Preset):
    v = p.values()
    if p.kind == "pow" and v[0] < 1:
        raise GrowthDomainError(f"pow(B) needs B >= 1, got {v[0]}")
    if p.kind == "poly" and v[0] < 0:
        raise GrowthDomainError(f"poly(a) needs a >= 0, got {v[0]}")
    if p.kind == "doubleexp" and (v[0] < 1 or v[1] <= 0):
        raise GrowthDomainError("doubleexp(c, beta) needs c >= 1 and beta > 0")


# ------------------------------------------------- scalar log-space evaluation
# a value is (sign, lg) with v = sign * exp(lg); sign 0 means v = 0


def _mp_real(v):
    s, lg = v
    return mpmath.mpf(0) if s == 0 else s * mpmath.exp(lg)


def _mp_from_real(x):
    x = mpmath.mpf(x)
    if x == 0:
        return (0, mpmath.mpf(0))
    return (1 if x > 0 else -1, mpmath.log(abs(x)))


def _mp_add(a, b, n):
    if a[0] == 0:
        return b
    if b[0] == 0:
        return a
    hi, lo = (a, b) if a[1] >= b[1] else (b, a)
    d = mpmath.exp(lo[1] - hi[1])
    if hi[0] == lo[0]:
        return (hi[0], hi[1] + mpmath.log1p(d))
    if d == 1:
        return (0, mpmath.mpf(0))
    return (hi[0], hi[1] + mpmath.log1p(-d))


def _mp_pow(a, b, n):
    y = _mp_real(b)
    if a[0] == 0:
        if y > 0:
            return (0, mpmath.mpf(0))
        raise GrowthDomainError("zero to a non-positive power", n)
    if a[0] < 0:
        if y != mpmath.floor(y):
            raise GrowthDomainError("negative base to a non-integer power", n)
        sign = -1 if int(y) % 2 else 1
    else:
        sign = 1
    return (sign, y * a[1])


def _mp_eval(node, n):
    if isinstance(node, Num):
        return _mp_from_real(mpmath.mpf(node.text))
    if isinstance(node, Var):
        return (1, mpmath.log(n))
    if isinstance(node, Const):
        return (1, mpmath.mpf(1)) if node.name == "e" else (1, mpmath.log(mpmath.pi))
    if isinstance(node, Neg):
        s, lg = _mp_eval(node.arg, n)
        return (-s, lg)
    if isinstance(node, Preset):
        v = [_mp_real(_mp_eval(p, n)) for p in node.params]
        if node.kind == "pow":
            return (1, n * mpmath.log(v[0]))
        if node.kind == "poly":
            return (1, v[0] * mpmath.log(n))
        # c^(beta^n): log = beta^n * ln c
        lc = mpmath.log(v[0])
        return (1, mpmath.power(v[1], n) * lc)
    if isinstance(node, BinOp):
        a = _mp_eval(node.left, n)
        b = _mp_eval(node.right, n)
        if node.op == "+":
            return _mp_add(a, b, n)
        if node.op == "-":
            return _mp_add(a, (-b[0], b[1]), n)
        if node.op == "*":
            return (a[0] * b[0], a[1] + b[1])
        if node.op == "/":
            if b[0] == 0:
                raise GrowthDomainError("division by zero", n)
            return (a[0] * b[0], a[1] - b[1])
        return _mp_pow(a, b, n)
    if isinstance(node, Call):
        a = _mp_eval(node.args[0], n)
        if node.name == "exp":
            return (1, _mp_real(a))
        if node.name == "sqrt":
            if a[0] < 0:
                raise GrowthDomainError("sqrt of a negative number", n)
            return (a[0], a[1] / 2)
        if a[0] <= 0:
            raise GrowthDomainError("log of a non-positive number", n)
        return _mp_from_real(a[1])
    raise TypeError(node)


def eval_log_growth_mp(e: GrowthExpr, n: int, prec: int = _PREC):
    """ln Psi(n) as an mpmath number at ``prec`` bits."""
    if n < 1:
        raise GrowthDomainError("n must be >= 1", n)
    with mpmath.workprec(prec):
        s, lg = _mp_eval(e.root, n)
        if s <= 0 or lg < 0:
            raise GrowthDomainError(f"Psi(n) < 1 for {e}", n)
        return +lg


def eval_log_growth(e: GrowthExpr, n: int, prec: int = _PREC) -> float:
    """ln Psi(n) rounded once from ``prec`` bits (inf past the float range)."""
    return float(eval_log_growth_mp(e, n, prec))


# ------------------------------------------------- vectorised float path

def _preset_log(p: Preset, ns: np.ndarray) -> np.ndarray:
    v = p.values()
    with np.errstate(over="ignore"):
        if p.kind == "pow":
            return ns * math.log(v[0])
        if p.kind == "poly":
            return v[0] * np.log(ns)
        return np.power(v[1], ns) * math.log(v[0])


def log_growth_array(e: GrowthExpr, ns) -> np.ndarray:
    """ln Psi(n) for an array of n, floats; overflow shows up as inf."""
    ns = np.asarray(ns, dtype=float)
    if np.any(ns < 1):
        raise GrowthDomainError("n must be >= 1", int(ns[ns < 1][0]))
    p = e.preset
    if p is not None:
        return _preset_log(p, ns)
    with np.errstate(all="ignore"):
        s, lg = _np_eval(e.root, ns)
    bad = (s <= 0) | (lg < 0)
    # float noise near Psi = 1 or undefined pieces: settle with mpmath
    unsure = bad | ~np.isfinite(lg) | (np.abs(lg) < 1e-9)
    out = lg.astype(float).copy()
    for k in np.nonzero(unsure)[0]:
        out[k] = float(eval_log_growth_mp(e, int(ns[k])))
    return out


def _np_eval(node, ns):
    one = np.ones_like(ns)
    if isinstance(node, (Num, Const)):
        x = _const_value(node)
        return (np.sign(x) * one, math.log(abs(x)) * one if x else 0 * one)
    if isinstance(node, Var):
        return one, np.log(ns)
    if isinstance(node, Neg):
        s, lg = _np_eval(node.arg, ns)
        return -s, lg
    if isinstance(node, Preset):
        return one, _preset_log(node, ns)
    if isinstance(node, BinOp):
        sa, la = _np_eval(node.left, ns)
        sb, lb = _np_eval(node.right, ns)
        if node.op in "+-":
            if node.op == "-":
                sb = -sb
            hi = np.where(la >= lb, la, lb)
            lo = np.where(la >= lb, lb, la)
            shi = np.where(la >= lb, sa, sb)
            slo = np.where(la >= lb, sb, sa)
            d = np.exp(lo - hi)
            d = np.where((slo == 0), 0.0, d)
            same = shi * slo >= 0
            lg = hi + np.where(same, np.log1p(d), np.log1p(-d))
            s = np.where(shi == 0, slo, shi)
            s = np.where(~same & (d == 1), 0, s)
            return s, np.where(s == 0, 0.0, lg)
        if node.op == "*":
            return sa * sb, la + lb
        if node.op == "/":
            return sa * sb, np.where(sb == 0, np.nan, la - lb)
        y = sb * np.exp(lb)
        return np.where(sa > 0, 1.0, np.nan), y * la
    if isinstance(node, Call):
        s, lg = _np_eval(node.args[0], ns)
        if node.name == "exp":
            return one, s * np.exp(lg)
        if node.name == "sqrt":
            return np.where(s >= 0, s, np.nan), lg / 2
        return np.where(s > 0, np.sign(lg), np.nan), np.log(np.abs(lg))
    raise TypeError(node)


# ------------------------------------------------- exponents and branches

@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    horizon: int
    windowed_minima: tuple
    skipped: int = 0
    finite_horizon: bool = True


def estimate_exponents(e: GrowthExpr, N: int, prec: int = _PREC):
    """Windowed estimates of B = liminf Psi(n)^(1/n) and b = liminf (ln Psi(n))^(1/n).

    Both use the minimum over n in [N/2, N].  For b, n with Psi(n) <= 1
    (where ln ln is undefined) are skipped.  Computed at ``prec`` bits and
    rounded once, so constant sequences return their constant exactly.
    """
    if N < 16:
        raise GrowthDomainError("N must be >= 16")
    ns = range(N // 2, N + 1)
    mins_B, mins_b = [], []
    skipped = 0
    with mpmath.workprec(prec):
        cur_B = cur_b = mpmath.inf
        for n in ns:
            lg = eval_log_growth_mp(e, n, prec)
            cur_B = min(cur_B, lg / n)
            mins_B.append(cur_B)
            if lg > 0:
                cur_b = min(cur_b, mpmath.log(lg) / n)
            else:
                skipped += 1
            mins_b.append(cur_b)
        B = float(mpmath.exp(cur_B))
        b = float(mpmath.exp(cur_b)) if cur_b != mpmath.inf else math.inf
    return (ExponentEstimate(B, N, tuple(float(mpmath.exp(x)) for x in mins_B)),
            ExponentEstimate(b, N, tuple(float(mpmath.exp(x)) if x != mpmath.inf else math.inf
                                         for x in mins_b), skipped))


@dataclass(frozen=True)
class BranchInfo:
    branch: str        # "B=1" | "finiteB" | "B=inf"
    B: float
    b: float | None
    exact: bool


def classify_branch(e: GrowthExpr, N: int = 1000) -> BranchInfo:
    """Exact for the preset families; otherwise raises with the windowed
    estimates so the caller can pass an explicit override."""
    p = e.preset
    if p is not None:
        v = p.values()
        if p.kind == "poly":
            return BranchInfo("B=1", 1.0, None, True)
        if p.kind == "pow":
            return BranchInfo("B=1" if v[0] == 1 else "finiteB", v[0], None, True)
        c, beta = v
        if c == 1 or beta < 1:
            return BranchInfo("B=1", 1.0, None, True)
        if beta == 1:
            return BranchInfo("B=1" if c == 1 else "finiteB", c, None, True)
        return BranchInfo("B=inf", math.inf, beta, True)
    Bh, bh = estimate_exponents(e, N)
    guess = "B=1" if Bh.value < 1.02 else ("B=inf" if bh.value > 1.02 else "finiteB")
    raise GrowthError(
        f"cannot certify the growth branch of {e} from a finite horizon; "
        f"windowed estimates B~{Bh.value:.6g}, b~{bh.value:.6g} suggest {guess}; "
        f"pass an explicit branch override")


# ------------------------------------------------- series test

@dataclass(frozen=True)
class SeriesVerdict:
    verdict: str        # "Convergent" | "Divergent" | "Undecided"
    partial_sum: float
    tail_evidence: str


_RATIO_MAX = 0.9
_FIT_TOL = 1e-6
_ALPHA_ZERO = 0.01
_BETA_MARGIN = 0.1


def series_log_terms(e: GrowthExpr, t, ns) -> np.ndarray:
    """ln of (ln Psi(n))^(ell-1) / Psi(n)^(1/t_max)."""
    w = t if isinstance(t, Weights) else Weights.parse(t)
    lg = log_growth_array(e, ns)
    tm = float(w.t_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        if w.ell == 1:
            out = -lg / tm
        else:
            out = (w.ell - 1) * np.log(lg) - lg / tm
    out = np.where(np.isinf(lg), -np.inf, out)
    return out


def _scale_fit(e, t, n_hi):
    """Fit ln(n * term) = -(c + alpha ln n + beta ln ln n) through n_hi/2,
    n_hi/sqrt 2, n_hi.  Exact on the comparison scale n^-(1+alpha) (ln n)^-beta."""
    ns = np.array([n_hi / 2, n_hi / math.sqrt(2), n_hi]).round()
    k = -(series_log_terms(e, t, ns) + np.log(ns))
    if not np.all(np.isfinite(k)):
        return None
    A = np.column_stack([np.ones(3), np.log(ns), np.log(np.log(ns))])
    _, alpha, beta = np.linalg.solve(A, k)
    return float(alpha), float(beta)


def _scale_verdict(fits):
    """A power excess alpha counts when both windows agree on it; lower-order
    terms (shifts such as log(n+2)) leave a drifting alpha that is read as
    zero, after which beta decides with a margin of 0.1."""
    (a1, b1), (a2, b2) = fits
    if abs(a1) > _FIT_TOL and abs(a1 - a2) <= 0.1 * abs(a1):
        return "Convergent" if a1 > 0 else "Divergent"
    if max(abs(a1), abs(a2)) > _ALPHA_ZERO:
        return "Undecided"
    if min(b1, b2) > 1 + _BETA_MARGIN:
        return "Convergent"
    if max(b1, b2) < 1 - _BETA_MARGIN:
        return "Divergent"
    return "Undecided"


def series_test(e: GrowthExpr, t, N: int = 10_000) -> SeriesVerdict:
    """Decide convergence of the series sum_n (ln Psi)^(ell-1) Psi^(-1/t_max).

    Terms depend on t only through (t_max, ell).  Geometric decay on
    [N/2, N] (every consecutive ratio <= 0.9) is Convergent.  Otherwise the
    terms are matched to n^-(1+alpha) (ln n)^-beta on two windows, [N/2, N]
    and [N/8, N/4], and compared with that scale (alpha against 0, then
    beta against 1).  Borderline fits are Undecided.
    """
    if N < 128:
        raise GrowthDomainError("N must be >= 128")
    ns = np.arange(1, N + 1, dtype=float)
    lt = series_log_terms(e, t, ns)
    partial = math.fsum(np.exp(lt).tolist())
    lw = lt[N // 2 - 1:N]
    if np.all(np.isneginf(lw)):
        return SeriesVerdict("Convergent", partial, "terms vanish in floating point on the window")
    ratios = np.diff(lw)
    finite = np.isfinite(lw[:-1])
    if np.all(ratios[finite] <= math.log(_RATIO_MAX)):
        r = float(np.exp(np.max(ratios[finite])))
        tail = float(np.exp(lw[-1])) * r / (1 - r)
        return SeriesVerdict("Convergent", partial,
                             f"ratio test: sup ratio {r:.6g} <= {_RATIO_MAX} on [{N // 2},{N}], tail <= {tail:.3g}")
    fits = [_scale_fit(e, t, N), _scale_fit(e, t, N // 4)]
    if any(f is None for f in fits):
        return SeriesVerdict("Undecided", partial, "non-finite terms in the comparison windows")
    desc = ", ".join(f"alpha={a:.4g} beta={b:.4g}" for a, b in fits)
    return SeriesVerdict(_scale_verdict(fits), partial,
                         f"comparison with n^-(1+alpha)(ln n)^-beta on [N/2,N], [N/8,N/4]: {desc}")


# ------------------------------------------------- exact rational values

def _exact(node, n):
    from fractions import Fraction
    if isinstance(node, Num):
        return Fraction(node.text)
    if isinstance(node, Var):
        return Fraction(n)
    if isinstance(node, Neg):
        v = _exact(node.arg, n)
        return None if v is None else -v
    if isinstance(node, Preset):
        if any(isinstance(p, Const) for p in node.params):
            return None
        v = [_exact(p, n) for p in node.params]
        if node.kind == "pow":
            return v[0] ** n
        if node.kind == "poly":
            return Fraction(n) ** v[0] if v[0].denominator == 1 else None
        if v[1].denominator != 1 or v[1] ** n > 4096:
            return None
        return v[0] ** int(v[1] ** n)
    if isinstance(node, BinOp):
        a, b = _exact(node.left, n), _exact(node.right, n)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return None if b == 0 else a / b
        if b.denominator != 1 or abs(b) > 4096 or (a == 0 and b <= 0):
            return None
        return a ** int(b)
    return None


def eval_exact(e: GrowthExpr, n: int):
    """Psi(n) as a Fraction when it is rational by construction, else None."""
    try:
        return _exact(e.root, n)
    except (OverflowError, ZeroDivisionError):
        return None
