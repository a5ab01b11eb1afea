"""
Enumeration kernels over the words of {1..M}^n.

``wordsum_*`` accumulate ln sum q_n^{-2s} from integer continuants;
``transfer_*`` evaluate ln (L^n 1)(x0) through the branch points
x -> 1/(a + x).  The two are mathematically equal at x0 = 0 but share no
arithmetic, which is what makes one a check on the other.

Each has a numba DFS and a numpy chunked-BFS version.
"""
import math

import numpy as np

from ._accel import njit

_RESCALE = 1e150
_LN_RESCALE = math.log(_RESCALE)
_CHUNK = 1 << 18


def logsumexp(v):
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return -math.inf
    m = float(np.max(v))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(v - m))))


# ------------------------------------------------------------------ numba

@njit
def wordsum_nb(M, n, s2):
    qp = np.empty(n)
    q = np.empty(n)
    ls = np.empty(n)
    dig = np.zeros(n, np.int64)
    qp[0] = 0.0
    q[0] = 1.0
    ls[0] = 0.0
    ref = -np.inf
    acc = 0.0
    d = 0
    while True:
        if d == n - 1:
            Q = q[d]
            QP = qp[d]
            L = ls[d]
            for a in range(1, M + 1):
                v = -s2 * (np.log(a * Q + QP) + L)
                if v > ref:
                    acc = acc * np.exp(ref - v) + 1.0
                    ref = v
                else:
                    acc += np.exp(v - ref)
            if d == 0:
                break
            d -= 1
            continue
        dig[d] += 1
        if dig[d] > M:
            dig[d] = 0
            if d == 0:
                break
            d -= 1
            continue
        a = dig[d]
        nq = a * q[d] + qp[d]
        nqp = q[d]
        L = ls[d]
        if nq > 1e150:
            nq *= 1e-150
            nqp *= 1e-150
            L += 345.38776394910684
        q[d + 1] = nq
        qp[d + 1] = nqp
        ls[d + 1] = L
        dig[d + 1] = 0
        d += 1
    return ref + np.log(acc)


@njit
def transfer_nb(M, n, s2, x0):
    y = np.empty(n)
    lw = np.empty(n)
    dig = np.zeros(n, np.int64)
    y[0] = x0
    lw[0] = 0.0
    ref = -np.inf
    acc = 0.0
    d = 0
    while True:
        if d == n - 1:
            Y = y[d]
            W = lw[d]
            for a in range(1, M + 1):
                v = W - s2 * np.log(a + Y)
                if v > ref:
                    acc = acc * np.exp(ref - v) + 1.0
                    ref = v
                else:
                    acc += np.exp(v - ref)
            if d == 0:
                break
            d -= 1
            continue
        dig[d] += 1
        if dig[d] > M:
            dig[d] = 0
            if d == 0:
                break
            d -= 1
            continue
        a = dig[d]
        z = a + y[d]
        y[d + 1] = 1.0 / z
        lw[d + 1] = lw[d] - s2 * np.log(z)
        dig[d + 1] = 0
        d += 1
    return ref + np.log(acc)


# ------------------------------------------------------------------ numpy

def _bfs(M, n, init, step, leaf):
    """Expand states level by level, splitting the frontier into chunks so
    memory stays bounded; ``leaf`` maps a frontier at depth n-1 to the log
    terms of its children."""
    digits = np.arange(1.0, M + 1.0)
    parts = []
    stack = [(init, 0)]
    while stack:
        state, depth = stack.pop()
        size = len(state[0])
        if depth == n - 1:
            parts.append(logsumexp(leaf(state, digits)))
            continue
        if size * M > _CHUNK and size > 1:
            for idx in np.array_split(np.arange(size), int(np.ceil(size * M / _CHUNK))):
                stack.append((tuple(c[idx] for c in state), depth))
            continue
        stack.append((step(state, digits), depth + 1))
    return logsumexp(parts)


def wordsum_np(M, n, s2):
    def step(state, a):
        qp, q, ls = state
        nq = (a[None, :] * q[:, None] + qp[:, None]).ravel()
        nqp = np.repeat(q, len(a))
        nls = np.repeat(ls, len(a))
        big = nq > _RESCALE
        nq = np.where(big, nq / _RESCALE, nq)
        nqp = np.where(big, nqp / _RESCALE, nqp)
        nls = np.where(big, nls + _LN_RESCALE, nls)
        return nqp, nq, nls

    def leaf(state, a):
        qp, q, ls = state
        return (-s2 * (np.log(a[None, :] * q[:, None] + qp[:, None]) + ls[:, None])).ravel()

    init = (np.zeros(1), np.ones(1), np.zeros(1))
    return _bfs(M, n, init, step, leaf)


def transfer_np(M, n, s2, x0):
    def step(state, a):
        y, lw = state
        z = (a[None, :] + y[:, None]).ravel()
        return 1.0 / z, np.repeat(lw, len(a)) - s2 * np.log(z)

    def leaf(state, a):
        y, lw = state
        return (lw[:, None] - s2 * np.log(a[None, :] + y[:, None])).ravel()

    init = (np.array([float(x0)]), np.zeros(1))
    return _bfs(M, n, init, step, leaf)


# ------------------------------------------------------------------ sampler
# State per sample: r = q_{k-1}/q_k, rp = s_{k-1}/s_k with s = q + p, and
# d = rp - r.  The next digit is floor(c*) where c* solves
#   Lebesgue:  (1 + r)/(c + r) = U
#   Gauss:     log1p(d/(c + r)) = U log1p(d/(1 + r))
# Draws too close to an integer, or above 2^40, go back to exact arithmetic.

GUARD_ABS = 1e-9
GUARD_REL = 1e-13
HUGE_DIGIT = 2.0 ** 40
TINY_D = 1e-200


@njit
def sample_nb(U, k0, out, r, rp, d, gauss):
    """Fill out[k0:] from uniforms U; stop early at a draw needing exact
    arithmetic.  Returns (k, r, rp, d): k == len(U) when finished."""
    N = U.shape[0]
    k = k0
    while k < N:
        u = U[k]
        if gauss and abs(d) >= TINY_D:
            cs = d / np.expm1(u * np.log1p(d / (1.0 + r))) - r
        else:
            cs = (1.0 + r) / u - r
        if cs > HUGE_DIGIT:
            return k, r, rp, d
        fl = np.floor(cs)
        frac = cs - fl
        tol = GUARD_ABS + GUARD_REL * cs
        if frac < tol or frac > 1.0 - tol:
            return k, r, rp, d
        a = fl if fl >= 1.0 else 1.0
        out[k] = np.int64(a)
        r = 1.0 / (a + r)
        if gauss:
            rp = 1.0 / (a + rp)
            d = -d * r * rp
        k += 1
    return k, r, rp, d


def sample_step_np(U, r, rp, d, gauss):
    """One digit for every sample at once.  Returns (digits, ambiguous mask)."""
    with np.errstate(all="ignore"):
        if gauss:
            use_g = np.abs(d) >= TINY_D
            cg = d / np.expm1(U * np.log1p(d / (1.0 + r))) - r
            cl = (1.0 + r) / U - r
            cs = np.where(use_g, cg, cl)
        else:
            cs = (1.0 + r) / U - r
    fl = np.floor(cs)
    frac = cs - fl
    tol = GUARD_ABS + GUARD_REL * cs
    amb = (cs > HUGE_DIGIT) | (frac < tol) | (frac > 1.0 - tol) | ~np.isfinite(cs)
    a = np.maximum(np.where(amb, 1.0, fl), 1.0)
    return a, amb
