"""Independent reference computations used to freeze or cross-check expected values.

None of these import the code paths they check.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


# ---------------------------------------------------------------------------
# epsilon-SVR dual by accelerated projected (proximal) gradient


def svr_dual_objective(beta, K, y, eps):
    """The quantity SVR maximises: -1/2 b'Kb - eps |b|_1 + y'b."""
    return -0.5 * beta @ K @ beta - eps * np.abs(beta).sum() + y @ beta


def _prox(v, t_eps, C):
    """argmin_b 1/2|b - v|^2 + t_eps |b|_1  s.t. sum b = 0, |b| <= C.

    sum(b(nu)) is piecewise linear and non-increasing in the multiplier nu, so
    the root is found exactly between consecutive breakpoints.
    """

    def solve(nu):
        w = v[None, :] - np.asarray(nu, dtype=np.float64).reshape(-1, 1)
        return np.clip(np.sign(w) * np.maximum(np.abs(w) - t_eps, 0.0), -C, C)

    knots = np.unique(np.concatenate([v - t_eps, v + t_eps, v - t_eps - C, v + t_eps + C]))
    sums = solve(knots).sum(axis=1)
    k = int(np.searchsorted(-sums, 0.0))
    if k == 0:
        nu = knots[0]
    elif k == len(knots):
        nu = knots[-1]
    else:
        s0, s1 = sums[k - 1], sums[k]
        nu = knots[k - 1] if s0 == s1 else knots[k - 1] + (knots[k] - knots[k - 1]) * s0 / (s0 - s1)
    return solve(nu)[0]


def svr_dual_oracle(K, y, C, eps, iters=100_000):
    """FISTA with adaptive restart on min 1/2 b'Kb - y'b + eps|b|_1 over the feasible set."""
    n = len(y)
    P = np.eye(n) - np.ones((n, n)) / n
    L = max(np.linalg.eigvalsh(P @ K @ P).max(), 1e-12)
    step = 1.0 / L

    def f(b):
        return 0.5 * b @ K @ b - y @ b + eps * np.abs(b).sum()

    beta = np.zeros(n)
    z = beta.copy()
    t = 1.0
    prev = f(beta)
    restarts = 0
    for _ in range(iters):
        new = _prox(z - step * (K @ z - y), step * eps, C)
        val = f(new)
        if val > prev + 1e-15 * max(1.0, abs(prev)):
            restarts += 1
            if restarts > 50:
                break
            z = beta.copy()
            t = 1.0
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        z = new + ((t - 1) / t_new) * (new - beta)
        moved = np.abs(new - beta).max()
        beta, t, prev = new, t_new, min(val, prev)
        if moved < 1e-13:
            break
    return beta


def svr_oracle_offset(beta, K, y, C, eps, free_tol=1e-7):
    """Offset from KKT: free coefficients pin it, otherwise midpoint of the feasible interval."""
    f = K @ beta
    free = (np.abs(beta) > free_tol) & (np.abs(beta) < C - free_tol)
    if free.any():
        return float(np.mean(y[free] - f[free] - eps * np.sign(beta[free])))
    lo, hi = -np.inf, np.inf
    for i in range(len(y)):
        r = y[i] - f[i]
        if beta[i] >= C - free_tol:  # residual above the tube: b <= r - eps
            hi = min(hi, r - eps)
        elif beta[i] <= -C + free_tol:
            lo = max(lo, r + eps)
        else:  # inside the tube: r - eps <= b <= r + eps
            lo = max(lo, r - eps)
            hi = min(hi, r + eps)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# edit distance by memoised recursion on the definition


def levenshtein_recursive(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


# ---------------------------------------------------------------------------
# finite differences


def central_difference(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = f(x)
        flat[k] = old - h
        fm = f(x)
        flat[k] = old
        gf[k] = (fp - fm) / (2 * h)
    return g


def relative_error(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


# ---------------------------------------------------------------------------
# naive rescans


def naive_tf(doc_tokens, term):
    return sum(1 for t in doc_tokens if t == term)


def naive_or(query, doc_tokens):
    return max((naive_tf(doc_tokens, q) for q in query), default=0)


def naive_and(query, doc_tokens):
    return min((naive_tf(doc_tokens, q) for q in query), default=0)
