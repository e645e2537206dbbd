"""Pure numpy backend for the support-function ascent.

Mirrors fsbclab._core; selected by fsbclab._backend when the compiled
extension is unavailable or FSBCLAB_PURE is set.  All information terms
are in bits.  Logs are floored by adding 1e-300, which leaves normal
probabilities bit-exact and maps empty cells to a large negative finite
value instead of -inf.
"""

from __future__ import annotations

import numpy as np

_FLOOR = 1e-300
_STEP_CAP = 4.0

COMPILED = False


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a flat vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - css) / idx > 0.0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + theta, 0.0)


def objective_terms(py_stack: np.ndarray, pz_stack: np.ndarray, q: np.ndarray):
    """Per-initial-state information terms for a joint input law.

    py_stack: (S, NX, NY) block law p(y-block | x-block, s0) per state.
    pz_stack: (S, NX, NZ) likewise for the far receiver.
    q: (NU, NX) joint law over (u-block, x-block).
    Returns (i1, i2): arrays (S,) holding I(X;Y|U, s0) and I(U;Z, s0).
    """
    s = py_stack.shape[0]
    w = q.sum(axis=1)
    qx = q.sum(axis=0)
    lw = np.log2(w + _FLOOR)
    i1 = np.empty(s)
    i2 = np.empty(s)
    for k in range(s):
        m = q @ pz_stack[k]
        pzm = m.sum(axis=0)
        i2[k] = float(np.sum(m * (np.log2(m + _FLOOR) - np.log2(np.outer(w, pzm) + _FLOOR))))
        c = q @ py_stack[k]
        erow = np.sum(py_stack[k] * np.log2(py_stack[k] + _FLOOR), axis=1)
        i1[k] = float(qx @ erow + w @ lw - np.sum(c * np.log2(c + _FLOOR)))
    return i1, i2


def objective(py_stack, pz_stack, q, lam: float) -> float:
    """min_s I(U;Z, s) + lam * min_s I(X;Y|U, s), in bits per block."""
    i1, i2 = objective_terms(py_stack, pz_stack, q)
    return float(i2.min() + lam * i1.min())


def gradient(py_stack, pz_stack, q, lam: float, s1: int, s2: int) -> np.ndarray:
    """Ascent direction at q; s1, s2 are the active minimizing states."""
    w = q.sum(axis=1)
    lw = np.log2(w + _FLOOR)
    pz = pz_stack[s2]
    m = q @ pz
    pzm = m.sum(axis=0)
    gz = np.log2((m + _FLOOR) / (pzm[None, :] + _FLOOR)) @ pz.T - lw[:, None]
    py = py_stack[s1]
    c = q @ py
    erow = np.sum(py * np.log2(py + _FLOOR), axis=1)
    gy = erow[None, :] - np.log2(c + _FLOOR) @ py.T + lw[:, None]
    return gz + lam * gy


def ascend(py_stack, pz_stack, q0, lam: float, max_iters: int, step_init: float, min_step: float):
    """Projected gradient ascent with step halving on the joint simplex.

    Ties among minimizing states break to the lowest index (np.argmin).
    Returns (value, q, iterations, converged); converged means the line
    search exhausted its step budget, i.e. no ascent direction was left.
    """
    q = np.array(q0, dtype=np.float64)
    shape = q.shape
    i1, i2 = objective_terms(py_stack, pz_stack, q)
    best = float(i2.min() + lam * i1.min())
    step = step_init
    iters = 0
    converged = False
    while iters < max_iters:
        iters += 1
        g = gradient(py_stack, pz_stack, q, lam, int(np.argmin(i1)), int(np.argmin(i2)))
        accepted = False
        while step >= min_step:
            cand = project_simplex((q + step * g).ravel()).reshape(shape)
            c1, c2 = objective_terms(py_stack, pz_stack, cand)
            val = float(c2.min() + lam * c1.min())
            if val > best + 1e-15:
                q, i1, i2, best = cand, c1, c2, val
                step = min(step * 2.0, _STEP_CAP)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
    return best, q, iters, converged
