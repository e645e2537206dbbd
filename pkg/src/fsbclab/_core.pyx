# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled backend for the support-function ascent.

Mirrors fsbclab._purepy: project_simplex, objective_terms, objective,
gradient, ascend, with identical floors, tie-breaking, and line-search
rules.  The ascent loop runs without the GIL so sweeps parallelize
under a thread pool.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log2
from libc.stdlib cimport qsort

cnp.import_array()

COMPILED = True

cdef double FLOOR = 1e-300
cdef double STEP_CAP = 4.0


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double x = (<const double*> a)[0]
    cdef double y = (<const double*> b)[0]
    if x < y:
        return 1
    if x > y:
        return -1
    return 0


cdef void _project(double[::1] v, double[::1] buf) noexcept nogil:
    """In-place Euclidean projection onto the simplex; buf is scratch."""
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i, rho = 0
    cdef double css = 0.0, css_at_rho = 0.0, theta
    for i in range(n):
        buf[i] = v[i]
    qsort(&buf[0], n, sizeof(double), _cmp_desc)
    for i in range(n):
        css += buf[i]
        if buf[i] + (1.0 - css) / (i + 1.0) > 0.0:
            rho = i
            css_at_rho = css
    theta = (1.0 - css_at_rho) / (rho + 1.0)
    for i in range(n):
        v[i] = v[i] + theta
        if v[i] < 0.0:
            v[i] = 0.0


cdef void _terms(
    const double[:, :, ::1] py,
    const double[:, :, ::1] pz,
    const double[:, ::1] q,
    double[::1] w,
    double[::1] lw,
    double[::1] qx,
    double[:, ::1] m,
    double[::1] pzm,
    double[:, ::1] c,
    double[::1] i1,
    double[::1] i2,
) noexcept nogil:
    cdef Py_ssize_t s = py.shape[0], nx = py.shape[1], ny = py.shape[2]
    cdef Py_ssize_t nz = pz.shape[2], nu = q.shape[0]
    cdef Py_ssize_t k, u, x, y, z
    cdef double acc, t, e
    for u in range(nu):
        acc = 0.0
        for x in range(nx):
            acc += q[u, x]
        w[u] = acc
        lw[u] = log2(acc + FLOOR)
    for x in range(nx):
        acc = 0.0
        for u in range(nu):
            acc += q[u, x]
        qx[x] = acc
    for k in range(s):
        for u in range(nu):
            for z in range(nz):
                acc = 0.0
                for x in range(nx):
                    acc += q[u, x] * pz[k, x, z]
                m[u, z] = acc
        for z in range(nz):
            acc = 0.0
            for u in range(nu):
                acc += m[u, z]
            pzm[z] = acc
        acc = 0.0
        for u in range(nu):
            for z in range(nz):
                t = m[u, z]
                acc += t * (log2(t + FLOOR) - log2(w[u] * pzm[z] + FLOOR))
        i2[k] = acc
        for u in range(nu):
            for y in range(ny):
                acc = 0.0
                for x in range(nx):
                    acc += q[u, x] * py[k, x, y]
                c[u, y] = acc
        e = 0.0
        for x in range(nx):
            acc = 0.0
            for y in range(ny):
                t = py[k, x, y]
                acc += t * log2(t + FLOOR)
            e += qx[x] * acc
        for u in range(nu):
            e += w[u] * lw[u]
        for u in range(nu):
            for y in range(ny):
                t = c[u, y]
                e -= t * log2(t + FLOOR)
        i1[k] = e


cdef void _grad(
    const double[:, :, ::1] py,
    const double[:, :, ::1] pz,
    const double[:, ::1] q,
    double lam,
    Py_ssize_t s1,
    Py_ssize_t s2,
    double[::1] w,
    double[::1] lw,
    double[:, ::1] m,
    double[::1] pzm,
    double[:, ::1] c,
    double[::1] erow,
    double[:, ::1] g,
) noexcept nogil:
    cdef Py_ssize_t nx = py.shape[1], ny = py.shape[2], nz = pz.shape[2]
    cdef Py_ssize_t nu = q.shape[0]
    cdef Py_ssize_t u, x, y, z
    cdef double acc, t, gz, gy
    for u in range(nu):
        acc = 0.0
        for x in range(nx):
            acc += q[u, x]
        w[u] = acc
        lw[u] = log2(acc + FLOOR)
    for u in range(nu):
        for z in range(nz):
            acc = 0.0
            for x in range(nx):
                acc += q[u, x] * pz[s2, x, z]
            m[u, z] = acc
    for z in range(nz):
        acc = 0.0
        for u in range(nu):
            acc += m[u, z]
        pzm[z] = acc
    for u in range(nu):
        for y in range(ny):
            acc = 0.0
            for x in range(nx):
                acc += q[u, x] * py[s1, x, y]
            c[u, y] = acc
    for x in range(nx):
        acc = 0.0
        for y in range(ny):
            t = py[s1, x, y]
            acc += t * log2(t + FLOOR)
        erow[x] = acc
    for u in range(nu):
        for x in range(nx):
            gz = 0.0
            for z in range(nz):
                gz += log2((m[u, z] + FLOOR) / (pzm[z] + FLOOR)) * pz[s2, x, z]
            gz -= lw[u]
            gy = erow[x] + lw[u]
            for y in range(ny):
                gy -= log2(c[u, y] + FLOOR) * py[s1, x, y]
            g[u, x] = gz + lam * gy


cdef Py_ssize_t _argmin(double[::1] v) noexcept nogil:
    cdef Py_ssize_t i, best = 0
    for i in range(1, v.shape[0]):
        if v[i] < v[best]:
            best = i
    return best


cdef double _minv(double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    cdef double out = v[0]
    for i in range(1, v.shape[0]):
        if v[i] < out:
            out = v[i]
    return out


def _as_stack(arr):
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out.ndim != 3:
        raise ValueError("law stack must be 3-d (S, NX, NO)")
    return out


def project_simplex(v):
    arr = np.array(v, dtype=np.float64).ravel()
    buf = np.empty_like(arr)
    _project(arr, buf)
    return arr


def objective_terms(py_stack, pz_stack, q):
    py = _as_stack(py_stack)
    pz = _as_stack(pz_stack)
    qq = np.ascontiguousarray(q, dtype=np.float64)
    s, nu = py.shape[0], qq.shape[0]
    ny, nz = py.shape[2], pz.shape[2]
    w = np.empty(nu)
    lw = np.empty(nu)
    qx = np.empty(qq.shape[1])
    m = np.empty((nu, nz))
    pzm = np.empty(nz)
    c = np.empty((nu, ny))
    i1 = np.empty(s)
    i2 = np.empty(s)
    _terms(py, pz, qq, w, lw, qx, m, pzm, c, i1, i2)
    return i1, i2


def objective(py_stack, pz_stack, q, double lam):
    i1, i2 = objective_terms(py_stack, pz_stack, q)
    return float(i2.min() + lam * i1.min())


def gradient(py_stack, pz_stack, q, double lam, Py_ssize_t s1, Py_ssize_t s2):
    py = _as_stack(py_stack)
    pz = _as_stack(pz_stack)
    qq = np.ascontiguousarray(q, dtype=np.float64)
    nu, nx = qq.shape[0], qq.shape[1]
    ny, nz = py.shape[2], pz.shape[2]
    w = np.empty(nu)
    lw = np.empty(nu)
    m = np.empty((nu, nz))
    pzm = np.empty(nz)
    c = np.empty((nu, ny))
    erow = np.empty(nx)
    g = np.empty((nu, nx))
    _grad(py, pz, qq, lam, s1, s2, w, lw, m, pzm, c, erow, g)
    return g


def ascend(py_stack, pz_stack, q0, double lam, int max_iters, double step_init, double min_step):
    """Projected gradient ascent; same contract as the numpy backend."""
    py = _as_stack(py_stack)
    pz = _as_stack(pz_stack)
    q_arr = np.array(q0, dtype=np.float64, order="C")
    if q_arr.ndim != 2:
        raise ValueError("q0 must be 2-d (NU, NX)")
    cdef Py_ssize_t s = py.shape[0]
    cdef Py_ssize_t nu = q_arr.shape[0], nx = q_arr.shape[1]
    cdef Py_ssize_t ny = py.shape[2], nz = pz.shape[2]

    cand_arr = np.empty((nu, nx))
    cdef double[:, :, ::1] pyv = py
    cdef double[:, :, ::1] pzv = pz
    cdef double[:, ::1] q = q_arr
    cdef double[::1] q_flat = q_arr.ravel()
    cdef double[:, ::1] cand = cand_arr
    cdef double[::1] cand_flat = cand_arr.ravel()
    cdef double[::1] sortbuf = np.empty(nu * nx)
    cdef double[::1] w = np.empty(nu)
    cdef double[::1] lw = np.empty(nu)
    cdef double[::1] qx = np.empty(nx)
    cdef double[:, ::1] m = np.empty((nu, nz))
    cdef double[::1] pzm = np.empty(nz)
    cdef double[:, ::1] c = np.empty((nu, ny))
    cdef double[::1] erow = np.empty(nx)
    cdef double[:, ::1] g = np.empty((nu, nx))
    cdef double[::1] i1 = np.empty(s)
    cdef double[::1] i2 = np.empty(s)
    cdef double[::1] c1 = np.empty(s)
    cdef double[::1] c2 = np.empty(s)

    cdef double best, step = step_init, val
    cdef Py_ssize_t iters = 0, j, flat_n = nu * nx
    cdef bint converged = False, accepted
    cdef Py_ssize_t s1, s2, k

    with nogil:
        _terms(pyv, pzv, q, w, lw, qx, m, pzm, c, i1, i2)
        best = _minv(i2) + lam * _minv(i1)
        while iters < max_iters:
            iters += 1
            s1 = _argmin(i1)
            s2 = _argmin(i2)
            _grad(pyv, pzv, q, lam, s1, s2, w, lw, m, pzm, c, erow, g)
            accepted = False
            while step >= min_step:
                for j in range(flat_n):
                    cand_flat[j] = q_flat[j] + step * g[j // nx, j % nx]
                _project(cand_flat, sortbuf)
                _terms(pyv, pzv, cand, w, lw, qx, m, pzm, c, c1, c2)
                val = _minv(c2) + lam * _minv(c1)
                if val > best + 1e-15:
                    for j in range(flat_n):
                        q_flat[j] = cand_flat[j]
                    for k in range(s):
                        i1[k] = c1[k]
                        i2[k] = c2[k]
                    best = val
                    step = step * 2.0
                    if step > STEP_CAP:
                        step = STEP_CAP
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                converged = True
                break

    return best, q_arr, int(iters), bool(converged)
