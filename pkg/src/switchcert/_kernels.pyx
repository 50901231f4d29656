# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Mirrors :mod:`switchcert._fallback` function by function; the two must agree
to rounding on every input (tests/test_backends.py).
"""

from libc.math cimport sqrt, log, fabs, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cdef enum:
    NORM_ONE = 0
    NORM_INF = 1
    NORM_SPECTRAL = 2
    NORM_FROBENIUS = 3
    NORM_WEIGHTED = 4


cdef struct Tree:
    int M
    int n
    int h
    int norm_code
    double log_eps
    const double* mats          # M * n * n, row-major
    const double* lt            # n * n
    const double* lt_inv        # n * n
    const long* rank_table      # M * (h+1) * (h+1)
    double* best                # per composition
    int* witness                # per composition, h entries (0-based modes)
    double* per_seq             # M**h entries or NULL
    double* prods               # (h+1) * n * n
    double* work                # 3 * n * n
    int* seq                    # h
    int* counts                 # M


cdef inline void _matmul(const double* a, const double* b, double* out, int n) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc = acc + a[i * n + k] * b[k * n + j]
            out[i * n + j] = acc


cdef double _sym_max_eig(double* s, int n) noexcept nogil:
    # cyclic Jacobi on a symmetric n x n matrix, destroyed in place
    cdef int sweep, p, q, k
    cdef double off, tot, apq, theta, t, c, sn, skp, skq, best
    if n == 1:
        return s[0]
    for sweep in range(60):
        off = 0.0
        tot = 0.0
        for p in range(n):
            tot = tot + s[p * n + p] * s[p * n + p]
            for q in range(p + 1, n):
                off = off + s[p * n + q] * s[p * n + q]
        tot = tot + 2.0 * off
        if off <= 1e-28 * tot:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = s[p * n + q]
                if apq == 0.0:
                    continue
                theta = (s[q * n + q] - s[p * n + p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                elif theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                sn = t * c
                for k in range(n):
                    skp = s[k * n + p]
                    skq = s[k * n + q]
                    s[k * n + p] = c * skp - sn * skq
                    s[k * n + q] = sn * skp + c * skq
                for k in range(n):
                    skp = s[p * n + k]
                    skq = s[q * n + k]
                    s[p * n + k] = c * skp - sn * skq
                    s[q * n + k] = sn * skp + c * skq
    best = s[0]
    for p in range(1, n):
        if s[p * n + p] > best:
            best = s[p * n + p]
    return best


cdef double _spectral(const double* g, int n, double* work) noexcept nogil:
    # work needs 2 * n * n doubles
    cdef int i, j, k
    cdef double scale = 0.0, acc, lam
    cdef double* sc = work
    cdef double* s = work + n * n
    for i in range(n * n):
        if fabs(g[i]) > scale:
            scale = fabs(g[i])
    if scale == 0.0:
        return 0.0
    for i in range(n * n):
        sc[i] = g[i] / scale
    for i in range(n):
        for j in range(i, n):
            acc = 0.0
            for k in range(n):
                acc = acc + sc[k * n + i] * sc[k * n + j]
            s[i * n + j] = acc
            s[j * n + i] = acc
    lam = _sym_max_eig(s, n)
    if lam < 0.0:
        lam = 0.0
    return scale * sqrt(lam)


cdef double _norm(Tree* t, const double* g) noexcept nogil:
    cdef int n = t.n
    cdef int i, j
    cdef double acc, best, scale
    if t.norm_code == NORM_ONE:
        best = 0.0
        for j in range(n):
            acc = 0.0
            for i in range(n):
                acc = acc + fabs(g[i * n + j])
            if acc > best:
                best = acc
        return best
    if t.norm_code == NORM_INF:
        best = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + fabs(g[i * n + j])
            if acc > best:
                best = acc
        return best
    if t.norm_code == NORM_FROBENIUS:
        scale = 0.0
        for i in range(n * n):
            if fabs(g[i]) > scale:
                scale = fabs(g[i])
        if scale == 0.0:
            return 0.0
        acc = 0.0
        for i in range(n * n):
            acc = acc + (g[i] / scale) * (g[i] / scale)
        return scale * sqrt(acc)
    if t.norm_code == NORM_WEIGHTED:
        _matmul(t.lt, g, t.work, n)
        _matmul(t.work, t.lt_inv, t.work + n * n, n)
        memcpy(t.work, t.work + n * n, n * n * sizeof(double))
        return _spectral(t.work, n, t.work + n * n)
    return _spectral(g, n, t.work)


cdef void _leaf(Tree* t, long idx) noexcept nogil:
    cdef int n = t.n
    cdef int h = t.h
    cdef int M = t.M
    cdef double nrm = _norm(t, t.prods + h * n * n)
    cdef double val
    cdef long rank = 0
    cdef int rem = h
    cdef int i
    if nrm > 0.0 and log(nrm) > t.log_eps:
        val = log(nrm)
    else:
        val = t.log_eps
    if t.per_seq != NULL:
        t.per_seq[idx] = val
    for i in range(M - 1):
        rank = rank + t.rank_table[(i * (h + 1) + rem) * (h + 1) + t.counts[i]]
        rem = rem - t.counts[i]
    if val > t.best[rank]:
        t.best[rank] = val
        for i in range(h):
            t.witness[rank * h + i] = t.seq[i]


cdef void _descend(Tree* t, int level, long idx) noexcept nogil:
    # prods[level] holds A_{seq[level-1]} ... A_{seq[0]}
    cdef int n = t.n
    cdef int s
    if level == t.h:
        _leaf(t, idx)
        return
    for s in range(t.M):
        t.seq[level] = s
        t.counts[s] += 1
        _matmul(t.mats + s * n * n, t.prods + level * n * n, t.prods + (level + 1) * n * n, n)
        _descend(t, level + 1, idx * t.M + s)
        t.counts[s] -= 1


def gamma_subtree(const double[:, :, ::1] mats, const long[::1] prefix, int h,
                  int norm_code, const double[:, ::1] lt, const double[:, ::1] lt_inv,
                  double log_eps, const long[:, :, ::1] rank_table,
                  double[::1] best, int[:, ::1] witness, double[::1] per_seq):
    """Depth-first sweep of the subtree of length-``h`` sequences below ``prefix``.

    ``best``/``witness`` are updated in place with a strict ``>`` so that the
    lexicographically first maximiser is kept. ``per_seq`` is either empty or
    of length ``M**h``, indexed by the base-M value of the sequence.
    """
    cdef Tree t
    cdef int M = mats.shape[0]
    cdef int n = mats.shape[1]
    cdef int d = prefix.shape[0]
    cdef int i, level
    cdef long idx = 0
    if d > h:
        raise ValueError("prefix longer than h")
    t.M = M
    t.n = n
    t.h = h
    t.norm_code = norm_code
    t.log_eps = log_eps
    t.mats = &mats[0, 0, 0]
    t.lt = &lt[0, 0]
    t.lt_inv = &lt_inv[0, 0]
    t.rank_table = &rank_table[0, 0, 0]
    t.best = &best[0]
    t.witness = &witness[0, 0]
    t.per_seq = &per_seq[0] if per_seq.shape[0] > 0 else NULL
    t.prods = <double*> malloc((h + 1) * n * n * sizeof(double))
    t.work = <double*> malloc(3 * n * n * sizeof(double))
    t.seq = <int*> malloc(h * sizeof(int))
    t.counts = <int*> malloc(M * sizeof(int))
    if t.prods == NULL or t.work == NULL or t.seq == NULL or t.counts == NULL:
        free(t.prods); free(t.work); free(t.seq); free(t.counts)
        raise MemoryError()
    try:
        with nogil:
            for i in range(M):
                t.counts[i] = 0
            for i in range(n * n):
                t.prods[i] = 0.0
            for i in range(n):
                t.prods[i * n + i] = 1.0
            for level in range(d):
                t.seq[level] = <int> prefix[level]
                t.counts[prefix[level]] += 1
                idx = idx * M + prefix[level]
                _matmul(t.mats + prefix[level] * n * n, t.prods + level * n * n,
                        t.prods + (level + 1) * n * n, n)
            _descend(&t, d, idx)
    finally:
        free(t.prods)
        free(t.work)
        free(t.seq)
        free(t.counts)


def markov_walk(const double[:, ::1] cum, const long[::1] last_pos, long start,
                const double[::1] u, long[::1] out):
    """Inverse-CDF walk: ``out[t+1]`` is the first column with ``cum[out[t], j] > u[t]``."""
    cdef Py_ssize_t T = out.shape[0]
    cdef Py_ssize_t S = cum.shape[1]
    cdef Py_ssize_t t, j
    cdef long state = start
    if T == 0:
        return
    with nogil:
        out[0] = state
        for t in range(T - 1):
            j = 0
            while j < S and cum[state, j] <= u[t]:
                j += 1
            if j > last_pos[state]:
                j = last_pos[state]
            state = j
            out[t + 1] = state


def simulate_lognorm(const double[:, :, ::1] mats, const long[::1] signal,
                     const double[::1] x0, double[::1] out):
    """``out[t] = ln ||x(t)||_2`` along ``x(t+1) = A[signal[t]] x(t)``; len(out) == len(signal) + 1."""
    cdef int n = mats.shape[1]
    cdef Py_ssize_t T = signal.shape[0]
    cdef Py_ssize_t t
    cdef int i, k
    cdef double offset = 0.0, nrm, acc
    cdef double* x = <double*> malloc(n * sizeof(double))
    cdef double* y = <double*> malloc(n * sizeof(double))
    if x == NULL or y == NULL:
        free(x); free(y)
        raise MemoryError()
    try:
        with nogil:
            nrm = 0.0
            for i in range(n):
                x[i] = x0[i]
                nrm = nrm + x[i] * x[i]
            nrm = sqrt(nrm)
            out[0] = log(nrm) if nrm > 0.0 else -INFINITY
            for t in range(T):
                for i in range(n):
                    acc = 0.0
                    for k in range(n):
                        acc = acc + mats[signal[t], i, k] * x[k]
                    y[i] = acc
                nrm = 0.0
                for i in range(n):
                    x[i] = y[i]
                    nrm = nrm + y[i] * y[i]
                nrm = sqrt(nrm)
                if nrm == 0.0:
                    out[t + 1] = -INFINITY
                    continue
                out[t + 1] = offset + log(nrm)
                if nrm > 1e100 or nrm < 1e-100:
                    for i in range(n):
                        x[i] = x[i] / nrm
                    offset = offset + log(nrm)
    finally:
        free(x)
        free(y)
