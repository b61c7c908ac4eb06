# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batch cosine/retrieval and the Monte Carlo inner loop.

Semantics are mirrored by the pure-numpy fallback in ``pyfallback.py``.
Contracts kept here:

* float32 payloads, float64 accumulation, sequential per-row reduction
  (results do not depend on how callers might shard rows);
* argmax ties resolve to the lowest gallery index (strict-greater scan);
* Monte Carlo draws come from per-partition streams derived from
  (seed, partition), so estimates never depend on scheduling.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

BACKEND = "compiled"

ctypedef unsigned long long u64


# ---------------------------------------------------------------------------
# deterministic RNG: splitmix64-expanded xoshiro256++ per (seed, partition)
# ---------------------------------------------------------------------------

cdef inline u64 _splitmix(u64* state) noexcept nogil:
    cdef u64 z
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline u64 _rotl(u64 x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef struct Xoshiro:
    u64 s0
    u64 s1
    u64 s2
    u64 s3


cdef inline void _stream_init(Xoshiro* st, u64 seed, u64 partition) noexcept nogil:
    cdef u64 sm = seed
    cdef u64 mixed = _splitmix(&sm) ^ (partition * <u64>0xD1B54A32D192ED03)
    sm = mixed
    st.s0 = _splitmix(&sm)
    st.s1 = _splitmix(&sm)
    st.s2 = _splitmix(&sm)
    st.s3 = _splitmix(&sm)
    if st.s0 == 0 and st.s1 == 0 and st.s2 == 0 and st.s3 == 0:
        st.s0 = 1


cdef inline u64 _next(Xoshiro* st) noexcept nogil:
    cdef u64 result = _rotl(st.s0 + st.s3, 23) + st.s0
    cdef u64 t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = _rotl(st.s3, 45)
    return result


cdef inline double _uniform(Xoshiro* st) noexcept nogil:
    # (0, 1): 53 mantissa bits, offset half an ulp so log() is always finite
    return ((_next(st) >> 11) + 0.5) * (1.0 / 9007199254740992.0)


# ---------------------------------------------------------------------------
# ziggurat sampler; layer tables are built in Python (see tables.py)
# ---------------------------------------------------------------------------

cdef inline double _normal(Xoshiro* st, const double* xt, const double* ft) noexcept nogil:
    cdef u64 bits
    cdef int idx
    cdef double sign, u, x, u2, y
    while True:
        bits = _next(st)
        idx = <int>(bits & 255)
        sign = -1.0 if (bits >> 8) & 1 else 1.0
        u = ((bits >> 11) + 0.5) * (1.0 / 9007199254740992.0)
        x = u * xt[idx]
        if x < xt[idx + 1]:
            return sign * x
        if idx == 0:
            # Marsaglia tail beyond R
            while True:
                x = -log(_uniform(st)) / xt[1]
                y = -log(_uniform(st))
                if y + y >= x * x:
                    return sign * (xt[1] + x)
        else:
            u2 = _uniform(st)
            y = ft[idx] + u2 * (ft[idx + 1] - ft[idx])
            if y < exp(-0.5 * x * x):
                return sign * x


def normal_fill(u64 seed, u64 partition, Py_ssize_t n,
                cnp.ndarray[cnp.float64_t, ndim=1] xt,
                cnp.ndarray[cnp.float64_t, ndim=1] ft):
    """Draw n standard normals from the (seed, partition) stream."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double* op = <double*>out.data
    cdef const double* xp = <const double*>xt.data
    cdef const double* fp = <const double*>ft.data
    cdef Xoshiro st
    cdef Py_ssize_t i
    _stream_init(&st, seed, partition)
    with nogil:
        for i in range(n):
            op[i] = _normal(&st, xp, fp)
    return out


def uniform_fill(u64 seed, u64 partition, Py_ssize_t n):
    """Draw n uniforms in (0, 1) from the (seed, partition) stream."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double* op = <double*>out.data
    cdef Xoshiro st
    cdef Py_ssize_t i
    _stream_init(&st, seed, partition)
    with nogil:
        for i in range(n):
            op[i] = _uniform(&st)
    return out


# ---------------------------------------------------------------------------
# Monte Carlo pass for the contrastive objective
# ---------------------------------------------------------------------------

def mc_pair_pass(u64 seed, u64 partition, Py_ssize_t trials,
                 Py_ssize_t d, Py_ssize_t k, Py_ssize_t b,
                 bint rademacher,
                 cnp.ndarray[cnp.float64_t, ndim=1] xt,
                 cnp.ndarray[cnp.float64_t, ndim=1] ft):
    """Per-trial objective values for the ideal and truncated encoders.

    One latent draw per trial is shared by both encoders, so k=0 reproduces
    the ideal values bit for bit. Returns (ideal, truncated) float64 arrays.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_i = np.empty(trials, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_t = np.empty(trials, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zbuf = np.empty(d, dtype=np.float64)
    cdef double* oi = <double*>out_i.data
    cdef double* ot = <double*>out_t.data
    cdef double* z = <double*>zbuf.data
    cdef const double* xp = <const double*>xt.data
    cdef const double* fp = <const double*>ft.data
    cdef Xoshiro st
    cdef Py_ssize_t t, i, j, cut
    cdef double g, nz, nz_tail, ng, ng_tail, dot, dot_tail
    cdef double cos_i, cos_t, acc_i, acc_t, e1
    cdef u64 bits
    cdef int left

    _stream_init(&st, seed, partition)
    cut = d - k
    e1 = exp(1.0)
    with nogil:
        for t in range(trials):
            nz = 0.0
            nz_tail = 0.0
            if rademacher:
                left = 0
                for i in range(d):
                    if left == 0:
                        bits = _next(&st)
                        left = 64
                    g = 1.0 if bits & 1 else -1.0
                    bits >>= 1
                    left -= 1
                    z[i] = g
                    nz += 1.0
                    if i >= cut:
                        nz_tail += 1.0
            else:
                for i in range(d):
                    g = _normal(&st, xp, fp)
                    z[i] = g
                    nz += g * g
                    if i >= cut:
                        nz_tail += g * g
            acc_i = 0.0
            acc_t = 0.0
            for j in range(b):
                ng = 0.0
                ng_tail = 0.0
                dot = 0.0
                dot_tail = 0.0
                if rademacher:
                    left = 0
                    for i in range(d):
                        if left == 0:
                            bits = _next(&st)
                            left = 64
                        g = 1.0 if bits & 1 else -1.0
                        bits >>= 1
                        left -= 1
                        ng += 1.0
                        dot += g * z[i]
                        if i >= cut:
                            ng_tail += 1.0
                            dot_tail += g * z[i]
                else:
                    for i in range(d):
                        g = _normal(&st, xp, fp)
                        ng += g * g
                        dot += g * z[i]
                        if i >= cut:
                            ng_tail += g * g
                            dot_tail += g * z[i]
                cos_i = dot / (sqrt(nz) * sqrt(ng))
                cos_t = (dot - dot_tail) / (sqrt(nz - nz_tail) * sqrt(ng - ng_tail))
                acc_i += exp(cos_i)
                acc_t += exp(cos_t)
            oi[t] = e1 / (e1 + acc_i)
            ot[t] = e1 / (e1 + acc_t)
    return out_i, out_t


# ---------------------------------------------------------------------------
# batch cosine / retrieval
# ---------------------------------------------------------------------------

def unit_rows(cnp.ndarray[cnp.float32_t, ndim=2] x):
    """L2-normalize rows into float64; returns (matrix, index of first zero row or -1)."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, d), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double s, v
    cdef Py_ssize_t bad = -1
    for i in range(n):
        s = 0.0
        for j in range(d):
            v = <double>x[i, j]
            out[i, j] = v
            s += v * v
        if s == 0.0:
            if bad < 0:
                bad = i
            continue
        s = sqrt(s)
        for j in range(d):
            out[i, j] /= s
    return out, bad


def cosine_kernel(cnp.ndarray[cnp.float64_t, ndim=2] qn,
                  cnp.ndarray[cnp.float64_t, ndim=2] gn):
    """Dot products of pre-normalized rows, clipped to [-1, 1]."""
    cdef Py_ssize_t nq = qn.shape[0], ng = gn.shape[0], d = qn.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nq, ng), dtype=np.float64)
    cdef Py_ssize_t i, j, l
    cdef double s
    with nogil:
        for i in range(nq):
            for j in range(ng):
                s = 0.0
                for l in range(d):
                    s += qn[i, l] * gn[j, l]
                if s > 1.0:
                    s = 1.0
                elif s < -1.0:
                    s = -1.0
                out[i, j] = s
    return out


def retrieve_kernel(cnp.ndarray[cnp.float64_t, ndim=2] qn,
                    cnp.ndarray[cnp.float64_t, ndim=2] gn):
    """Index of the highest-cosine gallery row per query; ties keep the lowest index."""
    cdef Py_ssize_t nq = qn.shape[0], ng = gn.shape[0], d = qn.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(nq, dtype=np.int64)
    cdef Py_ssize_t i, j, l
    cdef double s, best
    cdef Py_ssize_t best_j
    with nogil:
        for i in range(nq):
            best = -2.0
            best_j = 0
            for j in range(ng):
                s = 0.0
                for l in range(d):
                    s += qn[i, l] * gn[j, l]
                if s > best:
                    best = s
                    best_j = j
            out[i] = best_j
    return out
