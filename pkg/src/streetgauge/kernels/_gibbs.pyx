# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled collapsed-Gibbs sweep.

Mirrors streetgauge.kernels.gibbs_py operation for operation: same
splitmix64 stream, same score formula, same linear-scan draw, so both
kernels emit bit-identical assignments and counts.
"""

from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc


cdef inline uint64_t _mix(uint64_t z) nogil:
    z ^= z >> 30
    z *= <uint64_t>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z *= <uint64_t>0x94D049BB133111EB
    z ^= z >> 31
    return z


def gibbs_sweep(
    int32_t[::1] doc_of,
    int32_t[::1] word_of,
    int32_t[::1] z,
    int64_t[:, ::1] n_dk,
    int64_t[:, ::1] n_kw,
    int64_t[::1] n_k,
    double alpha,
    double beta,
    rng_state,
):
    """One full sweep over every token; counts and z update in place.

    Returns the advanced RNG state.
    """
    cdef Py_ssize_t n_tokens = z.shape[0]
    cdef Py_ssize_t n_topics = n_dk.shape[1]
    cdef Py_ssize_t vocab = n_kw.shape[1]
    cdef double vbeta = vocab * beta
    cdef uint64_t state = <uint64_t>(rng_state & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t golden = <uint64_t>0x9E3779B97F4A7C15
    cdef double inv_2_53 = 1.0 / 9007199254740992.0

    cdef double* p = <double*>malloc(n_topics * sizeof(double))
    if p == NULL:
        raise MemoryError("could not allocate topic score buffer")

    cdef Py_ssize_t t, j
    cdef int32_t d, w, k, new_k
    cdef double pj, total, u, acc

    try:
        with nogil:
            for t in range(n_tokens):
                d = doc_of[t]
                w = word_of[t]
                k = z[t]
                n_dk[d, k] -= 1
                n_kw[k, w] -= 1
                n_k[k] -= 1

                total = 0.0
                for j in range(n_topics):
                    pj = (n_dk[d, j] + alpha) * (n_kw[j, w] + beta) / (n_k[j] + vbeta)
                    p[j] = pj
                    total += pj

                state += golden
                u = <double>(_mix(state) >> 11) * inv_2_53 * total

                acc = 0.0
                new_k = <int32_t>(n_topics - 1)
                for j in range(n_topics):
                    acc += p[j]
                    if u < acc:
                        new_k = <int32_t>j
                        break

                z[t] = new_k
                n_dk[d, new_k] += 1
                n_kw[new_k, w] += 1
                n_k[new_k] += 1
    finally:
        free(p)

    return int(state)
