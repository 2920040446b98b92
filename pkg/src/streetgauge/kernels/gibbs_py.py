"""Pure-Python collapsed-Gibbs sweep, arithmetic-identical to the C kernel.

The sampler walks tokens in order; for each it removes the current
assignment from the count tables, scores every topic with

    p[k] = (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta)

and draws the new topic by a linear scan of the unnormalized cumulative
sum against u * total.  Randomness comes from a splitmix64 stream so the
compiled and interpreted kernels can share one deterministic sequence.
"""

from __future__ import annotations

import numpy as np

SPLITMIX_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance the stream once; returns (new_state, mixed_output)."""
    state = (state + SPLITMIX_GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return state, z


def gibbs_sweep(
    doc_of: np.ndarray,
    word_of: np.ndarray,
    z: np.ndarray,
    n_dk: np.ndarray,
    n_kw: np.ndarray,
    n_k: np.ndarray,
    alpha: float,
    beta: float,
    rng_state: int,
) -> int:
    """One full sweep over every token; counts and z update in place.

    Returns the advanced RNG state.
    """
    n_topics = n_dk.shape[1]
    vocab = n_kw.shape[1]
    vbeta = vocab * beta

    # Work on plain Python lists: native int/float arithmetic keeps the
    # sweep tolerable in speed and matches C double semantics exactly.
    docs = doc_of.tolist()
    words = word_of.tolist()
    assign = z.tolist()
    ndk = n_dk.tolist()
    nkw = n_kw.tolist()
    nk = n_k.tolist()
    p = [0.0] * n_topics
    state = rng_state & _MASK

    for t in range(len(assign)):
        d = docs[t]
        w = words[t]
        k = assign[t]
        ndk_d = ndk[d]
        ndk_d[k] -= 1
        nkw[k][w] -= 1
        nk[k] -= 1

        total = 0.0
        for j in range(n_topics):
            pj = (ndk_d[j] + alpha) * (nkw[j][w] + beta) / (nk[j] + vbeta)
            p[j] = pj
            total += pj

        state = (state + SPLITMIX_GOLDEN) & _MASK
        mixed = state
        mixed = ((mixed ^ (mixed >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        mixed = ((mixed ^ (mixed >> 27)) * 0x94D049BB133111EB) & _MASK
        mixed ^= mixed >> 31
        u = (mixed >> 11) * _INV_2_53 * total

        acc = 0.0
        new_k = n_topics - 1
        for j in range(n_topics):
            acc += p[j]
            if u < acc:
                new_k = j
                break

        assign[t] = new_k
        ndk_d[new_k] += 1
        nkw[new_k][w] += 1
        nk[new_k] += 1

    z[:] = assign
    n_dk[:] = ndk
    n_kw[:] = nkw
    n_k[:] = nk
    return state
