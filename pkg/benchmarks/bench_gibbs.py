"""Benchmark the compiled Gibbs sweep kernel against the pure-Python one.

Runs identical sweeps on a synthetic corpus with both backends, checks
that the results agree bit for bit, and prints tokens/second for each.

    python benchmarks/bench_gibbs.py [--tokens 200000] [--k 7] [--vocab 500]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from streetgauge.kernels import HAVE_COMPILED, get_backend


def synth_corpus(n_tokens: int, n_docs: int, vocab: int, k: int, seed: int):
    rng = np.random.default_rng(seed)
    doc_of = rng.integers(0, n_docs, size=n_tokens, dtype=np.int32)
    word_of = rng.integers(0, vocab, size=n_tokens, dtype=np.int32)
    z = rng.integers(0, k, size=n_tokens, dtype=np.int32)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, vocab), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kw, (z, word_of), 1)
    np.add.at(n_k, z, 1)
    return doc_of, word_of, z, n_dk, n_kw, n_k


def run(backend_name: str, sweeps: int, args) -> tuple[float, np.ndarray, int]:
    backend = get_backend(backend_name)
    doc_of, word_of, z, n_dk, n_kw, n_k = synth_corpus(
        args.tokens, args.docs, args.vocab, args.k, args.seed
    )
    state = args.seed
    start = time.perf_counter()
    for _ in range(sweeps):
        state = backend.gibbs_sweep(
            doc_of, word_of, z, n_dk, n_kw, n_k, args.alpha, args.beta, state
        )
    elapsed = time.perf_counter() - start
    return elapsed, z, state


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tokens", type=int, default=200_000)
    parser.add_argument("--docs", type=int, default=200)
    parser.add_argument("--vocab", type=int, default=500)
    parser.add_argument("--k", type=int, default=7)
    parser.add_argument("--alpha", type=float, default=50 / 7)
    parser.add_argument("--beta", type=float, default=0.01)
    parser.add_argument("--sweeps", type=int, default=3)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    py_time, py_z, py_state = run("python", args.sweeps, args)
    total = args.tokens * args.sweeps
    print(f"python   backend: {py_time:8.3f}s  ({total / py_time:12,.0f} tokens/s)")

    if not HAVE_COMPILED:
        print("compiled backend: not built (pip install -e . compiles it)")
        return

    c_time, c_z, c_state = run("compiled", args.sweeps, args)
    print(f"compiled backend: {c_time:8.3f}s  ({total / c_time:12,.0f} tokens/s)")
    print(f"speedup: {py_time / c_time:.1f}x")

    same = np.array_equal(py_z, c_z) and py_state == c_state
    print(f"bit-identical assignments and final rng state: {same}")
    if not same:
        raise SystemExit("backend mismatch — compiled and python kernels disagree")


if __name__ == "__main__":
    main()
