"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 3] [--n-svr 2000]

Each kernel is run once untimed to trigger compilation, then timed
``--repeat`` times; the best time is reported.  Results of the two paths are
compared so a speedup never hides a disagreement.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from prodsearch import _accel
from prodsearch.embeddings import SkipgramConfig, train_skipgram
from prodsearch.svr import SvrConfig, smo_solve
from prodsearch.text import _encode, _encode_matrix, _levenshtein_rows_loop, _levenshtein_rows_numpy


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench_levenshtein(rng, repeat):
    alphabet = np.array(list("abcdefghijklmnopqrstuvwxyz"))
    words = ["".join(rng.choice(alphabet, rng.integers(3, 12))) for _ in range(20000)]
    mat, lengths = _encode_matrix(words)
    query = _encode("bracketz")
    t_jit, a = best_of(lambda: _levenshtein_rows_loop(query, mat, lengths, 2), repeat)
    t_np, b = best_of(lambda: _levenshtein_rows_numpy(query, mat, lengths, 2), repeat)
    return "levenshtein (20k words)", t_jit, t_np, bool(np.array_equal(a, b))


def bench_smo(rng, repeat, n):
    X = rng.normal(size=(n, 6))
    y = np.clip(2.0 + 0.4 * X[:, 0] - 0.3 * X[:, 1] + 0.2 * rng.normal(size=n), 1, 3)
    cfg = SvrConfig()
    t_jit, a = best_of(lambda: smo_solve(X, y, cfg, jit=True), repeat)
    t_np, b = best_of(lambda: smo_solve(X, y, cfg, jit=False), repeat)
    return f"smo (n={n}, d=6)", t_jit, t_np, bool(np.allclose(a[0], b[0], atol=1e-9))


def bench_skipgram(rng, repeat):
    vocab = [f"w{i}" for i in range(500)]
    ranks = np.minimum(rng.zipf(1.3, size=60000), 500) - 1
    tokens = [vocab[r] for r in ranks]
    sents = [tokens[i : i + 20] for i in range(0, len(tokens), 20)]
    cfg = SkipgramConfig(dimension=50, epochs=1, min_count=1, seed=1)
    t_jit, a = best_of(lambda: train_skipgram(sents, cfg, jit=True), repeat)
    t_np, b = best_of(lambda: train_skipgram(sents, cfg, jit=False), 1)
    return "skipgram (60k tokens, dim 50, 1 epoch)", t_jit, t_np, bool(np.allclose(a.vectors, b.vectors, atol=1e-9))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n-svr", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not _accel.HAS_NUMBA:
        print("numba unavailable (or PRODSEARCH_DISABLE_JIT set); nothing to compare")
        return 0
    rng = np.random.default_rng(args.seed)
    rows = [bench_levenshtein(rng, args.repeat), bench_smo(rng, args.repeat, args.n_svr), bench_skipgram(rng, args.repeat)]
    print(f"{'kernel':42s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  agree")
    for name, tj, tn, ok in rows:
        print(f"{name:42s} {tj:10.4f} {tn:10.4f} {tn / tj:8.1f}  {ok}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
