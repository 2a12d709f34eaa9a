"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--radius 8] [--kappa 10] [--repeat 3]

Each kernel runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` times; the best wall time is reported.  Outputs of both
backends are compared before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from brwscenery import _kernels
from brwscenery.lattice import Box, generate_scenery
from brwscenery.observations import coverage_source
from brwscenery.reconstruct import phase1_short_words


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _same(a, b) -> bool:
    if isinstance(a, frozenset):
        return a == b
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=int, default=8)
    ap.add_argument("--kappa", type=int, default=10)
    ap.add_argument("--steps", type=int, default=5, help="path length in steps")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sc = generate_scenery(Box.centered(2, args.radius), args.kappa, args.seed)
    flat = sc.colors.ravel().astype(np.int64)
    nbr = _kernels.neighbor_table(sc.box.shape)
    starts = np.arange(len(flat))
    rng = np.random.default_rng(args.seed)
    words = rng.integers(0, args.kappa, size=(2000, args.steps + 1))
    visits = rng.integers(-1, len(flat), size=1_000_000)

    cases = {
        "enumerate_paths": lambda: _kernels.enumerate_paths(flat, nbr, starts, args.steps, args.kappa),
        "bridge_statuses": lambda: _kernels.bridge_statuses(flat, nbr, args.steps, args.kappa),
        "reach_sets": lambda: _kernels.reach_sets(flat, nbr, words),
        "count_visits": lambda: _kernels.count_visits(visits, len(flat)),
        "phase1 (L=3)": lambda: phase1_short_words(coverage_source(sc, sc.box, 9), 3).words,
    }
    if not _kernels.HAVE_NUMBA:
        print("numba not available; nothing to compare")
        return
    print(f"window K({args.radius}) ({len(flat)} sites), kappa={args.kappa}, steps={args.steps}")
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  agree")
    for name, fn in cases.items():
        _kernels.set_backend("numba")
        ref = fn()
        t_nb = _best(fn, args.repeat)
        _kernels.set_backend("numpy")
        alt = fn()
        t_np = _best(fn, args.repeat)
        print(f"{name:<18}{t_nb:>12.4f}{t_np:>12.4f}{t_np / max(t_nb, 1e-9):>10.1f}  {_same(ref, alt)}")
    _kernels.set_backend("numba")


if __name__ == "__main__":
    main()
