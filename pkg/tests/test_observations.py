from __future__ import annotations

import numpy as np
import pytest

from brwscenery import _kernels
from brwscenery.brw import SimLimits, simulate_brw
from brwscenery.errors import InvalidParameter, OutOfBounds
from brwscenery.lattice import Box, Scenery, generate_scenery
from brwscenery.observations import (CoverageSource, coverage_source, decode_code, encode_code,
                                     tree_source)


def _brute_strings(src: CoverageSource, length: int) -> set[str]:
    _, _, codes = _kernels.enumerate_paths(src.flat, src.nbr, np.arange(len(src.flat)), length - 1, src.kappa)
    return {decode_code(c, length, src.kappa) for c in codes}


def _brute_middles(src: CoverageSource, w1: str, w3: str, midlen: int) -> set[str]:
    n = len(w1) + midlen + len(w3)
    out = set()
    for s in _brute_strings(src, n):
        if s.startswith(w1) and s.endswith(w3):
            out.add(s[len(w1):len(w1) + midlen])
    return out


def test_completion_examples(grid17):
    src = coverage_source(grid17, grid17.box, 15)
    assert src.middle_completions("43912", "61777", 5) == {"17847"}
    many = src.middle_completions("43912", "47617", 5)
    assert {"11878", "13578", "17847", "11825"} <= many
    assert src.occurs_before("439121784761777")


def test_middle_completions_brute_force():
    sc = generate_scenery(Box((0, 0), (4, 3)), 3, 5)
    src = coverage_source(sc, sc.box, 7)
    rng = np.random.default_rng(1)
    for _ in range(30):
        w1 = "".join(str(v) for v in rng.integers(0, 3, 2))
        w3 = "".join(str(v) for v in rng.integers(0, 3, 2))
        for midlen in (0, 1, 2, 3):
            assert src.middle_completions(w1, w3, midlen) == _brute_middles(src, w1, w3, midlen)


def test_observed_strings_and_count():
    sc = generate_scenery(Box.centered(2, 2), 4, 3)
    src = coverage_source(sc, sc.box, 6)
    for k in (1, 2, 4):
        s = src.observed_strings(k)
        assert s == _brute_strings(src, k)
        assert src.count_observed(k) == len(s)
        for w in list(s)[:20]:
            assert src.occurs_before(w)
    assert src.observed_strings(7) == set()


def test_occurs_before_negative_cases(grid5):
    src = coverage_source(grid5, grid5.box, 6)
    assert not src.occurs_before("5555")
    assert not src.occurs_before("z")
    assert not src.occurs_before("1943712")  # longer than max_path_len
    with pytest.raises(InvalidParameter):
        src.occurs_before("")


def test_witness_path_is_a_path(grid17):
    src = coverage_source(grid17, grid17.box, 15)
    s = "439121784761777"
    path = src.witness_path(s)
    assert len(path) == len(s)
    assert all(sum(abs(a - b) for a, b in zip(p, q)) == 1 for p, q in zip(path, path[1:]))
    assert "".join(str(grid17.color(z)) for z in path) == s
    assert src.witness_path("aaaa") is None


def test_window_must_fit():
    sc = generate_scenery(Box.centered(2, 2), 4, 0)
    with pytest.raises(OutOfBounds):
        coverage_source(sc, Box.centered(2, 3), 4)


def test_code_roundtrip():
    for s in ("0", "abz", "90017"):
        assert decode_code(encode_code(s, 36), len(s), 36) == s


def _tree_setup(b=0.6, T=7, seed=2):
    sc = generate_scenery(Box.centered(2, T), 4, seed)
    tree = simulate_brw(sc, b, SimLimits(50_000, T), seed)
    return sc, tree


def test_tree_strings_are_lineage_suffixes():
    sc, tree = _tree_setup()
    src = tree_source(tree)
    par, col, gen = tree.parent, tree.color, tree.generation
    want: dict = {}
    for i in range(tree.n_nodes):
        chain = []
        j = i
        while j >= 0 and len(chain) < 3:
            chain.append(int(col[j]))
            j = par[j]
        if len(chain) == 3:
            s = "".join(str(c) for c in reversed(chain))
            want[s] = min(want.get(s, 99), int(gen[i]))
    assert src.first_times(3) == want
    assert src.observed_strings(3, 4) == {s for s, t in want.items() if t <= 4}


def test_tree_backend_inside_coverage_backend():
    sc, tree = _tree_setup()
    tsrc = tree_source(tree)
    csrc = coverage_source(sc, sc.box, 8)
    for k in (2, 4, 6):
        assert tsrc.observed_strings(k, tree.horizon) <= csrc.observed_strings(k)


def test_tree_middle_completions_consistent():
    sc, tree = _tree_setup(b=0.8, T=8)
    src = tree_source(tree)
    obs = src.observed_strings(5, 8)
    for s in list(obs)[:40]:
        assert s[2:3] in src.middle_completions(s[:2], s[3:], 1, 8)
        assert src.occurs_before(s, 8)
    assert src.middle_completions("zz", "zz", 1, 8) == set()


def test_time_bound_is_monotone():
    sc, tree = _tree_setup()
    src = tree_source(tree)
    prev = set()
    for T in range(tree.horizon + 1):
        cur = src.observed_strings(3, T)
        assert prev <= cur
        prev = cur


def test_sources_share_alphabet_checks():
    sc = Scenery.from_rows(["012", "345", "678"])
    src = coverage_source(sc, sc.box, 3)
    assert src.middle_completions("0", "2", 1) == {"1"}
    assert src.middle_completions("0", "x", 1) == set()
