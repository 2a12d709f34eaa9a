from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brwscenery.errors import InvalidAnchor
from brwscenery.lattice import (Box, Scenery, apply_isometry, enumerate_words,
                                generate_scenery, linear_isometries)
from brwscenery.oracle import (c1_union_bound, check_diamond_property, check_patch_uniqueness,
                               check_two_path_property, check_word_uniqueness, diamond_of,
                               true_neighbors, verify_reconstruction)


def _l1(a, b):
    return sum(abs(x - y) for x, y in zip(a, b))


def _paths(box: Box, start, steps):
    if steps == 0:
        return [[start]]
    out = []
    for j in range(box.d):
        for s in (1, -1):
            z = list(start)
            z[j] += s
            z = tuple(z)
            if box.contains(z):
                out.extend([start] + p for p in _paths(box, z, steps - 1))
    return out


def _all_paths(box: Box, steps):
    return [p for z in box.points() for p in _paths(box, z, steps)]


def _read(sc, path):
    return "".join(str(sc.color(z)) for z in path)


# -- diamonds ---------------------------------------------------------------------

def test_diamond_examples():
    dm = diamond_of((1, 2), (5, 2))
    assert len(dm.points) == 13
    assert dm.points == {z for z in itertools.product(range(-2, 8), range(-1, 6)) if _l1(z, (3, 2)) <= 2}
    assert diamond_of((0, 0), (1, 0)).points == {(0, 0), (1, 0)}
    assert diamond_of((0,), (4,)).points == {(0,), (1,), (2,), (3,), (4,)}
    with pytest.raises(InvalidAnchor):
        diamond_of((0, 0), (1, 1))
    with pytest.raises(InvalidAnchor):
        diamond_of((0, 0), (0, 0))


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(1, 9), st.integers(0, 1), st.sampled_from([1, -1]))
def test_diamond_contains_segment(x0, x1, k, axis, sgn):
    x = (x0, x1)
    y = list(x)
    y[axis] += sgn * k
    dm = diamond_of(x, tuple(y))
    for j in range(k + 1):
        z = list(x)
        z[axis] += sgn * j
        assert tuple(z) in dm
    mid = [(a + b) / 2 for a, b in zip(x, y)]
    assert all(sum(abs(a - m) for a, m in zip(z, mid)) <= (k + 1) // 2 + 0.5 for z in dm.points)


# -- B3 ---------------------------------------------------------------------------

def _b3_brute(sc, word_window, path_window, L):
    paths = _all_paths(path_window, L - 1)
    by_string: dict = {}
    for p in paths:
        by_string.setdefault(_read(sc, p), []).append(p)
    n = 0
    for w in enumerate_words(sc, word_window, L):
        dm = diamond_of(w.start, w.end)
        ends = {p[-1] for p in by_string.get(w.letters, [])}
        starts = {p[0] for p in by_string.get(w.letters, [])}
        n += sum(1 for z in ends if z not in dm) + sum(1 for z in starts if z not in dm)
    return n


@pytest.mark.parametrize("kappa,seed", [(2, 0), (3, 1), (5, 2), (10, 3)])
def test_diamond_property_brute_force(kappa, seed):
    sc = generate_scenery(Box.centered(2, 3), kappa, seed)
    rep = check_diamond_property(sc, Box.centered(2, 1), sc.box, 3)
    assert rep.n_violations == _b3_brute(sc, Box.centered(2, 1), sc.box, 3)
    assert rep.passed == (rep.n_violations == 0)


def test_diamond_property_1d_example():
    sc = Scenery(Box((0,), (6,)), np.array([0, 1, 1, 0, 1, 0, 0]), kappa=2)
    rep = check_diamond_property(sc, sc.box, sc.box, 3)
    assert rep.n_violations == _b3_brute(sc, sc.box, sc.box, 3)
    assert not rep.passed


def test_diamond_property_constant_fails():
    sc = generate_scenery(Box.centered(2, 3), 1, 0)
    rep = check_diamond_property(sc, Box.centered(2, 1), sc.box, 3)
    assert not rep.passed and rep.violations and rep.violations[0]["path"]


def test_diamond_property_single_line_passes():
    sc = Scenery(Box((0, 0), (6, 0)), np.arange(7).reshape(7, 1), kappa=10)
    assert check_diamond_property(sc, sc.box, sc.box, 4).passed


# -- B4 ---------------------------------------------------------------------------

def _b4_brute(sc, window, L):
    reads: dict = {}
    for p in _all_paths(window, L - 1):
        reads.setdefault((p[0], p[-1]), set()).add(_read(sc, p))
    bad = 0
    for (x, y), rs in reads.items():
        diff = [abs(a - b) for a, b in zip(x, y)]
        straight = sum(1 for v in diff if v) <= 1 and sum(diff) == L - 1
        if len(rs) == 1 and not straight:
            bad += 1
    return bad, len(reads)


@pytest.mark.parametrize("kappa,seed,L", [(2, 0, 3), (3, 1, 4), (5, 2, 4), (10, 4, 3)])
def test_two_path_brute_force(kappa, seed, L):
    sc = generate_scenery(Box.centered(2, 2), kappa, seed)
    rep = check_two_path_property(sc, sc.box, L)
    bad, pairs = _b4_brute(sc, sc.box, L)
    assert rep.n_violations == bad and rep.checked == pairs


def test_two_path_constant_and_1d():
    sc = generate_scenery(Box.centered(2, 2), 1, 0)
    assert not check_two_path_property(sc, sc.box, 3).passed
    line = Scenery(Box((0,), (4,)), np.array([0, 1, 2, 1, 0]), kappa=3)
    rep = check_two_path_property(line, line.box, 3)
    bad, pairs = _b4_brute(line, line.box, 3)
    assert rep.n_violations == bad and rep.checked == pairs


# -- C1 ---------------------------------------------------------------------------

def test_word_uniqueness_example(grid5):
    assert check_word_uniqueness(grid5, grid5.box, 3).passed


def test_word_uniqueness_brute_force():
    for seed in range(6):
        sc = generate_scenery(Box.centered(2, 2), 3, seed)
        segs: dict = {}
        for w in enumerate_words(sc, sc.box, 2):
            segs.setdefault(w.letters, set()).add(frozenset((w.start, w.end)))
        want = sum(1 for v in segs.values() if len(v) > 1)
        assert check_word_uniqueness(sc, sc.box, 2).n_violations == want


def test_word_uniqueness_constant_fails():
    sc = generate_scenery(Box.centered(2, 2), 1, 0)
    assert not check_word_uniqueness(sc, sc.box, 2).passed


def test_union_bound_small_case():
    # K(0) in d=1 with L=1 has one segment, so no pairs
    assert c1_union_bound(Box.centered(1, 0), 1, 5) == 0.0
    # three cells, L=2: segments {0,1} and {1,2}; direct pairing forces all equal,
    # reversed pairing forces only the ends equal
    assert c1_union_bound(Box((0,), (2,)), 2, 5) == pytest.approx(1 / 25 + 1 / 5)


# -- G ----------------------------------------------------------------------------

def test_patch_uniqueness_constant_and_symmetric():
    flat = generate_scenery(Box.centered(2, 6), 1, 0)
    assert not check_patch_uniqueness(flat, 2).passed
    sc = generate_scenery(Box.centered(2, 6), 10, 5)
    arr = sc.colors.copy()
    arr[:7] = arr[::-1][:7]
    sym = Scenery(sc.box, arr, kappa=10)
    rep = check_patch_uniqueness(sym, 2)
    assert not rep.passed
    assert {v["kind"] for v in rep.violations} & {"symmetric", "repeated"}


def test_patch_uniqueness_improves_with_kappa():
    def rate(kappa):
        return sum(check_patch_uniqueness(generate_scenery(Box.centered(2, 20), kappa, s), 9).passed
                   for s in range(10))
    assert rate(3) <= rate(36)
    assert rate(36) > 0


# -- verification ------------------------------------------------------------------

def test_verify_exact_restriction():
    sc = generate_scenery(Box.centered(2, 8), 10, 0)
    x, iso = verify_reconstruction(sc.restrict(Box.centered(2, 3)), sc, 2)
    assert x == (0, 0) and iso.is_identity()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 7), st.tuples(st.integers(-2, 2), st.integers(-2, 2)))
def test_verify_recovers_isometric_image(seed, g, x):
    sc = generate_scenery(Box.centered(2, 8), 10, seed)
    piece = sc.restrict(Box.cube(x, 3))
    iso = linear_isometries(2)[g]
    out = apply_isometry(iso, piece).recentered()
    hit = verify_reconstruction(out, sc, 2)
    assert hit is not None
    y, h = hit
    assert np.array_equal(apply_isometry(h, out).colors, sc.restrict(Box.cube(y, 3)).colors)


def test_verify_rejects_flipped_cell():
    checked = 0
    for seed in range(10):
        sc = generate_scenery(Box.centered(2, 6), 36, seed)
        if not check_word_uniqueness(sc, sc.box, 3).passed:
            continue
        checked += 1
        arr = sc.restrict(Box.centered(2, 3)).colors.copy()
        arr[3, 3] = (arr[3, 3] + 1) % 36
        out = Scenery(Box.centered(2, 3), arr, kappa=36)
        assert verify_reconstruction(out, sc, 2) is None
    assert checked > 0


def test_verify_requires_total_cube():
    sc = generate_scenery(Box.centered(2, 4), 10, 0)
    assert verify_reconstruction(sc.restrict(Box((0, 0), (1, 2))), sc, 1) is None


def test_true_neighbors_on_grid(grid_tile):
    pairs = true_neighbors(grid_tile, grid_tile.box, 5)
    assert frozenset(("01111", "32106")) in pairs or frozenset(("01111", "60123")) in pairs


def test_reports_are_pure():
    sc = generate_scenery(Box.centered(2, 4), 5, 3)
    a = check_diamond_property(sc, Box.centered(2, 2), sc.box, 3)
    b = check_diamond_property(sc, Box.centered(2, 2), sc.box, 3)
    assert a == b
