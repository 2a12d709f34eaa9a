"""Brute-force ground truth.

Everything here may look at the hidden scenery.  The event checkers are
exhaustive over all nearest-neighbour paths in their windows.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidAnchor, OutOfBounds
from .lattice import (ALPHABET, Box, Isometry, PartialScenery, Scenery, canonical, decode,
                      enumerate_words, find_equivalence, linear_isometries)
from .observations import decode_code

MAX_RECORDED = 25


@dataclass(frozen=True)
class Diamond:
    x: tuple
    y: tuple
    points: frozenset

    def __contains__(self, z) -> bool:
        return tuple(z) in self.points


def _axis_segment(x: Sequence[int], y: Sequence[int]) -> tuple[int, int]:
    diff = [b - a for a, b in zip(x, y)]
    nz = [i for i, v in enumerate(diff) if v != 0]
    if len(x) != len(y) or len(nz) != 1:
        raise InvalidAnchor(f"{tuple(x)}..{tuple(y)} is not a nonempty axis segment")
    return nz[0], abs(diff[nz[0]])


def _centres(x, y):
    """Centre point(s) and ball radius of the diamond of segment x..y."""
    axis, k = _axis_segment(x, y)
    lo = min(x[axis], y[axis])
    base = list(x)
    if k % 2 == 0:
        c = list(base)
        c[axis] = lo + k // 2
        return [tuple(c)], k // 2
    c1, c2 = list(base), list(base)
    c1[axis] = lo + k // 2
    c2[axis] = lo + k // 2 + 1
    return [tuple(c1), tuple(c2)], k // 2


def diamond_of(x: Sequence[int], y: Sequence[int]) -> Diamond:
    x, y = tuple(int(v) for v in x), tuple(int(v) for v in y)
    centres, rad = _centres(x, y)
    pts = set()
    d = len(x)
    for c in centres:
        for off in itertools.product(range(-rad, rad + 1), repeat=d):
            if sum(abs(o) for o in off) <= rad:
                pts.add(tuple(a + b for a, b in zip(c, off)))
    return Diamond(x, y, frozenset(pts))


def _in_diamond(pts: np.ndarray, x, y) -> np.ndarray:
    centres, rad = _centres(x, y)
    dist = np.min([np.abs(pts - np.asarray(c)).sum(axis=1) for c in centres], axis=0)
    return dist <= rad


@dataclass
class EventReport:
    event: str
    passed: bool
    n_violations: int = 0
    violations: list = field(default_factory=list)
    checked: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _report(event: str, violations: list, n: int, checked: int) -> EventReport:
    return EventReport(event, n == 0, n, violations, checked)


class _Window:
    """Flat colour array and neighbour table of a window."""

    def __init__(self, scenery: Scenery, window: Box):
        if not scenery.box.contains_box(window):
            raise OutOfBounds(f"{window} not inside {scenery.box}")
        self.window = window
        self.kappa = scenery.kappa
        self.flat = np.ascontiguousarray(scenery.colors[scenery.box.slices(window)],
                                         dtype=np.int64).ravel()
        self.nbr = _kernels.neighbor_table(window.shape)
        self.coords = window.coords()

    def point(self, i: int) -> list:
        return [int(v) for v in self.coords[i]]

    def path_to(self, letters: list[int], end: int) -> list[list]:
        """One path inside the window reading ``letters`` and ending at ``end``."""
        masks = [self.flat == letters[0]]
        pad = np.where(self.nbr < 0, len(self.flat), self.nbr)
        for c in letters[1:]:
            m = np.append(masks[-1], False)
            masks.append(m[pad].any(axis=1) & (self.flat == c))
        if not masks[-1][end]:
            return []
        path = [int(end)]
        for k in range(len(letters) - 2, -1, -1):
            path.append(next(int(j) for j in self.nbr[path[-1]] if j >= 0 and masks[k][j]))
        return [self.point(i) for i in reversed(path)]


def check_diamond_property(scenery: Scenery, word_window: Box, path_window: Box, L: int) -> EventReport:
    """Every path in ``path_window`` reading a word of ``word_window`` starts
    and ends in that word's diamond.

    Exact: the possible end points (start points) of such paths are the
    reachable sets of the word (of its reverse), computed letter by letter.
    """
    if not path_window.contains_box(word_window):
        raise OutOfBounds("word window must lie inside the path window")
    win = _Window(scenery, path_window)
    words = sorted(enumerate_words(scenery, word_window, L), key=lambda w: (w.start, w.direction))
    if not words:
        return _report("B3", [], 0, 0)
    rows = np.array([decode(w.letters) for w in words], dtype=np.int64)
    e_ptr, e_idx = _kernels.reach_sets(win.flat, win.nbr, rows)
    s_ptr, s_idx = _kernels.reach_sets(win.flat, win.nbr, rows[:, ::-1])
    violations, n, checked = [], 0, 0
    for k, w in enumerate(words):
        x, y = w.start, w.end
        ends = e_idx[e_ptr[k]:e_ptr[k + 1]]
        starts = s_idx[s_ptr[k]:s_ptr[k + 1]]
        checked += len(ends) + len(starts)
        for kind, pts in (("end", ends), ("start", starts)):
            if L == 1:
                bad = (win.coords[pts] != np.asarray(x)).any(axis=1)
            else:
                bad = ~_in_diamond(win.coords[pts], x, y)
            for i in pts[bad]:
                n += 1
                if len(violations) < MAX_RECORDED:
                    letters = decode(w.letters)
                    path = win.path_to(letters, i) if kind == "end" else win.path_to(letters[::-1], i)[::-1]
                    violations.append({"word": w.letters, "anchor": [list(x), list(y)],
                                       "kind": kind, "point": win.point(i), "path": path})
    return _report("B3", violations, n, checked)


def check_two_path_property(scenery: Scenery, window: Box, L: int) -> EventReport:
    """Pairs joined by (L-1)-step paths must be a straight axis pair at
    distance L-1 or be joined by two paths with different readings."""
    win = _Window(scenery, window)
    if L <= 1:
        return _report("B4", [], 0, len(win.flat))
    p, q, status = _kernels.bridge_statuses(win.flat, win.nbr, L - 1, scenery.kappa)
    ps, pe = win.coords[p], win.coords[q]
    diff = np.abs(pe - ps)
    straight = ((diff != 0).sum(axis=1) <= 1) & (diff.sum(axis=1) == L - 1)
    bad = np.flatnonzero((status >= 0) & ~straight)
    violations = []
    for k in bad[:MAX_RECORDED]:
        mid = decode_code(int(status[k]), L - 2, scenery.kappa) if L > 2 else ""
        s = ALPHABET[win.flat[p[k]]] + mid + ALPHABET[win.flat[q[k]]]
        violations.append({"x": ps[k].tolist(), "y": pe[k].tolist(), "string": s})
    return _report("B4", violations, len(bad), len(p))


def _segment_key(w) -> tuple:
    return tuple(sorted((w.start, w.end)))


def check_word_uniqueness(scenery: Scenery, window: Box, L: int) -> EventReport:
    """No string is read on two different straight segments of length L."""
    seen: dict[str, set] = {}
    words = enumerate_words(scenery, window, L)
    for w in words:
        seen.setdefault(w.letters, set()).add(_segment_key(w))
    violations, n = [], 0
    for s in sorted(seen):
        segs = seen[s]
        if len(segs) > 1:
            n += 1
            if len(violations) < MAX_RECORDED:
                violations.append({"string": s, "segments": [[list(a), list(b)] for a, b in sorted(segs)]})
    return _report("C1", violations, n, len(words))


def _canonical_patch(arr: np.ndarray, isos) -> tuple[bytes, bool]:
    """Minimum byte image over all linear isometries, and whether a
    non-identity one fixes the patch."""
    base = arr.tobytes()
    best = base
    symmetric = False
    for g in isos[1:]:
        img = np.transpose(arr, g.perm)
        flips = tuple(i for i, s in enumerate(g.signs) if s < 0)
        if flips:
            img = np.flip(img, axis=flips)
        b = np.ascontiguousarray(img).tobytes()
        if b == base:
            symmetric = True
        if b < best:
            best = b
    return best, symmetric


def check_patch_uniqueness(scenery: Scenery, n: int) -> EventReport:
    """Patches of side ceil(sqrt(n)) in K(2n+2) are pairwise inequivalent and
    have no non-trivial symmetry."""
    d = scenery.d
    region = Box.centered(d, 2 * n + 2)
    if not scenery.box.contains_box(region):
        raise OutOfBounds(f"scenery does not contain {region}")
    side = math.ceil(math.sqrt(n))
    arr = scenery.colors[scenery.box.slices(region)]
    isos = linear_isometries(d)
    first_at: dict[bytes, tuple] = {}
    violations, bad, checked = [], 0, 0
    for lo in itertools.product(*(range(0, s - side + 1) for s in arr.shape)):
        patch = np.ascontiguousarray(arr[tuple(slice(a, a + side) for a in lo)])
        key, sym = _canonical_patch(patch, isos)
        corner = tuple(a + r for a, r in zip(lo, region.lo))
        checked += 1
        if sym:
            bad += 1
            if len(violations) < MAX_RECORDED:
                violations.append({"kind": "symmetric", "corner": list(corner)})
        if key in first_at:
            bad += 1
            if len(violations) < MAX_RECORDED:
                violations.append({"kind": "repeated", "corner": list(corner),
                                   "first": list(first_at[key])})
        else:
            first_at[key] = corner
    return _report("G", violations, bad, checked)


def verify_reconstruction(output: PartialScenery, scenery: Scenery, bound: int
                          ) -> Optional[tuple[tuple, Isometry]]:
    """First centre x (``|x|_inf <= bound``; nearest the origin first, ties in
    lexicographic order) and isometry with ``output`` equivalent to the
    scenery on the cube of the same radius at x."""
    if not output.is_total():
        return None
    shape = output.box.shape
    if len(set(shape)) != 1 or shape[0] % 2 == 0:
        return None
    r = (shape[0] - 1) // 2
    d = output.d
    centres = sorted(itertools.product(range(-bound, bound + 1), repeat=d),
                     key=lambda z: (max(abs(v) for v in z), z))
    for x in centres:
        box = Box.cube(x, r)
        if not scenery.box.contains_box(box):
            continue
        iso = find_equivalence(output, scenery.restrict(box))
        if iso is not None:
            return tuple(x), iso
    return None


# ---------------------------------------------------------------------------
# ground truth for the neighbour relation and union bounds
# ---------------------------------------------------------------------------

def true_neighbors(scenery: Scenery, window: Box, M: int) -> set[frozenset]:
    """Unordered pairs of (canonical) long words written on parallel lines at
    distance 1 with aligned ends, inside ``window``."""
    words = [w for w in enumerate_words(scenery, window, M) if w.direction in _pos_units(scenery.d)]
    by_anchor = {(w.start, w.direction): w.letters for w in words}
    out = set()
    for (start, e), s in by_anchor.items():
        for j in range(scenery.d):
            if e[j] != 0:
                continue
            q = list(start)
            q[j] += 1
            other = by_anchor.get((tuple(q), e))
            if other is not None and canonical(other) != canonical(s):
                out.add(frozenset((canonical(s), canonical(other))))
    return out


def _pos_units(d: int):
    return {tuple(1 if i == j else 0 for i in range(d)) for j in range(d)}


def _segments(window: Box, L: int) -> list[list[tuple]]:
    """Point lists of all length-L axis segments in ``window`` (one orientation)."""
    segs = []
    for e in sorted(_pos_units(window.d), reverse=True):
        for z in window.points():
            pts = [tuple(a + j * b for a, b in zip(z, e)) for j in range(L)]
            if window.contains(pts[-1]):
                segs.append(pts)
    return segs


def _equal_prob(a: list, b: list, kappa: int) -> float:
    """P(reads along a and b agree letter by letter) for i.i.d. uniform colours."""
    parent: dict = {}

    def find(z):
        while parent.setdefault(z, z) != z:
            parent[z] = parent[parent[z]]
            z = parent[z]
        return z

    for u, v in zip(a, b):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    cells = set(a) | set(b)
    comps = len({find(z) for z in cells})
    return float(kappa) ** (comps - len(cells))


def c1_union_bound(window: Box, L: int, kappa: int) -> float:
    """Sum over unordered pairs of distinct segments of the exact probability
    that they read the same string in either orientation."""
    segs = _segments(window, L)
    total = 0.0
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            a, b = segs[i], segs[j]
            total += _equal_prob(a, b, kappa)
            total += _equal_prob(a, b[::-1], kappa)
    return total
