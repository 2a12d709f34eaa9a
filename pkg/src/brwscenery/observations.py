"""What the reconstruction may ask of the observations.

Two backends answer the same queries:

* :class:`TreeSource` reads colour strings along lineages of a simulated
  :class:`~brwscenery.brw.ObservationTree`.  A string "occurs by time T" when
  some lineage segment generating it ends at generation ``<= T``.
* :class:`CoverageSource` is the idealised source in which every
  nearest-neighbour path inside a window has been followed; time bounds are
  ignored.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import _kernels
from .brw import ObservationTree
from .errors import InvalidParameter, OutOfBounds
from .lattice import ALPHABET, Box, Scenery

_INDEX = {ch: i for i, ch in enumerate(ALPHABET)}


def _letters(s: str, kappa: int) -> Optional[list[int]]:
    """Colour indices of ``s``, or ``None`` if some letter is not a colour < kappa."""
    out = []
    for ch in s:
        c = _INDEX.get(ch)
        if c is None or c >= kappa:
            return None
        out.append(c)
    return out


class ObservationSource:
    kappa: int
    d: int
    backend: str

    def occurs_before(self, s: str, T: int) -> bool:
        raise NotImplementedError

    def observed_strings(self, length: int, T: int) -> set[str]:
        raise NotImplementedError

    def middle_completions(self, w1: str, w3: str, midlen: int, T: int) -> set[str]:
        raise NotImplementedError

    def count_observed(self, length: int, T: int) -> int:
        return len(self.observed_strings(length, T))


class TreeSource(ObservationSource):
    backend = "tree"

    def __init__(self, tree: ObservationTree):
        self.tree = tree
        self.kappa = tree.kappa
        self.d = tree.d
        self._suffix_len = 0
        self._suffixes: list[str] = []
        self._first: dict[int, dict[str, int]] = {}
        self._split: dict[tuple, dict] = {}

    def _ensure_suffixes(self, k: int) -> None:
        if k <= self._suffix_len:
            return
        tree = self.tree
        par = tree.parent.tolist()
        col = [ALPHABET[c] for c in tree.color.tolist()]
        suf = [""] * tree.n_nodes
        for i in range(tree.n_nodes):
            p = par[i]
            s = col[i] if p < 0 else suf[p] + col[i]
            suf[i] = s[-k:]
        self._suffixes = suf
        self._suffix_len = k

    def first_times(self, length: int) -> dict[str, int]:
        """Earliest generation at which each length-``length`` string ends."""
        if length in self._first:
            return self._first[length]
        self._ensure_suffixes(length)
        first: dict[str, int] = {}
        gens = self.tree.generation.tolist()
        for s, g in zip(self._suffixes, gens):
            if len(s) >= length:
                s = s[-length:]
                if s not in first:
                    first[s] = g
        self._first[length] = first
        return first

    def occurs_before(self, s: str, T: int) -> bool:
        if not s:
            raise InvalidParameter("query string must be nonempty")
        if _letters(s, self.kappa) is None:
            return False
        t = self.first_times(len(s)).get(s)
        return t is not None and t <= T

    def observed_strings(self, length: int, T: int) -> set[str]:
        if length < 1:
            raise InvalidParameter("length must be >= 1")
        return {s for s, t in self.first_times(length).items() if t <= T}

    def split_index(self, l1: int, midlen: int, l3: int) -> dict:
        """``(w1, w3) -> {middle: first time}`` over all observed strings."""
        key = (l1, midlen, l3)
        if key not in self._split:
            idx: dict = {}
            for s, t in self.first_times(l1 + midlen + l3).items():
                k = (s[:l1], s[l1 + midlen:])
                idx.setdefault(k, {})[s[l1:l1 + midlen]] = t
            self._split[key] = idx
        return self._split[key]

    def middle_completions(self, w1: str, w3: str, midlen: int, T: int) -> set[str]:
        if len(w1) != len(w3) or not w1:
            raise InvalidParameter("w1 and w3 must be nonempty and of equal length")
        if _letters(w1 + w3, self.kappa) is None:
            return set()
        mids = self.split_index(len(w1), midlen, len(w3)).get((w1, w3), {})
        return {m for m, t in mids.items() if t <= T}


class CoverageSource(ObservationSource):
    backend = "coverage"

    def __init__(self, scenery: Scenery, window: Box, max_path_len: int):
        if not scenery.box.contains_box(window):
            raise OutOfBounds(f"{window} not inside {scenery.box}")
        if max_path_len < 1:
            raise InvalidParameter("max_path_len must be >= 1")
        self.scenery = scenery
        self.window = window
        self.max_path_len = max_path_len
        self.kappa = scenery.kappa
        self.d = window.d
        self.grid = np.ascontiguousarray(scenery.colors[scenery.box.slices(window)], dtype=np.int64)
        self.flat = self.grid.ravel()
        self.nbr = _kernels.neighbor_table(window.shape)
        self._nbr_pad = np.where(self.nbr < 0, len(self.flat), self.nbr)
        self._cache: dict = {}

    # -- helpers on flat index space ---------------------------------------
    def point(self, i: int) -> tuple:
        rel = np.unravel_index(int(i), self.window.shape)
        return tuple(int(a) + l for a, l in zip(rel, self.window.lo))

    def index(self, z) -> int:
        return int(np.ravel_multi_index(tuple(int(a) - l for a, l in zip(z, self.window.lo)),
                                        self.window.shape))

    def dilate(self, mask: np.ndarray) -> np.ndarray:
        padded = np.append(mask, False)
        return padded[self._nbr_pad].any(axis=1)

    def end_mask(self, letters: list[int]) -> np.ndarray:
        """Positions where some path generating ``letters`` can end."""
        m = self.flat == letters[0]
        for c in letters[1:]:
            if not m.any():
                break
            m = self.dilate(m) & (self.flat == c)
        return m

    def _usable(self, s: str) -> Optional[list[int]]:
        if len(s) > self.max_path_len:
            return None
        return _letters(s, self.kappa)

    # -- queries -------------------------------------------------------------
    def occurs_before(self, s: str, T: int = 0) -> bool:
        if not s:
            raise InvalidParameter("query string must be nonempty")
        letters = self._usable(s)
        if letters is None:
            return False
        return bool(self.end_mask(letters).any())

    def observed_strings(self, length: int, T: int = 0) -> set[str]:
        if length < 1:
            raise InvalidParameter("length must be >= 1")
        if length > self.max_path_len:
            return set()
        key = ("obs", length)
        if key not in self._cache:
            self._cache[key] = {decode_code(c, length, self.kappa) for c in self._codes(length)}
        return set(self._cache[key])

    def _codes(self, length: int) -> np.ndarray:
        key = ("codes", length)
        if key not in self._cache:
            _, _, code = _kernels.enumerate_paths(self.flat, self.nbr, np.arange(len(self.flat)),
                                                  length - 1, self.kappa)
            self._cache[key] = np.unique(code)
        return self._cache[key]

    def count_observed(self, length: int, T: int = 0) -> int:
        if length < 1:
            raise InvalidParameter("length must be >= 1")
        if length > self.max_path_len:
            return 0
        return len(self._codes(length))

    def middle_completions(self, w1: str, w3: str, midlen: int, T: int = 0) -> set[str]:
        if len(w1) != len(w3) or not w1:
            raise InvalidParameter("w1 and w3 must be nonempty and of equal length")
        if midlen < 0:
            raise InvalidParameter("midlen must be >= 0")
        if len(w1) + midlen + len(w3) > self.max_path_len:
            return set()
        a = _letters(w1, self.kappa)
        c = _letters(w3, self.kappa)
        if a is None or c is None:
            return set()
        p1 = self.end_mask(a)
        p3 = self.end_mask(c[::-1])
        if not p1.any() or not p3.any():
            return set()
        if midlen == 0:
            return {""} if (self.dilate(p1) & p3).any() else set()
        # dist[k]: positions within k steps of a w3 start
        reach = [p3]
        for _ in range(midlen):
            reach.append(reach[-1] | self.dilate(reach[-1]))
        first = np.flatnonzero(self.dilate(p1) & reach[midlen])
        frontier = {int(i): {ALPHABET[self.flat[i]]} for i in first}
        for step in range(1, midlen):
            ok = reach[midlen - step]
            nxt: dict[int, set] = {}
            for i, strs in frontier.items():
                for j in self.nbr[i]:
                    if j < 0 or not ok[j]:
                        continue
                    ch = ALPHABET[self.flat[j]]
                    bucket = nxt.setdefault(int(j), set())
                    bucket.update(s + ch for s in strs)
            frontier = nxt
        end_ok = self.dilate(p3)
        out: set[str] = set()
        for i, strs in frontier.items():
            if end_ok[i]:
                out |= strs
        return out

    def witness_path(self, s: str) -> Optional[list[tuple]]:
        """One explicit path inside the window generating ``s``, if any."""
        letters = self._usable(s)
        if letters is None:
            return None
        masks = [self.flat == letters[0]]
        for ch in letters[1:]:
            masks.append(self.dilate(masks[-1]) & (self.flat == ch))
        if not masks[-1].any():
            return None
        path = [int(np.flatnonzero(masks[-1])[0])]
        for k in range(len(letters) - 2, -1, -1):
            prev = next(int(j) for j in self.nbr[path[-1]] if j >= 0 and masks[k][j])
            path.append(prev)
        return [self.point(i) for i in reversed(path)]


def decode_code(code: int, length: int, kappa: int) -> str:
    out = []
    code = int(code)
    for _ in range(length):
        code, r = divmod(code, kappa)
        out.append(ALPHABET[r])
    return "".join(reversed(out))


def encode_code(s: str, kappa: int) -> int:
    v = 0
    for ch in s:
        v = v * kappa + _INDEX[ch]
    return v


def coverage_source(scenery: Scenery, window: Box, max_path_len: int) -> CoverageSource:
    return CoverageSource(scenery, window, max_path_len)


def tree_source(tree: ObservationTree) -> TreeSource:
    return TreeSource(tree)
