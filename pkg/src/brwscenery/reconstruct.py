"""The reconstruction algorithm: short words, long words, seed, tiling, stitching."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .errors import InvalidParameter, PhaseError, SeedNotFound, TilingConflict
from .lattice import (UNDEFINED, Box, Isometry, PartialScenery, apply_isometry,
                      canonical, decode, find_equivalence, linear_isometries)
from .observations import CoverageSource, ObservationSource, decode_code


# ---------------------------------------------------------------------------
# parameters and containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Params:
    """Level parameters.  Unset knobs take the asymptotic couplings in ``n``.

    ``*_small`` configure the auxiliary level whose long words supply the seed.
    ``max_long`` bounds the long-word bag; ``tile_budget`` bounds the tiling
    search; in ``strict`` mode an orientation ambiguity fails the trial.
    """

    n: int
    L: Optional[int] = None
    M: Optional[int] = None
    T1: Optional[int] = None
    T2: Optional[int] = None
    n_small: Optional[int] = None
    L_small: Optional[int] = None
    M_small: Optional[int] = None
    T1_small: Optional[int] = None
    T2_small: Optional[int] = None
    max_long: int = 2_000_000
    tile_budget: int = 20_000
    strict: bool = True

    def __post_init__(self):
        n = self.n
        if n < 1:
            raise InvalidParameter("level n must be >= 1")
        s = object.__setattr__
        if self.L is None:
            s(self, "L", max(3, math.ceil(math.log(n) ** 2)))
        if self.M is None:
            s(self, "M", 4 * n + 1)
        if self.T1 is None:
            s(self, "T1", n ** 2)
        if self.T2 is None:
            s(self, "T2", n ** 4)
        if self.n_small is None:
            s(self, "n_small", math.ceil(n ** 0.25))
        if self.L_small is None:
            s(self, "L_small", self.L)
        if self.M_small is None:
            m = min(4 * self.n_small + 1, self.M - 2)
            if m < self.L_small:
                m = self.L_small + (self.L_small + 1) % 2
            if m > self.M:
                m = self.M
            s(self, "M_small", m)
        if self.T1_small is None:
            s(self, "T1_small", self.n_small ** 2)
        if self.T2_small is None:
            s(self, "T2_small", self.n_small ** 4)
        if not 2 <= self.L <= self.M:
            raise InvalidParameter(f"need 2 <= L <= M (L={self.L}, M={self.M})")
        if self.M % 2 == 0 or self.M_small % 2 == 0:
            raise InvalidParameter("long-word lengths must be odd")
        if not 1 <= self.L_small <= self.M_small <= self.M:
            raise InvalidParameter("need 1 <= L_small <= M_small <= M")
        if self.T1 > self.T2 or self.T1_small > self.T2_small:
            raise InvalidParameter("need T1 <= T2")
        if self.max_long < 1 or self.tile_budget < 1:
            raise InvalidParameter("budgets must be positive")

    @property
    def radius(self) -> int:
        """Radius of the output box."""
        return (self.M - 1) // 2

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class WordBag:
    """Strings of one length, closed under reversal."""

    words: frozenset
    length: Optional[int] = None

    def __post_init__(self):
        closed = frozenset(self.words) | frozenset(w[::-1] for w in self.words)
        lengths = {len(w) for w in closed}
        if len(lengths) > 1:
            raise InvalidParameter(f"mixed word lengths {sorted(lengths)}")
        object.__setattr__(self, "words", closed)
        if lengths:
            (k,) = lengths
            if self.length is not None and self.length != k:
                raise InvalidParameter("declared length disagrees with the words")
            object.__setattr__(self, "length", k)

    @classmethod
    def of(cls, words: Iterable[str], length: Optional[int] = None) -> "WordBag":
        return cls(frozenset(words), length)

    def __contains__(self, s) -> bool:
        return s in self.words

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(sorted(self.words))

    def canonical(self) -> set[str]:
        return {canonical(w) for w in self.words}


@dataclass(frozen=True)
class PlacedWord:
    word: str
    start: tuple
    direction: tuple

    def __post_init__(self):
        if len(self.word) % 2 == 0:
            raise InvalidParameter("a placed word needs odd length")

    @property
    def middle(self) -> int:
        return (len(self.word) - 1) // 2

    def points(self) -> list[tuple]:
        return [tuple(s + j * e for s, e in zip(self.start, self.direction))
                for j in range(len(self.word))]

    def as_piece(self) -> PartialScenery:
        return PartialScenery.from_dict(dict(zip(self.points(), decode(self.word))))


# ---------------------------------------------------------------------------
# phase 1
# ---------------------------------------------------------------------------

def phase1_generic(src: ObservationSource, L: int, T1: int, T2: int) -> WordBag:
    """Direct transcription of the selection rule through the source's queries."""
    triples = src.observed_strings(3 * L, T1)
    pairs: dict[tuple, set] = {}
    for s in triples:
        pairs.setdefault((s[:L], s[2 * L:]), set()).add(s[L:2 * L])
    out = set()
    for (w1, w3), mids in pairs.items():
        comp = src.middle_completions(w1, w3, L, T2)
        if len(comp) == 1:
            (w2,) = comp
            if w2 in mids:
                out.add(w2)
    return WordBag.of(out, L)


def _csr(keys: np.ndarray, values: np.ndarray, nkeys: int):
    order = np.lexsort((values, keys))
    k, v = keys[order], values[order]
    ptr = np.zeros(nkeys + 1, dtype=np.int64)
    np.add.at(ptr, k + 1, 1)
    return np.cumsum(ptr), np.ascontiguousarray(v, dtype=np.int64)


def _point_sets(wid: np.ndarray, pos: np.ndarray, npos: int):
    """Distinct sets ``{pos : wid == w}`` over all w, as CSR.

    Contexts with the same set of positions behave identically in the
    selection rule, so only distinct sets are kept.
    """
    key = np.unique(wid * npos + pos)
    w, p = key // npos, key % npos
    starts = np.flatnonzero(np.r_[True, w[1:] != w[:-1]])
    sizes = np.diff(np.r_[starts, len(w)])
    singles = np.unique(p[starts[sizes == 1]])
    multi = {tuple(p[a:a + k].tolist()) for a, k in zip(starts[sizes > 1], sizes[sizes > 1])}
    multi = sorted(multi)
    ptr = np.concatenate([[0], np.arange(1, len(singles) + 1),
                          len(singles) + np.cumsum([len(m) for m in multi], dtype=np.int64)])
    idx = np.concatenate([singles] + [np.asarray(m, dtype=np.int64) for m in multi]) \
        if multi else singles
    return ptr.astype(np.int64), np.ascontiguousarray(idx, dtype=np.int64)


def phase1_coverage(src: CoverageSource, L: int) -> WordBag:
    """Phase 1 on a coverage source via endpoint/bridge tables.

    For left context w1 and right context w3 the completions are the union over
    end points p of w1 and start points q of w3 of the middles of
    (L+1)-step paths p -> q.
    """
    if 3 * L > src.max_path_len:
        return WordBag.of((), L)
    kappa = src.kappa
    npos = len(src.flat)
    start, end, code = _kernels.enumerate_paths(src.flat, src.nbr, np.arange(npos), L - 1, kappa)
    if len(code) == 0:
        return WordBag.of((), L)
    _, wid = np.unique(code, return_inverse=True)
    wid = wid.ravel().astype(np.int64)
    e_ptr, e_idx = _point_sets(wid, end, npos)
    st_ptr, st_idx = _point_sets(wid, start, npos)
    set_id = np.repeat(np.arange(len(st_ptr) - 1), np.diff(st_ptr))
    w3_at_ptr, w3_at_idx = _csr(st_idx, set_id, npos)

    bp, bq, bs = _kernels.bridge_statuses(src.flat, src.nbr, L + 1, kappa)
    br_ptr = np.zeros(npos + 1, dtype=np.int64)
    np.add.at(br_ptr, bp + 1, 1)
    br_ptr = np.cumsum(br_ptr)
    cand = np.unique(bs[bs >= 0])
    sel = _kernels.select_unique_middles(npos, e_ptr, e_idx, br_ptr, bq, bs,
                                         w3_at_ptr, w3_at_idx, st_ptr, st_idx, cand)
    return WordBag.of((decode_code(c, L, kappa) for c in cand[sel]), L)


def phase1_short_words(src: ObservationSource, p: Union[Params, int], T1: Optional[int] = None,
                       T2: Optional[int] = None) -> WordBag:
    """Words w2 of length L for which some observed w1 w2 w3 (by T1) has w2 as
    its only middle among observations by T2."""
    if isinstance(p, Params):
        L = p.L
        T1 = p.T1 if T1 is None else T1
        T2 = p.T2 if T2 is None else T2
    else:
        L = int(p)
        T1 = 0 if T1 is None else T1
        T2 = T1 if T2 is None else T2
    if isinstance(src, CoverageSource):
        return phase1_coverage(src, L)
    return phase1_generic(src, L, T1, T2)


# ---------------------------------------------------------------------------
# phase 2
# ---------------------------------------------------------------------------

def _letter_matrix(words: Iterable[str]) -> np.ndarray:
    ws = sorted(words)
    if not ws:
        return np.zeros((0, 0), dtype=np.uint8)
    raw = np.frombuffer("".join(ws).encode("ascii"), dtype=np.uint8)
    return raw.reshape(len(ws), len(ws[0]))


def _rows_to_strings(mat: np.ndarray) -> list[str]:
    if len(mat) == 0:
        return []
    k = mat.shape[1]
    return np.ascontiguousarray(mat).view(f"S{k}").ravel().astype(str).tolist()


def _window_codes(mat: np.ndarray, L: int) -> np.ndarray:
    """Codes (base 256 over ASCII) of the trailing L letters of each row."""
    tail = mat[:, -L:].astype(np.int64)
    out = np.zeros(len(mat), dtype=np.int64)
    for j in range(L):
        out = out * 256 + tail[:, j]
    return out


def phase2_long_words(short: WordBag, p: Union[Params, int], max_long: Optional[int] = None) -> WordBag:
    """All strings of length M whose every length-L substring lies in ``short``."""
    M = p.M if isinstance(p, Params) else int(p)
    if max_long is None:
        max_long = p.max_long if isinstance(p, Params) else 2_000_000
    if len(short) == 0:
        return WordBag.of((), M)
    L = short.length
    if M < L:
        raise InvalidParameter(f"long length {M} shorter than short length {L}")
    if 8 * L > 62:
        raise InvalidParameter("short words too long for the assembler")
    bag = _letter_matrix(short.words)
    bag_codes = np.sort(_window_codes(bag, L))
    letters = np.unique(bag)
    frontier = bag
    for _ in range(M - L):
        n = len(frontier)
        ext = np.empty((n * len(letters), frontier.shape[1] + 1), dtype=np.uint8)
        ext[:, :-1] = np.repeat(frontier, len(letters), axis=0)
        ext[:, -1] = np.tile(letters, n)
        codes = _window_codes(ext, L)
        pos = np.searchsorted(bag_codes, codes)
        pos[pos == len(bag_codes)] = 0
        frontier = ext[bag_codes[pos] == codes]
        if len(frontier) > max_long:
            raise PhaseError(2, "long-word-overflow",
                             f"more than {max_long} partial long words")
    return WordBag.of(_rows_to_strings(frontier), M)


def brute_force_long_words(short: WordBag, M: int, limit: int = 50_000_000) -> set[str]:
    """Enumerate every string over the bag's letters and keep the qualifying ones."""
    if len(short) == 0:
        return set()
    L = short.length
    letters = np.unique(_letter_matrix(short.words))
    k = len(letters)
    if k ** M > limit:
        raise InvalidParameter(f"{k}^{M} strings exceed the brute-force limit")
    bag_codes = np.sort(_window_codes(_letter_matrix(short.words), L))
    out: set[str] = set()
    total = k ** M
    chunk = 1 << 20
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = np.empty((len(idx), M), dtype=np.int64)
        rem = idx
        for j in range(M - 1, -1, -1):
            digits[:, j] = rem % k
            rem = rem // k
        mat = letters[digits]
        ok = np.ones(len(idx), dtype=bool)
        for a in range(M - L + 1):
            codes = _window_codes(mat[:, a:a + L], L)
            pos = np.searchsorted(bag_codes, codes)
            pos[pos == len(bag_codes)] = 0
            ok &= bag_codes[pos] == codes
        out.update(_rows_to_strings(mat[ok]))
    return out


# ---------------------------------------------------------------------------
# phase 3
# ---------------------------------------------------------------------------

def phase3_seed(long_n: WordBag, long_small: WordBag, p: Optional[Params] = None,
                d: int = 2) -> PlacedWord:
    """Centre a long word of level n on the canonical-minimum small long word."""
    if len(long_small) == 0:
        raise SeedNotFound("no small-level long words")
    if len(long_n) == 0:
        raise SeedNotFound("no level-n long words")
    w0 = min(long_small.words)
    m, M = len(w0), long_n.length
    if m % 2 == 0 or M % 2 == 0:
        raise InvalidParameter("seed words need odd length")
    if m > M:
        raise SeedNotFound(f"small word {w0!r} longer than level-n words")
    off = (M - m) // 2
    for w in sorted(long_n.words):
        if w[off:off + m] == w0:
            start = (-(M - 1) // 2,) + (0,) * (d - 1)
            e1 = (1,) + (0,) * (d - 1)
            return PlacedWord(w, start, e1)
    raise SeedNotFound(f"no long word contains {w0!r} at its centre")


# ---------------------------------------------------------------------------
# neighbour test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NeighborWitness:
    v_a: str
    v_b: str
    v_c: str
    w_b: str
    index: int
    v_reversed: bool
    w_reversed: bool


class _Completions:
    """Memoised middle completions for the neighbour test."""

    def __init__(self, src: ObservationSource, L: int, T: int):
        self.src, self.L, self.T = src, L, T
        self.cache: dict = {}

    def __call__(self, w1: str, w3: str) -> set:
        key = (w1, w3)
        if key not in self.cache:
            self.cache[key] = self.src.middle_completions(w1, w3, self.L, self.T)
        return self.cache[key]


def _splits(M: int, L: int):
    return range(0, M - (3 * L - 2) + 1)


def _oriented_witnesses(v: str, w: str, L: int, comp: _Completions, first_only: bool = True):
    M = len(v)
    hits = []
    for a in _splits(M, L):
        v_a, v_b, v_c = v[a:a + L], v[a + L:a + 2 * L - 2], v[a + 2 * L - 2:a + 3 * L - 2]
        w_b = w[a + L - 1:a + 2 * L - 1]
        # a window of v one cell back or forward explains the detour without leaving the line
        if w_b == v[a + L - 2:a + 2 * L - 2] or w_b == v[a + L:a + 2 * L]:
            continue
        if w_b in comp(v_a, v_c):
            hits.append((a, v_a, v_b, v_c, w_b))
            if first_only:
                break
    return hits


def neighbor_witnesses(v: str, w: str, src: ObservationSource, p: Union[Params, int],
                       T2: Optional[int] = None, first_only: bool = False) -> list:
    """Every (orientation, split) witness, orientations of v outermost."""
    L = p.L if isinstance(p, Params) else int(p)
    T = (p.T2 if isinstance(p, Params) else 0) if T2 is None else T2
    if len(v) != len(w):
        raise InvalidParameter("neighbour test needs words of equal length")
    if canonical(v) == canonical(w) or 3 * L - 2 > len(v):
        return []
    comp = _Completions(src, L, T)
    out = []
    seen = set()
    for vr in (False, True):
        vv = v[::-1] if vr else v
        for wr in (False, True):
            ww = w[::-1] if wr else w
            if (vv, ww) in seen:
                continue
            seen.add((vv, ww))
            for a, v_a, v_b, v_c, w_b in _oriented_witnesses(vv, ww, L, comp, first_only):
                out.append(NeighborWitness(v_a, v_b, v_c, w_b, _mid_index(a, L), vr, wr))
                if first_only:
                    return out
    return out


def _mid_index(a: int, L: int):
    """Middle letter index of v_b (a half-integer when |v_b| is even)."""
    twice = 2 * a + 3 * L - 3
    return twice // 2 if twice % 2 == 0 else twice / 2


def neighbor_test(v: str, w: str, src: ObservationSource, p: Union[Params, int],
                  T2: Optional[int] = None) -> Optional[NeighborWitness]:
    ws = neighbor_witnesses(v, w, src, p, T2, first_only=True)
    return ws[0] if ws else None


def _pair_ok(line: str, cand: str, L: int, comp: _Completions) -> bool:
    """``cand`` written next to ``line`` with the same reading direction."""
    if _oriented_witnesses(line, cand, L, comp):
        return True
    return bool(_oriented_witnesses(line[::-1], cand[::-1], L, comp))


# ---------------------------------------------------------------------------
# phase 4
# ---------------------------------------------------------------------------

@dataclass
class TileResult:
    piece: PartialScenery
    lines: dict
    complete: bool
    ambiguous: bool
    nodes: int


def _offset_order(d: int, r: int) -> list[tuple]:
    offs = list(itertools.product(range(-r, r + 1), repeat=d - 1))
    return sorted(offs, key=lambda o: (sum(abs(x) for x in o), tuple(-x for x in o)))


def _adjacent(o: tuple, placed: dict) -> list[tuple]:
    out = []
    for j in range(len(o)):
        for s in (-1, 1):
            q = o[:j] + (o[j] + s,) + o[j + 1:]
            if q in placed:
                out.append(q)
    return out


def _lines_to_piece(lines: dict, d: int, M: int) -> PartialScenery:
    r = (M - 1) // 2
    box = Box.centered(d, r)
    arr = np.full(box.shape, UNDEFINED, dtype=np.int16)
    for o, s in lines.items():
        idx = (slice(None),) + tuple(x + r for x in o)
        arr[idx] = decode(s)
    return PartialScenery(box, arr)


def phase4_tile(seed: PlacedWord, long: WordBag, src: ObservationSource,
                p: Params, d: Optional[int] = None) -> TileResult:
    """Fill the lines parallel to e1 through ``K((M-1)/2)``.

    Lines are visited in order of distance from the seed line.  A candidate
    long word is admissible at an offset when it passes the neighbour test with
    every line already placed next to it; used words are not reused.  The
    search backtracks within ``p.tile_budget`` nodes.
    """
    d = d or len(seed.start)
    M, L = len(seed.word), p.L
    r = (M - 1) // 2
    order = _offset_order(d, r)
    comp = _Completions(src, L, p.T2)
    pool = sorted({canonical(w) for w in long.words})
    placed: dict = {order[0]: seed.word}
    used = {canonical(seed.word)}
    best = dict(placed)
    nodes = 0
    ambiguous = False

    def candidates(o):
        nonlocal ambiguous
        nbrs = [placed[q] for q in _adjacent(o, placed)]
        out = []
        for c in pool:
            if c in used:
                continue
            opts = [x for x in dict.fromkeys((c, c[::-1]))
                    if all(_pair_ok(line, x, L, comp) for line in nbrs)]
            if len(opts) > 1:
                ambiguous = True
            if opts:
                out.append(opts[0])
        return out

    def search(k: int) -> bool:
        nonlocal nodes, best
        if k == len(order):
            return True
        o = order[k]
        for x in candidates(o):
            nodes += 1
            if nodes > p.tile_budget:
                return False
            placed[o] = x
            used.add(canonical(x))
            if len(placed) > len(best):
                best = dict(placed)
            if search(k + 1):
                return True
            del placed[o]
            used.discard(canonical(x))
        return False

    ok = search(1)
    lines = placed if ok else best
    return TileResult(_lines_to_piece(lines, d, M), dict(lines), ok, ambiguous, nodes)


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------

@dataclass
class TrialDiagnostics:
    short_n: int = 0
    long_n: int = 0
    short_small: int = 0
    long_small: int = 0
    seed_word: Optional[str] = None
    tile_nodes: int = 0
    lines_placed: int = 0
    ambiguous: bool = False
    failure: Optional[str] = None
    phase_seconds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def reconstruct_box(src_pair: Sequence[ObservationSource], p: Params,
                    d: Optional[int] = None) -> tuple[PartialScenery, TrialDiagnostics]:
    """Run phases 1 and 2 at both levels, then seed and tile.

    Failures are not raised; they are recorded in ``diag.failure`` as
    ``"phase k: reason"`` and the (possibly empty) partial output is returned.
    """
    src_n, src_small = src_pair
    d = d or src_n.d
    diag = TrialDiagnostics()
    out = PartialScenery.empty(Box.centered(d, p.radius))
    clock = time.perf_counter
    try:
        t = clock()
        short_n = phase1_short_words(src_n, p.L, p.T1, p.T2)
        short_s = phase1_short_words(src_small, p.L_small, p.T1_small, p.T2_small)
        diag.short_n, diag.short_small = len(short_n.canonical()), len(short_s.canonical())
        diag.phase_seconds["1"] = clock() - t
        t = clock()
        long_n = phase2_long_words(short_n, p.M, p.max_long)
        long_s = phase2_long_words(short_s, p.M_small, p.max_long)
        diag.long_n, diag.long_small = len(long_n.canonical()), len(long_s.canonical())
        diag.phase_seconds["2"] = clock() - t
        t = clock()
        seed = phase3_seed(long_n, long_s, p, d)
        diag.seed_word = seed.word
        diag.phase_seconds["3"] = clock() - t
        t = clock()
        res = phase4_tile(seed, long_n, src_n, p, d)
        diag.phase_seconds["4"] = clock() - t
        diag.tile_nodes, diag.lines_placed, diag.ambiguous = res.nodes, len(res.lines), res.ambiguous
        out = res.piece
        if not res.complete:
            raise TilingConflict(f"{len(res.lines)} of {(2 * p.radius + 1) ** (d - 1)} lines placed",
                                 partial=res.piece)
        if res.ambiguous and p.strict:
            raise PhaseError(4, "ambiguous-orientation")
    except PhaseError as err:
        diag.failure = str(err)
    return out, diag


# ---------------------------------------------------------------------------
# stitching
# ---------------------------------------------------------------------------

def _canonical_key(arr: np.ndarray) -> bytes:
    d = arr.ndim
    best = None
    for g in linear_isometries(d):
        img = np.ascontiguousarray(_image_array(g, arr))
        b = img.tobytes()
        if best is None or b < best:
            best = b
    return best


def _image_array(g: Isometry, arr: np.ndarray) -> np.ndarray:
    out = np.transpose(arr, g.perm)
    flips = tuple(i for i, s in enumerate(g.signs) if s < 0)
    return np.flip(out, axis=flips) if flips else out


def _sub_boxes(box: Box, side: int):
    ranges = [range(l, h - side + 2) for l, h in zip(box.lo, box.hi)]
    for lo in itertools.product(*ranges):
        yield Box(lo, tuple(v + side - 1 for v in lo))


def _merge(base: PartialScenery, top: PartialScenery) -> PartialScenery:
    lo = tuple(min(a, b) for a, b in zip(base.box.lo, top.box.lo))
    hi = tuple(max(a, b) for a, b in zip(base.box.hi, top.box.hi))
    box = Box(lo, hi)
    arr = np.full(box.shape, UNDEFINED, dtype=np.int16)
    for piece in (base, top):
        sl = box.slices(piece.box)
        view = arr[sl]
        mask = piece.colors != UNDEFINED
        view[mask] = piece.colors[mask]
    return PartialScenery(box, arr)


@dataclass
class StitchStep:
    level: int
    matched: bool
    isometry: Optional[Isometry]
    overlap: Optional[Box]


def stitch_levels(pieces: Sequence[PartialScenery], levels: Optional[Sequence[int]] = None,
                  return_log: bool = False):
    """Chain pieces of increasing level into one assembly.

    Piece k is moved by the first isometry (in scan order of the assembly's
    sub-boxes of side ``ceil(sqrt(n_k))``) under which one of its own sub-boxes
    coincides with that assembly sub-box.  It is then written over the
    assembly.  Without a match the assembly is dropped and piece k is centred.
    """
    if not pieces:
        raise InvalidParameter("nothing to stitch")
    if levels is None:
        levels = [(min(pc.box.shape) - 1) // 4 or 1 for pc in pieces]
    if len(levels) != len(pieces) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidParameter("levels must be strictly increasing, one per piece")
    assembly = pieces[0].recentered()
    log = [StitchStep(levels[0], False, None, None)]
    for piece, n in zip(pieces[1:], levels[1:]):
        side = math.ceil(math.sqrt(n))
        if not piece.is_total():
            raise InvalidParameter("pieces must be totally defined")
        if side > min(piece.box.shape):
            raise InvalidParameter(f"piece smaller than overlap side {side}")
        index: dict = {}
        for sb in _sub_boxes(piece.box, side):
            key = _canonical_key(piece.colors[piece.box.slices(sb)])
            index.setdefault(key, sb)
        hit = None
        if side <= min(assembly.box.shape):
            for ab in _sub_boxes(assembly.box, side):
                patch = assembly.colors[assembly.box.slices(ab)]
                if (patch == UNDEFINED).any():
                    continue
                sb = index.get(_canonical_key(patch))
                if sb is None:
                    continue
                iso = find_equivalence(piece.restrict(sb), assembly.restrict(ab))
                if iso is not None:
                    hit = (iso, ab)
                    break
        if hit is None:
            assembly = piece.recentered()
            log.append(StitchStep(n, False, None, None))
        else:
            iso, ab = hit
            assembly = _merge(assembly, apply_isometry(iso, piece))
            log.append(StitchStep(n, True, iso, ab))
    return (assembly, log) if return_log else assembly
