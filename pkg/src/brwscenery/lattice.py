"""Lattice geometry on Z^d: boxes, sceneries, straight words and isometries.

Points are plain integer tuples ``(x_1, ..., x_d)``.  Colour arrays are indexed
``colors[x_1 - lo_1, ..., x_d - lo_d]`` so axis 0 is the first coordinate.
Colours are small integers; when a colour string is needed (words, keys) each
colour is written as one character of :data:`ALPHABET`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidParameter, OutOfBounds, ShapeMismatch

ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_KAPPA = len(ALPHABET)
UNDEFINED = -1

Point = tuple


def encode(colors: Sequence[int]) -> str:
    return "".join(ALPHABET[int(c)] for c in colors)


def decode(s: str) -> list[int]:
    try:
        return [ALPHABET.index(ch) for ch in s]
    except ValueError:
        raise InvalidParameter(f"not a colour string: {s!r}") from None


def canonical(s: str) -> str:
    """Orientation-free key of a word: the smaller of it and its reverse."""
    r = s[::-1]
    return s if s <= r else r


def unit_vectors(d: int) -> list[Point]:
    """Canonical unit vectors in the order +e1, -e1, +e2, -e2, ..."""
    out = []
    for i in range(d):
        for sgn in (1, -1):
            v = [0] * d
            v[i] = sgn
            out.append(tuple(v))
    return out


def is_unit_vector(v: Sequence[int]) -> bool:
    return sum(abs(int(c)) for c in v) == 1 and all(abs(int(c)) <= 1 for c in v)


def l1(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(abs(int(x) - int(y)) for x, y in zip(a, b))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]`` (inclusive)."""

    lo: Point
    hi: Point

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise InvalidParameter("box corners must have equal positive length")
        if any(h < l for l, h in zip(lo, hi)):
            raise InvalidParameter(f"empty box {lo}..{hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, center: Sequence[int], radius: int) -> "Box":
        if radius < 0:
            raise InvalidParameter("radius must be nonnegative")
        c = tuple(int(v) for v in center)
        return cls(tuple(v - radius for v in c), tuple(v + radius for v in c))

    @classmethod
    def centered(cls, d: int, radius: int) -> "Box":
        return cls.cube((0,) * d, radius)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def center(self) -> Point:
        if any(s % 2 == 0 for s in self.shape):
            raise InvalidParameter(f"box {self} has no lattice centre")
        return tuple((l + h) // 2 for l, h in zip(self.lo, self.hi))

    @property
    def radius(self) -> int:
        sides = set(self.shape)
        if len(sides) != 1 or self.shape[0] % 2 == 0:
            raise InvalidParameter(f"box {self} is not a cube with a centre")
        return (self.shape[0] - 1) // 2

    def contains(self, z: Sequence[int]) -> bool:
        return all(l <= int(v) <= h for v, l, h in zip(z, self.lo, self.hi))

    def contains_box(self, other: "Box") -> bool:
        return self.contains(other.lo) and self.contains(other.hi)

    def intersect(self, other: "Box") -> Optional["Box"]:
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(h < l for l, h in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def points(self) -> Iterator[Point]:
        return itertools.product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))

    def coords(self) -> np.ndarray:
        """All points as an ``(size, d)`` array in C order of the colour array."""
        idx = np.indices(self.shape).reshape(self.d, -1).T
        return idx + np.asarray(self.lo)

    def slices(self, inner: "Box") -> tuple:
        """Index slices selecting ``inner`` from an array laid out on ``self``."""
        if not self.contains_box(inner):
            raise OutOfBounds(f"{inner} not inside {self}")
        return tuple(slice(a - l, b - l + 1) for a, b, l in zip(inner.lo, inner.hi, self.lo))

    def translate(self, t: Sequence[int]) -> "Box":
        return Box(tuple(a + int(b) for a, b in zip(self.lo, t)),
                   tuple(a + int(b) for a, b in zip(self.hi, t)))


@dataclass(frozen=True, eq=False)
class PartialScenery:
    """A colouring of some points of a box; ``UNDEFINED`` marks holes."""

    box: Box
    colors: np.ndarray

    def __post_init__(self):
        arr = np.array(self.colors, dtype=np.int16)
        if arr.shape != self.box.shape:
            raise ShapeMismatch(f"colour array {arr.shape} does not match box {self.box.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "colors", arr)

    @classmethod
    def empty(cls, box: Box) -> "PartialScenery":
        return cls(box, np.full(box.shape, UNDEFINED, dtype=np.int16))

    @classmethod
    def from_dict(cls, cells: dict, box: Optional[Box] = None) -> "PartialScenery":
        pts = np.array(list(cells.keys()), dtype=np.int64)
        if box is None:
            box = Box(tuple(pts.min(0)), tuple(pts.max(0)))
        arr = np.full(box.shape, UNDEFINED, dtype=np.int16)
        for z, c in cells.items():
            if not box.contains(z):
                raise OutOfBounds(f"{z} outside {box}")
            arr[tuple(int(a) - l for a, l in zip(z, box.lo))] = c
        return cls(box, arr)

    def __eq__(self, other):
        if not isinstance(other, PartialScenery):
            return NotImplemented
        return self.box == other.box and np.array_equal(self.colors, other.colors)

    def __hash__(self):
        return hash((self.box, self.colors.tobytes()))

    @property
    def d(self) -> int:
        return self.box.d

    def is_total(self) -> bool:
        return bool((self.colors != UNDEFINED).all())

    def n_defined(self) -> int:
        return int((self.colors != UNDEFINED).sum())

    def get(self, z: Sequence[int]) -> Optional[int]:
        if not self.box.contains(z):
            return None
        c = int(self.colors[tuple(int(a) - l for a, l in zip(z, self.box.lo))])
        return None if c == UNDEFINED else c

    def as_dict(self) -> dict:
        out = {}
        for z, c in zip(self.box.coords(), self.colors.ravel()):
            if c != UNDEFINED:
                out[tuple(int(v) for v in z)] = int(c)
        return out

    def restrict(self, box: Box) -> "PartialScenery":
        return PartialScenery(box, self.colors[self.box.slices(box)])

    def translate(self, t: Sequence[int]) -> "PartialScenery":
        return PartialScenery(self.box.translate(t), self.colors)

    def recentered(self) -> "PartialScenery":
        """The same piece moved so its box centre sits at the origin."""
        c = self.box.center
        return self.translate(tuple(-v for v in c))


@dataclass(frozen=True, eq=False)
class Scenery(PartialScenery):
    """A total colouring of a box with colours ``0..kappa-1``."""

    kappa: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        super().__post_init__()
        if self.kappa < 1 or self.kappa > MAX_KAPPA:
            raise InvalidParameter(f"kappa must lie in 1..{MAX_KAPPA}")
        if (self.colors < 0).any() or (self.colors >= self.kappa).any():
            raise InvalidParameter("scenery colours must lie in 0..kappa-1")

    def __eq__(self, other):
        if not isinstance(other, Scenery):
            return NotImplemented
        return (self.kappa == other.kappa and self.seed == other.seed
                and PartialScenery.__eq__(self, other))

    __hash__ = PartialScenery.__hash__

    @classmethod
    def from_rows(cls, rows: Sequence[str], kappa: int = 10,
                  origin: Sequence[int] = (0, 0)) -> "Scenery":
        """Build a 2-d scenery from display rows (top row has the largest y)."""
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ShapeMismatch("rows must have equal length")
        grid = np.array([decode(r) for r in rows], dtype=np.int16)
        arr = grid[::-1].T
        lo = tuple(int(v) for v in origin)
        box = Box(lo, (lo[0] + width - 1, lo[1] + len(rows) - 1))
        return cls(box, arr, kappa=kappa)

    def rows(self) -> list[str]:
        if self.d != 2:
            raise InvalidParameter("rows() is only defined for d=2")
        return [encode(col) for col in self.colors.T[::-1]]

    def color(self, z: Sequence[int]) -> int:
        if not self.box.contains(z):
            raise OutOfBounds(f"{tuple(z)} outside {self.box}")
        return int(self.colors[tuple(int(a) - l for a, l in zip(z, self.box.lo))])

    def window(self, box: Box) -> "Scenery":
        return Scenery(box, self.colors[self.box.slices(box)], kappa=self.kappa, seed=self.seed)


def generate_scenery(box: Box, kappa: int, seed: int) -> Scenery:
    """I.i.d. uniform colouring of ``box`` drawn from ``numpy``'s PCG64 stream."""
    if kappa < 1:
        raise InvalidParameter("kappa must be >= 1")
    if kappa > MAX_KAPPA:
        raise InvalidParameter(f"kappa must be <= {MAX_KAPPA}")
    rng = np.random.Generator(np.random.PCG64(seed))
    colors = rng.integers(0, kappa, size=box.shape, dtype=np.int16)
    return Scenery(box, colors, kappa=kappa, seed=seed)


@dataclass(frozen=True)
class Word:
    letters: str
    start: Optional[Point] = None
    direction: Optional[Point] = None

    def __len__(self):
        return len(self.letters)

    @property
    def anchored(self) -> bool:
        return self.start is not None

    @property
    def end(self) -> Point:
        k = len(self.letters) - 1
        return tuple(s + k * e for s, e in zip(self.start, self.direction))

    def points(self) -> list[Point]:
        return [tuple(s + j * e for s, e in zip(self.start, self.direction))
                for j in range(len(self.letters))]

    def reversed(self) -> "Word":
        if self.start is None:
            return Word(self.letters[::-1])
        return Word(self.letters[::-1], self.end, tuple(-e for e in self.direction))


def read_line(scenery: PartialScenery, start: Sequence[int], direction: Sequence[int],
              length: int) -> Word:
    if length < 1:
        raise InvalidParameter("length must be >= 1")
    if len(direction) != scenery.d or not is_unit_vector(direction):
        raise InvalidParameter(f"{tuple(direction)} is not a canonical unit vector")
    start = tuple(int(v) for v in start)
    direction = tuple(int(v) for v in direction)
    letters = []
    for j in range(length):
        z = tuple(s + j * e for s, e in zip(start, direction))
        c = scenery.get(z)
        if c is None:
            raise OutOfBounds(f"segment leaves the coloured region at {z}")
        letters.append(c)
    return Word(encode(letters), start, direction)


def enumerate_words(scenery: PartialScenery, window: Box, length: int) -> set[Word]:
    """All anchored straight reads of ``length`` inside ``window``, both directions."""
    if not scenery.box.contains_box(window):
        raise OutOfBounds(f"{window} not inside {scenery.box}")
    if length < 1:
        raise InvalidParameter("length must be >= 1")
    arr = scenery.colors[scenery.box.slices(window)]
    out: set[Word] = set()
    for axis in range(window.d):
        n = arr.shape[axis]
        if length > n:
            continue
        moved = np.moveaxis(arr, axis, -1)
        for a in range(n - length + 1):
            seg = moved[..., a:a + length]
            for idx in np.ndindex(seg.shape[:-1]):
                letters = encode(seg[idx])
                other = list(idx)
                start = [0] * window.d
                j = 0
                for ax in range(window.d):
                    if ax == axis:
                        start[ax] = window.lo[ax] + a
                    else:
                        start[ax] = window.lo[ax] + other[j]
                        j += 1
                e = [0] * window.d
                e[axis] = 1
                w = Word(letters, tuple(start), tuple(e))
                out.add(w)
                out.add(w.reversed())
    return out


def word_strings(scenery: PartialScenery, window: Box, length: int) -> set[str]:
    """Orientation-free string set of :func:`enumerate_words` (canonical keys)."""
    return {canonical(w.letters) for w in enumerate_words(scenery, window, length)}


@dataclass(frozen=True)
class Isometry:
    """``z -> signs * z[perm] + translation`` on Z^d (0-based ``perm``)."""

    perm: tuple
    signs: tuple
    translation: tuple

    def __post_init__(self):
        d = len(self.perm)
        if sorted(self.perm) != list(range(d)):
            raise InvalidParameter(f"{self.perm} is not a permutation")
        if len(self.signs) != d or any(s not in (1, -1) for s in self.signs):
            raise InvalidParameter("signs must be +-1, one per axis")
        if len(self.translation) != d:
            raise InvalidParameter("translation has the wrong dimension")
        object.__setattr__(self, "perm", tuple(int(p) for p in self.perm))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        object.__setattr__(self, "translation", tuple(int(t) for t in self.translation))

    @classmethod
    def identity(cls, d: int) -> "Isometry":
        return cls(tuple(range(d)), (1,) * d, (0,) * d)

    @property
    def d(self) -> int:
        return len(self.perm)

    @property
    def linear(self) -> "Isometry":
        return Isometry(self.perm, self.signs, (0,) * self.d)

    def is_identity(self) -> bool:
        return self == Isometry.identity(self.d)

    def __call__(self, z: Sequence[int]) -> Point:
        return tuple(s * int(z[p]) + t for p, s, t in zip(self.perm, self.signs, self.translation))

    def apply_array(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts)
        return pts[:, list(self.perm)] * np.asarray(self.signs) + np.asarray(self.translation)

    def compose(self, other: "Isometry") -> "Isometry":
        """``self o other`` (apply ``other`` first)."""
        perm = tuple(other.perm[p] for p in self.perm)
        signs = tuple(s * other.signs[p] for p, s in zip(self.perm, self.signs))
        trans = tuple(s * other.translation[p] + t
                      for p, s, t in zip(self.perm, self.signs, self.translation))
        return Isometry(perm, signs, trans)

    def inverse(self) -> "Isometry":
        d = self.d
        q = [0] * d
        for i, p in enumerate(self.perm):
            q[p] = i
        signs = tuple(self.signs[q[j]] for j in range(d))
        trans = tuple(-self.signs[q[j]] * self.translation[q[j]] for j in range(d))
        return Isometry(tuple(q), signs, trans)

    def with_translation(self, t: Sequence[int]) -> "Isometry":
        return Isometry(self.perm, self.signs, tuple(int(v) for v in t))


def linear_isometries(d: int) -> list[Isometry]:
    """The 2^d * d! signed permutations, identity first."""
    out = []
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            out.append(Isometry(perm, signs, (0,) * d))
    return out


def apply_isometry(iso: Isometry, piece: PartialScenery) -> PartialScenery:
    if iso.d != piece.d:
        raise ShapeMismatch("isometry and piece differ in dimension")
    pts = piece.box.coords()
    img = iso.apply_array(pts)
    lo = img.min(axis=0)
    hi = img.max(axis=0)
    box = Box(tuple(lo), tuple(hi))
    arr = np.full(box.shape, UNDEFINED, dtype=np.int16)
    arr[tuple((img - lo).T)] = piece.colors.ravel()
    return PartialScenery(box, arr)


def _linear_image(iso: Isometry, piece: PartialScenery) -> np.ndarray:
    """Colour array of the image of ``piece`` under the linear part of ``iso``."""
    arr = np.transpose(piece.colors, iso.perm)
    flips = tuple(i for i, s in enumerate(iso.signs) if s < 0)
    if flips:
        arr = np.flip(arr, axis=flips)
    return arr


def find_equivalence(a: PartialScenery, b: PartialScenery) -> Optional[Isometry]:
    """An isometry carrying ``a`` onto ``b`` (box onto box), or ``None``."""
    if a.d != b.d:
        raise ShapeMismatch("pieces differ in dimension")
    if sorted(a.box.shape) != sorted(b.box.shape):
        raise ShapeMismatch(f"boxes {a.box.shape} and {b.box.shape} are not congruent")
    for g in linear_isometries(a.d):
        img = _linear_image(g, a)
        if img.shape != b.colors.shape or not np.array_equal(img, b.colors):
            continue
        corners = g.apply_array(np.array([a.box.lo, a.box.hi]))
        t = np.asarray(b.box.lo) - corners.min(axis=0)
        return g.with_translation(tuple(t))
    return None
