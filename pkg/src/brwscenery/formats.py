"""Plain-text serialisation of sceneries and partial sceneries.

Header (one line, five fields)::

    d kappa center radius seed

``center`` is a comma list and ``radius`` an integer for cubes.  Boxes that
are not cubes with a lattice centre write ``lo..hi`` (comma lists) in the
centre field and ``-`` as radius.  ``kappa`` and ``seed`` are ``-`` when
absent (partial pieces carry no kappa).

Body for d = 2: one line per row, top row first (largest second coordinate),
one character per cell (``0-9a-z``, ``?`` for undefined).  Otherwise one
``z1,...,zd: c`` line per cell in C order of the colour array.
"""

from __future__ import annotations

from typing import TextIO, Union

import numpy as np

from .errors import InvalidParameter
from .lattice import ALPHABET, UNDEFINED, Box, PartialScenery, Scenery

_CH = {ch: i for i, ch in enumerate(ALPHABET)}


def _ch(c: int) -> str:
    return "?" if c == UNDEFINED else ALPHABET[c]


def _val(ch: str) -> int:
    if ch == "?":
        return UNDEFINED
    if ch not in _CH:
        raise InvalidParameter(f"bad colour character {ch!r}")
    return _CH[ch]


def _csv(p) -> str:
    return ",".join(str(int(v)) for v in p)


def _box_fields(box: Box) -> tuple[str, str]:
    shape = box.shape
    if len(set(shape)) == 1 and shape[0] % 2 == 1:
        return _csv(box.center), str(box.radius)
    return f"{_csv(box.lo)}..{_csv(box.hi)}", "-"


def dumps(piece: PartialScenery) -> str:
    kappa = str(piece.kappa) if isinstance(piece, Scenery) else "-"
    seed = "-"
    if isinstance(piece, Scenery) and piece.seed is not None:
        seed = str(piece.seed)
    centre, radius = _box_fields(piece.box)
    lines = [f"{piece.d} {kappa} {centre} {radius} {seed}"]
    if piece.d == 2:
        for col in piece.colors.T[::-1]:
            lines.append("".join(_ch(int(c)) for c in col))
    else:
        for z, c in zip(piece.box.coords(), piece.colors.ravel()):
            lines.append(f"{_csv(z)}: {_ch(int(c))}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Union[Scenery, PartialScenery]:
    lines = text.splitlines()
    if not lines:
        raise InvalidParameter("empty scenery text")
    head = lines[0].split()
    if len(head) != 5:
        raise InvalidParameter("header must have five fields: d kappa center radius seed")
    d = int(head[0])
    if head[3] == "-":
        lo_s, hi_s = head[2].split("..")
        box = Box(tuple(int(v) for v in lo_s.split(",")), tuple(int(v) for v in hi_s.split(",")))
    else:
        box = Box.cube(tuple(int(v) for v in head[2].split(",")), int(head[3]))
    if box.d != d:
        raise InvalidParameter("header dimension disagrees with the box")
    body = lines[1:]
    if d == 2:
        w, h = box.shape
        if len(body) != h or any(len(r) != w for r in body):
            raise InvalidParameter(f"expected {h} rows of width {w}")
        grid = np.array([[_val(ch) for ch in r] for r in body], dtype=np.int16)
        arr = grid[::-1].T
    else:
        if len(body) != box.size:
            raise InvalidParameter(f"expected {box.size} cell lines")
        arr = np.empty(box.size, dtype=np.int16)
        coords = box.coords()
        for k, line in enumerate(body):
            z, c = line.split(":")
            if tuple(int(v) for v in z.split(",")) != tuple(int(v) for v in coords[k]):
                raise InvalidParameter(f"cell line {k + 2} out of order")
            arr[k] = _val(c.strip())
        arr = arr.reshape(box.shape)
    if head[1] == "-":
        return PartialScenery(box, arr)
    seed = None if head[4] == "-" else int(head[4])
    return Scenery(box, arr, kappa=int(head[1]), seed=seed)


def save(piece: PartialScenery, fh: TextIO) -> None:
    fh.write(dumps(piece))


def load(fh: TextIO) -> Union[Scenery, PartialScenery]:
    return loads(fh.read())
