"""Branching random walk on Z^d and its coloured genealogical tree."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, TextIO

import numpy as np

from . import _kernels
from .errors import InvalidParameter, OutOfBounds
from .lattice import Box, Scenery, unit_vectors


@dataclass(frozen=True)
class SimLimits:
    max_particles: int
    horizon: int

    def __post_init__(self):
        if self.max_particles < 1 or self.horizon < 0:
            raise InvalidParameter("max_particles must be >= 1 and horizon >= 0")


@dataclass(frozen=True, eq=False)
class ObservationTree:
    """Nodes are numbered generation by generation; node 0 is the root.

    ``parent[0] == -1``.  ``gen_start[t]:gen_start[t+1]`` are the ids of
    generation t.  The walkers' positions are kept in ``_positions`` and are
    read only through :func:`hidden_positions`.
    """

    parent: np.ndarray
    generation: np.ndarray
    color: np.ndarray
    gen_start: np.ndarray
    b: float
    horizon: int
    kappa: int
    d: int
    truncated: bool = False
    _positions: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("parent", "generation", "color", "gen_start"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    def population(self) -> np.ndarray:
        """``N_t`` for t = 0..horizon."""
        return np.diff(self.gen_start)

    def generation_ids(self, t: int) -> np.ndarray:
        return np.arange(self.gen_start[t], self.gen_start[t + 1])


def hidden_positions(tree: ObservationTree) -> np.ndarray:
    """Walker positions, ``(n_nodes, d)``.  For oracles and diagnostics only."""
    if tree._positions is None:
        raise InvalidParameter("tree was loaded without positions")
    return tree._positions


def expected_population(b: float, t: int) -> float:
    if not 0 <= b <= 1 or t < 0:
        raise InvalidParameter("need 0 <= b <= 1 and t >= 0")
    return (1.0 + b) ** t


def simulate_brw(scenery: Scenery, b: float, limits: SimLimits, seed) -> ObservationTree:
    """Run the walk from one particle at the origin for ``limits.horizon`` ticks.

    Each tick every particle first splits in two with probability ``b``, then
    every particle steps to a uniform neighbour.  If a generation would exceed
    ``max_particles`` a uniform subsample (without replacement, kept in id
    order) survives and ``truncated`` is set.
    """
    if not 0 <= b <= 1:
        raise InvalidParameter("branching probability must lie in [0, 1]")
    d = scenery.d
    T = limits.horizon
    if not scenery.box.contains_box(Box.centered(d, T)):
        raise OutOfBounds(f"scenery {scenery.box} does not contain K({T})")
    rng = np.random.Generator(np.random.PCG64(seed))
    units = np.array(unit_vectors(d), dtype=np.int64)
    lo = np.asarray(scenery.box.lo)

    pos = np.zeros((1, d), dtype=np.int64)
    ids = np.zeros(1, dtype=np.int64)
    parents = [np.array([-1], dtype=np.int64)]
    positions = [pos]
    gen_start = [0, 1]
    truncated = False
    next_id = 1
    for _ in range(T):
        n = len(ids)
        split = rng.random(n) < b
        reps = 1 + split.astype(np.int64)
        par = np.repeat(ids, reps)
        ppos = np.repeat(pos, reps, axis=0)
        steps = rng.integers(0, 2 * d, size=len(par))
        cpos = ppos + units[steps]
        if len(par) > limits.max_particles:
            keep = np.sort(rng.choice(len(par), size=limits.max_particles, replace=False))
            par, cpos = par[keep], cpos[keep]
            truncated = True
        ids = np.arange(next_id, next_id + len(par), dtype=np.int64)
        next_id += len(par)
        pos = cpos
        parents.append(par)
        positions.append(cpos)
        gen_start.append(next_id)

    all_pos = np.concatenate(positions)
    idx = tuple((all_pos - lo).T)
    colors = scenery.colors[idx].astype(np.int64)
    generation = np.repeat(np.arange(T + 1), np.diff(gen_start))
    return ObservationTree(
        parent=np.concatenate(parents),
        generation=generation,
        color=colors,
        gen_start=np.asarray(gen_start),
        b=float(b),
        horizon=T,
        kappa=scenery.kappa,
        d=d,
        truncated=truncated,
        _positions=all_pos,
    )


class VisitStats(NamedTuple):
    min_visits: int
    mean_visits: float
    unvisited: int
    counts: np.ndarray


def visit_statistics(tree: ObservationTree, window: Box) -> VisitStats:
    """Per-site visit counts over all generations, restricted to ``window``."""
    pos = hidden_positions(tree)
    rel = pos - np.asarray(window.lo)
    inside = ((rel >= 0) & (rel < np.asarray(window.shape))).all(axis=1)
    flat = np.full(len(pos), -1, dtype=np.int64)
    if inside.any():
        flat[inside] = np.ravel_multi_index(tuple(rel[inside].T), window.shape)
    counts = _kernels.count_visits(flat, window.size).reshape(window.shape)
    return VisitStats(int(counts.min()), float(counts.mean()), int((counts == 0).sum()), counts)


def dump_tree(tree: ObservationTree, fh: TextIO, with_positions: bool = False) -> None:
    """One node per line: ``id parent gen color [x1,..,xd]``.

    The header line records ``d kappa b horizon truncated``.
    """
    fh.write(f"# {tree.d} {tree.kappa} {tree.b!r} {tree.horizon} {int(tree.truncated)}\n")
    pos = hidden_positions(tree) if with_positions else None
    for i in range(tree.n_nodes):
        line = f"{i} {tree.parent[i]} {tree.generation[i]} {tree.color[i]}"
        if pos is not None:
            line += " " + ",".join(str(int(v)) for v in pos[i])
        fh.write(line + "\n")


def load_tree(fh: TextIO) -> ObservationTree:
    header = fh.readline().split()
    if not header or header[0] != "#":
        raise InvalidParameter("missing tree header")
    d, kappa, b, horizon, trunc = int(header[1]), int(header[2]), float(header[3]), int(header[4]), bool(int(header[5]))
    parent, gen, color, pos = [], [], [], []
    for k, line in enumerate(fh):
        parts = line.split()
        if not parts:
            continue
        if int(parts[0]) != k:
            raise InvalidParameter(f"node ids must be consecutive (line {k + 2})")
        parent.append(int(parts[1]))
        gen.append(int(parts[2]))
        color.append(int(parts[3]))
        if len(parts) > 4:
            pos.append([int(v) for v in parts[4].split(",")])
    gen_arr = np.asarray(gen, dtype=np.int64)
    gen_start = np.searchsorted(gen_arr, np.arange(horizon + 2))
    positions = np.asarray(pos, dtype=np.int64) if len(pos) == len(parent) and pos else None
    return ObservationTree(
        parent=np.asarray(parent), generation=gen_arr, color=np.asarray(color),
        gen_start=gen_start, b=b, horizon=horizon, kappa=kappa, d=d,
        truncated=trunc, _positions=positions,
    )
