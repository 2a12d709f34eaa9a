"""Seeded trials and parameter sweeps.

Seeding rule: a trial seed ``s`` is expanded with ``numpy.random.SeedSequence(s)``
into independent child streams (scenery, walk).  In a sweep the seed of trial
``i`` is ``SeedSequence([base_seed, i])``'s first 32-bit word, so it does not
depend on which grid cell the trial belongs to: every cell sees the same
sceneries (common random numbers) and editing one grid axis leaves the
results of the remaining cells untouched.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .brw import SimLimits, simulate_brw
from .errors import ConfigError, InvalidParameter
from .lattice import Box, generate_scenery
from .observations import coverage_source, tree_source
from .oracle import (check_diamond_property, check_patch_uniqueness, check_two_path_property,
                     check_word_uniqueness, verify_reconstruction)
from .reconstruct import Params, reconstruct_box

BACKENDS = ("coverage", "brw")
REPORT_SCHEMA = 1


def default_out_dir() -> str:
    return os.environ.get("BRWSCENERY_OUT_DIR", ".")


@dataclass(frozen=True)
class TrialConfig:
    d: int = 2
    kappa: int = 5
    b: float = 0.5
    n: int = 2
    L: Optional[int] = None
    M: Optional[int] = None
    T1: Optional[int] = None
    T2: Optional[int] = None
    L_small: Optional[int] = None
    M_small: Optional[int] = None
    backend: str = "coverage"
    r_small: Optional[int] = None
    r_big: Optional[int] = None
    max_particles: int = 200_000
    check_patches: bool = True
    tile_budget: int = 20_000
    max_long: int = 2_000_000

    def params(self) -> Params:
        return Params(n=self.n, L=self.L, M=self.M, T1=self.T1, T2=self.T2,
                      L_small=self.L_small, M_small=self.M_small,
                      T1_small=self.T1, T2_small=self.T2,
                      max_long=self.max_long, tile_budget=self.tile_budget)

    def windows(self, p: Params) -> tuple[int, int]:
        """Radii of the small- and big-level windows."""
        if self.backend == "brw":
            return p.T1, p.T2
        rs = self.r_small
        if rs is None:
            rs = math.ceil((p.M_small + 2 * p.L_small - 1) / 2)
        rb = self.r_big
        if rb is None:
            rb = rs + p.radius + p.L
        return rs, rb

    def validate(self) -> Params:
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if not 1 <= self.kappa <= 36:
            raise ConfigError("kappa must lie in 1..36")
        if not 0 <= self.b <= 1:
            raise ConfigError("b must lie in [0, 1]")
        try:
            p = self.params()
        except InvalidParameter as err:
            raise ConfigError(str(err)) from err
        rs, rb = self.windows(p)
        if rs > rb:
            raise ConfigError(f"small window K({rs}) exceeds big window K({rb})")
        if self.backend == "coverage" and rb < p.radius:
            raise ConfigError(f"window K({rb}) smaller than the output box K({p.radius})")
        return p


def derive_seeds(seed: int) -> dict:
    kids = np.random.SeedSequence(int(seed)).spawn(2)
    return {"scenery": int(kids[0].generate_state(1)[0]), "walk": int(kids[1].generate_state(1)[0])}


def trial_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


@dataclass
class TrialReport:
    config: dict
    seed: int
    backend: str
    events: dict
    event_violations: dict
    diagnostics: dict
    success: bool
    witness: Optional[dict]
    observed_strings: int
    truncated: bool = False
    error: Optional[str] = None
    wall_time: float = 0.0
    schema: int = REPORT_SCHEMA

    def all_events(self, names: Sequence[str] = ("B3", "B4", "C1")) -> bool:
        return all(self.events.get(k) for k in names)

    def to_dict(self, timing: bool = False) -> dict:
        out = asdict(self)
        if not timing:
            out.pop("wall_time")
            out["diagnostics"] = {k: v for k, v in out["diagnostics"].items() if k != "phase_seconds"}
        return out

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True)


def run_events(scenery, cfg: TrialConfig, p: Params, rs: int, rb: int) -> tuple[dict, dict]:
    """Event checks on the windows used by the trial.

    B3 and B4 are checked at both levels on their own windows.  C1 is checked
    at length L-1, the overlap length used to chain short words.
    """
    d = cfg.d
    big, small = Box.centered(d, rb), Box.centered(d, rs)
    reps = {
        "B3": [check_diamond_property(scenery, big, big, p.L),
               check_diamond_property(scenery, small, small, p.L_small)],
        "B4": [check_two_path_property(scenery, big, p.L),
               check_two_path_property(scenery, small, p.L_small)],
        "C1": [check_word_uniqueness(scenery, big, max(p.L - 1, 1)),
               check_word_uniqueness(scenery, small, max(p.L_small - 1, 1))],
    }
    if cfg.check_patches:
        reps["G"] = [check_patch_uniqueness(scenery, cfg.n)]
    events = {k: all(r.passed for r in v) for k, v in reps.items()}
    counts = {k: sum(r.n_violations for r in v) for k, v in reps.items()}
    return events, counts


def run_trial(cfg: TrialConfig, seed: int) -> TrialReport:
    t0 = time.perf_counter()
    p = cfg.validate()
    rs, rb = cfg.windows(p)
    seeds = derive_seeds(seed)
    d = cfg.d
    radius = max(rb, 2 * cfg.n + 2 if cfg.check_patches else 0)
    scenery = generate_scenery(Box.centered(d, radius), cfg.kappa, seeds["scenery"])
    truncated = False
    if cfg.backend == "coverage":
        src_n = coverage_source(scenery, Box.centered(d, rb), 3 * p.L)
        src_s = coverage_source(scenery, Box.centered(d, rs), 3 * p.L_small)
    else:
        tree = simulate_brw(scenery, cfg.b, SimLimits(cfg.max_particles, p.T2), seeds["walk"])
        truncated = tree.truncated
        src_n = src_s = tree_source(tree)
    events, counts = run_events(scenery, cfg, p, rs, rb)
    out, diag = reconstruct_box((src_n, src_s), p, d)
    # in the brw backend the small level reads the same tree with its own times
    wit = None
    if diag.failure is None:
        hit = verify_reconstruction(out, scenery, rs)
        if hit is not None:
            x, iso = hit
            wit = {"x": list(x), "perm": list(iso.perm), "signs": list(iso.signs),
                   "translation": list(iso.translation)}
    n_obs = src_n.count_observed(p.L, p.T2)
    return TrialReport(
        config=asdict(cfg), seed=int(seed), backend=cfg.backend, events=events,
        event_violations=counts, diagnostics=diag.to_dict(), success=wit is not None,
        witness=wit, observed_strings=n_obs, truncated=truncated,
        wall_time=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

GRID_AXES = ("d", "kappa", "b", "L", "M", "T1", "T2", "backend")


@dataclass(frozen=True)
class SweepConfig:
    grid: dict
    trials: int = 1
    base_seed: int = 0
    base: TrialConfig = field(default_factory=TrialConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trial count must be >= 1")
        for k, v in self.grid.items():
            if k not in GRID_AXES:
                raise ConfigError(f"unknown grid axis {k!r}")
            if not v:
                raise ConfigError(f"grid axis {k!r} is empty")

    def cells(self) -> list[TrialConfig]:
        keys = sorted(self.grid)
        return [replace(self.base, **dict(zip(keys, vals)))
                for vals in itertools.product(*(self.grid[k] for k in keys))]


CSV_FIELDS = ["cell", "trial", "seed", "d", "kappa", "b", "n", "L", "M", "T1", "T2", "backend",
              "B3", "B4", "C1", "G", "events_pass", "success", "failure", "short_n", "long_n",
              "observed_strings", "truncated", "error"]


def _row(cell: int, trial: int, rep: TrialReport, p: Params) -> dict:
    c = rep.config
    return {
        "cell": cell, "trial": trial, "seed": rep.seed, "d": c["d"], "kappa": c["kappa"],
        "b": c["b"], "n": c["n"], "L": p.L, "M": p.M, "T1": p.T1, "T2": p.T2,
        "backend": rep.backend,
        **{k: int(bool(rep.events.get(k))) if k in rep.events else "" for k in ("B3", "B4", "C1", "G")},
        "events_pass": int(rep.all_events()), "success": int(rep.success),
        "failure": rep.diagnostics.get("failure") or "",
        "short_n": rep.diagnostics.get("short_n", 0), "long_n": rep.diagnostics.get("long_n", 0),
        "observed_strings": rep.observed_strings, "truncated": int(rep.truncated),
        "error": rep.error or "",
    }


def _safe_trial(args) -> TrialReport:
    cfg, seed = args
    try:
        return run_trial(cfg, seed)
    except ConfigError:
        raise
    except Exception as err:  # recorded in the cell, sweep continues
        return TrialReport(config=asdict(cfg), seed=int(seed), backend=cfg.backend, events={},
                           event_violations={}, diagnostics={}, success=False, witness=None,
                           observed_strings=0, error=f"{type(err).__name__}: {err}")


def run_sweep(sweep: SweepConfig, jobs: int = 1) -> tuple[list[dict], list[dict]]:
    """Run every cell x trial; return (rows, per-cell summaries)."""
    cells = sweep.cells()
    params = [c.validate() for c in cells]
    work = [(ci, t, cells[ci], trial_seed(sweep.base_seed, t))
            for ci in range(len(cells)) for t in range(sweep.trials)]
    args = [(cfg, s) for _, _, cfg, s in work]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_safe_trial, args))
    else:
        reports = [_safe_trial(a) for a in args]
    rows = [_row(ci, t, rep, params[ci]) for (ci, t, _, _), rep in zip(work, reports)]
    summary = []
    for ci, cfg in enumerate(cells):
        rs = [r for r in rows if r["cell"] == ci]
        ev = [r for r in rs if r["events_pass"]]
        summary.append({
            "cell": ci,
            "config": {k: getattr(cfg, k) for k in GRID_AXES},
            "trials": len(rs),
            "success_rate": float(np.mean([r["success"] for r in rs])),
            "event_pass_rate": {k: float(np.mean([r[k] == 1 for r in rs])) for k in ("B3", "B4", "C1", "G")},
            "all_events_pass": len(ev),
            "success_given_events": (float(np.mean([r["success"] for r in ev])) if ev else None),
            "mean_observed_strings": float(np.mean([r["observed_strings"] for r in rs])),
            "errors": sum(1 for r in rs if r["error"]),
        })
    return rows, summary


def write_sweep(rows: list[dict], summary: list[dict], out_dir: str, stem: str = "sweep") -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}_summary.json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        w.writerows(rows)
    with open(json_path, "w") as fh:
        json.dump({"schema": REPORT_SCHEMA, "cells": summary}, fh, indent=2, sort_keys=True)
    return csv_path, json_path
