"""Command line entry point: ``brwscenery <command> [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from typing import Optional, Sequence

from . import formats
from .brw import SimLimits, dump_tree, simulate_brw
from .errors import SceneryError
from .harness import (BACKENDS, GRID_AXES, SweepConfig, TrialConfig, default_out_dir, derive_seeds,
                      run_events, run_sweep, run_trial, trial_seed, write_sweep)
from .lattice import Box, generate_scenery
from .observations import coverage_source, tree_source
from .reconstruct import reconstruct_box, stitch_levels

_TYPES = {"d": int, "kappa": int, "b": float, "n": int, "L": int, "M": int, "T1": int, "T2": int,
          "backend": str}


def _add_model(ap: argparse.ArgumentParser, lists: bool = False) -> None:
    g = ap.add_argument_group("model")
    for name in ("d", "kappa", "b", "n", "L", "M", "T1", "T2"):
        g.add_argument(f"--{name}", type=str if lists else _TYPES[name], default=None,
                       help="comma-separated grid" if lists and name in GRID_AXES else None)
    g.add_argument("--backend", default=None,
                   help=f"one of {', '.join(BACKENDS)}" + (" (comma list)" if lists else ""))
    g.add_argument("--L-small", dest="L_small", type=int, default=None)
    g.add_argument("--M-small", dest="M_small", type=int, default=None)
    g.add_argument("--no-patches", action="store_true", help="skip the patch-uniqueness event")
    g.add_argument("--seed", type=int, default=0)


def _config(args, **override) -> TrialConfig:
    kw = {}
    names = {f.name for f in fields(TrialConfig)}
    for k in names:
        v = override.get(k, getattr(args, k, None))
        if v is not None:
            kw[k] = v
    if getattr(args, "no_patches", False):
        kw["check_patches"] = False
    return TrialConfig(**kw)


def _out_path(args, default_name: str) -> str:
    out = args.out or os.path.join(default_out_dir(), default_name)
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return out


def _write_json(obj, path: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    seeds = derive_seeds(args.seed)
    radius = args.radius if args.radius is not None else args.horizon
    scenery = generate_scenery(Box.centered(cfg.d, radius), cfg.kappa, seeds["scenery"])
    tree = simulate_brw(scenery, cfg.b, SimLimits(args.max_particles, args.horizon), seeds["walk"])
    out = _out_path(args, "tree.txt")
    with open(out, "w") as fh:
        dump_tree(tree, fh, with_positions=args.oracle_dump)
    if args.scenery_out:
        with open(args.scenery_out, "w") as fh:
            formats.save(scenery, fh)
    print(f"{tree.n_nodes} nodes, horizon {tree.horizon}, truncated={tree.truncated} -> {out}")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    p = cfg.validate()
    rs, rb = cfg.windows(p)
    if args.scenery:
        with open(args.scenery) as fh:
            scenery = formats.load(fh)
    else:
        radius = max(rb, 2 * cfg.n + 2)
        scenery = generate_scenery(Box.centered(cfg.d, radius), cfg.kappa, derive_seeds(args.seed)["scenery"])
    if cfg.backend == "brw":
        tree = simulate_brw(scenery, cfg.b, SimLimits(cfg.max_particles, p.T2), derive_seeds(args.seed)["walk"])
        src_n = src_s = tree_source(tree)
    else:
        src_n = coverage_source(scenery, Box.centered(cfg.d, rb), 3 * p.L)
        src_s = coverage_source(scenery, Box.centered(cfg.d, rs), 3 * p.L_small)
    piece, diag = reconstruct_box((src_n, src_s), p, cfg.d)
    out = _out_path(args, "reconstruction.txt")
    with open(out, "w") as fh:
        formats.save(piece, fh)
    print(json.dumps(diag.to_dict(), sort_keys=True))
    return 0 if diag.failure is None else 1


def cmd_verify_events(args) -> int:
    cfg = _config(args)
    p = cfg.validate()
    rs, rb = cfg.windows(p)
    radius = max(rb, 2 * cfg.n + 2 if cfg.check_patches else 0)
    scenery = generate_scenery(Box.centered(cfg.d, radius), cfg.kappa, derive_seeds(args.seed)["scenery"])
    events, counts = run_events(scenery, cfg, p, rs, rb)
    _write_json({"seed": args.seed, "events": events, "violations": counts}, args.out)
    return 0


def cmd_trial(args) -> int:
    cfg = _config(args)
    cfg.validate()
    reports = []
    for i in range(args.trials):
        seed = args.seed if args.trials == 1 else trial_seed(args.seed, i)
        reports.append(run_trial(cfg, seed).to_dict(timing=args.timing))
    _write_json(reports[0] if len(reports) == 1 else reports, args.out)
    return 0


def _grid(args) -> dict:
    grid = {}
    for k in GRID_AXES:
        raw = getattr(args, k, None)
        if raw is None:
            continue
        grid[k] = [_TYPES[k](v) for v in str(raw).split(",") if v != ""]
    return grid


def cmd_sweep(args) -> int:
    base = TrialConfig(**{k: v for k, v in (("n", int(args.n) if args.n else None),
                                            ("L_small", args.L_small), ("M_small", args.M_small))
                          if v is not None}, check_patches=not args.no_patches)
    sweep = SweepConfig(grid=_grid(args), trials=args.trials, base_seed=args.seed, base=base)
    rows, summary = run_sweep(sweep, jobs=args.jobs)
    out_dir = args.out or default_out_dir()
    csv_path, json_path = write_sweep(rows, summary, out_dir, args.stem)
    print(f"{len(rows)} trials -> {csv_path}, {json_path}")
    return 0


def cmd_stitch(args) -> int:
    pieces = []
    for path in args.pieces:
        with open(path) as fh:
            pieces.append(formats.load(fh))
    levels = [int(v) for v in args.levels.split(",")] if args.levels else None
    assembly, log = stitch_levels(pieces, levels, return_log=True)
    out = _out_path(args, "stitched.txt")
    with open(out, "w") as fh:
        formats.save(assembly, fh)
    for step in log:
        print(f"level {step.level}: {'matched' if step.matched else 'recentred'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="brwscenery", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a branching walk and dump its coloured tree")
    _add_model(s)
    s.add_argument("--horizon", type=int, default=6)
    s.add_argument("--radius", type=int, default=None, help="scenery radius (default: horizon)")
    s.add_argument("--max-particles", type=int, default=200_000)
    s.add_argument("--oracle-dump", action="store_true", help="include hidden positions")
    s.add_argument("--scenery-out", default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("reconstruct", help="run the four phases and write the reconstructed piece")
    _add_model(s)
    s.add_argument("--scenery", default=None, help="scenery file (default: generate from --seed)")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("verify-events", help="run the event oracles on a seeded scenery")
    _add_model(s)
    s.add_argument("--out", default=None, help="JSON path (default: stdout)")
    s.set_defaults(func=cmd_verify_events)

    s = sub.add_parser("trial", help="run seeded trials and print their reports")
    _add_model(s)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--timing", action="store_true", help="include wall times in reports")
    s.add_argument("--out", default=None, help="JSON path (default: stdout)")
    s.set_defaults(func=cmd_trial)

    s = sub.add_parser("sweep", help="grid sweep; writes CSV and a JSON summary")
    _add_model(s, lists=True)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--stem", default="sweep")
    s.add_argument("--out", default=None, help="output directory")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("stitch", help="stitch reconstructed pieces of increasing level")
    s.add_argument("pieces", nargs="+")
    s.add_argument("--levels", default=None, help="comma list of levels, one per piece")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_stitch)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SceneryError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
