"""Command line entry point: ``wavegesture <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness, recognition, validation
from .geometry import FieldSamples, MeasurementGrid, save_dictionary
from .harness import ConfigError, ExperimentConfig
from .tables import HEADER_SIZE, load_table

EXIT_USAGE = 2


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _shape_index(cfg, args) -> int:
    n = len(cfg.physics)
    if not 1 <= args.shape <= n:
        raise ConfigError(f"--shape must be in 1..{n}")
    return args.shape - 1


def _save_samples(samples: FieldSamples, path) -> None:
    np.savez(path, values=samples.values, phaseless=samples.phaseless,
             side=samples.grid.side, n=samples.grid.n)


def _load_samples(path) -> FieldSamples:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"data file not found: {p}")
    with np.load(p) as f:
        grid = MeasurementGrid(float(f["side"]), int(f["n"]))
        return FieldSamples(grid, f["values"], bool(f["phaseless"]))


def cmd_dict(args) -> int:
    cfg = _load_config(args)
    if args.action == "build":
        exp = harness.Experiment(cfg)
        if args.out:
            save_dictionary(exp.dictionary, args.out)
            print(f"wrote {args.out}")
        if not args.no_tables:
            if cfg.cache_dir is None:
                raise ConfigError("cache_dir is null; nowhere to store tables")
            for i, e in enumerate(exp.dictionary):
                t = exp.table(i)
                print(f"D{i + 1} {e.shape.name} {harness.physics_label(e.physics)}: "
                      f"table {t.values.shape} ready in {cfg.cache_dir}")
        return 0
    path = Path(args.path) if args.path else None
    if path is not None and not path.is_file():
        raise ConfigError(f"file not found: {path}")
    if path is not None and path.read_bytes()[:4] == b"WGFF":
        t = load_table(path)
        print(json.dumps({
            "shape_id": t.shape_id, "kappa": t.kappa,
            "physics": harness.physics_label(t.physics),
            "incident": t.incident.__dict__, "observation": t.observation.__dict__,
            "header_bytes": HEADER_SIZE, "max_abs": float(np.abs(t.values).max()),
        }, indent=2))
        return 0
    if path is not None:
        cfg = cfg.replace(dictionary=str(path), physics=harness.PHYSICS_PRESETS["soft"])
    d = cfg.load_dictionary()
    for i, e in enumerate(d):
        s = e.shape
        print(f"D{i + 1} id={s.id} {s.name:6s} {harness.physics_label(e.physics):10s} "
              f"cubes={list(map(list, s.cubes))} radius={s.radius:.4f} "
              f"faces={s.exterior_face_count()}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    i = _shape_index(cfg, args)
    exp = harness.Experiment(cfg)
    stage = harness.STAGE_LOCATION if args.stage == "location" else harness.STAGE_SHAPE
    s = exp.measurement(i, stage)
    _save_samples(s, args.out)
    print(f"wrote {args.out}: {s.grid.n}x{s.grid.n} samples, phaseless={s.phaseless}")
    return 0


def _location_data(cfg, args, exp):
    if args.data:
        return _load_samples(args.data)
    return exp.measurement(_shape_index(cfg, args), harness.STAGE_LOCATION)


def cmd_locate(args) -> int:
    cfg = _load_config(args)
    exp = harness.Experiment(cfg) if not args.data else None
    data = _location_data(cfg, args, exp)
    r = recognition.locate(data, cfg.kappa1, cfg.region, cfg.initial,
                           simplex_scale=cfg.simplex_scale, xatol=cfg.xatol,
                           max_evaluations=cfg.max_evaluations)
    print(json.dumps({"z": r.z.tolist(), "indicator": r.value, "evaluations": r.evaluations,
                      "converged": r.converged, "distance_to_z0": r.error(cfg.z0)}, indent=2))
    return 0


def cmd_classify(args) -> int:
    cfg = _load_config(args)
    exp = harness.Experiment(cfg)
    if args.z is not None:
        z = np.asarray(args.z, float)
    else:
        z = exp.locate(_shape_index(cfg, args)).z
    data = _load_samples(args.data) if args.data else exp.measurement(
        _shape_index(cfg, args), harness.STAGE_SHAPE)
    sc = recognition.classify(data, exp.tables(), cfg.kappa2, z)
    print(json.dumps({"z_ring": z.tolist(), "scores": sc.values.tolist(),
                      "best": f"D{sc.best + 1}", "margin": sc.margin}, indent=2))
    return 0


def cmd_reproduce(args) -> int:
    cfg = _load_config(args)
    res, meta = harness.reproduce_table(args.table, cfg, args.out_dir)
    print(res.to_markdown(), end="")
    print(f"wrote table{args.table}.csv/.md/.meta.json to {args.out_dir or cfg.output_dir} "
          f"({meta['wall_time_s']:.1f} s)")
    return 0


def cmd_validate(args) -> int:
    results = validation.run_all(quick=not args.full)
    for r in results:
        print(r.line())
    n_ok = sum(r.passed for r in results)
    print(f"{n_ok}/{len(results)} checks passed")
    return 0 if n_ok == len(results) else 1


def cmd_config(args) -> int:
    cfg = _load_config(args)
    text = cfg.to_yaml()
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (YAML)")
    common.add_argument("--seed", type=int, help="override the config RNG seed")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wavegesture", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dict", parents=[common], help="build or inspect dictionaries and tables")
    d.add_argument("action", choices=["build", "inspect"])
    d.add_argument("path", nargs="?", help="inspect: dictionary JSON or .wgff table")
    d.add_argument("--out", help="build: write the dictionary JSON here")
    d.add_argument("--no-tables", action="store_true", help="build: skip far-field tables")
    d.set_defaults(func=cmd_dict)

    s = sub.add_parser("simulate", parents=[common], help="synthetic aperture data")
    s.add_argument("--shape", type=int, required=True, help="true shape, 1-based")
    s.add_argument("--stage", choices=["location", "shape"], default="shape")
    s.add_argument("--out", required=True, help="output .npz")
    s.set_defaults(func=cmd_simulate)

    lo = sub.add_parser("locate", parents=[common], help="estimate the scatterer location")
    g = lo.add_mutually_exclusive_group(required=True)
    g.add_argument("--shape", type=int)
    g.add_argument("--data", help=".npz written by simulate --stage location")
    lo.set_defaults(func=cmd_locate)

    c = sub.add_parser("classify", parents=[common], help="score all dictionary shapes")
    c.add_argument("--shape", type=int)
    c.add_argument("--data", help=".npz written by simulate --stage shape")
    c.add_argument("--z", type=float, nargs=3, help="location estimate (skips locate)")
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("reproduce", parents=[common], help="reproduce a results table (1..7)")
    r.add_argument("--table", type=int, required=True, choices=sorted(harness.TABLE_PRESETS))
    r.add_argument("--out-dir")
    r.set_defaults(func=cmd_reproduce)

    v = sub.add_parser("validate", parents=[common], help="oracle and invariant checks")
    v.add_argument("--full", action="store_true", help="acceptance resolutions (slow)")
    v.set_defaults(func=cmd_validate)

    cf = sub.add_parser("config", parents=[common], help="print the (reference) config")
    cf.add_argument("--out")
    cf.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "classify" and args.shape is None and (args.data is None or args.z is None):
        parser.error("classify needs --shape, or both --data and --z")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"wavegesture: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
