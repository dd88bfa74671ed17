"""``hankelab <experiment> --config <path> [--out DIR] [--resolution N] [--quiet]``.

Exit codes: 0 success, 2 config error, 3 geometry error, 4 numerical failure.
``HANKELAB_THREADS`` caps the number of BLAS/OpenMP threads.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigError, GeometryError, NumericalError

EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_NUMERICAL = 4
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
EXPERIMENT_NAMES = ("localize", "prop1", "analytic_disc", "extend", "hormander", "certify")


def _apply_threads():
    value = os.environ.get("HANKELAB_THREADS")
    if value is None:
        return
    if not value.isdigit() or int(value) < 1:
        raise ConfigError(f"HANKELAB_THREADS must be a positive integer, got {value!r}")
    for var in THREAD_VARS:
        os.environ[var] = value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hankelab",
                                description="Hankel-operator and d-bar experiments on model domains.")
    p.add_argument("experiment", choices=EXPERIMENT_NAMES)
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--out", help="output directory (default: config 'output' or ./hankelab-out)")
    p.add_argument("--resolution", type=int, help="override the config resolution")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def _summary(record) -> str:
    p = record.payload
    name = record.experiment
    if name == "localize":
        h = p["headline"]
        return f"base: {h['base_verdict']}  lens: {h['lens_verdict']}"
    if name in ("prop1", "analytic_disc"):
        return f"verdict: {p['verdict']}"
    if name == "extend":
        return f"achieved_error={p['achieved_error']:.3e} used_k={p['used_k']} converged={p['converged']}"
    if name == "hormander":
        return "  ".join(f"k={r['weight_scale']:g}: lhs/rhs={r['ratio']:.4f}" for r in p["reports"])
    return "  ".join(f"cap {c['degree_cap']}: rank {c['rank']}" for c in p["certificates"])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    numerical = (NumericalError, ArithmeticError)
    try:
        _apply_threads()
        import numpy as np

        numerical += (np.linalg.LinAlgError,)
        from .config import load_config, validate
        from .experiments import run_experiment, to_jsonable

        cfg = load_config(args.config, args.experiment)
        if args.resolution is not None:
            cfg.resolution = args.resolution
            validate(cfg)
        out = args.out or cfg.output or "hankelab-out"
        record = run_experiment(cfg, out)
        with open(os.path.join(out, "run.json"), "w") as fh:
            json.dump(to_jsonable(record.as_dict()), fh, indent=2)
            fh.write("\n")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except numerical as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not args.quiet:
        print(f"{record.experiment}: {_summary(record)}  ({record.wall_seconds:.1f}s, {out}/run.json)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
