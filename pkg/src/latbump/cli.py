"""Command-line entry point: ``latbump <subcommand> ...``.

Every subcommand prints one JSON document (or writes it to ``--out``).
Exit codes: 0 success, 2 invalid config/input, 3 precondition failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bumps
from .bump_analysis import check_condition_a, separable_expansion
from .errors import ConfigError, LatbumpError
from .experiment import ExperimentConfig, dumps_stable, emit_report, run_equivalence
from .grid import GridBox, load_field, save_field
from .lattice import LatticeMatrix, sequence_from_json
from .operator import amalgam_norm, apply_T, assemble_sigma, band_limited, default_sigma_box
from .trilinear import bnorm_ascent, bnorm_oracle, trilinear_value
from .witness import build_kit, certify


def _pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from exc
    return lo, hi


def _emit(obj, out) -> None:
    text = dumps_stable(obj) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _matrix(path) -> LatticeMatrix:
    try:
        return LatticeMatrix.load(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad matrix file {path}: {exc}") from exc


def _bump(path):
    try:
        return bumps.load(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad bump file {path}: {exc}") from exc


def cmd_bnorm(args) -> int:
    A = _matrix(args.matrix)
    est = bnorm_ascent(A, args.restarts, args.seed, args.tol)
    out = est.to_json()
    if args.oracle:
        out["oracle"] = bnorm_oracle(A, args.budget, args.seed)
    _emit(out, args.out)
    return 0


def cmd_apply(args) -> int:
    A = _matrix(args.matrix)
    Phi = _bump(args.bump)
    f = band_limited(load_field(args.f))
    g = band_limited(load_field(args.g))
    if A.n != 1:
        raise ConfigError("apply supports n = 1")
    lo, hi = default_sigma_box(A, Phi)
    box = ((min(lo[0], f.spectrum.grid.lo[0]), min(lo[1], g.spectrum.grid.lo[0])),
           (max(hi[0], f.spectrum.grid.hi[0]), max(hi[1], g.spectrum.grid.hi[0])))
    sigma = assemble_sigma(A, Phi, args.m, box=box)
    x_grid = GridBox((args.xbox[0],), (args.xbox[1],), args.xm or args.m)
    T = apply_T(sigma, f, g, x_grid, method=args.method)
    if args.out:
        save_field(T, args.out, raw=args.raw)
    else:
        _emit(T.to_json(), None)
    return 0


def cmd_amalgam(args) -> int:
    res = amalgam_norm(load_field(args.field), args.q)
    cubes = [{"nu": list(k), "local_l2": v} for k, v in sorted(res.per_cube.items())]
    _emit({"q": res.q, "value": res.value, "per_cube": cubes}, args.out)
    return 0


def cmd_check_a(args) -> int:
    phi = _bump(args.bump)
    lo, hi = args.window
    rep = check_condition_a(phi, ((lo,) * phi.d, (hi,) * phi.d), m=args.m, tol=args.tol)
    if args.theta_out and rep.theta is not None:
        save_field(rep.theta, args.theta_out)
    out = rep.to_json()
    if args.theta_out:
        out.pop("theta", None)
    _emit(out, args.out)
    return 0 if rep.verdict == "holds" else 3


def cmd_expand(args) -> int:
    exp = separable_expansion(_bump(args.bump), tol=args.tol, m=args.m)
    terms = [{"k": list(k), "l": list(l), "re": b.real, "im": b.imag} for k, l, b in exp.terms]
    _emit({"n": exp.n, "T": exp.T, "cap": exp.cap, "error": exp.error,
           "shell_maxima": [float(v) for v in exp.shell_maxima()], "terms": terms}, args.out)
    return 0


def cmd_witness(args) -> int:
    A = _matrix(args.matrix)
    kit = build_kit(args.m)
    seqs = (args.seq_f, args.seq_g, args.seq_h)
    if all(seqs):
        F, G, H = (sequence_from_json(_load_json(p), A.n) for p in seqs)
    elif any(seqs):
        raise ConfigError("give all of --seq-f, --seq-g, --seq-h or none")
    else:
        w = bnorm_ascent(A, args.restarts, args.seed).witness
        F, G, H = w.F, w.G, w.H
    cert = certify(A, kit, F, G, H, m=args.m)
    tri = trilinear_value(A, F, G, H)
    _emit({"pairing": {"re": cert.pairing.real, "im": cert.pairing.imag},
           "trilinear": {"re": tri.real, "im": tri.imag},
           "abs_error": abs(cert.pairing - tri), "certificate": cert.certificate,
           "kit_constants": {"theta_l2": kit.theta_l2, "c0": kit.c0, "h_l2": cert.h_l2,
                             "kappa": kit.kappa}}, args.out)
    return 0


def cmd_verify(args) -> int:
    obj = dict(args.config_obj or {})
    if args.seed_given:
        obj["seed"] = args.seed
    if args.threads_given:
        obj["threads"] = args.threads
    cfg = ExperimentConfig.from_json(obj)
    report = run_equivalence(cfg)
    out = args.out or cfg.output
    text = emit_report(report, args.format, out)
    if not out:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of option defaults")
    common.add_argument("--out", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="latbump", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bnorm", parents=[common])
    s.add_argument("--matrix", required=True)
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--oracle", action="store_true")
    s.add_argument("--budget", type=int, default=10**6)
    s.set_defaults(func=cmd_bnorm)

    s = sub.add_parser("apply", parents=[common])
    s.add_argument("--matrix", required=True)
    s.add_argument("--bump", required=True)
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--m", type=int, default=32)
    s.add_argument("--xbox", type=_pair, default=(-10.5, 10.5))
    s.add_argument("--xm", type=int, default=None)
    s.add_argument("--method", choices=["fft", "direct"], default="fft")
    s.add_argument("--raw", action="store_true", help="write raw float64 with a JSON sidecar")
    s.set_defaults(func=cmd_apply)

    s = sub.add_parser("amalgam", parents=[common])
    s.add_argument("--field", required=True)
    s.add_argument("--q", default="2")
    s.set_defaults(func=cmd_amalgam)

    s = sub.add_parser("check-a", parents=[common])
    s.add_argument("--bump", required=True)
    s.add_argument("--window", type=_pair, required=True)
    s.add_argument("--m", type=int, default=128)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--theta-out", default=None)
    s.set_defaults(func=cmd_check_a)

    s = sub.add_parser("expand", parents=[common])
    s.add_argument("--bump", required=True)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--m", type=int, default=32)
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("witness", parents=[common])
    s.add_argument("--matrix", required=True)
    s.add_argument("--m", type=int, default=64)
    s.add_argument("--seq-f")
    s.add_argument("--seq-g")
    s.add_argument("--seq-h")
    s.add_argument("--restarts", type=int, default=32)
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("verify", parents=[common])
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(func=cmd_verify)
    return p


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = hasattr(args, "seed")
    args.threads_given = hasattr(args, "threads")
    args.config_obj = None
    if hasattr(args, "config"):
        obj = _load_json(args.config)
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        args.config_obj = obj
        if args.command != "verify":
            # config supplies defaults; explicit flags still win
            sub = parser._subparsers._group_actions[0].choices[args.command]
            known = {a.dest for a in sub._actions}
            unknown = {k.replace("-", "_") for k in obj} - known
            if unknown:
                raise ConfigError(f"unknown config keys for {args.command}: {sorted(unknown)}")
            sub.set_defaults(**{k.replace("-", "_"): v for k, v in obj.items()})
            args = parser.parse_args(argv)
            args.seed_given = hasattr(args, "seed")
            args.threads_given = hasattr(args, "threads")
            args.config_obj = obj
    if not hasattr(args, "out"):
        args.out = None
    if not hasattr(args, "seed"):
        args.seed = 0
    if not hasattr(args, "threads"):
        args.threads = 1
    return args


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        return args.func(args)
    except LatbumpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
