"""Command-line entry point: ``thetatool <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 configuration or input
error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import load_config, merge
from .cutoff import DyadicIndex
from .decompose import iwasawa, partial
from .exceptions import BudgetExceededError, ConfigError, ThetaToolError
from .height import HeightParams, height, height_flowed
from .reduction import dn_reduce, grenier_reduce, jacobi_reduce
from .serialization import (
    clean,
    decode_jacobi,
    decode_matrix,
    encode_jacobi,
    encode_matrix,
)
from .theta import ThetaRequest, theta_box, theta_schwartz
from .verify import SUITES, report, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def _read_json(arg: str):
    """Inline JSON, ``@path``, a path to an existing file, or ``-`` for stdin."""
    if arg == "-":
        text = sys.stdin.read()
    elif arg.startswith("@"):
        text = Path(arg[1:]).read_text()
    elif os.path.isfile(arg):
        text = Path(arg).read_text()
    else:
        text = arg
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON input: {exc}") from exc


def _matrix(arg: str) -> np.ndarray:
    obj = _read_json(arg)
    if isinstance(obj, dict):
        return decode_matrix(obj)
    return np.atleast_2d(np.asarray(obj, dtype=float))


def _vector(arg: str):
    if arg is None:
        return None
    text = arg.strip()
    if text.startswith("["):
        return np.asarray(json.loads(text), dtype=float)
    return np.asarray([float(v) for v in text.split(",")], dtype=float)


def _emit(obj, out=None):
    text = json.dumps(clean(obj), indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _coords_json(c) -> dict:
    return {
        "X": c.X, "U": c.U, "v": c.v,
        "Q_re": c.Q.real, "Q_im": c.Q.imag,
    }


# ------------------------------------------------------------ commands


def cmd_theta(args):
    X = _matrix(args.X)
    n = X.shape[0]
    if args.n is not None and args.n != n:
        raise ConfigError(f"--n {args.n} does not match X of size {n}")
    x = _vector(args.x) if args.x else np.zeros(n)
    y = _vector(args.y) if args.y else np.zeros(n)
    b = _vector(args.box)
    req = ThetaRequest(args.M, X, x, y, b, cutoff=args.cutoff)
    val = theta_box(req, kernel=args.kernel) if args.cutoff == "box" else theta_schwartz(req)
    _emit({"value_re": val.value.real, "value_im": val.value.imag, "truncation_bound": val.truncation_bound})


def cmd_iwasawa(args):
    _emit(_coords_json(iwasawa(_matrix(args.input))))


def cmd_partial(args):
    pc = partial(_matrix(args.input), args.l)
    _emit({
        "l": pc.l, "R": pc.R, "S": pc.S, "T": pc.T, "U_l": pc.U_l, "v_l": pc.v_l,
        "X_l": pc.X_l, "Y_l": pc.Y_l, "Q_re": pc.Q.real, "Q_im": pc.Q.imag,
    })


def cmd_reduce(args):
    if args.kind == "grenier":
        r = grenier_reduce(_matrix(args.input))
        _emit({"word": encode_matrix(r.A, symplectic=False), "reduced": encode_matrix(r.Y_reduced, symplectic=False)})
    elif args.kind == "sp":
        r = dn_reduce(_matrix(args.input))
        _emit({"word": encode_matrix(r.gamma), "reduced": encode_matrix(r.reduced), "coords": _coords_json(r.coords)})
    else:
        r = jacobi_reduce(decode_jacobi(_read_json(args.input)))
        w = r.word
        _emit({
            "word": {"m": list(w.m), "n": list(w.n_vec), "t": w.t, "gamma": encode_matrix(w.gamma)},
            "reduced": encode_jacobi(r.reduced),
            "coords": _coords_json(iwasawa(r.reduced.g)),
        })


def cmd_height(args):
    j = decode_jacobi(_read_json(args.input))
    params = HeightParams(args.A)
    if args.s is None:
        _emit({"D": height(j, params)})
        return
    jv = [int(v) for v in _vector(args.j)] if args.j else [0] * j.n
    S = frozenset(int(v) for v in _vector(args.S)) if args.S else frozenset()
    _emit({"D": height_flowed(j, args.s, DyadicIndex(jv, S), params), "s": args.s, "j": jv, "S": sorted(S)})


GROWTH_KEYS = ("n", "M_max", "samples", "seed", "X_mode", "y_mode", "x", "b", "psi_eps", "extra_per_decade", "workers")
TAIL_KEYS = ("n", "samples", "seed", "A", "R_min", "R_max", "R_points", "min_count")
GSCRIPT_KEYS = ("n", "samples", "seed", "j", "C_min", "C_max", "C_points", "s_max", "K", "psi_eps", "A")


def _settings(args, keys):
    file_values = load_config(args.config) if args.config else {}
    flags = {k: getattr(args, k, None) for k in keys}
    return merge(file_values, flags, keys)


def _write_outputs(args, kind, csv_text, summary):
    out = Path(args.out)
    out.write_text(csv_text)
    summary_path = Path(args.summary) if args.summary else out.with_suffix(".json")
    ex.write_json(summary_path, clean(summary))
    if args.gnuplot:
        out.with_suffix(".gp").write_text(ex.gnuplot_script(out.name, kind))
    _emit(summary)


def cmd_experiment(args):
    if args.kind == "growth":
        s = _settings(args, GROWTH_KEYS)
        for key in ("x", "b"):
            if isinstance(s.get(key), str):
                s[key] = tuple(_vector(s[key]))
        s.setdefault("workers", int(os.environ.get("THETATOOL_THREADS", "1")))
        res = ex.run_growth(ex.GrowthConfig(**s))
        _write_outputs(args, "growth", res.csv(), res.summary)
    elif args.kind == "tail":
        s = _settings(args, TAIL_KEYS)
        n = int(s.get("n", 1))
        grid = None
        if "R_min" in s or "R_max" in s:
            base = ex.default_tail_grid(n)
            grid = np.geomspace(float(s.get("R_min", base[0])), float(s.get("R_max", base[-1])), int(s.get("R_points", 12)))
        res = ex.run_tail(n, int(s.get("samples", 100_000)), int(s.get("seed", 0)), grid,
                          HeightParams(s.get("A")), int(s.get("min_count", 50)))
        _write_outputs(args, "tail", res.csv(), res.summary)
    else:
        s = _settings(args, GSCRIPT_KEYS)
        n = int(s.get("n", 1))
        jtext = s.get("j", ",".join(["0"] * n))
        if isinstance(jtext, (tuple, list)):
            jtext = ",".join(str(v) for v in jtext)
        jvs = [tuple(int(v) for v in part.split(",")) for part in str(jtext).split(";")]
        C_grid = np.geomspace(float(s.get("C_min", 1.5)), float(s.get("C_max", 4.0)), int(s.get("C_points", 12)))
        res = ex.run_gscript_probe(n, int(s.get("samples", 10_000)), int(s.get("seed", 0)), jvs, C_grid,
                                   float(s.get("psi_eps", 0.01)), float(s.get("s_max", 3.0)), int(s.get("K", 8)),
                                   HeightParams(s.get("A")))
        keys = list(res.complement)
        lines = ["C," + ",".join(f"j={k}" for k in keys)]
        for i, C in enumerate(res.C_grid):
            lines.append(",".join([repr(float(C))] + [repr(float(res.complement[k][i])) for k in keys]))
        _write_outputs(args, "gscript", "\n".join(lines) + "\n", res.summary)


def cmd_verify(args):
    checks = run_suite(args.suite, seed=args.seed, tol_scale=-1.0 if args.tamper else 1.0)
    rep = report(checks)
    _emit(rep, args.report)
    if args.report:
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.suite}: {c.name} ({c.metric:.3g} <= {c.tolerance:.3g})")
    return EXIT_OK if rep["passed"] else EXIT_VERIFY


# -------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thetatool", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("theta", help="evaluate a theta sum")
    t.add_argument("--n", type=int)
    t.add_argument("--M", type=float, required=True)
    t.add_argument("--X", required=True, help="matrix JSON, nested list, or @file")
    t.add_argument("--x")
    t.add_argument("--y")
    t.add_argument("--box")
    t.add_argument("--cutoff", choices=("box", "gaussian"), default="box")
    t.add_argument("--kernel", choices=("naive", "rotor", "parallel"), default="rotor")
    t.set_defaults(func=cmd_theta)

    i = sub.add_parser("iwasawa", help="Iwasawa coordinates of a symplectic matrix")
    i.add_argument("input", help="matrix JSON, @file or - for stdin")
    i.set_defaults(func=cmd_iwasawa)

    pa = sub.add_parser("partial", help="level-l coordinates")
    pa.add_argument("input")
    pa.add_argument("--l", type=int, required=True)
    pa.set_defaults(func=cmd_partial)

    r = sub.add_parser("reduce", help="reduce into a fundamental domain")
    r.add_argument("input")
    r.add_argument("--kind", choices=("grenier", "sp", "jacobi"), required=True)
    r.set_defaults(func=cmd_reduce)

    h = sub.add_parser("height", help="cusp height of a Jacobi element")
    h.add_argument("input")
    h.add_argument("--A", type=float)
    h.add_argument("--s", type=float, help="flow time; omit for the plain height")
    h.add_argument("--j", help="scale exponents, comma separated")
    h.add_argument("--S", help="mirrored axes (0-based), comma separated")
    h.set_defaults(func=cmd_height)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    e.add_argument("kind", choices=("growth", "tail", "gscript"))
    e.add_argument("--config", help="flat key = value file; flags override it")
    e.add_argument("--out", required=True, help="CSV output path")
    e.add_argument("--summary", help="summary JSON path (default: next to --out)")
    e.add_argument("--gnuplot", action="store_true", help="also write a .gp plot script")
    e.add_argument("--n", type=int)
    e.add_argument("--samples", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--M-max", dest="M_max", type=float)
    e.add_argument("--X-mode", dest="X_mode", choices=("random", "rational", "fixed"))
    e.add_argument("--y-mode", dest="y_mode", choices=("random", "fixed"))
    e.add_argument("--x")
    e.add_argument("--b")
    e.add_argument("--psi-eps", dest="psi_eps", type=float)
    e.add_argument("--extra-per-decade", dest="extra_per_decade", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--A", type=float)
    e.add_argument("--R-min", dest="R_min", type=float)
    e.add_argument("--R-max", dest="R_max", type=float)
    e.add_argument("--R-points", dest="R_points", type=int)
    e.add_argument("--min-count", dest="min_count", type=int)
    e.add_argument("--j", help="scale vectors, e.g. '0;1;2' or '0,0;1,0'")
    e.add_argument("--C-min", dest="C_min", type=float)
    e.add_argument("--C-max", dest="C_max", type=float)
    e.add_argument("--C-points", dest="C_points", type=int)
    e.add_argument("--s-max", dest="s_max", type=float)
    e.add_argument("--K", type=int)
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=20240101)
    v.add_argument("--tamper", action="store_true", help="negative control: invert every tolerance")
    v.add_argument("--report", help="write the JSON report here and print one line per check")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ThetaToolError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
