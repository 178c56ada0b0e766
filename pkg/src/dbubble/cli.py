"""Command-line front end.

    dbubble trace --dim 3 --H 1 --F 0 --length 4 --events axis --out curve.csv
    dbubble classify --dim 3 --H 1 --F 0
    dbubble standard --dim 3 --v1 1 --v2 1 --out b.json --svg b.svg
    dbubble verify --suite lemmas --samples 10 --seed 1 --out report.json
    dbubble realize --config tree.json --out config.json
    dbubble audit --config config.json --resolution 0.05 --out audit.json
    dbubble render --in curve.csv --svg curve.svg

Exit status: 0 on clean success, 1 for domain failures (no convergence,
counterexamples, audit findings), 2 for usage errors.  Errors are also
written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .config import ConfigTree, RealizeSpec, audit, realize, solved_spec
from .delaunay import CurveState, DelaunayParams, StopSpec, classify, heights_at_angle, trace
from .errors import DbubbleError, DomainError, NoConvergence, NoSuchPoint, ResolutionError
from .io import (
    RunManifest,
    dumps,
    read_curve_csv,
    read_json,
    render_config,
    render_svg,
    sha256_file,
    write_curve_csv,
    write_json,
)
from .lemmas import run_suite
from .standard import solve_standard

OUTPUT_FLAGS = ("--out", "--svg")
EVENTS = ("axis", "vertical")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dims(text):
    lo, _, hi = text.partition("-")
    try:
        a, b = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or N-M, got {text!r}")
    return list(range(a, b + 1))


def build_parser():
    p = _Parser(prog="dbubble", description="Generating curves and double bubbles in R^n.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("trace", help="integrate one generating curve to CSV")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--H", type=float, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--F", type=float, help="start at the highest horizontal point of the (H, F) curve")
    g.add_argument("--start", help="x,y,theta (use --start=-1,1,0 for negative x)")
    s.add_argument("--length", type=float, required=True)
    s.add_argument("--events", default="", help="comma list from: axis, vertical")
    s.add_argument("--max-step", type=float)
    s.add_argument("--out", required=True)

    s = sub.add_parser("classify", help="Delaunay type of (H, F)")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--F", type=float, required=True)

    s = sub.add_parser("standard", help="solve the standard double bubble")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--v1", type=float, required=True)
    s.add_argument("--v2", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--svg")

    s = sub.add_parser("verify", help="sample the curve lemmas for counterexamples")
    s.add_argument("--suite", choices=["lemmas"], required=True)
    s.add_argument("--samples", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--dims", type=_dims, default=_dims("3-8"))
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default="report.json")

    s = sub.add_parser("realize", help="realize a component tree by shooting")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--partial", action="store_true", help="write the best attempt even without convergence")

    s = sub.add_parser("audit", help="instability audit of a configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--resolution", type=float, default=None)
    s.add_argument("--out", required=True)

    s = sub.add_parser("render", help="draw a curve CSV or configuration JSON")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--svg", required=True)
    return p


# ------------------------------------------------------------------ helpers


def _normalized_argv(argv):
    """argv with output paths reduced to base names."""
    out, it = [], iter(argv)
    for tok in it:
        flag, eq, val = tok.partition("=")
        if flag in OUTPUT_FLAGS:
            if eq:
                out.append(f"{flag}={Path(val).name}")
            else:
                out.append(tok)
                nxt = next(it, None)
                if nxt is not None:
                    out.append(Path(nxt).name)
        else:
            out.append(tok)
    return out


def _manifest(args, argv, seed=None, inputs=(), outputs=()):
    params = {k: v for k, v in vars(args).items() if k not in ("command", "out", "svg")}
    return RunManifest(
        command=args.command,
        params=params,
        argv=_normalized_argv(argv),
        seed=seed,
        inputs={Path(p).name: sha256_file(p) for p in inputs},
        outputs={Path(p).name: sha256_file(p) for p in outputs if p},
    )


def _need_file(path):
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")


def _load_json(path):
    _need_file(path)
    try:
        return read_json(path)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}")


def config_record(config) -> dict:
    """Serializable form of a realized configuration."""
    return {"realized": True, "spec": solved_spec(config).to_dict(), "summary": config.summary()}


def load_configuration(data):
    """A Configuration from a realized record, a tree spec or a bubble record."""
    if data.get("realized"):
        # zero iterations: rebuild exactly at the stored solution
        return realize(RealizeSpec.from_dict(data["spec"]), max_iter=0, strict=False)
    if "tree" in data:
        return realize(RealizeSpec.from_dict(data))
    if "targets" in data and "n" in data:
        tree = ConfigTree([{"id": "R", "region": 1}])
        return realize(RealizeSpec(tree, int(data["n"]), volumes=tuple(float(v) for v in data["targets"])))
    raise DomainError("JSON holds neither a configuration nor a tree spec")


def replay(manifest, outdir, argv_runner=None):
    """Re-run a manifest with outputs redirected into ``outdir``."""
    m = manifest if isinstance(manifest, RunManifest) else RunManifest.from_dict(manifest)
    argv, it = [], iter(m.argv)
    for tok in it:
        flag, eq, val = tok.partition("=")
        if flag in OUTPUT_FLAGS:
            name = val if eq else next(it)
            argv += [flag, str(Path(outdir) / name)]
        else:
            argv.append(tok)
    return (argv_runner or main)(argv)


# ----------------------------------------------------------------- commands


def _start_state(params, F):
    for theta in (0.0, math.pi):
        ys = heights_at_angle(params, F, theta)
        if ys:
            return CurveState(0.0, ys[-1], theta)
    raise NoSuchPoint(f"the (H, F) = ({params.H}, {F}) curve has no horizontal point")


def cmd_trace(args, argv):
    params = DelaunayParams(args.dim, args.H)
    if args.start is not None:
        try:
            x, y, th = (float(v) for v in args.start.split(","))
        except ValueError:
            raise UsageError(f"--start needs x,y,theta, got {args.start!r}")
        s0 = CurveState(x, y, th)
    else:
        s0 = _start_state(params, args.F)
    events = [e for e in args.events.split(",") if e]
    bad = sorted(set(events) - set(EVENTS))
    if bad:
        raise UsageError(f"unknown events {bad}; choose from {list(EVENTS)}")
    stop = StopSpec(length=args.length, axis="axis" in events, vertical="vertical" in events, max_step=args.max_step)
    c = trace(s0, params, stop)
    write_curve_csv(args.out, c)
    info = {
        "class": c.cls.value, "force": c.force, "length": c.length, "event": c.event,
        "rows": len(c), "force_drift": c.force_drift(),
        "manifest": _manifest(args, argv, outputs=[args.out]),
    }
    sys.stdout.write(dumps(info))
    return 0


def cmd_classify(args, argv):
    print(classify(args.dim, args.H, args.F).value)
    return 0


def cmd_standard(args, argv):
    b = solve_standard(args.dim, args.v1, args.v2)
    outputs = []
    if args.svg:
        spec = RealizeSpec(ConfigTree([{"id": "R", "region": 1}]), args.dim, volumes=(args.v1, args.v2))
        render_config(realize(spec), args.svg)
        outputs.append(args.svg)
    d = b.as_dict()
    d["manifest"] = _manifest(args, argv, outputs=outputs)
    write_json(args.out, d)
    return 0


def cmd_verify(args, argv):
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    reports = run_suite(args.seed, n_range=args.dims, samples_per_lemma=args.samples, workers=args.workers)
    failed = [r for r in reports if not r.ok]
    d = {
        "suite": args.suite,
        "ok": not failed,
        "counterexamples": sum(r.failed for r in reports),
        "reports": [r.to_dict() for r in reports],
        "manifest": _manifest(args, argv, seed=args.seed),
    }
    write_json(args.out, d)
    return 1 if failed else 0


def cmd_realize(args, argv):
    data = _load_json(args.config)
    spec = RealizeSpec.from_dict(data)
    try:
        config = realize(spec, max_iter=args.max_iter)
    except NoConvergence as e:
        if args.partial and e.best is not None:
            d = config_record(e.best)
            d["manifest"] = _manifest(args, argv, inputs=[args.config])
            write_json(args.out, d)
        raise
    d = config_record(config)
    d["manifest"] = _manifest(args, argv, inputs=[args.config])
    write_json(args.out, d)
    return 0


def cmd_audit(args, argv):
    config = load_configuration(_load_json(args.config))
    report = audit(config, resolution=args.resolution)
    d = report.to_dict()
    d["configuration"] = {"max_residual": config.max_residual, "template": config.template}
    d["manifest"] = _manifest(args, argv, inputs=[args.config])
    write_json(args.out, d)
    return 0 if report.ok else 1


def cmd_render(args, argv):
    _need_file(args.inp)
    if args.inp.endswith(".csv"):
        cols = read_curve_csv(args.inp)
        render_svg({"curve": (cols["x"], cols["y"])}, path=args.svg)
    else:
        render_config(load_configuration(_load_json(args.inp)), args.svg)
    sys.stdout.write(dumps({"manifest": _manifest(args, argv, inputs=[args.inp], outputs=[args.svg])}))
    return 0


COMMANDS = {
    "trace": cmd_trace,
    "classify": cmd_classify,
    "standard": cmd_standard,
    "verify": cmd_verify,
    "realize": cmd_realize,
    "audit": cmd_audit,
    "render": cmd_render,
}


def _fail(code, exc, **extra):
    d = {"error": type(exc).__name__, "message": str(exc), "exit_code": code, **extra}
    sys.stderr.write(json.dumps(d, sort_keys=True, default=str) + "\n")
    return code


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        return _fail(2, e)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as e:
        return _fail(2, e)
    except NoConvergence as e:
        best = getattr(e.best, "max_residual", None)
        return _fail(1, e, best_residual=best, history=e.trace[-5:])
    except ResolutionError as e:
        return _fail(1, e, required=e.required)
    except DbubbleError as e:
        return _fail(1, e)


if __name__ == "__main__":
    sys.exit(main())
