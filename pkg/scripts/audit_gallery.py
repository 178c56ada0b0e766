#!/usr/bin/env python3
"""Realize and audit every config spec in a directory; write JSON and SVG.

    python3 scripts/audit_gallery.py configs --out gallery
"""

import argparse
import sys
from pathlib import Path

from dbubble.cli import config_record
from dbubble.config import audit, load_spec, realize
from dbubble.errors import NoConvergence
from dbubble.io import dumps, render_config, write_json


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("specs", type=Path)
    ap.add_argument("--out", type=Path, default=Path("gallery"))
    ap.add_argument("--resolution", type=float, default=None)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    table = {}
    for path in sorted(args.specs.glob("*.json")):
        name = path.stem
        try:
            config = realize(load_spec(path))
        except NoConvergence as e:
            table[name] = {"realized": False, "best_residual": getattr(e.best, "max_residual", None)}
            if e.best is not None:
                render_config(e.best, args.out / f"{name}.partial.svg")
            continue
        rep = audit(config, resolution=args.resolution)
        write_json(args.out / f"{name}.config.json", config_record(config))
        write_json(args.out / f"{name}.audit.json", rep)
        render_config(config, args.out / f"{name}.svg")
        table[name] = {"realized": True, "residual": config.max_residual, "rules": rep.rules()}
    sys.stdout.write(dumps(table))
    return 0


if __name__ == "__main__":
    sys.exit(main())
