"""Serialization: canonical JSON, curve CSV, SVG and run manifests.

JSON numbers are written with 17 significant digits so doubles survive a
round trip exactly; non-finite values become the strings "inf", "-inf" and
"nan".  Keys are sorted, so equal objects give equal bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .axis_map import axis_values

CSV_HEADER = ("t", "x", "y", "theta", "f", "F")


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e16:
        # keep integral floats readable but still floats
        return f"{x:.1f}"
    return f"{x:.17g}"


def _plain(obj):
    """Reduce numpy, dataclasses, enums and tuples to JSON-shaped values."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return _plain(obj.value)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, np.bool_):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return _plain(dataclasses.asdict(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(v, out, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = ", " if not indent else ","
    if v is None or isinstance(v, bool) or isinstance(v, int) or isinstance(v, str):
        out.write(json.dumps(v))
    elif isinstance(v, float):
        s = fmt(v)
        out.write(s if math.isfinite(v) else json.dumps(s))
    elif isinstance(v, dict):
        if not v:
            out.write("{}")
            return
        out.write("{")
        for i, k in enumerate(sorted(v)):
            out.write((sep if i else "") + pad + json.dumps(k) + ": ")
            _emit(v[k], out, indent, level + 1)
        out.write(end + "}")
    else:
        if not v:
            out.write("[]")
            return
        out.write("[")
        for i, item in enumerate(v):
            out.write((sep if i else "") + pad)
            _emit(item, out, indent, level + 1)
        out.write(end + "]")


def dumps(obj, indent=2) -> str:
    buf = io.StringIO()
    _emit(_plain(obj), buf, indent, 0)
    return buf.getvalue() + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ------------------------------------------------------------------ curves


def curve_rows(curve):
    f = axis_values(curve)
    F = curve.forces()
    for row in zip(curve.t, curve.x, curve.y, curve.theta, f, F):
        yield [fmt(v) for v in row]


def write_curve_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(curve_rows(curve))


def read_curve_csv(path) -> dict:
    """Columns of a curve CSV as float arrays, keyed by header name."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected curve header {header}")
        rows = [[float(v) for v in row] for row in r]
    data = np.array(rows, dtype=float).reshape(-1, len(CSV_HEADER))
    return {k: data[:, i] for i, k in enumerate(CSV_HEADER)}


# --------------------------------------------------------------------- svg

_COLORS = {"cap": "#1f5fa8", "outer": "#1f5fa8", "interface": "#c0392b", "iface": "#c0392b", "curve": "#222222"}


def render_svg(polylines: dict, path=None, width=640, margin=20, kinds=None) -> str:
    """Upper half-plane drawing of named (x, y) polylines with the axis y = 0.

    ``kinds`` maps names to a colour class.  Returns the SVG text and writes
    it to ``path`` when given.  No timestamp is embedded.
    """
    kinds = kinds or {}
    xs = [np.asarray(x, float) for x, _ in polylines.values()] or [np.zeros(1)]
    ys = [np.asarray(y, float) for _, y in polylines.values()] or [np.ones(1)]
    x0 = min(float(np.min(x)) for x in xs)
    x1 = max(float(np.max(x)) for x in xs)
    y1 = max(max(float(np.max(y)) for y in ys), 1e-12)
    span = max(x1 - x0, y1, 1e-12)
    scale = (width - 2 * margin) / span
    height = int(math.ceil(y1 * scale + 2 * margin))

    def px(x):
        return fmt((x - x0) * scale + margin)

    def py(y):
        return fmt(height - margin - y * scale)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<line id="axis" x1="0" y1="{py(0.0)}" x2="{width}" y2="{py(0.0)}" stroke="#888888" stroke-dasharray="4 3"/>',
    ]
    for name in sorted(polylines):
        x, y = polylines[name]
        pts = " ".join(f"{px(a)},{py(b)}" for a, b in zip(x, y))
        color = _COLORS.get(kinds.get(name, "curve"), _COLORS["curve"])
        lines.append(f'<polyline id="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def render_config(config, path=None) -> str:
    lines = {a: (r.curve.x, r.curve.y) for a, r in config.arcs.items()}
    kinds = {a: r.kind for a, r in config.arcs.items()}
    return render_svg(lines, path, kinds=kinds)


# ---------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    """How an output was produced.

    ``argv`` has output paths reduced to base names, so replaying into
    another directory yields the same manifest and the same bytes.
    ``wall_time`` is left out of the serialized form unless set.
    """

    command: str
    params: dict
    argv: list
    seed: int | None = None
    version: str = __version__
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_time: float | None = None

    def to_dict(self):
        d = {
            "command": self.command,
            "params": self.params,
            "argv": list(self.argv),
            "seed": self.seed,
            "version": self.version,
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
        }
        if self.wall_time is not None:
            d["wall_time"] = self.wall_time
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["command"], dict(d["params"]), list(d["argv"]), d.get("seed"), d.get("version", __version__),
            dict(d.get("inputs", {})), dict(d.get("outputs", {})), d.get("wall_time"),
        )
