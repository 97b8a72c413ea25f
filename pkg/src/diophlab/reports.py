"""Report writers: JSON (UTF-8, sorted keys), CSV (RFC 4180) and SVG heatmaps."""
from __future__ import annotations

import csv
import io
import json
import os
from fractions import Fraction
from xml.sax.saxutils import escape

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))
    return path


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, tuple)):
        return " ".join(_cell(v) for v in x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_csv(header, rows))
    return path


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def heatmap_svg(grid, title="", cell=8, lo=(0.0, 0.0), hi=(1.0, 1.0), palette=("#f4f4f4", "#2b6cb0")) -> str:
    """Two-dimensional boolean or [0, 1] valued grid as an SVG of coloured cells.

    ``grid[i, j]`` is drawn with ``i`` along the horizontal axis and ``j``
    increasing upwards, matching the row-major entry order of a 1x2 box.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2:
        raise ValueError("heatmaps need a 2-D grid")
    nx, ny = g.shape
    pad = 24
    W, H = nx * cell + 2 * pad, ny * cell + 2 * pad
    c0 = np.array([int(palette[0][k:k + 2], 16) for k in (1, 3, 5)])
    c1 = np.array([int(palette[1][k:k + 2], 16) for k in (1, 3, 5)])
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f"<title>{escape(title)}</title>",
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>']
    for i in range(nx):
        for j in range(ny):
            v = min(1.0, max(0.0, g[i, j]))
            rgb = (c0 + (c1 - c0) * v).round().astype(int)
            x, y = pad + i * cell, pad + (ny - 1 - j) * cell
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"/>')
    out.append(f'<text x="{pad}" y="{pad - 8}" font-size="11" font-family="sans-serif">{escape(title)}</text>')
    out.append(f'<text x="{pad}" y="{H - 6}" font-size="9" font-family="sans-serif">'
               f"[{lo[0]:g}, {hi[0]:g}] x [{lo[1]:g}, {hi[1]:g}]</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, grid, **kw):
    return write_text(path, heatmap_svg(grid, **kw))


class ReportSink:
    """Writes the files of one run into ``out_dir`` with a common prefix.

    Every JSON document gets ``config_hash`` and ``seed`` stamped in.
    """

    def __init__(self, out_dir, prefix, formats, config_hash, seed):
        self.out_dir = out_dir
        self.prefix = prefix
        self.formats = set(formats)
        self.config_hash = config_hash
        self.seed = seed
        self.written = []
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, suffix):
        return os.path.join(self.out_dir, f"{self.prefix}{suffix}")

    def json(self, doc, suffix=".json", force=False):
        if "json" in self.formats or force:
            doc = dict(doc)
            doc["config_hash"] = self.config_hash
            doc["seed"] = self.seed
            self.written.append(write_json(self._path(suffix), doc))

    def csv(self, header, rows, suffix=".csv"):
        if "csv" in self.formats:
            header = list(header) + ["config_hash", "seed"]
            rows = [list(r) + [self.config_hash, self.seed] for r in rows]
            self.written.append(write_csv(self._path(suffix), header, rows))

    def svg(self, grid, suffix=".svg", **kw):
        if "svg" in self.formats:
            kw["title"] = f"{kw.get('title', '')} [config {self.config_hash} seed {self.seed}]".strip()
            self.written.append(write_svg(self._path(suffix), grid, **kw))

    def text(self, text, suffix):
        """Certificates and direction files are always written."""
        self.written.append(write_text(self._path(suffix), text))
