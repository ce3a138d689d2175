"""Result files: JSON summaries, CSV tables and plot data, PNG figures."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["figure.figsize"] = (6.4, 4.2)
plt.rcParams["figure.dpi"] = 110
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3
plt.rcParams["savefig.bbox"] = "tight"


def clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars/arrays to Python, non-finite to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2) + "\n"


class OutputDir:
    """Layout: summary.json, meta.json, tables/*.csv, plots/*.csv and *.png."""

    def __init__(self, root):
        self.root = Path(root)
        (self.root / "tables").mkdir(parents=True, exist_ok=True)
        (self.root / "plots").mkdir(parents=True, exist_ok=True)

    def json(self, name: str, obj) -> Path:
        path = self.root / name
        path.write_text(dumps(obj))
        return path

    def table(self, name: str, header, rows, sub: str = "tables") -> Path:
        path = self.root / sub / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
        return path

    def plot(self, name: str, x, ys: dict, xlabel: str, ylabel: str,
             title: str | None = None, logx: bool = False, kind: str = "line") -> Path:
        """Write plot data ``plots/<name>.csv`` and render ``plots/<name>.png``."""
        x = np.asarray(x, dtype=float)
        cols = {k: np.asarray(v, dtype=float) for k, v in ys.items()}
        self.table(name, [xlabel] + list(cols), zip(x, *cols.values()), sub="plots")
        fig, ax = plt.subplots()
        for label, y in cols.items():
            if kind == "bar":
                width = np.min(np.diff(x)) * 0.8 if x.size > 1 else 0.8
                ax.bar(x, y, width=width, alpha=0.6, label=label)
            else:
                ax.plot(x, y, marker="o" if x.size <= 60 else None, ms=3, label=label)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(cols) > 1:
            ax.legend(frameon=False)
        path = self.root / "plots" / f"{name}.png"
        fig.savefig(path)
        plt.close(fig)
        return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v
