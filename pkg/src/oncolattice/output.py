"""CSV, SVG and manifest writers.

CSV is the artifact of record: one header line, every value written with 17
significant digits so that a float survives the round trip bit for bit, LF
line endings.  SVG plots are quick looks rendered with matplotlib.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .experiments import HeatmapResult, PhasePortrait, Table

__all__ = ["write_csv", "read_csv", "format_value", "write_svg", "update_manifest", "MANIFEST_NAME"]

MANIFEST_NAME = "manifest.json"


def format_value(v: float) -> str:
    v = float(v)
    if np.isnan(v):
        return "nan"
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def write_csv(table: Table, path: Union[str, Path]) -> Path:
    """Write ``table`` with a header row; an empty table gives a header-only file."""
    path = Path(path)
    lines = [",".join(table.columns)]
    for row in table.data:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path: Union[str, Path]) -> Table:
    with open(path, encoding="ascii", newline="") as fh:
        text = fh.read()
    rows = text.split("\n")
    if rows and rows[-1] == "":
        rows.pop()
    if not rows:
        raise ValueError(f"{path}: missing header")
    columns = rows[0].split(",")
    data = [[float(x) for x in r.split(",")] for r in rows[1:]]
    return Table(columns, np.array(data, dtype=float).reshape(-1, len(columns)))


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "oncolattice"
    return plt


def _save(fig, path: Path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def write_svg(obj, path: Union[str, Path], title: str = "", columns: Optional[Iterable[str]] = None) -> Path:
    """Render a time series table, a phase portrait or a heatmap as SVG."""
    path = Path(path)
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        if isinstance(obj, PhasePortrait):
            X, Y = np.meshgrid(obj.grid_x, obj.grid_y)
            ax.quiver(X, Y, obj.direction[..., 0], obj.direction[..., 1], color="0.6", angles="xy")
            for tab in obj.trajectories:
                ax.plot(tab.column("x"), tab.column("y"), lw=1.2)
            for st, v in obj.steady_states:
                ax.plot(st.x, st.y, "o", color="k" if v.stable else "w", mec="k")
            ax.set_xlim(0, 1.2)
            ax.set_ylim(0, 1.2)
            ax.set_xlabel("x")
            ax.set_ylabel("y")
        elif isinstance(obj, HeatmapResult):
            img = ax.imshow(obj.values, origin="lower", aspect="auto", cmap="rainbow",
                            extent=(obj.gamma[0], obj.gamma[-1], obj.theta[0], obj.theta[-1]))
            fig.colorbar(img, ax=ax)
            ax.set_xlabel("gamma")
            ax.set_ylabel("theta")
        else:
            t = obj.data[:, 0]
            cols = list(columns) if columns is not None else [c for c in obj.columns[1:] if not c.startswith("c")]
            for c in cols:
                ax.plot(t, obj.column(c), label=c)
            ax.set_xlabel(obj.columns[0])
            ax.legend(fontsize="small")
        if title:
            ax.set_title(title)
        _save(fig, path)
    finally:
        plt.close(fig)
    return path


def update_manifest(out_dir: Union[str, Path], entry: dict) -> Path:
    """Insert or replace the manifest record for ``entry['name']``.

    Records are kept sorted by name and the file carries no timestamps, so
    repeated runs produce identical manifests.
    """
    path = Path(out_dir) / MANIFEST_NAME
    records = []
    if path.exists():
        try:
            records = json.loads(path.read_text()).get("scenarios", [])
        except (json.JSONDecodeError, AttributeError):
            records = []
    records = [r for r in records if r.get("name") != entry["name"]] + [entry]
    records.sort(key=lambda r: r["name"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"scenarios": records}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
