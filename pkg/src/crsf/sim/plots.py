"""SVG figures from experiment CSVs (mean lines with mean +/- std bands)."""
from __future__ import annotations

import os
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import read_csv  # noqa: E402


class PlotError(ValueError):
    pass


# per experiment: x column, series key column, and the two panels (metric, y label)
LAYOUT = {
    "request-sweep": ("num_requests", "num_sfs", "SFs",
                      [("aggregate_qos", "aggregate priority-weighted QoS"), ("asr", "ASR")]),
    "sf-sweep": ("num_sfs", "num_requests", "requests",
                 [("aggregate_qos", "aggregate priority-weighted QoS"), ("asr", "ASR")]),
    "per-request-qos": ("num_sfs", "num_requests", "requests",
                        [("qos_per_request", "priority-weighted QoS per request"),
                         ("aggregate_qos", "aggregate priority-weighted QoS")]),
    "capacity-sweep": ("capacity_override", "num_sfs", "SFs",
                       [("aggregate_qos", "aggregate priority-weighted QoS"), ("asr", "ASR")]),
}
XLABEL = {"num_requests": "number of requests", "num_sfs": "number of SFs",
          "capacity_override": "SF capacity"}


def _num(s: str) -> float | None:
    return float(s) if s != "" else None


def render_plots(csv_path: str | os.PathLike, out_dir: str | os.PathLike | None = None) -> list[Path]:
    """Write one two-panel SVG per experiment found in the CSV; returns the paths."""
    csv_path = Path(csv_path)
    rows = read_csv(csv_path)
    if not rows:
        raise PlotError(f"{csv_path}: no data rows")
    out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    by_exp: dict[str, list[dict[str, str]]] = defaultdict(list)
    for row in rows:
        if row["experiment"] not in LAYOUT:
            raise PlotError(f"{csv_path}: unknown experiment {row['experiment']!r}")
        by_exp[row["experiment"]].append(row)
    paths = []
    for name in sorted(by_exp):
        path = out_dir / f"{name}.svg"
        _render(name, by_exp[name], path)
        paths.append(path)
    return paths


def _render(name: str, rows: list[dict[str, str]], path: Path) -> None:
    xcol, keycol, keylabel, panels = LAYOUT[name]
    series: dict[tuple[str, str], list[dict[str, str]]] = defaultdict(list)
    for row in rows:
        series[(row["solver"], row[keycol])].append(row)
    with plt.rc_context({"svg.hashsalt": "crsf", "svg.fonttype": "path"}):
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for ax, (metric, ylabel) in zip(axes, panels):
            for (solver, key), pts in sorted(series.items(), key=lambda kv: (kv[0][0], float(kv[0][1]))):
                pts = sorted(pts, key=lambda r: float(r[xcol] or 0))
                xs, mean, std = [], [], []
                for r in pts:
                    m = _num(r[f"mean_{metric}"])
                    if m is None or r[xcol] == "":
                        continue
                    xs.append(float(r[xcol]))
                    mean.append(m)
                    std.append(_num(r[f"std_{metric}"]) or 0.0)
                if not xs:
                    continue
                style = "-" if solver != "baseline" else "--"
                line, = ax.plot(xs, mean, style, marker="o", ms=3,
                                label=f"{solver}, {key} {keylabel}")
                ax.fill_between(xs, [a - b for a, b in zip(mean, std)],
                                [a + b for a, b in zip(mean, std)], color=line.get_color(), alpha=0.15)
            ax.set_xlabel(XLABEL[xcol])
            ax.set_ylabel(ylabel)
            ax.grid(True, alpha=0.3)
        axes[0].legend(fontsize=7)
        fig.suptitle(name)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
