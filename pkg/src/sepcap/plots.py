"""Figure emission for experiment results.

Figures are rendered with matplotlib straight to SVG next to the delimited
output.  Byte determinism: a fixed svg.hashsalt, no date metadata, and glyphs
as paths, so rerunning a config reproduces identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_RC = {
    "svg.hashsalt": "sepcap",
    "svg.fonttype": "path",
    "figure.figsize": (6.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
}

_METADATA = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata=_METADATA)
    plt.close(fig)


def _line_plot(path: Path, xs, ys, xlabel: str, ylabel: str, title: str, logx: bool = False):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(xs, ys, marker="o")
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        _save(fig, path)


def _curve_with_bound(path: Path, xs, ys, errs, bounds, xlabel: str, title: str):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.errorbar(xs, ys, yerr=errs, marker="o", label="empirical", capsize=3)
        ax.plot(xs, bounds, marker="s", linestyle="--", label="lower bound")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("separation probability")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def emit_plots(result, out_dir) -> dict:
    """Write one SVG per available sweep plus an index.json.

    Empty sweeps produce no plot; the index notes the absence.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = {"plots": [], "absent": []}

    sweep = result.curves.get("margin_vs_n_hat") or []
    if sweep:
        xs = [row["n_hat"] for row in sweep]
        _line_plot(
            out / "success_vs_n_hat.svg",
            xs,
            [row["success_fraction"] for row in sweep],
            "output width n_hat",
            "success fraction",
            "separation success vs output width",
            logx=True,
        )
        index["plots"].append("success_vs_n_hat.svg")
        margins = [row["median_margin"] for row in sweep]
        if all(m is not None for m in margins):
            _line_plot(
                out / "margin_vs_n_hat.svg", xs, margins,
                "output width n_hat", "median margin", "observed margin vs output width", logx=True,
            )
            index["plots"].append("margin_vs_n_hat.svg")
    else:
        index["absent"].append("margin_vs_n_hat")

    curve = result.curves.get("probability_vs_t") or []
    if curve:
        _curve_with_bound(
            out / "probability_vs_t.svg",
            [row["t"] for row in curve],
            [row["estimate"] for row in curve],
            [row["std_error"] for row in curve],
            [row["lower_bound"] for row in curve],
            "separation level t",
            "random-hyperplane separation probability",
        )
        index["plots"].append("probability_vs_t.svg")
    else:
        index["absent"].append("probability_vs_t")

    dev = result.curves.get("deviation_vs_n") or []
    if dev:
        _line_plot(
            out / "deviation_vs_n.svg",
            [row["n"] for row in dev],
            [row["max_abs_deviation"] for row in dev],
            "layer width n",
            "max absolute deviation",
            "worst deviation vs layer width",
            logx=True,
        )
        index["plots"].append("deviation_vs_n.svg")
    else:
        index["absent"].append("deviation_vs_n")

    (out / "index.json").write_text(json.dumps(index, sort_keys=True, indent=2) + "\n")
    return index
