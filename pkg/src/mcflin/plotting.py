"""Figure rendering for experiment outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_X_COLUMNS = {
    "binary-sweep": ("q", "dropout level q"),
    "explicit-vs-implicit": ("M", "corrupted copies M"),
    "nightmare": ("deletion", "feature deletion fraction"),
}


def render_protocol_figure(rows, protocol, out_path):
    """Line plot of test error per trainer over the protocol's sweep axis.

    `rows` are dicts sharing the experiment CSV schema.  The implicit
    reference row of explicit-vs-implicit (empty M) is drawn as a horizontal
    line.
    """
    xcol, xlabel = _X_COLUMNS[protocol]
    fig, ax = plt.subplots(figsize=(6, 4))
    trainers = sorted({row["trainer"] for row in rows})
    for trainer in trainers:
        points = [(row[xcol], row["error"]) for row in rows
                  if row["trainer"] == trainer and row.get(xcol) not in ("", None)]
        refs = [row["error"] for row in rows
                if row["trainer"] == trainer and row.get(xcol) in ("", None)]
        if points:
            points.sort(key=lambda p: float(p[0]))
            xs = [float(p[0]) for p in points]
            ys = [float(p[1]) for p in points]
            if protocol == "explicit-vs-implicit":
                ax.semilogx(xs, ys, marker="o", base=2, label=trainer)
            else:
                ax.plot(xs, ys, marker="o", label=trainer)
        for ref in refs:
            ax.axhline(float(ref), linestyle="--", alpha=0.7,
                       label=f"{trainer} (implicit)")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("classification error")
    ax.set_title(protocol)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
