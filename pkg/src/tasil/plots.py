"""Kaplan-Meier figure rendering.

Step plots with censoring tick marks and a legend carrying group sizes (and the
log-rank p when supplied). Output is deterministic: the SVG hash salt is pinned
and date metadata is stripped, so equal inputs produce byte-identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .survival import KMCurve  # noqa: E402

_GROUP_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def km_plot_arrays(curve: KMCurve):
    """Step-plot arrays (times, survival) starting at (0, 1)."""
    times = [0.0] + [s.time for s in curve.steps]
    survival = [1.0] + [s.survival for s in curve.steps]
    return times, survival


def save_km_plot(groups, out_path, *, title=None, logrank_p=None, p_note=None):
    """Render KM curves for ``groups`` (sequence of (label, KMCurve)) to a file.

    The file format follows the extension (.svg or .png). Censor times are
    drawn as vertical ticks on the curve; the legend shows each group's size.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for i, (label, curve) in enumerate(groups):
        colour = _GROUP_COLOURS[i % len(_GROUP_COLOURS)]
        times, survival = km_plot_arrays(curve)
        ax.step(times, survival, where="post", color=colour,
                label=f"{label} (n={curve.n_total})")
        if curve.censor_times:
            ax.plot(curve.censor_times,
                    [curve.survival_at(t) for t in curve.censor_times],
                    linestyle="none", marker="|", markersize=8, color=colour)
    ax.set_xlabel("Time (months)")
    ax.set_ylabel("Survival probability")
    ax.set_ylim(0.0, 1.05)
    ax.set_xlim(left=0.0)
    if title:
        ax.set_title(title)
    if logrank_p is not None:
        note = f"log-rank p = {logrank_p:.3g}"
        if p_note:
            note += f" ({p_note})"
        ax.text(0.02, 0.05, note, transform=ax.transAxes, fontsize=9)
    ax.legend(loc="best", fontsize=9)
    ax.grid(color="0.85", linewidth=0.5)
    fig.tight_layout()
    save_figure(fig, out_path)
    plt.close(fig)


def save_figure(fig, out_path) -> None:
    """Write a figure deterministically (pinned hash salt, no date metadata)."""
    out_path = str(out_path)
    metadata = {"Date": None} if out_path.endswith(".svg") else None
    with matplotlib.rc_context({"svg.hashsalt": "tasil"}):
        fig.savefig(out_path, metadata=metadata)
