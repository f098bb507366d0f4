"""Figure rendering for experiment reports.

Each experiment writes a PNG next to its CSV: an empirical CDF of the sum
spectral efficiency for the ``cdf`` experiment, and mean-SE curves for the
two sweeps.  Rendering is optional and never affects the CSV bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import METHOD_ORDER, RunRecord, aggregate_cdf, aggregate_mean

_STYLE = {
    "EXH": {"color": "#1b9e77", "linestyle": "-"},
    "RLX": {"color": "#d95f02", "linestyle": "--"},
    "SPLIT": {"color": "#7570b3", "linestyle": ":"},
}


def _present_methods(records: list[RunRecord]) -> list[str]:
    present = {r.method for r in records}
    return [m for m in METHOD_ORDER if m in present]


def plot_cdf(records: list[RunRecord], path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method in _present_methods(records):
        points = aggregate_cdf(records, method)
        ax.step([p[0] for p in points], [p[1] for p in points],
                where="post", label=method, **_STYLE[method])
    ax.set_xlabel("sum spectral efficiency [bits/s/Hz]")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.0)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mean_sweep(records: list[RunRecord], x_field: str, path: str) -> None:
    """Mean sum SE per method against ``si_db`` or ``m``."""
    labels = {"si_db": "SI cancellation level [dB]", "m": "BS antennas M"}
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method in _present_methods(records):
        means = aggregate_mean(
            [r for r in records if r.method == method], (x_field,)
        )
        xs = sorted(key[0] for key in means)
        ax.plot(xs, [means[(x,)] for x in xs], marker="o", label=method,
                **_STYLE[method])
    ax.set_xlabel(labels.get(x_field, x_field))
    ax.set_ylabel("mean sum spectral efficiency [bits/s/Hz]")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(records: list[RunRecord], experiment: str, csv_path: str) -> str | None:
    """Render the figure matching the experiment next to its CSV.

    Returns the figure path, or None for experiments without a figure.
    """
    if not records:
        return None
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    figure_path = stem + ".png"
    if experiment == "cdf":
        plot_cdf(records, figure_path)
    elif experiment == "sweep_si":
        plot_mean_sweep(records, "si_db", figure_path)
    elif experiment == "sweep_antennas":
        plot_mean_sweep(records, "m", figure_path)
    else:
        return None
    return figure_path
