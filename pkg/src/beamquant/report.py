"""Figure rendering for sweep results.

Renders the two standard summary panels, average sum power and average
solve time versus the user rate target, to an image file next to the
CSV/JSON output of the sweep.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_sweep_figure(aggregates, path, title=None):
    """Write a two-panel summary figure for a finished sweep.

    ``aggregates`` is the per-rate-target list produced by
    :func:`beamquant.bench.run_sweep`.
    """
    rates = [a["rate_target"] for a in aggregates]
    power = [a["mean_objective"] for a in aggregates]
    times = [a["mean_wall_time_ms"] for a in aggregates]

    fig, (ax_power, ax_time) = plt.subplots(1, 2, figsize=(10, 4))
    ax_power.plot(rates, power, "o-")
    ax_power.set_xlabel("user rate target (bits/symbol)")
    ax_power.set_ylabel("average sum power")
    ax_power.grid(True, alpha=0.4)

    ax_time.plot(rates, times, "s-", color="tab:orange")
    ax_time.set_xlabel("user rate target (bits/symbol)")
    ax_time.set_ylabel("average solve time (ms)")
    ax_time.grid(True, alpha=0.4)

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
