"""PNG figures written next to the CSV reports.

Uses ``matplotlib.figure.Figure`` directly (Agg canvas), so nothing here
touches pyplot's global state or needs a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

from ccnoc.ccta import TXN_TYPES

_COLORS = ("#1b6ca8", "#d1495b", "#66a182", "#edae49", "#6c4f77", "#444444")


def _figure(w=6.0, h=3.4) -> Figure:
    return Figure(figsize=(w, h), layout="constrained")


def _style(ax):
    for k in ("top", "right"):
        ax.spines[k].set_visible(False)
    ax.tick_params(labelsize=8)


def plot_link_traffic(link_flits: dict[tuple[int, int], int], path, title="Flits per directed link"):
    fig = _figure()
    ax = fig.add_subplot()
    items = sorted(link_flits.items())
    if items:
        ax.bar(range(len(items)), [v for _, v in items], color=_COLORS[0], width=0.8)
        if len(items) <= 48:
            ax.set_xticks(range(len(items)), [f"{a}>{b}" for (a, b), _ in items],
                          rotation=90, fontsize=6)
    else:
        ax.text(0.5, 0.5, "no traffic", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("link")
    ax.set_ylabel("flits")
    ax.set_title(title, fontsize=10)
    _style(ax)
    fig.savefig(path, dpi=120)
    return Path(path)


def plot_transaction_times(records, path):
    """Histogram of sealed transaction durations by type."""
    fig = _figure()
    ax = fig.add_subplot()
    any_data = False
    for i, t in enumerate(TXN_TYPES):
        d = [r.end_cycle - r.start_cycle for r in records if r.type == t and r.end_cycle is not None]
        if d:
            any_data = True
            ax.hist(d, bins=40, alpha=0.6, color=_COLORS[i], label=f"{t} (n={len(d)})")
    if any_data:
        ax.legend(frameon=False, fontsize=8)
    else:
        ax.text(0.5, 0.5, "no transactions", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("cycles from issue to completion")
    ax.set_ylabel("transactions")
    _style(ax)
    fig.savefig(path, dpi=120)
    return Path(path)


def plot_training(episode_rewards: Sequence[float], topologies: Sequence[str], path,
                  labels: Sequence[str] = ()):
    """Episode reward curve (with a 10-episode running mean) over topology choices."""
    fig = _figure(6.0, 4.6)
    ax, ax2 = fig.subplots(2, 1, sharex=True, height_ratios=(3, 1.4))
    r = np.asarray(episode_rewards, dtype=float)
    x = np.arange(len(r))
    ax.plot(x, r, color=_COLORS[0], lw=0.8, alpha=0.6, label="episode")
    if len(r) >= 10:
        run = np.convolve(r, np.ones(10) / 10, mode="valid")
        ax.plot(x[9:], run, color=_COLORS[1], lw=1.6, label="10-episode mean")
    ax.set_ylabel("mean epoch reward")
    ax.legend(frameon=False, fontsize=8)
    _style(ax)
    names = list(labels) or sorted(set(topologies))
    idx = {n: i for i, n in enumerate(names)}
    ax2.scatter(np.arange(len(topologies)), [idx[t] for t in topologies], s=6, color=_COLORS[2])
    ax2.set_yticks(range(len(names)), names, fontsize=7)
    ax2.set_xlabel("episode")
    _style(ax2)
    fig.savefig(path, dpi=120)
    return Path(path)
