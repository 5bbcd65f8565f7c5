"""Figure rendering for the CLI report paths.

Figures accompany the delimited output when requested; they are saved
with fixed metadata and dpi so repeated runs produce byte-identical
files.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pointer import SweepRow

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": "povmlab"}}


def save_sweep_figure(rows: Sequence[SweepRow], path: str) -> None:
    """Sharpness against the coupling-to-width ratio, both routes."""
    ratios = [r.kappa / r.delta for r in rows]
    fig, (ax, ax_err) = plt.subplots(
        2, 1, figsize=(6.0, 6.0), sharex=True, height_ratios=[3, 1]
    )
    order = sorted(range(len(rows)), key=lambda i: ratios[i])
    xs = [ratios[i] for i in order]
    ax.plot(xs, [rows[i].eta_analytic for i in order], "-", label="closed form")
    ax.plot(xs, [rows[i].eta_numeric for i in order], "x", label="pointer grid")
    ax.set_ylabel("sharpness")
    ax.legend()
    ax_err.semilogy(
        xs,
        [max(rows[i].abs_diff, 1e-17) for i in order],
        ".k",
    )
    ax_err.set_xlabel("kappa / delta")
    ax_err.set_ylabel("|difference|")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_sample_figure(
    frequencies: Mapping[str, float], born: Mapping[str, float], path: str
) -> None:
    """Observed frequencies next to trace-rule predictions."""
    labels = list(frequencies)
    xs = range(len(labels))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar([x - 0.2 for x in xs], [frequencies[l] for l in labels], 0.4, label="observed")
    ax.bar([x + 0.2 for x in xs], [born[l] for l in labels], 0.4, label="Born")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_ylabel("probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_tomo_figure(
    points: Sequence[tuple[float, float, float, float]], path: str
) -> None:
    """Estimated sharpness with 2-sigma bars over the closed-form law.

    ``points`` rows are (kappa, delta, eta_hat, stderr).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = [k / d for k, d, _, _ in points]
    ax.errorbar(
        xs,
        [e for _, _, e, _ in points],
        yerr=[2 * s for _, _, _, s in points],
        fmt="o",
        capsize=3,
        label="tomography (2 stderr)",
    )
    if xs:
        grid = [min(xs) + (max(xs) - min(xs) + 1e-9) * t / 200 for t in range(201)]
        ax.plot(grid, [math.erf(x / math.sqrt(2)) for x in grid], "-", label="erf law")
    ax.set_xlabel("kappa / delta")
    ax.set_ylabel("sharpness")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
