"""Figures written next to the CSV reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mi import ConvexityReport, MiCurve, MiRow  # noqa: E402
from .rates import GainPoint, RateLine  # noqa: E402
from .sim import BerRecord  # noqa: E402


def _finish(fig, ax, path):
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_mi_curve(rows: list[MiRow], path):
    g = np.array([r.gamma for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(g, [r.mi_low for r in rows], label="low level")
    ax.plot(g, [r.mi_high for r in rows], label="high level")
    ax.plot(g, [r.mi_total for r in rows], "k--", label="QPSK total")
    ax.set_xlabel("linear SNR")
    ax.set_ylabel("MI [bits/channel use]")
    return _finish(fig, ax, path)


def plot_convexity(curve: MiCurve, report: ConvexityReport, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curve.gammas, curve.values, label="MI")
    a, b = report.gamma_a, report.gamma_b
    ax.plot([a, b], [curve.value_at(a), curve.value_at(b)], "r--",
            label=f"chord, max violation {report.max_chord_violation:.2e}")
    ax.axvspan(a, b, color="C1" if report.is_convex else "0.8", alpha=0.15)
    ax.set_xlabel("linear SNR")
    ax.set_ylabel("MI [bits/channel use]")
    return _finish(fig, ax, path)


def plot_ar_line(curve: MiCurve, line: RateLine, points: list[GainPoint], path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curve.gammas, curve.values, label="low-level MI")
    g = np.linspace(0, line.gamma1, 50)
    ax.plot(g, line.slope * g, "k:", label="repetition line")
    ax.plot([p.gamma_m for p in points], [p.ar for p in points], "o",
            label="repeated operating points")
    for p in points:
        ax.annotate(f"M={p.M}", (p.gamma_m, p.ar), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_xlim(0, max(line.gamma1 * 1.3, 0.5))
    ax.set_ylim(0, min(1.0, line.rate1 * 1.5))
    ax.set_xlabel("linear SNR")
    ax.set_ylabel("rate [bits/channel use]")
    return _finish(fig, ax, path)


def plot_ber(records: list[BerRecord], path, label: str = "low level"):
    fig, ax = plt.subplots(figsize=(6, 4))
    shown = [r for r in records if r.bit_errors > 0]
    ax.semilogy([r.snr_db for r in shown], [r.ber for r in shown], "o-", label=label)
    weak = [r for r in shown if not r.confident]
    if weak:
        ax.semilogy([r.snr_db for r in weak], [r.ber for r in weak], "x", color="r",
                    label="low confidence")
    ax.set_xlabel("SNR per slot [dB]")
    ax.set_ylabel("BER")
    return _finish(fig, ax, path)
