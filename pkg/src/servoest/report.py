"""Result serialization: delimited output files, the JSON manifest, and
matplotlib figures rendered alongside them.

All writers are atomic (temp file + rename) so a crash never leaves a
truncated artifact, and all numeric formatting is shortest-round-trip so
re-reading a file reproduces the values bit-exactly.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["TIMESERIES_COLUMNS", "SUMMARY_HEADER", "SummaryRow",
           "write_timeseries_csv", "write_summary_csv", "write_manifest",
           "write_comparison_csv", "render_timeseries_figure",
           "render_summary_figure", "render_comparison_figure",
           "render_input_response_figure"]

TIMESERIES_COLUMNS = (
    "t", "truth_disp", "truth_vel", "truth_acc", "truth_force",
    "meas_disp", "meas_force",
    "kf_disp", "kf_vel", "kf_acc",
    "pf_disp", "pf_vel", "pf_acc", "pf_force",
)

SUMMARY_HEADER = ("estimator,quantity,noise_level,particles,"
                  "interval_start,interval_end,nrmse_mean,nrmse_std,n")

COMPARISON_HEADER = "frequency_hz,model,quantity,nrmse"


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    quantity: str
    noise_level: str
    particles: int | None  # None for estimators without a particle count
    interval_start: float
    interval_end: float
    nrmse_mean: float
    nrmse_std: float
    n: int

    def to_csv(self) -> str:
        particles = "" if self.particles is None else str(self.particles)
        return ",".join([
            self.estimator, self.quantity, self.noise_level, particles,
            _fmt(self.interval_start), _fmt(self.interval_end),
            _fmt(self.nrmse_mean), _fmt(self.nrmse_std), str(self.n),
        ])


def _fmt(x: float) -> str:
    return repr(float(x))


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_timeseries_csv(path: str, columns: dict) -> None:
    """Write per-sample series under the canonical header.

    ``columns`` maps column names (a subset of TIMESERIES_COLUMNS that must
    include "t") to equal-length arrays; absent estimator columns are
    omitted from the header, preserving the canonical order.
    """
    unknown = set(columns) - set(TIMESERIES_COLUMNS)
    if unknown:
        raise ValueError(f"unknown time-series columns: {sorted(unknown)}")
    if "t" not in columns:
        raise ValueError("time-series output requires a 't' column")
    names = [c for c in TIMESERIES_COLUMNS if c in columns]
    arrays = [np.asarray(columns[c], dtype=float) for c in names]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("all time-series columns must have equal length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_summary_csv(path: str, rows) -> None:
    lines = [SUMMARY_HEADER]
    lines.extend(r.to_csv() for r in rows)
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_comparison_csv(path: str, rows) -> None:
    """Rows are (frequency_hz, model, quantity, nrmse) tuples."""
    lines = [COMPARISON_HEADER]
    for f, model, quantity, value in rows:
        lines.append(f"{_fmt(f)},{model},{quantity},{_fmt(value)}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_manifest(path: str, manifest: dict) -> None:
    _atomic_write_text(path, json.dumps(manifest, indent=2,
                                        sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Figures


def _save(fig, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_timeseries_figure(path: str, columns: dict) -> None:
    """Panel per estimated quantity: truth vs. available estimates."""
    t = np.asarray(columns["t"])
    panels = [("disp", "Displacement (m)"), ("vel", "Velocity (m/s)"),
              ("acc", "Acceleration (m/s$^2$)"), ("force", "Force (N)")]
    fig, axes = plt.subplots(len(panels), 1, figsize=(9, 10), sharex=True)
    for ax, (q, label) in zip(axes, panels):
        truth = columns.get(f"truth_{q}")
        if truth is not None:
            ax.plot(t, truth, "k-", lw=0.8, label="truth")
        for est, style in (("kf", "C0-"), ("pf", "C1-")):
            v = columns.get(f"{est}_{q}")
            if v is not None:
                ax.plot(t, v, style, lw=0.6, alpha=0.8, label=est.upper())
        ax.set_ylabel(label)
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("Time (s)")
    fig.suptitle("State estimates vs. truth")
    _save(fig, path)


def render_summary_figure(path: str, rows) -> None:
    """Grouped bars of ensemble-mean NRMSE with std error bars.

    One panel per quantity; within a panel, intervals on the x-axis and
    one bar per estimator/particle-count combination.
    """
    rows = list(rows)
    quantities = sorted({r.quantity for r in rows},
                        key=["disp", "vel", "acc", "force"].index)
    series = sorted({(r.estimator, r.particles) for r in rows},
                    key=lambda s: (s[0], s[1] or 0))
    intervals = sorted({(r.interval_start, r.interval_end) for r in rows})
    fig, axes = plt.subplots(1, len(quantities),
                             figsize=(4 * len(quantities), 4), squeeze=False)
    width = 0.8 / max(1, len(series))
    x = np.arange(len(intervals))
    for ax, q in zip(axes[0], quantities):
        for j, (est, npart) in enumerate(series):
            means, stds = [], []
            for iv in intervals:
                match = [r for r in rows
                         if r.quantity == q and r.estimator == est
                         and r.particles == npart
                         and (r.interval_start, r.interval_end) == iv]
                means.append(match[0].nrmse_mean if match else np.nan)
                stds.append(match[0].nrmse_std if match else 0.0)
            label = est.upper() if npart is None else f"{est.upper()} N={npart}"
            ax.bar(x + (j - (len(series) - 1) / 2) * width, means, width,
                   yerr=stds, capsize=2, label=label)
        ax.set_xticks(x)
        ax.set_xticklabels([f"{a:g}-{b:g} s" for a, b in intervals],
                           fontsize=8)
        ax.set_title(q)
        ax.set_ylabel("NRMSE (%)")
        ax.legend(fontsize=7)
    fig.suptitle("Interval NRMSE by estimator")
    fig.tight_layout()
    _save(fig, path)


def render_comparison_figure(path: str, rows) -> None:
    """Bars of nominal-model NRMSE vs. frequency, one panel per quantity."""
    rows = list(rows)
    quantities = sorted({r[2] for r in rows},
                        key=["disp", "vel", "acc"].index)
    models = sorted({r[1] for r in rows})
    freqs = sorted({r[0] for r in rows})
    fig, axes = plt.subplots(1, len(quantities),
                             figsize=(4 * len(quantities), 4), squeeze=False)
    width = 0.8 / max(1, len(models))
    x = np.arange(len(freqs))
    for ax, q in zip(axes[0], quantities):
        for j, model in enumerate(models):
            vals = []
            for f in freqs:
                match = [r[3] for r in rows
                         if r[0] == f and r[1] == model and r[2] == q]
                vals.append(match[0] if match else np.nan)
            ax.bar(x + (j - (len(models) - 1) / 2) * width, vals, width,
                   label=model)
        ax.set_xticks(x)
        ax.set_xticklabels([f"{f:g} Hz" for f in freqs])
        ax.set_title(q)
        ax.set_ylabel("NRMSE (%)")
        ax.legend(fontsize=8)
    fig.suptitle("Nominal-model accuracy vs. input frequency")
    fig.tight_layout()
    _save(fig, path)


def render_input_response_figure(path: str, t, command, disp, force) -> None:
    """Command vs. measured displacement plus the force-displacement loop."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    ax1.plot(t, command, "k--", lw=0.7, label="command")
    ax1.plot(t, disp, "C0-", lw=0.7, label="response")
    ax1.set_xlabel("Time (s)")
    ax1.set_ylabel("Displacement (m)")
    ax1.legend(fontsize=8)
    ax2.plot(disp, force, "C1-", lw=0.5)
    ax2.set_xlabel("Displacement (m)")
    ax2.set_ylabel("Specimen force (N)")
    fig.suptitle("Plant response")
    fig.tight_layout()
    _save(fig, path)
