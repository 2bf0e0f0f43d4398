"""CSV and SVG output for calibration experiments."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import scipy.stats

from ..errors import ConfigError

__all__ = ["write_report", "histogram_edges", "fmt"]

MIN_BINS = 10
MAX_BINS = 200


def fmt(x):
    """Scientific notation with 6 significant digits."""
    return f"{float(x):.5e}"


def histogram_edges(values, min_bins=MIN_BINS, max_bins=MAX_BINS):
    """Freedman-Diaconis bin edges with at least ``min_bins`` bins.

    Degenerate samples (zero spread) get unit-width bins centred on the
    common value, following numpy's convention for a constant sample.
    """
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return np.linspace(0.0, 1.0, min_bins + 1)
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
        return np.linspace(lo, hi, min_bins + 1)
    edges = np.histogram_bin_edges(values, bins="fd", range=(lo, hi))
    nb = len(edges) - 1
    if nb < min_bins or nb > max_bins:
        edges = np.linspace(lo, hi, min(max(nb, min_bins), max_bins) + 1)
    return edges


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_report(report, out_dir, svg=False):
    """Write tables, histograms and the convergence series.

    Files written to ``out_dir``:

    * ``z_table.csv``: ``iteration,z_mean,chi2_mean,ks``
    * ``s_table.csv``: ``iteration,s_mean,trace_mean,trace_std``
    * ``verdicts.csv``: labels and the statistics behind them
    * ``z_hist_m<m>.csv`` and ``s_hist_m<m>.csv`` per checkpoint
    * ``convergence.csv``: relative energy-norm error and residual norm
      per iteration of the first test problem
    * ``*.svg`` renderings of the histograms when ``svg`` is true

    Floats use scientific notation with 6 significant digits, so a rerun
    with the same configuration reproduces the files byte for byte.

    Returns
    -------
    list of Path
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    p = out / "z_table.csv"
    _write_csv(p, ["iteration", "z_mean", "chi2_mean", "ks"],
               [[z.m, fmt(z.mean), fmt(z.chi2_mean), fmt(z.ks)] for z in report.z_sets])
    written.append(p)
    p = out / "s_table.csv"
    _write_csv(p, ["iteration", "s_mean", "trace_mean", "trace_std"],
               [[s.m, fmt(s.h), fmt(s.trace_mean), fmt(s.trace_std)] for s in report.s_sets])
    written.append(p)
    p = out / "verdicts.csv"
    _write_csv(p, ["iteration", "z_verdict", "ks", "z_lean", "s_verdict", "s_relative_gap",
                   "s_lean"],
               [[z.m, zv.label.value, fmt(zv.statistic), zv.lean.value, sv.label.value,
                 fmt(sv.statistic), sv.lean.value]
                for z, zv, sv in zip(report.z_sets, report.z_verdicts, report.s_verdicts)])
    written.append(p)

    for z, s in zip(report.z_sets, report.s_sets):
        edges = histogram_edges(z.samples)
        counts, _ = np.histogram(z.samples, edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        dens = (scipy.stats.chi2.pdf(mids, z.dof) if z.dof > 0
                else np.zeros_like(mids))
        p = out / f"z_hist_m{z.m}.csv"
        _write_csv(p, ["bin_left", "bin_right", "z_count", "chi2_density"],
                   [[fmt(a), fmt(b), int(c), fmt(d)]
                    for a, b, c, d in zip(edges[:-1], edges[1:], counts, dens)])
        written.append(p)

        edges = histogram_edges(np.concatenate([s.s, s.t]))
        sc, _ = np.histogram(s.s, edges)
        tc, _ = np.histogram(s.t, edges)
        p = out / f"s_hist_m{s.m}.csv"
        _write_csv(p, ["bin_left", "bin_right", "s_count", "trace_count"],
                   [[fmt(a), fmt(b), int(c), int(d)]
                    for a, b, c, d in zip(edges[:-1], edges[1:], sc, tc)])
        written.append(p)

    p = out / "convergence.csv"
    res = report.residuals
    _write_csv(p, ["iteration", "relative_error", "residual_norm"],
               [[k, fmt(e), fmt(res[k]) if k < len(res) else ""]
                for k, e in enumerate(report.convergence)])
    written.append(p)

    if svg:
        written.extend(_write_svgs(report, out))
    return written


def _write_svgs(report, out):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError("SVG output needs matplotlib (pip install artifact[plot])") from exc
    # fixed metadata keeps reruns byte-identical
    meta = {"Date": None, "Creator": None}
    plt.rcParams["svg.hashsalt"] = "krylov-calibration"
    files = []
    for z, s in zip(report.z_sets, report.s_sets):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
        edges = histogram_edges(z.samples)
        ax1.hist(z.samples, edges, density=True, color="0.6", label="Z samples")
        if z.dof > 0:
            grid = np.linspace(edges[0], edges[-1], 400)
            ax1.plot(grid, scipy.stats.chi2.pdf(grid, z.dof), "k-", label=f"chi2({z.dof})")
        ax1.set_title(f"Z statistic, m = {z.m}")
        ax1.legend(frameon=False)
        edges = histogram_edges(np.concatenate([s.s, s.t]))
        ax2.hist(s.s, edges, alpha=0.6, label="S samples")
        ax2.hist(s.t, edges, alpha=0.6, label="traces")
        ax2.axvline(s.h, color="k", lw=1)
        ax2.set_title(f"S statistic, m = {z.m}")
        ax2.legend(frameon=False)
        fig.tight_layout()
        p = out / f"hist_m{z.m}.svg"
        fig.savefig(p, format="svg", metadata=meta)
        plt.close(fig)
        files.append(p)

    if len(report.convergence):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.semilogy(np.arange(len(report.convergence)), report.convergence, "k-")
        ax.set_xlabel("iteration")
        ax.set_ylabel("relative error")
        fig.tight_layout()
        p = out / "convergence.svg"
        fig.savefig(p, format="svg", metadata=meta)
        plt.close(fig)
        files.append(p)
    return files
