"""Static SVG figures for the command-line report path.

Everything renders through the Agg backend to flat line plots.  Figures
are artifacts like the JSON/CSV files, so the writer pins every source
of nondeterminism matplotlib would otherwise inject: the hash salt used
for element ids, and the creation-date metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_lines",
    "profile_figure",
    "potential_figure",
    "series_figure",
]

_STYLE = {
    "svg.hashsalt": "swym",
    "figure.figsize": (6.4, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9.0,
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_lines(path, x, curves, xlabel, ylabel, title, logy=False,
               xlim=None):
    """One flat line plot; curves is a list of (y, label) pairs."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for y, label in curves:
            ax.plot(x, y, linewidth=1.0, label=label)
        if logy:
            ax.set_yscale("log")
        if xlim is not None:
            ax.set_xlim(*xlim)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if len(curves) > 1:
            ax.legend(loc="best")
        _save(fig, path)
    return path


def profile_figure(path, profile, r_max=50.0):
    """W(r) near the horizon where the structure lives."""
    r = np.geomspace(profile.r[0], r_max, 800)
    curves = [(profile.eval_w(r), "W"), (profile.eval_wp(r), "dW/dr")]
    return save_lines(path, r, curves, "r", "field",
                      "stationary profile, n = %d" % profile.n)


def potential_figure(path, potential, report=None, x_window=(-40.0, 120.0)):
    """Linearization potential, with the ground state overlaid if given."""
    x = potential.x
    m = (x >= x_window[0]) & (x <= x_window[1])
    curves = [(potential.v[m], "V")]
    if report is not None and report.count:
        phi = report.eigenfunctions[:, 0]
        scale = float(np.max(np.abs(potential.v))) / float(np.max(np.abs(phi)))
        curves.append((phi[m] * scale, "phi_0 (scaled)"))
    return save_lines(path, x[m], curves, "x", "V",
                      "linearization potential (%s)" % potential.kind)


def series_figure(path, series, fit=None):
    """Deviation norm against time, log scale, with the fitted growth line."""
    norm = series.deviation_norm
    curves = [(norm, "deviation norm")]
    if fit is not None and fit.status == "ok":
        lo, hi = fit.fit_window
        mask = (series.t >= lo) & (series.t <= hi)
        t0 = series.t[mask][0]
        ref = norm[mask][0]
        model = np.full_like(norm, np.nan)
        model[mask] = ref * np.exp(fit.lambda_measured * (series.t[mask] - t0))
        curves.append((model, "fit, rate %.6f" % fit.lambda_measured))
    # a fixed-point run has an identically zero norm; log scale would choke
    logy = bool(np.all(norm > 0.0))
    return save_lines(path, series.t, curves, "t", "norm",
                      "deviation growth", logy=logy)
