"""Figure rendering for the CLI report paths.

Figures are written next to the delimited outputs (PNG via the Agg backend,
no display requirement); every renderer strips PNG metadata so repeated runs
produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectra import EigenvalueKind

_KIND_STYLE = {
    EigenvalueKind.ORIGIN: ("tab:green", "s"),
    EigenvalueKind.REAL_POSITIVE: ("tab:blue", "o"),
    EigenvalueKind.REAL_NEGATIVE: ("tab:purple", "o"),
    EigenvalueKind.COMPLEX_PAIR: ("tab:red", "D"),
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata={})
    plt.close(fig)


def render_dispersion_map(re_grid, im_grid, abs_d, records, path):
    """Log-magnitude map of the dispersion function with located zeros."""
    fig, ax = plt.subplots(figsize=(8.0, 4.2))
    logmag = np.log10(np.maximum(abs_d, 1e-300))
    mesh = ax.pcolormesh(re_grid, im_grid, logmag, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$\log_{10} |D(\lambda)|$")
    for rec in records:
        color, marker = _KIND_STYLE[rec.kind]
        ax.plot(rec.lam.real, rec.lam.imag, marker=marker, color=color,
                markersize=5 + 2 * rec.multiplicity, markerfacecolor="none",
                markeredgewidth=1.4)
    ax.set_xlabel(r"$\mathrm{Re}\,\lambda$")
    ax.set_ylabel(r"$\mathrm{Im}\,\lambda$")
    ax.set_title("dispersion magnitude and located eigenvalues")
    _save(fig, path)


def render_spectrum(records, path):
    """Complex-plane scatter of the eigenvalue records."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    seen = set()
    for rec in records:
        color, marker = _KIND_STYLE[rec.kind]
        label = rec.kind.value if rec.kind.value not in seen else None
        seen.add(rec.kind.value)
        ax.scatter([rec.lam.real], [rec.lam.imag], s=40 + 40 * rec.multiplicity,
                   c=color, marker=marker, label=label, alpha=0.75,
                   edgecolors="black", linewidths=0.5)
        if rec.multiplicity > 1:
            ax.annotate(f"x{rec.multiplicity}", (rec.lam.real, rec.lam.imag),
                        textcoords="offset points", xytext=(6, 6), fontsize=8)
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.axvline(0.0, color="gray", lw=0.6)
    ax.set_xlabel(r"$\mathrm{Re}\,\lambda$")
    ax.set_ylabel(r"$\mathrm{Im}\,\lambda$")
    ax.set_title("transmission eigenvalues (marker size = multiplicity)")
    if seen:
        ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def render_inversion(result, path):
    """Recovered profile alongside the optimizer's misfit trajectory."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    xs = np.linspace(0.0, result.profile.b, 400)
    ax1.plot(xs, result.profile.value(xs), lw=1.6)
    ax1.set_xlabel("x")
    ax1.set_ylabel("recovered profile")
    ax1.set_title(f"recovered (a = {result.inferred_a:.6g})")
    if result.misfit_history:
        ax2.semilogy(range(len(result.misfit_history)), result.misfit_history,
                     marker="o", ms=3)
    ax2.set_xlabel("accepted step")
    ax2.set_ylabel("misfit")
    ax2.set_title("converged" if result.converged else "not converged")
    _save(fig, path)
