"""Figure rendering for the CLI report path.

Each experiment gets a small matplotlib figure written next to its delimited
output.  Figures are diagnostic companions to the tables, never the primary
record, so the styling stays deliberately plain.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_figure"]


def _style(ax, xlabel: str, ylabel: str, title: str) -> None:
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.grid(True, alpha=0.3)


def _column(table, name):
    idx = table.columns.index(name)
    return [row[idx] for row in table.rows]


def _plot_particle_spectrum(table, ax):
    n = _column(table, "n")
    ax.semilogy(n, _column(table, "eta_closed"), "o-", label="closed form")
    ax.semilogy(n, _column(table, "eta_numeric"), "s--", label="kernel eigensolve")
    ax.legend()
    _style(ax, "degree n", "relevance", "convolution-model relevance spectrum")


def _plot_qft_flow(table, ax):
    eps = _column(table, "eps")
    ax.plot(eps, _column(table, "tau"), "o-", label="tau(eps)")
    ax.plot(eps, _column(table, "lam"), "s-", label="lam(eps)")
    ax2 = ax.twinx()
    ax2.semilogy(eps[1:], _column(table, "drift_A2")[1:], "^--", color="tab:red",
                 label="drift A2")
    ax2.semilogy(eps[1:], _column(table, "drift_A4")[1:], "v--", color="tab:purple",
                 label="drift A4")
    ax2.set_ylabel("expectation drift")
    lines1, labels1 = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines1 + lines2, labels1 + labels2, fontsize=8)
    _style(ax, "regulator eps", "coupling", "regulator flow")


def _plot_mode_relevance(table, ax):
    k = np.asarray(_column(table, "k_norm"))
    order = np.argsort(k)
    for col in table.columns:
        if col.startswith("eta"):
            vals = np.asarray(_column(table, col))[order]
            ax.semilogy(k[order], vals, ".-", label=col)
    ax.legend(fontsize=8)
    _style(ax, "|k|", "relevance", "per-mode relevance")


def _plot_residual_bars(table, ax, value_col, label_col, title):
    labels = [str(v) for v in _column(table, label_col)]
    values = np.asarray(_column(table, value_col), dtype=float)
    floor = 1e-18
    ax.bar(range(len(values)), np.maximum(values, floor))
    ax.set_yscale("log")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, fontsize=7)
    _style(ax, label_col, value_col, title)


def _plot_quantum_particle(table, ax):
    row = table.rows[0]
    names = ["h_formula", "printed_formula", "linear_quadrature", "fock_oracle"]
    values = [row[table.columns.index(n)] for n in names]
    ax.bar(range(len(names)), values,
           color=["tab:blue", "tab:orange", "tab:green", "tab:red"])
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, fontsize=8)
    _style(ax, "", "eta(x)", "position relevance: candidates vs oracle")


def _plot_cutoff(table, ax):
    k = np.asarray(_column(table, "k_norm"))
    status = _column(table, "status")
    colors = {"common": "tab:green", "flagged": "tab:red", "absent": "tab:gray"}
    seen = set()
    for kn, st in zip(k, status):
        label = st if st not in seen else None
        seen.add(st)
        ax.scatter([kn], [1.0], color=colors[st], label=label, s=14)
    ax.legend(fontsize=8)
    ax.set_yticks([])
    _style(ax, "|k|", "", "modes kept by both cutoffs vs finer cutoff only")


def _plot_generic(table, ax):
    numeric_cols = []
    for name in table.columns:
        vals = _column(table, name)
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in vals):
            numeric_cols.append(name)
    if len(numeric_cols) < 2:
        ax.axis("off")
        ax.text(0.5, 0.5, "no numeric columns to plot", ha="center")
        return
    x = np.asarray(_column(table, numeric_cols[0]), dtype=float)
    for name in numeric_cols[1:5]:
        ax.plot(x, np.asarray(_column(table, name), dtype=float), ".-", label=name)
    ax.legend(fontsize=8)
    _style(ax, numeric_cols[0], "value", table.metadata.get("experiment", ""))


_PLOTTERS = {
    "particle-spectrum": _plot_particle_spectrum,
    "qft-flow": _plot_qft_flow,
    "field-mode-relevance": _plot_mode_relevance,
    "quantum-field-relevance": _plot_mode_relevance,
    "quantum-particle-relevance": _plot_quantum_particle,
    "cutoff-equivalence": _plot_cutoff,
    "h-operator-check": lambda t, ax: _plot_residual_bars(
        t, ax, "symmetry_residual", "trial", "H-operator symmetry residuals"),
    "functional-eigencheck": lambda t, ax: _plot_residual_bars(
        t, ax, "residual", "direction", "eigencheck coefficient residuals"),
}


def render_figure(table, experiment: str, path) -> str:
    """Write the experiment's figure to ``path`` (png) and return the path."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=140)
    plotter = _PLOTTERS.get(experiment, _plot_generic)
    plotter(table, ax)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)
