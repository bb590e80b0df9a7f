"""Render each experiment's CSV rows as a matplotlib figure.

The report path saves one PNG next to each CSV.  Styling is kept small and
local so the figures look consistent without touching global state.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 4,
    "savefig.bbox": "tight",
}


def _groupby(rows, key):
    order, groups = [], {}
    for row in rows:
        k = row[key]
        if k not in groups:
            groups[k] = []
            order.append(k)
        groups[k].append(row)
    return [(k, groups[k]) for k in order]


def _plot_lsa(rows, ax):
    c_w = [r["c_w"] for r in rows]
    ax.loglog(c_w, [r["eta_opt"] for r in rows], "o-", label="optimal (M, W)")
    ax.loglog(c_w, [r["eta_maxM"] for r in rows], "s--", label="max antennas")
    ax.loglog(c_w, [r["eta_maxW"] for r in rows], "^--", label="max bandwidth")
    ax.set_xlabel("spectrum cost $c_w$ (cu/s per MHz)")
    ax.set_ylabel("cost efficiency (bits/cu)")
    ax.legend()


def _plot_smallcell(rows, ax):
    dens = [r["density"] for r in rows]
    ax.loglog(dens, [r["ase"] for r in rows], "o-", color="tab:blue", label="ASE")
    ax.set_xlabel("base station density (per $d_0^2$)")
    ax.set_ylabel("ASE (bits/s/Hz per $d_0^2$)", color="tab:blue")
    twin = ax.twinx()
    twin.semilogx(dens, [r["total_power_watts"] for r in rows], "s--", color="tab:red",
                  label="total TX power")
    twin.set_ylabel("total transmit power (W)", color="tab:red")
    twin.grid(False)


def _plot_fbmc(rows, ax):
    for l, group in _groupby(rows, "L"):
        ax.semilogx(
            [r["N"] for r in group], [r["mean_sir_db"] for r in group], "o-",
            base=2, label=f"L = {l} ({group[0]['spacing_kHz']:g} kHz)")
    ax.set_xlabel("receive antennas N")
    ax.set_ylabel("mean aggregate SIR (dB)")
    ax.legend()


def _plot_pon(rows, ax):
    for n, group in _groupby(rows, "group_size_N"):
        ax.semilogy([r["hot_load_fraction"] for r in group],
                    [r["mean_delay_ms"] for r in group], "o-", label=f"N = {n}")
    ax.set_xlabel("hot ONU load (fraction of assured rate)")
    ax.set_ylabel("mean upstream delay (ms)")
    ax.legend()


def _plot_entropy(rows, ax):
    for kind, group in _groupby(rows, "allocation_kind"):
        ax.plot([r["M"] for r in group], [r["h_of_M"] for r in group], "o-",
                label=f"{kind} ($E_C$ = {group[0]['E_C']:.2f})")
    ax.set_xlabel("context size M")
    ax.set_ylabel("conditional entropy h(M) (bits)")
    ax.legend()


_PLOTTERS = {
    "lsa_fig5": _plot_lsa,
    "smallcell_fig7": _plot_smallcell,
    "fbmc_fig8": _plot_fbmc,
    "pon_fig10": _plot_pon,
    "entropy_table": _plot_entropy,
}


def render(experiment: str, rows: list[dict], out_path: Path):
    """Draw the figure for one experiment's rows and save it to ``out_path``."""
    if experiment not in _PLOTTERS:
        raise ValueError(f"no figure defined for experiment {experiment!r}")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _PLOTTERS[experiment](rows, ax)
        fig.savefig(out_path)
        plt.close(fig)
