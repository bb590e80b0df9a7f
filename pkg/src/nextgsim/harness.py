"""Experiment runner: dispatch, CSV output, run manifests.

Every experiment is a pure function of (config, seed) producing a list of
row dicts; this module writes them as CSV (header row naming exactly the
documented columns, values via Python's shortest round-trip ``str``) plus a
``run_manifest.json``.  All randomness flows through
:func:`nextgsim.seeding.seeded_stream`, so a given (config, seed) pair
reproduces byte-identical CSVs; sweep cells draw their streams from
(seed, experiment, cell index) and are evaluated sequentially, which makes
the output independent of any worker-count setting.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cellsplit, fbmc, lsa, pon, selforg
from .config import EXPERIMENT_NAMES, ExperimentConfig, config_hash
from .seeding import seeded_stream

__version__ = "0.1.0"

CSV_SCHEMAS = {
    "lsa_fig5": ["c_w", "M_opt", "W_opt_MHz", "eta_opt", "eta_maxM", "eta_maxW"],
    "smallcell_fig7": ["D", "density", "mean_cell_capacity", "ase", "total_power_watts", "ci95"],
    "fbmc_fig8": ["L", "spacing_kHz", "N", "mean_sir_db", "trials"],
    "pon_fig10": ["group_size_N", "hot_load_fraction", "mean_delay_ms", "p95_delay_ms", "stable"],
    "entropy_table": ["allocation_kind", "N", "width", "height", "M", "h_of_M", "E_C",
                      "conflicts", "converged"],
}


@dataclass
class RunManifest:
    version: str
    experiment: str
    config_hash: str
    seed: int
    duration_s: float
    outputs: list


def lsa_deployment(block, seed: int) -> lsa.Deployment:
    """Seeded unit-square layout shared by the sweep and by tests."""
    rng = seeded_stream(seed, "lsa-layout")
    return lsa.Deployment(
        antenna_positions=rng.uniform(0.0, 1.0, size=(block.n_antennas, 2)),
        user_positions=rng.uniform(0.0, 1.0, size=(block.n_users, 2)),
        per_antenna_power=block.per_antenna_power,
        pathloss_exponent=block.pathloss_exponent,
        noise_psd=block.noise_psd,
        min_distance=block.min_distance,
    )


def run_lsa_fig5(config: ExperimentConfig) -> list[dict]:
    block = config.lsa
    deployment = lsa_deployment(block, config.seed)
    bounds = lsa.ResourceBounds(m_max=block.m_max, w_min=block.w_min_mhz,
                                w_max=block.w_max_mhz, w_grid_points=block.w_grid_points)
    rows = []
    for c_w in np.geomspace(block.c_w_min, block.c_w_max, block.c_w_points):
        costs = lsa.CostModel(c_m=block.c_m, c_w=float(c_w), c_o=block.c_o)
        cmp = lsa.compare_strategies(deployment, costs, bounds)
        rows.append({
            "c_w": float(c_w),
            "M_opt": cmp.optimal.m,
            "W_opt_MHz": cmp.optimal.w_mhz,
            "eta_opt": cmp.optimal.eta,
            "eta_maxM": cmp.max_antennas.eta,
            "eta_maxW": cmp.max_bandwidth.eta,
        })
    return rows


def smallcell_scenario(block, d_scale: float, seed: int) -> cellsplit.ScalingScenario:
    side = int(round(block.l_side / (d_scale * block.d0)))
    if block.alpha_mode == "uniform":
        rng = seeded_stream(seed, "cellsplit-alpha", side)
        alpha = rng.uniform(0.5, 1.5, size=side * side)
    else:
        alpha = 1.0
    return cellsplit.ScalingScenario(d_scale=d_scale, beta=block.beta, l_side=block.l_side,
                                     p0=block.p0, alpha=alpha, d0=block.d0,
                                     noise_power=block.noise_power)


def run_smallcell_fig7(config: ExperimentConfig) -> list[dict]:
    block = config.smallcell
    rows = []
    for d in block.d_scales:
        scenario = smallcell_scenario(block, float(d), config.seed)
        result = cellsplit.ase(scenario, n_users=block.n_users, n_trials=block.n_trials,
                               seed=config.seed)
        rows.append({
            "D": result.d_scale,
            "density": result.density,
            "mean_cell_capacity": result.mean_cell_capacity,
            "ase": result.ase,
            "total_power_watts": result.total_power,
            "ci95": result.ci95,
        })
    return rows


def run_fbmc_fig8(config: ExperimentConfig) -> list[dict]:
    block = config.fbmc
    channel = fbmc.ChannelModel(n_antennas=max(int(n) for n in block.n_list),
                                rms_delay_spread=block.rms_delay_spread,
                                n_taps=block.n_taps, seed=config.seed)
    rows = fbmc.run_sir_sweep(block.l_list, block.n_list, channel, block.trials,
                              pilot_seed=config.seed)
    return [{"L": r["L"], "spacing_kHz": r["spacing_khz"], "N": r["N"],
             "mean_sir_db": r["mean_sir_db"], "trials": r["trials"]} for r in rows]


def run_pon_fig10(config: ExperimentConfig) -> list[dict]:
    block = config.pon
    pon_config = pon.PonConfig(sim_duration=block.sim_duration,
                               service_interval=block.service_interval)
    return pon.hot_onu_experiment(block.group_sizes, block.load_points, pon_config,
                                  seed=config.seed)


def run_entropy_table(config: ExperimentConfig) -> list[dict]:
    block = config.entropy
    organized = selforg.self_organize(block.n_channels, block.width, block.height,
                                      block.max_epochs, config.seed)
    grids = {
        "regular": (selforg.generate_regular(block.n_channels, block.width, block.height), True),
        "selforg": (organized.grid, organized.converged),
        "random": (selforg.generate_random(block.n_channels, block.width, block.height,
                                           config.seed), False),
    }
    rows = []
    for kind, (grid, converged) in grids.items():
        estimate = selforg.excess_entropy(grid, block.m_max,
                                          bias_correction=block.bias_correction)
        conflicts = selforg.conflict_count(grid)
        for m in range(1, block.m_max + 1):
            rows.append({
                "allocation_kind": kind,
                "N": block.n_channels,
                "width": block.width,
                "height": block.height,
                "M": m,
                "h_of_M": float(estimate.h_of_m[m - 1]),
                "E_C": estimate.e_c,
                "conflicts": conflicts,
                "converged": converged,
            })
    return rows


RUNNERS = {
    "lsa_fig5": run_lsa_fig5,
    "smallcell_fig7": run_smallcell_fig7,
    "fbmc_fig8": run_fbmc_fig8,
    "pon_fig10": run_pon_fig10,
    "entropy_table": run_entropy_table,
}


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return str(value)     # shortest round-trip decimal
    return str(value)


def write_csv(path: Path, columns: list[str], rows: list[dict]):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def run_experiment(config: ExperimentConfig, render_figures: bool = True) -> RunManifest:
    """Run the configured experiment, write CSV + figure + manifest.

    Partially written outputs are removed if the run fails.
    """
    name = config.experiment
    if name not in EXPERIMENT_NAMES:
        raise ValueError(f"no experiment selected (choose from {EXPERIMENT_NAMES})")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    created: list[Path] = []
    try:
        rows = RUNNERS[name](config)
        csv_path = out_dir / f"{name}.csv"
        created.append(csv_path)
        write_csv(csv_path, CSV_SCHEMAS[name], rows)
        outputs = [csv_path.name]
        if render_figures:
            from . import figures
            fig_path = out_dir / f"{name}.png"
            created.append(fig_path)
            figures.render(name, rows, fig_path)
            outputs.append(fig_path.name)
    except Exception:
        for path in created:
            path.unlink(missing_ok=True)
        raise
    manifest = RunManifest(
        version=__version__,
        experiment=name,
        config_hash=config_hash(config),
        seed=config.seed,
        duration_s=time.monotonic() - started,
        outputs=outputs,
    )
    manifest_path = out_dir / "run_manifest.json"
    manifest_path.write_text(json.dumps(dataclasses.asdict(manifest), indent=2) + "\n")
    return manifest
