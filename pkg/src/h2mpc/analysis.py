"""Post-processing of trajectory logs.

Cumulative cost curves, the levelized-cost-of-hydrogen attribution,
degradation-rate surfaces over the operating box, and kernel density
estimation of the operating current density at a temperature level.
Each operation has a CSV emitter; no plotting happens in-process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import electrolyzer
from .params import PlantParams
from .rollout import TrajectoryLog


def cumulative_costs(log: TrajectoryLog):
    """Per-step cumulative (electricity, membrane, total) cost series."""
    cum_elec = np.asarray(log.cum_elec())
    cum_mem = np.asarray(log.cum_mem())
    return list(log.timestamps), cum_elec, cum_mem, cum_elec + cum_mem


def write_cumulative_costs_csv(log: TrajectoryLog, path: str | Path) -> None:
    ts, ce, cm, ct = cumulative_costs(log)
    lines = ["timestamp,cum_elec_usd,cum_mem_usd,cum_total_usd"]
    lines += [f"{t.isoformat()},{e!r},{m!r},{tt!r}" for t, e, m, tt in zip(ts, ce, cm, ct)]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class LcohBreakdown:
    total_kusd_per_ton: float
    elec_share: float
    mem_share: float


def lcoh_breakdown(log: TrajectoryLog) -> LcohBreakdown:
    """Levelized cost of hydrogen [k$/ton] split into its two components."""
    ledger = log.ledger()
    if ledger.h2_ton <= 0.0:
        raise ValueError("no hydrogen produced; levelized cost undefined")
    total = ledger.electricity_usd + ledger.membrane_usd
    if total == 0.0:
        return LcohBreakdown(0.0, 0.0, 0.0)
    return LcohBreakdown(
        total_kusd_per_ton=total / ledger.h2_ton / 1000.0,
        elec_share=ledger.electricity_usd / total,
        mem_share=ledger.membrane_usd / total,
    )


def write_lcoh_csv(log: TrajectoryLog, path: str | Path) -> None:
    b = lcoh_breakdown(log)
    Path(path).write_text(
        "strategy,lcoh_kusd_per_ton,elec_share,mem_share\n"
        f"{log.strategy},{b.total_kusd_per_ton!r},{b.elec_share!r},{b.mem_share!r}\n"
    )


def degradation_surface(t_grid, j_grid) -> np.ndarray:
    """Thinning-rate matrix [um/min], rows follow t_grid, columns j_grid."""
    t = np.asarray(t_grid, dtype=float)[:, None]
    j = np.asarray(j_grid, dtype=float)[None, :]
    return electrolyzer.degradation_rate(t, j)


def write_degradation_surface_csv(t_grid, j_grid, path: str | Path) -> None:
    surf = degradation_surface(t_grid, j_grid)
    lines = ["temperature_k,current_density_a_cm2,rate_um_min"]
    for ti, t in enumerate(np.asarray(t_grid, dtype=float)):
        for ji, j in enumerate(np.asarray(j_grid, dtype=float)):
            lines.append(f"{t!r},{j!r},{surf[ti, ji]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


# temperature matching tolerance [K]: optimizers return values like 343.0001
TEMP_MATCH_TOL_K = 0.5
# fallback bandwidth [A/cm2] when all samples coincide (Silverman degenerates)
_DEGENERATE_BANDWIDTH = 0.05


def kde_current_density(
    log: TrajectoryLog,
    temperature_level: float,
    bandwidth: float | None = None,
    grid: np.ndarray | None = None,
    p: PlantParams | None = None,
):
    """Gaussian-kernel density of operating current density [A/cm2].

    Selects steps whose temperature sits within TEMP_MATCH_TOL_K of the
    requested level. Default bandwidth is Silverman's rule
    1.06 * sigma * m^(-1/5); the density integrates to one over the line.
    Returns (grid, density, samples).
    """
    p = p or PlantParams()
    temps = np.array([a.temperature_k for a in log.actions])
    j = np.array([a.current_a for a in log.actions]) / p.membrane_area_cm2
    samples = j[np.abs(temps - temperature_level) < TEMP_MATCH_TOL_K]
    if len(samples) < 2:
        raise ValueError(
            f"need at least 2 steps within {TEMP_MATCH_TOL_K} K of "
            f"{temperature_level} K, found {len(samples)}"
        )
    if bandwidth is None:
        sigma = float(np.std(samples, ddof=1))
        bandwidth = 1.06 * sigma * len(samples) ** (-0.2)
        if bandwidth <= 0.0:
            bandwidth = _DEGENERATE_BANDWIDTH
    if grid is None:
        lo = float(np.min(samples)) - 6.0 * bandwidth
        hi = float(np.max(samples)) + 6.0 * bandwidth
        grid = np.linspace(lo, hi, 1024)
    dens = np.zeros_like(grid)
    norm = 1.0 / (len(samples) * bandwidth * math.sqrt(2.0 * math.pi))
    for s in samples:
        dens += np.exp(-0.5 * ((grid - s) / bandwidth) ** 2)
    dens *= norm
    return grid, dens, samples


def write_kde_csv(
    log: TrajectoryLog, temperature_level: float, path: str | Path, bandwidth=None
) -> None:
    grid, dens, _ = kde_current_density(log, temperature_level, bandwidth)
    lines = ["current_density_a_cm2,density"]
    lines += [f"{g!r},{d!r}" for g, d in zip(grid, dens)]
    Path(path).write_text("\n".join(lines) + "\n")


def operating_histogram_2d(log: TrajectoryLog, t_edges, j_edges, p: PlantParams | None = None):
    """2-D frequency count of operating (temperature, current density)."""
    p = p or PlantParams()
    temps = np.array([a.temperature_k for a in log.actions])
    j = np.array([a.current_a for a in log.actions]) / p.membrane_area_cm2
    hist, _, _ = np.histogram2d(temps, j, bins=[np.asarray(t_edges), np.asarray(j_edges)])
    return hist
