"""Cost efficiency of renting distributed antennas and shared spectrum.

A virtual operator serves K users by renting M antennas from a cloud RAN
pool and W MHz of licensed-shared spectrum.  Antennas, spectrum and the
supporting infrastructure each carry a per-second cost, and the figure of
merit is the number of transmitted bits per cost unit

    eta(M, W) = W_Hz * sum_k log2(1 + r_k / (N0 * W_Hz))
                ------------------------------------------
                     c_m * M + c_w * W_MHz + c_o

where ``r_k`` is the power received by user k from the M rented antennas.
Bandwidth enters the rate term in Hz and the cost term in MHz (the spectrum
price is quoted per MHz); the conversion constant is 1e6.

The received power model accumulates, for each user, the M strongest
per-antenna path gains toward that user (ties broken by antenna index).
That gives a monotone, concave-like growth of r_k with M and therefore a
nontrivial antenna/cost trade-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

MHZ = 1e6


@dataclass
class CostModel:
    """Per-second resource prices, all in cost units.

    c_m is the price of one active antenna, c_w the price of 1 MHz of rented
    spectrum and c_o the fixed infrastructure (operative) cost.  All three
    must be non-negative and at least one positive, which guarantees a
    positive cost for any M >= 1, W > 0.
    """

    c_m: float
    c_w: float
    c_o: float

    def __post_init__(self):
        if self.c_m < 0 or self.c_w < 0 or self.c_o < 0:
            raise ConfigurationError("costs must be non-negative")
        if self.c_m == 0 and self.c_w == 0 and self.c_o == 0:
            raise ConfigurationError("at least one cost must be positive")


@dataclass
class Deployment:
    """Antenna and user geometry on the unit square (dimensionless coordinates).

    Parameters
    ----------
    antenna_positions, user_positions : array-like, shape (n, 2)
        Planar positions of the rentable antennas and of the K users.
    per_antenna_power : float
        Transmit power per active antenna, watts.
    pathloss_exponent : float
        Power-law decay exponent (>= 2).
    noise_psd : float
        Noise power spectral density N0, watts/Hz.
    min_distance : float
        Lower clamp on antenna-user distance, avoids the pathloss
        singularity at zero range.
    """

    antenna_positions: np.ndarray
    user_positions: np.ndarray
    per_antenna_power: float
    pathloss_exponent: float = 4.0
    noise_psd: float = 1e-17
    min_distance: float = 1e-3

    _gain_cumsum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.antenna_positions = np.atleast_2d(np.asarray(self.antenna_positions, dtype=float))
        self.user_positions = np.atleast_2d(np.asarray(self.user_positions, dtype=float))
        if self.antenna_positions.shape[0] < 1 or self.antenna_positions.shape[1] != 2:
            raise ValueError("need at least one antenna position of shape (n, 2)")
        if self.user_positions.shape[0] < 1 or self.user_positions.shape[1] != 2:
            raise ValueError("need at least one user position of shape (K, 2)")
        if self.per_antenna_power <= 0:
            raise ValueError("per_antenna_power must be positive")
        if self.pathloss_exponent < 2:
            raise ValueError("pathloss_exponent must be >= 2")
        if self.noise_psd <= 0:
            raise ValueError("noise_psd must be positive")
        if self.min_distance <= 0:
            raise ValueError("min_distance must be positive")
        # Per-user gains sorted in decreasing order (stable, so ties keep
        # antenna-index order), then cumulatively summed: r_k for M antennas
        # is per_antenna_power * _gain_cumsum[k, M-1].
        diff = self.user_positions[:, None, :] - self.antenna_positions[None, :, :]
        dist = np.maximum(np.sqrt((diff**2).sum(axis=2)), self.min_distance)
        gains = dist ** (-self.pathloss_exponent)
        order = np.argsort(-gains, axis=1, kind="stable")
        self._gain_cumsum = np.cumsum(np.take_along_axis(gains, order, axis=1), axis=1)

    @property
    def n_antennas(self) -> int:
        return self.antenna_positions.shape[0]

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]


@dataclass
class ResourceBounds:
    """Search space for the (M, W) optimisation."""

    m_max: int
    w_min: float
    w_max: float
    w_grid_points: int = 1000

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError("m_max must be >= 1")
        if not (0 < self.w_min < self.w_max):
            raise ValueError("need 0 < w_min < w_max")
        if self.w_grid_points < 2:
            raise ValueError("w_grid_points must be >= 2")

    def w_grid(self) -> np.ndarray:
        return np.linspace(self.w_min, self.w_max, self.w_grid_points)


@dataclass
class EfficiencyPoint:
    """One evaluated operating point: eta = rate / cost exactly."""

    m: int
    w_mhz: float
    rate: float      # bits/s
    cost: float      # cost units/s
    eta: float       # bits per cost unit


@dataclass
class StrategyComparison:
    optimal: EfficiencyPoint
    max_antennas: EfficiencyPoint
    max_bandwidth: EfficiencyPoint


def received_power(deployment: Deployment, user_index: int, m: int) -> float:
    """Power received by one user from the ``m`` strongest antennas, watts.

    Strictly increasing in ``m`` since every selected gain is positive.
    """
    if not 0 <= user_index < deployment.n_users:
        raise ValueError(f"user_index {user_index} out of range")
    if not 1 <= m <= deployment.n_antennas:
        raise ValueError(f"m={m} outside [1, {deployment.n_antennas}]")
    return deployment.per_antenna_power * float(deployment._gain_cumsum[user_index, m - 1])


def _evaluate(deployment: Deployment, m: int, w_mhz: float, costs: CostModel):
    w_hz = w_mhz * MHZ
    r = deployment.per_antenna_power * deployment._gain_cumsum[:, m - 1]
    rate = w_hz * float(np.log2(1.0 + r / (deployment.noise_psd * w_hz)).sum())
    cost = costs.c_m * m + costs.c_w * w_mhz + costs.c_o
    return rate, cost


def cost_efficiency(deployment: Deployment, m: int, w_mhz: float, costs: CostModel) -> EfficiencyPoint:
    """Evaluate eta(M, W) = rate / cost at one grid point.

    ``w_mhz`` is the rented bandwidth in MHz; the Shannon rate uses base-2
    logarithms, so eta is in bits per cost unit.
    """
    if not 1 <= m <= deployment.n_antennas:
        raise ValueError(f"m={m} outside [1, {deployment.n_antennas}]")
    if w_mhz <= 0:
        raise ValueError("bandwidth must be positive")
    rate, cost = _evaluate(deployment, m, w_mhz, costs)
    if cost <= 0:
        raise ConfigurationError("total cost must be positive")
    return EfficiencyPoint(m=m, w_mhz=w_mhz, rate=rate, cost=cost, eta=rate / cost)


def optimize(deployment: Deployment, costs: CostModel, bounds: ResourceBounds) -> EfficiencyPoint:
    """Exhaustive search of eta over M in {1..m_max} x the uniform W grid.

    The scan is row-major (M outer, W inner, both ascending) and keeps the
    first maximum, so ties resolve to the smallest M, then the smallest W.
    """
    if bounds.m_max > deployment.n_antennas:
        raise ValueError("m_max exceeds the number of deployed antennas")
    best_eta = -np.inf
    best = None
    grid = bounds.w_grid()
    for m in range(1, bounds.m_max + 1):
        for w in grid:
            rate, cost = _evaluate(deployment, m, float(w), costs)
            eta = rate / cost
            if eta > best_eta:
                best_eta = eta
                best = (m, float(w))
    return cost_efficiency(deployment, best[0], best[1], costs)


def _optimize_fixed_m(deployment, costs, bounds, m):
    best_eta, best_w = -np.inf, None
    for w in bounds.w_grid():
        rate, cost = _evaluate(deployment, m, float(w), costs)
        eta = rate / cost
        if eta > best_eta:
            best_eta, best_w = eta, float(w)
    return cost_efficiency(deployment, m, best_w, costs)


def _optimize_fixed_w(deployment, costs, bounds, w_mhz):
    best_eta, best_m = -np.inf, None
    for m in range(1, bounds.m_max + 1):
        rate, cost = _evaluate(deployment, m, w_mhz, costs)
        eta = rate / cost
        if eta > best_eta:
            best_eta, best_m = eta, m
    return cost_efficiency(deployment, best_m, w_mhz, costs)


def compare_strategies(deployment: Deployment, costs: CostModel, bounds: ResourceBounds) -> StrategyComparison:
    """Optimal (M, W) against the two single-minded rental strategies.

    ``max_antennas`` fixes M = m_max and tunes only W; ``max_bandwidth``
    fixes W = w_max and tunes only M.  The optimum dominates both by
    construction (their search spaces are subsets of the full grid).
    """
    return StrategyComparison(
        optimal=optimize(deployment, costs, bounds),
        max_antennas=_optimize_fixed_m(deployment, costs, bounds, bounds.m_max),
        max_bandwidth=_optimize_fixed_w(deployment, costs, bounds, bounds.w_max),
    )
