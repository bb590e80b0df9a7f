"""Area spectral efficiency and total transmit power under cell splitting.

Shrinking cells by a scale factor D (0 < D <= 1) multiplies the base
station density by d = D^-2.  With the minimum-power rule each station
transmits

    P_tx,k = P0 * D^beta * alpha_k

which keeps every received power P0 * alpha * r^-beta independent of D, so
the per-cell capacity distribution is scale invariant and the area spectral
efficiency ASE = d * C_cell grows linearly with density.  Summing the power
rule over the (L/(D*d0))^2 stations in an L x L window gives the closed
form

    P_tot = P0 * D^(beta-2) * alpha_mean * (L/d0)^2

so for beta > 2 the total radiated power drops as cells shrink.

Geometry is a square grid with toroidal wrap-around, which removes edge
effects and makes the scale invariance exact in distribution.  Lengths are
in meters; ``d0`` is the inter-site distance at D = 1 and the reported
density is in stations per d0^2 of area.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .seeding import seeded_stream


@dataclass
class ScalingScenario:
    """Cell-splitting parameters for one density point.

    ``alpha`` may be a scalar (applied to every station) or an array with
    one coefficient per station; the grid side L_side/(D*d0) must come out
    an integer so the stations tile the square exactly.
    """

    d_scale: float                   # D
    beta: float
    l_side: float                    # meters
    p0: float                        # watts
    alpha: float | np.ndarray = 1.0
    d0: float = 100.0                # meters, inter-site distance at D = 1
    noise_power: float = 3.981e-14   # watts, about -104 dBm
    min_distance_fraction: float = 1e-3   # clamp, relative to BS spacing

    _alpha_vec: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.d_scale <= 1:
            raise ConfigurationError("d_scale must be in (0, 1]")
        if self.p0 <= 0 or self.l_side <= 0 or self.d0 <= 0:
            raise ConfigurationError("p0, l_side and d0 must be positive")
        if self.noise_power <= 0:
            raise ConfigurationError("noise_power must be positive")
        side = self.l_side / (self.d_scale * self.d0)
        if abs(side - round(side)) > 1e-9:
            raise ConfigurationError(
                f"grid does not fit: l_side/(D*d0) = {side} is not an integer")
        n_bs = int(round(side)) ** 2
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim == 0:
            alpha = np.full(n_bs, float(alpha))
        if alpha.shape != (n_bs,):
            raise ConfigurationError(f"alpha must have one entry per station ({n_bs})")
        if np.any(alpha <= 0):
            raise ConfigurationError("alpha coefficients must be positive")
        self._alpha_vec = alpha

    @property
    def grid_side(self) -> int:
        return int(round(self.l_side / (self.d_scale * self.d0)))

    @property
    def n_bs(self) -> int:
        return self.grid_side ** 2

    @property
    def spacing(self) -> float:
        return self.d_scale * self.d0

    @property
    def alpha_mean(self) -> float:
        return float(self._alpha_vec.mean())

    def bs_positions(self) -> np.ndarray:
        """Station coordinates, row-major over the grid, shape (n_bs, 2)."""
        s = self.spacing
        idx = np.arange(self.grid_side)
        x, y = np.meshgrid(s * (idx + 0.5), s * (idx + 0.5), indexing="ij")
        return np.column_stack([x.ravel(), y.ravel()])

    def bs_powers(self) -> np.ndarray:
        return self.p0 * self.d_scale**self.beta * self._alpha_vec


@dataclass
class CapacityEstimate:
    mean: float        # bits/s/Hz
    ci95: float        # half-width of the 95% interval on the mean
    n_samples: int


@dataclass
class AseResult:
    d_scale: float
    density: float               # stations per d0^2 of area, = D^-2
    mean_cell_capacity: float    # bits/s/Hz
    ase: float                   # = density * mean_cell_capacity
    total_power: float           # watts, closed form
    ci95: float                  # half-width on mean_cell_capacity


def per_bs_power(p0: float, d_scale: float, beta: float, alpha_k: float) -> float:
    """Minimum-rule transmit power of one station: P0 * D^beta * alpha_k."""
    if p0 <= 0 or d_scale <= 0 or alpha_k <= 0:
        raise ValueError("p0, d_scale and alpha_k must be positive")
    return p0 * d_scale**beta * alpha_k


def total_tx_power(scenario: ScalingScenario) -> float:
    """Closed-form network power P0 * D^(beta-2) * alpha_mean * (L/d0)^2.

    Equal (to rounding) to the explicit sum of :func:`per_bs_power` over all
    stations in the window.
    """
    s = scenario
    return s.p0 * s.d_scale ** (s.beta - 2) * s.alpha_mean * (s.l_side / s.d0) ** 2


def user_capacities(scenario: ScalingScenario, user_positions: np.ndarray) -> np.ndarray:
    """Downlink Shannon capacity log2(1 + SINR) for each given user.

    Users attach to the nearest station (toroidal distance); every other
    station transmits co-channel at full buffer, so interference is the sum
    of all non-serving received powers plus thermal noise.
    """
    users = np.atleast_2d(np.asarray(user_positions, dtype=float))
    bs = scenario.bs_positions()
    powers = scenario.bs_powers()
    delta = np.abs(users[:, None, :] - bs[None, :, :])
    delta = np.minimum(delta, scenario.l_side - delta)
    dist = np.sqrt((delta**2).sum(axis=2))
    dist = np.maximum(dist, scenario.min_distance_fraction * scenario.spacing)
    rx = powers[None, :] * dist ** (-scenario.beta)
    serving = np.argmin(dist, axis=1)
    own = rx[np.arange(rx.shape[0]), serving]
    interference = rx.sum(axis=1) - own
    sinr = own / (interference + scenario.noise_power)
    return np.log2(1.0 + sinr)


def user_sinr(scenario: ScalingScenario, user_positions: np.ndarray) -> np.ndarray:
    """Linear SINR for each given user (same attachment rule as capacities)."""
    caps = user_capacities(scenario, user_positions)
    return 2.0**caps - 1.0


def simulate_cell_capacity(scenario: ScalingScenario, n_users: int, n_trials: int,
                           seed: int) -> CapacityEstimate:
    """Monte Carlo mean cell capacity over uniformly dropped users.

    The per-trial user layouts depend only on (seed, trial), not on the
    scenario, so different density points evaluated with the same seed see
    matched user drops.
    """
    if n_users < 1 or n_trials < 1:
        raise ValueError("n_users and n_trials must be >= 1")
    trial_means = np.empty(n_trials)
    for t in range(n_trials):
        rng = seeded_stream(seed, "cellsplit-users", t)
        users = rng.uniform(0.0, scenario.l_side, size=(n_users, 2))
        trial_means[t] = user_capacities(scenario, users).mean()
    mean = float(trial_means.mean())
    if n_trials > 1:
        ci95 = 1.96 * float(trial_means.std(ddof=1)) / np.sqrt(n_trials)
    else:
        ci95 = 0.0
    return CapacityEstimate(mean=mean, ci95=ci95, n_samples=n_users * n_trials)


def ase(scenario: ScalingScenario, n_users: int = 256, n_trials: int = 30,
        seed: int = 0) -> AseResult:
    """Combine density D^-2, simulated mean capacity and the power closed form."""
    est = simulate_cell_capacity(scenario, n_users, n_trials, seed)
    density = scenario.d_scale**-2
    return AseResult(
        d_scale=scenario.d_scale,
        density=density,
        mean_cell_capacity=est.mean,
        ase=density * est.mean,
        total_power=total_tx_power(scenario),
        ci95=est.ci95,
    )
