"""Channel-allocation grids, CA self-organisation and 2D entropy estimation.

A channel allocation is a height x width matrix of channel indices in
{0..N-1}.  Two cells interfere when they are Moore-adjacent (8-connected,
non-toroidal borders) and carry the same channel.  Three generators are
provided:

* ``generate_regular``  - diagonal stripes c(i, j) = (i + 2j) mod N, the
  crystal-like outcome of centralised planning (conflict-free for N >= 5);
* ``generate_random``   - i.i.d. uniform channels;
* ``self_organize``     - cellular-automaton repair starting from random:
  each epoch visits every cell in a fresh random permutation, and a cell in
  conflict re-draws uniformly among the channels unused by its Moore
  neighbours (or among all N if none is free).

Structure is quantified by the conditional entropy h(M) of a cell given M
context cells from a fixed raster-preceding template, its truncated limit
h = h(M_max), and the convergence excess

    E_C = sum_{M=1..M_max} (h(M) - h)

Estimates are plug-in (empirical frequencies, base-2); an optional
Miller-Madow style correction adds (K_c - 1) / (2 n_c ln 2) per context,
with K_c the observed symbol count and n_c the context occurrences.  All
h(M) for one grid are evaluated on the common set of positions where the
full template fits, which makes h(M+1) <= h(M) and E_C >= 0 exact
properties of the plug-in estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .seeding import seeded_stream

# Nearest raster-preceding cells; prefixes of this tuple give the nested
# templates for M = 1..6.
DEFAULT_TEMPLATE = ((0, -1), (-1, 0), (-1, -1), (-1, 1), (0, -2), (-2, 0))

LN2 = float(np.log(2.0))


@dataclass
class ChannelGrid:
    """Channel indices on a rectangular grid."""

    cells: np.ndarray
    n_channels: int

    def __post_init__(self):
        self.cells = np.asarray(self.cells)
        if self.cells.ndim != 2:
            raise ValueError("cells must be a 2D array")
        if not np.issubdtype(self.cells.dtype, np.integer):
            raise ValueError("cells must hold integers")
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= self.n_channels):
            raise ValueError("cell values must lie in [0, n_channels)")

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]


@dataclass
class EntropyEstimate:
    """h(M) profile and excess entropy of one grid."""

    h_of_m: np.ndarray     # bits, index M-1
    h_inf: float           # bits, = h(M_max)
    e_c: float             # bits
    bias_corrected: bool
    sample_count: int


@dataclass
class SelfOrganizeResult:
    grid: ChannelGrid
    converged: bool
    epochs: int


def generate_regular(n_channels: int, width: int, height: int) -> ChannelGrid:
    """Diagonal-stripe assignment c(i, j) = (i + 2j) mod N.

    The stripe slope makes every Moore-neighbour difference one of
    {1, 2, 3, N-1} mod N, so the pattern is interference-free for N >= 5.
    """
    if n_channels < 5:
        raise ValueError("regular stripes need n_channels >= 5 to avoid diagonal conflicts")
    i = np.arange(height)[:, None]
    j = np.arange(width)[None, :]
    cells = ((i + 2 * j) % n_channels).astype(np.int32)
    return ChannelGrid(cells=cells, n_channels=n_channels)


def generate_random(n_channels: int, width: int, height: int, seed: int) -> ChannelGrid:
    """I.i.d. uniform channel per cell from the seeded stream."""
    if n_channels < 2:
        raise ValueError("need n_channels >= 2")
    rng = seeded_stream(seed, "grid-random")
    cells = rng.integers(0, n_channels, size=(height, width), dtype=np.int32)
    return ChannelGrid(cells=cells, n_channels=n_channels)


def conflict_count(grid: ChannelGrid) -> int:
    """Number of unordered Moore-adjacent pairs sharing a channel."""
    c = grid.cells
    total = 0
    # Each unordered pair counted once via four forward shifts.
    total += int(np.count_nonzero(c[:, :-1] == c[:, 1:]))     # east
    total += int(np.count_nonzero(c[:-1, :] == c[1:, :]))     # south
    total += int(np.count_nonzero(c[:-1, :-1] == c[1:, 1:]))  # south-east
    total += int(np.count_nonzero(c[:-1, 1:] == c[1:, :-1]))  # south-west
    return total


@njit(cache=True)
def _ca_epoch(cells, n_channels, order, draws):
    h, w = cells.shape
    for t in range(order.size):
        pos = order[t]
        i = pos // w
        j = pos % w
        own = cells[i, j]
        used = 0
        conflicted = False
        for di in range(-1, 2):
            ni = i + di
            if ni < 0 or ni >= h:
                continue
            for dj in range(-1, 2):
                if di == 0 and dj == 0:
                    continue
                nj = j + dj
                if nj < 0 or nj >= w:
                    continue
                ch = cells[ni, nj]
                used |= 1 << ch
                if ch == own:
                    conflicted = True
        if not conflicted:
            continue
        n_free = 0
        for ch in range(n_channels):
            if not (used >> ch) & 1:
                n_free += 1
        if n_free == 0:
            k = int(draws[t] * n_channels)
            if k >= n_channels:
                k = n_channels - 1
            cells[i, j] = k
        else:
            k = int(draws[t] * n_free)
            if k >= n_free:
                k = n_free - 1
            seen = -1
            for ch in range(n_channels):
                if not (used >> ch) & 1:
                    seen += 1
                    if seen == k:
                        cells[i, j] = ch
                        break


def ca_step(grid: ChannelGrid, rng: np.random.Generator) -> tuple[ChannelGrid, int]:
    """One asynchronous repair epoch; returns the new grid and its conflict count.

    A conflict-free grid is a fixed point and is returned unchanged.
    """
    cells = grid.cells.astype(np.int32).copy()
    order = rng.permutation(cells.size).astype(np.int64)
    draws = rng.random(cells.size)
    _ca_epoch(cells, grid.n_channels, order, draws)
    new_grid = ChannelGrid(cells=cells, n_channels=grid.n_channels)
    return new_grid, conflict_count(new_grid)


def self_organize(n_channels: int, width: int, height: int, max_epochs: int,
                  seed: int, initial: ChannelGrid | None = None) -> SelfOrganizeResult:
    """Iterate :func:`ca_step` from a random start until conflict-free.

    Stops early once no conflicts remain; ``converged`` is True iff the
    returned grid has zero conflicts within the epoch budget.
    """
    if max_epochs < 1:
        raise ValueError("max_epochs must be >= 1")
    grid = initial if initial is not None else generate_random(n_channels, width, height, seed)
    rng = seeded_stream(seed, "selforg-ca")
    epochs = 0
    conflicts = conflict_count(grid)
    while conflicts > 0 and epochs < max_epochs:
        grid, conflicts = ca_step(grid, rng)
        epochs += 1
    return SelfOrganizeResult(grid=grid, converged=conflicts == 0, epochs=epochs)


def _validate_template(template) -> tuple:
    template = tuple((int(dr), int(dc)) for dr, dc in template)
    if len(set(template)) != len(template):
        raise ValueError("template offsets must be unique")
    for dr, dc in template:
        if not (dr < 0 or (dr == 0 and dc < 0)):
            raise ValueError(f"offset {(dr, dc)} does not precede the target in raster order")
    return template


def _valid_region(grid: ChannelGrid, template) -> tuple[slice, slice]:
    rows = [dr for dr, _ in template]
    cols = [dc for _, dc in template]
    r0 = max(0, -min(rows))
    r1 = grid.height - max(0, max(rows))
    c0 = max(0, -min(cols))
    c1 = grid.width - max(0, max(cols))
    if r1 <= r0 or c1 <= c0:
        raise ValueError("grid too small for the template: no position has full context")
    return slice(r0, r1), slice(c0, c1)


def _context_codes(grid: ChannelGrid, m: int, template) -> tuple[np.ndarray, np.ndarray, int]:
    """Integer-encoded (context, target) observations for template[:m].

    Positions are those where the *full* template fits, so estimates at
    different M share one sample set.
    """
    rs, cs = _valid_region(grid, template)
    n = grid.n_channels
    target = grid.cells[rs, cs].astype(np.int64).ravel()
    codes = np.zeros_like(target)
    weight = 1
    for dr, dc in template[:m]:
        shifted = grid.cells[rs.start + dr:rs.stop + dr, cs.start + dc:cs.stop + dc]
        codes += shifted.astype(np.int64).ravel() * weight
        weight *= n
    return codes, target, weight


def entropy_density(grid: ChannelGrid, m: int, template=DEFAULT_TEMPLATE,
                    bias_correction: bool = False) -> float:
    """Plug-in conditional entropy h(M) = H(X | M context cells), in bits.

    Computed per context class as (n_c log2 n_c - sum_x c_x log2 c_x) / n,
    so a context that always determines its target contributes exactly 0.0.
    """
    template = _validate_template(template)
    if not 1 <= m <= len(template):
        raise ValueError(f"m must be in [1, {len(template)}]")
    if grid.width < 8 or grid.height < 8:
        raise ValueError("grids smaller than 8x8 are too small for entropy estimation")
    codes, target, weight = _context_codes(grid, m, template)
    n = codes.size
    joint_counts = np.bincount(codes + target * weight,
                               minlength=weight * grid.n_channels)
    per_cell = joint_counts.reshape(grid.n_channels, weight).astype(float)
    ctx_counts = per_cell.sum(axis=0)
    plogp = np.where(per_cell > 0, per_cell * np.log2(np.where(per_cell > 0, per_cell, 1.0)), 0.0)
    ctx_plogp = np.where(ctx_counts > 0, ctx_counts * np.log2(np.where(ctx_counts > 0, ctx_counts, 1.0)), 0.0)
    h = float((ctx_plogp - plogp.sum(axis=0)).sum() / n)
    if bias_correction:
        nnz_joint = int(np.count_nonzero(joint_counts))
        nnz_ctx = int(np.count_nonzero(ctx_counts))
        h += (nnz_joint - nnz_ctx) / (2.0 * n * LN2)
    return h


def excess_entropy(grid: ChannelGrid, m_max: int = 6, template=DEFAULT_TEMPLATE,
                   bias_correction: bool = False) -> EntropyEstimate:
    """h(M) for M = 1..m_max plus the excess E_C = sum(h(M) - h(m_max)).

    All M share the sample positions of template[:m_max], so with the plain
    plug-in estimator the profile is non-increasing and E_C >= 0.
    """
    template = _validate_template(template)
    if not 1 <= m_max <= len(template):
        raise ValueError(f"m_max must be in [1, {len(template)}]")
    sub = template[:m_max]
    h_of_m = np.array([entropy_density(grid, m, sub, bias_correction) for m in range(1, m_max + 1)])
    h_inf = float(h_of_m[-1])
    e_c = float((h_of_m - h_inf).sum())
    rs, cs = _valid_region(grid, sub)
    n = (rs.stop - rs.start) * (cs.stop - cs.start)
    return EntropyEstimate(h_of_m=h_of_m, h_inf=h_inf, e_c=e_c,
                           bias_corrected=bias_correction, sample_count=n)
