"""Grid-aligned rectangular integration domains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IntegrationDomain:
    """Rectangle of ``2*half_cells + 1`` grid points per axis centred on a grid point.

    The physical half-widths are ``H_x = half_cells_x * delta_x`` and
    ``H_t = half_cells_t * delta_t``; they only become concrete once the domain
    is paired with a grid, see :meth:`half_widths`.
    """

    center_ix: int
    center_it: int
    half_cells_x: int
    half_cells_t: int

    def __post_init__(self):
        if self.half_cells_x < 2 or self.half_cells_t < 2:
            raise ValueError(
                "integration domains need at least 2 half-cells per axis, got "
                f"({self.half_cells_x}, {self.half_cells_t})"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return 2 * self.half_cells_x + 1, 2 * self.half_cells_t + 1

    @property
    def x_slice(self) -> slice:
        return slice(self.center_ix - self.half_cells_x, self.center_ix + self.half_cells_x + 1)

    @property
    def t_slice(self) -> slice:
        return slice(self.center_it - self.half_cells_t, self.center_it + self.half_cells_t + 1)

    def half_widths(self, delta_x: float, delta_t: float) -> tuple[float, float]:
        return self.half_cells_x * delta_x, self.half_cells_t * delta_t

    def fits(self, n_x: int, n_t: int) -> bool:
        return (
            self.center_ix - self.half_cells_x >= 0
            and self.center_ix + self.half_cells_x < n_x
            and self.center_it - self.half_cells_t >= 0
            and self.center_it + self.half_cells_t < n_t
        )

    def check_fits(self, n_x: int, n_t: int) -> None:
        if not self.fits(n_x, n_t):
            raise ValueError(f"{self} does not fit inside a {n_x}x{n_t} grid")


def sample_domains(count, half_cells_x, half_cells_t, grid_shape, seed=None):
    """Draw ``count`` domain centres uniformly over all valid grid indices.

    Parameters
    ----------
    count : int
        Number of domains. Domains may overlap.
    half_cells_x, half_cells_t : int
        Half-widths in grid cells.
    grid_shape : tuple of int
        ``(n_x, n_t)`` of the field the domains will be placed on.
    seed : int, SeedSequence or Generator, optional
        Seed for the centre draws.

    Returns
    -------
    list of IntegrationDomain
    """
    n_x, n_t = grid_shape
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    free_x = n_x - 2 * half_cells_x
    free_t = n_t - 2 * half_cells_t
    if free_x < 1 or free_t < 1:
        raise ValueError(
            f"domain of {2 * half_cells_x + 1}x{2 * half_cells_t + 1} points "
            f"is larger than the {n_x}x{n_t} grid"
        )
    rng = np.random.default_rng(seed)
    cx = rng.integers(0, free_x, size=count) + half_cells_x
    ct = rng.integers(0, free_t, size=count) + half_cells_t
    return [
        IntegrationDomain(int(ix), int(it), half_cells_x, half_cells_t)
        for ix, it in zip(cx, ct)
    ]


def half_cells_for(extent: float, delta: float) -> int:
    """Whole number of half-cells whose span ``2*h*delta`` is closest to ``extent``."""
    return max(2, int(round(extent / (2.0 * delta))))
