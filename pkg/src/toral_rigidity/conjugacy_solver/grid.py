"""Periodic functions on the torus sampled on a regular grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

INTERPOLATION_ORDER = {"multilinear": 1, "cubic": 3}


def grid_points(n: int, resolution: int) -> np.ndarray:
    """All points i/resolution of [0,1)^n, shape (resolution**n, n), C order."""
    axes = [np.arange(resolution) / resolution] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def torus_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a - b reduced to [-1/2, 1/2) in each coordinate."""
    d = np.asarray(a) - np.asarray(b)
    return d - np.floor(d + 0.5)


def torus_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sup-norm distance on the torus, one value per row."""
    return np.abs(torus_difference(a, b)).max(axis=-1)


@dataclass
class GridDisplacement:
    """A Z^n-periodic map T^n -> R^n stored as samples on a resolution^n grid.

    ``samples`` has shape (resolution,)*n + (n,).  Off-grid values come from
    periodic multilinear or cubic-spline interpolation.
    """

    samples: np.ndarray
    interpolation: str = "multilinear"
    _coeffs: list | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        n = self.samples.shape[-1]
        if self.samples.ndim != n + 1 or len(set(self.samples.shape[:-1])) != 1:
            raise ValueError(f"samples of shape {self.samples.shape} are not an n-dimensional grid of R^n vectors")
        if self.interpolation not in INTERPOLATION_ORDER:
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    @property
    def n(self) -> int:
        return self.samples.shape[-1]

    @property
    def resolution(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def zeros(cls, n: int, resolution: int, interpolation: str = "multilinear") -> "GridDisplacement":
        return cls(np.zeros((resolution,) * n + (n,)), interpolation)

    @classmethod
    def sample(cls, func: Callable[[np.ndarray], np.ndarray], n: int, resolution: int,
               interpolation: str = "multilinear") -> "GridDisplacement":
        vals = np.asarray(func(grid_points(n, resolution)), dtype=float)
        return cls(vals.reshape((resolution,) * n + (n,)), interpolation)

    @classmethod
    def from_flat(cls, flat: np.ndarray, resolution: int, interpolation: str = "multilinear"):
        n = flat.shape[-1]
        return cls(flat.reshape((resolution,) * n + (n,)), interpolation)

    def flat(self) -> np.ndarray:
        return self.samples.reshape(-1, self.n)

    def sup_norm(self) -> float:
        return float(np.abs(self.samples).max()) if self.samples.size else 0.0

    def _spline_coeffs(self):
        if self._coeffs is None:
            order = INTERPOLATION_ORDER[self.interpolation]
            self._coeffs = [ndimage.spline_filter(self.samples[..., c], order=order, mode="grid-wrap")
                            if order > 1 else self.samples[..., c] for c in range(self.n)]
        return self._coeffs

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        coords = (pts * self.resolution).T
        order = INTERPOLATION_ORDER[self.interpolation]
        out = np.empty_like(pts)
        for c, coeff in enumerate(self._spline_coeffs()):
            out[:, c] = ndimage.map_coordinates(coeff, coords, order=order, mode="grid-wrap",
                                                prefilter=False)
        return out

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """Periodic central differences on the grid, then interpolated; shape (M, n, n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        R = self.resolution
        out = np.empty((len(pts), self.n, self.n))
        for j in range(self.n):
            diff = (np.roll(self.samples, -1, axis=j) - np.roll(self.samples, 1, axis=j)) * (R / 2)
            out[:, :, j] = GridDisplacement(diff, self.interpolation)(pts)
        return out

    def interpolation_error(self, exact: Callable[[np.ndarray], np.ndarray], n_test: int = 4096,
                            seed: int = 0) -> float:
        """Sup over random off-grid points of |interpolant - exact|."""
        rng = np.random.default_rng(seed)
        pts = rng.random((n_test, self.n))
        return float(np.abs(self(pts) - exact(pts)).max())

    def save(self, path) -> None:
        np.save(path, self.samples)

    @classmethod
    def load(cls, path, interpolation: str = "multilinear") -> "GridDisplacement":
        return cls(np.load(path), interpolation)
