"""Block-coupling measurement: does output block i of a map depend on input block j?"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import GridDisplacement


@dataclass(frozen=True)
class SplittingReport:
    couplings: np.ndarray  # couplings[i, j]: dependence of output block i on input block j
    blocks: tuple[tuple[int, ...], ...]
    tol: float

    @property
    def max_off_diagonal(self) -> float:
        off = self.couplings.copy()
        np.fill_diagonal(off, 0.0)
        return float(off.max()) if off.size else 0.0

    @property
    def splits(self) -> bool:
        return self.max_off_diagonal < self.tol

    def to_json(self) -> dict:
        return {"couplings": self.couplings.tolist(), "blocks": [list(b) for b in self.blocks],
                "tol": self.tol, "max_off_diagonal": self.max_off_diagonal, "splits": self.splits}


def conjugacy_from_displacement(w: GridDisplacement) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.atleast_2d(x) + w(x)


def check_splitting(h: Callable[[np.ndarray], np.ndarray] | GridDisplacement,
                    blocks: Sequence[Sequence[int]], tol: float = 1e-6,
                    input_basis: np.ndarray | None = None, output_basis: np.ndarray | None = None,
                    n_points: int = 2048, steps: Sequence[float] = (0.25, 0.1, 0.03, 0.01),
                    seed: int = 0) -> SplittingReport:
    """Sup of finite differences of h_i along block-j directions.

    Points are written x = B_in y and values z = B_out^{-1} h(x); block
    indices refer to coordinates of y and z.  Passing a GridDisplacement
    checks h = id + w.  The splitting is confirmed when every off-diagonal
    coupling is below ``tol``.
    """
    if isinstance(h, GridDisplacement):
        h = conjugacy_from_displacement(h)
    blocks = tuple(tuple(int(i) for i in b) for b in blocks)
    n = sum(len(b) for b in blocks)
    B_in = np.eye(n) if input_basis is None else np.asarray(input_basis, dtype=float)
    B_out_inv = np.eye(n) if output_basis is None else np.linalg.inv(np.asarray(output_basis, dtype=float))
    rng = np.random.default_rng(seed)
    base = rng.random((n_points, n))
    hz = h(base) @ B_out_inv.T
    couplings = np.zeros((len(blocks), len(blocks)))
    for j, bj in enumerate(blocks):
        for idx in bj:
            direction = B_in[:, idx]
            for step in steps:
                shifted = h(base + step * direction) @ B_out_inv.T
                for i, bi in enumerate(blocks):
                    d = np.abs(shifted[:, bi] - hz[:, bi]).max()
                    couplings[i, j] = max(couplings[i, j], d)
    return SplittingReport(couplings, blocks, tol)
