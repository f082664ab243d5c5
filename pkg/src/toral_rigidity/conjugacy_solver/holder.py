"""Hölder exponent estimates from a sampled modulus of continuity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientSamples
from .grid import GridDisplacement

NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class HolderEstimate:
    theta: float
    scales: tuple[float, ...]
    moduli: tuple[float, ...]
    residual: float
    degenerate: bool = False

    def to_json(self) -> dict:
        return {"theta": self.theta, "scales": list(self.scales), "moduli": list(self.moduli),
                "residual": self.residual, "degenerate": self.degenerate}


def modulus_of_continuity(samples: np.ndarray, step: int) -> float:
    """max |g(x + step e_j) - g(x)| over axis directions, without wrapping the grid."""
    n = samples.ndim - 1
    best = 0.0
    for axis in range(n):
        length = samples.shape[axis]
        lo = np.take(samples, np.arange(0, length - step), axis=axis)
        hi = np.take(samples, np.arange(step, length), axis=axis)
        d = np.linalg.norm(hi - lo, axis=-1)
        best = max(best, float(d.max()) if d.size else 0.0)
    return best


def estimate_holder(g: GridDisplacement | np.ndarray, scales=None) -> HolderEstimate:
    """Least-squares slope of log omega(2^-s) against log 2^-s.

    ``scales`` are the dyadic levels s; the default uses the four finest
    levels allowed by the resolution, ending at log2(resolution) - 2.  A flat modulus (constant data) gives
    theta = 1 with the degenerate flag set.
    """
    samples = g.samples if isinstance(g, GridDisplacement) else np.asarray(g, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    R = samples.shape[0]
    top = int(np.log2(R))
    if 2 ** top != R:
        raise ValueError("resolution must be a power of two")
    if scales is None:
        scales = list(range(max(1, top - 5), top - 1))
    scales = sorted(set(int(s) for s in scales))
    if len(scales) < 4:
        raise InsufficientSamples(f"need at least 4 dyadic scales, got {len(scales)}")
    if R < 2 ** (max(scales) + 2):
        raise ValueError(f"resolution {R} too coarse for scale 2^-{max(scales)}")
    deltas, omegas = [], []
    for s in scales:
        step = R // 2 ** s
        deltas.append(2.0 ** -s)
        omegas.append(modulus_of_continuity(samples, step))
    if max(omegas) < NOISE_FLOOR or min(omegas) <= 0:
        return HolderEstimate(1.0, tuple(deltas), tuple(omegas), 0.0, True)
    x = np.log(deltas)
    y = np.log(omegas)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    theta = float(np.clip(slope, 0.0, 1.0))
    return HolderEstimate(theta, tuple(deltas), tuple(omegas), resid, theta <= 0.0)
