"""Grid solver for the conjugacy h = id + w with h o f = A h, and
equivariance checks of h against a whole commuting action."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import InsufficientSamples, NoConvergence, NotHyperbolic
from .grid import GridDisplacement, grid_points, torus_difference
from .holder import HolderEstimate, estimate_holder
from .maps import PerturbedMap

HYPERBOLICITY_GAP = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    resolution: int = 128
    tol: float = 1e-12
    max_iter: int = 500
    interpolation: str = "multilinear"

    def __post_init__(self):
        if self.resolution < 4 or self.resolution & (self.resolution - 1):
            raise ValueError("resolution must be a power of two >= 4")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol and max_iter must be positive")


@dataclass(frozen=True)
class HyperbolicSplitting:
    """Real eigen-coordinates of A: A = P diag(blocks) P^{-1}, stable block first."""

    basis: np.ndarray  # P
    inverse: np.ndarray  # P^{-1}
    stable_dim: int
    stable_block: np.ndarray
    unstable_block: np.ndarray

    @property
    def contraction(self) -> float:
        """max(|A_s|, |A_u^{-1}|) in the block Euclidean norms."""
        s = np.linalg.norm(self.stable_block, 2) if self.stable_block.size else 0.0
        u = np.linalg.norm(np.linalg.inv(self.unstable_block), 2) if self.unstable_block.size else 0.0
        return float(max(s, u))


def hyperbolic_splitting(a: np.ndarray) -> HyperbolicSplitting:
    """Eigenbasis with complex pairs as (Re v, Im v); raises NotHyperbolic."""
    a = np.asarray(a, dtype=float)
    vals, vecs = np.linalg.eig(a)
    if np.any(np.abs(np.abs(vals) - 1) < HYPERBOLICITY_GAP):
        raise NotHyperbolic(f"eigenvalue moduli {np.sort(np.abs(vals))} include 1")
    cols_s, cols_u = [], []
    used = np.zeros(len(vals), dtype=bool)
    order = np.argsort(np.abs(vals))
    for i in order:
        if used[i]:
            continue
        used[i] = True
        lam, v = vals[i], vecs[:, i]
        target = cols_s if abs(lam) < 1 else cols_u
        if abs(lam.imag) < 1e-12 * max(1, abs(lam)):
            target.append([v.real])
        else:
            j = next(j for j in order if not used[j] and abs(vals[j] - lam.conjugate()) < 1e-9 * abs(lam))
            used[j] = True
            v = v if lam.imag > 0 else vecs[:, j]
            target.append([v.real, v.imag])
    cols = [c for blk in cols_s for c in blk] + [c for blk in cols_u for c in blk]
    P = np.array(cols).T
    if np.linalg.cond(P) > 1e10:
        raise NotHyperbolic("eigenbasis of A is numerically singular")
    Pinv = np.linalg.inv(P)
    D = Pinv @ a @ P
    ds = sum(len(b) for b in cols_s)
    return HyperbolicSplitting(P, Pinv, ds, D[:ds, :ds], D[ds:, ds:])


@dataclass
class ConjugacyResult:
    w: GridDisplacement
    residual: float
    grid_residual: float
    iterations: int
    holder: HolderEstimate | None
    profile: list = field(default_factory=list)
    contraction_bound: float = 0.0

    def measured_ratios(self) -> np.ndarray:
        p = np.array(self.profile)
        ok = p[:-1] > 1e3 * np.finfo(float).eps
        return (p[1:] / np.where(ok, p[:-1], 1.0))[ok[: len(p) - 1]]

    def conjugacy(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return x + self.w(x)

    def to_json(self) -> dict:
        return {"resolution": self.w.resolution, "n": self.w.n, "residual": self.residual,
                "grid_residual": self.grid_residual, "iterations": self.iterations,
                "sup_norm": self.w.sup_norm(), "contraction_bound": self.contraction_bound,
                "profile": list(self.profile),
                "holder": self.holder.to_json() if self.holder else None}

    def save(self, prefix) -> tuple[Path, Path]:
        prefix = Path(prefix)
        grid_path = prefix.with_suffix(".npy")
        meta_path = prefix.with_suffix(".json")
        self.w.save(grid_path)
        meta_path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))
        return grid_path, meta_path


def _holder_if_resolved(w: GridDisplacement, wanted: bool) -> HolderEstimate | None:
    """Hölder estimate, or None when not requested or the grid has too few dyadic scales."""
    if not wanted:
        return None
    try:
        return estimate_holder(w)
    except InsufficientSamples:
        return None


def solve_franks_manning(pm: PerturbedMap, cfg: SolverConfig = SolverConfig(),
                         initial: GridDisplacement | None = None, holder: bool = True) -> ConjugacyResult:
    """Fixed-point iteration for w o f = A w - u on the grid.

    In eigen-coordinates c = P^{-1} w, the unstable part is updated by
    c_u <- A_u^{-1}(c_u o f + u_u) at grid points and the stable part by
    c_s <- A_s (c_s o f^{-1}) - u_s o f^{-1}, with f^{-1} at grid points
    computed once by Newton inversion.  Iterates are compared in the norm
    max(sup |c_s|, sup |c_u|), in which one sweep contracts by at most
    max(|A_s|, |A_u^{-1}|).  ``residual`` is the sup of the
    fixed-point defect at grid points; ``grid_residual`` is the conjugacy
    equation h(f(x)) - A h(x) evaluated with the interpolated w.
    """
    n, R = pm.n, cfg.resolution
    split = hyperbolic_splitting(pm.matrix)
    P, Pinv, ds = split.basis, split.inverse, split.stable_dim
    X = grid_points(n, R)
    if pm.is_linear and initial is None:
        w = GridDisplacement.zeros(n, R, cfg.interpolation)
        return ConjugacyResult(w, 0.0, 0.0, 0, _holder_if_resolved(w, holder), [],
                               split.contraction)
    FX = pm(X)
    FinvX = pm.inverse(X)
    u_coords = pm.u(X) @ Pinv.T
    u_finv_coords = pm.u(FinvX) @ Pinv.T
    As = split.stable_block
    Au_inv = np.linalg.inv(split.unstable_block) if n > ds else np.zeros((0, 0))
    c = np.zeros_like(X) if initial is None else initial.flat() @ Pinv.T
    profile = []
    for it in range(1, cfg.max_iter + 1):
        field_c = GridDisplacement.from_flat(c, R, cfg.interpolation)
        new = np.empty_like(c)
        if ds:
            new[:, :ds] = field_c(FinvX)[:, :ds] @ As.T - u_finv_coords[:, :ds]
        if n > ds:
            new[:, ds:] = (field_c(FX)[:, ds:] + u_coords[:, ds:]) @ Au_inv.T
        delta = new - c
        diff = float(max(np.linalg.norm(delta[:, :ds], axis=1).max() if ds else 0.0,
                         np.linalg.norm(delta[:, ds:], axis=1).max() if n > ds else 0.0))
        profile.append(diff)
        c = new
        if diff < cfg.tol:
            break
        if not np.isfinite(diff) or (it > 20 and diff > 1e3 * profile[0]):
            raise NoConvergence("fixed-point iteration diverged", profile)
    else:
        raise NoConvergence(f"no convergence to {cfg.tol} in {cfg.max_iter} iterations", profile)
    w = GridDisplacement.from_flat(c @ P.T, R, cfg.interpolation)
    residual = _fixed_point_defect(w, pm, X, FX, FinvX, split)
    grid_res = conjugacy_residual(w, pm, X)
    return ConjugacyResult(w, residual, grid_res, it, _holder_if_resolved(w, holder),
                           profile, split.contraction)


def _fixed_point_defect(w: GridDisplacement, pm: PerturbedMap, X, FX, FinvX, split) -> float:
    Pinv, ds = split.inverse, split.stable_dim
    c_x = w.flat() @ Pinv.T
    unstable = (w(FX) @ Pinv.T)[:, ds:] + (pm.u(X) @ Pinv.T)[:, ds:] - c_x[:, ds:] @ split.unstable_block.T
    stable = c_x[:, :ds] - (w(FinvX) @ Pinv.T)[:, :ds] @ split.stable_block.T + (pm.u(FinvX) @ Pinv.T)[:, :ds]
    return float(np.abs(np.hstack([stable, unstable]) @ split.basis.T).max()) if len(X) else 0.0


def conjugacy_residual(w, pm: PerturbedMap, points: np.ndarray) -> float:
    """sup |h(f(x)) - A h(x)| on the torus, h = id + w."""
    fx = pm(points)
    lhs = fx + w(fx)
    rhs = (points + w(points)) @ pm.matrix.T
    return float(np.abs(torus_difference(lhs, rhs)).max())


def inverse_residual(w, pm: PerturbedMap, points: np.ndarray) -> float:
    """sup |h(f^{-1}(x)) - A^{-1} h(x)|: the same w must conjugate the inverses."""
    y = pm.inverse(points)
    lhs = y + w(y)
    rhs = (points + w(points)) @ np.linalg.inv(pm.matrix).T
    return float(np.abs(torus_difference(lhs, rhs)).max())


@dataclass(frozen=True)
class EquivarianceReport:
    residuals: tuple[float, ...]
    commutators: tuple[float, ...]
    precondition_ok: bool
    message: str = ""

    def to_json(self) -> dict:
        return {"residuals": list(self.residuals), "commutators": list(self.commutators),
                "precondition_ok": self.precondition_ok, "message": self.message}


def verify_equivariance(w, gs_linear, maps: Sequence[PerturbedMap], anosov_index: int = 0,
                        resolution: int = 64, commute_tol: float = 1e-8) -> EquivarianceReport:
    """sup |h o rho(n_j) - rho*(n_j) o h| for each generator j on a grid.

    The nonlinear maps must commute with the Anosov member; if a commutator
    exceeds ``commute_tol`` the report says so and the residuals are still
    listed for diagnosis.
    """
    gens = list(getattr(gs_linear, "generators", gs_linear))
    if len(gens) != len(maps):
        raise ValueError("one nonlinear map per linear generator is required")
    n = maps[0].n
    X = grid_points(n, resolution)
    anosov = maps[anosov_index]
    commutators = []
    for j, g in enumerate(maps):
        if j == anosov_index:
            commutators.append(0.0)
            continue
        d = torus_difference(anosov(g(X)), g(anosov(X)))
        commutators.append(float(np.abs(d).max()))
    residuals = []
    for M, g in zip(gens, maps):
        mat = M.to_numpy() if hasattr(M, "to_numpy") else np.asarray(M, dtype=float)
        gx = g(X)
        d = torus_difference(gx + w(gx), (X + w(X)) @ mat.T)
        residuals.append(float(np.abs(d).max()))
    bad = [j for j, c in enumerate(commutators) if c > commute_tol]
    msg = (f"maps {bad} do not commute with the Anosov member (commutator norms "
           f"{[commutators[j] for j in bad]})" if bad else "")
    return EquivarianceReport(tuple(residuals), tuple(commutators), not bad, msg)
