"""Local linearization of commuting contracting germs fixing the origin,
with detection of invariant-flag obstructions."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from ..errors import NoConvergence, NotContracting


@dataclass
class GermMap:
    """A map germ at 0 with f(0) = 0, evaluated on arrays of shape (M, n)."""

    func: Callable[[np.ndarray], np.ndarray]
    derivative: np.ndarray | None = None
    name: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(np.atleast_2d(x)), dtype=float)

    def linear_part(self, n: int) -> np.ndarray:
        if self.derivative is None:
            # Richardson-extrapolated central differences
            cols = []
            for j in range(n):
                e = np.zeros((1, n))
                e[0, j] = 1.0
                d1 = (self(1e-4 * e) - self(-1e-4 * e))[0] / 2e-4
                d2 = (self(5e-5 * e) - self(-5e-5 * e))[0] / 1e-4
                cols.append((4 * d2 - d1) / 3)
            self.derivative = np.array(cols).T
        return np.atleast_2d(np.asarray(self.derivative, dtype=float))


@dataclass(frozen=True)
class GermConfig:
    radius: float = 0.5
    jet_radius: float = 0.05
    jet_degree: int = 6
    n_samples: int = 257
    max_iter: int = 400
    cauchy_tol: float = 1e-15
    flag_tol: float = 1e-6
    seed: int = 0


@dataclass(frozen=True)
class Obstruction:
    """Member ``member`` admits no common invariant manifold tangent to ``subspace``."""

    member: int
    flag: str
    subspace: np.ndarray
    residual: float
    reference_residual: float

    def to_json(self) -> dict:
        return {"member": self.member, "flag": self.flag, "subspace": self.subspace.tolist(),
                "residual": self.residual, "reference_residual": self.reference_residual}


@dataclass
class LinearizationChart:
    """h = lim D^{-m} T^m for the contracting member T, frozen at ``depth``."""

    contracting: GermMap
    linear_inverse: np.ndarray
    depth: int
    profile: list
    residuals: list = field(default_factory=list)
    flags_checked: list = field(default_factory=list)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(x, dtype=float))
        for _ in range(self.depth):
            y = self.contracting(y)
        inv_pow = np.linalg.matrix_power(self.linear_inverse, self.depth)
        return y @ inv_pow.T

    def to_json(self) -> dict:
        return {"depth": self.depth, "profile": list(self.profile), "residuals": list(self.residuals),
                "flags_checked": list(self.flags_checked)}


def _ball_samples(n: int, radius: float, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if n == 1:
        return np.linspace(-radius, radius, count)[:, None]
    pts = rng.normal(size=(count, n))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    pts *= radius * rng.random((count, 1)) ** (1 / n)
    return np.vstack([pts, np.zeros((1, n))])


def _real_eigenbasis(d: np.ndarray):
    """Columns grouped by eigenvalue modulus (ascending) and the list of group column ranges."""
    vals, vecs = np.linalg.eig(d)
    order = np.argsort(np.abs(vals), kind="stable")
    cols, moduli, used = [], [], set()
    for i in order:
        if i in used:
            continue
        used.add(i)
        lam, v = vals[i], vecs[:, i]
        if abs(lam.imag) < 1e-12:
            cols.append(v.real)
            moduli.append(abs(lam))
        else:
            j = next(j for j in order if j not in used and abs(vals[j] - np.conj(lam)) < 1e-9)
            used.add(j)
            cols.extend([v.real, v.imag])
            moduli.extend([abs(lam)] * 2)
    groups = []
    start = 0
    for idx in range(1, len(moduli) + 1):
        if idx == len(moduli) or abs(moduli[idx] - moduli[start]) > 1e-9 * max(1.0, moduli[start]):
            groups.append((start, idx, moduli[start]))
            start = idx
    return np.array(cols).T, groups


def _monomials(d: int, degree: int):
    return [m for deg in range(2, degree + 1) for m in combinations_with_replacement(range(d), deg)]


def _eval_monomials(s: np.ndarray, monos) -> np.ndarray:
    return np.stack([np.prod(s[:, list(m)], axis=1) for m in monos], axis=1)


def _flag_residual(maps: Sequence[GermMap], basis: np.ndarray, tangent: list[int], cfg: GermConfig):
    """Best polynomial graph over ``tangent`` coordinates invariant under every map.

    Returns the sup residual of the invariance equation divided by the jet radius.
    """
    n = basis.shape[0]
    normal = [i for i in range(n) if i not in tangent]
    binv = np.linalg.inv(basis)
    d = len(tangent)
    monos = _monomials(d, cfg.jet_degree)
    s = _ball_samples(d, cfg.jet_radius, cfg.n_samples, cfg.seed)
    M = _eval_monomials(s, monos)

    def residual(theta):
        G = theta.reshape(len(monos), len(normal))
        c = M @ G
        y = np.zeros((len(s), n))
        y[:, tangent] = s
        y[:, normal] = c
        x = y @ basis.T
        out = []
        for f in maps:
            fy = f(x) @ binv.T
            s2 = fy[:, tangent]
            out.append(fy[:, normal] - _eval_monomials(s2, monos) @ G)
        return np.concatenate([o.ravel() for o in out])

    theta0 = np.zeros(len(monos) * len(normal))
    sol = least_squares(residual, theta0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    return float(np.abs(residual(sol.x)).max() / cfg.jet_radius)


def linearize_germ(maps: Sequence[GermMap], cfg: GermConfig = GermConfig(), n: int | None = None):
    """Chart h with h o g = D_0 g o h for every member g, or an Obstruction.

    Phase 1 fits polynomial graphs for the fast and slow flags of the
    contracting member T and asks whether each stays invariant when another
    member is added.  Phase 2 iterates h_m = (D_0 T)^{-m} T^m with a Cauchy
    monitor and verifies the conjugacy equation for all members.
    """
    maps = [m if isinstance(m, GermMap) else GermMap(m) for m in maps]
    if n is None:
        n = next((np.atleast_2d(m.derivative).shape[0] for m in maps if m.derivative is not None), None)
    if n is None:
        raise ValueError("dimension unknown: pass n or supply a derivative")
    linear = [m.linear_part(n) for m in maps]
    radii = [np.abs(np.linalg.eigvals(D)).max() for D in linear]
    t_index = next((i for i, r in enumerate(radii) if r < 1), None)
    if t_index is None:
        raise NotContracting(f"no member is a contraction at 0 (spectral radii {radii})")
    T, DT = maps[t_index], linear[t_index]

    # phase 1: flags
    basis, groups = _real_eigenbasis(DT)
    flags = []
    for g in range(len(groups) - 1):
        fast = list(range(0, groups[g][1]))
        slow = list(range(groups[g + 1][0], n))
        flags.append((f"fast flag {g + 1}", fast))
        flags.append((f"slow flag {g + 2}", slow))
    checked = []
    for name, tangent in flags:
        ref = _flag_residual([T], basis, tangent, cfg)
        if ref > cfg.flag_tol:
            checked.append({"flag": name, "status": "not determined by the contracting member",
                            "residual": ref})
            continue
        for j, g in enumerate(maps):
            if j == t_index:
                continue
            joint = _flag_residual([T, g], basis, tangent, cfg)
            if joint > cfg.flag_tol:
                return Obstruction(j, name, basis[:, tangent], joint, ref)
        checked.append({"flag": name, "status": "invariant", "residual": ref})

    # phase 2: direct limit
    pts = _ball_samples(n, cfg.radius, cfg.n_samples, cfg.seed + 1)
    dinv = np.linalg.inv(DT)
    y = pts.copy()
    inv_pow = np.eye(n)
    prev = pts.copy()
    profile = []
    depth = 0
    growth = 0
    best = np.inf
    for m in range(1, cfg.max_iter + 1):
        y = T(y)
        inv_pow = inv_pow @ dinv
        h = y @ inv_pow.T
        diff = float(np.abs(h - prev).max())
        profile.append(diff)
        prev = h
        depth = m
        if diff <= cfg.cauchy_tol * max(1.0, cfg.radius):
            break
        if diff < best:
            best = diff
            growth = 0
        else:
            growth += 1
            if best < 1e-12:
                break  # rounding floor reached
            if growth >= 8:
                raise NoConvergence("Cauchy differences of D^-m T^m stopped decreasing; the spectral "
                                    "spread defeats the direct scheme", profile)
        if not np.all(np.isfinite(h)):
            raise NoConvergence("iteration overflowed", profile)
    else:
        if profile[-1] > 1e-10:
            raise NoConvergence(f"no convergence in {cfg.max_iter} steps", profile)
    chart = LinearizationChart(T, dinv, depth, profile, flags_checked=checked)
    h_pts = chart(pts)
    for g, D in zip(maps, linear):
        gx = g(pts)
        inside = np.linalg.norm(gx, axis=1) <= cfg.radius * (1 + 1e-12)
        res = np.abs(chart(gx[inside]) - h_pts[inside] @ D.T).max() if inside.any() else 0.0
        chart.residuals.append(float(res))
    return chart
