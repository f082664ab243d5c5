"""Uniform hyperbolicity from subadditive cocycles, and Lyapunov exponents
at periodic orbits of perturbed toral maps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .conjugacy_solver.grid import grid_points, torus_difference
from .conjugacy_solver.maps import PerturbedMap, newton_solve
from .errors import (HorizonExceeded, NewtonDiverged, NonInvertible, NonPeriodic, NotSubadditive,
                     OrbitMismatch)
from .exact_linear_algebra import PeriodicOrbit, ToralMatrix, periodic_points

# ---------------------------------------------------------------------------
# subadditive sequences


@dataclass
class SubadditiveSequence:
    """a(n, X) evaluates a_n at the rows of X; ``shift`` is the map f.

    ``companion`` evaluates b_n with a_n >= -b_n; when absent, -a_n is
    bounded through |a_n|.  ``upto(nmax, X)`` may return a_1..a_nmax as
    one (nmax, M) array when that is cheaper than separate calls, and
    ``along_orbit(m, X, L)`` the values a_m(f^j x) for j < L as (L, M).
    """

    a: Callable[[int, np.ndarray], np.ndarray]
    shift: Callable[[np.ndarray], np.ndarray]
    n: int
    companion: Callable[[int, np.ndarray], np.ndarray] | None = None
    name: str = ""
    upto: Callable[[int, np.ndarray], np.ndarray] | None = None
    along_orbit: Callable[[int, np.ndarray, int], np.ndarray] | None = None

    def values_upto(self, nmax: int, X: np.ndarray) -> np.ndarray:
        if self.upto is not None:
            return self.upto(nmax, X)
        return np.array([self.a(j, X) for j in range(1, nmax + 1)])

    def spot_check(self, triples: int = 1000, max_len: int = 5, tol: float = 1e-9, seed: int = 0) -> float:
        """Largest violation of a_{n+k}(x) <= a_n(f^k x) + a_k(x) over random triples."""
        rng = np.random.default_rng(seed)
        xs = rng.random((triples, self.n))
        ns = rng.integers(1, max_len + 1, triples)
        ks = rng.integers(1, max_len + 1, triples)
        at_x = self.values_upto(2 * max_len, xs)
        cols = np.arange(triples)
        gap = np.full(triples, -np.inf)
        fkx = xs
        for k in range(1, max_len + 1):
            fkx = self.shift(fkx) % 1.0
            sel = ks == k
            if not sel.any():
                continue
            at_fkx = self.values_upto(max_len, fkx[sel])
            c, n = cols[sel], ns[sel]
            gap[sel] = at_x[n + k - 1, c] - at_fkx[n - 1, np.arange(len(c))] - at_x[k - 1, c]
        worst = float(gap.max())
        if worst > tol:
            raise NotSubadditive(f"subadditivity violated by {worst:.3e}")
        return worst


@dataclass(frozen=True)
class NegativityConfig:
    resolution: int = 64
    horizon: int = 8
    birkhoff_length: int = 64
    burn_in: int = 8
    max_l: int = 64
    spot_triples: int = 1000
    spot_tol: float = 1e-6

    def __post_init__(self):
        if self.resolution < 2 or self.horizon < 1 or self.birkhoff_length <= self.burn_in:
            raise ValueError("invalid negativity configuration")


@dataclass(frozen=True)
class Certificate:
    N: int
    m: int
    l: int
    average_bound: float
    sup_a_N: float

    @property
    def rate(self) -> float:
        """Uniform exponential rate sup a_N / N."""
        return self.sup_a_N / self.N

    def to_json(self) -> dict:
        return {"N": self.N, "m": self.m, "l": self.l, "average_bound": self.average_bound,
                "sup_a_N": self.sup_a_N, "rate": self.rate}


@dataclass(frozen=True)
class CounterexampleProfile:
    points: np.ndarray
    averages: np.ndarray
    m: int
    message: str

    def to_json(self) -> dict:
        return {"points": self.points.tolist(), "averages": self.averages.tolist(), "m": self.m,
                "message": self.message}


def _orbit(shift, x: np.ndarray, length: int) -> np.ndarray:
    out = np.empty((length,) + x.shape)
    y = x
    for j in range(length):
        out[j] = y
        y = shift(y) % 1.0
    return out


def uniform_negativity(s: SubadditiveSequence, cfg: NegativityConfig = NegativityConfig()):
    """Find N with a_N < 0 at every grid point, or explain why not.

    For m = 1..horizon: if a_m < 0 on the grid, N = m.  Otherwise the
    orbit averages (1/n) sum_{j<n} a_m(f^j x) for burn_in <= n < length
    give c; when c < 0 the length l of blocks is sized from
    a_{lm} <= l c + sup_{h<m}(a_h + b_h), and a_N is checked directly.
    Returns a Certificate, a CounterexampleProfile when the averages are
    not negative, or raises HorizonExceeded.
    """
    if cfg.spot_triples:
        s.spot_check(cfg.spot_triples, tol=cfg.spot_tol)
    X = grid_points(s.n, cfg.resolution)
    flat = None
    last_profile = None
    on_grid = s.values_upto(cfg.horizon, X)
    for m in range(1, cfg.horizon + 1):
        a_m = on_grid[m - 1]
        if a_m.max() < 0:
            return Certificate(m, m, 1, float(a_m.max()), float(a_m.max()))
        if s.along_orbit is not None:
            vals = s.along_orbit(m, X, cfg.birkhoff_length)
        else:
            if flat is None:
                flat = _orbit(s.shift, X, cfg.birkhoff_length).reshape(-1, s.n)
            vals = s.a(m, flat).reshape(cfg.birkhoff_length, -1)
        averages = np.cumsum(vals, axis=0) / np.arange(1, cfg.birkhoff_length + 1)[:, None]
        tail = averages[cfg.burn_in:]
        c = float(tail.max())
        if c >= 0:
            worst = np.argsort(tail.max(axis=0))[::-1][:5]
            last_profile = CounterexampleProfile(X[worst], tail.max(axis=0)[worst], m,
                                                 f"orbit averages of a_{m} reach {c:.3e} >= 0")
            continue
        const = 0.0
        for h in range(1, m):
            ah = on_grid[h - 1]
            bh = s.companion(h, X) if s.companion is not None else np.abs(ah)
            const = max(const, float(ah.max() + bh.max()))
        l = max(1, math.ceil(const / -c) + 1) if const > 0 else 1
        while l <= cfg.max_l:
            N = l * m
            a_N = s.a(N, X)
            if a_N.max() < 0:
                return Certificate(N, m, l, c, float(a_N.max()))
            l *= 2
    if last_profile is not None:
        return last_profile
    raise HorizonExceeded(f"no certificate with m <= {cfg.horizon}")


# ---------------------------------------------------------------------------
# derivative cocycles


def _frames_along(f: PerturbedMap, orbit: np.ndarray, dim: int, kind: str, seed: int = 0) -> np.ndarray:
    """Orthonormal frames of the stable (pulled back) or unstable (pushed forward) bundle.

    ``orbit`` has shape (L, M, n); the first ``depth`` points at the
    start (unstable) or end (stable) only serve as convergence padding.
    """
    L, M, n = orbit.shape
    rng = np.random.default_rng(seed)
    Q = np.linalg.qr(rng.normal(size=(M, n, dim)))[0]
    frames = np.empty((L, M, n, dim))
    if kind == "stable":
        for j in range(L - 1, -1, -1):
            frames[j] = Q
            if j:
                Q = np.linalg.qr(np.linalg.solve(f.jacobian(orbit[j - 1]), Q))[0]
    else:
        for j in range(L):
            frames[j] = Q
            Q = np.linalg.qr(f.jacobian(orbit[j]) @ Q)[0]
    return frames


@dataclass
class CocycleSpec:
    """Derivative cocycle of f restricted to a bundle E.

    ``bundle`` is 'stable' or 'unstable' (computed dynamically with the
    dimension of the linear part's splitting) or a callable returning
    (M, n, d) frames at points for a fixed bundle.
    """

    f: PerturbedMap
    bundle: object = "stable"
    depth: int | None = None
    dim: int | None = None

    def __post_init__(self):
        moduli = np.abs(np.linalg.eigvals(self.f.matrix))
        if self.dim is None:
            if callable(self.bundle):
                self.dim = self.bundle(np.zeros((1, self.f.n))).shape[-1]
            elif self.bundle == "stable":
                self.dim = int((moduli < 1).sum())
            else:
                self.dim = int((moduli > 1).sum())
        if self.depth is None:
            # frames converge like (inner/outer)^depth; aim below 1e-16 with some slack
            inner, outer = moduli[moduli < 1], moduli[moduli > 1]
            gap = math.log(outer.min() / inner.max()) if inner.size and outer.size else 0.0
            self.depth = int(min(200, max(8, math.ceil(1.25 * 37 / gap)))) if gap > 0 else 200

    def frames(self, X: np.ndarray) -> np.ndarray:
        if callable(self.bundle):
            return self.bundle(X)
        if self.bundle == "stable":
            orb = _orbit(self.f, X, self.depth + 1)
            return _frames_along(self.f, orb, self.dim, "stable")[0]
        back = [X]
        for _ in range(self.depth):
            back.append(self.f.inverse(back[-1]) % 1.0)
        orb = np.array(back[::-1])
        return _frames_along(self.f, orb, self.dim, "unstable")[-1]

    def _orbit_frames(self, X: np.ndarray, length: int):
        """Orbit points and orthonormal bundle frames at f^j(x), j < length."""
        if self.bundle == "stable":
            orb = _orbit(self.f, X, length + self.depth)
            return orb[:length], _frames_along(self.f, orb, self.dim, "stable")[:length]
        orb = _orbit(self.f, X, length)
        frames = np.empty((length,) + X.shape + (self.dim,))
        Q = self.frames(X)
        for j in range(length):
            frames[j] = Q
            if j + 1 < length:
                Q = np.linalg.qr(self.f.jacobian(orb[j]) @ Q)[0]
        return orb, frames

    def _blocks(self, X: np.ndarray, steps: int):
        """Df restricted to E in frame coordinates along the orbit; shape (steps, M, d, d).

        Pushing a stable frame forward through Df^n amplifies rounding in
        the unstable direction by the spectral gap; the d x d blocks
        Q_{j+1}^T Df Q_j do not, and their products have the same singular
        values when E is invariant.
        """
        orb, frames = self._orbit_frames(X, steps + 1)
        M, n = X.shape
        J = self.f.jacobian(orb[:steps].reshape(-1, n)).reshape(steps, M, n, n)
        return np.swapaxes(frames[1:], -1, -2) @ J @ frames[:steps], frames

    def restricted_product(self, n: int, X: np.ndarray) -> np.ndarray:
        """Df^n(x) applied to an orthonormal frame of E(x); shape (M, N, d)."""
        if callable(self.bundle):
            V = self.frames(X)
            y = X
            for _ in range(n):
                V = self.f.jacobian(y) @ V
                y = self.f(y) % 1.0
            return V
        B, frames = self._blocks(X, n)
        C = np.broadcast_to(np.eye(self.dim), (len(X), self.dim, self.dim))
        for j in range(n):
            C = B[j] @ C
        return frames[n] @ C

    def singular_values_upto(self, nmax: int, X: np.ndarray) -> np.ndarray:
        """Singular values of Df^j restricted to E, j = 1..nmax; shape (nmax, M, d)."""
        if callable(self.bundle):
            V = self.frames(X)
            y = X
            out = []
            for _ in range(nmax):
                V = self.f.jacobian(y) @ V
                y = self.f(y) % 1.0
                out.append(np.linalg.svd(V, compute_uv=False))
            return np.array(out)
        B, _ = self._blocks(X, nmax)
        C = np.broadcast_to(np.eye(self.dim), (len(X), self.dim, self.dim))
        out = []
        for j in range(nmax):
            C = B[j] @ C
            out.append(np.linalg.svd(C, compute_uv=False))
        return np.array(out)

    def orbit_singular_values(self, m: int, X: np.ndarray, length: int) -> np.ndarray:
        """Singular values of Df^m restricted to E at f^j(x) for j < length; shape (length, M, d).

        Frames along each orbit come from one sweep: pulled back for the
        stable bundle, pushed forward for the unstable one.
        """
        M, n = X.shape
        total = length + m
        if callable(self.bundle):
            orb = _orbit(self.f, X, total)
            V = self.bundle(orb[:length].reshape(-1, n)).reshape(length, M, n, self.dim)
            J = self.f.jacobian(orb[:total].reshape(-1, n)).reshape(total, M, n, n)
            for t in range(m):
                V = J[t:t + length] @ V
            return np.linalg.svd(V, compute_uv=False)
        B, _ = self._blocks(X, total)
        C = np.broadcast_to(np.eye(self.dim), (length, M, self.dim, self.dim))
        for t in range(m):
            C = B[t:t + length] @ C
        return np.linalg.svd(C, compute_uv=False)

    def log_norm(self, n: int, X: np.ndarray) -> np.ndarray:
        return np.log(np.linalg.svd(self.restricted_product(n, X), compute_uv=False)[:, 0])

    def log_conorm(self, n: int, X: np.ndarray) -> np.ndarray:
        return np.log(np.linalg.svd(self.restricted_product(n, X), compute_uv=False)[:, -1])

    def invariance_defect(self, resolution: int = 16) -> float:
        """sup over the grid of the part of Df(x) E(x) outside E(f(x))."""
        X = grid_points(self.f.n, resolution)
        image = self.f.jacobian(X) @ self.frames(X)
        target = self.frames(self.f(X) % 1.0)
        proj = target @ np.swapaxes(target, 1, 2) @ image
        rel = np.linalg.norm(image - proj, axis=(1, 2)) / np.linalg.norm(image, axis=(1, 2))
        return float(rel.max())


def certify_uniform_contraction(c: CocycleSpec, cfg: NegativityConfig = NegativityConfig(),
                                invariance_tol: float = 1e-6):
    """a_n = log |Df^n|E|, b_n = -log m(Df^n|E); a Certificate means E is uniformly contracted."""
    defect = c.invariance_defect(cfg.resolution)
    if defect > invariance_tol:
        raise ValueError(f"bundle is not invariant (defect {defect:.3e})")
    s = SubadditiveSequence(c.log_norm, c.f, c.f.n, lambda n, X: -c.log_conorm(n, X),
                            "log norm on bundle",
                            lambda nmax, X: np.log(c.singular_values_upto(nmax, X)[..., 0]),
                            lambda m, X, L: np.log(c.orbit_singular_values(m, X, L)[..., 0]))
    return uniform_negativity(s, cfg)


def certify_uniform_expansion(c: CocycleSpec, cfg: NegativityConfig = NegativityConfig()):
    """a_n = -log m(Df^n|E); a Certificate means E is uniformly expanded."""
    s = SubadditiveSequence(lambda n, X: -c.log_conorm(n, X), c.f, c.f.n, c.log_norm,
                            "minus log conorm on bundle",
                            lambda nmax, X: -np.log(c.singular_values_upto(nmax, X)[..., -1]),
                            lambda m, X, L: -np.log(c.orbit_singular_values(m, X, L)[..., -1]))
    return uniform_negativity(s, cfg)


def _jacobian_product(f: PerturbedMap, n: int, X: np.ndarray) -> np.ndarray:
    J = np.broadcast_to(np.eye(f.n), (len(X), f.n, f.n)).copy()
    y = X
    for _ in range(n):
        J = f.jacobian(y) @ J
        y = f(y) % 1.0
    return J


def certify_expanding(f: PerturbedMap, cfg: NegativityConfig = NegativityConfig()):
    """a_n = -log m(Df^n) over the full tangent space."""
    dets = np.linalg.det(f.jacobian(grid_points(f.n, cfg.resolution)))
    if np.any(dets == 0):
        raise NonInvertible("Jacobian is singular on the grid")

    def a(n, X):
        return -np.log(np.linalg.svd(_jacobian_product(f, n, X), compute_uv=False)[:, -1])

    def b(n, X):
        return np.log(np.linalg.svd(_jacobian_product(f, n, X), compute_uv=False)[:, 0])

    return uniform_negativity(SubadditiveSequence(a, f, f.n, b, "minus log conorm"), cfg)


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass
class ExponentReport:
    period: int
    points: np.ndarray
    exponents: np.ndarray
    translation: tuple[int, ...]
    closing_error: float
    comparison: np.ndarray | None = None
    log_det_mean: float = 0.0

    @property
    def stable_dimension(self) -> int:
        return int((self.exponents < 0).sum())

    def to_json(self) -> dict:
        return {"period": self.period, "points": self.points.tolist(),
                "exponents": self.exponents.tolist(), "translation": list(self.translation),
                "closing_error": self.closing_error,
                "comparison": None if self.comparison is None else self.comparison.tolist()}


def _closing(f: PerturbedMap, x: np.ndarray, period: int, k: np.ndarray) -> np.ndarray:
    return f.iterate(x, period) - x - k


def refine_periodic_point(f: PerturbedMap, x0: np.ndarray, period: int, translation,
                          tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """Newton's method on f^period(x) - x - translation = 0 (lifted)."""
    k = np.asarray(translation, dtype=float)
    eye = np.eye(f.n)

    def F(x):
        return _closing(f, x, period, k)

    def J(x):
        return _jacobian_product(f, period, x) - eye

    try:
        x = newton_solve(F, J, np.zeros((1, f.n)), np.atleast_2d(x0), tol=tol, max_iter=max_iter)
    except NonInvertible as exc:
        raise NewtonDiverged(f"Newton refinement failed: {exc}") from None
    return x[0]


def _orbit_exponents(f: PerturbedMap, x0: np.ndarray, period: int):
    """Sorted log-moduli of eigenvalues of the derivative product, divided by the period.

    The product is renormalized after each factor and the scales kept in
    log form so long orbits neither overflow nor underflow.
    """
    x = np.atleast_2d(x0)
    prod = np.eye(f.n)
    log_scale = 0.0
    log_det = 0.0
    points = []
    for _ in range(period):
        points.append(x[0] % 1.0)
        J = f.jacobian(x)[0]
        log_det += math.log(abs(np.linalg.det(J)))
        prod = J @ prod
        s = np.abs(prod).max()
        prod /= s
        log_scale += math.log(s)
        x = f(x)
    eig = np.linalg.eigvals(prod)
    ex = np.sort((np.log(np.abs(eig)) + log_scale) / period)
    return ex, np.array(points), log_det / period


def periodic_exponents(f: PerturbedMap, orbit, refine: bool = True, translation=None,
                       reference: np.ndarray | None = None, tol: float = 1e-8) -> ExponentReport:
    """Lyapunov exponents at a periodic orbit of f.

    ``orbit`` is a PeriodicOrbit of the linear part (used as seed, with its
    exact integer translation) or a (point, period) pair.  With ``refine``
    the seed is polished by Newton's method to closing error < 1e-12.
    ``reference`` defaults to the exponents of the linear part when f is a
    toral map.
    """
    if isinstance(orbit, PeriodicOrbit):
        period = orbit.period
        seed = orbit.as_floats()[0]
        if translation is None:
            translation = orbit.translation(f.toral)
    else:
        seed, period = orbit
        seed = np.asarray(seed, dtype=float)
    if translation is None:
        translation = np.rint(f.iterate(np.atleast_2d(seed), period)[0] - seed)
    k = np.asarray(translation, dtype=float)
    x0 = refine_periodic_point(f, seed, period, k) if refine else seed
    closing = float(np.abs(_closing(f, np.atleast_2d(x0), period, k)).max())
    if closing > (1e-12 if refine else tol):
        if refine:
            raise NewtonDiverged(f"refined orbit closes only to {closing:.3e}")
        raise NonPeriodic(f"point does not close up: error {closing:.3e}")
    ex, points, log_det = _orbit_exponents(f, x0, period)
    if reference is None:
        reference = np.sort(np.log(np.abs(np.linalg.eigvals(f.matrix))))
    return ExponentReport(period, points, ex, tuple(int(v) for v in k), closing,
                          ex - np.sort(reference), log_det)


def transport_seed(point: np.ndarray, w, iterations: int = 200, tol: float = 1e-13) -> np.ndarray:
    """Solve x + w(x) = p by the fixed-point iteration x <- p - w(x)."""
    p = np.atleast_2d(np.asarray(point, dtype=float))
    x = p - w(p)
    for _ in range(iterations):
        nxt = p - w(x)
        if np.abs(nxt - x).max() < tol:
            return nxt[0]
        x = nxt
    return x[0]


def linear_orbits(a: ToralMatrix, max_period: int) -> list[PeriodicOrbit]:
    """All A-orbits of exact period <= max_period."""
    out = []
    for p in range(1, max_period + 1):
        out.extend(o for o in periodic_points(a, p) if o.period == p)
    return out


def orbit_exponent_survey(f: PerturbedMap, max_period: int, w=None) -> list[ExponentReport]:
    """Exponent reports for every periodic orbit of f up to ``max_period``.

    Seeds are the exact periodic points of the linear part, moved through
    the conjugacy (h = id + w) when w is supplied.
    """
    a = f.toral
    reports = []
    for orb in linear_orbits(a, max_period):
        seed = orb.as_floats()[0]
        if w is not None:
            seed = transport_seed(seed, w)
        reports.append(periodic_exponents(f, (seed, orb.period), refine=True,
                                          translation=orb.translation(a)))
    return reports


# ---------------------------------------------------------------------------
# bunching at periodic orbits


@dataclass(frozen=True)
class BunchingVerdict:
    passed: bool
    margin_first: float  # worst chi1+ - chi2-
    margin_second: float  # worst chi1+ + r chi2+ - chi2-
    threshold: float  # r*, the largest r with the second inequality strict on every orbit
    smoothness: float

    def to_json(self) -> dict:
        return {"passed": self.passed, "margin_first": self.margin_first,
                "margin_second": self.margin_second, "threshold": self.threshold,
                "smoothness": self.smoothness}


def bunching_at_periodic(reports: Sequence[ExponentReport] | Sequence[np.ndarray], first: Sequence[int],
                         second: Sequence[int], r: float, map_smoothness: float = math.inf) -> BunchingVerdict:
    """Both inequalities chi1+ - chi2- < 0 and chi1+ + r chi2+ - chi2- < 0 over the orbits.

    ``first``/``second`` index the sorted exponents belonging to E1/E2.
    The threshold is min over orbits of (chi2- - chi1+)/chi2+ (infinite
    when chi2+ <= 0); the implied foliation smoothness is min(k - 1, r).
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    m1 = m2 = -math.inf
    thr = math.inf
    for rep in reports:
        ex = rep.exponents if isinstance(rep, ExponentReport) else np.asarray(rep)
        c1p = max(ex[i] for i in first)
        c2p = max(ex[i] for i in second)
        c2m = min(ex[i] for i in second)
        m1 = max(m1, c1p - c2m)
        m2 = max(m2, c1p + r * c2p - c2m)
        if c2p > 0:
            thr = min(thr, (c2m - c1p) / c2p)
    return BunchingVerdict(m1 < 0 and m2 < 0, float(m1), float(m2), float(thr),
                           float(min(map_smoothness - 1, r)))


def compare_stable_dimensions(f: PerturbedMap, g: PerturbedMap, h: Callable[[np.ndarray], np.ndarray],
                              orbits: Sequence[ExponentReport], tol: float = 1e-6) -> list[tuple[int, int]]:
    """(dim E^s_f, dim E^s_g) per orbit; h must carry f-orbits onto g-orbits."""
    pairs = []
    for rep in orbits:
        pts = np.asarray(rep.points)
        images = h(pts)
        # one-step equivariance h(f(x_j)) = g(h(x_j)) along the orbit, so that
        # errors in h are not amplified over the period
        err = float(np.abs(torus_difference(h(f(pts) % 1.0), g(images))).max())
        if err > tol:
            raise OrbitMismatch(f"h does not carry a period-{rep.period} orbit of f to a g-orbit "
                                f"(defect {err:.3e})")
        y = images[0]
        k = np.rint(g.iterate(np.atleast_2d(y), rep.period)[0] - y)
        other = periodic_exponents(g, (y, rep.period), refine=True, translation=k)
        pairs.append((rep.stable_dimension, other.stable_dimension))
    bad = [i for i, (a, b) in enumerate(pairs) if a != b]
    if bad:
        raise OrbitMismatch(f"stable dimensions differ at orbits {bad}: {[pairs[i] for i in bad]}")
    return pairs
