"""Lyapunov functionals of a commuting generator set, coarse classes,
Weyl chambers and lattice points in open cones."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import mpmath as mp
import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateSpectrum, EmptyCone, NoLatticePoint
from .spectral import DEFAULT_PRECISION, joint_eigendecomposition

DEFAULT_MARGIN = 1e-3
MAX_CHAMBER_RANK = 4


@dataclass(frozen=True)
class LyapunovFunctional:
    """chi(n) = sum_j n_j * values[j], the exponent on one real or complex eigenspace."""

    values: tuple  # mpf, one per generator
    eigen_type: str  # "Real" or "ComplexPair"
    eigenspace: tuple  # real basis vectors (tuples of mpf)
    eigenvalues: tuple  # per-generator eigenvalue (mpc)
    precision_bits: int = DEFAULT_PRECISION

    @property
    def dim(self) -> int:
        return 1 if self.eigen_type == "Real" else 2

    @property
    def k(self) -> int:
        return len(self.values)

    def __call__(self, m: Sequence[int]):
        with mp.workprec(self.precision_bits):
            return mp.fsum(int(x) * v for x, v in zip(m, self.values))

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def eigenspace_array(self) -> np.ndarray:
        return np.array([[float(c) for c in vec] for vec in self.eigenspace])

    def is_zero(self, tol=None) -> bool:
        tol = mp.mpf(2) ** (-self.precision_bits // 2) if tol is None else tol
        return max(abs(v) for v in self.values) <= tol


def exponent_functionals(gs, precision_bits: int = DEFAULT_PRECISION) -> list[LyapunovFunctional]:
    """One functional per real eigenvalue and per complex pair, sorted by value vector."""
    mats = [g.entries for g in gs.generators]
    pairs = joint_eigendecomposition(mats, precision_bits)
    out = []
    with mp.workprec(precision_bits):
        for p in pairs:
            values = tuple(mp.log(abs(lam)) for lam in p.eigenvalues)
            basis = tuple(tuple(v) for v in p.real_basis())
            out.append(LyapunovFunctional(values, "Real" if p.is_real else "ComplexPair",
                                          basis, p.eigenvalues, precision_bits))
    out.sort(key=lambda f: tuple(f.values))
    return out


def functional_from_values(values: Sequence[float], precision_bits: int = DEFAULT_PRECISION,
                           eigen_type: str = "Real") -> LyapunovFunctional:
    """A bare functional with no eigen data, for building cones by hand."""
    with mp.workprec(precision_bits):
        vals = tuple(mp.mpf(v) for v in values)
    return LyapunovFunctional(vals, eigen_type, (), (), precision_bits)


@dataclass(frozen=True)
class CoarseSplitting:
    """Partition of functionals into classes of positively proportional members.

    ``ratios[c][t]`` is the scalar with functional groups[c][t] equal to
    ratio times the class leader groups[c][0].  Zero functionals (possible
    only for non-hyperbolic elements) form their own classes and are listed
    in ``zero_classes``; they never bound a chamber.
    """

    functionals: tuple[LyapunovFunctional, ...]
    groups: tuple[tuple[int, ...], ...]
    ratios: tuple[tuple, ...]
    zero_classes: tuple[int, ...] = ()

    @property
    def k(self) -> int:
        return self.functionals[0].k

    def leader(self, c: int) -> LyapunovFunctional:
        return self.functionals[self.groups[c][0]]

    def dim(self, c: int) -> int:
        return sum(self.functionals[i].dim for i in self.groups[c])

    def basis(self, c: int) -> list[tuple]:
        return [v for i in self.groups[c] for v in self.functionals[i].eigenspace]

    def active_classes(self) -> list[int]:
        return [c for c in range(len(self.groups)) if c not in self.zero_classes]

    def class_matrix(self) -> np.ndarray:
        """Leader value vectors of the active classes, one row each."""
        return np.array([self.leader(c).as_array() for c in self.active_classes()])


def _unit(vals):
    norm = mp.sqrt(mp.fsum(v * v for v in vals))
    return [v / norm for v in vals], norm


def coarse_spaces(fs: Sequence[LyapunovFunctional], tol=None) -> CoarseSplitting:
    """Group functionals that are positive multiples of each other.

    Directions closer than ``tol`` (default 2^-(precision/2)) merge;
    directions farther than sqrt(tol) stay apart; anything in between
    raises DegenerateSpectrum rather than guessing.
    """
    fs = tuple(fs)
    if not fs:
        raise ValueError("no functionals")
    prec = min(f.precision_bits for f in fs)
    with mp.workprec(prec):
        tol = mp.mpf(2) ** (-prec // 2) if tol is None else mp.mpf(tol)
        loose = mp.sqrt(tol)
        groups: list[list[int]] = []
        ratios: list[list] = []
        zero: list[int] = []
        dirs = []
        for i, f in enumerate(fs):
            if f.is_zero(tol):
                zero.append(len(groups))
                groups.append([i])
                ratios.append([mp.mpf(1)])
                dirs.append(None)
                continue
            u, norm = _unit(f.values)
            placed = False
            for c in range(len(groups)):
                if dirs[c] is None:
                    continue
                d, lead_norm = dirs[c]
                dist = mp.sqrt(mp.fsum((a - b) ** 2 for a, b in zip(u, d)))
                if dist <= tol:
                    groups[c].append(i)
                    ratios[c].append(norm / lead_norm)
                    placed = True
                    break
                if dist <= loose:
                    raise DegenerateSpectrum(
                        f"functionals {groups[c][0]} and {i} are nearly but not clearly proportional "
                        f"(direction gap {mp.nstr(dist, 5)})")
            if not placed:
                groups.append([i])
                ratios.append([mp.mpf(1)])
                dirs.append((u, norm))
    return CoarseSplitting(fs, tuple(tuple(g) for g in groups), tuple(tuple(r) for r in ratios),
                           tuple(zero))


# ---------------------------------------------------------------------------
# cones and lattice points

def _cone_depth(rows: np.ndarray, signs: np.ndarray, equalities: np.ndarray | None = None):
    """max t subject to sign_i <row_i, x> >= t, |x_j| <= 1, t <= 1 (and <eq, x> = 0)."""
    k = rows.shape[1] if rows.size else (equalities.shape[1] if equalities is not None else 1)
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-(signs[:, None] * rows), np.ones((len(rows), 1))]) if len(rows) else None
    b_ub = np.zeros(len(rows)) if len(rows) else None
    A_eq = b_eq = None
    if equalities is not None and len(equalities):
        A_eq = np.hstack([equalities, np.zeros((len(equalities), 1))])
        b_eq = np.zeros(len(equalities))
    bounds = [(-1.0, 1.0)] * k + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return 0.0, None
    return float(res.x[-1]), res.x[:-1]


def _as_values(f) -> np.ndarray:
    if isinstance(f, LyapunovFunctional):
        return f.as_array()
    return np.array([float(v) for v in f])


def _exact_values(f, prec):
    if isinstance(f, LyapunovFunctional):
        return f.values
    with mp.workprec(prec):
        return tuple(mp.mpf(v) for v in f)


def _verify_point(m, inequalities, margin, prec) -> bool:
    with mp.workprec(prec):
        for f, s in inequalities:
            val = mp.fsum(int(x) * v for x, v in zip(m, _exact_values(f, prec)))
            if s * val < margin:
                return False
    return True


def _box_points(k: int, radius: int) -> np.ndarray:
    pts = np.array(list(product(range(-radius, radius + 1), repeat=k)), dtype=np.int64)
    pts = pts[np.any(pts != 0, axis=1)]
    l1 = np.abs(pts).sum(axis=1)
    linf = np.abs(pts).max(axis=1)
    keys = [pts[:, j] for j in reversed(range(k))] + [linf, l1]
    return pts[np.lexsort(keys)]


_BOX_CACHE: dict = {}


def find_lattice_point(inequalities, margin: float = DEFAULT_MARGIN, box_radius: int | None = None,
                       max_scale: int = 10 ** 6, precision_bits: int = DEFAULT_PRECISION) -> tuple[int, ...]:
    """Smallest integer m (by L1, then L-infinity, then lexicographic order)
    with sign * chi(m) >= margin for every (chi, sign); falls back to
    scaling the LP interior direction.  Every answer is re-verified at
    ``precision_bits``.
    """
    inequalities = [(f, 1 if s > 0 else -1) for f, s in inequalities]
    if not inequalities:
        raise ValueError("no inequalities")
    rows = np.array([_as_values(f) for f, _ in inequalities])
    signs = np.array([s for _, s in inequalities], dtype=float)
    k = rows.shape[1]
    depth, x = _cone_depth(rows, signs)
    if depth <= 1e-12 * max(1.0, np.abs(rows).max()):
        raise EmptyCone("the open cone defined by the inequalities is empty")
    if box_radius is None:
        box_radius = {1: 50, 2: 25, 3: 10}.get(k, 5)
    key = (k, box_radius)
    if key not in _BOX_CACHE:
        _BOX_CACHE[key] = _box_points(k, box_radius)
    pts = _BOX_CACHE[key]
    vals = (pts @ rows.T) * signs
    ok = np.all(vals >= margin * (1 + 1e-9), axis=1)
    for idx in np.flatnonzero(ok)[:8]:
        m = tuple(int(v) for v in pts[idx])
        if _verify_point(m, inequalities, margin, precision_bits):
            return m
    direction = x / np.abs(x).max()
    scale = 1.0
    while scale <= max_scale:
        m = tuple(int(v) for v in np.rint(direction * scale))
        if any(m) and _verify_point(m, inequalities, margin, precision_bits):
            return m
        scale *= 1.5
    raise NoLatticePoint(f"no lattice point with margin {margin} up to scale {max_scale}")


@dataclass(frozen=True)
class WeylChamber:
    signs: tuple[int, ...]  # +1 / -1 per active coarse class, in active-class order
    representative: tuple[int, ...]
    walls: tuple[int, ...]  # functional indices whose kernels bound the chamber
    classes: tuple[int, ...]  # the active coarse classes the signs refer to

    def sign_of(self, c: int) -> int:
        return self.signs[self.classes.index(c)]

    def sign_string(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)


def weyl_chambers(cs: CoarseSplitting, margin: float = DEFAULT_MARGIN) -> list[WeylChamber]:
    """All open chambers of the kernel arrangement, by LP feasibility of sign vectors."""
    k = cs.k
    if k > MAX_CHAMBER_RANK:
        raise ValueError(f"chamber enumeration supports k <= {MAX_CHAMBER_RANK}, got {k}")
    active = cs.active_classes()
    if not active:
        return []
    rows = cs.class_matrix()
    prec = min(f.precision_bits for f in cs.functionals)
    unit_rows = rows / np.linalg.norm(rows, axis=1)[:, None]
    # classes whose kernels coincide (negatively proportional leaders)
    same_kernel = np.abs(np.abs(unit_rows @ unit_rows.T) - 1) < 1e-9
    chambers = []
    for signs in product((1, -1), repeat=len(active)):
        s = np.array(signs, dtype=float)
        depth, _ = _cone_depth(rows, s)
        if depth <= 1e-9:
            continue
        ineqs = [(cs.leader(c), sg) for c, sg in zip(active, signs)]
        rep = find_lattice_point(ineqs, margin, precision_bits=prec)
        walls = []
        for i, c in enumerate(active):
            keep = ~same_kernel[i]
            d, _ = _cone_depth(rows[keep], s[keep], rows[i:i + 1])
            if d > 1e-9:
                walls.extend(cs.groups[c])
        chambers.append(WeylChamber(tuple(signs), rep, tuple(sorted(walls)), tuple(active)))
    return chambers


def stable_unstable(c: WeylChamber, cs: CoarseSplitting) -> tuple[list[int], list[int]]:
    """Coarse classes negative on the chamber, and those positive on it."""
    stable = [cl for cl, s in zip(c.classes, c.signs) if s < 0]
    unstable = [cl for cl, s in zip(c.classes, c.signs) if s > 0]
    return stable, unstable


def chamber_of(m: Sequence[int], cs: CoarseSplitting, margin: float = 0.0) -> tuple[int, ...] | None:
    """Sign vector of m over the active classes, or None when m is within margin of a wall."""
    vals = cs.class_matrix() @ np.asarray(m, dtype=float)
    if np.any(np.abs(vals) <= margin):
        return None
    return tuple(int(np.sign(v)) for v in vals)


def chambers_to_csv(chambers: Sequence[WeylChamber]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chamber", "signs", "representative", "walls"])
    for i, c in enumerate(chambers):
        w.writerow([i, c.sign_string(), " ".join(map(str, c.representative)),
                    " ".join(map(str, c.walls))])
    return buf.getvalue()
