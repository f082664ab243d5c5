"""Perturbations of linear toral maps: closed-form trigonometric
displacements, conjugated maps and per-point Newton inversion."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import NonInvertible, ParseError
from ..exact_linear_algebra import ToralMatrix, format_matrix_text, parse_matrix_text
from .grid import grid_points

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class TrigTerm:
    frequency: tuple[int, ...]
    coefficient: tuple[float, ...]
    phase: float = 0.0


@dataclass(frozen=True)
class TrigPolynomial:
    """p(x) = sum over terms of coefficient * sin(2 pi <frequency, x> + phase)."""

    terms: tuple[TrigTerm, ...]
    n: int

    def __post_init__(self):
        for t in self.terms:
            if len(t.frequency) != self.n or len(t.coefficient) != self.n:
                raise ValueError("term dimension does not match the torus dimension")

    @classmethod
    def zero(cls, n: int) -> "TrigPolynomial":
        return cls((), n)

    @classmethod
    def from_terms(cls, terms: Sequence, n: int | None = None) -> "TrigPolynomial":
        built = []
        for t in terms:
            if isinstance(t, TrigTerm):
                built.append(t)
            else:
                k, c, *rest = t
                built.append(TrigTerm(tuple(int(v) for v in k), tuple(float(v) for v in c),
                                      float(rest[0]) if rest else 0.0))
        if n is None:
            if not built:
                raise ValueError("cannot infer dimension of an empty polynomial")
            n = len(built[0].frequency)
        return cls(tuple(built), n)

    def scaled(self, eps: float) -> "TrigPolynomial":
        return TrigPolynomial(tuple(TrigTerm(t.frequency, tuple(eps * c for c in t.coefficient), t.phase)
                                    for t in self.terms), self.n)

    def _arrays(self):
        K = np.array([t.frequency for t in self.terms], dtype=float).reshape(-1, self.n)
        C = np.array([t.coefficient for t in self.terms], dtype=float).reshape(-1, self.n)
        P = np.array([t.phase for t in self.terms], dtype=float)
        return K, C, P

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if not self.terms:
            return np.zeros_like(x, dtype=float)
        K, C, P = self._arrays()
        return np.sin(TWO_PI * x @ K.T + P) @ C

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if not self.terms:
            return np.zeros((len(x), self.n, self.n))
        K, C, P = self._arrays()
        cos = np.cos(TWO_PI * x @ K.T + P)  # (M, T)
        return TWO_PI * np.einsum("mt,ti,tj->mij", cos, C, K)

    def sup_bound(self) -> float:
        return float(sum(np.abs(t.coefficient).max() for t in self.terms)) if self.terms else 0.0


def newton_solve(func, jac, target: np.ndarray, seed: np.ndarray, tol: float = 1e-13,
                 max_iter: int = 50) -> np.ndarray:
    """Solve func(x) = target row-wise by Newton's method; raises NonInvertible."""
    x = np.array(seed, dtype=float)
    for _ in range(max_iter):
        r = func(x) - target
        err = np.abs(r).max() if r.size else 0.0
        if err < tol:
            return x
        J = jac(x)
        try:
            x = x - np.linalg.solve(J, r[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise NonInvertible("singular Jacobian during Newton inversion") from None
        if not np.all(np.isfinite(x)):
            raise NonInvertible("Newton inversion diverged")
    r = func(x) - target
    if np.abs(r).max() > max(tol, 1e-10):
        raise NonInvertible(f"Newton inversion stalled at residual {np.abs(r).max():.3e}")
    return x


@dataclass(frozen=True)
class ConjugatedDisplacement:
    """u = f - A for f = phi o A o phi^{-1}, phi = id + p with p trigonometric."""

    matrix: np.ndarray
    phi: TrigPolynomial

    def phi_inverse(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(y)
        eye = np.eye(self.phi.n)
        return newton_solve(lambda x: x + self.phi(x), lambda x: eye + self.phi.jacobian(x),
                            y, y - self.phi(y))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        z = self.phi_inverse(x) @ self.matrix.T
        return z + self.phi(z) - x @ self.matrix.T

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        eye = np.eye(self.phi.n)
        y = self.phi_inverse(x)
        z = y @ self.matrix.T
        d_phi_inv = np.linalg.inv(eye + self.phi.jacobian(y))
        full = (eye + self.phi.jacobian(z)) @ self.matrix @ d_phi_inv
        return full - self.matrix


@dataclass
class PerturbedMap:
    """f(x) = A x + u(x) on the torus (lifted to R^n).

    ``linear_part`` is normally a ToralMatrix; any integer matrix is
    accepted so that non-invertible expanding maps can be certified too.
    ``displacement`` is any periodic object with ``__call__`` and
    ``jacobian`` on (M, n) arrays, or None for the linear map.
    """

    linear_part: object
    displacement: object = None
    note: str = ""
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if isinstance(self.linear_part, ToralMatrix):
            self.matrix = self.linear_part.to_numpy()
        else:
            self.matrix = np.atleast_2d(np.array(self.linear_part, dtype=float))
            if np.any(self.matrix != np.round(self.matrix)):
                raise ValueError("linear part must be an integer matrix")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def toral(self) -> ToralMatrix:
        if isinstance(self.linear_part, ToralMatrix):
            return self.linear_part
        return ToralMatrix(tuple(tuple(int(v) for v in r) for r in self.matrix))

    @classmethod
    def conjugate(cls, a: ToralMatrix, phi: TrigPolynomial, note: str = "") -> "PerturbedMap":
        """phi o A o phi^{-1}; its conjugacy to A is h = phi^{-1}."""
        return cls(a, ConjugatedDisplacement(a.to_numpy(), phi), note or "conjugated by id + trig")

    @property
    def is_linear(self) -> bool:
        return self.displacement is None

    def u(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.zeros_like(x, dtype=float) if self.displacement is None else self.displacement(x)

    def du(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.displacement is None:
            return np.zeros((len(x), self.n, self.n))
        return self.displacement.jacobian(x)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return x @ self.matrix.T + self.u(x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.matrix[None, :, :] + self.du(x)

    def iterate(self, x: np.ndarray, times: int) -> np.ndarray:
        for _ in range(times):
            x = self(x)
        return x

    def inverse(self, y: np.ndarray) -> np.ndarray:
        """Lift of f^{-1}: Newton seeded with A^{-1}y - A^{-1}u(A^{-1}y)."""
        y = np.atleast_2d(y)
        ainv = np.linalg.inv(self.matrix)
        x0 = y @ ainv.T
        if self.is_linear:
            return x0
        seed = x0 - self.u(x0) @ ainv.T
        return newton_solve(self, self.jacobian, y, seed)

    def check_diffeomorphism(self, resolution: int = 64) -> float:
        """min |det Df| over the grid; raises NonInvertible if the sign changes or it vanishes."""
        pts = grid_points(self.n, resolution)
        dets = np.linalg.det(self.jacobian(pts))
        if np.any(dets == 0) or (dets.min() < 0 < dets.max()):
            raise NonInvertible("Jacobian determinant vanishes or changes sign on the grid")
        return float(np.abs(dets).min())


# ---------------------------------------------------------------------------
# perturbation file format

def parse_perturbation_text(text: str, epsilon: float = 1.0) -> PerturbedMap:
    """Matrix text, optional 'mode conjugate|direct' line, then lines 'k... : c... [: phase]'."""
    lines = text.splitlines()
    body = [(i, ln.strip()) for i, ln in enumerate(lines, start=1)
            if ln.strip() and not ln.strip().startswith("#")]
    if not body:
        raise ParseError("empty perturbation file", 1)
    try:
        n = int(body[0][1])
    except ValueError:
        raise ParseError(f"expected dimension, got {body[0][1]!r}", body[0][0]) from None
    if len(body) < n + 1:
        raise ParseError("matrix truncated", body[-1][0])
    mat_lines = body[:n + 1]
    a = ToralMatrix(parse_matrix_text("\n".join(ln for _, ln in mat_lines), start_line=mat_lines[0][0]))
    rest = body[n + 1:]
    mode = "direct"
    if rest and rest[0][1].split()[0] == "mode":
        parts = rest[0][1].split()
        if len(parts) != 2 or parts[1] not in ("conjugate", "direct"):
            raise ParseError("mode must be 'conjugate' or 'direct'", rest[0][0])
        mode = parts[1]
        rest = rest[1:]
    terms = []
    for lineno, ln in rest:
        fields = [f.split() for f in ln.split(":")]
        if len(fields) not in (2, 3):
            raise ParseError("term must be 'k... : c... [: phase]'", lineno)
        try:
            k = tuple(int(v) for v in fields[0])
            c = tuple(float(v) for v in fields[1])
            phase = float(fields[2][0]) if len(fields) == 3 else 0.0
        except (ValueError, IndexError):
            raise ParseError(f"malformed term {ln!r}", lineno) from None
        if len(k) != n or len(c) != n:
            raise ParseError(f"term needs {n} frequencies and {n} coefficients", lineno)
        terms.append(TrigTerm(k, c, phase))
    poly = TrigPolynomial(tuple(terms), n).scaled(epsilon)
    if not terms:
        return PerturbedMap(a, None, "linear")
    if mode == "conjugate":
        return PerturbedMap.conjugate(a, poly)
    return PerturbedMap(a, poly, "direct trigonometric perturbation")


def format_perturbation_text(a: ToralMatrix, poly: TrigPolynomial, mode: str = "direct") -> str:
    out = format_matrix_text(a.entries) + f"mode {mode}\n"
    for t in poly.terms:
        out += (" ".join(map(str, t.frequency)) + " : " + " ".join(repr(c) for c in t.coefficient)
                + (f" : {t.phase!r}" if t.phase else "") + "\n")
    return out
