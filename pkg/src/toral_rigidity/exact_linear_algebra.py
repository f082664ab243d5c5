"""Exact integer matrix computations.

All arithmetic here is on Python integers and Fractions; nothing in this
module touches floating point.  Matrices are plain tuples of tuples; the
unimodular ones are wrapped in :class:`ToralMatrix`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .errors import DegenerateMatrix, NotUnimodular, ParseError
from .intpoly import IntPolynomial

Matrix = tuple[tuple[int, ...], ...]

MAX_EXPONENT = 64


def as_matrix(m) -> Matrix:
    """Normalize a nested sequence (or integer ndarray) into a square integer matrix."""
    if isinstance(m, ToralMatrix):
        return m.entries
    rows = tuple(tuple(int(v) for v in row) for row in m)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    for row, orig in zip(rows, m):
        for v, o in zip(row, orig):
            if v != o:
                raise ValueError(f"non-integer entry {o!r}")
    return rows


def identity(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(a, b))


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(a, b))


def mat_scale(c: int, a: Matrix) -> Matrix:
    return tuple(tuple(c * x for x in r) for r in a)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def mat_pow(a: Matrix, e: int) -> Matrix:
    if e < 0:
        return mat_pow(inverse_unimodular(a), -e)
    result = identity(len(a))
    base = a
    while e:
        if e & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        e >>= 1
    return result


def determinant(m) -> int:
    """Exact determinant by Bareiss fraction-free elimination."""
    a = [list(r) for r in as_matrix(m)]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def char_poly(m) -> IntPolynomial:
    """det(xI - m) by the Faddeev-LeVerrier recursion (all divisions exact)."""
    a = as_matrix(m)
    n = len(a)
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    mk = tuple(tuple(0 for _ in range(n)) for _ in range(n))
    eye = identity(n)
    for k in range(1, n + 1):
        mk = mat_add(matmul(a, mk), mat_scale(coeffs[n - k + 1], eye))
        tr = sum(matmul(a, mk)[i][i] for i in range(n))
        if tr % k:
            raise ArithmeticError("non-integral Faddeev-LeVerrier step")
        coeffs[n - k] = -tr // k
    return IntPolynomial(tuple(coeffs))


def evaluate_at_matrix(p: IntPolynomial, m) -> Matrix:
    """p(m) by Horner's rule with exact matrices."""
    a = as_matrix(m)
    n = len(a)
    acc = tuple(tuple(0 for _ in range(n)) for _ in range(n))
    eye = identity(n)
    for c in reversed(p.coefficients):
        acc = mat_add(matmul(acc, a), mat_scale(c, eye))
    return acc


def inverse_unimodular(m) -> Matrix:
    """Exact integer inverse of a matrix with determinant +-1."""
    a = as_matrix(m)
    n = len(a)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise NotUnimodular("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    inv = [row[n:] for row in aug]
    if any(x.denominator != 1 for row in inv for x in row):
        raise NotUnimodular("inverse is not integral; determinant is not +-1")
    return tuple(tuple(int(x) for x in row) for row in inv)


def companion_matrix(p: IntPolynomial) -> Matrix:
    """Companion matrix whose characteristic polynomial is the monic p."""
    if not p.is_monic():
        raise ValueError("companion matrix needs a monic polynomial")
    n = p.degree
    rows = [[0] * n for _ in range(n)]
    for i in range(1, n):
        rows[i][i - 1] = 1
    for i in range(n):
        rows[i][n - 1] = -p.coefficients[i]
    return tuple(tuple(r) for r in rows)


def block_diagonal(*blocks: Matrix) -> Matrix:
    n = sum(len(b) for b in blocks)
    rows = [[0] * n for _ in range(n)]
    off = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, v in enumerate(row):
                rows[off + i][off + j] = v
        off += len(b)
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class ToralMatrix:
    """An element of GL(N, Z): integer entries, determinant +-1."""

    entries: Matrix

    def __post_init__(self):
        entries = as_matrix(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("empty matrix")
        d = determinant(entries)
        if d not in (1, -1):
            raise NotUnimodular(f"determinant {d} is not +-1")

    @classmethod
    def identity(cls, n: int) -> "ToralMatrix":
        return cls(identity(n))

    @classmethod
    def companion(cls, p: IntPolynomial) -> "ToralMatrix":
        return cls(companion_matrix(p))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def det(self) -> int:
        return determinant(self.entries)

    def char_poly(self) -> IntPolynomial:
        return char_poly(self.entries)

    def inverse(self) -> "ToralMatrix":
        return ToralMatrix(inverse_unimodular(self.entries))

    def __matmul__(self, other: "ToralMatrix") -> "ToralMatrix":
        return ToralMatrix(matmul(self.entries, other.entries))

    def __pow__(self, e: int) -> "ToralMatrix":
        return ToralMatrix(mat_pow(self.entries, e))

    def __neg__(self) -> "ToralMatrix":
        return ToralMatrix(mat_scale(-1, self.entries))

    def commutes_with(self, other: "ToralMatrix") -> bool:
        return matmul(self.entries, other.entries) == matmul(other.entries, self.entries)

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def __str__(self) -> str:
        return format_matrix_text(self.entries).strip()


# ---------------------------------------------------------------------------
# Smith normal form

@dataclass(frozen=True)
class SmithDecomposition:
    U: Matrix
    V: Matrix
    D: Matrix

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.D[i][i] for i in range(len(self.D)))

    def verify(self, a) -> bool:
        """U·A·V = D, divisibility chain, U and V unimodular."""
        a = as_matrix(a)
        if matmul(matmul(self.U, a), self.V) != self.D:
            return False
        n = len(self.D)
        if any(self.D[i][j] != 0 for i in range(n) for j in range(n) if i != j):
            return False
        diag = self.diagonal
        for x, y in zip(diag, diag[1:]):
            if x == 0 and y != 0:
                return False
            if x != 0 and y % x:
                return False
        return abs(determinant(self.U)) == 1 and abs(determinant(self.V)) == 1


def smith_normal_form(m) -> SmithDecomposition:
    a = [list(r) for r in as_matrix(m)]
    n = len(a)
    U = [list(r) for r in identity(n)]
    V = [list(r) for r in identity(n)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, c):
        a[dst] = [x + c * y for x, y in zip(a[dst], a[src])]
        U[dst] = [x + c * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, c):
        for row in a:
            row[dst] += c * row[src]
        for row in V:
            row[dst] += c * row[src]

    for t in range(n):
        while True:
            nonzero = [(abs(a[i][j]), i, j) for i in range(t, n) for j in range(t, n) if a[i][j]]
            if not nonzero:
                break
            _, i, j = min(nonzero)
            swap_rows(t, i)
            swap_cols(t, j)
            p = a[t][t]
            clean = True
            for i in range(t + 1, n):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
                    clean = clean and a[i][t] == 0
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
                    clean = clean and a[t][j] == 0
            if not clean:
                continue
            bad = next((i for i in range(t + 1, n) for j in range(t + 1, n) if a[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            U[t] = [-x for x in U[t]]
    freeze = lambda x: tuple(tuple(r) for r in x)
    return SmithDecomposition(freeze(U), freeze(V), freeze(a))


# ---------------------------------------------------------------------------
# periodic points

Point = tuple[Fraction, ...]


@dataclass(frozen=True)
class PeriodicOrbit:
    """Exact orbit of a toral automorphism through rational points."""

    period: int
    points: tuple[Point, ...]
    stabilizer_index: int

    def translation(self, a: ToralMatrix, index: int = 0) -> tuple[int, ...]:
        """Integer vector k with A^period p = p + k for the lift p in [0,1)^N."""
        p = self.points[index]
        image = _apply(mat_pow(a.entries, self.period), p)
        k = tuple(x - y for x, y in zip(image, p))
        assert all(v.denominator == 1 for v in k)
        return tuple(int(v) for v in k)

    def as_floats(self) -> np.ndarray:
        return np.array([[float(c) for c in p] for p in self.points])


def _apply(m: Matrix, p: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(sum((c * x for c, x in zip(row, p)), Fraction(0)) for row in m)


def periodic_points(a: ToralMatrix, n: int) -> list[PeriodicOrbit]:
    """All points with A^n p = p on the torus, grouped into A-orbits.

    The points are the torsion group (A^n - I)^{-1} Z^N / Z^N, enumerated
    through the Smith normal form of A^n - I.
    """
    if n < 1:
        raise ValueError("period must be positive")
    a = a if isinstance(a, ToralMatrix) else ToralMatrix(a)
    m = mat_sub(mat_pow(a.entries, n), identity(a.n))
    if determinant(m) == 0:
        raise DegenerateMatrix(f"det(A^{n} - I) = 0; A has a root of unity eigenvalue")
    snf = smith_normal_form(m)
    diag = snf.diagonal
    # every point lies in (1/L) Z^N with L the largest invariant factor; work with numerators mod L
    L = diag[-1]
    scale = [L // d for d in diag]
    V, A = snf.V, a.entries
    nums = set()
    for ks in product(*(range(d) for d in diag)):
        y = [k * s for k, s in zip(ks, scale)]
        nums.add(tuple(sum(c * x for c, x in zip(row, y)) % L for row in V))
    seen = set()
    orbits = []
    for v in sorted(nums):
        if v in seen:
            continue
        orbit = [v]
        q = tuple(sum(c * x for c, x in zip(row, v)) % L for row in A)
        while q != v:
            orbit.append(q)
            q = tuple(sum(c * x for c, x in zip(row, q)) % L for row in A)
        seen.update(orbit)
        pts = tuple(tuple(Fraction(x, L) for x in u) for u in orbit)
        orbits.append(PeriodicOrbit(period=len(orbit), points=pts, stabilizer_index=len(orbit)))
    return orbits


def count_periodic_points(a: ToralMatrix, n: int) -> int:
    return abs(determinant(mat_sub(mat_pow(a.entries, n), identity(a.n))))


def matrix_power(generators, exponents: Sequence[int], max_exponent: int = MAX_EXPONENT) -> ToralMatrix:
    """Exact product  prod_j M_j^{n_j}  over a commuting generator list."""
    gens = list(getattr(generators, "generators", generators))
    if len(gens) != len(exponents):
        raise ValueError("exponent vector length does not match the number of generators")
    if any(abs(int(e)) > max_exponent for e in exponents):
        raise ValueError(f"exponent vector {tuple(exponents)} exceeds the bound {max_exponent}")
    n = gens[0].n
    result = identity(n)
    for g, e in zip(gens, exponents):
        if e:
            result = matmul(result, mat_pow(g.entries, int(e)))
    return ToralMatrix(result)


# ---------------------------------------------------------------------------
# text formats

def parse_matrix_text(text: str, start_line: int = 1) -> Matrix:
    """Parse "N" followed by N rows of N integers."""
    lines = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=start_line)]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty matrix text", start_line)
    lineno, header = lines[0]
    try:
        n = int(header)
    except ValueError:
        raise ParseError(f"expected dimension, got {header!r}", lineno) from None
    if n < 1:
        raise ParseError("dimension must be positive", lineno)
    if len(lines) < n + 1:
        raise ParseError(f"expected {n} rows, found {len(lines) - 1}", lines[-1][0])
    rows = []
    for lineno, ln in lines[1:n + 1]:
        try:
            row = [int(tok) for tok in ln.split()]
        except ValueError:
            raise ParseError(f"non-integer entry in {ln!r}", lineno) from None
        if len(row) != n:
            raise ParseError(f"expected {n} entries, got {len(row)}", lineno)
        rows.append(tuple(row))
    if len(lines) > n + 1:
        raise ParseError("trailing content after matrix", lines[n + 1][0])
    return tuple(rows)


def format_matrix_text(m) -> str:
    rows = as_matrix(m)
    return f"{len(rows)}\n" + "\n".join(" ".join(str(v) for v in r) for r in rows) + "\n"
