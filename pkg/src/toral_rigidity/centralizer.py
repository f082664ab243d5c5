"""Commutative structure around a matrix with irreducible characteristic
polynomial: rational centralizer, Dirichlet rank, unit search and
multiplicative independence, plus the symplectic variant."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import mpmath as mp
import numpy as np

from .errors import (HypothesisViolation, NotIrreducible, OddDimension, ParseError,
                     PrecisionExhausted, RankNotReached)
from .exact_linear_algebra import (Matrix, ToralMatrix, as_matrix, block_diagonal, determinant,
                                   format_matrix_text, identity, inverse_unimodular, mat_add, mat_pow, mat_scale,
                                   matmul, matrix_power, parse_matrix_text, transpose)
from .intpoly import IntPolynomial, count_real_roots, is_irreducible_over_Z, root_signature
from .spectral import joint_eigendecomposition

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorSet:
    """k pairwise-commuting toral automorphisms: the image of Z^k -> GL(N, Z).

    Commutation and unimodularity are checked on construction.
    Multiplicative independence is certified separately through
    :func:`multiplicative_independence`, because dependent sets are legal
    inputs to several diagnostics.
    """

    generators: tuple[ToralMatrix, ...]
    provenance: str = ""

    def __post_init__(self):
        gens = tuple(g if isinstance(g, ToralMatrix) else ToralMatrix(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValueError("a generator set needs at least one matrix")
        n = gens[0].n
        if any(g.n != n for g in gens):
            raise ValueError("generators have different dimensions")
        for i, g in enumerate(gens):
            for h in gens[i + 1:]:
                if not g.commutes_with(h):
                    raise ValueError("generators do not commute")

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def k(self) -> int:
        return len(self.generators)

    def power(self, exponents: Sequence[int]) -> ToralMatrix:
        return matrix_power(self, exponents)

    def to_text(self) -> str:
        return f"{self.n} {self.k}\n" + "".join(format_matrix_text(g.entries) for g in self.generators)

    @classmethod
    def from_text(cls, text: str, provenance: str = "") -> "GeneratorSet":
        lines = text.splitlines()
        body = [(i, ln.strip()) for i, ln in enumerate(lines, start=1)
                if ln.strip() and not ln.strip().startswith("#")]
        if not body:
            raise ParseError("empty generator-set text", 1)
        lineno, header = body[0]
        parts = header.split()
        if len(parts) == 1:
            # a bare matrix is accepted as a rank-one set
            return cls((ToralMatrix(parse_matrix_text(text)),), provenance or "single matrix")
        try:
            n, k = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"expected header 'n k', got {header!r}", lineno) from None
        mats = []
        pos = 1
        for _ in range(k):
            if pos + n >= len(body) + 1:
                raise ParseError("generator set truncated", body[-1][0])
            chunk = body[pos:pos + n + 1]
            text_chunk = "\n".join(ln for _, ln in chunk)
            m = parse_matrix_text(text_chunk, start_line=chunk[0][0])
            if len(m) != n:
                raise ParseError(f"matrix of size {len(m)} in a set of dimension {n}", chunk[0][0])
            mats.append(ToralMatrix(m))
            pos += n + 1
        if pos != len(body):
            raise ParseError("trailing content after generator set", body[pos][0])
        return cls(tuple(mats), provenance)

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "provenance": self.provenance,
                "generators": [[list(r) for r in g.entries] for g in self.generators]}

    @classmethod
    def from_json(cls, data) -> "GeneratorSet":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(ToralMatrix(as_matrix(m)) for m in data["generators"]),
                   data.get("provenance", ""))


@dataclass(frozen=True)
class UnitSearchConfig:
    coefficient_bound: int = 3
    max_candidates: int = 10_000
    precision_bits: int = 128

    def __post_init__(self):
        if self.coefficient_bound < 1:
            raise ValueError("coefficient_bound must be >= 1")
        if self.max_candidates < 1 or self.precision_bits < 1:
            raise ValueError("max_candidates and precision_bits must be positive")


def _irreducible_poly(a: ToralMatrix) -> IntPolynomial:
    p = a.char_poly()
    verdict = is_irreducible_over_Z(p)
    if not verdict.irreducible:
        raise NotIrreducible(f"characteristic polynomial {p} has factor {verdict.factor}")
    return p


def centralizer_basis(a: ToralMatrix) -> list[Matrix]:
    """I, A, ..., A^{N-1}: a Q-basis of the rational centralizer of A."""
    _irreducible_poly(a)
    return [mat_pow(a.entries, i) for i in range(a.n)]


def dirichlet_rank(a: ToralMatrix) -> int:
    """r + c - 1 from a Sturm count of the real roots of char_poly(A)."""
    p = _irreducible_poly(a)
    r, c = root_signature(p)
    return r + c - 1


def _poly_matrix(coeffs: Sequence[int], powers: list[Matrix]) -> Matrix:
    n = len(powers[0])
    acc = tuple(tuple(0 for _ in range(n)) for _ in range(n))
    for c, P in zip(coeffs, powers):
        if c:
            acc = mat_add(acc, mat_scale(c, P))
    return acc


def _embeddings(a: ToralMatrix) -> np.ndarray:
    """One root per real place and per complex place of Q(A)."""
    roots = np.linalg.eigvals(a.to_numpy())
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-9 * scale)
    cplx = sorted((r for r in roots if r.imag > 1e-9 * scale), key=lambda z: (z.real, z.imag))
    return np.array([complex(r) for r in real] + list(cplx))


def find_units(a: ToralMatrix, cfg: UnitSearchConfig = UnitSearchConfig(), *,
               predicate: Callable[[ToralMatrix], bool] | None = None,
               target_rank: int | None = None, strict: bool = False) -> GeneratorSet:
    """Box search over polynomials p(A) with |coefficients| <= bound for units,
    reduced to a multiplicatively independent set that always starts with A.

    With ``strict`` a shortfall against the target rank raises
    RankNotReached; otherwise the partial set is returned and logged.
    """
    p = _irreducible_poly(a)
    n = a.n
    rank = dirichlet_rank(a) if target_rank is None else target_rank
    if rank <= 0:
        raise RankNotReached("unit group has rank 0; no infinite-order units exist", None, 0, rank)
    powers = [mat_pow(a.entries, i) for i in range(n)]
    roots = np.linalg.eigvals(a.to_numpy())
    places = _embeddings(a)
    B = cfg.coefficient_bound
    coeffs = np.array(list(product(range(-B, B + 1), repeat=n)), dtype=float)
    vander_all = np.vander(roots, n, increasing=True).T  # (n powers, n roots)
    norms = np.prod(coeffs @ vander_all, axis=1).real
    mask = np.abs(np.abs(norms) - 1.0) < 1e-6 * np.maximum(1.0, np.abs(norms))
    vander_places = np.vander(places, n, increasing=True).T

    candidates = []
    for c in coeffs[mask]:
        ci = tuple(int(round(x)) for x in c)
        m = _poly_matrix(ci, powers)
        if determinant(m) not in (1, -1):
            continue
        tm = ToralMatrix(m)
        if predicate is not None and not predicate(tm):
            continue
        logv = np.log(np.abs(np.array(ci, dtype=float) @ vander_places))
        if np.linalg.norm(logv) < 1e-9:
            continue  # torsion
        candidates.append((float(np.linalg.norm(logv)), tuple(abs(x) for x in ci), ci, tm, logv))
        if len(candidates) >= cfg.max_candidates:
            break
    candidates.sort(key=lambda t: (t[0], t[1], t[2]))

    chosen: list[ToralMatrix] = []
    logs: list[np.ndarray] = []
    a_log = np.log(np.abs(places))
    if np.linalg.norm(a_log) > 1e-9 and (predicate is None or predicate(a)):
        chosen.append(a)
        logs.append(a_log)
    for _, _, ci, tm, logv in candidates:
        if len(chosen) >= rank:
            break
        trial = np.array(logs + [logv])
        if np.linalg.matrix_rank(trial, tol=1e-8 * max(1.0, np.abs(trial).max())) == len(trial):
            chosen.append(tm)
            logs.append(logv)

    if not chosen:
        raise RankNotReached("no unit of infinite order inside the coefficient box", None, 0, rank)
    gs = GeneratorSet(tuple(chosen), provenance=f"unit search for char poly {p}, "
                      f"coefficient bound {B}: rank {len(chosen)} of {rank}")
    verdict = multiplicative_independence(gs, cfg.precision_bits)
    if not verdict.independent:
        raise PrecisionExhausted(f"selected units are dependent: relation {verdict.relation}")
    if len(chosen) < rank:
        msg = f"located {len(chosen)} independent units, Dirichlet rank is {rank}"
        if strict:
            raise RankNotReached(msg, gs, len(chosen), rank)
        log.warning(msg)
    return gs


@dataclass(frozen=True)
class IndependenceVerdict:
    independent: bool
    relation: tuple[int, ...] | None = None
    smallest_singular_value: float = 0.0
    precision_bits: int = 128
    log_matrix: list = field(default_factory=list, repr=False)

    def __bool__(self):
        return self.independent


def log_embedding_matrix(gs: GeneratorSet, precision_bits: int = 128):
    """L[i][j] = log|lambda_i(M_j)| over joint eigen-entries i and generators j."""
    pairs = joint_eigendecomposition([g.entries for g in gs.generators], precision_bits)
    with mp.workprec(precision_bits):
        return mp.matrix([[mp.log(abs(lam)) for lam in p.eigenvalues] for p in pairs])


def _finite_order(m: ToralMatrix, max_order: int = 120) -> int | None:
    eye = identity(m.n)
    acc = m.entries
    for q in range(1, max_order + 1):
        if acc == eye:
            return q
        acc = matmul(acc, m.entries)
    return None


def _normalize_relation(v) -> tuple[int, ...]:
    v = tuple(int(x) for x in v)
    first = next(x for x in v if x)
    return tuple(-x for x in v) if first < 0 else v


def multiplicative_independence(gs: GeneratorSet, precision_bits: int = 128,
                                height: int = 10 ** 6) -> IndependenceVerdict:
    """Independent iff the log-embedding matrix has full column rank.

    A numerically rank-deficient matrix must produce an integer relation
    (found by PSLQ) whose product is verified exactly to have finite order;
    otherwise PrecisionExhausted is raised.
    """
    L = log_embedding_matrix(gs, precision_bits)
    with mp.workprec(precision_bits):
        k = gs.k
        sv = mp.svd_r(L, compute_uv=False)
        smin = min(sv[i] for i in range(min(L.rows, k))) if L.rows >= k else mp.mpf(0)
        scale = max(1, mp.mnorm(L, 1))
        zero_tol = mp.mpf(2) ** (-precision_bits // 2) * scale
        clear_tol = mp.mpf(2) ** (-precision_bits // 4) * scale
        if smin > clear_tol:
            return IndependenceVerdict(True, None, float(smin), precision_bits)
        if smin > zero_tol:
            raise PrecisionExhausted(
                f"smallest singular value {mp.nstr(smin, 5)} is neither clearly zero nor clearly "
                f"nonzero at {precision_bits} bits")
        weights = [mp.sqrt(mp.mpf(q)) for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)]
        combo = [mp.fsum(weights[i % len(weights)] * L[i, j] for i in range(L.rows))
                 for j in range(k)]
        torsion = [j for j in range(k) if max(abs(L[i, j]) for i in range(L.rows)) <= zero_tol]
        if torsion:
            rel = [int(j == torsion[0]) for j in range(k)]
        elif k == 1:
            rel = [1]
        else:
            rel = mp.pslq(combo, maxcoeff=height, maxsteps=10 ** 5)
        if rel is None:
            raise PrecisionExhausted("log matrix is singular but no integer relation was found")
        rel = _normalize_relation(rel)
        residual = max(abs(mp.fsum(L[i, j] * rel[j] for j in range(k))) for i in range(L.rows))
        if residual > zero_tol * max(abs(x) for x in rel):
            raise PrecisionExhausted(f"candidate relation {rel} does not annihilate the log matrix")
        try:
            m = matrix_power(gs, rel)
        except ValueError as exc:
            raise PrecisionExhausted(str(exc)) from None
        if _finite_order(m) is None:
            raise PrecisionExhausted(f"relation {rel} does not give a finite-order element")
        return IndependenceVerdict(False, rel, float(smin), precision_bits)


# ---------------------------------------------------------------------------
# symplectic setting

def standard_symplectic_form(n: int) -> Matrix:
    if n % 2:
        raise OddDimension(f"dimension {n} is odd")
    h = n // 2
    rows = [[0] * n for _ in range(n)]
    for i in range(h):
        rows[i][h + i] = 1
        rows[h + i][i] = -1
    return tuple(tuple(r) for r in rows)


def is_symplectic(m) -> bool:
    """m^T J m == J exactly for J = [[0, I], [-I, 0]]."""
    a = as_matrix(m)
    J = standard_symplectic_form(len(a))
    return matmul(matmul(transpose(a), J), a) == J


def symplectic_rank(a: ToralMatrix) -> int:
    """Rank of the units of Q(A) whose norm to the real subfield Q(A + A^{-1}) is 1.

    For a reciprocal characteristic polynomial this is r/2 + c'/2, where r
    counts real roots and c' counts complex pairs off the unit circle.
    """
    p = _irreducible_poly(a)
    r, c = root_signature(p)
    with mp.workprec(128):
        roots = mp.polyroots(list(reversed(p.coefficients)), maxsteps=200, extraprec=256)
        off_circle = sum(1 for z in roots if mp.im(z) > 0 and abs(abs(z) - 1) > mp.mpf(10) ** -20)
    return r // 2 + off_circle // 2


def symplectic_centralizer_front_end(a: ToralMatrix, cfg: UnitSearchConfig = UnitSearchConfig(),
                                     strict: bool = False) -> GeneratorSet:
    if a.n % 2:
        raise HypothesisViolation("symplectic", f"dimension {a.n} is odd")
    if not is_symplectic(a):
        raise HypothesisViolation("symplectic", "A^T J A != J")
    p = a.char_poly()
    if not is_irreducible_over_Z(p):
        raise HypothesisViolation("irreducible", f"characteristic polynomial {p} is reducible")
    if a.n == 4 and count_real_roots(p) == 0:
        raise HypothesisViolation("real eigenvalue", "N = 4 and A has only complex eigenvalues")
    target = symplectic_rank(a)
    gs = find_units(a, cfg, predicate=is_symplectic, target_rank=target)
    if gs.k < target:
        # complete the box search with u sigma(u)^{-1} for units u of the whole centralizer
        chosen = list(gs.generators)
        for u in find_units(a, cfg).generators:
            v = symplectic_part(u)
            if not is_symplectic(v):
                continue
            trial = GeneratorSet(tuple(chosen + [v]))
            if multiplicative_independence(trial, cfg.precision_bits).independent:
                chosen.append(v)
            if len(chosen) == target:
                break
        gs = GeneratorSet(tuple(chosen), provenance=f"symplectic units of char poly {p}: rank {len(chosen)} "
                          f"of {target}")
    if gs.k < target and strict:
        raise RankNotReached(f"located {gs.k} symplectic units, expected {target}", gs, gs.k, target)
    return gs


def symplectic_part(u: ToralMatrix) -> ToralMatrix:
    """u sigma(u)^{-1} with sigma(u) = J^{-1} u^T J.

    For u commuting with a symplectic A, sigma is the involution A -> A^{-1}
    on Q(A) and the quotient lies in the norm-one (symplectic) units.
    """
    J = standard_symplectic_form(u.n)
    sigma = ToralMatrix(matmul(matmul(inverse_unimodular(J), transpose(u.entries)), J))
    return u @ sigma.inverse()


def product_generators(gs1: GeneratorSet, gs2: GeneratorSet) -> GeneratorSet:
    """Block-diagonal generators of the Z^{k1+k2} product action."""
    e1, e2 = identity(gs1.n), identity(gs2.n)
    gens = [ToralMatrix(block_diagonal(g.entries, e2)) for g in gs1.generators]
    gens += [ToralMatrix(block_diagonal(e1, g.entries)) for g in gs2.generators]
    return GeneratorSet(tuple(gens), f"product of [{gs1.provenance}] and [{gs2.provenance}]")


def diagonal_generators(gs1: GeneratorSet, gs2: GeneratorSet) -> GeneratorSet:
    """The same Z^k acting on both blocks: n -> (rho1(n), rho2(n))."""
    if gs1.k != gs2.k:
        raise ValueError("diagonal embedding needs equal ranks")
    gens = [ToralMatrix(block_diagonal(g.entries, h.entries))
            for g, h in zip(gs1.generators, gs2.generators)]
    return GeneratorSet(tuple(gens), "diagonal embedding")
