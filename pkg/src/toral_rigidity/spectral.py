"""Simultaneous eigendecomposition of commuting integer matrices at a chosen
binary precision (mpmath)."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import DegenerateSpectrum, NotSimultaneouslyDiagonalizable

DEFAULT_PRECISION = 128


@dataclass(frozen=True)
class JointEigenpair:
    """A common eigenvector together with its eigenvalue under each matrix.

    Complex-conjugate pairs are represented once, by the member whose
    eigenvalue under the probing combination has positive imaginary part.
    """

    vector: tuple  # complex entries (mpc)
    eigenvalues: tuple  # one per matrix (mpc)
    is_real: bool

    def real_basis(self):
        """Real basis of the eigenspace: [v] if real, [Re v, Im v] otherwise."""
        re = [mp.re(c) for c in self.vector]
        if self.is_real:
            return [re]
        return [re, [mp.im(c) for c in self.vector]]


def _combination_coefficients(k: int):
    yield (1,) * k if k == 1 else tuple(range(1, k + 1))
    rng = np.random.default_rng(20240501)
    for _ in range(12):
        c = rng.integers(-9, 10, size=k)
        if np.any(c):
            yield tuple(int(x) for x in c)


def _normalize(v):
    norm = mp.sqrt(mp.fsum(abs(c) ** 2 for c in v))
    # rotate so that the largest entry is real positive; real eigenvectors come out real
    big = max(v, key=abs)
    phase = big / abs(big)
    return [c / (phase * norm) for c in v]


def joint_eigendecomposition(matrices, precision_bits: int = DEFAULT_PRECISION) -> list[JointEigenpair]:
    """Eigen-decompose a commuting family through a generic integer combination.

    Raises DegenerateSpectrum when no tried combination has a simple
    spectrum, NotSimultaneouslyDiagonalizable when the eigenvectors of the
    combination fail to be eigenvectors of every member.
    """
    mats = [tuple(tuple(int(x) for x in row) for row in getattr(m, "entries", m)) for m in matrices]
    n = len(mats[0])
    k = len(mats)
    with mp.workprec(precision_bits):
        mps = [mp.matrix([list(r) for r in m]) for m in mats]
        gap_tol = mp.mpf(2) ** (-precision_bits // 4)
        res_tol = mp.mpf(2) ** (-precision_bits // 3)
        real_tol = mp.mpf(2) ** (-precision_bits // 2)
        chosen = None
        for coeffs in _combination_coefficients(k):
            S = mp.matrix(n, n)
            for c, M in zip(coeffs, mps):
                S += c * M
            E, ER = mp.eig(S)
            scale = max(1, max(abs(e) for e in E))
            gaps = [abs(E[i] - E[j]) for i in range(n) for j in range(i + 1, n)]
            if not gaps or min(gaps) > gap_tol * scale:
                chosen = (E, ER)
                break
        if chosen is None:
            raise DegenerateSpectrum("no combination of the generators has a simple spectrum")
        E, ER = chosen
        pairs = []
        for i in range(n):
            lam = E[i]
            is_real = abs(mp.im(lam)) <= real_tol * max(1, abs(lam))
            if not is_real and mp.im(lam) < 0:
                continue
            v = _normalize([ER[r, i] for r in range(n)])
            if is_real:
                v = [mp.mpc(mp.re(c), 0) for c in v]
            vec = mp.matrix(v)
            vh = [mp.conj(c) for c in v]
            eigs = []
            for M in mps:
                Mv = M * vec
                num = mp.fsum(a * b for a, b in zip(vh, Mv))
                mu = num  # v has unit norm
                resid = mp.sqrt(mp.fsum(abs(Mv[r] - mu * v[r]) ** 2 for r in range(n)))
                if resid > res_tol * (1 + mp.mnorm(M, 1)):
                    raise NotSimultaneouslyDiagonalizable(
                        f"eigenvector of the probing combination is not an eigenvector "
                        f"(residual {mp.nstr(resid, 5)})")
                if is_real:
                    mu = mp.mpc(mp.re(mu), 0)
                eigs.append(mu)
            pairs.append(JointEigenpair(tuple(v), tuple(eigs), bool(is_real)))
        return pairs


def numeric_eigenvalues(m) -> np.ndarray:
    return np.linalg.eigvals(np.array(m, dtype=float))
