"""Mechanical checks of the four structural hypotheses (simple spectrum,
density of eigenvalues, separation inside stable sets, bunching) for a
commuting generator set, with front ends for a single matrix."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Sequence

import mpmath as mp
import numpy as np
from scipy.optimize import linprog

from .centralizer import (GeneratorSet, UnitSearchConfig, diagonal_generators, dirichlet_rank,
                          find_units, product_generators, symplectic_centralizer_front_end)
from .errors import (DegenerateSpectrum, EmptyCone, HypothesisViolation, NoLatticePoint,
                     NotSimultaneouslyDiagonalizable, RankNotReached)
from .exact_linear_algebra import ToralMatrix, identity, mat_sub, determinant, matrix_power
from .intpoly import IntPolynomial, gcd_over_q, is_irreducible_over_Z, is_squarefree
from .lyapunov_geometry import (DEFAULT_MARGIN, CoarseSplitting, LyapunovFunctional, WeylChamber,
                                coarse_spaces, exponent_functionals, find_lattice_point,
                                stable_unstable, weyl_chambers)

log = logging.getLogger(__name__)

PASS, FAIL, UNKNOWN = "Pass", "Fail", "Unknown"
DENSE, DISCRETE = "Dense", "Discrete"


@dataclass(frozen=True)
class Verdict:
    status: str
    reason: str = ""
    witness: Any = None

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json(self) -> dict:
        return {"status": self.status, "reason": self.reason, "witness": _jsonable(self.witness)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (mp.mpf, np.floating)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


@dataclass
class HypothesisReport:
    verdict_i: Verdict
    verdict_ii: Verdict
    verdict_iii: Verdict
    verdict_iv: Verdict
    witnesses_iii: dict = field(default_factory=dict)
    witnesses_iv: dict = field(default_factory=dict)
    precision_bits: int = 128
    notes: list = field(default_factory=list)
    generators: GeneratorSet | None = None

    @property
    def verdicts(self) -> dict[str, Verdict]:
        return {"i": self.verdict_i, "ii": self.verdict_ii, "iii": self.verdict_iii, "iv": self.verdict_iv}

    def all_pass(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def to_json(self) -> dict:
        out = {f"verdict_{k}": v.to_json() for k, v in self.verdicts.items()}
        out["witnesses_iii"] = [{"chamber": c, "functional": f, "m": list(m)}
                                for (c, f), m in sorted(self.witnesses_iii.items())]
        out["witnesses_iv"] = [{"chamber": c, "m": list(m), "bunching": float(q)}
                               for c, (m, q) in sorted(self.witnesses_iv.items())]
        out["precision_bits"] = self.precision_bits
        out["notes"] = list(self.notes)
        if self.generators is not None:
            out["generators"] = self.generators.to_json()
        return out


# ---------------------------------------------------------------------------
# exact re-verification helpers

def _eigenvector(f: LyapunovFunctional):
    b = f.eigenspace
    if f.eigen_type == "Real":
        return [mp.mpc(x, 0) for x in b[0]]
    return [mp.mpc(x, y) for x, y in zip(b[0], b[1])]


def eigenvalue_under(m: ToralMatrix, f: LyapunovFunctional):
    """Eigenvalue of the exact matrix m on the eigenspace of f (Rayleigh quotient)."""
    with mp.workprec(f.precision_bits):
        v = _eigenvector(f)
        M = mp.matrix([list(r) for r in m.entries])
        Mv = M * mp.matrix(v)
        num = mp.fsum(mp.conj(a) * b for a, b in zip(v, Mv))
        den = mp.fsum(abs(a) ** 2 for a in v)
        return num / den


def witness_moduli_ok(gs: GeneratorSet, m: Sequence[int], below: Sequence[LyapunovFunctional],
                      above: Sequence[LyapunovFunctional]) -> bool:
    """Exact matrix check: eigenvalues of rho(m) have modulus < 1 on ``below`` and > 1 on ``above``."""
    M = matrix_power(gs, m)
    return (all(abs(eigenvalue_under(M, f)) < 1 for f in below)
            and all(abs(eigenvalue_under(M, f)) > 1 for f in above))


# ---------------------------------------------------------------------------
# hypothesis i

def _box_by_l1(k: int, radius: int):
    pts = [p for p in product(range(-radius, radius + 1), repeat=k) if any(p)]
    pts.sort(key=lambda p: (sum(map(abs, p)), max(map(abs, p)), p))
    return pts


def simple_spectrum_element(gs: GeneratorSet, radius: int = 3) -> tuple[tuple[int, ...], IntPolynomial] | None:
    """First element of the small exponent box whose characteristic polynomial is squarefree."""
    for m in _box_by_l1(gs.k, radius):
        p = matrix_power(gs, m).char_poly()
        if is_squarefree(p):
            return m, p
    return None


def check_i(gs: GeneratorSet, fs: Sequence[LyapunovFunctional] | None = None,
            cs: CoarseSplitting | None = None, radius: int = 3) -> Verdict:
    """Simple joint spectrum and coarse classes equal to single eigenspaces.

    Simplicity is judged for the action rather than for each generator: an
    element of the action with an exactly squarefree characteristic
    polynomial separates all joint eigenvalues.
    """
    found = simple_spectrum_element(gs, radius)
    if found is None:
        bad = gs.generators[0].char_poly()
        return Verdict(FAIL, f"no element with |n_j| <= {radius} has a squarefree characteristic "
                             f"polynomial (generator 0 has {bad})")
    m, p = found
    try:
        fs = exponent_functionals(gs) if fs is None else fs
        cs = coarse_spaces(fs) if cs is None else cs
    except (DegenerateSpectrum, NotSimultaneouslyDiagonalizable) as exc:
        return Verdict(FAIL, f"joint eigendecomposition failed: {exc}")
    total = sum(f.dim for f in fs)
    if total != gs.n:
        return Verdict(FAIL, f"eigenspaces span dimension {total}, expected {gs.n}")
    merged = [g for g in cs.groups if len(g) > 1]
    if merged:
        return Verdict(FAIL, f"coarse classes {merged} contain several Lyapunov spaces", merged)
    if cs.zero_classes:
        return Verdict(FAIL, "some Lyapunov functional vanishes identically", list(cs.zero_classes))
    return Verdict(PASS, f"element {m} has squarefree characteristic polynomial {p}; "
                         f"all {len(cs.groups)} coarse classes are single Lyapunov spaces", m)


# ---------------------------------------------------------------------------
# hypothesis ii

def _relation_verified_real(gs: GeneratorSet, rel: dict[int, int]) -> bool:
    """Exact: prod M_j^{rel_j} has eigenvalue +1 or -1."""
    exps = [rel.get(j, 0) for j in range(gs.k)]
    M = matrix_power(gs, exps, max_exponent=10 ** 6)
    eye = identity(gs.n)
    neg = tuple(tuple(-x for x in r) for r in eye)
    return determinant(mat_sub(M.entries, eye)) == 0 or determinant(mat_sub(M.entries, neg)) == 0


def _relation_verified_modulus(gs: GeneratorSet, rel: dict[int, int], f: LyapunovFunctional) -> bool:
    """prod M_j^{rel_j} has a unimodular eigenvalue on the eigenspace of f.

    Exact part: the characteristic polynomial p of the product shares a
    factor g with its reciprocal (any root of modulus one forces this).
    The eigenvalue on f is then confirmed to be a root of g numerically.
    """
    exps = [rel.get(j, 0) for j in range(gs.k)]
    M = matrix_power(gs, exps, max_exponent=10 ** 6)
    p = M.char_poly()
    recip = IntPolynomial(tuple(reversed(p.coefficients)))
    g = gcd_over_q(p, recip)
    if len(g) < 2:
        return False
    with mp.workprec(f.precision_bits):
        mu = eigenvalue_under(M, f)
        tol = mp.mpf(2) ** (-f.precision_bits // 2)
        val = mp.polyval([mp.mpf(c.numerator) / c.denominator for c in reversed(g)], mu)
        return abs(abs(mu) - 1) < tol and abs(val) < tol * (1 + abs(mu)) ** len(g)


def _pslq_pair(x, y, height: int):
    if x == 0 or y == 0:
        return (1, 0) if x == 0 else (0, 1)
    rel = mp.pslq([x, y], maxcoeff=height, maxsteps=10 ** 5)
    return tuple(int(r) for r in rel) if rel is not None else None


def classify_density(gs: GeneratorSet, f: LyapunovFunctional, height: int = 10 ** 6) -> dict:
    """Dense / Discrete / Unknown for the eigenvalue group on one functional."""
    k = gs.k
    logs = f.values
    if k == 1:
        return {"status": DISCRETE, "reason": "single generator: the group of logs is cyclic",
                "relations": []}
    if all(v == 0 for v in logs):
        return {"status": DISCRETE, "reason": "all logs vanish", "relations": []}
    relations = []
    unverified = []
    dense_pair = None
    for j in range(k):
        for l in range(j + 1, k):
            rel = _pslq_pair(logs[j], logs[l], height)
            if rel is None:
                dense_pair = (j, l)
                break
            relmap = {j: rel[0], l: rel[1]}
            ok = (_relation_verified_real(gs, relmap) if f.eigen_type == "Real"
                  else _relation_verified_modulus(gs, relmap, f))
            (relations if ok else unverified).append((j, l, rel))
        if dense_pair:
            break
    if dense_pair is None:
        if unverified:
            return {"status": UNKNOWN, "reason": f"relations {unverified} found numerically but not "
                                                 "verified exactly", "relations": relations}
        return {"status": DISCRETE, "reason": "all generator logs are commensurable",
                "relations": relations}
    if f.eigen_type == "Real":
        return {"status": DENSE, "reason": f"no integer relation of height <= {height} between the "
                                           f"logs of generators {dense_pair}", "relations": []}
    # complex pair: also need an argument irrational relative to 2 pi
    two_pi = 2 * mp.pi
    arg_info = []
    for j, lam in enumerate(f.eigenvalues):
        theta = mp.arg(lam)
        rel = _pslq_pair(theta, two_pi, height)
        if rel is None:
            return {"status": DENSE, "reason": f"log rank >= 2 via generators {dense_pair}; argument "
                                               f"of generator {j} is not a rational multiple of 2 pi",
                    "relations": []}
        q = abs(rel[0]) if rel[0] else 1
        Mq = matrix_power(gs, [q if i == j else 0 for i in range(k)], max_exponent=10 ** 6)
        arg_info.append((j, rel, not is_squarefree(Mq.char_poly())))
    if all(ok for _, _, ok in arg_info):
        return {"status": DISCRETE, "reason": "every argument is a rational multiple of 2 pi; the "
                                              "group is not dense in the plane", "relations": arg_info}
    return {"status": UNKNOWN, "reason": "argument relations could not be verified exactly",
            "relations": arg_info}


def check_ii(gs: GeneratorSet, fs: Sequence[LyapunovFunctional] | None = None,
             precision_bits: int = 192, height: int = 10 ** 6) -> Verdict:
    """Pass iff every functional's eigenvalue group is dense (to the declared height and precision)."""
    if fs is None or min(f.precision_bits for f in fs) < precision_bits:
        fs = exponent_functionals(gs, precision_bits)
    with mp.workprec(precision_bits):
        details = [classify_density(gs, f, height) for f in fs]
    statuses = [d["status"] for d in details]
    summary = [{"functional": i, **d} for i, d in enumerate(details)]
    if all(s == DENSE for s in statuses):
        return Verdict(PASS, f"dense on all {len(fs)} functionals (height {height}, "
                             f"{precision_bits} bits)", summary)
    if DISCRETE in statuses:
        i = statuses.index(DISCRETE)
        return Verdict(FAIL, f"{DISCRETE} on functional {i}: {details[i]['reason']}", summary)
    return Verdict(UNKNOWN, f"density undecided at height {height} and {precision_bits} bits", summary)


# ---------------------------------------------------------------------------
# hypothesis iii

def _chamber_functionals(c: WeylChamber, cs: CoarseSplitting):
    stable, unstable = stable_unstable(c, cs)
    s = [i for cl in stable for i in cs.groups[cl]]
    u = [i for cl in unstable for i in cs.groups[cl]]
    return s, u


def check_iii(gs: GeneratorSet, cs: CoarseSplitting, chambers: Sequence[WeylChamber],
              margin: float = DEFAULT_MARGIN) -> tuple[Verdict, dict]:
    """For each chamber and each stable Lyapunov functional E, find m with
    chi_E(m) < 0 and chi_F(m) > 0 for the other stable functionals F."""
    witnesses = {}
    fs = cs.functionals
    for ci, c in enumerate(chambers):
        stable, _ = _chamber_functionals(c, cs)
        for e in stable:
            ineqs = [(fs[e], -1)] + [(fs[f], 1) for f in stable if f != e]
            try:
                m = find_lattice_point(ineqs, margin, precision_bits=fs[e].precision_bits)
            except EmptyCone:
                return Verdict(FAIL, f"chamber {c.sign_string()}: no element separates functional {e} "
                                     f"from the other stable functionals {[f for f in stable if f != e]}",
                               {"chamber": ci, "functional": e}), witnesses
            except NoLatticePoint as exc:
                return Verdict(UNKNOWN, f"chamber {c.sign_string()}, functional {e}: {exc}"), witnesses
            if not witness_moduli_ok(gs, m, [fs[e]], [fs[f] for f in stable if f != e]):
                return Verdict(UNKNOWN, f"witness {m} failed exact re-verification"), witnesses
            witnesses[(ci, e)] = m
    return Verdict(PASS, f"{len(witnesses)} separating elements found"), witnesses


# ---------------------------------------------------------------------------
# hypothesis iv

def bunching_quantity(m: Sequence[int], stable: Sequence[LyapunovFunctional],
                      unstable: Sequence[LyapunovFunctional]):
    """max over stable chi(m) + max over unstable chi(m) - min over unstable chi(m)."""
    s = max(f(m) for f in stable) if stable else mp.mpf(0)
    if unstable:
        uvals = [f(m) for f in unstable]
        return s + max(uvals) - min(uvals)
    return s


def _shell(k: int, r: int) -> np.ndarray:
    pts = np.array(list(product(range(-r, r + 1), repeat=k)), dtype=np.int64)
    pts = pts[np.abs(pts).max(axis=1) == r]
    l1 = np.abs(pts).sum(axis=1)
    order = np.lexsort([pts[:, j] for j in reversed(range(k))] + [l1])
    return pts[order]


def _lp_bunching(rows_s: np.ndarray, rows_u: np.ndarray, class_rows: np.ndarray, signs: np.ndarray):
    """Interior directions of the cones where one choice of (stable max, unstable max, unstable min)
    makes the bunching quantity negative; yields (depth, x)."""
    k = class_rows.shape[1]
    su = range(len(rows_s)) if len(rows_s) else [None]
    uu = range(len(rows_u)) if len(rows_u) else [None]
    for a in su:
        for b in uu:
            for c in uu:
                A = []
                for r, s in zip(class_rows, signs):
                    A.append(np.append(-s * r, 1.0))
                q = np.zeros(k)
                if a is not None:
                    q += rows_s[a]
                    for r in rows_s:
                        A.append(np.append(r - rows_s[a], 1.0))
                if b is not None:
                    q += rows_u[b] - rows_u[c]
                    for r in rows_u:
                        A.append(np.append(r - rows_u[b], 1.0))
                        A.append(np.append(rows_u[c] - r, 1.0))
                A.append(np.append(q, 1.0))
                A = np.array(A)
                res = linprog(np.append(np.zeros(k), -1.0), A_ub=A, b_ub=np.zeros(len(A)),
                              bounds=[(-1, 1)] * k + [(None, 1)], method="highs")
                if res.status == 0 and res.x[-1] > 1e-9:
                    yield res.x[-1], res.x[:-1]


def check_iv(gs: GeneratorSet, cs: CoarseSplitting, chambers: Sequence[WeylChamber],
             box_radius: int = 20, margin: float = DEFAULT_MARGIN) -> tuple[Verdict, dict]:
    """Per chamber, an m inside it with negative bunching quantity.

    Lattice points are scanned shell by shell (by max-norm, then L1, then
    lexicographic order) up to ``box_radius``; chambers left over are tried
    through LP-guided directions, one per choice of which functionals attain
    the maxima and minimum.
    """
    fs = cs.functionals
    k = cs.k
    class_rows = cs.class_matrix()
    frows = np.array([f.as_array() for f in fs])
    per_chamber = {c.signs: (i, *_chamber_functionals(c, cs)) for i, c in enumerate(chambers)}
    witnesses: dict = {}
    todo = set(per_chamber)

    def accept(m, key) -> bool:
        ci, s, u = per_chamber[key]
        mt = tuple(int(x) for x in m)
        q = bunching_quantity(mt, [fs[i] for i in s], [fs[i] for i in u])
        if q >= -margin:
            return False
        if not witness_moduli_ok(gs, mt, [fs[i] for i in s], [fs[i] for i in u]):
            return False
        witnesses[ci] = (mt, q)
        return True

    for r in range(1, box_radius + 1):
        if not todo:
            break
        pts = _shell(k, r)
        cvals = pts @ class_rows.T
        fvals = pts @ frows.T
        ok_margin = np.all(np.abs(cvals) > margin, axis=1)
        signs = np.where(cvals > 0, 1, -1)
        for key in list(todo):
            _, s, u = per_chamber[key]
            inside = ok_margin & np.all(signs == np.array(key), axis=1)
            if not inside.any():
                continue
            fv = fvals[inside]
            q = fv[:, s].max(axis=1) if s else np.zeros(len(fv))
            if u:
                q = q + fv[:, u].max(axis=1) - fv[:, u].min(axis=1)
            for idx in np.flatnonzero(q < -margin):
                if accept(pts[inside][idx], key):
                    todo.discard(key)
                    break

    undecided = []
    for key in sorted(todo, reverse=True):
        ci, s, u = per_chamber[key]
        feasible = False
        done = False
        for _, x in _lp_bunching(frows[s], frows[u], class_rows, np.array(key, dtype=float)):
            feasible = True
            direction = x / np.abs(x).max()
            scale = 1.0
            while scale <= 1e4 and not done:
                m = np.rint(direction * scale)
                if np.any(m) and np.abs(m).max() <= 64 and accept(m, key):
                    done = True
                scale *= 1.5
            if done:
                break
        if done:
            continue
        if not feasible:
            return Verdict(FAIL, f"chamber {chambers[ci].sign_string()}: the bunching quantity is "
                                 f"non-negative on the whole chamber", {"chamber": ci}), witnesses
        undecided.append(ci)
    if undecided:
        return Verdict(UNKNOWN, f"no witness within |m_j| <= {box_radius} or along LP directions for "
                                f"chambers {sorted(undecided)}", {"box_radius": box_radius}), witnesses
    return Verdict(PASS, f"bunching witnesses for all {len(chambers)} chambers "
                         f"(box radius {box_radius})"), witnesses


# ---------------------------------------------------------------------------
# drivers

def run_checks(gs: GeneratorSet, precision_bits: int = 128, density_precision: int = 192,
               height: int = 10 ** 6, box_radius: int = 20, margin: float = DEFAULT_MARGIN) -> HypothesisReport:
    notes = []
    try:
        fs = exponent_functionals(gs, precision_bits)
        cs = coarse_spaces(fs)
    except (DegenerateSpectrum, NotSimultaneouslyDiagonalizable) as exc:
        v = check_i(gs)
        unk = Verdict(UNKNOWN, f"functionals unavailable: {exc}")
        return HypothesisReport(v, unk, unk, unk, precision_bits=precision_bits,
                                notes=[str(exc)], generators=gs)
    v1 = check_i(gs, fs, cs)
    v2 = check_ii(gs, fs, density_precision, height)
    if cs.k > 4:
        unk = Verdict(UNKNOWN, f"chamber enumeration needs k <= 4, got {cs.k}")
        return HypothesisReport(v1, v2, unk, unk, precision_bits=precision_bits, generators=gs)
    chambers = weyl_chambers(cs, margin)
    v3, w3 = check_iii(gs, cs, chambers, margin)
    v4, w4 = check_iv(gs, cs, chambers, box_radius, margin)
    notes.append(f"{len(fs)} functionals, {len(cs.groups)} coarse classes, {len(chambers)} chambers")
    return HypothesisReport(v1, v2, v3, v4, w3, w4, precision_bits, notes, gs)


def theorem_1_1_check(a: ToralMatrix, cfg: UnitSearchConfig = UnitSearchConfig(), **kw) -> HypothesisReport:
    """Irreducibility and rank >= 2, then the four checks on located units of Z(A)."""
    p = a.char_poly()
    verdict = is_irreducible_over_Z(p)
    if not verdict.irreducible:
        raise HypothesisViolation("irreducible", f"characteristic polynomial {p} has factor {verdict.factor}")
    rank = dirichlet_rank(a)
    if rank < 2:
        raise HypothesisViolation("rank", f"the centralizer has rank {rank} < 2")
    gs = find_units(a, cfg)
    if gs.k < 2:
        raise RankNotReached(f"only {gs.k} independent unit(s) found in the coefficient box", gs, gs.k, rank)
    report = run_checks(gs, cfg.precision_bits, **kw)
    for name, v in report.verdicts.items():
        if v.status == FAIL:
            report.notes.append(f"red flag: hypothesis {name} failed for a centralizer action: {v.reason}")
        elif v.status == UNKNOWN:
            report.notes.append(f"precision advisory for hypothesis {name}: {v.reason}")
    return report


def theorem_2_2_check(a: ToralMatrix, cfg: UnitSearchConfig = UnitSearchConfig(), **kw) -> HypothesisReport:
    if a.n < 4:
        raise HypothesisViolation("dimension", f"N = {a.n} < 4")
    gs = symplectic_centralizer_front_end(a, cfg)
    report = run_checks(gs, cfg.precision_bits, **kw)
    report.notes.append(f"symplectic units found: rank {gs.k}")
    return report


def product_action(gs1: GeneratorSet, gs2: GeneratorSet, **kw) -> tuple[GeneratorSet, HypothesisReport]:
    """Block-diagonal Z^{k1+k2} action with i-iii re-checked; iv is checked empirically only."""
    gs = product_generators(gs1, gs2)
    report = run_checks(gs, **kw)
    report.notes.append("hypothesis iv for a product is only checked empirically by lattice search; "
                        "no general argument is known")
    return gs, report


def diagonal_action(gs1: GeneratorSet, gs2: GeneratorSet) -> GeneratorSet:
    return diagonal_generators(gs1, gs2)
