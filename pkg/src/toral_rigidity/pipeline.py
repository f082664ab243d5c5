"""Run configuration and the end-to-end commands behind the CLI.

Every command returns a JSON-ready dict that embeds the configuration it
ran with.  Module errors met along the way are collected under "errors";
hypothesis violations are findings and are reported under "findings".
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

import mpmath as mp
import numpy as np

from .centralizer import (GeneratorSet, UnitSearchConfig, dirichlet_rank, find_units, is_symplectic,
                          multiplicative_independence)
from .conjugacy_solver import (ConjugatedDisplacement, PerturbedMap, SolverConfig, check_splitting,
                               fit_complex_form, fit_power_law_real, hyperbolic_splitting,
                               parse_perturbation_text, solve_franks_manning, verify_equivariance)
from .errors import HypothesisViolation, OrbitMismatch, ParseError, ToralRigidityError
from .exact_linear_algebra import ToralMatrix
from .hyperbolicity_certifier import (Certificate, CocycleSpec, NegativityConfig, bunching_at_periodic,
                                      certify_expanding, certify_uniform_contraction,
                                      certify_uniform_expansion, compare_stable_dimensions,
                                      orbit_exponent_survey)
from .hypothesis_checker import run_checks, theorem_1_1_check, theorem_2_2_check
from .intpoly import is_irreducible_over_Z, root_signature
from .lyapunov_geometry import (MAX_CHAMBER_RANK, chambers_to_csv, coarse_spaces, exponent_functionals,
                                weyl_chambers)
from .spectral import DEFAULT_PRECISION

PRECISION_ENV = "TORAL_RIGIDITY_PRECISION"


def default_precision() -> int:
    value = os.environ.get(PRECISION_ENV)
    if not value:
        return DEFAULT_PRECISION
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{PRECISION_ENV} must be an integer, got {value!r}") from None


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = field(default_factory=default_precision)
    density_precision: int = 192
    resolution: int = 128
    fixed_point_tol: float = 1e-12
    max_iter: int = 500
    interpolation: str = "multilinear"
    exponent_tol: float = 1e-6
    equivariance_tol: float = 1e-2
    splitting_tol: float = 1e-6
    fit_tol: float = 1e-6
    orbit_tol: float = 1e-2
    smoothness_threshold: float = 0.9
    coefficient_bound: int = 3
    lattice_box: int = 20
    relation_height: int = 10 ** 6
    period_bound: int = 6
    bunching_r: float = 1.0
    certify_points: int = 1024
    epsilon: float = 1.0
    output: str | None = None
    csv_output: str | None = None

    def __post_init__(self):
        for name in ("fixed_point_tol", "exponent_tol", "equivariance_tol", "splitting_tol", "fit_tol",
                     "orbit_tol", "smoothness_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.resolution < 4 or self.resolution & (self.resolution - 1):
            raise ValueError("resolution must be a power of two >= 4")
        if self.precision_bits < 53 or self.density_precision < 53:
            raise ValueError("precision must be at least 53 bits")
        if min(self.coefficient_bound, self.lattice_box, self.relation_height, self.period_bound,
               self.max_iter, self.certify_points) < 1:
            raise ValueError("search bounds must be positive")
        if self.bunching_r < 1:
            raise ValueError("bunching_r must be >= 1")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_json(self) -> dict:
        return asdict(self)

    def unit_search(self) -> UnitSearchConfig:
        return UnitSearchConfig(coefficient_bound=self.coefficient_bound, precision_bits=self.precision_bits)

    def check_kwargs(self) -> dict:
        return {"density_precision": self.density_precision, "height": self.relation_height,
                "box_radius": self.lattice_box}

    def solver(self) -> SolverConfig:
        return SolverConfig(self.resolution, self.fixed_point_tol, self.max_iter, self.interpolation)

    def negativity(self, n: int) -> NegativityConfig:
        return NegativityConfig(resolution=max(4, round(self.certify_points ** (1 / n))))


def jsonable(x):
    """Recursively convert numpy, mpmath and Fraction values to plain JSON types."""
    if hasattr(x, "to_json") and not isinstance(x, type):
        return jsonable(x.to_json())
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating, mp.mpf)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def diagnostic(exc: BaseException) -> dict:
    d = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError) and exc.line is not None:
        d["line"] = exc.line
    if isinstance(exc, HypothesisViolation):
        d["clause"] = exc.clause
    profile = getattr(exc, "profile", None)
    if profile is not None:
        d["profile"] = jsonable(profile)
    return d


def matrix_summary(a: ToralMatrix) -> dict:
    p = a.char_poly()
    verdict = is_irreducible_over_Z(p)
    real, complex_pairs = root_signature(p)
    out = {"matrix": [list(r) for r in a.entries], "det": a.det,
           "char_poly": p.to_list(), "char_poly_text": str(p), "irreducible": verdict.irreducible,
           "factor": None if verdict.factor is None else str(verdict.factor),
           "real_roots": real, "complex_pairs": complex_pairs}
    if verdict.irreducible:
        out["dirichlet_rank"] = dirichlet_rank(a)
    return out


def _geometry(gs: GeneratorSet, cfg: RunConfig):
    fs = exponent_functionals(gs, cfg.precision_bits)
    cs = coarse_spaces(fs)
    chambers = weyl_chambers(cs) if cs.k <= MAX_CHAMBER_RANK else None
    return fs, cs, chambers


def _geometry_json(fs, cs, chambers) -> dict:
    return {"functionals": [{"values": [float(v) for v in f.values], "type": f.eigen_type, "dim": f.dim}
                            for f in fs],
            "coarse_classes": [list(g) for g in cs.groups],
            "chambers": None if chambers is None else [
                {"signs": c.sign_string(), "representative": list(c.representative),
                 "walls": list(c.walls)} for c in chambers]}


def analyze_action(text: str, cfg: RunConfig):
    """Report dict plus the generator set used downstream (units of Z(A) for a single matrix)."""
    gs_in = GeneratorSet.from_text(text, provenance="input")
    report = {"command": "analyze", "config": cfg.to_json(), "input": gs_in.to_json(),
              "matrices": [matrix_summary(m) for m in gs_in.generators], "findings": {}, "errors": []}
    gs = gs_in
    hypotheses = None
    if gs_in.k == 1:
        a = gs_in.generators[0]
        try:
            hypotheses = theorem_1_1_check(a, cfg.unit_search(), **cfg.check_kwargs())
            gs = hypotheses.generators
        except HypothesisViolation as exc:
            report["findings"]["theorem_1_1"] = diagnostic(exc)
        except ToralRigidityError as exc:
            report["errors"].append(diagnostic(exc))
            partial = getattr(exc, "partial", None)
            if partial is not None:
                gs = partial
        if a.n >= 4 and a.n % 2 == 0 and is_symplectic(a):
            try:
                report["symplectic"] = theorem_2_2_check(a, cfg.unit_search(), **cfg.check_kwargs()).to_json()
            except HypothesisViolation as exc:
                report["findings"]["theorem_2_2"] = diagnostic(exc)
            except ToralRigidityError as exc:
                report["errors"].append(diagnostic(exc))
    else:
        try:
            report["independence"] = multiplicative_independence(gs_in, cfg.precision_bits,
                                                                 cfg.relation_height)
        except ToralRigidityError as exc:
            report["errors"].append(diagnostic(exc))
    if hypotheses is None:
        try:
            hypotheses = run_checks(gs, cfg.precision_bits, **cfg.check_kwargs())
        except ToralRigidityError as exc:
            report["errors"].append(diagnostic(exc))
    report["units"] = gs.to_json()
    report["hypotheses"] = hypotheses
    try:
        report["geometry"] = _geometry_json(*_geometry(gs, cfg))
    except ToralRigidityError as exc:
        report["errors"].append(diagnostic(exc))
    return jsonable(report), gs


def cmd_analyze(text: str, cfg: RunConfig) -> dict:
    return analyze_action(text, cfg)[0]


def cmd_chambers(text: str, cfg: RunConfig) -> tuple[dict, str]:
    """Chambers of the unit action (or of the given generator set) as JSON and CSV."""
    gs = GeneratorSet.from_text(text, provenance="input")
    if gs.k == 1:
        gs = find_units(gs.generators[0], cfg.unit_search())
    fs, cs, chambers = _geometry(gs, cfg)
    if chambers is None:
        raise ValueError(f"chamber enumeration supports rank <= {MAX_CHAMBER_RANK}")
    report = {"command": "chambers", "config": cfg.to_json(), "generators": gs.to_json(),
              "count": len(chambers), **_geometry_json(fs, cs, chambers), "errors": []}
    return jsonable(report), chambers_to_csv(chambers)


def cmd_certify(perturbation_text: str, bundle: str, cfg: RunConfig) -> dict:
    """Uniform contraction of the stable bundle, expansion of the unstable one, or of the whole map."""
    f = parse_perturbation_text(perturbation_text, cfg.epsilon)
    ncfg = cfg.negativity(f.n)
    if bundle == "stable":
        result = certify_uniform_contraction(CocycleSpec(f, "stable"), ncfg)
    elif bundle == "unstable":
        result = certify_uniform_expansion(CocycleSpec(f, "unstable"), ncfg)
    elif bundle == "expanding":
        result = certify_expanding(f, ncfg)
    else:
        raise ValueError(f"unknown bundle {bundle!r}")
    return jsonable({"command": "certify", "config": cfg.to_json(), "bundle": bundle,
                     "certified": isinstance(result, Certificate),
                     "kind": type(result).__name__, "result": result, "errors": []})


def read_samples(text: str) -> np.ndarray:
    """Numeric CSV rows; a non-numeric first row is treated as a header."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    out = []
    for i, r in enumerate(rows, start=1):
        try:
            out.append([float(v) for v in r])
        except ValueError:
            if i == 1:
                continue
            raise ParseError(f"non-numeric sample row {r!r}", i) from None
    if not out or len({len(r) for r in out}) != 1 or len(out[0]) not in (2, 4):
        raise ParseError("samples need 2 columns (x, h) or 4 columns (re z, im z, re h, im h)")
    return np.array(out)


def cmd_fit(samples_text: str, cfg: RunConfig, orientation: str | None = None) -> dict:
    data = read_samples(samples_text)
    if data.shape[1] == 2:
        fit = fit_power_law_real(data[:, 0], data[:, 1])
        form = "real"
    else:
        fit = fit_complex_form(data[:, 0] + 1j * data[:, 1], data[:, 2] + 1j * data[:, 3], orientation)
        form = "complex"
    return jsonable({"command": "fit", "config": cfg.to_json(), "form": form, "fit": fit,
                     "within_tolerance": fit.rms < cfg.fit_tol, "errors": []})


def cmd_conjugate(perturbation_text: str, cfg: RunConfig) -> dict:
    f = parse_perturbation_text(perturbation_text, cfg.epsilon)
    result = solve_franks_manning(f, cfg.solver())
    report = {"command": "conjugate", "config": cfg.to_json(), "result": result,
              "measured_ratios": result.measured_ratios(), "errors": []}
    if cfg.output:
        grid_path, meta_path = result.save(cfg.output)
        report["files"] = [str(grid_path), str(meta_path)]
    return jsonable(report)


def _action_maps(f0: PerturbedMap, gens):
    disp = f0.displacement
    if disp is None:
        return [PerturbedMap(m) for m in gens], list(gens), None
    if isinstance(disp, ConjugatedDisplacement):
        return [f0] + [PerturbedMap.conjugate(m, disp.phi) for m in gens[1:]], list(gens), None
    note = ("a direct perturbation defines one diffeomorphism; the remaining generators have no "
            "commuting perturbation, so only the perturbed member is compared")
    return [f0], [gens[0]], note


def _splitting_basis(a: ToralMatrix, cs):
    """Real eigen-coordinates grouped into coarse classes when they are available."""
    if cs is not None:
        cols, blocks, start = [], [], 0
        for c in cs.active_classes():
            vecs = [np.array([float(v) for v in vec]) for vec in cs.basis(c)]
            cols.extend(vecs)
            blocks.append(tuple(range(start, start + len(vecs))))
            start += len(vecs)
        if start == a.n:
            return np.column_stack(cols), blocks
    split = hyperbolic_splitting(a.to_numpy())
    s = split.stable_dim
    return split.basis, [tuple(range(s)), tuple(range(s, a.n))]


def exponents_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = len(reports[0].exponents) if reports else 0
    w.writerow(["period"] + [f"x{i}" for i in range(n)] + [f"exponent{i}" for i in range(n)]
               + [f"difference{i}" for i in range(n)])
    for r in reports:
        w.writerow([r.period] + [repr(float(v)) for v in r.points[0]] + [repr(float(v)) for v in r.exponents]
                   + [repr(float(v)) for v in r.comparison])
    return buf.getvalue()


def cmd_rigidity(matrix_text: str, perturbation_text: str, cfg: RunConfig) -> tuple[dict, str]:
    """Compare a perturbed action with its linear model; returns the report and an exponent CSV."""
    analysis, gs = analyze_action(matrix_text, cfg)
    report = {"command": "rigidity", "config": cfg.to_json(), "analysis": analysis,
              "errors": list(analysis["errors"]), "notes": []}
    f0 = parse_perturbation_text(perturbation_text, cfg.epsilon)
    gens = list(gs.generators)
    if f0.toral != gens[0]:
        raise ValueError("the perturbation's linear part differs from the first generator of the action")
    maps, linear, note = _action_maps(f0, gens)
    if note:
        report["notes"].append(note)

    result = solve_franks_manning(f0, cfg.solver())
    report["conjugacy"] = result
    report["equivariance"] = verify_equivariance(result.w, linear, maps, resolution=min(64, cfg.resolution))

    cs = None
    try:
        cs = coarse_spaces(exponent_functionals(gs, cfg.precision_bits))
    except ToralRigidityError as exc:
        report["notes"].append(f"coarse splitting unavailable ({exc}); using stable/unstable blocks")
    basis, blocks = _splitting_basis(gens[0], cs)
    splitting = check_splitting(result.w, blocks, cfg.splitting_tol, basis, basis)
    report["splitting"] = splitting

    reports = orbit_exponent_survey(f0, cfg.period_bound, w=result.w)
    gap = max(float(np.abs(r.comparison).max()) for r in reports)
    report["periodic"] = {"orbits": len(reports), "max_exponent_difference": gap,
                          "reports": [r.to_json() for r in reports]}
    linear_ex = np.sort(np.log(np.abs(np.linalg.eigvals(f0.matrix))))
    first = [i for i, v in enumerate(linear_ex) if v < 0]
    second = [i for i, v in enumerate(linear_ex) if v > 0]
    report["bunching"] = bunching_at_periodic(reports, first, second, cfg.bunching_r)

    dims_ok = True
    try:
        report["stable_dimensions"] = compare_stable_dimensions(f0, PerturbedMap(gens[0]), result.conjugacy,
                                                                reports, tol=cfg.orbit_tol)
    except OrbitMismatch as exc:
        dims_ok = False
        report["errors"].append(diagnostic(exc))

    ncfg = cfg.negativity(f0.n)
    stable_cert = certify_uniform_contraction(CocycleSpec(f0, "stable"), ncfg)
    unstable_cert = certify_uniform_expansion(CocycleSpec(f0, "unstable"), ncfg)
    report["certificates"] = {"stable": {"kind": type(stable_cert).__name__, "result": stable_cert},
                              "unstable": {"kind": type(unstable_cert).__name__, "result": unstable_cert}}

    if result.holder is None:
        smooth = None
        report["notes"].append(f"resolution {cfg.resolution} has too few dyadic scales for a Hoelder estimate")
    else:
        smooth = bool(result.holder.theta >= cfg.smoothness_threshold)
    signatures = {
        "equivariant": bool(report["equivariance"].precondition_ok
                            and max(report["equivariance"].residuals) < cfg.equivariance_tol),
        "smooth_conjugacy": smooth,
        "blocks_split": bool(splitting.splits),
        "exponents_match": bool(gap < cfg.exponent_tol),
        "stable_dimensions_agree": dims_ok,
        "bunching": bool(report["bunching"].passed),
        "stable_bundle_contracted": isinstance(stable_cert, Certificate),
        "unstable_bundle_expanded": isinstance(unstable_cert, Certificate),
    }
    # periodic data is what the conjugacy has to preserve; the Hoelder estimate is
    # biased low on coarse grids and is reported on its own
    signatures["rigidity_signature"] = signatures["exponents_match"] and signatures["stable_dimensions_agree"]
    report["verdict"] = signatures
    return jsonable(report), exponents_csv(reports)
