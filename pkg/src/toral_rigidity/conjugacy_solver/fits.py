"""Fits of one-dimensional conjugacies to the rigid forms alpha x^t and
alpha z |z|^(t-1) exp(i a log|z|)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import BranchAmbiguity, InsufficientSamples

PRESERVING, REVERSING = "preserving", "reversing"


@dataclass(frozen=True)
class PowerLawFit:
    t: float
    orientation: str
    rms: float
    alpha_plus: float | None = None
    alpha_minus: float | None = None
    alpha: complex | None = None
    a: float | None = None

    def evaluate(self, x):
        """The fitted conjugacy at x (real or complex samples)."""
        x = np.asarray(x)
        if self.alpha is not None:
            z = np.conj(x) if self.orientation == REVERSING else x
            r = np.abs(x)
            return self.alpha * z * r ** (self.t - 1) * np.exp(1j * self.a * np.log(r))
        out = np.empty_like(x, dtype=float)
        pos = x > 0
        if np.any(pos):
            out[pos] = self.alpha_plus * x[pos] ** self.t
        if np.any(~pos):
            out[~pos] = self.alpha_minus * np.abs(x[~pos]) ** self.t
        return out

    def to_json(self) -> dict:
        d = {"t": self.t, "orientation": self.orientation, "rms": self.rms}
        if self.alpha is not None:
            d.update(alpha=[self.alpha.real, self.alpha.imag], a=self.a)
        else:
            d.update(alpha_plus=self.alpha_plus, alpha_minus=self.alpha_minus)
        return d


def _split_samples(samples, values):
    if values is None:
        arr = np.asarray(samples)
        return arr[:, 0], arr[:, 1]
    return np.asarray(samples), np.asarray(values)


def fit_power_law_real(samples, values=None) -> PowerLawFit:
    """Least squares on log|h| = log|alpha_side| + t log|x| with one intercept per side of 0.

    Accepts (x, h(x)) pairs or two arrays.  Zero samples are discarded.
    """
    x, y = _split_samples(samples, values)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x != 0) & (y != 0)
    x, y = x[keep], y[keep]
    if len(x) < 3:
        raise InsufficientSamples(f"need at least 3 nonzero samples, got {len(x)}")
    pos = x > 0
    sides = [s for s in (pos, ~pos) if s.any()]
    cols = [np.log(np.abs(x))] + [s.astype(float) for s in sides]
    design = np.stack(cols, axis=1)
    if np.ptp(np.log(np.abs(x))) == 0:
        raise InsufficientSamples("all samples have the same modulus")
    coef, *_ = np.linalg.lstsq(design, np.log(np.abs(y)), rcond=None)
    t = float(coef[0])
    alphas = iter(np.exp(coef[1:]))
    alpha_plus = alpha_minus = None
    if pos.any():
        alpha_plus = float(next(alphas) * np.sign(np.median(y[pos])))
    if (~pos).any():
        alpha_minus = float(next(alphas) * np.sign(np.median(y[~pos])))
    orientation = PRESERVING
    if (alpha_plus is not None and alpha_plus < 0) or (alpha_plus is None and alpha_minus > 0):
        orientation = REVERSING
    fit = PowerLawFit(t, orientation, 0.0, alpha_plus, alpha_minus)
    rms = float(np.sqrt(np.mean((np.log(np.abs(fit.evaluate(x))) - np.log(np.abs(y))) ** 2)))
    return PowerLawFit(t, orientation, rms, alpha_plus, alpha_minus)


def _fit_complex_oriented(z: np.ndarray, hz: np.ndarray, orientation: str,
                          max_step: float) -> PowerLawFit:
    r = np.abs(z)
    log_r = np.log(r)
    order = np.argsort(log_r)
    zz = np.conj(z) if orientation == REVERSING else z
    ratio = hz[order] / zz[order]
    lr = log_r[order]
    # log|h/z| = log|alpha| + (t - 1) log|z|
    A = np.stack([lr, np.ones_like(lr)], axis=1)
    (tm1, log_alpha), *_ = np.linalg.lstsq(A, np.log(np.abs(ratio)), rcond=None)
    phase = np.unwrap(np.angle(ratio))
    jumps = np.abs(np.diff(np.angle(ratio)))
    jumps = np.minimum(jumps, 2 * np.pi - jumps)
    if jumps.size and jumps.max() > max_step:
        raise BranchAmbiguity(f"phase changes by {jumps.max():.3f} rad between neighbouring samples; "
                              "sampling too sparse to unwrap")
    (a, arg_alpha), *_ = np.linalg.lstsq(A, phase, rcond=None)
    alpha = complex(np.exp(log_alpha) * np.exp(1j * arg_alpha))
    fit = PowerLawFit(float(tm1 + 1), orientation, 0.0, alpha=alpha, a=float(a))
    rel = np.abs(fit.evaluate(z) - hz) / np.abs(hz)
    return PowerLawFit(fit.t, orientation, float(np.sqrt(np.mean(rel ** 2))), alpha=alpha, a=fit.a)


def fit_complex_form(samples, values=None, orientation: str | None = None,
                     max_phase_step: float = np.pi / 2) -> PowerLawFit:
    """Fit h(z) = alpha z |z|^(t-1) exp(i a log|z|), or with conj(z) when reversing.

    Without a declared orientation both are tried and the smaller rms wins.
    Phases are unwrapped along increasing |z|; a jump above
    ``max_phase_step`` between neighbours raises BranchAmbiguity.
    """
    z, hz = _split_samples(samples, values)
    z = np.asarray(z, dtype=complex)
    hz = np.asarray(hz, dtype=complex)
    keep = (z != 0) & (hz != 0)
    z, hz = z[keep], hz[keep]
    if len(z) < 3:
        raise InsufficientSamples(f"need at least 3 nonzero samples, got {len(z)}")
    if np.ptp(np.log(np.abs(z))) == 0:
        raise InsufficientSamples("all samples have the same modulus")
    if orientation is not None:
        return _fit_complex_oriented(z, hz, orientation, max_phase_step)
    fits, errors = [], []
    for o in (PRESERVING, REVERSING):
        try:
            fits.append(_fit_complex_oriented(z, hz, o, max_phase_step))
        except BranchAmbiguity as exc:
            errors.append(exc)
    if not fits:
        raise errors[0]
    return min(fits, key=lambda f: f.rms)


def exponent_relation_defect(fit: PowerLawFit, rho_multipliers: Sequence[float],
                             rho_star_multipliers: Sequence[float]) -> float:
    """max_j |log rho*_j - t log rho_j| for linear actions x -> lambda x on R+.

    Zero means rho* = rho^t holds on the generators, hence on the group.
    """
    lam = np.log(np.abs(np.asarray(rho_multipliers, dtype=float)))
    lam_star = np.log(np.abs(np.asarray(rho_star_multipliers, dtype=float)))
    return float(np.abs(lam_star - fit.t * lam).max())


def conjugacy_samples_from_action(rho_multipliers: Sequence[float], rho_star_multipliers: Sequence[float],
                                  base: float, base_value: float, box: int = 6):
    """Orbit data (rho(n) base, rho*(n) base_value) for |n_j| <= box.

    For a conjugacy h with h(base) = base_value, equivariance forces
    h(rho(n) base) = rho*(n) h(base); a dense action on R+ therefore
    pins h down from one sample.
    """
    lam = np.asarray(rho_multipliers, dtype=float)
    lam_star = np.asarray(rho_star_multipliers, dtype=float)
    k = len(lam)
    grids = np.meshgrid(*[np.arange(-box, box + 1)] * k, indexing="ij")
    ns = np.stack([g.ravel() for g in grids], axis=1)
    xs = base * np.prod(lam[None, :] ** ns, axis=1)
    ys = base_value * np.prod(lam_star[None, :] ** ns, axis=1)
    return xs, ys
