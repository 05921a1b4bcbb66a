"""Scalar functionals of a field and the anisotropic scaling normalization.

For a nonlinearity exponent p the functionals are

    I(u) = 1/2 (|u|^2 + |D_x^{1/2} u|^2 + |u_y|^2)
    J(u) = int u^{p+2}
    S(u) = I(u) - J(u)/(p+2)
    K(u) = 1/2 (|u|^2 + |u_y|^2) - J(u)/(p+2)
    E(u) = 1/2 (|D_x^{1/2} u|^2 + |u_y|^2) - J(u)/(p+2)

and the Weinstein quotient

    A(u) = |D_x^{1/2} u|^p |u_y|^{p/2} |u|^{(4-p)/2} / J(u),

whose infimum over fields with J > 0 is the reciprocal sharp constant.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .spectral import (ExponentLike, Grid2D, RealField, parse_p, power_values)

__all__ = [
    "FunctionalReport",
    "ScalingTriple",
    "InadmissibleFieldError",
    "norms",
    "report_from_norms",
    "quotient_from_norms",
    "eval_functionals",
    "weinstein_quotient",
    "resample",
    "scale_normalize",
]


class InadmissibleFieldError(ValueError):
    """Raised when a field has J(u) <= 0 or degenerate norms."""


@dataclass(frozen=True)
class FunctionalReport:
    p: Fraction
    l2sq: float
    dxsq: float
    dysq: float
    hdot: float
    hfull: float
    J: float
    I: float
    S: float
    K: float
    E: float
    A: Optional[float] = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["p"] = f"{self.p.numerator}/{self.p.denominator}"
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionalReport":
        d = dict(d)
        d["p"] = parse_p(str(d["p"]))
        return cls(**d)


@dataclass(frozen=True, eq=False)
class ScalingTriple:
    kappa: float
    xi: float
    mu: float
    omega: RealField


def norms(u: RealField, box_correction: bool = False) -> dict:
    """Squared L2, D_x^{1/2} and d/dy norms computed in Fourier space.

    The periodic sum over |xi| misses the kink of |xi| at 0; for a field
    decaying inside the box the Euler-Maclaurin correction is
    (pi/(6 lx)) * area * sum_eta |c(0, eta)|^2, applied with ``box_correction``.
    """
    g = u.grid
    c = sfft.rfft2(u.values) / (g.nx * g.ny)
    a2 = g.weights[None, :] * (c.real ** 2 + c.imag ** 2)
    ky2 = g.ky ** 2
    ky2[g.ny // 2] = 0.0  # matches dy(., 1), which drops the Nyquist row
    dxsq = g.area * np.sum(np.abs(g.rkx)[None, :] * a2)
    if box_correction:
        dxsq += np.pi / (6 * g.lx) * g.area * np.sum(a2[:, 0])
    return dict(
        l2sq=float(np.sum(u.values ** 2) * g.h),
        dxsq=float(dxsq),
        dysq=float(g.area * np.sum(ky2[:, None] * a2)),
    )


def quotient_from_norms(p: Fraction, l2sq: float, dxsq: float, dysq: float,
                        J: float) -> float:
    pf = float(p)
    if not J > 0:
        raise InadmissibleFieldError(f"J(u)={J:.3g} <= 0; quotient undefined")
    return (dxsq ** (pf / 2) * dysq ** (pf / 4) * l2sq ** ((4 - pf) / 4)) / J


def report_from_norms(p: ExponentLike, l2sq: float, dxsq: float, dysq: float,
                      J: float) -> FunctionalReport:
    p = parse_p(p)
    c = 1.0 / (float(p) + 2)
    hdot = dxsq + dysq
    hfull = l2sq + hdot
    A = quotient_from_norms(p, l2sq, dxsq, dysq, J) if J > 0 else None
    return FunctionalReport(
        p=p, l2sq=l2sq, dxsq=dxsq, dysq=dysq, hdot=hdot, hfull=hfull, J=J,
        I=0.5 * hfull,
        S=0.5 * hfull - c * J,
        K=0.5 * (l2sq + dysq) - c * J,
        E=0.5 * hdot - c * J,
        A=A,
    )


def eval_functionals(u: RealField, p: ExponentLike,
                     box_correction: bool = False) -> FunctionalReport:
    p = parse_p(p)
    n = norms(u, box_correction)
    J = float(np.sum(u.values * power_values(u.values, p)) * u.grid.h)
    return report_from_norms(p, n["l2sq"], n["dxsq"], n["dysq"], J)


def weinstein_quotient(u: RealField, p: ExponentLike, box_correction: bool = False) -> float:
    p = parse_p(p)
    r = eval_functionals(u, p, box_correction)
    if r.A is None:
        raise InadmissibleFieldError(f"J(u)={r.J:.3g} <= 0; field inadmissible")
    return r.A


# -- spectral resampling -----------------------------------------------------

def _eval_matrix(n: int, L: float, pts: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant of n samples on [-L, L)."""
    k = np.pi / L * sfft.fftfreq(n, 1.0 / n)
    E = np.exp(1j * np.outer(pts + L, k))
    E[:, n // 2] = np.cos(np.pi * n / (2 * L) * (pts + L))
    E[(pts < -L) | (pts >= L)] = 0.0  # the field is a plane function cut to the box
    return E


def resample(u: RealField, xi: float, mu: float,
             target: Optional[Grid2D] = None, chunk: int = 512) -> RealField:
    """Sample x, y -> u(xi*x, mu*y) on ``target`` (default: u's grid).

    Uses the trigonometric interpolant of u, so the result is spectrally
    accurate for resolved fields.  Points outside the box evaluate to 0, since
    u stands for a decaying function on the plane rather than a periodic one.
    """
    g = u.grid
    t = target or g
    C = sfft.fft2(u.values) / (g.nx * g.ny)
    B = _eval_matrix(g.ny, g.ly, mu * t.y) @ C  # (t.ny, g.nx)
    out = np.empty(t.shape)
    for s in range(0, t.nx, chunk):
        Ex = _eval_matrix(g.nx, g.lx, xi * t.x[s:s + chunk])
        out[:, s:s + chunk] = (B @ Ex.T).real
    return RealField(t, out)


def scale_normalize(u: RealField, p: ExponentLike,
                    phi_report: FunctionalReport) -> ScalingTriple:
    """Rescale u to omega = kappa*u(xi x, mu y) with the ground-state norms.

    The targets are |omega_y|^2 = d/2, J(omega) = (p+2)/p d and
    |omega|^2 = (4-p)/(2p) d with d = |D_x^{1/2} phi|^2, which force
    K(omega) = 0.  kappa and mu have closed forms; xi follows from the
    J-target.
    """
    p = parse_p(p)
    pf = float(p)
    r = eval_functionals(u, p)
    if not r.J > 0:
        raise InadmissibleFieldError(f"J(u)={r.J:.3g} <= 0")
    if not r.dysq > 0 or not r.l2sq > 0:
        raise InadmissibleFieldError("vanishing |u_y|; mu undefined")
    d = phi_report.dxsq
    kappa = (2 * (pf + 2) / (4 - pf) * r.l2sq / r.J) ** (1 / pf)
    mu = ((4 - pf) / pf * r.dysq / r.l2sq) ** -0.5
    J_target = (pf + 2) / pf * d
    xi = kappa ** (pf + 2) * r.J / (mu * J_target)
    omega = resample(u, xi, mu) * kappa
    return ScalingTriple(kappa=kappa, xi=xi, mu=mu, omega=omega)
