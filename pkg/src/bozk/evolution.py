"""Time integration of  u_t - H u_xx + u_xyy + (u^{p+1})_x = 0  and bound monitors.

In Fourier variables

    u_hat_t = i (xi|xi| + xi eta^2) u_hat - i xi (u^{p+1})_hat.

The linear part is integrated exactly (integrating factor) and the
nonlinear part by classical RK4.  The state carries its spectrum, with the
Nyquist row and column removed, so that the xi = 0 column (the x-mean) is
left bitwise unchanged by every step.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft

from . import io
from .functionals import FunctionalReport
from .ground_state import GroundStateSolution, dealias_factor
from .spectral import ExponentLike, Grid2D, RealField, parse_p, power_values

log = logging.getLogger(__name__)

__all__ = [
    "EvolutionState",
    "EvolutionTrace",
    "BoundCriteria",
    "BlowUpError",
    "Integrator",
    "default_dt",
    "step",
    "evolve",
    "bound_criteria",
    "begout_check",
    "energy_chain_monitor",
    "cond_values",
    "spectral_tail",
    "translate",
]


class BlowUpError(RuntimeError):
    def __init__(self, msg, state, trace=None):
        super().__init__(msg)
        self.state = state
        self.trace = trace


def _project(g: Grid2D, uh: np.ndarray) -> np.ndarray:
    uh = uh.copy()
    uh[:, -1] = 0.0
    uh[g.ny // 2, :] = 0.0
    return uh


@dataclass(frozen=True, eq=False)
class EvolutionState:
    t: float
    u: RealField
    p: Fraction
    uh: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "p", parse_p(self.p))
        if self.uh is None:
            g = self.u.grid
            uh = _project(g, sfft.rfft2(self.u.values))
            object.__setattr__(self, "uh", uh)
            object.__setattr__(self, "u", RealField(g, sfft.irfft2(uh, s=g.shape)))

    @property
    def grid(self) -> Grid2D:
        return self.u.grid


class Integrator:
    """Integrating-factor RK4 for a fixed grid, exponent and step."""

    def __init__(self, grid: Grid2D, p: ExponentLike, dt: float, dealias: bool = True):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.p = parse_p(p)
        self.dt = float(dt)
        self.pad = dealias_factor(self.p) if dealias else 1
        kx = grid.rkx.copy()
        kx[-1] = 0.0
        ky = grid.ky
        lin = 1j * (kx[None, :] * np.abs(kx)[None, :] + kx[None, :] * ky[:, None] ** 2)
        self.E = np.exp(0.5 * dt * lin)
        self.E2 = self.E * self.E
        self.ikx = -1j * kx[None, :]

    def physical(self, uh: np.ndarray) -> np.ndarray:
        """Samples of the interpolant of uh on the (padded) quadrature grid."""
        g = self.grid
        P = self.pad
        if P == 1:
            return sfft.irfft2(uh, s=g.shape)
        ny, nx = g.shape
        h = ny // 2
        big = np.zeros((P * ny, P * nx // 2 + 1), dtype=complex)
        big[:h, :nx // 2] = uh[:h, :nx // 2]
        big[-h + 1:, :nx // 2] = uh[-h + 1:, :nx // 2]
        return sfft.irfft2(big, s=(P * ny, P * nx)) * (P * P)

    def nonlinear_hat(self, uh: np.ndarray) -> np.ndarray:
        """(u^{p+1})_hat on the rfft layout, zero-padded by ``self.pad``."""
        g = self.grid
        P = self.pad
        nb = sfft.rfft2(power_values(self.physical(uh), self.p)) / (P * P)
        if P == 1:
            return _project(g, nb)
        ny, nx = g.shape
        h = ny // 2
        out = np.zeros_like(uh)
        out[:h, :nx // 2] = nb[:h, :nx // 2]
        out[-h + 1:, :nx // 2] = nb[-h + 1:, :nx // 2]
        return out

    def J(self, uh: np.ndarray) -> float:
        """int u^{p+2} on the padded grid; exact for integer p."""
        ub = self.physical(uh)
        return float(np.sum(ub * power_values(ub, self.p)) * self.grid.h / self.pad ** 2)

    def F(self, uh: np.ndarray) -> np.ndarray:
        return self.dt * self.ikx * self.nonlinear_hat(uh)

    def advance(self, uh: np.ndarray) -> np.ndarray:
        E, E2 = self.E, self.E2
        k1 = self.F(uh)
        k2 = self.F(E * (uh + 0.5 * k1))
        Eu = E * uh
        k3 = self.F(Eu + 0.5 * k2)
        k4 = self.F(E2 * uh + E * k3)
        return E2 * uh + (E2 * k1 + 2.0 * E * (k2 + k3) + k4) / 6.0


def default_dt(u: RealField, c: float = 0.5) -> float:
    """Amplitude-aware step c/(|u|_inf max|xi|); the linear part is exact."""
    m = u.max_abs()
    return c / (max(m, 1e-300) * u.grid.kmax)


def step(state: EvolutionState, dt: float, ceiling: Optional[float] = None,
         dealias: bool = True, integrator: Optional[Integrator] = None) -> EvolutionState:
    """Advance one step.  Raises :class:`BlowUpError` above ``ceiling``."""
    g = state.grid
    it = integrator or Integrator(g, state.p, dt, dealias)
    uh = it.advance(state.uh)
    u = sfft.irfft2(uh, s=g.shape)
    m = float(np.max(np.abs(u))) if u.size else 0.0
    if not np.isfinite(m) or (ceiling is not None and m > ceiling):
        raise BlowUpError(
            f"|u|_inf = {m:.3g} exceeded ceiling {ceiling:.3g} at t = {state.t + dt:.6g}",
            state)
    return EvolutionState(t=state.t + dt, u=RealField(g, u), p=state.p, uh=uh)


def translate(u: RealField, sx: float, sy: float = 0.0) -> RealField:
    """u(x - sx, y - sy) by spectral phase shift."""
    g = u.grid
    kx = g.rkx.copy()
    kx[-1] = 0.0
    ph = np.exp(-1j * (kx[None, :] * sx + g.ky[:, None] * sy))
    return RealField(g, sfft.irfft2(ph * sfft.rfft2(u.values), s=g.shape))


def _quantities(g: Grid2D, uh: np.ndarray, integ: Integrator) -> tuple:
    """Mass, energy, G and J.  J uses the integrator's quadrature grid, so the
    energy is the one conserved by the semi-discrete (Galerkin) system."""
    p = integ.p
    c2 = np.abs(uh / (g.nx * g.ny)) ** 2 * g.weights[None, :]
    mass = g.area * float(np.sum(c2))
    D = g.area * float(np.sum(np.abs(g.rkx)[None, :] * c2))
    Y = g.area * float(np.sum(g.ky[:, None] ** 2 * c2))
    J = integ.J(uh)
    G = D + Y
    return mass, 0.5 * G - J / (float(p) + 2), G, J


def spectral_tail(g: Grid2D, uh: np.ndarray) -> float:
    """Largest coefficient in the outer third of the spectrum over the peak."""
    a = np.abs(uh)
    peak = float(np.max(a))
    if peak == 0:
        return 0.0
    kx_out = g.rkx > (2.0 / 3.0) * g.kmax
    ky_out = np.abs(g.ky) > (2.0 / 3.0) * np.pi * g.ny / (2 * g.ly)
    outer = max(float(np.max(a[:, kx_out], initial=0.0)), float(np.max(a[ky_out, :], initial=0.0)))
    return outer / peak


@dataclass(frozen=True)
class BoundCriteria:
    p: Fraction
    regime: str
    a: float
    b: float
    q: float
    theta: Optional[float]
    G0: float
    rho: float
    cond_critical: Optional[bool] = None
    critical_margin: Optional[float] = None
    cond1_ok: Optional[bool] = None
    cond1_margin: Optional[float] = None
    cond2_ok: Optional[bool] = None
    cond2_margin: Optional[float] = None
    G0_below_theta: Optional[bool] = None
    a_below_bound: Optional[bool] = None
    equivalences_hold: Optional[bool] = None
    bounded: Optional[bool] = None
    # ground-state and data quantities used by the monitors
    phi_l2sq: float = float("nan")
    phi_hdot: float = float("nan")
    phi_E: float = float("nan")
    u0_l2sq: float = float("nan")
    u0_E: float = float("nan")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["p"] = f"{self.p.numerator}/{self.p.denominator}"
        return d


def cond_values(p: Fraction, u0_l2sq: float, u0_hdot: float, u0_E: float,
                phi_l2sq: float, phi_hdot: float, phi_E: float) -> dict:
    """Left and right sides of the supercritical conditions.

    Factors whose exponent 3p-4 vanishes are defined as 1, so at p = 4/3
    both conditions collapse to |u0|^4 < (4/27)|phi|^4.
    """
    pf = float(p)
    e = 3 * p - 4

    def pw(x, k):
        return 1.0 if k == 0 else x ** float(k)

    lhs1 = u0_l2sq ** (4 - pf) * pw(u0_hdot, e)
    rhs1 = (4 / 27) ** pf * phi_l2sq ** (4 - pf) * pw(phi_hdot, e)
    lhs2 = u0_l2sq ** (4 - pf) * (pw(u0_E, e) if u0_E > 0 or e == 0 else float("nan"))
    rhs2 = (4 / 27) ** pf * phi_l2sq ** (4 - pf) * pw(phi_E, e)
    return dict(lhs1=lhs1, rhs1=rhs1, lhs2=lhs2, rhs2=rhs2)


def bound_criteria(u0: RealField, p: ExponentLike, gs: GroundStateSolution,
                   rho: Optional[float] = None, u0_report: Optional[FunctionalReport] = None
                   ) -> BoundCriteria:
    """Evaluate the uniform-bound criteria for initial data ``u0``."""
    from .functionals import eval_functionals
    from .sharp_constant import rho_report

    p = parse_p(p)
    if gs.p != p:
        raise ValueError(f"ground state computed at p={gs.p}, data at p={p}")
    pf = float(p)
    if rho is None:
        rho = rho_report(gs).rho
    r0 = u0_report or eval_functionals(u0, p, box_correction=True)
    ph = gs.report
    a = 2 * r0.E
    b = 2 * rho / (pf + 2) * r0.l2sq ** ((4 - pf) / 4)
    q = 3 * pf / 4
    theta = (b * q) ** (-1 / (q - 1)) if (b > 0 and q != 1) else None
    regime = "subcritical" if p < Fraction(4, 3) else ("critical" if p == Fraction(4, 3) else "supercritical")
    kw = dict(p=p, regime=regime, a=a, b=b, q=q, theta=theta, G0=r0.hdot, rho=rho,
              phi_l2sq=ph.l2sq, phi_hdot=ph.hdot, phi_E=ph.E, u0_l2sq=r0.l2sq, u0_E=r0.E)
    if regime == "subcritical":
        return BoundCriteria(bounded=True, **kw)
    if regime == "critical":
        thr = 4 / 27 * ph.l2sq ** 2
        ok = r0.l2sq ** 2 < thr
        return BoundCriteria(cond_critical=ok, critical_margin=1 - r0.l2sq ** 2 / thr,
                             bounded=ok, **kw)
    cv = cond_values(p, r0.l2sq, r0.hdot, r0.E, ph.l2sq, ph.hdot, ph.E)
    c1 = bool(cv["lhs1"] < cv["rhs1"] and r0.E > 0)
    c2 = bool(r0.E > 0 and cv["lhs2"] < cv["rhs2"])
    hyp_G = bool(theta is not None and r0.hdot < theta)
    hyp_a = bool(theta is not None and a < (1 - 1 / q) * theta)
    equiv = (hyp_G == (cv["lhs1"] < cv["rhs1"])) and (hyp_a == c2 or r0.E <= 0)
    return BoundCriteria(
        cond1_ok=c1, cond1_margin=1 - cv["lhs1"] / cv["rhs1"],
        cond2_ok=c2, cond2_margin=(1 - cv["lhs2"] / cv["rhs2"]) if r0.E > 0 else float("nan"),
        G0_below_theta=hyp_G, a_below_bound=hyp_a, equivalences_hold=bool(equiv),
        bounded=bool(c1 and c2), **kw)


def begout_check(a: float, b: float, q: float, G: Sequence[float]) -> dict:
    """Continuity (bootstrap) argument on sampled values of G.

    With theta = (bq)^{-1/(q-1)} and f(r) = a - r + b r^q, the hypotheses are
    G(0) < theta, a < (1-1/q) theta and f(G) >= 0.  If they hold and some
    sample still reaches theta, the data set is flagged inconsistent.
    """
    if not q > 1:
        raise ValueError("q must exceed 1")
    if not b > 0:
        raise ValueError("b must be positive")
    G = np.asarray(G, dtype=float)
    theta = (b * q) ** (-1 / (q - 1))
    f = a - G + b * G ** q
    hyp_G0 = bool(G[0] < theta)
    hyp_a = bool(a < (1 - 1 / q) * theta)
    f_ok = bool(np.all(f >= 0))
    below = G < theta
    first = None if below.all() else int(np.argmax(~below))
    hyps = hyp_G0 and hyp_a and f_ok
    return dict(theta=theta, f_at_theta=a - theta * (1 - 1 / q), hyp_G0=hyp_G0,
                hyp_a=hyp_a, f_nonneg=f_ok, all_below_theta=first is None,
                first_violation=first, hypotheses_hold=hyps,
                inconsistent=bool(hyps and first is not None))


@dataclass
class EvolutionTrace:
    p: Fraction
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    G: list = field(default_factory=list)
    J: list = field(default_factory=list)
    f_of_G: list = field(default_factory=list)
    cond3_margin: list = field(default_factory=list)
    tail: list = field(default_factory=list)
    dt: float = float("nan")
    steps: int = 0
    completed: bool = False
    last_valid_t: float = 0.0
    criteria: Optional[BoundCriteria] = None
    final_state: Optional[EvolutionState] = field(default=None, repr=False)

    def _drift(self, v):
        v = np.asarray(v)
        return float(np.max(np.abs(v - v[0])) / abs(v[0])) if len(v) and v[0] != 0 else 0.0

    @property
    def mass_drift(self) -> float:
        return self._drift(self.mass)

    @property
    def energy_drift(self) -> float:
        return self._drift(self.energy)

    @property
    def resolved(self) -> bool:
        return bool(np.all(np.asarray(self.tail) < 1e-10))

    def write_csv(self, path) -> None:
        cols = ["t", "mass", "energy", "G", "J", "f_of_G", "cond3_margin"]
        io.write_csv(path, cols, zip(*(getattr(self, c) for c in cols)))

    def summary(self) -> dict:
        return dict(p=f"{self.p.numerator}/{self.p.denominator}", dt=self.dt, steps=self.steps,
                    completed=self.completed, last_valid_t=self.last_valid_t,
                    mass_drift=self.mass_drift, energy_drift=self.energy_drift,
                    max_tail=float(np.max(self.tail)) if self.tail else 0.0,
                    resolved=self.resolved,
                    criteria=self.criteria.to_dict() if self.criteria else None)


def evolve(u0: RealField, p: ExponentLike, t_final: float, dt: Optional[float] = None,
           sample_every: int = 1, *, dealias: bool = True, ceiling_factor: float = 1e6,
           criteria: Optional[BoundCriteria] = None, snapshot_every: Optional[int] = None,
           snapshot_dir=None) -> EvolutionTrace:
    """Integrate from u0 to t_final, sampling monitors every ``sample_every`` steps.

    The step is shrunk so that t_final is hit exactly.  On blow-up a
    :class:`BlowUpError` is raised whose ``trace`` holds the samples so far.
    """
    p = parse_p(p)
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    dt = dt if dt is not None else default_dt(u0)
    n = max(1, math.ceil(t_final / dt - 1e-12))
    dt = t_final / n
    g = u0.grid
    state = EvolutionState(0.0, u0, p)
    integ = Integrator(g, p, dt, dealias)
    ceiling = ceiling_factor * max(u0.max_abs(), 1e-300)
    tr = EvolutionTrace(p=p, dt=dt, criteria=criteria)
    if snapshot_every and snapshot_dir is not None:
        io.ensure_dir(snapshot_dir)

    def sample(st: EvolutionState):
        mass, E, G, J = _quantities(g, st.uh, integ)
        tr.t.append(st.t)
        tr.mass.append(mass)
        tr.energy.append(E)
        tr.G.append(G)
        tr.J.append(J)
        tr.tail.append(spectral_tail(g, st.uh))
        if criteria is not None and criteria.q > 1:
            tr.f_of_G.append(criteria.a - G + criteria.b * G ** criteria.q)
            if criteria.regime == "supercritical":
                e = float(3 * p - 4)
                lhs = criteria.u0_l2sq ** (4 - float(p)) * G ** e
                rhs = (4 / 27) ** float(p) * criteria.phi_l2sq ** (4 - float(p)) * criteria.phi_hdot ** e
                tr.cond3_margin.append(1 - lhs / rhs)
            else:
                tr.cond3_margin.append(float("nan"))
        else:
            tr.f_of_G.append(float("nan"))
            tr.cond3_margin.append(float("nan"))

    sample(state)
    for i in range(1, n + 1):
        try:
            state = step(state, dt, ceiling=ceiling, integrator=integ)
        except BlowUpError as exc:
            tr.last_valid_t = state.t
            tr.final_state = state
            exc.trace = tr
            raise
        tr.steps = i
        tr.last_valid_t = state.t
        if i % sample_every == 0 or i == n:
            sample(state)
        if snapshot_every and snapshot_dir is not None and i % snapshot_every == 0:
            io.write_snapshot(Path(snapshot_dir) / f"u_{i:06d}.bin", state.u)
    tr.completed = True
    tr.final_state = state
    return tr


def energy_chain_monitor(trace: EvolutionTrace, rho: float,
                         criteria: Optional[BoundCriteria] = None) -> dict:
    """Check f(G(t)) >= 0 along a trace (and the Hdot bound when supercritical).

    a, b, q are rebuilt from the first sample (mass and energy of u0).
    """
    p = trace.p
    pf = float(p)
    mass0 = trace.mass[0]
    a = 2 * trace.energy[0]
    b = 2 * rho / (pf + 2) * mass0 ** ((4 - pf) / 4)
    q = 3 * pf / 4
    G = np.asarray(trace.G)
    f = a - G + b * G ** q
    tol = -1e-8 * max(1.0, abs(a))
    bad = [float(t) for t, v in zip(trace.t, f) if v < tol]
    out = dict(a=a, b=b, q=q, min_f=float(np.min(f)), chain_holds=not bad,
               chain_violations=bad)
    if p > Fraction(4, 3) and criteria is not None:
        e = 3 * pf - 4
        lhs = mass0 ** (4 - pf) * G ** e
        rhs = (4 / 27) ** pf * criteria.phi_l2sq ** (4 - pf) * criteria.phi_hdot ** e
        viol = [float(t) for t, l in zip(trace.t, lhs) if not l < rhs]
        theta = (b * q) ** (-1 / (q - 1))
        out.update(theta=theta, max_G=float(np.max(G)), G_below_theta=bool(np.all(G < theta)),
                   hdot_bound_holds=not viol, hdot_bound_violations=viol,
                   min_cond3_margin=float(np.min(1 - lhs / rhs)))
    return out
