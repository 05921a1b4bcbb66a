"""Sharp constant of the anisotropic Gagliardo-Nirenberg inequality

    int |u|^{p+2} <= rho |D_x^{1/2} u|^p |u|^{(4-p)/2} |u_y|^{p/2},

evaluated from a ground state, plus the one-dimensional machinery used to
bound it from above.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
from scipy.special import beta as beta_fn

from . import io
from .functionals import FunctionalReport, quotient_from_norms
from .ground_state import GroundStateSolution, far_field_constant
from .spectral import ExponentLike, Grid2D, RealField, make_grid, parse_p, power_values

log = logging.getLogger(__name__)

__all__ = [
    "SharpConstantReport",
    "InequalityMargins",
    "Grid1D",
    "OneDProfile",
    "TruncationWarning",
    "rho_inv_routes",
    "rho_report",
    "critical_threshold",
    "random_admissible_fields",
    "verify_inequality",
    "sech_profile_1d",
    "sech_l2sq",
    "bo_profile_1d",
    "one_d_constant",
    "gn1d_quotient",
    "max_gn1d_quotient",
    "lower_bound_check",
]


def _prefactor(pf: float) -> float:
    return (4 - pf) / (2 * (pf + 2))


def rho_inv_routes(p: Fraction, rep: FunctionalReport) -> dict:
    """The four evaluations of 1/rho from a ground-state report."""
    pf = float(p)
    F = _prefactor(pf)
    q = pf / (4 - pf)
    return dict(
        d2=F * q ** (pf / 4) * rep.dxsq ** (pf / 2),
        l2=F * q ** (3 * pf / 4) * 2 ** (pf / 2) * rep.l2sq ** (pf / 2),
        action=F * q ** (pf / 4) * (2 * rep.S) ** (pf / 2),
        quotient=quotient_from_norms(p, rep.l2sq, rep.dxsq, rep.dysq, rep.J),
    )


@dataclass(frozen=True)
class SharpConstantReport:
    p: Fraction
    rho_inv_via_d2: float
    rho_inv_via_l2: float
    rho_inv_via_action: float
    rho_inv_via_quotient: float
    spread: float

    @property
    def rho_inv(self) -> float:
        """Canonical value: the L2-norm route."""
        return self.rho_inv_via_l2

    @property
    def rho(self) -> float:
        return 1.0 / self.rho_inv

    def values(self) -> list:
        return [self.rho_inv_via_d2, self.rho_inv_via_l2,
                self.rho_inv_via_action, self.rho_inv_via_quotient]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["p"] = f"{self.p.numerator}/{self.p.denominator}"
        d["rho"] = self.rho
        return d


def rho_report(gs: GroundStateSolution) -> SharpConstantReport:
    r = rho_inv_routes(gs.p, gs.report)
    vals = list(r.values())
    spread = max(abs(a - b) / min(abs(a), abs(b)) for a in vals for b in vals)
    return SharpConstantReport(
        p=gs.p, rho_inv_via_d2=r["d2"], rho_inv_via_l2=r["l2"],
        rho_inv_via_action=r["action"], rho_inv_via_quotient=r["quotient"],
        spread=spread)


def critical_threshold(rho: float) -> float:
    """Critical-case (p = 4/3) threshold: the root m of
    1 - (2 rho/(p+2)) m^{4/3} = 0, returned as m^4."""
    return (5.0 / (3.0 * rho)) ** 3


# -- ensemble verification ---------------------------------------------------

@dataclass
class InequalityMargins:
    p: Fraction
    rho_inv: float
    index: np.ndarray
    A_value: np.ndarray
    margin: np.ndarray
    rejected: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))

    @property
    def min_rel_margin(self) -> float:
        return self.min_margin / self.rho_inv

    def write_csv(self, path) -> None:
        io.write_csv(path, ["index", "A_value", "margin"],
                     zip(self.index.tolist(), self.A_value, self.margin))

    def to_dict(self) -> dict:
        return dict(p=f"{self.p.numerator}/{self.p.denominator}", rho_inv=self.rho_inv,
                    count=int(len(self.margin)), rejected=self.rejected,
                    min_margin=self.min_margin, min_rel_margin=self.min_rel_margin,
                    **self.extra)


def random_admissible_fields(rng: np.random.Generator, grid: Grid2D, p: Fraction,
                             count: int, max_tries: int = 100):
    """Localized random fields with J > 0.

    The inequality lives on the plane, so the fields must decay well inside
    the box: constants and other mean-carrying periodic fields have a zero
    D_x^{1/2} norm and would violate it.  Each field is band-limited noise
    (cutoff at a quarter of the Nyquist wavenumber) times a Gaussian window
    of random anisotropic width at most a sixth of the box, optionally plus a
    positive bump.  Yields ``(field, n_rejected)``.
    """
    KX, KY = np.meshgrid(grid.rkx, grid.ky)
    kyn = np.pi * grid.ny / (2 * grid.ly)
    band = (np.abs(KX) <= grid.kmax / 4) & (np.abs(KY) <= kyn / 4)
    X, Y = grid.mesh()
    shape = KX.shape
    made = 0
    rejected = 0
    while made < count:
        sx = grid.kmax / 4 * 10 ** rng.uniform(-1.0, 0.0)
        sy = kyn / 4 * 10 ** rng.uniform(-1.0, 0.0)
        env = np.exp(-(KX / sx) ** 2 - (KY / sy) ** 2) * band
        c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * env
        c[:, -1] = 0.0
        v = sfft.irfft2(c, s=grid.shape)
        v /= np.max(np.abs(v))
        wx = grid.lx / 6 * 10 ** rng.uniform(-0.5, 0.0)
        wy = grid.ly / 6 * 10 ** rng.uniform(-0.5, 0.0)
        win = np.exp(-(X / wx) ** 2 - (Y / wy) ** 2)
        v = v + rng.uniform(0.0, 2.0) * (rng.random() < 0.5)
        v = v * win
        v /= np.max(np.abs(v))
        J = np.sum(v * power_values(v, p))
        if not J > 0 or not np.all(np.isfinite(v)):
            rejected += 1
            if rejected > max_tries * count:
                raise RuntimeError("too many rejected fields")
            continue
        made += 1
        yield RealField(grid, v), rejected


def verify_inequality(ensemble_seed: int, count: int, p: ExponentLike, rho_inv: float,
                      grid: Optional[Grid2D] = None,
                      include: Optional[list] = None) -> InequalityMargins:
    """min over a seeded random ensemble of A(u) - 1/rho.

    ``include`` is an optional list of ``(label, A_value)`` pairs, e.g. the
    box-corrected quotient of the ground state, appended to the ensemble.
    """
    from .functionals import weinstein_quotient

    p = parse_p(p)
    if count < 1:
        raise ValueError("count must be >= 1")
    if not rho_inv > 0:
        raise ValueError("rho_inv must be positive")
    grid = grid or make_grid(64, 64, 4 * np.pi, 4 * np.pi)
    rng = np.random.default_rng(ensemble_seed)
    A = []
    rejected = 0
    for f, rejected in random_admissible_fields(rng, grid, p, count):
        A.append(weinstein_quotient(f, p))
    extra = {}
    for label, a in include or []:
        A.append(a)
        extra[f"margin_{label}"] = (a - rho_inv) / rho_inv
    A = np.asarray(A, dtype=float)
    return InequalityMargins(p=p, rho_inv=rho_inv, index=np.arange(len(A)),
                             A_value=A, margin=A - rho_inv, rejected=rejected,
                             extra=extra)


# -- one-dimensional profiles ------------------------------------------------

class TruncationWarning(UserWarning):
    """The 1D profile is not small at the domain boundary."""


@dataclass(frozen=True)
class Grid1D:
    n: int
    L: float

    def __post_init__(self):
        if self.n < 16 or self.n % 2:
            raise ValueError("n must be even and >= 16")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return 2 * self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return np.pi / self.L * sfft.fftfreq(self.n, 1.0 / self.n)


@dataclass(frozen=True, eq=False)
class OneDProfile:
    grid: Grid1D
    values: np.ndarray = field(repr=False)
    r: float            # nonlinearity power: D^beta psi + psi - psi^r = 0
    beta: float
    l2norm: float
    residual: float
    iterations: int = 0
    m_factor: float = 1.0
    boundary: float = 0.0
    tail: float = 0.0   # top-decile spectral amplitude relative to the peak

    @property
    def l2sq(self) -> float:
        return self.l2norm ** 2


def _l2(grid: Grid1D, v: np.ndarray) -> float:
    return float(np.sqrt(np.sum(v * v) * grid.h))


def _spos_power(v: np.ndarray, r: float) -> np.ndarray:
    return np.abs(v) ** (r - 1) * v


def sech_l2sq(p: ExponentLike) -> float:
    """Closed-form |psi_2|^2 = ((p+2)/2)^{2/p} (2/p) B(2/p, 1/2)."""
    pf = float(parse_p(p))
    return ((pf + 2) / 2) ** (2 / pf) * (2 / pf) * beta_fn(2 / pf, 0.5)


def sech_profile_1d(p: ExponentLike, grid: Grid1D) -> OneDProfile:
    """psi_2 = ((p+2)/2)^{1/p} sech^{2/p}(p y/2), solving -psi'' + psi = psi^{p+1}."""
    p = parse_p(p)
    pf = float(p)
    y = grid.x
    amp = ((pf + 2) / 2) ** (1 / pf)
    v = amp / np.cosh(pf * y / 2) ** (2 / pf)
    bnd = max(abs(v[0]), abs(v[-1])) / amp
    if bnd > 1e-12:
        raise ValueError(f"domain too small: boundary value {bnd:.2e} of peak")
    k = grid.k
    lin = sfft.ifft((1 + k ** 2) * sfft.fft(v)).real
    res = _l2(grid, lin - power_values(v, p))
    return OneDProfile(grid=grid, values=v, r=pf + 1, beta=2.0, l2norm=_l2(grid, v),
                       residual=res, boundary=bnd)


def bo_profile_1d(r: float, grid: Grid1D, tol: float = 1e-11, max_iter: int = 3000,
                  box_correction: bool = True, boundary_tol: float = 5e-6) -> OneDProfile:
    """Solve |D| psi + psi - |psi|^{r-1} psi = 0 by Petviashvili iteration.

    The |k| symbol is box-corrected at k = 0 (value s/(1-s), s = pi/(6L)) and
    the L2 norm receives the far-field correction, as in the 2D solver.
    A :class:`TruncationWarning` is issued when the profile at the boundary
    exceeds ``boundary_tol`` times its peak.
    """
    r = float(r)
    if not r > 1:
        raise ValueError("r must exceed 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    k = grid.k
    sym = 1 + np.abs(k)
    s = np.pi / (6 * grid.L)
    if box_correction:
        sym[0] = 1 + s / (1 - s)
    x = grid.x
    u = 1.5 / (1 + x ** 2)
    gamma = r / (r - 1)
    uh = sfft.fft(u)
    res = np.inf
    for it in range(1, max_iter + 1):
        nh = sfft.fft(_spos_power(u, r))
        M = np.sum(sym * np.abs(uh) ** 2) / np.real(np.sum(nh * np.conj(uh)))
        res = float(np.sqrt(np.sum(np.abs(sym * uh - nh) ** 2) * grid.h / grid.n))
        if res < tol:
            break
        uh = M ** gamma * nh / sym
        u = sfft.ifft(uh).real
    else:
        raise RuntimeError(f"1D profile did not converge (residual {res:.2e})")
    N = float(np.sum(u * u) * grid.h)
    if box_correction:
        C = np.sum(_spos_power(u, r)) * grid.h / np.pi
        N -= far_field_constant() * C * C / grid.L ** 3
    bnd = max(abs(u[0]), abs(u[-1])) / np.max(np.abs(u))
    ca = np.abs(sfft.fft(u))
    tail = float(np.max(ca[np.abs(k) > 0.9 * np.max(np.abs(k))]) / np.max(ca))
    if bnd > boundary_tol:
        warnings.warn(f"1D profile truncated: boundary value {bnd:.2e} of peak "
                      f"(L={grid.L:g}); enlarge the domain", TruncationWarning)
    return OneDProfile(grid=grid, values=u, r=r, beta=1.0, l2norm=math.sqrt(N),
                       residual=res, iterations=it, m_factor=float(M), boundary=bnd,
                       tail=tail)


def one_d_constant(r: float, beta: float, psi) -> float:
    """Best constant C_{r,beta} of |f|_r^r <= C |D^{beta/2} f|^{(r-2)/beta} |f|^{(2+r(beta-1))/beta}.

    ``psi`` is the matching profile (:class:`OneDProfile`) or its squared L2
    norm.
    """
    if not r > 2:
        raise ValueError("r must exceed 2; the constant degenerates at r = 2")
    if beta < 1:
        raise ValueError("beta must be >= 1")
    n2 = psi.l2sq if isinstance(psi, OneDProfile) else float(psi)
    q = 2 + r * (beta - 1)
    return r * beta / q * (((q / (r - 2)) ** (1 / beta)) / n2) ** ((r - 2) / 2)


def gn1d_quotient(f: np.ndarray, grid: Grid1D, r: float, beta: float) -> float:
    c = sfft.fft(f) / grid.n
    frac = 2 * grid.L * np.sum(np.abs(grid.k) ** beta * np.abs(c) ** 2)
    l2 = np.sum(f * f) * grid.h
    lr = np.sum(np.abs(f) ** r) * grid.h
    return float(lr / (frac ** ((r - 2) / (2 * beta)) * l2 ** ((2 + r * (beta - 1)) / (2 * beta))))


def max_gn1d_quotient(seed: int, count: int, r: float, beta: float,
                      grid: Optional[Grid1D] = None) -> float:
    """Largest 1D quotient over seeded localized band-limited random fields."""
    grid = grid or Grid1D(256, 8 * np.pi)
    rng = np.random.default_rng(seed)
    k = grid.k
    kc = np.pi * grid.n / (4 * grid.L)
    best = 0.0
    for _ in range(count):
        sig = kc * 10 ** rng.uniform(-1.5, 0.0)
        env = np.exp(-(k / sig) ** 2) * (np.abs(k) <= kc)
        c = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * env
        f = sfft.ifft(c).real
        f /= np.max(np.abs(f))
        # localize: the inequality is on the line, periodic means would break it
        f = (f + rng.uniform(0, 2) * (rng.random() < 0.5)) * \
            np.exp(-(grid.x / (grid.L / 6 * 10 ** rng.uniform(-0.7, 0.0))) ** 2)
        best = max(best, gn1d_quotient(f, grid, r, beta))
    return best


# -- lower bound for the L2 norm of solitary waves -----------------------------

def lower_bound_check(gs: GroundStateSolution, psi2_grid: Optional[Grid1D] = None,
                      psi1_grid: Optional[Grid1D] = None, tol_1d: float = 1e-11) -> dict:
    """Check |phi| >= |psi_2| |psi_1| and log the chain constants.

    The chain behind the bound is
        rho <= C_{p+2,2} * C_{s,1}^{(4-p)/4},   s = 2(p+4)/(4-p),
    (1D inequality in y, Hoelder and Minkowski in x, 1D inequality in x).
    Expressed through the profile norms, 1/rho >= 1/chain becomes
    |phi|^p >= Q |psi_2|^p |psi_1|^p and Q = 1 identically in p.
    """
    p = gs.p
    pf = float(p)
    if not gs.converged:
        return dict(skipped=True, reason=f"ground state unconverged (residual {gs.residual:.2e})")
    s = 2 * (pf + 4) / (4 - pf)
    r1 = s - 1  # power in |D| psi + psi - psi^r1 = 0, i.e. (3p+4)/(4-p)
    g = gs.grid
    psi2_grid = psi2_grid or Grid1D(4096, max(40.0, 60.0 / pf))
    psi2 = sech_profile_1d(p, psi2_grid)
    if psi1_grid is None:
        # higher powers give narrower profiles: refine until the spectrum is resolved
        L1 = 8 * g.lx
        psi1_grid = Grid1D(int(2 ** math.ceil(math.log2(2 * L1 * 16))), L1)
        psi1 = bo_profile_1d(r1, psi1_grid, tol=tol_1d)
        while psi1.tail > 1e-12 and psi1_grid.n < 2 ** 22:
            psi1_grid = Grid1D(2 * psi1_grid.n, L1)
            psi1 = bo_profile_1d(r1, psi1_grid, tol=tol_1d)
    else:
        psi1 = bo_profile_1d(r1, psi1_grid, tol=tol_1d)
    C2 = one_d_constant(pf + 2, 2.0, psi2)
    C1 = one_d_constant(s, 1.0, psi1)
    chain = C2 * C1 ** ((4 - pf) / 4)
    routes = rho_inv_routes(p, gs.report)
    rho = 1.0 / routes["l2"]
    # prefactors of the chain with the profile norms removed
    Fl2 = _prefactor(pf) * (pf / (4 - pf)) ** (3 * pf / 4) * 2 ** (pf / 2)
    c2 = one_d_constant(pf + 2, 2.0, 1.0)
    c1 = one_d_constant(s, 1.0, 1.0)
    Q = 1.0 / (Fl2 * c2 * c1 ** ((4 - pf) / 4))
    phi_l2 = math.sqrt(gs.report.l2sq)
    bound = Q ** (1 / pf) * psi2.l2norm * psi1.l2norm
    out = dict(
        skipped=False, p=f"{p.numerator}/{p.denominator}",
        phi_l2=phi_l2, psi2_l2=psi2.l2norm, psi1_l2=psi1.l2norm,
        psi2_l2sq_closed_form=sech_l2sq(p), bound=bound, slack=phi_l2 - bound,
        C2=C2, C1=C1, chain_constant=chain, rho=rho, rho_le_chain=bool(rho <= chain),
        Q=Q, psi1_power=r1, psi1_L=psi1_grid.L, psi1_n=psi1_grid.n,
        psi1_residual=psi1.residual, psi2_residual=psi2.residual, psi1_tail=psi1.tail,
        note="psi_1 solves |D| psi + psi - |psi|^(r-1) psi = 0; powers of the "
             "positive 1D profiles are taken on |psi|",
    )
    log.info("lower bound p=%s: C2=%.12g C1=%.12g chain=%.12g rho=%.12g Q=%.15g",
             p, C2, C1, chain, rho, Q)
    return out
