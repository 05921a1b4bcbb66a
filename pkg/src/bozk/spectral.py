"""Periodic pseudospectral discretization of the plane.

The plane is replaced by the box [-lx, lx) x [-ly, ly) sampled on a uniform
grid.  Fields are stored as ``(ny, nx)`` arrays (row index = y, column index =
x).  Fourier coefficients are normalized as Fourier-series coefficients,

    u(x, y) = sum_{j,m} c[m, j] exp(i kx[j] (x + lx) + i ky[m] (y + ly)),

so that Parseval reads ``sum |u|^2 h = area * sum |c|^2``.  All transforms use
the real-to-complex layout of :func:`scipy.fft.rfft2` (x is the halved axis).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid2D",
    "RealField",
    "Spectrum2D",
    "InvalidExponentError",
    "NonHermitianSymbolError",
    "make_grid",
    "parse_p",
    "transform",
    "inverse",
    "spectral_pairing",
    "apply_multiplier",
    "hilbert_x",
    "dx",
    "frac_dx",
    "dy",
    "inner",
    "lp_norm",
    "power_nonlinearity",
    "power_values",
]

ExponentLike = Union[Fraction, int, str]


class InvalidExponentError(ValueError):
    """Raised for nonlinearity exponents outside the admissible class."""


class NonHermitianSymbolError(ValueError):
    """Raised when a multiplier would map a real field to a complex one."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def parse_p(p: ExponentLike) -> Fraction:
    """Validate a nonlinearity exponent p = k/l.

    Accepts a :class:`fractions.Fraction`, an ``int`` or a string ``"k/l"``
    (or ``"k"``).  Decimal strings and floats are rejected so that the parity
    of the denominator is never guessed.  The reduced denominator must be odd
    and 0 < p < 4.
    """
    if isinstance(p, bool):
        raise InvalidExponentError(f"invalid exponent {p!r}")
    if isinstance(p, Fraction):
        q = p
    elif isinstance(p, (int, np.integer)):
        q = Fraction(int(p))
    elif isinstance(p, str):
        s = p.strip()
        if "." in s or "e" in s.lower():
            raise InvalidExponentError(
                f"p must be a fraction string 'k/l', got decimal {p!r}")
        try:
            q = Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidExponentError(f"cannot parse p={p!r}") from exc
    else:
        raise InvalidExponentError(
            f"p must be a Fraction, int or 'k/l' string, got {type(p).__name__}")
    if q.denominator % 2 == 0:
        raise InvalidExponentError(
            f"p={q} has an even denominator; u^(p+1) is not real for u < 0")
    if not (0 < q < 4):
        raise InvalidExponentError(f"p={q} is outside (0,4)")
    return q


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on [-lx, lx) x [-ly, ly)."""

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
                raise ValueError(f"{name} must be an integer, got {n!r}")
            if n < 16 or n % 2:
                raise ValueError(f"{name}={n} must be even and >= 16")
            if not _is_pow2(int(n)):
                raise ValueError(f"{name}={n} must be a power of two")
        for name in ("lx", "ly"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name}={v} must be positive")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def hx(self) -> float:
        return 2 * self.lx / self.nx

    @property
    def hy(self) -> float:
        return 2 * self.ly / self.ny

    @property
    def h(self) -> float:
        """Cell area."""
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return 4 * self.lx * self.ly

    @cached_property
    def x(self) -> np.ndarray:
        return -self.lx + self.hx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return -self.ly + self.hy * np.arange(self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y)

    @cached_property
    def kx(self) -> np.ndarray:
        """Signed x-wavenumbers pi*j/lx in FFT order, j in [-nx/2, nx/2)."""
        return np.pi / self.lx * sfft.fftfreq(self.nx, 1.0 / self.nx)

    @cached_property
    def ky(self) -> np.ndarray:
        return np.pi / self.ly * sfft.fftfreq(self.ny, 1.0 / self.ny)

    @cached_property
    def rkx(self) -> np.ndarray:
        """Nonnegative x-wavenumbers of the rfft layout (length nx/2+1)."""
        return np.pi / self.lx * np.arange(self.nx // 2 + 1)

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each rfft column in the full spectrum."""
        w = np.full(self.nx // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    @property
    def kmax(self) -> float:
        return float(np.pi * self.nx / (2 * self.lx))


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid2D:
    return Grid2D(nx, ny, lx, ly)


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples of a function on a :class:`Grid2D`, shape ``(ny, nx)``."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(
                f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable) -> "RealField":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))

    @classmethod
    def zeros(cls, grid: Grid2D) -> "RealField":
        return cls(grid, np.zeros(grid.shape))

    def with_values(self, values: np.ndarray) -> "RealField":
        return RealField(self.grid, values)

    def __add__(self, other):
        if isinstance(other, RealField):
            _check_same_grid(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RealField):
            _check_same_grid(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, c):
        if isinstance(c, RealField):
            _check_same_grid(self, c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class Spectrum2D:
    """Half-spectrum (rfft layout) of a real field, Fourier-series normalized."""

    grid: Grid2D
    coeffs: np.ndarray = field(repr=False)


def _check_same_grid(f: RealField, g: RealField):
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def transform(f: RealField) -> Spectrum2D:
    g = f.grid
    return Spectrum2D(g, sfft.rfft2(f.values) / (g.nx * g.ny))


def inverse(s: Spectrum2D) -> RealField:
    g = s.grid
    return RealField(g, sfft.irfft2(s.coeffs * (g.nx * g.ny), s=g.shape))


def spectral_pairing(a: Spectrum2D, b: Spectrum2D) -> float:
    """Physical L2 pairing computed from coefficients (Parseval)."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    w = a.grid.weights
    return float(a.grid.area * np.sum(w * np.real(a.coeffs * np.conj(b.coeffs))))


# -- multipliers -------------------------------------------------------------

def _rmult(f: RealField, sym: np.ndarray) -> RealField:
    g = f.grid
    out = sfft.irfft2(sym * sfft.rfft2(f.values), s=g.shape)
    return RealField(g, out)


def _nyquist_hermitian(S: np.ndarray) -> np.ndarray:
    # On the Nyquist row/column +k and -k share an index; keep only the
    # Hermitian part of the symbol there.
    ny, nx = S.shape
    Sr = np.conj(np.roll(S[::-1, ::-1], 1, axis=(0, 1)))
    S = S.copy()
    S[:, nx // 2] = 0.5 * (S[:, nx // 2] + Sr[:, nx // 2])
    S[ny // 2, :] = 0.5 * (S[ny // 2, :] + Sr[ny // 2, :])
    return S


def apply_multiplier(f: RealField, sym: Callable, rtol: float = 1e-10) -> RealField:
    """Apply the Fourier multiplier ``sym(kx, ky)`` to ``f``.

    ``sym`` is evaluated on the full (unhalved) wavenumber mesh and must
    satisfy sym(-k) = conj(sym(k)).  On the Nyquist lines, where +k and -k
    alias, the Hermitian part of the symbol is used (odd symbols vanish
    there).  Raises :class:`NonHermitianSymbolError` if the output would carry
    an imaginary part larger than ``rtol`` times the field norm.
    """
    g = f.grid
    KX, KY = np.meshgrid(g.kx, g.ky)
    S = np.broadcast_to(np.asarray(sym(KX, KY), dtype=complex), g.shape)
    S = _nyquist_hermitian(S)
    out = sfft.ifft2(S * sfft.fft2(f.values))
    scale = np.linalg.norm(f.values)
    if np.linalg.norm(out.imag) > rtol * max(scale, np.finfo(float).tiny):
        raise NonHermitianSymbolError(
            "multiplier is not conjugate-symmetric; output is not real")
    return RealField(g, out.real)


def _odd_x(vals: np.ndarray) -> np.ndarray:
    vals = vals.copy()
    vals[..., -1] = 0.0
    return vals


def hilbert_x(f: RealField) -> RealField:
    """Hilbert transform in x, symbol -i sgn(kx) with sgn(0) = 0."""
    g = f.grid
    sym = _odd_x(-1j * np.sign(g.rkx))
    return _rmult(f, sym[None, :])


def dx(f: RealField) -> RealField:
    g = f.grid
    return _rmult(f, _odd_x(1j * g.rkx)[None, :])


def frac_dx(f: RealField, s: float) -> RealField:
    """Fractional x-derivative D_x^s, symbol |kx|^s (0^0 = 1)."""
    if s < 0:
        raise ValueError(f"order s={s} must be nonnegative")
    g = f.grid
    return _rmult(f, (np.abs(g.rkx) ** s)[None, :])


def dy(f: RealField, order: int = 1) -> RealField:
    """y-derivative of order 1 or 2, symbol (i ky)^order."""
    g = f.grid
    if order == 1:
        sym = 1j * g.ky
        sym[g.ny // 2] = 0.0
    elif order == 2:
        sym = -g.ky ** 2
    else:
        raise ValueError(f"unsupported derivative order {order}")
    return _rmult(f, sym[:, None])


# -- quadrature --------------------------------------------------------------

def inner(f: RealField, g: RealField) -> float:
    _check_same_grid(f, g)
    return float(np.sum(f.values * g.values) * f.grid.h)


def lp_norm(f: RealField, q: float = 2) -> float:
    if q < 1:
        raise ValueError(f"q={q} must be >= 1")
    a = np.abs(f.values)
    if q == 2:
        return float(np.sqrt(np.sum(a * a) * f.grid.h))
    return float((np.sum(a ** q) * f.grid.h) ** (1.0 / q))


# -- nonlinearity ------------------------------------------------------------

def power_values(u: np.ndarray, p: Fraction) -> np.ndarray:
    """Pointwise sgn(u)^(k+l) |u|^((k+l)/l) for p = k/l (l odd)."""
    k, l = p.numerator, p.denominator
    if l == 1:
        return u ** (k + 1)
    a = np.abs(u) ** ((k + l) / l)
    return a if (k + l) % 2 == 0 else np.sign(u) * a


def power_nonlinearity(f: RealField, p: ExponentLike) -> RealField:
    """u^(p+1) for an admissible exponent, real also where u < 0."""
    return f.with_values(power_values(f.values, parse_p(p)))
