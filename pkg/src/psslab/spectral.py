"""
Periodic spectral toolbox on the unit circle [0, 1).

Conventions
-----------
A period-1 function is represented as

    f(x) = sum_n c(n) exp(2*pi*i*n*x),    c(n) = int_0^1 f(x) exp(-2*pi*i*n*x) dx

and sampled at x_j = j / N, j = 0..N-1.  Mode indices follow the FFT order
[0, 1, ..., N/2-1, -N/2, ..., -1], i.e. the set {-N/2, ..., N/2-1}.  The
discrete coefficients are ``fft(values) / N``.

Two different multipliers live here and must not be confused:

* the inverse Helmholtz operator (1 - d^2/dx^2)^{-1} uses the true symbol
  1 / (1 + 4 pi^2 n^2) of the period-1 circle;
* Sobolev norms use the weight (1 + n^2)^s on the integer index n.

Everything is a pure function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import comb
from typing import Literal

import numpy as np

__all__ = [
    "PeriodicGrid",
    "Field",
    "SpectralCoeffs",
    "transform",
    "differentiate",
    "helmholtz_solve",
    "green_kernel",
    "green_convolve",
    "sobolev_norm",
    "dealias",
]

MIN_POINTS = 8
DEFAULT_POINTS = 256
# Gregory end corrections used by the quadrature oracle (points per end).
GREGORY_ORDER = 12


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform sampling of the period-1 circle.

    Attributes:
        n_points: number of samples; even and at least 8.
    """

    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise TypeError(f"n_points must be an integer, got {n!r}")
        if n < MIN_POINTS or n % 2:
            raise ValueError(f"n_points must be even and >= {MIN_POINTS}, got {n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.n_points) / self.n_points
        x.setflags(write=False)
        return x

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode indices in FFT order."""
        n = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).round().astype(int)
        n.setflags(write=False)
        return n

    @cached_property
    def _rmodes(self) -> np.ndarray:
        return np.arange(self.n_points // 2 + 1)

    @cached_property
    def _helmholtz_symbol(self) -> np.ndarray:
        return 1.0 / (1.0 + (2.0 * np.pi * self._rmodes) ** 2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask over the rfft half-spectrum, True where |n| <= N/3."""
        return self._rmodes <= self.n_points / 3

    def _symbol(self, order: int) -> np.ndarray:
        sym = (2j * np.pi * self._rmodes) ** order
        if order % 2:
            # Odd derivatives of the Nyquist cosine are not representable.
            sym[-1] = 0.0
        return sym

    # -- array-level kernels (hot path of the solver) -------------------------

    def check(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_points,):
            raise ValueError(
                f"expected {self.n_points} samples, got array of shape {values.shape}"
            )
        return values

    def rfft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft(values)

    def irfft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfft(coeffs, n=self.n_points)

    def derivative(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        return self.irfft(self._symbol(order) * self.rfft(values))

    def derivatives(self, values: np.ndarray, max_order: int) -> list[np.ndarray]:
        """Return [f, f', ..., f^(max_order)] from a single forward transform."""
        fh = self.rfft(values)
        out = [np.asarray(values, dtype=float)]
        out += [self.irfft(self._symbol(k) * fh) for k in range(1, max_order + 1)]
        return out

    def inverse_helmholtz(self, values: np.ndarray) -> np.ndarray:
        """Apply (1 - d^2/dx^2)^{-1}."""
        return self.irfft(self._helmholtz_symbol * self.rfft(values))

    def mean(self, values: np.ndarray) -> float:
        """Trapezoidal (equivalently, zeroth-mode) integral over one period."""
        return float(np.mean(values))


@dataclass(frozen=True)
class Field:
    """Real nodal samples of a period-1 function."""

    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = self.grid.check(self.values).copy()
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func) -> "Field":
        return cls(grid, func(grid.x))

    def __len__(self):
        return self.grid.n_points


@dataclass(frozen=True)
class SpectralCoeffs:
    """Complex coefficients c(n) of exp(2 pi i n x), stored in FFT order."""

    grid: PeriodicGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex).copy()
        if coeffs.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} coefficients, got shape {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def mode(self, n: int) -> complex:
        """Coefficient of exp(2 pi i n x) for n in {-N/2, ..., N/2-1}."""
        half = self.grid.n_points // 2
        if not -half <= n < half:
            raise IndexError(f"mode {n} outside [-{half}, {half})")
        return complex(self.coeffs[n % self.grid.n_points])

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        c = self.coeffs
        mirrored = np.conj(c[(-self.grid.modes) % self.grid.n_points])
        scale = max(1.0, float(np.abs(c).max()))
        return bool(np.abs(c - mirrored).max() <= rtol * scale)


def transform(
    data: Field | SpectralCoeffs,
    direction: Literal["forward", "inverse"] = "forward",
) -> SpectralCoeffs | Field:
    """Move between nodal samples and Fourier coefficients.

    ``forward`` maps a :class:`Field` to its :class:`SpectralCoeffs`;
    ``inverse`` maps coefficients back to a real field (the imaginary part of
    the synthesis, pure round-off for Hermitian input, is discarded).
    """
    if direction == "forward":
        if not isinstance(data, Field):
            raise TypeError("forward transform expects a Field")
        return SpectralCoeffs(data.grid, np.fft.fft(data.values) / data.grid.n_points)
    if direction == "inverse":
        if not isinstance(data, SpectralCoeffs):
            raise TypeError("inverse transform expects SpectralCoeffs")
        values = np.fft.ifft(data.coeffs * data.grid.n_points).real
        return Field(data.grid, values)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def differentiate(f: Field, order: int = 1) -> Field:
    """Exact derivative of the trigonometric interpolant, multiplier (2 pi i n)^order."""
    if order not in (1, 2, 3, 4, 5):
        raise ValueError(f"order must be in 1..5, got {order}")
    return Field(f.grid, f.grid.derivative(f.values, order))


def helmholtz_solve(f: Field) -> Field:
    """Solve (1 - d^2/dx^2) g = f on the circle by the spectral multiplier."""
    return Field(f.grid, f.grid.inverse_helmholtz(f.values))


def green_kernel(x):
    """Periodic Green's function of 1 - d^2/dx^2 on the unit circle.

    g(x) = cosh(x - floor(x) - 1/2) / (2 sinh(1/2))
    """
    x = np.asarray(x, dtype=float)
    g = np.cosh(x - np.floor(x) - 0.5) / (2.0 * np.sinh(0.5))
    return g if g.ndim else float(g)


@lru_cache(maxsize=None)
def _gregory_weights(q: int) -> tuple[float, ...]:
    """Left-end corrections a_0..a_{q-1} added to the trapezoid weights.

    Chosen so the corrected rule reproduces the Euler-Maclaurin end terms
    exactly for polynomials of degree < q (exact rational arithmetic).
    """
    bern = [Fraction(1)]
    for m in range(1, q + 1):
        bern.append(-sum(comb(m + 1, k) * bern[k] for k in range(m)) / (m + 1))
    rows = [
        [Fraction(j) ** d for j in range(q)] + [bern[d + 1] / (d + 1) if d % 2 else Fraction(0)]
        for d in range(q)
    ]
    rows[0][0] = Fraction(1)  # 0**0
    for col in range(q):
        piv = next(r for r in range(col, q) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [v / p for v in rows[col]]
        for r in range(q):
            if r != col and rows[r][col] != 0:
                fac = rows[r][col]
                rows[r] = [a - fac * b for a, b in zip(rows[r], rows[col])]
    return tuple(float(rows[d][q]) for d in range(q))


@lru_cache(maxsize=32)
def _green_stencil(n_points: int) -> np.ndarray:
    h = 1.0 / n_points
    q = min(GREGORY_ORDER, n_points // 2)
    a = np.array(_gregory_weights(q))
    w = np.ones(n_points + 1)
    w[0] = w[-1] = 0.5
    w[:q] += a
    w[n_points - q + 1 :] += a[::-1]
    j = np.arange(n_points + 1)
    # On y in [x - 1, x] the kernel g(x - y) = cosh(1/2 - j h) / (2 sinh 1/2) is smooth.
    c = h * w * np.cosh(0.5 - j * h) / (2.0 * np.sinh(0.5))
    stencil = c[:n_points].copy()
    stencil[0] += c[n_points]
    stencil.setflags(write=False)
    return stencil


def green_convolve(f: Field) -> Field:
    """Periodic convolution (g * f)(x) = int_0^1 g(x - y) f(y) dy by quadrature.

    The kernel has a derivative jump at x = y, so the period is split there
    and the smooth piece is integrated with an end-corrected (Gregory)
    trapezoidal rule on the grid nodes.  No FFTs are involved; this is the
    independent check on :func:`helmholtz_solve`.
    """
    n = f.grid.n_points
    stencil = _green_stencil(n)
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return Field(f.grid, f.values[idx] @ stencil)


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm sqrt(sum_n (1 + n^2)^s |c(n)|^2) over integer mode indices n."""
    c = np.fft.fft(f.values) / f.grid.n_points
    weights = (1.0 + f.grid.modes.astype(float) ** 2) ** s
    return float(np.sqrt(np.sum(weights * np.abs(c) ** 2)))


def dealias(coeffs: SpectralCoeffs) -> SpectralCoeffs:
    """2/3-rule truncation: zero every mode with |n| > N/3."""
    keep = np.abs(coeffs.grid.modes) <= coeffs.grid.n_points / 3
    return SpectralCoeffs(coeffs.grid, np.where(keep, coeffs.coeffs, 0.0))
