"""
Second fundamental form coefficients a, b, c with w13 = a w1 + b w2 and
w23 = b w1 + c w2, written as functions of z = m1 x:  a = phi1(z),
b = phi2(z), c = phi3(z).

They obey the Codazzi-Mainardi pair

    phi1' + mu phi2' - phi1 - 2 mu phi2 + phi3 = 0
    phi2' + mu phi3' + mu phi1 - 2 phi2 - mu phi3 = 0

and the Gauss equation phi1 phi3 - phi2^2 = -1.  Integrating the Codazzi pair
once gives mu phi1' = (1 + mu^2) phi2 - mu^2 phi2' - beta e^{2z}.

mu = 0 has the closed form

    a = +-sqrt(gamma e^{2z} - beta^2 e^{4z} - 1),  b = beta e^{2z},
    c = +-(beta^2 e^{4z} - 1) / sqrt(gamma e^{2z} - beta^2 e^{4z} - 1).

For mu != 0, phi3 = phi1 + phi with phi = ((mu^2 - 1) phi2 + beta e^{2z}) / mu,
phi1 = (-phi +- sqrt(Delta)) / 2 with Delta = phi^2 - 4 (1 - phi2^2), and
phi2 solves a first-order ODE integrated here by RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConnectionDataError",
    "DomainError",
    "EllipticityError",
    "SingularCoefficientError",
    "ConnectionParams",
    "ConnectionSample",
    "ConnectionRun",
    "ResidualSummary",
    "validity_domain",
    "closed_form_abc",
    "printed_closed_form_c",
    "closed_form_samples",
    "phi2_rhs",
    "integrate_connection",
    "codazzi_gauss_residuals",
]

COEFF_FLOOR = 1e-12


class ConnectionDataError(ValueError):
    """Base class for invalid second-fundamental-form data."""


class DomainError(ConnectionDataError):
    pass


class EllipticityError(ConnectionDataError):
    pass


class SingularCoefficientError(ConnectionDataError):
    pass


@dataclass(frozen=True)
class ConnectionParams:
    mu: float = 0.0
    m1: int = 1
    beta: float = 0.0
    gamma: float = 2.0
    branch_phi1: int = 1
    branch_ode: int = 1

    def __post_init__(self):
        if self.m1 not in (-2, 1):
            raise ValueError(f"m1 must be -2 or 1, got {self.m1}")
        for name in ("branch_phi1", "branch_ode"):
            if getattr(self, name) not in (-1, 1):
                raise ValueError(f"{name} must be +1 or -1")
        for name in ("mu", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class ConnectionSample:
    z: float
    a: float
    b: float
    c: float
    params: ConnectionParams

    @property
    def x(self) -> float:
        return self.z / self.params.m1

    @property
    def gauss_residual(self) -> float:
        return self.a * self.c - self.b**2 + 1.0

    @property
    def degenerate(self) -> bool:
        """a c = 0 violates the nondegeneracy condition."""
        return self.a * self.c == 0.0


def validity_domain(params: ConnectionParams) -> tuple[float, float] | None:
    """Open z-interval where gamma e^{2z} - beta^2 e^{4z} - 1 > 0, or None when empty."""
    beta, gamma = params.beta, params.gamma
    if beta == 0.0:
        return (-0.5 * math.log(gamma), math.inf) if gamma > 0 else None
    disc = gamma**2 - 4.0 * beta**2
    if gamma <= 0 or disc <= 0:
        return None
    root = math.sqrt(disc)
    y_lo = (gamma - root) / (2.0 * beta**2)
    y_hi = (gamma + root) / (2.0 * beta**2)
    return 0.5 * math.log(y_lo), 0.5 * math.log(y_hi)


def _radicand(z: float, p: ConnectionParams) -> float:
    e2 = math.exp(2.0 * z)
    return p.gamma * e2 - p.beta**2 * e2 * e2 - 1.0


def closed_form_abc(z: float, params: ConnectionParams) -> ConnectionSample:
    """mu = 0 closed form at z (requires z inside :func:`validity_domain`)."""
    if params.mu != 0.0:
        raise ValueError("closed form exists only for mu = 0")
    A = _radicand(z, params)
    if not A > 0.0:
        raise DomainError(
            f"z={z:g} outside validity domain {validity_domain(params)} (radicand {A:.3g})"
        )
    e2 = math.exp(2.0 * z)
    root = math.sqrt(A)
    s = params.branch_phi1
    a = s * root
    c = s * (params.beta**2 * e2 * e2 - 1.0) / root
    return ConnectionSample(z=z, a=a, b=params.beta * e2, c=c, params=params)


def printed_closed_form_c(z: float, params: ConnectionParams) -> float:
    """c with the numerator beta^2 e^{2z} - 1, kept only for regression.

    This variant does not satisfy the Gauss equation away from z = 0.
    """
    A = _radicand(z, params)
    return params.branch_phi1 * (params.beta**2 * math.exp(2.0 * z) - 1.0) / math.sqrt(A)


def closed_form_samples(
    params: ConnectionParams, z_span: tuple[float, float], step: float
) -> list[ConnectionSample]:
    """Closed-form samples on the uniform grid z_span[0] + k*step inside the validity domain."""
    if not step > 0:
        raise ValueError("step must be positive")
    dom = validity_domain(params)
    if dom is None:
        raise DomainError(f"validity domain is empty for beta={params.beta}, gamma={params.gamma}")
    lo, hi = max(z_span[0], dom[0]), min(z_span[1], dom[1])
    k0 = math.floor((lo - z_span[0]) / step) + 1 if lo > z_span[0] else 0
    out = []
    k = k0
    while (z := z_span[0] + k * step) <= z_span[1]:
        if z >= hi:
            break
        if z > dom[0]:
            out.append(closed_form_abc(z, params))
        k += 1
    return out


def _phi(z: float, phi2: float, p: ConnectionParams) -> float:
    return ((p.mu**2 - 1.0) * phi2 + p.beta * math.exp(2.0 * z)) / p.mu


def _ode_parts(z: float, phi2: float, p: ConnectionParams) -> tuple[float, float, float, float]:
    """Return (phi, Delta, coefficient of phi2', phi2' numerator)."""
    if p.mu == 0.0:
        raise ValueError("the phi2 ODE is for mu != 0")
    phi = _phi(z, phi2, p)
    delta = phi**2 - 4.0 * (1.0 - phi2**2)
    if delta < 0.0:
        raise EllipticityError(f"Delta = {delta:.6g} < 0 at z={z:g}, phi2={phi2:g}")
    sq = math.sqrt(delta)
    s = p.branch_ode
    mu2 = p.mu**2
    coef = (1.0 + mu2) * sq + s * (mu2 - 1.0) * phi + s * 4.0 * p.mu * phi2
    num = 2.0 * (1.0 + mu2) * sq * phi2 - s * 2.0 * p.beta * math.exp(2.0 * z) * phi
    return phi, delta, coef, num


def phi2_rhs(z: float, phi2: float, params: ConnectionParams) -> float:
    """phi2' from the reduced Codazzi/Gauss system (mu != 0)."""
    _, _, coef, num = _ode_parts(z, phi2, params)
    if abs(coef) < COEFF_FLOOR:
        raise SingularCoefficientError(f"phi2' coefficient {coef:.3g} vanishes at z={z:g}")
    return num / coef


def _reconstruct(z: float, phi2: float, p: ConnectionParams) -> ConnectionSample:
    phi = _phi(z, phi2, p)
    delta = phi**2 - 4.0 * (1.0 - phi2**2)
    phi1 = 0.5 * (-phi + p.branch_phi1 * math.sqrt(max(delta, 0.0)))
    return ConnectionSample(z=z, a=phi1, b=phi2, c=phi1 + phi, params=p)


@dataclass
class ConnectionRun:
    samples: list[ConnectionSample]
    step: float
    stop_reason: str = ""
    coefficient_sign: int = 0
    min_delta: float = math.inf

    @property
    def truncated(self) -> bool:
        return bool(self.stop_reason)

    @property
    def z(self) -> np.ndarray:
        return np.array([s.z for s in self.samples])

    @property
    def b(self) -> np.ndarray:
        return np.array([s.b for s in self.samples])


def _leg(z0, b0, z_end, step, params, sign0):
    """RK4 from z0 towards z_end; returns (points, stop_reason, min_delta)."""
    n = int(round(abs(z_end - z0) / step))
    h = math.copysign(step, z_end - z0) if n else 0.0
    pts = []
    z, b = z0, b0
    min_delta = math.inf
    for i in range(1, n + 1):
        try:
            k1 = phi2_rhs(z, b, params)
            k2 = phi2_rhs(z + h / 2, b + h / 2 * k1, params)
            k3 = phi2_rhs(z + h / 2, b + h / 2 * k2, params)
            k4 = phi2_rhs(z + h, b + h * k3, params)
            b_new = b + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            z_new = z0 + i * h
            _, delta, coef, _ = _ode_parts(z_new, b_new, params)
        except ConnectionDataError as exc:
            return pts, f"stopped near z={z:g}: {exc}", min_delta
        if delta <= 0.0:
            return pts, f"Delta reached {delta:.3g} at z={z_new:g}", min_delta
        if np.sign(coef) != sign0 or abs(coef) < COEFF_FLOOR:
            return pts, f"phi2' coefficient changed sign at z={z_new:g}", min_delta
        min_delta = min(min_delta, delta)
        z, b = z_new, b_new
        pts.append((z, b))
    return pts, "", min_delta


def integrate_connection(
    z0: float,
    b0: float,
    z_span: tuple[float, float],
    step: float,
    params: ConnectionParams,
) -> ConnectionRun:
    """Integrate phi2 = b from b(z0) = b0 over ``z_span`` (mu != 0).

    The span may extend on either side of z0; both legs are integrated with
    fixed step ``step`` and merged in increasing z.  Each point is checked for
    Delta > 0 and for a constant sign of the phi2' coefficient; on violation
    the run stops and ``stop_reason`` says why.
    """
    if params.mu == 0.0:
        raise ValueError("integrate_connection needs mu != 0; use closed_form_abc")
    if params.branch_ode != params.branch_phi1:
        raise ValueError("branch_ode must equal branch_phi1 for a consistent reconstruction")
    if not step > 0:
        raise ValueError("step must be positive")
    lo, hi = sorted(z_span)
    if not lo <= z0 <= hi:
        raise ValueError(f"z0={z0} is outside z_span {z_span}")
    try:
        _, delta0, coef0, _ = _ode_parts(z0, b0, params)
        phi2_rhs(z0, b0, params)
    except ConnectionDataError as exc:
        raise ConnectionDataError(f"invalid initial point (z0={z0}, b0={b0}): {exc}") from exc
    sign0 = int(np.sign(coef0))

    fwd, why_f, dmin_f = _leg(z0, b0, hi, step, params, sign0)
    bwd, why_b, dmin_b = _leg(z0, b0, lo, step, params, sign0)
    points = bwd[::-1] + [(z0, b0)] + fwd
    return ConnectionRun(
        samples=[_reconstruct(z, b, params) for z, b in points],
        step=step,
        stop_reason="; ".join(r for r in (why_b, why_f) if r),
        coefficient_sign=sign0,
        min_delta=min(delta0, dmin_f, dmin_b),
    )


@dataclass
class ResidualSummary:
    codazzi1: np.ndarray = field(repr=False)
    codazzi2: np.ndarray = field(repr=False)
    gauss: np.ndarray = field(repr=False)
    b_zeros: int = 0

    @property
    def max_codazzi1(self) -> float:
        return float(np.abs(self.codazzi1).max())

    @property
    def max_codazzi2(self) -> float:
        return float(np.abs(self.codazzi2).max())

    @property
    def max_codazzi(self) -> float:
        return max(self.max_codazzi1, self.max_codazzi2)

    @property
    def max_gauss(self) -> float:
        return float(np.abs(self.gauss).max())

    def as_dict(self) -> dict:
        return {
            "max_codazzi1": self.max_codazzi1,
            "max_codazzi2": self.max_codazzi2,
            "max_gauss": self.max_gauss,
            "b_zeros": self.b_zeros,
            "n_samples": int(self.gauss.size),
        }


# Fourth-order first-derivative stencils: centred, and one-sided for the two end points.
_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FORWARD = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_SKEW = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _fd4(y: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(y)
    d[2:-2] = sum(c * y[k : len(y) - 4 + k] for k, c in enumerate(_CENTRAL))
    d[0] = _FORWARD @ y[:5]
    d[1] = _SKEW @ y[:5]
    d[-1] = -(_FORWARD @ y[::-1][:5])
    d[-2] = -(_SKEW @ y[::-1][:5])
    return d / h


def codazzi_gauss_residuals(samples, params: ConnectionParams | None = None) -> ResidualSummary:
    """Codazzi residuals by 4th-order finite differences in z, Gauss pointwise."""
    samples = list(samples)
    if len(samples) < 5:
        raise ValueError("need at least 5 samples")
    p = params if params is not None else samples[0].params
    z = np.array([s.z for s in samples])
    h = np.diff(z)
    if not np.allclose(h, h[0], rtol=1e-9, atol=1e-14) or h[0] <= 0:
        raise ValueError("samples must lie on a uniform, increasing z grid")
    a, b, c = (np.array([getattr(s, k) for s in samples]) for k in "abc")
    da, db, dc = _fd4(a, h[0]), _fd4(b, h[0]), _fd4(c, h[0])
    mu = p.mu
    return ResidualSummary(
        codazzi1=da + mu * db - a - 2 * mu * b + c,
        codazzi2=db + mu * dc + mu * a - 2 * b - mu * c,
        gauss=a * c - b**2 + 1.0,
        b_zeros=int(np.count_nonzero(b == 0.0)),
    )
