"""
Pseudospherical one-forms of the Novikov-type equation on solution frames.

For parameters (mu, m1, sign) with m1 in {-2, 1} the triad

    w1 = m dx + (2um + psi) dt
    w2 = (mu m + sign m1 R) dx + mu (2um + psi) dt
    w3 = (sign R m + m1 mu) dx + sign R (2um + psi) dt

with m = u - u_xx, R = sqrt(1 + mu^2) and psi = (4/m1) u u_x - 2u_x^2 - 2u^2
satisfies the structure equations of a surface of curvature -1 exactly when
u solves the PDE.  All quantities below are dx^dt coefficients evaluated
pointwise from the x-jet of u (u .. u_xxx) and the time derivative m_t of the
momentum density; no temporal differencing is ever used.

Orientation: for w = f dx + g dt we take dw = (g_x - f_t) dx^dt and
a^b = (a_x b_t - a_t b_x) dx^dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solver import SolutionFrame, pde_residual

__all__ = [
    "PssParams",
    "FrameForms",
    "GeometryReport",
    "CurvatureResult",
    "Genericity",
    "all_branches",
    "one_form_coeffs",
    "wedge12_coeff",
    "wedge12_closed_form",
    "structure_residuals",
    "sigma_residual",
    "sigma_matrix_from_residual",
    "gaussian_curvature",
    "classify_genericity",
    "geometry_report",
    "exponential_frame",
    "standing_wave_frame",
]

GENERICITY_TAU = 1e-8


@dataclass(frozen=True)
class PssParams:
    mu: float = 0.0
    m1: int = 1
    sign: int = 1

    def __post_init__(self):
        if self.m1 not in (-2, 1):
            raise ValueError(f"m1 must be -2 or 1, got {self.m1}")
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if not np.isfinite(self.mu):
            raise ValueError("mu must be finite")

    @property
    def root(self) -> float:
        """sqrt(1 + mu^2)."""
        return float(np.sqrt(1.0 + self.mu**2))

    @property
    def label(self) -> str:
        return f"m1={self.m1:+d},sign={'+' if self.sign > 0 else '-'},mu={self.mu:g}"


def all_branches(mus=(0.0,)) -> list[PssParams]:
    """Both m1 families times both sign branches, for each mu."""
    return [PssParams(mu, m1, s) for mu in mus for m1 in (-2, 1) for s in (1, -1)]


@dataclass(frozen=True)
class FrameForms:
    """Coefficients f[i, j] of w_{i+1} = f[i, 0] dx + f[i, 1] dt.

    ``dt_coeff_x`` holds the x-derivatives of the dt coefficients f[i, 1],
    obtained by the chain rule from the frame jet.
    """

    f: np.ndarray = field(repr=False)
    dt_coeff_x: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    params: PssParams
    t: float


def one_form_coeffs(frame: SolutionFrame, params: PssParams) -> FrameForms:
    u, ux, uxx, uxxx = frame.u, frame.u_x, frame.u_xx, frame.u_xxx
    mu, m1, s, R = params.mu, params.m1, params.sign, params.root
    m = u - uxx
    m_x = ux - uxxx
    psi = (4.0 / m1) * u * ux - 2.0 * ux**2 - 2.0 * u**2
    psi_x = (4.0 / m1) * (ux**2 + u * uxx) - 4.0 * ux * uxx - 4.0 * u * ux
    g = 2.0 * u * m + psi
    g_x = 2.0 * ux * m + 2.0 * u * m_x + psi_x

    f = np.empty((3, 2) + m.shape)
    f[0, 0], f[0, 1] = m, g
    f[1, 0], f[1, 1] = mu * m + s * m1 * R, mu * g
    f[2, 0], f[2, 1] = s * R * m + m1 * mu, s * R * g
    dg = np.stack([g_x, mu * g_x, s * R * g_x])
    return FrameForms(f=f, dt_coeff_x=dg, psi=psi, params=params, t=frame.t)


def _dx_coeff_t(forms: FrameForms, m_t) -> np.ndarray:
    # The dx coefficients are affine in m, so their t-derivatives follow from m_t.
    if m_t is None:
        raise ValueError("time-derivative data (m_t) is required")
    m_t = np.asarray(m_t, dtype=float)
    if m_t.shape != forms.psi.shape:
        raise ValueError(f"m_t has shape {m_t.shape}, expected {forms.psi.shape}")
    p = forms.params
    return np.stack([m_t, p.mu * m_t, p.sign * p.root * m_t])


def _wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[0] * b[1] - a[1] * b[0]


def wedge12_coeff(forms: FrameForms) -> np.ndarray:
    """dx^dt coefficient of w1 ^ w2, f11 f22 - f12 f21."""
    return _wedge(forms.f[0], forms.f[1])


def wedge12_closed_form(frame: SolutionFrame, params: PssParams) -> np.ndarray:
    """sign R (2 m1 u u_xx - 4 u u_x + 2 m1 u_x^2), from the u-jet directly."""
    u, ux, uxx = frame.u, frame.u_x, frame.u_xx
    m1 = params.m1
    return params.sign * params.root * (2 * m1 * u * uxx - 4 * u * ux + 2 * m1 * ux**2)


def structure_residuals(forms: FrameForms, m_t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(r1, r2, r3) = coefficients of dw1 - w3^w2, dw2 - w1^w3, dw3 - w1^w2."""
    f = forms.f
    d = forms.dt_coeff_x - _dx_coeff_t(forms, m_t)
    r1 = d[0] - _wedge(f[2], f[1])
    r2 = d[1] - _wedge(f[0], f[2])
    r3 = d[2] - _wedge(f[0], f[1])
    return r1, r2, r3


def sigma_residual(forms: FrameForms, m_t, printed: bool = False) -> np.ndarray:
    """Sigma = dOmega - Omega^Omega for Omega = 1/2 [[w2, w1 - w3], [w1 + w3, -w2]].

    Returns an array of shape (2, 2, *grid) holding dx^dt coefficients.  Each
    entry is built from the one-form coefficients independently of
    :func:`structure_residuals`.  ``printed=True`` uses w1 - w3 in both
    off-diagonal slots instead; that matrix does not vanish on solutions and
    is kept for comparison only.
    """
    f = forms.f
    df = forms.dt_coeff_x - _dx_coeff_t(forms, m_t)  # d(w_i) coefficients
    lower = -1.0 if printed else 1.0
    # Omega entries as (dx, dt) pairs and their exterior derivatives.
    omega = [
        [0.5 * f[1], 0.5 * (f[0] - f[2])],
        [0.5 * (f[0] + lower * f[2]), -0.5 * f[1]],
    ]
    d_omega = [
        [0.5 * df[1], 0.5 * (df[0] - df[2])],
        [0.5 * (df[0] + lower * df[2]), -0.5 * df[1]],
    ]
    sigma = np.empty((2, 2) + forms.psi.shape)
    for i in range(2):
        for j in range(2):
            ww = sum(_wedge(omega[i][k], omega[k][j]) for k in range(2))
            sigma[i, j] = d_omega[i][j] - ww
    return sigma


def sigma_matrix_from_residual(r1: np.ndarray, params: PssParams) -> np.ndarray:
    """Closed form of Sigma in terms of r1: (r1/2) [[mu, 1 - sR], [1 + sR, -mu]]."""
    sR = params.sign * params.root
    mat = np.array([[params.mu, 1.0 - sR], [1.0 + sR, -params.mu]])
    return 0.5 * mat[:, :, None] * np.asarray(r1)[None, None, :]


@dataclass
class Genericity:
    mask: np.ndarray = field(repr=False)
    fraction: float
    threshold: float


def classify_genericity(forms: FrameForms, tau: float = GENERICITY_TAU) -> Genericity:
    """Points where |w1^w2| > tau * max(1, ||w1^w2||_inf) are generic."""
    w = np.abs(wedge12_coeff(forms))
    thr = tau * max(1.0, float(w.max()) if w.size else 0.0)
    mask = w > thr
    return Genericity(mask=mask, fraction=float(mask.mean()) if mask.size else 0.0, threshold=thr)


@dataclass
class CurvatureResult:
    curvature: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.curvature[self.mask]

    @property
    def empty(self) -> bool:
        return not bool(self.mask.any())


def gaussian_curvature(forms: FrameForms, m_t, tau: float = GENERICITY_TAU) -> CurvatureResult:
    """K from the Gauss equation dw3 = -K w1^w2; NaN off the generic set."""
    gen = classify_genericity(forms, tau)
    dw3 = forms.dt_coeff_x[2] - _dx_coeff_t(forms, m_t)[2]
    wedge = wedge12_coeff(forms)
    K = np.full(wedge.shape, np.nan)
    K[gen.mask] = -dw3[gen.mask] / wedge[gen.mask]
    return CurvatureResult(curvature=K, mask=gen.mask)


@dataclass
class GeometryReport:
    params: PssParams
    t: float
    r1: np.ndarray = field(repr=False)
    r2: np.ndarray = field(repr=False)
    r3: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    wedge: np.ndarray = field(repr=False)
    curvature: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    E: np.ndarray = field(repr=False)

    @property
    def generic_fraction(self) -> float:
        return float(self.mask.mean())

    def summary(self) -> dict:
        K = self.curvature[self.mask]
        return {
            "branch": self.params.label,
            "m1": self.params.m1,
            "sign": self.params.sign,
            "mu": self.params.mu,
            "t": self.t,
            "generic_fraction": self.generic_fraction,
            "curvature_points": int(K.size),
            "max_abs_curvature_plus_one": float(np.abs(K + 1).max()) if K.size else None,
            "max_abs_E": float(np.abs(self.E).max()),
            "max_abs_r1": float(np.abs(self.r1).max()),
            "max_abs_r3_minus_sR_r1": float(
                np.abs(self.r3 - self.params.sign * self.params.root * self.r1).max()
            ),
            "max_abs_sigma": float(np.abs(self.sigma).max()),
        }


def geometry_report(
    frame: SolutionFrame, params: PssParams, m_t=None, tau: float = GENERICITY_TAU
) -> GeometryReport:
    """All residuals and the curvature for one frame and one branch.

    ``m_t`` defaults to u_t - u_txx carried by the frame.
    """
    if m_t is None:
        m_t = frame.m_t
    forms = one_form_coeffs(frame, params)
    r1, r2, r3 = structure_residuals(forms, m_t)
    curv = gaussian_curvature(forms, m_t, tau)
    return GeometryReport(
        params=params, t=frame.t, r1=r1, r2=r2, r3=r3,
        sigma=sigma_residual(forms, m_t), wedge=wedge12_coeff(forms),
        curvature=curv.curvature, mask=curv.mask, E=pde_residual(frame),
    )


def exponential_frame(x, t: float = 0.0, c: float = 1.0, amplitude: float = 1.0) -> SolutionFrame:
    """Exact solution u = A exp(x - c t) with analytic jet (not periodic)."""
    x = np.asarray(x, dtype=float)
    u = amplitude * np.exp(x - c * t)
    return SolutionFrame(t=t, x=x, u=u, u_x=u, u_xx=u, u_xxx=u, u_t=-c * u, u_txx=-c * u)


def standing_wave_frame(x, t: float = 0.0) -> SolutionFrame:
    """Off-shell frame u = sin(2 pi x) cos(t) with analytic derivatives."""
    x = np.asarray(x, dtype=float)
    k = 2.0 * np.pi
    s, c = np.sin(k * x), np.cos(k * x)
    ct, st = np.cos(t), np.sin(t)
    return SolutionFrame(
        t=t, x=x, u=s * ct, u_x=k * c * ct, u_xx=-k**2 * s * ct, u_xxx=-k**3 * c * ct,
        u_t=-s * st, u_txx=k**2 * s * st,
    )
