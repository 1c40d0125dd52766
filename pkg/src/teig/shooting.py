"""Complex-parameter initial-value solves and boundary traces.

Two linear second-order problems share one integrator:

    wave form:        phi'' + lam * rho(x) * phi = 0
    Schrodinger form: -phi'' + V(x) * phi = mu * phi

both with phi(0) = 0, phi'(0) = 1.  The spectral-parameter derivatives
d(phi)/d(lam) are co-integrated through the variational system (zero initial
data), so downstream Newton polishing and winding integrals never rely on
finite differences.

The integrator is an adaptive embedded Verner 6(5) pair (nine stages, FSAL)
stepping a whole batch of spectral parameters at once; solutions oscillate on
the sqrt(lam) scale, so batching points of comparable magnitude keeps the
step controller efficient.  Steps never cross a profile breakpoint, so the
coefficient polynomial is smooth inside every step.  Because the tableau is
real and the error norm is conjugation-invariant, integrating at conj(lam)
reproduces the conjugate trace bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import ToleranceNotMet
from .profiles import LiouvilleImage, Profile, ProfileKind

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-14

# Verner's "most robust" 6(5) pair: stage rows, 6th-order weights, and the
# 5th-order embedded weights used for the error estimate.
_C = np.array([0.0, 9 / 50, 1 / 6, 1 / 4, 53 / 100, 3 / 5, 4 / 5, 1.0, 1.0])
_A = (
    np.array([9 / 50]),
    np.array([29 / 324, 25 / 324]),
    np.array([1 / 16, 0.0, 3 / 16]),
    np.array([79129 / 250000, 0.0, -261237 / 250000, 19663 / 15625]),
    np.array([1336883 / 4909125, 0.0, -25476 / 30875, 194159 / 185250, 8225 / 78546]),
    np.array([-2459386 / 14727375, 0.0, 19504 / 30875, 2377474 / 13615875,
              -6157250 / 5773131, 902 / 735]),
    np.array([2699 / 7410, 0.0, -252 / 1235, -1393253 / 3993990, 236875 / 72618,
              -135 / 49, 15 / 22]),
    np.array([11 / 144, 0.0, 0.0, 256 / 693, 0.0, 125 / 504, 125 / 528, 5 / 72]),
)
_B6 = np.array([11 / 144, 0.0, 0.0, 256 / 693, 0.0, 125 / 504, 125 / 528, 5 / 72, 0.0])
_B5 = np.array([28 / 477, 0.0, 0.0, 212 / 441, -312500 / 366177, 2125 / 1764, 0.0,
                -2105 / 35532, 2995 / 17766])
_ERR = _B6 - _B5


class EquationKind(Enum):
    WAVE = "wave"
    SCHRODINGER = "schrodinger"


@dataclass(frozen=True)
class ShootingTrace:
    """Boundary values at x = b and their spectral-parameter derivatives."""

    lam: complex
    phi_b: complex
    dphi_b: complex
    dlam_phi_b: complex
    dlam_dphi_b: complex
    equation: EquationKind

    def conjugated(self) -> "ShootingTrace":
        return replace(
            self,
            lam=np.conj(self.lam),
            phi_b=np.conj(self.phi_b),
            dphi_b=np.conj(self.dphi_b),
            dlam_phi_b=np.conj(self.dlam_phi_b),
            dlam_dphi_b=np.conj(self.dlam_dphi_b),
        )

    def to_dict(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "lambda": c(self.lam),
            "phi_b": c(self.phi_b),
            "dphi_b": c(self.dphi_b),
            "dlam_phi_b": c(self.dlam_phi_b),
            "dlam_dphi_b": c(self.dlam_dphi_b),
            "equation": self.equation.value,
        }


class BatchTraces(NamedTuple):
    lams: np.ndarray
    phi_b: np.ndarray
    dphi_b: np.ndarray
    dlam_phi_b: np.ndarray
    dlam_dphi_b: np.ndarray


def _integrate_piece(piece, wave, lams, u, rtol, atol):
    """Advance the 4-row batch state across one polynomial piece."""
    c0, c1, c2, c3 = piece.coeffs
    x0, x1 = piece.x0, piece.x1
    span = x1 - x0

    def rhs(x, u):
        t = x - x0
        r = c0 + t * (c1 + t * (c2 + t * c3))
        du = np.empty_like(u)
        du[0] = u[1]
        du[2] = u[3]
        if wave:
            f = lams * r
            du[1] = -f * u[0]
            du[3] = -f * u[2] - r * u[0]
        else:
            g = r - lams
            du[1] = g * u[0]
            du[3] = g * u[2] - u[0]
        return du

    # oscillation / growth frequency scale on this piece
    if wave:
        coef_peak = float(np.max(np.abs(piece.value(np.linspace(x0, x1, 8)))))
        freq = np.sqrt(np.max(np.abs(lams)) * max(coef_peak, 1e-30))
    else:
        coef_peak = float(np.max(np.abs(piece.value(np.linspace(x0, x1, 8)))))
        freq = np.sqrt(np.max(np.abs(lams)) + coef_peak)
    h = min(span, 0.5 / max(freq, 1.0 / span))

    x = x0
    k = np.empty((9,) + u.shape, dtype=complex)
    k[0] = rhs(x, u)
    h_floor = max(span, abs(x1)) * 1e-15
    while x < x1:
        h = min(h, x1 - x)
        u_new = None
        for i, row in enumerate(_A):
            acc = row[0] * k[0]
            for j in range(1, len(row)):
                if row[j] != 0.0:
                    acc += row[j] * k[j]
            stage_in = u + h * acc
            if i == 7:
                u_new = stage_in  # last stage row equals the 6th-order weights
            k[i + 1] = rhs(x + _C[i + 1] * h, stage_in)
        err_vec = _ERR[0] * k[0]
        for j in range(3, 9):
            if _ERR[j] != 0.0:
                err_vec += _ERR[j] * k[j]
        scale = atol + rtol * np.maximum(np.abs(u), np.abs(u_new))
        err = float(np.max(np.abs(h * err_vec) / scale))
        if err <= 1.0:
            x += h
            u = u_new
            k[0] = k[8]
            h *= min(4.0, max(0.25, 0.9 * err ** (-1.0 / 6.0) if err > 0 else 4.0))
        else:
            h *= max(0.1, 0.9 * err ** (-1.0 / 6.0))
            k[0] = rhs(x, u)
        if h < h_floor:
            raise ToleranceNotMet(
                f"step size underflow at x = {x:.6g} (|lambda| up to "
                f"{np.max(np.abs(lams)):.3e})"
            )
    return u


def shoot_batch(profile: Profile, lams, rtol: float = DEFAULT_RTOL,
                atol: float = DEFAULT_ATOL) -> BatchTraces:
    """Boundary traces for a whole array of spectral parameters.

    This is the workhorse behind contour quadrature and real-axis scans;
    points of comparable magnitude should be batched together.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    wave = profile.kind is ProfileKind.WAVE_SPEED
    u = np.zeros((4, lams.size), dtype=complex)
    u[1] = 1.0
    for piece in profile.pieces:
        u = _integrate_piece(piece, wave, lams, u, rtol, atol)
    return BatchTraces(lams, u[0].copy(), u[1].copy(), u[2].copy(), u[3].copy())


def _single_trace(profile, lam, equation, rtol, atol) -> ShootingTrace:
    batch = shoot_batch(profile, [lam], rtol=rtol, atol=atol)
    return ShootingTrace(
        lam=complex(lam),
        phi_b=complex(batch.phi_b[0]),
        dphi_b=complex(batch.dphi_b[0]),
        dlam_phi_b=complex(batch.dlam_phi_b[0]),
        dlam_dphi_b=complex(batch.dlam_dphi_b[0]),
        equation=equation,
    )


def shoot_wave(profile: Profile, lam, rtol: float = DEFAULT_RTOL,
               atol: float = DEFAULT_ATOL) -> ShootingTrace:
    """Solve the wave-form problem for one complex spectral parameter.

    The documented envelope is |lam| <= 1e8; far beyond that the oscillation
    scale makes the solve impractically expensive (and strongly negative real
    parts eventually overflow the exponential growth).
    """
    if profile.kind is not ProfileKind.WAVE_SPEED:
        raise ValueError("shoot_wave needs a wave-speed profile")
    return _single_trace(profile, lam, EquationKind.WAVE, rtol, atol)


def shoot_schrodinger(profile: Profile, mu, rtol: float = DEFAULT_RTOL,
                      atol: float = DEFAULT_ATOL) -> ShootingTrace:
    """Solve the Schrodinger-form problem for one complex spectral parameter."""
    if profile.kind is not ProfileKind.POTENTIAL:
        raise ValueError("shoot_schrodinger needs a potential profile")
    return _single_trace(profile, mu, EquationKind.SCHRODINGER, rtol, atol)


# ---------------------------------------------------------------------------
# leading-order envelope diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeReport:
    """Measured envelope constants for one wave trace.

    ratio_phi / ratio_dphi are the residuals against the leading trigonometric
    terms, rescaled by exp(-|Im sqrt(lam)| a) (and by |sqrt(lam)| for phi) so
    a healthy solver keeps them bounded by a lambda-independent constant.
    rel_phi / rel_dphi are plain relative deviations, which should decay like
    |lam|^(-1/2) along rays avoiding the positive real axis.
    """

    lam: complex
    ratio_phi: float
    ratio_dphi: float
    rel_phi: float
    rel_dphi: float


def principal_sqrt(lam):
    """Branch with arg(sqrt(lam)) in (-pi/2, pi/2]: negative reals map to +i.

    Adding complex zero flushes a negative imaginary zero to +0.0, so exact
    negative reals land on the upper side of the cut.
    """
    return np.sqrt(np.asarray(lam, dtype=complex) + 0j)


def envelope_check(trace: ShootingTrace, image: LiouvilleImage) -> EnvelopeReport:
    """Compare a wave trace against its leading high-frequency form."""
    if trace.equation is not EquationKind.WAVE:
        raise ValueError("envelope_check applies to wave-equation traces")
    rho0 = float(image.source.value(0.0))
    rhob = float(image.source.value(image.source.b))
    a = image.a
    w = complex(principal_sqrt(trace.lam))
    if w == 0:
        lead_phi = a / (rho0 * rhob) ** 0.25
        lead_dphi = (rhob / rho0) ** 0.25
        absw = 1.0
    else:
        lead_phi = np.sin(w * a) / ((rho0 * rhob) ** 0.25 * w)
        lead_dphi = (rhob / rho0) ** 0.25 * np.cos(w * a)
        absw = abs(w)
    damp = np.exp(-abs(w.imag) * a)
    return EnvelopeReport(
        lam=trace.lam,
        ratio_phi=float(abs(trace.phi_b - lead_phi) * damp * absw),
        ratio_dphi=float(abs(trace.dphi_b - lead_dphi) * damp),
        rel_phi=float(abs(trace.phi_b - lead_phi) / max(abs(lead_phi), 1e-300)),
        rel_dphi=float(abs(trace.dphi_b - lead_dphi) / max(abs(lead_dphi), 1e-300)),
    )
