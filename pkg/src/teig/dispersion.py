"""Dispersion functions whose zeros are the special transmission eigenvalues.

For a wave-speed profile the dispersion function is

    D(lam) = sin(sqrt(lam) b)/sqrt(lam) * phi'(b; lam)
             - cos(sqrt(lam) b) * phi(b; lam),

an entire function of order at most 1/2 with D(0) = 0; the Schrodinger
analogue replaces the boundary traces and is generically nonzero at the
origin.  The trigonometric prefactors are even functions of sqrt(lam), so the
assembled value is independent of the square-root branch; near the origin
they are evaluated by six-term series to avoid cancellation (D(0) = 0
exactly, so relative accuracy there is otherwise destroyed).

The Maclaurin data around the origin comes from exact moment formulas:

    D1 = b^3/3 - M2(b),
    D2 = -b^5/30 + b*M1(b)^2 - M1(b)*M2(b) - (b^3/3)*M1(b)
         + (b^2/2)*M2(b) - integral_0^b M1(z)^2 dz,

with M_k(x) the weighted moments of the profile; every term is a piecewise
polynomial functional and is integrated in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateExpansion
from .profiles import (
    Profile,
    ProfileKind,
    first_moment_square_integral,
    moments,
)
from .shooting import EquationKind, shoot_batch

SMALL_ARG = 1e-3          # |lam * L^2| below which the series path is used
ORIGIN_ORDER_REL = 1e-10  # threshold for deciding the order of the origin zero


@dataclass(frozen=True)
class DispersionValue:
    lam: complex
    value: complex
    dvalue: complex
    equation: EquationKind


@dataclass(frozen=True)
class MaclaurinData:
    """Low-order expansion of the dispersion function at the origin.

    d is the order of the zero at 0, coeffs = [D0, D1, D2], gamma the
    normalization constant of the zero-product representation (gamma = D_d),
    and sum_rule_rhs = D2 feeds the reciprocal-zero sum identity
    -gamma * sum(mult_j / lam_j) = D2 that holds when d = 1.
    """

    d: int
    coeffs: tuple[float, float, float]
    gamma: float
    sum_rule_rhs: float


def phase_factors(lam, length: float):
    """(s, c, ds/dlam, dc/dlam) with s = sin(sqrt(lam) L)/sqrt(lam), c = cos(sqrt(lam) L).

    Both are entire and even in sqrt(lam); a six-term series takes over for
    small |lam| L^2 where the closed forms cancel.
    """
    lam = np.asarray(lam, dtype=complex)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    L = float(length)
    u = lam * L * L
    s = np.empty_like(lam)
    c = np.empty_like(lam)
    ds = np.empty_like(lam)
    dc = np.empty_like(lam)

    small = np.abs(u) < SMALL_ARG
    if np.any(small):
        us = u[small]
        s[small] = L * (1 + us * (-1 / 6 + us * (1 / 120 + us * (-1 / 5040 + us * (1 / 362880 - us / 39916800)))))
        c[small] = 1 + us * (-1 / 2 + us * (1 / 24 + us * (-1 / 720 + us * (1 / 40320 - us / 3628800))))
        ds[small] = L**3 * (-1 / 6 + us * (1 / 60 + us * (-1 / 1680 + us * (1 / 90720 - us / 7983360))))
        dc[small] = L**2 * (-1 / 2 + us * (1 / 12 + us * (-1 / 240 + us * (1 / 10080 - us / 725760))))
    big = ~small
    if np.any(big):
        ub = lam[big]
        w = np.sqrt(ub + 0j)
        sb = np.sin(w * L) / w
        cb = np.cos(w * L)
        s[big] = sb
        c[big] = cb
        ds[big] = (L * cb - sb) / (2.0 * ub)
        dc[big] = -(L / 2.0) * sb
    if scalar:
        return s[0], c[0], ds[0], dc[0]
    return s, c, ds, dc


@dataclass(frozen=True)
class DispersionEvaluator:
    """Batched dispersion evaluator: lams -> (values, dvalues).

    The scalar call returns a DispersionValue; `batch` is the interface the
    zero-counting machinery uses, so contour nodes are integrated together.
    `term_scale`, when available, returns the magnitude of the two terms
    whose difference forms the dispersion value; an identically-zero
    function is recognized by |D| collapsing relative to that scale (the
    absolute floor alone is blind to solver noise).
    """

    batch: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    equation: EquationKind
    length_scale: float
    label: str = ""
    term_scale: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, lam) -> DispersionValue:
        vals, dvals = self.batch(np.array([lam], dtype=complex))
        return DispersionValue(complex(lam), complex(vals[0]), complex(dvals[0]),
                               self.equation)

    def values(self, lams) -> np.ndarray:
        return self.batch(np.asarray(lams, dtype=complex))[0]


def dispersion_evaluator(profile: Profile, rtol: float = 1e-12,
                         atol: float = 1e-14) -> DispersionEvaluator:
    """Evaluator backed by the shooting solver, for either equation kind."""
    b = profile.b
    equation = (EquationKind.WAVE if profile.kind is ProfileKind.WAVE_SPEED
                else EquationKind.SCHRODINGER)

    def batch(lams):
        lams = np.asarray(lams, dtype=complex)
        tr = shoot_batch(profile, lams, rtol=rtol, atol=atol)
        s, c, ds, dc = phase_factors(lams, b)
        value = s * tr.dphi_b - c * tr.phi_b
        dvalue = ds * tr.dphi_b + s * tr.dlam_dphi_b - dc * tr.phi_b - c * tr.dlam_phi_b
        return value, dvalue

    def term_scale(lams):
        lams = np.asarray(lams, dtype=complex)
        tr = shoot_batch(profile, lams, rtol=1e-9, atol=1e-12)
        s, c, _, _ = phase_factors(lams, b)
        return np.abs(s * tr.dphi_b) + np.abs(c * tr.phi_b)

    return DispersionEvaluator(batch=batch, equation=equation, length_scale=b,
                               label=profile.name, term_scale=term_scale)


def constant_rho_evaluator(rho: float, b: float) -> DispersionEvaluator:
    """Closed-form evaluator for a constant wave speed (no ODE solve)."""
    if rho <= 0:
        raise ValueError("constant wave-speed value must be positive")

    def batch(lams):
        lams = np.asarray(lams, dtype=complex)
        s1, c1, ds1, dc1 = phase_factors(lams, b)
        s2, c2, ds2, dc2 = phase_factors(lams * rho, b)
        value = s1 * c2 - c1 * s2
        dvalue = ds1 * c2 + s1 * dc2 * rho - dc1 * s2 - c1 * ds2 * rho
        return value, dvalue

    def term_scale(lams):
        lams = np.asarray(lams, dtype=complex)
        s1, c1, _, _ = phase_factors(lams, b)
        s2, c2, _, _ = phase_factors(lams * rho, b)
        return np.abs(s1 * c2) + np.abs(c1 * s2)

    return DispersionEvaluator(batch=batch, equation=EquationKind.WAVE,
                               length_scale=b, label=f"const-rho[{rho:g}]",
                               term_scale=term_scale)


def constant_potential_evaluator(v: float, b: float) -> DispersionEvaluator:
    """Closed-form evaluator for a constant potential (oracle for tests)."""

    def batch(mus):
        mus = np.asarray(mus, dtype=complex)
        s1, c1, ds1, dc1 = phase_factors(mus, b)
        s2, c2, ds2, dc2 = phase_factors(mus - v, b)
        value = s1 * c2 - c1 * s2
        dvalue = ds1 * c2 + s1 * dc2 - dc1 * s2 - c1 * ds2
        return value, dvalue

    return DispersionEvaluator(batch=batch, equation=EquationKind.SCHRODINGER,
                               length_scale=b, label=f"const-V[{v:g}]")


def eval_D(profile: Profile, lam) -> DispersionValue:
    """Dispersion value and lambda-derivative for a wave-speed profile."""
    if profile.kind is not ProfileKind.WAVE_SPEED:
        raise ValueError("eval_D needs a wave-speed profile; see eval_D_schrodinger")
    return dispersion_evaluator(profile)(lam)


def eval_D_schrodinger(profile: Profile, mu) -> DispersionValue:
    """Dispersion value for a potential; generically nonzero at the origin."""
    if profile.kind is not ProfileKind.POTENTIAL:
        raise ValueError("eval_D_schrodinger needs a potential profile")
    return dispersion_evaluator(profile)(mu)


def eval_D_constant_rho(rho: float, b: float, lam) -> complex:
    """Closed form for constant wave speed, removable singularity included."""
    return complex(constant_rho_evaluator(rho, b)(lam).value)


# ---------------------------------------------------------------------------
# Maclaurin data
# ---------------------------------------------------------------------------

def _classify_origin(coeffs: tuple[float, float, float], scale: float) -> tuple[int, float]:
    d0, d1, d2 = coeffs
    tol = ORIGIN_ORDER_REL * scale
    if abs(d0) > tol:
        return 0, d0
    if abs(d1) > tol:
        return 1, d1
    if abs(d2) > tol:
        return 2, d2
    raise DegenerateExpansion(
        "all low-order coefficients vanish (origin order >= 3, or the "
        "dispersion function is identically zero); gamma undetermined",
        coefficients=coeffs,
    )


def maclaurin(profile: Profile) -> MaclaurinData:
    """Exact origin expansion of the wave dispersion function.

    The order threshold is relative to max(|D1|, |D2|, b^3): D1 carries units
    of length^3, so an absolute cutoff would break under domain rescaling.
    """
    if profile.kind is not ProfileKind.WAVE_SPEED:
        raise ValueError("maclaurin needs a wave-speed profile")
    b = profile.b
    m1, m2 = moments(profile, b)
    d1 = b**3 / 3.0 - m2
    d2 = (-b**5 / 30.0 + b * m1 * m1 - m1 * m2 - (b**3 / 3.0) * m1
          + (b * b / 2.0) * m2 - first_moment_square_integral(profile))
    coeffs = (0.0, float(d1), float(d2))
    scale = max(abs(d1), abs(d2), b**3)
    d, gamma = _classify_origin(coeffs, scale)
    if d == 0:  # pragma: no cover - D(0) = 0 holds identically for the wave form
        raise DegenerateExpansion("wave dispersion cannot be nonzero at the origin",
                                  coefficients=coeffs)
    return MaclaurinData(d=d, coeffs=coeffs, gamma=float(gamma), sum_rule_rhs=float(d2))


def maclaurin_schrodinger(profile: Profile, step: float = 1e-3) -> MaclaurinData:
    """Numeric origin expansion for the Schrodinger dispersion function.

    No closed moment formulas are exposed for this case; coefficients come
    from the co-integrated derivative plus Richardson-extrapolated central
    differences, and are flagged as numeric-only by construction.
    """
    ev = dispersion_evaluator(profile)
    scale_probe = max(abs(complex(v)) for v in ev.values([0.0, 0.5, 1.0]))

    d0_val = ev(0.0)
    d0 = d0_val.value
    d1 = d0_val.dvalue

    def second(h):
        plus = ev(h).dvalue
        minus = ev(-h).dvalue
        return (plus - minus) / (2.0 * h)

    r1 = second(step)
    r2 = second(step / 10.0)
    ddd = (100.0 * r2 - r1) / 99.0      # Richardson on the O(h^2) error
    d2 = ddd / 2.0

    coeffs = (float(np.real(d0)), float(np.real(d1)), float(np.real(d2)))
    scale = max(abs(coeffs[0]), abs(coeffs[1]), abs(coeffs[2]),
                profile.b**3, scale_probe * 1e-6)
    d, gamma = _classify_origin(coeffs, scale)
    return MaclaurinData(d=d, coeffs=coeffs, gamma=float(gamma),
                         sum_rule_rhs=coeffs[2])
