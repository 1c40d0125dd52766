"""Piecewise-cubic radial profiles and their derived quantities.

A profile is either a wave-speed coefficient rho(x) > 0 or a real potential
V(x), represented on [0, b] as contiguous cubic pieces with coefficients in
the local variable t = x - x0.  Cubics keep differentiation exact, which the
change of variables to normal (Schrodinger) form requires: the transformed
potential is

    q(y(x)) = rho''(x) / (4 rho(x)^2) - 5 rho'(x)^2 / (16 rho(x)^3),

with y(x) = integral_0^x sqrt(rho(s)) ds and total travel time a = y(b).

Positivity of a wave-speed profile is audited on a dense grid (4096 uniform
points plus every breakpoint); a cubic can only dip a bounded amount between
audit samples, which is a documented limitation rather than a rigorous bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import NonPositiveProfile, OutOfDomain, SchemaError, ToleranceNotMet

AUDIT_POINTS = 4096
EQUAL_BAND_REL = 1e-9


class ProfileKind(Enum):
    WAVE_SPEED = "rho"
    POTENTIAL = "potential"


class Regime(Enum):
    A_LESS_B = "a_less_b"
    A_EQUALS_B = "a_equals_b"
    A_GREATER_B = "a_greater_b"


@dataclass(frozen=True)
class CubicPiece:
    """One polynomial piece, coefficients ascending in t = x - x0."""

    x0: float
    x1: float
    coeffs: tuple[float, float, float, float]

    def value(self, x):
        t = np.asarray(x) - self.x0
        c0, c1, c2, c3 = self.coeffs
        return c0 + t * (c1 + t * (c2 + t * c3))

    def derivative(self, x):
        t = np.asarray(x) - self.x0
        _, c1, c2, c3 = self.coeffs
        return c1 + t * (2.0 * c2 + t * (3.0 * c3))

    def second_derivative(self, x):
        t = np.asarray(x) - self.x0
        return 2.0 * self.coeffs[2] + 6.0 * self.coeffs[3] * t

    def polynomial(self):
        """Piece as a numpy Polynomial in the local variable."""
        return npoly.Polynomial(self.coeffs)


@dataclass(frozen=True)
class Profile:
    """Piecewise-cubic coefficient table on [0, b].

    Invariants enforced at construction: breakpoints strictly increasing from
    0 to b with contiguous pieces; the first derivative is continuous across
    breakpoints; wave-speed profiles are positive on the audit grid.  Value
    continuity is *not* required (step profiles are legal and integrable);
    operations that need a genuinely C^1 profile check `is_continuous`.
    """

    b: float
    kind: ProfileKind
    pieces: tuple[CubicPiece, ...]
    name: str = ""

    def __post_init__(self):
        if not self.pieces:
            raise SchemaError("profile needs at least one piece")
        if not (self.b > 0):
            raise SchemaError("domain radius b must be positive")
        xs = [p.x0 for p in self.pieces] + [self.pieces[-1].x1]
        if abs(xs[0]) > 1e-12 * self.b:
            raise SchemaError("first breakpoint must be 0")
        if abs(xs[-1] - self.b) > 1e-12 * self.b:
            raise SchemaError("last breakpoint must equal b")
        for lo, hi in zip(xs, xs[1:]):
            if not hi > lo:
                raise SchemaError("breakpoints must be strictly increasing")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if abs(left.x1 - right.x0) > 1e-12 * self.b:
                raise SchemaError("pieces must be contiguous")
        dscale = max(1.0, max(abs(c) for p in self.pieces for c in p.coeffs)) / max(self.b, 1.0)
        for left, right in zip(self.pieces, self.pieces[1:]):
            jump = abs(float(left.derivative(left.x1)) - float(right.derivative(right.x0)))
            if jump > 1e-9 * dscale:
                raise SchemaError(
                    f"first derivative jumps by {jump:.3e} at x = {right.x0:g}"
                )
        if self.kind is ProfileKind.WAVE_SPEED:
            vals = self.value(self.audit_grid())
            if not np.all(np.isfinite(vals)):
                raise SchemaError("profile evaluates to non-finite values")
            if np.min(vals) <= 0.0:
                raise NonPositiveProfile(
                    f"wave-speed profile '{self.name}' reaches "
                    f"{np.min(vals):.3e} on the audit grid"
                )
        else:
            vals = self.value(self.audit_grid())
            if not np.all(np.isfinite(vals)):
                raise SchemaError("profile evaluates to non-finite values")

    # -- evaluation ---------------------------------------------------------

    def _breaks(self):
        return np.array([p.x0 for p in self.pieces] + [self.b])

    def audit_grid(self):
        g = np.linspace(0.0, self.b, AUDIT_POINTS)
        return np.unique(np.concatenate([g, self._breaks()]))

    def _piece_index(self, x):
        idx = np.searchsorted(self._breaks(), np.asarray(x), side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def _eval(self, x, order):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        idx = self._piece_index(x)
        out = np.empty_like(x)
        for i, piece in enumerate(self.pieces):
            sel = idx == i
            if not np.any(sel):
                continue
            if order == 0:
                out[sel] = piece.value(x[sel])
            elif order == 1:
                out[sel] = piece.derivative(x[sel])
            else:
                out[sel] = piece.second_derivative(x[sel])
        return float(out[0]) if scalar else out

    def value(self, x):
        return self._eval(x, 0)

    def derivative(self, x):
        return self._eval(x, 1)

    def second_derivative(self, x):
        return self._eval(x, 2)

    @property
    def is_continuous(self):
        """True when piece values agree across every breakpoint."""
        scale = max(1.0, max(abs(c) for p in self.pieces for c in p.coeffs))
        for left, right in zip(self.pieces, self.pieces[1:]):
            if abs(float(left.value(left.x1)) - float(right.value(right.x0))) > 1e-9 * scale:
                return False
        return True

    def restrict(self, x_hi: float) -> "Profile":
        """Profile clipped to [0, x_hi]; used for interior-point shooting."""
        if not 0.0 < x_hi <= self.b * (1 + 1e-12):
            raise OutOfDomain(f"x_hi = {x_hi:g} outside (0, {self.b:g}]")
        x_hi = min(x_hi, self.b)
        pieces = []
        for p in self.pieces:
            if p.x0 >= x_hi:
                break
            pieces.append(CubicPiece(p.x0, min(p.x1, x_hi), p.coeffs))
        return Profile(x_hi, self.kind, tuple(pieces), name=self.name)

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value: float, b: float = 1.0,
                 kind: ProfileKind = ProfileKind.WAVE_SPEED, name: str = "") -> "Profile":
        return cls(b, kind, (CubicPiece(0.0, b, (float(value), 0.0, 0.0, 0.0)),),
                   name=name or f"const[{value:g}]")

    @classmethod
    def from_coeffs(cls, coeffs, b: float = 1.0,
                    kind: ProfileKind = ProfileKind.WAVE_SPEED, name: str = "") -> "Profile":
        """Single global cubic c0 + c1 x + c2 x^2 + c3 x^3 on [0, b]."""
        c = tuple(float(v) for v in coeffs) + (0.0,) * (4 - len(coeffs))
        if len(c) != 4:
            raise SchemaError("at most cubic coefficients are supported")
        return cls(b, kind, (CubicPiece(0.0, b, c),), name=name)

    @classmethod
    def step(cls, values, b: float = 1.0,
             kind: ProfileKind = ProfileKind.WAVE_SPEED, name: str = "") -> "Profile":
        """Piecewise-constant profile on equal-width segments."""
        values = [float(v) for v in values]
        edges = np.linspace(0.0, b, len(values) + 1)
        pieces = tuple(
            CubicPiece(float(lo), float(hi), (v, 0.0, 0.0, 0.0))
            for lo, hi, v in zip(edges[:-1], edges[1:], values)
        )
        return cls(b, kind, pieces, name=name or "step")

    @classmethod
    def from_hermite(cls, knots, values, slopes,
                     kind: ProfileKind = ProfileKind.WAVE_SPEED, name: str = "") -> "Profile":
        """C^1 piecewise cubic interpolating (value, slope) data at knots."""
        knots = np.asarray(knots, dtype=float)
        pieces = []
        for i in range(len(knots) - 1):
            h = knots[i + 1] - knots[i]
            v0, v1 = float(values[i]), float(values[i + 1])
            s0, s1 = float(slopes[i]), float(slopes[i + 1])
            c2 = (3.0 * (v1 - v0) / h - 2.0 * s0 - s1) / h
            c3 = (2.0 * (v0 - v1) / h + s0 + s1) / (h * h)
            pieces.append(CubicPiece(float(knots[i]), float(knots[i + 1]), (v0, s0, c2, c3)))
        return cls(float(knots[-1]), kind, tuple(pieces), name=name)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "kind": self.kind.value,
            "pieces": [
                {"x0": p.x0, "x1": p.x1, "coeffs": list(p.coeffs)} for p in self.pieces
            ],
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Profile":
        try:
            kind = ProfileKind(data["kind"])
            pieces = tuple(
                CubicPiece(float(p["x0"]), float(p["x1"]),
                           tuple(float(c) for c in p["coeffs"]) + (0.0,) * (4 - len(p["coeffs"])))
                for p in data["pieces"]
            )
            return cls(float(data["b"]), kind, pieces, name=str(data.get("name", "")))
        except NonPositiveProfile:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad profile dictionary: {exc}") from exc

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path) -> "Profile":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read profile file {path}: {exc}") from exc
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# exact polynomial functionals
# ---------------------------------------------------------------------------

def moment_integral(profile: Profile, power: int, lo: float, hi: float) -> float:
    """Exact integral of x^power * profile(x) over [lo, hi].

    The integrand is a polynomial on every piece, so the antiderivative is
    evaluated in closed form; there is no quadrature error.
    """
    if lo > hi:
        raise OutOfDomain("empty integration range")
    total = 0.0
    for p in profile.pieces:
        a = max(lo, p.x0)
        b = min(hi, p.x1)
        if b <= a:
            continue
        shifted = npoly.Polynomial((p.x0, 1.0)) ** power if power else npoly.Polynomial((1.0,))
        poly = shifted * p.polynomial()
        anti = poly.integ()
        total += anti(b - p.x0) - anti(a - p.x0)
    return float(total)


def moments(profile: Profile, x: float) -> tuple[float, float]:
    """First two weighted moments integral_0^x z^k profile(z) dz, k = 1, 2."""
    if not -1e-12 <= x <= profile.b * (1 + 1e-12):
        raise OutOfDomain(f"x = {x:g} outside [0, {profile.b:g}]")
    x = min(max(x, 0.0), profile.b)
    return moment_integral(profile, 1, 0.0, x), moment_integral(profile, 2, 0.0, x)


def first_moment_square_integral(profile: Profile) -> float:
    """Exact integral_0^b M1(z)^2 dz with M1(z) = integral_0^z s*profile(s) ds."""
    total = 0.0
    acc = 0.0
    for p in profile.pieces:
        shifted = npoly.Polynomial((p.x0, 1.0)) * p.polynomial()
        m1_local = shifted.integ()                  # local part of M1 within the piece
        m1 = m1_local + npoly.Polynomial((acc,))
        anti = (m1 * m1).integ()
        total += anti(p.x1 - p.x0) - anti(0.0)
        acc += m1_local(p.x1 - p.x0)
    return float(total)


# ---------------------------------------------------------------------------
# travel time, regime, normal-form transform
# ---------------------------------------------------------------------------

def _require_wave(profile: Profile, op: str):
    if profile.kind is not ProfileKind.WAVE_SPEED:
        raise ValueError(f"{op} requires a wave-speed profile, got {profile.kind.value}")


def travel_time(profile: Profile) -> float:
    """Travel time a = integral_0^b sqrt(rho(x)) dx, absolute error <= 1e-12."""
    _require_wave(profile, "travel_time")
    total = 0.0
    for p in profile.pieces:
        val, _ = quad(lambda x: np.sqrt(p.value(x)), p.x0, p.x1,
                      epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
    return float(total)


def classify_regime(profile: Profile) -> Regime:
    """Compare travel time with the radius; equality holds within 1e-9*b.

    The raw difference a - b is reported by the CLI so users can override a
    borderline classification.
    """
    a = travel_time(profile)
    if abs(a - profile.b) <= EQUAL_BAND_REL * profile.b:
        return Regime.A_EQUALS_B
    return Regime.A_LESS_B if a < profile.b else Regime.A_GREATER_B


@dataclass(frozen=True)
class LiouvilleImage:
    """Normal-form image of a wave-speed profile.

    Holds the travel-time coordinate map y(x) and its inverse as dense
    spline tables, the transformed potential q on [0, a], and the boundary
    scale rho(0)^(-1/4) that converts initial slopes between the pictures.
    """

    a: float
    q: Profile
    phi0_scale: float
    source: Profile
    _y_spline: CubicSpline = field(repr=False)
    _x_spline: CubicSpline = field(repr=False)

    def y_of_x(self, x):
        return self._y_spline(x)

    def x_of_y(self, y):
        return self._x_spline(y)


def _cumulative_map(profile: Profile):
    """Dense nodes (x_i, y_i) of y(x) using per-interval Gauss-Legendre."""
    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(12)
    xs = [np.array([0.0])]
    ys = [np.array([0.0])]
    acc = 0.0
    for p in profile.pieces:
        n_sub = max(16, int(np.ceil(AUDIT_POINTS * (p.x1 - p.x0) / profile.b)))
        edges = np.linspace(p.x0, p.x1, n_sub + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        pts = mid[:, None] + half[:, None] * gl_nodes[None, :]
        vals = np.sqrt(p.value(pts))
        increments = half * (vals @ gl_weights)
        xs.append(edges[1:])
        ys.append(acc + np.cumsum(increments))
        acc += float(np.sum(increments))
    return np.concatenate(xs), np.concatenate(ys)


def _q_formula(piece: CubicPiece, x):
    r = piece.value(x)
    r1 = piece.derivative(x)
    r2 = piece.second_derivative(x)
    return 0.25 * r2 / r**2 - (5.0 / 16.0) * r1**2 / r**3


def liouville_transform(profile: Profile, min_nodes: int = 512) -> LiouvilleImage:
    """Change of variables mapping the wave-speed problem to normal form.

    Tabulates y(x) and its inverse on a dense grid, produces the transformed
    potential q on a y-grid of at least `min_nodes` nodes (pieces never span
    a source breakpoint, where q may jump), and records rho(0)^(-1/4).
    """
    _require_wave(profile, "liouville_transform")
    if not profile.is_continuous:
        raise ValueError("liouville_transform requires a value-continuous (C^1) profile")
    x_nodes, y_nodes = _cumulative_map(profile)
    if np.any(np.diff(y_nodes) <= 0):
        raise NonPositiveProfile("travel-time coordinate is not strictly increasing")
    a = float(y_nodes[-1])
    y_spline = CubicSpline(x_nodes, y_nodes)
    x_spline = CubicSpline(y_nodes, x_nodes)

    # composition audit
    grid = profile.audit_grid()
    comp = x_spline(y_spline(grid))
    worst = float(np.max(np.abs(comp - grid)))
    if worst > 1e-10 * max(1.0, profile.b):  # pragma: no cover - tables are far tighter
        raise ToleranceNotMet(f"coordinate maps fail to invert: residual {worst:.3e}")

    q_pieces = []
    breaks_y = [0.0]
    for p in profile.pieces:
        breaks_y.append(float(y_spline(p.x1)))
    for i, p in enumerate(profile.pieces):
        y_lo, y_hi = breaks_y[i], breaks_y[i + 1]
        n = max(17, int(np.ceil(min_nodes * (y_hi - y_lo) / a)) + 1)
        yg = np.linspace(y_lo, y_hi, n)
        xg = np.clip(x_spline(yg), p.x0, p.x1)
        # one Newton correction with the exact derivative dy/dx = sqrt(rho)
        xg = np.clip(xg - (y_spline(xg) - yg) / np.sqrt(p.value(xg)), p.x0, p.x1)
        qg = _q_formula(p, xg)
        spl = CubicSpline(yg, qg)
        for j in range(n - 1):
            c3, c2, c1, c0 = spl.c[:, j]
            q_pieces.append(CubicPiece(float(yg[j]), float(yg[j + 1]),
                                       (float(c0), float(c1), float(c2), float(c3))))
    q = Profile(a, ProfileKind.POTENTIAL, tuple(q_pieces),
                name=f"normal-form[{profile.name}]")
    return LiouvilleImage(
        a=a,
        q=q,
        phi0_scale=float(profile.value(0.0)) ** (-0.25),
        source=profile,
        _y_spline=y_spline,
        _x_spline=x_spline,
    )
