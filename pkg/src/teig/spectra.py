"""Zero location with multiplicities, auxiliary spectra, and lattice seeds.

Zeros of the dispersion function are counted inside rectangles by the
argument principle: the winding integral of D'/D over the boundary, with the
derivative coming from co-integrated variational traces rather than finite
differences (contour accuracy is what makes the integer rounding robust).
Boxes with nonzero count are subdivided until each holds a single zero
cluster, which is then polished by a multiplicity-aware Newton step
m * D / D' and confirmed by the winding of a small verification circle.

Two auxiliary real spectra are computed by sign-change scans along the real
axis: zeros of phi(b; .) (both endpoints pinned) and zeros of phi'(b; .)
(endpoint slope pinned), seeded by their free-lattice asymptotics.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import (
    BracketingFailed,
    IdenticallyZero,
    MaxDepthExceeded,
    QuadratureNotConverged,
    RegimeAEqualsB,
    ZeroOnContour,
)
from .dispersion import DispersionEvaluator
from .profiles import Profile, ProfileKind, travel_time
from .shooting import shoot_batch

# 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
# (positive half; symmetric completion below).
_XGK = np.array([0.991455371120813, 0.949107912342759, 0.864864423359769,
                 0.741531185599394, 0.586087235467691, 0.405845151377397,
                 0.207784955007898, 0.0])
_WGK = np.array([0.022935322010529, 0.063092092629979, 0.104790010322250,
                 0.140653259715525, 0.169004726639267, 0.190350578064785,
                 0.204432940075298, 0.209482141084728])
_WG = np.array([0.129484966168870, 0.279705391489277, 0.381830050505119,
                0.417959183673469])

GK_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
G7_WEIGHTS = np.concatenate([_WG[:-1], [_WG[-1]], _WG[-2::-1]])
_G7_SLICE = slice(1, None, 2)  # Gauss-7 nodes sit at the odd Kronrod positions

BOUNDARY_REL = 1e-12
IDENTICALLY_ZERO_REL = 1e-13
SPLIT_FRACTIONS = (0.5, 0.5625, 0.4375, 0.59375, 0.40625)
DILATION_SEQUENCE = (1.0, 1.01, 0.99, 1.02, 0.98, 1.03)


class BoxStatus(Enum):
    UNRESOLVED = "unresolved"
    RESOLVED = "resolved"
    ON_BOUNDARY_RETRY = "on_boundary_retry"


class EigenvalueKind(Enum):
    ORIGIN = "origin"
    REAL_POSITIVE = "real_positive"
    REAL_NEGATIVE = "real_negative"
    COMPLEX_PAIR = "complex_pair"


@dataclass
class ContourBox:
    """Axis-aligned rectangle in the spectral plane with its zero count."""

    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float
    winding: int | None = None
    status: BoxStatus = BoxStatus.UNRESOLVED

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.re_lo, self.re_hi,
                                            self.im_lo, self.im_hi)):
            raise ValueError("contour box must be finite")
        if not (self.re_hi > self.re_lo and self.im_hi > self.im_lo):
            raise ValueError("degenerate contour box")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.re_hi - self.re_lo, self.im_hi - self.im_lo))

    def corners(self):
        return (complex(self.re_lo, self.im_lo), complex(self.re_hi, self.im_lo),
                complex(self.re_hi, self.im_hi), complex(self.re_lo, self.im_hi))

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (self.re_lo - margin <= z.real <= self.re_hi + margin
                and self.im_lo - margin <= z.imag <= self.im_hi + margin)

    def dilated(self, factor: float) -> "ContourBox":
        cr, ci = 0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi)
        hw, hh = 0.5 * (self.re_hi - self.re_lo) * factor, 0.5 * (self.im_hi - self.im_lo) * factor
        return ContourBox(cr - hw, cr + hw, ci - hh, ci + hh)

    def split(self, frac_re: float = 0.5, frac_im: float = 0.5):
        rs = self.re_lo + frac_re * (self.re_hi - self.re_lo)
        im = self.im_lo + frac_im * (self.im_hi - self.im_lo)
        return (ContourBox(self.re_lo, rs, self.im_lo, im),
                ContourBox(rs, self.re_hi, self.im_lo, im),
                ContourBox(self.re_lo, rs, im, self.im_hi),
                ContourBox(rs, self.re_hi, im, self.im_hi))


@dataclass(frozen=True)
class EigenvalueRecord:
    """One located zero of the dispersion function."""

    lam: complex
    multiplicity: int
    kind: EigenvalueKind
    index_hint: int | None
    residual: float

    def to_dict(self) -> dict:
        return {
            "re_lambda": float(self.lam.real),
            "im_lambda": float(self.lam.imag),
            "multiplicity": self.multiplicity,
            "kind": self.kind.value,
            "index_hint": self.index_hint,
            "residual": self.residual,
        }


class _ZeroNearContour(Exception):
    """Internal signal: a quadrature node saw |D| under the boundary floor."""


# ---------------------------------------------------------------------------
# winding integrals
# ---------------------------------------------------------------------------

def _eval_log_derivative(evaluator, z, boundary_rel, scale_box, panel_size=15):
    """D'/D at contour nodes, guarding against zeros grazing the contour.

    The graze test is panel-local: |D| collapsing relative to the other
    nodes of the same panel marks a zero essentially on the path.  A global
    scale would false-trigger on tall boxes, where the exponential growth
    at the top makes the bottom edge look vanishing by comparison.
    """
    vals, dvals = evaluator.batch(z)
    mags = np.abs(vals)
    if mags.size:
        scale_box[0] = max(scale_box[0], float(np.max(mags)))
    per_panel = mags.reshape(-1, panel_size)
    panel_max = per_panel.max(axis=1)
    if np.any(panel_max <= 0.0) or np.any(per_panel.min(axis=1) < boundary_rel * panel_max):
        raise _ZeroNearContour
    return dvals / vals


class _PathIntegral(NamedTuple):
    winding_int: complex      # integral of D'/D
    moment_int: complex       # integral of (z - center) D'/D
    moment2_int: complex      # integral of (z - center)^2 D'/D
    err: float                # absolute error estimate on the winding integral
    scale: float              # max |D| seen on the contour


def _winding_integral(evaluator, legs, *, center=0.0, boundary_rel=BOUNDARY_REL,
                      max_panels=240, err_target=0.12) -> _PathIntegral:
    """Adaptive Gauss-Kronrod integrals of (z-c)^k D'/D, k = 0, 1, 2, on a path.

    `legs` is a list of (z_of_t, dz_of_t, t_lo, t_hi, n_init) parameterized
    path sections.  Panels are refined worst-first until the winding-integral
    error estimate drops below `err_target` (radians); every refinement wave
    evaluates all of its new panels through one batched solver call, which is
    where the integration cost actually lives.

    The moments are relative to `center`, so their quadrature error stays
    proportional to the cluster offset rather than to |lambda| itself; they
    deliver the multiplicity-weighted centroid and spread of the enclosed
    zeros to contour accuracy, which plain Newton cannot reach near a
    multiple zero once |D| drops under the integrator noise floor.
    """
    scale_box = [0.0]

    def evaluate_wave(pending):
        ts = []
        for leg_idx, t0, t1 in pending:
            half = 0.5 * (t1 - t0)
            ts.append(0.5 * (t0 + t1) + half * GK_NODES)
        zfill = np.concatenate([legs[i][0](t) for (i, _, _), t in zip(pending, ts)])
        g_all = _eval_log_derivative(evaluator, zfill, boundary_rel, scale_box)
        out = []
        for idx, ((leg_idx, t0, t1), t) in enumerate(zip(pending, ts)):
            sl = slice(15 * idx, 15 * (idx + 1))
            g = g_all[sl] * legs[leg_idx][1](t)
            zc = zfill[sl] - center
            half = 0.5 * (t1 - t0)
            kron = half * np.sum(GK_WEIGHTS * g)
            gauss = half * np.sum(G7_WEIGHTS * g[_G7_SLICE])
            out.append([float(abs(kron - gauss)), leg_idx, t0, t1,
                        complex(kron),
                        complex(half * np.sum(GK_WEIGHTS * g * zc)),
                        complex(half * np.sum(GK_WEIGHTS * g * zc * zc))])
        return out

    pending = []
    for leg_idx, (_, _, t_lo, t_hi, n_init) in enumerate(legs):
        edges = np.linspace(t_lo, t_hi, n_init + 1)
        pending.extend((leg_idx, t0, t1) for t0, t1 in zip(edges[:-1], edges[1:]))
    done = evaluate_wave(pending)
    while len(done) < max_panels:
        total_err = sum(w[0] for w in done)
        if total_err <= err_target:
            break
        done.sort(key=lambda w: -w[0])
        # split the panels carrying the top share of the error, at least one
        budget, split, keep = 0.0, [], []
        for item in done:
            if budget < 0.6 * total_err or not split:
                split.append(item)
                budget += item[0]
            else:
                keep.append(item)
        pending = []
        for _, leg_idx, t0, t1, _, _, _ in split:
            tm = 0.5 * (t0 + t1)
            pending.extend([(leg_idx, t0, tm), (leg_idx, tm, t1)])
        done = keep + evaluate_wave(pending)
    return _PathIntegral(
        winding_int=sum(w[4] for w in done),
        moment_int=sum(w[5] for w in done),
        moment2_int=sum(w[6] for w in done),
        err=sum(w[0] for w in done),
        scale=scale_box[0],
    )


def _rectangle_legs(box: ContourBox, panels_per_edge: int = 2):
    legs = []
    c = box.corners()
    for z0, z1 in zip(c, c[1:] + c[:1]):
        dz = z1 - z0

        def zfun(t, z0=z0, dz=dz):
            return z0 + t * dz

        def dzfun(t, dz=dz):
            return np.full_like(np.asarray(t, dtype=float), dz, dtype=complex)

        legs.append((zfun, dzfun, 0.0, 1.0, panels_per_edge))
    return legs


def _circle_legs(center: complex, radius: float, panels: int = 8):
    def zfun(t):
        return center + radius * np.exp(1j * np.asarray(t))

    def dzfun(t):
        return 1j * radius * np.exp(1j * np.asarray(t))

    return [(zfun, dzfun, 0.0, 2.0 * np.pi, panels)]


def _round_winding(total: complex, integer_tol: float) -> int:
    w_raw = total / (2j * np.pi)
    w = int(round(w_raw.real))
    if abs(w_raw - w) > integer_tol:
        raise QuadratureNotConverged(
            f"winding integral {w_raw:.4f} is not near an integer"
        )
    if w < 0:
        raise QuadratureNotConverged(f"negative winding count {w}")
    return w


def _probe_identically_zero(evaluator, box: ContourBox):
    """16-point probe for an identically vanishing dispersion function.

    Preferably judged relative to the magnitude of the two cancelling terms
    (solver noise makes a pure absolute floor unreliable); falls back to the
    absolute floor for evaluators without a term scale.
    """
    c = box.corners()
    mids = [0.5 * (a + b) for a, b in zip(c, c[1:] + c[:1])]
    inner = box.dilated(0.45)
    probes = np.array(list(c) + mids + list(inner.corners())
                      + [inner.center, box.center,
                         0.5 * (inner.center + c[0]), 0.5 * (inner.center + c[2])])
    vals = np.abs(evaluator.values(probes))
    if float(np.max(vals)) < IDENTICALLY_ZERO_REL * evaluator.length_scale:
        return True
    if evaluator.term_scale is not None:
        scale = float(np.max(evaluator.term_scale(probes)))
        return float(np.max(vals)) < 1e-9 * max(scale, 1e-300)
    return False


def _count_with_geometry(evaluator, box: ContourBox, *, integer_tol=0.1,
                         max_retries=5):
    """(winding, effective box, centroid, contour scale) with dilation retries.

    The centroid is the multiplicity-weighted mean of the enclosed zeros from
    the first-moment integral (None when the count is zero); it seeds the
    cluster resolution step.
    """
    last_exc = None
    for factor in DILATION_SEQUENCE[: max_retries + 1]:
        candidate = box if factor == 1.0 else box.dilated(factor)
        try:
            result = _winding_integral(evaluator, _rectangle_legs(candidate),
                                       center=candidate.center)
            w = _round_winding(result.winding_int, integer_tol)
            centroid = None
            if w > 0:
                centroid = candidate.center + complex(result.moment_int / (2j * np.pi)) / w
            return w, candidate, centroid, result.scale
        except _ZeroNearContour as exc:
            last_exc = exc
            continue
    raise ZeroOnContour(
        f"a zero stays on the contour of {box} through the dilation sequence"
    ) from last_exc


def count_zeros(evaluator: DispersionEvaluator, box: ContourBox, *,
                integer_tol: float = 0.1, max_retries: int = 5) -> int:
    """Number of zeros (with multiplicity) of D inside the box.

    Rejects when the winding integral is further than `integer_tol` from an
    integer, when a zero cannot be moved off the contour by the 1% dilation
    ladder, or when D is identically zero on the probe grid.
    """
    if _probe_identically_zero(evaluator, box):
        raise IdenticallyZero(
            "dispersion function vanishes identically on the probe grid; "
            "the profile is trivial (unit wave speed / zero potential)"
        )
    w, eff, _, _ = _count_with_geometry(evaluator, box, integer_tol=integer_tol,
                                        max_retries=max_retries)
    box.winding = w
    if eff is not box:
        box.status = BoxStatus.ON_BOUNDARY_RETRY
    return w


# ---------------------------------------------------------------------------
# polishing and the search driver
# ---------------------------------------------------------------------------

def polish_root(evaluator, seed: complex, multiplicity: int = 1, *,
                tol_rel: float = 1e-13, max_iter: int = 80,
                trust_radius: float | None = None):
    """Multiplicity-aware Newton refinement z <- z - m D/D'.

    Returns (root, |D(root)|, converged).  For an m-fold zero the modified
    step restores quadratic convergence; for a misjudged m it still contracts
    and the caller's verification circle catches the mismatch.  Iterates
    escaping `trust_radius` around the seed abort the polish.
    """
    z = complex(seed)
    val = dval = None
    for _ in range(max_iter):
        dv = evaluator(z)
        val, dval = dv.value, dv.dvalue
        if val == 0:
            return z, 0.0, True
        if dval == 0 or not np.isfinite(dval) or not np.isfinite(val):
            return z, abs(val), False
        step = -multiplicity * val / dval
        z = z + step
        if trust_radius is not None and abs(z - complex(seed)) > trust_radius:
            return z, abs(val), False
        if abs(step) <= tol_rel * (1.0 + abs(z)):
            return z, abs(evaluator(z).value), True
    return z, abs(val) if val is not None else np.inf, False


def _split_clean(evaluator, box: ContourBox, attempt: int = 0):
    """Subdivide while keeping zeros off the interior split lines.

    All candidate split lines are probed in a single batched call; a line is
    clean when its smallest |D| does not collapse relative to the same line
    (local comparison, so tall boxes with a large dynamic range still split).
    `attempt` rotates the deterministic fraction sequence so a failed tiling
    retries with genuinely different lines.
    """
    order = [SPLIT_FRACTIONS[(attempt + k) % len(SPLIT_FRACTIONS)]
             for k in range(len(SPLIT_FRACTIONS))]
    n_pts = 9
    im_span = np.linspace(box.im_lo, box.im_hi, n_pts)
    re_span = np.linspace(box.re_lo, box.re_hi, n_pts)
    probes = []
    for cand in order:
        rs = box.re_lo + cand * (box.re_hi - box.re_lo)
        probes.append(rs + 1j * im_span)
    for cand in order:
        ims = box.im_lo + cand * (box.im_hi - box.im_lo)
        probes.append(re_span + 1j * ims)
    mags = np.abs(evaluator.values(np.concatenate(probes)))
    per_line = mags.reshape(2 * len(order), n_pts)
    clean = per_line.min(axis=1) >= 1e-7 * np.maximum(per_line.max(axis=1), 1e-300)
    frac_re = next((c for c, ok in zip(order, clean[:len(order)]) if ok), order[0])
    frac_im = next((c for c, ok in zip(order, clean[len(order):]) if ok), order[0])
    return box.split(frac_re, frac_im)


def _circle_moments(evaluator, center, radius, err_target):
    res = _winding_integral(evaluator, _circle_legs(center, radius),
                            center=center, err_target=err_target)
    wc = _round_winding(res.winding_int, 0.1)
    s1 = complex(res.moment_int / (2j * np.pi))
    s2 = complex(res.moment2_int / (2j * np.pi))
    return wc, s1, s2, res.scale


def reciprocal_zero_sum(evaluator, radius: float, origin_correction: float,
                        err_target: float = 1e-7) -> float:
    """Sum of mult/lambda over all nonzero zeros inside |lambda| = radius.

    Evaluates (1/2 pi i) times the closed integral of D'/(D lambda), which
    picks up every enclosed zero (complex pairs included) without locating
    any of them; `origin_correction` is the residue contributed by the zero
    at the origin (D2/D1 for a simple origin zero).  The contour is nudged
    by small dilations when it grazes a zero.
    """
    last = None
    for dil in (1.0, 1.004, 0.996, 1.008, 0.992):
        r = radius * dil
        zfun = lambda t, r=r: r * np.exp(1j * np.asarray(t))
        dzfun = lambda t, r=r: 1j * r * np.exp(1j * np.asarray(t))
        edges = np.linspace(0.0, 2.0 * np.pi, 17)
        pending = list(zip(edges[:-1], edges[1:]))
        done = []
        try:
            while True:
                ts = [0.5 * (t0 + t1) + 0.5 * (t1 - t0) * GK_NODES
                      for t0, t1 in pending]
                z = np.concatenate([zfun(t) for t in ts])
                vals, dvals = evaluator.batch(z)
                if not np.all(np.isfinite(vals)):
                    raise ValueError(
                        "trace growth overflows on this contour; reduce the radius"
                    )
                mags = np.abs(vals)
                # graze test against the local noise floor: an origin-centered
                # circle legitimately spans hundreds of orders of magnitude
                if evaluator.term_scale is not None:
                    floor = 1e-10 * evaluator.term_scale(z)
                else:
                    floor = 1e-12 * np.max(mags)
                if np.any(mags < floor):
                    raise _ZeroNearContour
                g_all = dvals / vals / z
                for idx, ((t0, t1), t) in enumerate(zip(pending, ts)):
                    half = 0.5 * (t1 - t0)
                    g = g_all[15 * idx: 15 * (idx + 1)] * dzfun(t)
                    kron = half * np.sum(GK_WEIGHTS * g)
                    gauss = half * np.sum(G7_WEIGHTS * g[_G7_SLICE])
                    done.append([float(abs(kron - gauss)), t0, t1, complex(kron)])
                total_err = sum(w[0] for w in done)
                if total_err <= err_target or len(done) > 220:
                    break
                done.sort(key=lambda w: -w[0])
                budget, split, keep = 0.0, [], []
                for item in done:
                    if budget < 0.6 * total_err or not split:
                        split.append(item)
                        budget += item[0]
                    else:
                        keep.append(item)
                pending = []
                for _, t0, t1, _ in split:
                    tm = 0.5 * (t0 + t1)
                    pending.extend([(t0, tm), (tm, t1)])
                done = keep
            total = sum(w[3] for w in done)
            value = complex(total / (2j * np.pi)) - origin_correction
            return float(value.real)
        except _ZeroNearContour as exc:
            last = exc
            continue
    raise ZeroOnContour(
        f"reciprocal-sum contour |lambda| = {radius:g} grazes zeros for every dilation"
    ) from last


def _resolve_cluster(evaluator, center, w, base_radius, resolution, global_scale):
    """Certify that the w zeros near `center` form one point cluster.

    Verification circles of growing radius are probed around the centroid;
    a circle is trusted only where |D| stays above the solver noise floor.
    A circle whose winding matches w yields the cluster centroid (first
    moment) and spread (second moment); the cluster is accepted when the
    spread is below the resolution target.  The coarse pass is refined by a
    tight recentered moment pass (multiple zeros) or Newton polishing
    (simple zeros).
    Returns (root, residual) or None (not isolated; keep subdividing).
    """
    if w > 8:
        return None
    radius = base_radius
    for _ in range(8):
        try:
            wc, s1, s2, scale = _circle_moments(evaluator, center, radius, 1e-3)
        except (_ZeroNearContour, QuadratureNotConverged):
            radius *= 4.0
            continue
        if scale < 1e-9 * global_scale:
            radius *= 4.0      # contour lies in the noise zone; widen
            continue
        if wc < w:
            radius *= 4.0      # cluster not fully enclosed yet
            continue
        if wc > w:
            return None        # neighbors engulfed; box must shrink first
        mean = s1 / w
        root = center + mean
        spread = float(np.sqrt(abs(s2 / w - mean * mean)))
        if spread > max(resolution, 5e-5 * radius, 1e-9 * (1.0 + abs(root))):
            return None        # genuinely distinct zeros; keep subdividing
        if w == 1:
            polished, resid, ok = polish_root(evaluator, root, 1, max_iter=40,
                                              trust_radius=radius)
            if ok:
                return polished, resid
        try:
            wc2, s1b, _, _ = _circle_moments(evaluator, root, radius, 1e-9)
            if wc2 == w:
                root = root + s1b / w
        except (_ZeroNearContour, QuadratureNotConverged):
            pass
        return root, abs(evaluator(root).value)
    return None


def find_eigenvalues(evaluator: DispersionEvaluator, region: ContourBox,
                     resolution: float, *, origin_order: int | None = None,
                     lattice_unit: float | None = None,
                     max_depth: int = 48) -> list[EigenvalueRecord]:
    """All zeros of D inside the region, polished, with multiplicities.

    Recursive quad-subdivision of boxes with positive winding; a box is
    resolved once the verification circle around its zero centroid winds
    exactly the box count and the second-moment spread certifies a point
    cluster (diameter below the resolution target).  Boxes that reach the
    resolution diameter without certification are reported through their
    contour centroid.  Records are conjugate-paired and sorted by (Re, Im);
    `lattice_unit` (pi^2/(a-b)^2) attaches index hints to real records.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if _probe_identically_zero(evaluator, region):
        raise IdenticallyZero(
            "dispersion function vanishes identically on the probe grid; "
            "the profile is trivial (unit wave speed / zero potential)"
        )
    w0, eff0, centroid0, scale0 = _count_with_geometry(evaluator, region)
    region.winding = w0
    global_scale = max(scale0, 1e-300)
    found: list[tuple[complex, int, float]] = []
    stack = [(eff0, w0, centroid0, 0)]
    while stack:
        box, w, centroid, depth = stack.pop()
        if w == 0:
            continue
        seed = centroid if (centroid is not None and box.contains(centroid)) else box.center
        got = _resolve_cluster(evaluator, seed, w, 10.0 * resolution,
                               resolution, global_scale)
        if got is not None:
            box.status = BoxStatus.RESOLVED
            found.append((got[0], w, got[1]))
            continue
        if box.diameter <= resolution:
            box.status = BoxStatus.RESOLVED
            found.append((seed, w, abs(evaluator(seed).value)))
            continue
        if depth >= max_depth:
            raise MaxDepthExceeded(
                f"subdivision depth {depth} exceeded near {box.center:.6g}"
            )
        children = None
        for attempt in range(len(SPLIT_FRACTIONS)):
            kids = _split_clean(evaluator, box, attempt)
            try:
                counted = [(kid, _count_with_geometry(evaluator, kid,
                                                      max_retries=0))
                           for kid in kids]
            except (ZeroOnContour, QuadratureNotConverged):
                continue
            if sum(c for (_, (c, _, _, _)) in counted) == w:
                children = counted
                break
        if children is None:
            raise ZeroOnContour(
                f"could not tile {box} without a zero on a split line"
            )
        for kid, (count, kid_eff, kid_centroid, kid_scale) in children:
            global_scale = max(global_scale, kid_scale)
            if count > 0:
                stack.append((kid_eff, count, kid_centroid, depth + 1))
    return _assemble_records(found, region, resolution, origin_order, lattice_unit)


def _assemble_records(found, region, resolution, origin_order, lattice_unit):
    records = []
    origin_tol = max(10.0 * resolution, 1e-8)
    complexes = []
    for z, m, res in found:
        if abs(z) <= origin_tol and region.contains(0.0):
            if origin_order is not None and m != origin_order:
                raise QuadratureNotConverged(
                    f"origin multiplicity {m} contradicts the expansion order "
                    f"{origin_order}"
                )
            records.append(EigenvalueRecord(0.0j, m, EigenvalueKind.ORIGIN, None, res))
        elif abs(z.imag) <= 1e-8 * max(1.0, abs(z)):
            kind = EigenvalueKind.REAL_POSITIVE if z.real > 0 else EigenvalueKind.REAL_NEGATIVE
            records.append(EigenvalueRecord(complex(z.real, 0.0), m, kind, None, res))
        else:
            complexes.append((z, m, res))
    # conjugate pairing: symmetrize matched partners
    used = [False] * len(complexes)
    for i, (z, m, res) in enumerate(complexes):
        if used[i] or z.imag < 0:
            continue
        best_j, best_gap = None, np.inf
        for j, (z2, m2, _) in enumerate(complexes):
            if used[j] or j == i or z2.imag > 0 or m2 != m:
                continue
            gap = abs(z - np.conj(z2))
            if gap < best_gap:
                best_j, best_gap = j, gap
        if best_j is not None and best_gap <= 1e-6 * (1.0 + abs(z)):
            z2, m2, res2 = complexes[best_j]
            used[i] = used[best_j] = True
            re = 0.5 * (z.real + z2.real)
            im = 0.5 * (z.imag - z2.imag)
            records.append(EigenvalueRecord(complex(re, im), m,
                                            EigenvalueKind.COMPLEX_PAIR, None, res))
            records.append(EigenvalueRecord(complex(re, -im), m2,
                                            EigenvalueKind.COMPLEX_PAIR, None, res2))
    for flag, (z, m, res) in zip(used, complexes):
        if not flag:
            records.append(EigenvalueRecord(z, m, EigenvalueKind.COMPLEX_PAIR, None, res))
    if lattice_unit is not None and lattice_unit > 0:
        hinted = []
        for rec in records:
            if rec.kind is EigenvalueKind.REAL_POSITIVE:
                hint = int(round(np.sqrt(rec.lam.real / lattice_unit)))
                hinted.append(replace(rec, index_hint=hint if hint > 0 else None))
            else:
                hinted.append(rec)
        records = hinted
    records.sort(key=lambda r: (r.lam.real, r.lam.imag))
    return records


# ---------------------------------------------------------------------------
# lattice predictions and auxiliary spectra
# ---------------------------------------------------------------------------

def asymptotic_lattice(profile: Profile, n: int) -> float:
    """Leading real-eigenvalue position n^2 pi^2/(a-b)^2."""
    if n < 1:
        raise ValueError("lattice index must be positive")
    a = travel_time(profile)
    gap = a - profile.b
    if abs(gap) <= 1e-9 * profile.b:
        raise RegimeAEqualsB("lattice degenerates when travel time equals radius")
    return float(n * n * np.pi * np.pi / (gap * gap))


def _real_axis_zeros(profile: Profile, component: str, count: int):
    """First zeros of a real-axis boundary-trace component by sign scan.

    The scan runs in s = sqrt(lam - floor) where the trace oscillates with
    an asymptotically uniform period, so a fixed fractional step density
    cannot skip sign changes once past the first few zeros.
    """
    wave = profile.kind is ProfileKind.WAVE_SPEED
    if wave:
        span = travel_time(profile)
        floor = 0.0
    else:
        span = profile.b
        vmin = float(np.min(profile.value(profile.audit_grid())))
        floor = min(0.0, vmin) - 1.0 / profile.b**2

    if component == "phi":
        pick = lambda tr: (tr.phi_b, tr.dlam_phi_b)
    elif component == "dphi":
        pick = lambda tr: (tr.dphi_b, tr.dlam_dphi_b)
    else:
        raise ValueError(component)

    def values(lams):
        tr = shoot_batch(profile, np.asarray(lams, dtype=complex))
        v, dv = pick(tr)
        return v.real, dv.real

    zeros = []
    s_hi = (count + 1.5) * np.pi / span
    s_lo = 1e-3 * np.pi / span
    for _ in range(4):
        grid = np.arange(s_lo, s_hi, 0.12 * np.pi / span)
        lam_grid = floor + grid**2
        vals, _ = values(lam_grid)
        sign_flip = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        lo = lam_grid[sign_flip]
        hi = lam_grid[sign_flip + 1]
        flo = vals[sign_flip]
        if lo.size >= count:
            # lockstep bisection, then Newton with the co-integrated derivative
            for _ in range(12):
                mid = 0.5 * (lo + hi)
                vmid, _ = values(mid)
                take_lo = np.sign(vmid) == np.sign(flo)
                lo = np.where(take_lo, mid, lo)
                flo = np.where(take_lo, vmid, flo)
                hi = np.where(take_lo, hi, mid)
            root = 0.5 * (lo + hi)
            for _ in range(5):
                v, dv = values(root)
                step = np.where(dv != 0, v / np.where(dv != 0, dv, 1.0), 0.0)
                root = np.clip(root - step, lo, hi)
            zeros = [float(r) for r in root[:count]]
            break
        s_hi *= 1.6
    if len(zeros) < count:
        raise BracketingFailed(
            f"found {len(zeros)} zeros of {component}(b; .), needed {count}"
        )
    return zeros


def dirichlet_spectrum(profile: Profile, count: int) -> list[float]:
    """Eigenvalues with both endpoints pinned: the zeros of phi(b; .)."""
    return _real_axis_zeros(profile, "phi", count)


def dirichlet_neumann_spectrum(profile: Profile, count: int) -> list[float]:
    """Eigenvalues with the endpoint slope pinned: the zeros of phi'(b; .)."""
    return _real_axis_zeros(profile, "dphi", count)


# ---------------------------------------------------------------------------
# tabular output
# ---------------------------------------------------------------------------

CSV_HEADER = "re_lambda,im_lambda,multiplicity,kind,index_hint,residual"


def records_to_csv(records) -> str:
    """Shortest round-trip decimal formatting, one record per line."""
    lines = [CSV_HEADER]
    for r in records:
        hint = "" if r.index_hint is None else str(r.index_hint)
        lines.append(f"{r.lam.real!r},{r.lam.imag!r},{r.multiplicity},"
                     f"{r.kind.value},{hint},{r.residual!r}")
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> list[EigenvalueRecord]:
    records = []
    rows = io.StringIO(text).read().strip().splitlines()
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("unrecognized eigenvalue table header")
    for row in rows[1:]:
        re_s, im_s, mult, kind, hint, res = row.split(",")
        records.append(EigenvalueRecord(
            complex(float(re_s), float(im_s)), int(mult), EigenvalueKind(kind),
            int(hint) if hint else None, float(res)))
    return records
