"""Zero-product representation of the dispersion function and its uses.

An entire function of order at most 1/2 is pinned down by its zeros up to a
constant: D(lam) = gamma * lam^d * prod(1 - lam/lam_n), the product running
over the nonzero zeros with multiplicity.  This module evaluates truncated
products from spectral data, optionally completing the truncation by a tail
model on the asymptotic lattice n^2 pi^2/(a-b)^2 (sine-product form) plus,
when the data carries complex pairs, the companion odd lattice
(2n-1)^2 pi^2/(4(a-b)^2) (cosine-product form).  The tail multiplicities are
inferred from the trailing zero groups and the model is flagged in output
metadata wherever it is active: it is a modeling choice, not an identity.

Two exact algebraic identities fall out of the dispersion definition at the
free-lattice points and recover boundary-trace samples from D alone:

    at lam = (n pi / b)^2:          phi(b; lam)  = (-1)^(n+1) D(lam)
    at lam = ((2n-1) pi / (2b))^2:  phi'(b; lam) = (-1)^(n+1) sqrt(lam) D(lam)

since the sine (resp. cosine) prefactor vanishes there.  These hold to
solver accuracy for arbitrary profiles and power the two-spectra extraction
route of the inverse problem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import polygamma

from .dispersion import DispersionEvaluator, MaclaurinData
from .errors import GammaMissing, InsufficientZeros, SchemaError, WrongOriginOrder
from .shooting import EquationKind
from .spectra import EigenvalueKind, EigenvalueRecord

_TAIL_EXPLICIT_TERMS = 2048
_PAIR_TOL = 1e-8


@dataclass(frozen=True)
class TailModel:
    """Domain pair (a, b) fixing the asymptotic lattice spacing |a - b|."""

    a: float
    b: float

    @property
    def lattice_length(self) -> float:
        return abs(self.a - self.b)


@dataclass(frozen=True)
class SpectralData:
    """Inverse-problem input: nonzero zeros with multiplicities, the origin
    order d, optionally the normalization constant gamma and a tail model."""

    zeros: tuple[EigenvalueRecord, ...]
    d: int
    gamma: float | None
    tail_model: TailModel | None
    equation: EquationKind

    def __post_init__(self):
        for rec in self.zeros:
            if rec.lam == 0:
                raise SchemaError("the origin zero belongs in d, not in the zero list")
        if self.d < 0:
            raise SchemaError("origin order d must be nonnegative")
        if (self.equation is EquationKind.WAVE and self.d < 1
                and not self.is_degenerate):
            raise SchemaError("the wave dispersion function always vanishes at 0 (d >= 1)")
        # conjugate closure
        zs = sorted(self.zeros, key=lambda r: (abs(r.lam), r.lam.real, r.lam.imag))
        remaining = list(zs)
        while remaining:
            rec = remaining.pop()
            if abs(rec.lam.imag) <= _PAIR_TOL * (1.0 + abs(rec.lam)):
                continue
            mate = next((o for o in remaining
                         if abs(o.lam - rec.lam.conjugate()) <= _PAIR_TOL * (1.0 + abs(rec.lam))
                         and o.multiplicity == rec.multiplicity), None)
            if mate is None:
                raise SchemaError(f"zero list is not closed under conjugation near {rec.lam}")
            remaining.remove(mate)

    @property
    def is_degenerate(self) -> bool:
        """Identically-zero dispersion data (trivial profile)."""
        return not self.zeros and self.d == 0

    def sorted_groups(self) -> list[EigenvalueRecord]:
        return sorted(self.zeros, key=lambda r: (abs(r.lam), r.lam.real, r.lam.imag))

    @classmethod
    def from_records(cls, records: Sequence[EigenvalueRecord],
                     equation: EquationKind, *, d: int | None = None,
                     gamma: float | None = None,
                     tail_model: TailModel | None = None) -> "SpectralData":
        """Split eigenvalue records into the origin order and nonzero zeros."""
        origin = [r for r in records if r.kind is EigenvalueKind.ORIGIN or r.lam == 0]
        rest = tuple(r for r in records if r not in origin)
        if origin:
            d = origin[0].multiplicity
        elif d is None:
            d = 1 if equation is EquationKind.WAVE else 0
        return cls(rest, d, gamma, tail_model, equation)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "equation": self.equation.value,
            "d": self.d,
            "gamma": self.gamma,
            "zeros": [{"re": float(r.lam.real), "im": float(r.lam.imag),
                       "mult": r.multiplicity} for r in self.sorted_groups()],
            "tail": (None if self.tail_model is None
                     else {"a": self.tail_model.a, "b": self.tail_model.b}),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralData":
        try:
            equation = EquationKind(data["equation"])
            zeros = []
            for z in data["zeros"]:
                lam = complex(float(z["re"]), float(z["im"]))
                if abs(lam.imag) <= _PAIR_TOL * (1.0 + abs(lam)):
                    kind = (EigenvalueKind.REAL_POSITIVE if lam.real > 0
                            else EigenvalueKind.REAL_NEGATIVE)
                    lam = complex(lam.real, 0.0)
                else:
                    kind = EigenvalueKind.COMPLEX_PAIR
                zeros.append(EigenvalueRecord(lam, int(z["mult"]), kind, None, 0.0))
            tail = data.get("tail")
            tail_model = None if tail is None else TailModel(float(tail["a"]), float(tail["b"]))
            gamma = data.get("gamma")
            return cls(tuple(zeros), int(data["d"]),
                       None if gamma is None else float(gamma), tail_model, equation)
        except SchemaError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad spectral-data dictionary: {exc}") from exc

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path) -> "SpectralData":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read spectral data {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# tail model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _TailPlan:
    c: float
    sine_start: int           # lattice index beyond which the sine tail runs
    sine_mult: int            # zeros per sine-lattice cell
    cosine_start: int
    cosine_mult: int          # zeros per cosine-lattice cell (2 per pair)

    @property
    def active(self) -> bool:
        return self.c > 0 and (self.sine_mult > 0 or self.cosine_mult > 0)


def _median_mult(groups) -> int:
    if not groups:
        return 0
    tail = groups[-10:]
    return int(round(float(np.median([g.multiplicity for g in tail]))))


def _tail_plan(groups, tail_model: TailModel) -> _TailPlan:
    """Infer lattice starts and per-cell multiplicities from trailing groups."""
    c = tail_model.lattice_length
    if c <= 0:
        return _TailPlan(0.0, 0, 0, 0, 0)
    reals = [g for g in groups if abs(g.lam.imag) <= _PAIR_TOL * (1 + abs(g.lam))]
    pairs = [g for g in groups if g.lam.imag > _PAIR_TOL * (1 + abs(g.lam))]
    sine_mult = _median_mult(reals)
    sine_start = 0
    if reals:
        s_max = np.sqrt(abs(reals[-1].lam)) * c / np.pi
        sine_start = max(len(reals), int(round(s_max)))
    cos_mult = 2 * _median_mult(pairs)
    cos_start = 0
    if pairs:
        t_max = np.sqrt(abs(pairs[-1].lam)) * 2 * c / np.pi  # ~ (2n-1)
        cos_start = max(len(pairs), int(round((t_max + 1) / 2)))
    return _TailPlan(c, sine_start, sine_mult, cos_start, cos_mult)


def _tail_value(lam, plan: _TailPlan):
    """Tail factor of the zero product beyond the truncated data."""
    lam = np.asarray(lam, dtype=complex)
    c2 = plan.c * plan.c / np.pi**2
    out = np.ones_like(lam)
    if plan.sine_mult > 0:
        z = lam * c2                      # zero at z = n^2
        m_end = plan.sine_start + _TAIL_EXPLICIT_TERMS
        n = np.arange(plan.sine_start + 1, m_end + 1, dtype=float)
        explicit = np.prod(1.0 - z[..., None] / n**2, axis=-1)
        rem = np.exp(-z * polygamma(1, m_end + 1)
                     - z * z * polygamma(3, m_end + 1) / 12.0)
        out = out * (explicit * rem) ** plan.sine_mult
    if plan.cosine_mult > 0:
        w = 4.0 * lam * c2                # zero at w = (2n-1)^2
        m_end = plan.cosine_start + _TAIL_EXPLICIT_TERMS
        n = np.arange(plan.cosine_start + 1, m_end + 1, dtype=float)
        explicit = np.prod(1.0 - w[..., None] / (2 * n - 1)**2, axis=-1)
        rem = np.exp(-w * polygamma(1, m_end + 0.5) / 4.0
                     - w * w * polygamma(3, m_end + 0.5) / 192.0)
        out = out * (explicit * rem) ** plan.cosine_mult
    return out


def _tail_reciprocal_sum(plan: _TailPlan) -> float:
    """sum over modeled tail zeros of 1/lam_n (exact polygamma forms)."""
    c2 = plan.c * plan.c / np.pi**2
    total = 0.0
    if plan.sine_mult > 0:
        total += plan.sine_mult * c2 * float(polygamma(1, plan.sine_start + 1))
    if plan.cosine_mult > 0:
        total += plan.cosine_mult * c2 * float(polygamma(1, plan.cosine_start + 0.5))
    return total


# ---------------------------------------------------------------------------
# product evaluation
# ---------------------------------------------------------------------------

def _truncated_groups(data: SpectralData, truncation: int | None):
    groups = data.sorted_groups()
    if truncation is None:
        return groups
    if truncation > len(groups) and data.tail_model is None:
        raise InsufficientZeros(
            f"requested {truncation} zero groups, have {len(groups)} and no tail model"
        )
    cut = min(truncation, len(groups))
    # never split a conjugate pair at the cut
    if 0 < cut < len(groups):
        last = groups[cut - 1]
        nxt = groups[cut]
        if (abs(nxt.lam - last.lam.conjugate()) <= _PAIR_TOL * (1 + abs(last.lam))
                and abs(last.lam.imag) > _PAIR_TOL * (1 + abs(last.lam))):
            cut += 1
    return groups[:cut]


def xi_eval(data: SpectralData, lam, truncation: int | None = None) -> complex:
    """Truncated zero product lam^d * prod(1 - lam/lam_n) (+ optional tail).

    Groups enter in ascending modulus with conjugate pairs multiplied as real
    quadratic factors to suppress rounding drift; the result is real on the
    real axis for conjugate-closed data.
    """
    groups = _truncated_groups(data, truncation)
    lam = complex(lam)
    value = lam**data.d if data.d else complex(1.0)
    skip_mate = set()
    for i, g in enumerate(groups):
        if i in skip_mate:
            continue
        z = g.lam
        if abs(z.imag) <= _PAIR_TOL * (1 + abs(z)):
            value *= (1.0 - lam / z.real) ** g.multiplicity
            continue
        mate_idx = next((j for j in range(i + 1, len(groups))
                         if j not in skip_mate
                         and abs(groups[j].lam - z.conjugate()) <= _PAIR_TOL * (1 + abs(z))),
                        None)
        if mate_idx is None:
            value *= (1.0 - lam / z) ** g.multiplicity
            continue
        skip_mate.add(mate_idx)
        mod2 = abs(z) ** 2
        quad = 1.0 - lam * (2.0 * z.real / mod2) + lam * lam / mod2
        value *= quad ** g.multiplicity
    if data.tail_model is not None:
        plan = _tail_plan(groups, data.tail_model)
        if plan.active:
            value *= complex(_tail_value(lam, plan))
    return complex(value)


def reconstruct_D(data: SpectralData, lam, truncation: int | None = None) -> complex:
    """Data-to-function direction: gamma times the zero product."""
    if data.gamma is None:
        raise GammaMissing("reconstruction requires the normalization constant gamma")
    return complex(data.gamma) * xi_eval(data, lam, truncation)


def spectral_data_evaluator(data: SpectralData, truncation: int | None = None,
                            length_scale: float | None = None) -> DispersionEvaluator:
    """Dispersion evaluator backed by the reconstructed product.

    The derivative comes from the logarithmic derivative of the product and
    is undefined exactly at a data zero (the zeros are already known there).
    """
    gamma = 1.0 if data.gamma is None else float(data.gamma)
    groups = _truncated_groups(data, truncation)
    plan = _tail_plan(groups, data.tail_model) if data.tail_model else None
    if length_scale is None:
        length_scale = data.tail_model.b if data.tail_model else 1.0

    def batch(lams):
        lams = np.asarray(lams, dtype=complex)
        vals = np.array([gamma * xi_eval(data, z, truncation) for z in lams])
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = np.zeros_like(lams)
            if data.d:
                logd += data.d / lams
            for g in groups:
                logd += g.multiplicity * (-1.0 / g.lam) / (1.0 - lams / g.lam)
            if plan is not None and plan.active:
                h = 1e-7 * (1.0 + np.abs(lams))
                tp = _tail_value(lams + h, plan)
                tm = _tail_value(lams - h, plan)
                tv = _tail_value(lams, plan)
                logd += (tp - tm) / (2.0 * h * tv)
            dvals = vals * logd
        return vals, dvals

    return DispersionEvaluator(batch=batch, equation=data.equation,
                               length_scale=float(length_scale),
                               label="reconstructed")


# ---------------------------------------------------------------------------
# sampling identities and the sum rule
# ---------------------------------------------------------------------------

def _source_values(d_source, lams):
    if isinstance(d_source, DispersionEvaluator):
        return d_source.values(lams)
    return np.array([complex(d_source(lam)) for lam in lams])


def sample_phi_grid(d_source, b: float, n_max: int) -> list[tuple[float, complex]]:
    """Boundary-value samples phi(b; .) on the even free lattice (n pi/b)^2.

    At these points the sine prefactor of D vanishes and the cosine equals
    (-1)^n, so phi(b; lam_n) = (-1)^(n+1) D(lam_n) exactly (up to the overall
    normalization carried by the source).
    """
    n = np.arange(1, n_max + 1)
    lams = (n * np.pi / b) ** 2
    vals = _source_values(d_source, lams.astype(complex))
    signs = np.where(n % 2 == 0, -1.0, 1.0)
    return [(float(l), complex(s * v)) for l, s, v in zip(lams, signs, vals)]


def sample_dphi_grid(d_source, b: float, n_max: int) -> list[tuple[float, complex]]:
    """Slope samples phi'(b; .) on the odd free lattice ((2n-1) pi/(2b))^2.

    There the cosine prefactor vanishes and the sine equals (-1)^(n+1), so
    phi'(b; lam_n) = (-1)^(n+1) sqrt(lam_n) D(lam_n) exactly.
    """
    n = np.arange(1, n_max + 1)
    lams = ((2 * n - 1) * np.pi / (2.0 * b)) ** 2
    vals = _source_values(d_source, lams.astype(complex))
    signs = np.where(n % 2 == 0, -1.0, 1.0)
    return [(float(l), complex(s * np.sqrt(l) * v)) for l, s, v in zip(lams, signs, vals)]


def sum_rule_check(data: SpectralData, mac: MaclaurinData,
                   truncation: int | None = None) -> float:
    """Relative residual of -gamma * sum(mult_j/lam_j) against D2.

    Requires a simple origin zero (d = 1).  The truncated reciprocal sum is
    completed with the tail model's exact polygamma sums when available.
    """
    if data.d != 1 or mac.d != 1:
        raise WrongOriginOrder("the reciprocal-zero sum rule holds only for d = 1")
    gamma = data.gamma if data.gamma is not None else mac.gamma
    if gamma is None:
        raise GammaMissing("sum rule needs gamma")
    groups = _truncated_groups(data, truncation)
    total = complex(0.0)
    for g in groups:
        total += g.multiplicity / g.lam
    if data.tail_model is not None:
        plan = _tail_plan(groups, data.tail_model)
        if plan.active:
            total += _tail_reciprocal_sum(plan)
    result = -float(gamma) * total.real
    d2 = mac.sum_rule_rhs
    return abs(result - d2) / abs(d2)
