"""Command-line front end.

Subcommands
-----------
forward      locate eigenvalues of a profile in a spectral-plane region;
             writes the record table (CSV/JSON), a |D| grid for external
             plotting, and rendered figures alongside.
verify       run the invariant suite on a profile and emit a JSON report.
invert       recover a profile from spectral data (problem JSON).
sample-grid  emit boundary-trace samples recovered from the dispersion
             function on the two free lattices.
asymptotics  tabulate the real-eigenvalue lattice prediction.

Exit codes: 0 success (invert: converged); 1 verification failure or
non-converged inversion; 2 malformed input; 3 identically-zero dispersion
function (trivial profile); 4 regime refusal (inversion outside the covered
regimes, or missing gamma where it is required); 5 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import dispersion_evaluator, maclaurin
from .errors import (
    DegenerateExpansion,
    GammaMissing,
    IdenticallyZero,
    RegimeAEqualsB,
    RegimeMismatch,
    SchemaError,
    TeigError,
)
from .factorization import (
    SpectralData,
    sample_dphi_grid,
    sample_phi_grid,
    spectral_data_evaluator,
)
from .inversion import InversionProblem, infer_travel_time, fit_profile
from .profiles import Profile, ProfileKind, classify_regime, liouville_transform, travel_time
from .shooting import shoot_batch, shoot_schrodinger, shoot_wave
from .spectra import (
    ContourBox,
    asymptotic_lattice,
    find_eigenvalues,
    records_to_csv,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_SCHEMA = 2
EXIT_TRIVIAL = 3
EXIT_REGIME = 4
EXIT_NUMERIC = 5


@dataclass
class RunConfig:
    command: str
    profile_path: str | None = None
    spectral_data_path: str | None = None
    region: tuple[float, float, float, float] | None = None
    resolution: float = 1e-2
    truncation: int | None = None
    out: str | None = None
    fmt: str = "csv"
    workers: int = 0
    figures: bool = True
    dgrid: tuple[int, int] = (160, 48)
    n_max: int = 24
    tol_shoot_rel: float = 1e-12
    tol_shoot_abs: float = 1e-14
    tol_equal_band: float = 1e-9
    tol_sum_rule: float = 5e-2

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        env = os.environ.get("TEIG_WORKERS", "")
        if env.strip().isdigit() and int(env) > 0:
            return int(env)
        return os.cpu_count() or 1


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _load_profile(cfg: RunConfig) -> Profile:
    if not cfg.profile_path:
        raise SchemaError("this command needs --profile FILE")
    return Profile.from_json(cfg.profile_path)


def _default_region(profile: Profile) -> tuple[float, float, float, float]:
    """Heuristic search rectangle.

    Width reaches past the sixth lattice eigenvalue; the imaginary band
    scales like sqrt(re_hi)/|a-b|, the growth rate of the imaginary parts
    observed for constant-speed profiles.  Users should widen the region
    when hunting further complex pairs.
    """
    b = profile.b
    if profile.kind is ProfileKind.WAVE_SPEED:
        a = travel_time(profile)
        c = abs(a - b)
        if c > 1e-9 * b:
            re_hi = 1.1 * 36.0 * np.pi**2 / c**2
            im_half = max(5.0 / b**2, 1.3 * np.sqrt(re_hi) / max(c, 0.15 * b))
        else:
            re_hi = 250.0 / b**2
            im_half = 0.5 * re_hi
    else:
        re_hi = (6.5 * np.pi / b) ** 2
        im_half = max(5.0, 1.5 * np.sqrt(re_hi))
    return (-max(1.0, 0.005 * re_hi), re_hi, -im_half, im_half)


def _dispersion_grid(evaluator, region, shape, workers):
    re = np.linspace(region[0], region[1], shape[0])
    im = np.linspace(region[2], region[3], shape[1])
    lams = (re[None, :] + 1j * im[:, None]).ravel()
    chunks = np.array_split(np.arange(lams.size), max(1, lams.size // 480))

    def work(idx):
        return idx, evaluator.values(lams[idx])

    out = np.empty(lams.size, dtype=complex)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for idx, vals in pool.map(work, chunks):
                out[idx] = vals
    else:
        for idx in chunks:
            out[idx] = evaluator.values(lams[idx])
    return re, im, out.reshape(im.size, re.size)


def _grid_csv(re, im, values) -> str:
    lines = ["re,im,abs_D,arg_D"]
    for i, imv in enumerate(im):
        for j, rev in enumerate(re):
            v = values[i, j]
            lines.append(f"{rev!r},{imv!r},{abs(v)!r},{float(np.angle(v))!r}")
    return "\n".join(lines) + "\n"


def _records_payload(records):
    return [r.to_dict() for r in records]


def cmd_forward(cfg: RunConfig) -> int:
    profile = _load_profile(cfg)
    evaluator = dispersion_evaluator(profile, rtol=cfg.tol_shoot_rel,
                                     atol=cfg.tol_shoot_abs)
    region_spec = cfg.region or _default_region(profile)
    region = ContourBox(*region_spec)
    lattice_unit = None
    if profile.kind is ProfileKind.WAVE_SPEED:
        a = travel_time(profile)
        if abs(a - profile.b) > cfg.tol_equal_band * profile.b:
            lattice_unit = np.pi**2 / (a - profile.b) ** 2
    try:
        records = find_eigenvalues(evaluator, region, cfg.resolution,
                                   lattice_unit=lattice_unit)
    except IdenticallyZero:
        sys.stderr.write(
            "dispersion function is identically zero: the profile is the "
            "trivial one (unit wave speed / zero potential)\n"
        )
        return EXIT_TRIVIAL

    if cfg.fmt == "json":
        payload = {
            "profile": profile.name,
            "region": list(region_spec),
            "resolution": cfg.resolution,
            "records": _records_payload(records),
        }
        _emit(_json_text(payload), cfg.out)
    else:
        _emit(records_to_csv(records), cfg.out)

    if cfg.out:
        stem = Path(cfg.out)
        re, im, vals = _dispersion_grid(evaluator, region_spec, cfg.dgrid,
                                        cfg.resolved_workers())
        _emit(_grid_csv(re, im, vals), str(stem.with_name(stem.stem + "_dgrid.csv")))
        if cfg.figures:
            from . import plots
            plots.render_dispersion_map(re, im, np.abs(vals), records,
                                        str(stem.with_name(stem.stem + "_dmap.png")))
            plots.render_spectrum(records,
                                  str(stem.with_name(stem.stem + "_spectrum.png")))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _check(name, residual, tol, detail=""):
    return {
        "name": name,
        "residual": float(residual),
        "tolerance": float(tol),
        "passed": bool(residual <= tol),
        "skipped": False,
        "detail": detail,
    }


def _skip(name, reason):
    return {"name": name, "residual": None, "tolerance": None,
            "passed": True, "skipped": True, "detail": reason}


def _verify_wave(profile: Profile, cfg: RunConfig, checks: list):
    rng = np.random.default_rng(20260809)
    evaluator = dispersion_evaluator(profile, rtol=cfg.tol_shoot_rel,
                                     atol=cfg.tol_shoot_abs)
    b = profile.b

    # conjugation symmetry of traces and dispersion values
    lams = (rng.uniform(-30, 80, 10) + 1j * rng.uniform(-20, 20, 10)) / b**2
    vplus, _ = evaluator.batch(lams)
    vminus, _ = evaluator.batch(np.conj(lams))
    conj_res = float(np.max(np.abs(vminus - np.conj(vplus))
                            / (1.0 + np.abs(vplus))))
    checks.append(_check("conjugation_symmetry", conj_res, 1e-10))

    # branch independence of the assembled trigonometric prefactors
    probe = lams[:4]
    w = np.sqrt(probe + 0j)
    s_plus = np.sin(w * b) / w
    s_minus = np.sin(-w * b) / (-w)
    c_diff = np.abs(np.cos(w * b) - np.cos(-w * b))
    branch_res = float(np.max(np.abs(s_plus - s_minus) + c_diff)
                       / max(1.0, float(np.max(np.abs(s_plus)))))
    checks.append(_check("branch_independence", branch_res, 1e-12))

    # entirety proxy: mean value of phi(b; .) on a small circle
    center = complex(9.0 / b**2, 1.0 / b**2)
    radius = 2.0 / b**2
    angles = np.exp(2j * np.pi * np.arange(64) / 64)
    ring = shoot_batch(profile, center + radius * angles).phi_b
    mid = shoot_batch(profile, [center]).phi_b[0]
    mv_res = float(abs(np.mean(ring) - mid) / abs(mid))
    checks.append(_check("mean_value_property", mv_res, 1e-8))

    # origin value and Maclaurin finite-difference consistency
    d0 = evaluator(0.0).value
    try:
        mac = maclaurin(profile)
    except DegenerateExpansion:
        mac = None
    checks.append(_check("dispersion_vanishes_at_origin", abs(d0),
                         1e-9 * max(b**3, 1.0)))
    if mac is None:
        checks.append(_skip("maclaurin_consistency",
                            "degenerate expansion (both low-order terms vanish)"))
    else:
        def d_at(x):
            return evaluator(x).value.real

        d1_fd, d2_fd = [], []
        for h in (1e-3 / b**2, 1e-4 / b**2):
            d1_fd.append((d_at(h) - d_at(-h)) / (2 * h))
            d2_fd.append((d_at(h) - 2 * d_at(0.0) + d_at(-h)) / h**2 / 2.0)
        rich = lambda pair: (100.0 * pair[1] - pair[0]) / 99.0
        res = max(abs(rich(d1_fd) - mac.coeffs[1]) / max(abs(mac.coeffs[1]), 1e-300),
                  abs(rich(d2_fd) - mac.coeffs[2]) / max(abs(mac.coeffs[2]), 1e-300))
        checks.append(_check("maclaurin_consistency", res, 1e-6))

    # sampling identities against direct shooting; a sample may sit exactly
    # on a zero of the trace, so denominators are floored at the grid scale
    n_samp = 6
    phi_pairs = sample_phi_grid(evaluator, b, n_samp)
    dphi_pairs = sample_dphi_grid(evaluator, b, n_samp)
    lam_even = np.array([l for l, _ in phi_pairs], dtype=complex)
    lam_odd = np.array([l for l, _ in dphi_pairs], dtype=complex)
    tr_even = shoot_batch(profile, lam_even)
    tr_odd = shoot_batch(profile, lam_odd)
    floor_phi = 0.01 * float(np.max(np.abs(tr_even.phi_b)))
    floor_dphi = 0.01 * float(np.max(np.abs(tr_odd.dphi_b)))
    res_phi = float(np.max(np.abs(np.array([v for _, v in phi_pairs]) - tr_even.phi_b)
                           / np.maximum(np.abs(tr_even.phi_b), floor_phi)))
    res_dphi = float(np.max(np.abs(np.array([v for _, v in dphi_pairs]) - tr_odd.dphi_b)
                            / np.maximum(np.abs(tr_odd.dphi_b), floor_dphi)))
    checks.append(_check("sampling_identity_phi", res_phi, 1e-9))
    checks.append(_check("sampling_identity_dphi", res_dphi, 1e-9))

    # Liouville-picture consistency (needs a genuinely continuous profile)
    if profile.is_continuous:
        image = liouville_transform(profile)
        worst = 0.0
        for lam in (7.0 / b**2, -11.0 / b**2, complex(23.0, 9.0) / b**2):
            for x in (b / 4, b / 2, b):
                tw = shoot_wave(profile.restrict(x), lam,
                                rtol=cfg.tol_shoot_rel, atol=cfg.tol_shoot_abs)
                y = float(image.y_of_x(x))
                ts = shoot_schrodinger(image.q.restrict(y), lam,
                                       rtol=cfg.tol_shoot_rel, atol=cfg.tol_shoot_abs)
                mapped = image.phi0_scale * ts.phi_b * float(profile.value(x)) ** (-0.25)
                worst = max(worst, abs(tw.phi_b - mapped) / abs(tw.phi_b))
        checks.append(_check("liouville_consistency", worst, 1e-7))
    else:
        checks.append(_skip("liouville_consistency",
                            "profile is not value-continuous"))

    # sum rule: the reciprocal-zero sum over two origin-centered contours
    # (every enclosed zero counts, complex pairs included), completed by a
    # 1/sqrt(R) extrapolation of the annulus contribution
    if mac is None or mac.d != 1:
        reason = ("origin order d != 1" if mac is not None
                  else "degenerate expansion")
        checks.append(_skip("sum_rule", reason))
        return
    a = travel_time(profile)
    if abs(a - b) <= cfg.tol_equal_band * b:
        checks.append(_skip("sum_rule", "travel time equals radius (no lattice)"))
        return
    from .spectra import reciprocal_zero_sum

    unit = np.pi**2 / (a - b) ** 2
    correction = mac.coeffs[2] / mac.coeffs[1]
    r1, r2 = 8.5**2 * unit, 16.5**2 * unit
    s_in1 = reciprocal_zero_sum(evaluator, r1, correction, err_target=1e-6)
    s_in2 = reciprocal_zero_sum(evaluator, r2, correction, err_target=1e-6)
    tail = (s_in2 - s_in1) * (1 / np.sqrt(r2)) / (1 / np.sqrt(r1) - 1 / np.sqrt(r2))
    total = s_in2 + tail
    res = abs(-mac.gamma * total - mac.sum_rule_rhs) / abs(mac.sum_rule_rhs)
    checks.append(_check("sum_rule", res, cfg.tol_sum_rule,
                         detail="contour reciprocal sums + extrapolated tail"))


def cmd_verify(cfg: RunConfig) -> int:
    profile = _load_profile(cfg)
    checks: list = []
    trivial = False
    evaluator = dispersion_evaluator(profile)
    probes = (np.linspace(1.0, 60.0, 16) / profile.b**2).astype(complex)
    mags = np.abs(evaluator.values(probes))
    scale = float(np.max(evaluator.term_scale(probes)))
    if float(np.max(mags)) < 1e-9 * max(scale, 1e-300):
        trivial = True
        report = {
            "profile": profile.name,
            "trivial_profile": True,
            "detail": "dispersion function identically zero; the profile is "
                      "the trivial one and all identities hold degenerately",
            "checks": [],
            "all_passed": True,
        }
        _emit(_json_text(report), cfg.out)
        return EXIT_OK
    if profile.kind is ProfileKind.WAVE_SPEED:
        a = travel_time(profile)
        regime = classify_regime(profile).value
        extra = {"travel_time": a, "travel_time_minus_b": a - profile.b,
                 "regime": regime}
        _verify_wave(profile, cfg, checks)
    else:
        extra = {}
        rng = np.random.default_rng(20260809)
        lams = (rng.uniform(-30, 80, 10) + 1j * rng.uniform(-20, 20, 10))
        vplus, _ = evaluator.batch(lams)
        vminus, _ = evaluator.batch(np.conj(lams))
        checks.append(_check("conjugation_symmetry",
                             float(np.max(np.abs(vminus - np.conj(vplus))
                                          / (1.0 + np.abs(vplus)))), 1e-10))
        mu_real = np.linspace(0.5, 40.0, 8).astype(complex)
        tr = shoot_batch(profile, mu_real)
        checks.append(_check("real_solution_reality",
                             float(np.max(np.abs(tr.phi_b.imag)
                                          / np.abs(tr.phi_b))), 1e-12))
    all_passed = all(c["passed"] for c in checks)
    if profile.kind is ProfileKind.WAVE_SPEED:
        trace = shoot_wave(profile, complex(1.0, 1.0))
    else:
        trace = shoot_schrodinger(profile, complex(1.0, 1.0))
    report = {
        "profile": profile.name,
        "trivial_profile": trivial,
        "checks": checks,
        "all_passed": all_passed,
        "trace_sample": trace.to_dict(),
    }
    report.update(extra)
    _emit(_json_text(report), cfg.out)
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# invert / sample-grid / asymptotics
# ---------------------------------------------------------------------------

def cmd_invert(cfg: RunConfig) -> int:
    if not cfg.spectral_data_path:
        raise SchemaError("invert needs --spectral-data FILE (problem JSON)")
    with open(cfg.spectral_data_path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"bad problem JSON: {exc}") from exc
    problem = InversionProblem.from_dict(payload)
    result = fit_profile(problem)
    _emit(_json_text(result.to_dict()), cfg.out)
    if cfg.out and cfg.figures:
        from . import plots
        stem = Path(cfg.out)
        plots.render_inversion(result, str(stem.with_name(stem.stem + "_fit.png")))
    return EXIT_OK if result.converged else EXIT_CHECK_FAILED


def cmd_sample_grid(cfg: RunConfig) -> int:
    if cfg.spectral_data_path:
        data = SpectralData.from_json(cfg.spectral_data_path)
        if data.gamma is None:
            raise GammaMissing("sampling a reconstructed dispersion function "
                               "needs gamma in the data file")
        b = data.tail_model.b if data.tail_model else 1.0
        source = spectral_data_evaluator(data, cfg.truncation, length_scale=b)
        name = "spectral-data"
    else:
        profile = _load_profile(cfg)
        b = profile.b
        source = dispersion_evaluator(profile, rtol=cfg.tol_shoot_rel,
                                      atol=cfg.tol_shoot_abs)
        name = profile.name
    phi_pairs = sample_phi_grid(source, b, cfg.n_max)
    dphi_pairs = sample_dphi_grid(source, b, cfg.n_max)
    if cfg.fmt == "json":
        payload = {
            "source": name,
            "phi_samples": [[l, v.real] for l, v in phi_pairs],
            "dphi_samples": [[l, v.real] for l, v in dphi_pairs],
        }
        _emit(_json_text(payload), cfg.out)
    else:
        lines = ["n,lambda_phi,phi_b,lambda_dphi,dphi_b"]
        for n, ((lp, vp), (ld, vd)) in enumerate(zip(phi_pairs, dphi_pairs), start=1):
            lines.append(f"{n},{lp!r},{vp.real!r},{ld!r},{vd.real!r}")
        _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def cmd_asymptotics(cfg: RunConfig) -> int:
    if cfg.spectral_data_path:
        data = SpectralData.from_json(cfg.spectral_data_path)
        b = data.tail_model.b if data.tail_model else 1.0
        a = infer_travel_time(data, b)
        _emit(_json_text({"inferred_travel_time": a, "b": b,
                          "lattice_unit": float(np.pi**2 / (a - b) ** 2)}), cfg.out)
        return EXIT_OK
    profile = _load_profile(cfg)
    try:
        rows = [(n, asymptotic_lattice(profile, n)) for n in range(1, cfg.n_max + 1)]
    except RegimeAEqualsB:
        sys.stderr.write("lattice degenerates: travel time equals the radius\n")
        return EXIT_REGIME
    if cfg.fmt == "json":
        _emit(_json_text({"profile": profile.name,
                          "lattice": [[n, v] for n, v in rows]}), cfg.out)
    else:
        lines = ["n,lambda_lattice"] + [f"{n},{v!r}" for n, v in rows]
        _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _region(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("region needs re_lo,re_hi,im_lo,im_hi")
    return tuple(parts)


def _dgrid(text: str):
    parts = [int(v) for v in text.lower().split("x")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("grid needs COLSxROWS, e.g. 160x48")
    return tuple(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teig",
        description="special transmission eigenvalues: forward computation, "
                    "verification, and inverse profile recovery",
    )
    parser.add_argument("--version", action="version", version=f"teig {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, profile=False, data=False):
        if profile:
            p.add_argument("--profile", dest="profile_path", metavar="FILE")
        if data:
            p.add_argument("--spectral-data", dest="spectral_data_path", metavar="FILE")
        p.add_argument("--out", metavar="FILE", default=None)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=0,
                       help="worker threads (0: TEIG_WORKERS env or core count)")
        p.add_argument("--tol-shoot-rel", type=float, default=1e-12)
        p.add_argument("--tol-shoot-abs", type=float, default=1e-14)
        p.add_argument("--tol-equal-band", type=float, default=1e-9)

    p = sub.add_parser("forward", help="locate eigenvalues with multiplicities")
    common(p, profile=True)
    p.add_argument("--region", type=_region, default=None,
                   metavar="re_lo,re_hi,im_lo,im_hi")
    p.add_argument("--resolution", type=float, default=1e-2)
    p.add_argument("--dgrid", type=_dgrid, default=(160, 48), metavar="COLSxROWS")
    p.add_argument("--no-figures", dest="figures", action="store_false")

    p = sub.add_parser("verify", help="run the invariant suite on a profile")
    common(p, profile=True)
    p.add_argument("--tol-sum-rule", type=float, default=5e-2)

    p = sub.add_parser("invert", help="recover a profile from spectral data")
    common(p, data=True)
    p.add_argument("--no-figures", dest="figures", action="store_false")

    p = sub.add_parser("sample-grid", help="boundary-trace samples from D")
    common(p, profile=True, data=True)
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--nmax", dest="n_max", type=int, default=24)

    p = sub.add_parser("asymptotics", help="real-eigenvalue lattice prediction")
    common(p, profile=True, data=True)
    p.add_argument("--nmax", dest="n_max", type=int, default=20)
    return parser


_HANDLERS = {
    "forward": cmd_forward,
    "verify": cmd_verify,
    "invert": cmd_invert,
    "sample-grid": cmd_sample_grid,
    "asymptotics": cmd_asymptotics,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(command=ns.command)
    for name, value in vars(ns).items():
        if name != "command" and hasattr(cfg, name):
            setattr(cfg, name, value)
    try:
        return _HANDLERS[ns.command](cfg)
    except (SchemaError, FileNotFoundError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_SCHEMA
    except IdenticallyZero as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_TRIVIAL
    except (RegimeMismatch, GammaMissing, RegimeAEqualsB) as exc:
        sys.stderr.write(f"regime refusal: {exc}\n")
        return EXIT_REGIME
    except TeigError as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
