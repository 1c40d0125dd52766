import numpy as np
import pytest

from teig.profiles import Profile, ProfileKind, liouville_transform, moments
from teig.shooting import (
    envelope_check,
    principal_sqrt,
    shoot_batch,
    shoot_schrodinger,
    shoot_wave,
)

from conftest import random_slow_cubic


def constant_rho_trace(rho, b, lam):
    """Closed-form boundary values for constant wave speed."""
    w = np.sqrt(complex(lam) * rho + 0j)
    if w == 0:
        return b, 1.0
    return np.sin(w * b) / w, np.cos(w * b)


class TestWave:
    def test_at_origin_any_profile(self, rng):
        p = random_slow_cubic(rng)
        tr = shoot_wave(p, 0.0)
        assert tr.phi_b == pytest.approx(p.b, rel=1e-13)
        assert tr.dphi_b == pytest.approx(1.0, rel=1e-13)

    def test_origin_lambda_derivatives_match_moment_formulas(self, rng):
        # the first expansion coefficient of the solution gives
        # d(phi)/d(lam)|_0 = M2(b) - b M1(b) and its slope -M1(b)
        p = random_slow_cubic(rng)
        m1, m2 = moments(p, p.b)
        tr = shoot_wave(p, 0.0)
        assert tr.dlam_phi_b == pytest.approx(m2 - p.b * m1, rel=1e-10)
        assert tr.dlam_dphi_b == pytest.approx(-m1, rel=1e-10)

    def test_quarter_at_four_pi_squared(self, quarter):
        tr = shoot_wave(quarter, 4 * np.pi**2)
        assert abs(tr.phi_b) < 1e-12
        assert tr.dphi_b == pytest.approx(-1.0, abs=1e-12)

    def test_four_ninths_closed_form(self, four_ninths):
        lam = 9 * np.pi**2 / 4
        phi, dphi = constant_rho_trace(4 / 9, 1.0, lam)
        tr = shoot_wave(four_ninths, lam)
        assert abs(tr.phi_b - phi) < 1e-12
        assert abs(tr.dphi_b - dphi) < 1e-12

    def test_complex_lambda_closed_form(self, quarter):
        lam = 30.0 - 7.0j
        phi, dphi = constant_rho_trace(0.25, 1.0, lam)
        tr = shoot_wave(quarter, lam)
        assert abs(tr.phi_b - phi) < 1e-12 * abs(phi)
        w = np.sqrt(lam * 0.25)
        dw = 0.25 / (2 * w)
        dphi_dlam = (np.cos(w) / w - np.sin(w) / w**2) * dw
        assert abs(tr.dlam_phi_b - dphi_dlam) < 1e-11 * abs(dphi_dlam)

    def test_strongly_negative_lambda(self, quarter):
        tr = shoot_wave(quarter, -1e4)
        exact = np.sinh(50.0) / 50.0
        assert tr.phi_b.real == pytest.approx(exact, rel=1e-10)

    def test_kind_checked(self, zero_potential):
        with pytest.raises(ValueError):
            shoot_wave(zero_potential, 1.0)


class TestSchrodinger:
    def test_free_lattice_zero(self, zero_potential):
        tr = shoot_schrodinger(zero_potential, np.pi**2)
        assert abs(tr.phi_b) < 1e-13

    def test_free_at_origin(self, zero_potential):
        tr = shoot_schrodinger(zero_potential, 0.0)
        assert tr.phi_b == pytest.approx(1.0, abs=1e-13)
        assert tr.dphi_b == pytest.approx(1.0, abs=1e-13)

    def test_linear_solution_when_mu_equals_v(self):
        p = Profile.constant(2.0, 1.0, kind=ProfileKind.POTENTIAL)
        tr = shoot_schrodinger(p, 2.0)
        assert tr.phi_b == pytest.approx(1.0, abs=1e-13)
        assert tr.dphi_b == pytest.approx(1.0, abs=1e-13)

    def test_real_mu_gives_real_solution(self, rng):
        p = Profile.from_coeffs([1.0, -0.7, 0.4], 1.0, kind=ProfileKind.POTENTIAL)
        mus = rng.uniform(-20, 60, 8).astype(complex)
        tr = shoot_batch(p, mus)
        assert np.max(np.abs(tr.phi_b.imag) / np.abs(tr.phi_b)) < 1e-12
        assert np.max(np.abs(tr.dphi_b.imag) / np.abs(tr.dphi_b)) < 1e-12


class TestTraceInvariants:
    def test_conjugation_symmetry_hundred_pairs(self, rng):
        # 100 random (profile, lambda) pairs: 10 profiles x 10 batched lambdas
        for _ in range(10):
            p = random_slow_cubic(rng)
            lams = rng.uniform(-40, 90, 10) + 1j * rng.uniform(-25, 25, 10)
            plus = shoot_batch(p, lams)
            minus = shoot_batch(p, np.conj(lams))
            for field in ("phi_b", "dphi_b", "dlam_phi_b", "dlam_dphi_b"):
                a = getattr(plus, field)
                c = getattr(minus, field)
                assert np.max(np.abs(np.conj(a) - c) / np.abs(a)) <= 1e-10

    def test_trace_never_fully_vanishes(self, rng):
        p = random_slow_cubic(rng)
        lams = rng.uniform(0.5, 400, 30).astype(complex)
        tr = shoot_batch(p, lams)
        assert np.min(np.abs(tr.phi_b) + np.abs(tr.dphi_b)) > 1e-8

    def test_lambda_derivative_against_finite_difference(self, rng):
        p = random_slow_cubic(rng)
        for lam in (3.7, -45.0, 800.0 + 55.0j, 9000.0):
            h = 1e-6 * max(1.0, abs(lam))
            plus = shoot_wave(p, lam + h)
            minus = shoot_wave(p, lam - h)
            fd = (plus.phi_b - minus.phi_b) / (2 * h)
            tr = shoot_wave(p, lam)
            assert abs(tr.dlam_phi_b - fd) <= 1e-5 * abs(fd)

    def test_mean_value_property(self, rng):
        # phi(b; .) is entire, so its circle average equals the center value
        p = random_slow_cubic(rng)
        center = complex(rng.uniform(5, 60), rng.uniform(-5, 5))
        ring = center + 1.0 * np.exp(2j * np.pi * np.arange(64) / 64)
        ring_vals = shoot_batch(p, ring).phi_b
        mid = shoot_batch(p, [center]).phi_b[0]
        assert abs(np.mean(ring_vals) - mid) <= 1e-8 * abs(mid)

    def test_to_dict_round_trip_fields(self, quarter):
        tr = shoot_wave(quarter, 1.0 + 2.0j)
        payload = tr.to_dict()
        assert payload["equation"] == "wave"
        assert payload["lambda"] == [1.0, 2.0]
        assert payload["phi_b"][0] == tr.phi_b.real


class TestPrincipalSqrt:
    def test_negative_reals_map_up(self):
        w = complex(principal_sqrt(-4.0))
        assert w == pytest.approx(2j)
        w = complex(principal_sqrt(complex(-4.0, -0.0)))
        assert w.imag > 0

    def test_branch_window(self, rng):
        lams = rng.uniform(-50, 50, 20) + 1j * rng.uniform(-50, 50, 20)
        w = principal_sqrt(lams)
        args = np.angle(w)
        assert np.all((args > -np.pi / 2 - 1e-12) & (args <= np.pi / 2 + 1e-12))


class TestEnvelope:
    def test_identity_profile_leading_term_exact(self):
        p = Profile.constant(1.0, 1.0)
        img = liouville_transform(p)
        for lam in (7.0, 160.0, -90.0):
            rep = envelope_check(shoot_wave(p, lam), img)
            assert rep.ratio_phi < 1e-11
            assert rep.ratio_dphi < 1e-11

    def test_constant_profile_ratio_is_noise(self, quarter):
        # for constant speed the leading form is exact; the measured
        # constant can only reflect solver noise
        img = liouville_transform(quarter)
        for lam in (1e2, 1e4):
            rep = envelope_check(shoot_wave(quarter, lam), img)
            assert rep.ratio_phi < 1e-9
            assert rep.ratio_dphi < 1e-9

    def test_ratio_bounded_and_non_growing(self, rng):
        p = random_slow_cubic(rng)
        img = liouville_transform(p)

        def decade_max(scale):
            return max(envelope_check(shoot_wave(p, scale * (1 + k / 10)), img).ratio_phi
                       for k in range(6))

        lo, mid, hi = decade_max(1e2), decade_max(1e3), decade_max(1e4)
        assert hi <= 1.2 * lo
        assert mid <= 1.2 * lo

    def test_constant_profile_negative_ray_deviation_is_noise(self, four_ninths):
        img = liouville_transform(four_ninths)
        rel = envelope_check(shoot_wave(four_ninths, -1e4), img).rel_phi
        assert rel < 1e-9

    def test_relative_decay_along_negative_ray(self, rng):
        p = random_slow_cubic(rng)
        img = liouville_transform(p)
        rel2 = envelope_check(shoot_wave(p, -1e2), img).rel_phi
        rel4 = envelope_check(shoot_wave(p, -1e4), img).rel_phi
        # O(1/sqrt(lam)) decay: constant fit at 1e2, slack factor 1.5
        c_fit = rel2 * np.sqrt(1e2)
        assert rel4 <= 1.5 * c_fit / np.sqrt(1e4)
