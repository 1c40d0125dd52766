import json

import numpy as np
import pytest

from teig.errors import NonPositiveProfile, OutOfDomain, SchemaError
from teig.profiles import (
    Profile,
    ProfileKind,
    Regime,
    classify_regime,
    first_moment_square_integral,
    liouville_transform,
    moment_integral,
    moments,
    travel_time,
)

from conftest import random_slow_cubic


class TestTravelTime:
    def test_constant_quarter(self, quarter):
        assert travel_time(quarter) == pytest.approx(0.5, abs=1e-12)

    def test_identity_speed_b2(self):
        p = Profile.constant(1.0, 2.0)
        assert travel_time(p) == pytest.approx(2.0, abs=1e-12)

    def test_growing_square(self, growing_square):
        # sqrt((1+x)^2) integrates to 3/2 on [0,1]
        assert travel_time(growing_square) == pytest.approx(1.5, abs=1e-12)

    def test_matches_trapezoid_refinement(self, rng):
        p = random_slow_cubic(rng)
        xs = np.linspace(0.0, p.b, 200001)
        oracle = np.trapezoid(np.sqrt(p.value(xs)), xs)
        assert travel_time(p) == pytest.approx(oracle, rel=1e-10)


class TestRegime:
    def test_trichotomy(self, quarter, growing_square):
        assert classify_regime(quarter) is Regime.A_LESS_B
        assert classify_regime(Profile.constant(1.0, 1.0)) is Regime.A_EQUALS_B
        assert classify_regime(growing_square) is Regime.A_GREATER_B


class TestMoments:
    def test_constant_quarter(self, quarter):
        m1, m2 = moments(quarter, 1.0)
        assert m1 == pytest.approx(1.0 / 8.0, abs=1e-14)
        assert m2 == pytest.approx(1.0 / 12.0, abs=1e-14)

    def test_unit_full_domain(self):
        p = Profile.constant(1.0, 1.7)
        m1, m2 = moments(p, 1.7)
        assert m1 == pytest.approx(1.7**2 / 2.0, rel=1e-14)
        assert m2 == pytest.approx(1.7**3 / 3.0, rel=1e-14)

    def test_growing_square_polynomial_oracle(self, growing_square):
        # integrate z^k (1+z)^2 exactly with the polynomial module
        poly = np.polynomial.Polynomial([1.0, 2.0, 1.0])
        z = np.polynomial.Polynomial([0.0, 1.0])
        m1_exact = (z * poly).integ()(1.0)
        m2_exact = (z * z * poly).integ()(1.0)
        m1, m2 = moments(growing_square, 1.0)
        assert m1 == pytest.approx(m1_exact, rel=1e-14)
        assert m2 == pytest.approx(m2_exact, rel=1e-14)
        assert m1_exact == pytest.approx(17.0 / 12.0)
        assert m2_exact == pytest.approx(31.0 / 30.0)

    def test_monotone_in_x(self, rng):
        p = random_slow_cubic(rng)
        xs = np.linspace(0.0, p.b, 40)
        vals = [moments(p, float(x)) for x in xs]
        m1s = [v[0] for v in vals]
        m2s = [v[1] for v in vals]
        assert all(b >= a for a, b in zip(m1s, m1s[1:]))
        assert all(b >= a for a, b in zip(m2s, m2s[1:]))

    def test_out_of_domain(self, quarter):
        with pytest.raises(OutOfDomain):
            moments(quarter, 1.5)

    def test_first_moment_square_integral(self, quarter):
        # M1(z) = z^2/8 for rho = 1/4, so the square integrates to 1/320
        assert first_moment_square_integral(quarter) == pytest.approx(1.0 / 320.0,
                                                                      rel=1e-13)

    def test_first_moment_square_quadrature_oracle(self, rng):
        p = random_slow_cubic(rng)
        zs = np.linspace(0.0, p.b, 4001)
        m1s = np.array([moment_integral(p, 1, 0.0, float(z)) for z in zs])
        oracle = np.trapezoid(m1s**2, zs)
        assert first_moment_square_integral(p) == pytest.approx(oracle, rel=1e-6)


class TestValidation:
    def test_positive_required(self):
        with pytest.raises(NonPositiveProfile):
            Profile.from_coeffs([0.5, -1.0], 1.0)

    def test_breakpoints_must_cover_domain(self):
        from teig.profiles import CubicPiece
        with pytest.raises(SchemaError):
            Profile(1.0, ProfileKind.WAVE_SPEED,
                    (CubicPiece(0.0, 0.5, (1.0, 0.0, 0.0, 0.0)),))

    def test_derivative_jump_rejected(self):
        from teig.profiles import CubicPiece
        pieces = (CubicPiece(0.0, 0.5, (1.0, 1.0, 0.0, 0.0)),
                  CubicPiece(0.5, 1.0, (1.5, -1.0, 0.0, 0.0)))
        with pytest.raises(SchemaError):
            Profile(1.0, ProfileKind.WAVE_SPEED, pieces)

    def test_step_profile_is_legal_but_not_continuous(self):
        p = Profile.step([0.25, 0.36], 1.0)
        assert not p.is_continuous
        assert p.value(0.25) == pytest.approx(0.25)
        assert p.value(0.75) == pytest.approx(0.36)

    def test_potential_may_be_negative(self):
        p = Profile.constant(-5.0, 1.0, kind=ProfileKind.POTENTIAL)
        assert p.value(0.3) == -5.0


class TestJson:
    def test_round_trip(self, rng, tmp_path):
        p = random_slow_cubic(rng)
        path = tmp_path / "p.json"
        p.to_json(path)
        q = Profile.from_json(path)
        xs = np.linspace(0, p.b, 50)
        assert np.allclose(p.value(xs), q.value(xs), rtol=0, atol=0)

    def test_schema_fields(self, quarter):
        payload = json.loads(quarter.to_json())
        assert payload["kind"] == "rho"
        assert payload["b"] == 1.0
        assert payload["pieces"][0]["coeffs"] == [0.25, 0.0, 0.0, 0.0]

    def test_bad_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(SchemaError):
            Profile.from_json(bad)


class TestLiouville:
    def test_constant_quarter(self, quarter):
        img = liouville_transform(quarter)
        assert img.a == pytest.approx(0.5, abs=1e-12)
        assert img.phi0_scale == pytest.approx(np.sqrt(2.0), rel=1e-14)
        ys = np.linspace(0, img.a, 65)
        assert np.max(np.abs(img.q.value(ys))) < 1e-9

    def test_identity_profile(self):
        img = liouville_transform(Profile.constant(1.0, 1.0))
        xs = np.linspace(0, 1, 33)
        assert np.max(np.abs(img.y_of_x(xs) - xs)) < 1e-12
        assert img.phi0_scale == pytest.approx(1.0)

    def test_q_formula_symbolic_check(self, growing_square):
        # rho = (1+x)^2: rho' = 2(1+x), rho'' = 2
        img = liouville_transform(growing_square)
        x = 0.5
        rho, d1, d2 = (1 + x) ** 2, 2 * (1 + x), 2.0
        q_exact = 0.25 * d2 / rho**2 - (5.0 / 16.0) * d1**2 / rho**3
        y = float(img.y_of_x(x))
        assert img.q.value(y) == pytest.approx(q_exact, rel=1e-8)

    def test_map_strictly_increasing_and_invertible(self, rng):
        p = random_slow_cubic(rng)
        img = liouville_transform(p)
        grid = p.audit_grid()
        ys = img.y_of_x(grid)
        assert np.all(np.diff(ys) > 0)
        assert np.max(np.abs(img.x_of_y(ys) - grid)) <= 1e-10

    def test_grid_node_floor(self, quarter):
        img = liouville_transform(quarter)
        assert len(img.q.pieces) >= 512 - 1

    def test_rejects_discontinuous(self):
        with pytest.raises(ValueError):
            liouville_transform(Profile.step([0.25, 0.36], 1.0))


class TestRestrict:
    def test_midpoint(self, growing_square):
        half = growing_square.restrict(0.5)
        assert half.b == 0.5
        xs = np.linspace(0, 0.5, 20)
        assert np.allclose(half.value(xs), growing_square.value(xs))
