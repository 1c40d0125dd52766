import numpy as np
import pytest
from scipy.optimize import brentq

from teig.dispersion import (
    DispersionEvaluator,
    constant_potential_evaluator,
    dispersion_evaluator,
)
from teig.errors import IdenticallyZero, RegimeAEqualsB
from teig.profiles import Profile, ProfileKind
from teig.shooting import EquationKind
from teig.spectra import (
    ContourBox,
    EigenvalueKind,
    asymptotic_lattice,
    count_zeros,
    dirichlet_neumann_spectrum,
    dirichlet_spectrum,
    find_eigenvalues,
    polish_root,
    records_from_csv,
    records_to_csv,
)



def product_evaluator(roots, scale=1.0):
    """Synthetic entire function with prescribed zeros (exact oracle)."""

    def batch(z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.full_like(z, scale) * np.exp(z / 60.0)
            logd = np.full_like(z, 1.0 / 60.0)
            for r, m in roots:
                val = val * (z - r) ** m
                logd = logd + m / (z - r)
            dval = val * logd
        return val, dval

    return DispersionEvaluator(batch=batch, equation=EquationKind.WAVE,
                               length_scale=1.0)


class TestCountZeros:
    def test_synthetic_counts(self):
        ev = product_evaluator([(0.0, 1), (10.0, 3), (3 + 2j, 1), (3 - 2j, 1)])
        assert count_zeros(ev, ContourBox(-1, 12, -4, 4)) == 6
        assert count_zeros(ev, ContourBox(5, 12, -1, 1)) == 3
        assert count_zeros(ev, ContourBox(4, 8, -1, 1)) == 0

    def test_additivity_under_subdivision(self):
        ev = product_evaluator([(2.0, 2), (6.5, 1), (4 + 1j, 1), (4 - 1j, 1)])
        parent = ContourBox(0.5, 8.0, -2.5, 2.5)
        total = count_zeros(ev, parent)
        kids = parent.split(0.5, 0.52)  # avoid the real axis on the split line
        assert total == sum(count_zeros(ev, k) for k in kids)

    def test_quarter_example_box(self, quarter):
        ev = dispersion_evaluator(quarter)
        assert count_zeros(ev, ContourBox(30, 50, -1, 1)) == 3

    def test_four_ninths_example_box(self, four_ninths):
        ev = dispersion_evaluator(four_ninths)
        assert count_zeros(ev, ContourBox(85, 95, -1, 1)) == 3

    def test_identically_zero_refused(self):
        ev = dispersion_evaluator(Profile.constant(1.0, 1.0))
        with pytest.raises(IdenticallyZero):
            count_zeros(ev, ContourBox(10, 60, -2, 2))

    def test_real_axis_additivity(self, quarter):
        ev = dispersion_evaluator(quarter)
        parent = ContourBox(1.0, 170.0, -2.0, 2.0)
        total = count_zeros(ev, parent)
        kids = parent.split(0.5, 0.5625)
        assert total == 6
        assert total == sum(count_zeros(ev, k) for k in kids)


class TestFindEigenvalues:
    def test_synthetic_multiplicity_cluster(self):
        ev = product_evaluator([(0.0, 1), (10.0, 3), (3 + 2j, 1), (3 - 2j, 1)])
        recs = find_eigenvalues(ev, ContourBox(-1, 12, -4, 4), 1e-3)
        got = {(round(r.lam.real, 8), round(r.lam.imag, 8), r.multiplicity)
               for r in recs}
        assert got == {(0.0, 0.0, 1), (10.0, 0.0, 3), (3.0, 2.0, 1), (3.0, -2.0, 1)}

    def test_quarter_spectrum(self, quarter):
        ev = dispersion_evaluator(quarter)
        recs = find_eigenvalues(ev, ContourBox(-1.0, 200.0, -5.0, 5.0), 0.05,
                                origin_order=1)
        assert [r.multiplicity for r in recs] == [1, 3, 3]
        assert recs[0].kind is EigenvalueKind.ORIGIN
        assert recs[1].lam.real == pytest.approx(4 * np.pi**2, rel=1e-9)
        assert recs[2].lam.real == pytest.approx(16 * np.pi**2, rel=1e-9)

    def test_four_ninths_complex_pair_against_closed_form(self, four_ninths):
        ev = dispersion_evaluator(four_ninths)
        ell = np.log((3.0 + np.sqrt(5.0)) / 2.0)
        expect = 9 * np.pi**2 / 4 - 2.25 * ell**2 + 4.5j * np.pi * ell
        recs = find_eigenvalues(ev, ContourBox(10.0, 30.0, -20.0, 20.0), 1e-3)
        assert len(recs) == 2
        assert recs[0].multiplicity == 1 and recs[1].multiplicity == 1
        assert recs[1].lam == pytest.approx(expect, rel=1e-9)
        assert recs[0].lam == pytest.approx(np.conj(expect), rel=1e-9)

    def test_conjugate_closure(self, four_ninths):
        ev = dispersion_evaluator(four_ninths)
        recs = find_eigenvalues(ev, ContourBox(-1.0, 120.0, -20.0, 20.0), 1e-2)
        total_imag = abs(sum(r.lam.imag for r in recs))
        assert total_imag <= 1e-9 * max(abs(r.lam) for r in recs)

    def test_multiplicity_crosscheck_winding_circle(self, quarter):
        ev = dispersion_evaluator(quarter)
        resolution = 0.05
        recs = find_eigenvalues(ev, ContourBox(30.0, 50.0, -1.0, 1.0), resolution)
        (rec,) = recs
        r = 10 * resolution
        circle = ContourBox(rec.lam.real - r, rec.lam.real + r,
                            rec.lam.imag - r, rec.lam.imag + r)
        assert count_zeros(ev, circle) == rec.multiplicity

    def test_real_zero_residual_small_on_box_scale(self, quarter):
        ev = dispersion_evaluator(quarter)
        box = ContourBox(30.0, 50.0, -1.0, 1.0)
        recs = find_eigenvalues(ev, box, 0.05)
        grid = np.linspace(box.re_lo, box.re_hi, 41).astype(complex)
        local_scale = float(np.max(np.abs(ev.values(grid))))
        assert recs[0].residual <= 1e-9 * local_scale

    def test_schrodinger_constant_potential_toy(self):
        # oracle: brentq on the closed constant-potential dispersion
        v, b = 2.0, 1.0
        oracle = constant_potential_evaluator(v, b)

        def f(mu):
            return oracle(complex(mu)).value.real

        grid = np.linspace(0.5, 120.0, 600)
        vals = np.array([f(m) for m in grid])
        flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        roots = [brentq(f, grid[i], grid[i + 1], xtol=1e-12) for i in flips]

        p = Profile.constant(v, b, kind=ProfileKind.POTENTIAL)
        ev = dispersion_evaluator(p)
        recs = find_eigenvalues(ev, ContourBox(0.5, 120.0, -4.0, 4.0), 1e-3)
        reals = [r.lam.real for r in recs if r.kind is EigenvalueKind.REAL_POSITIVE]
        assert len(reals) == len(roots)
        for got, want in zip(reals, roots):
            assert got == pytest.approx(want, abs=1e-3)

    def test_identically_zero_trivial_profile(self):
        ev = dispersion_evaluator(Profile.constant(1.0, 1.0))
        with pytest.raises(IdenticallyZero):
            find_eigenvalues(ev, ContourBox(-1, 100, -5, 5), 0.05)


class TestLattice:
    def test_example_profiles(self, quarter, four_ninths):
        assert asymptotic_lattice(quarter, 1) == pytest.approx(4 * np.pi**2, rel=1e-12)
        assert asymptotic_lattice(four_ninths, 1) == pytest.approx(9 * np.pi**2, rel=1e-12)
        assert asymptotic_lattice(Profile.constant(4.0, 1.0), 3) == pytest.approx(
            9 * np.pi**2, rel=1e-12)

    def test_equal_travel_time_degenerates(self):
        with pytest.raises(RegimeAEqualsB):
            asymptotic_lattice(Profile.constant(1.0, 1.0), 1)

    def test_quarter_lattice_exact_to_n40(self, quarter):
        # spot-check the exact-lattice claim beyond the low indices: the
        # located zero at n in {25, 32, 40} matches n^2 pi^2/(a-b)^2 to
        # root tolerance (centroid off a winding circle at the seed)
        from teig.spectra import _circle_moments
        ev = dispersion_evaluator(quarter)
        unit = 4 * np.pi**2
        for n in (25, 32, 40):
            seed = complex(n * n * unit)
            wc, s1, _, _ = _circle_moments(ev, seed, 0.3 * unit, 1e-9)
            assert wc == 3
            lam = (seed + s1 / wc).real
            assert abs(lam - n * n * unit) <= 1e-8 * n * n * unit


class TestAuxiliarySpectra:
    def test_quarter_dirichlet(self, quarter):
        got = dirichlet_spectrum(quarter, 4)
        for n, lam in enumerate(got, start=1):
            assert lam == pytest.approx(4 * n * n * np.pi**2, rel=1e-10)

    def test_free_potential_dirichlet(self, zero_potential):
        got = dirichlet_spectrum(zero_potential, 3)
        for n, lam in enumerate(got, start=1):
            assert lam == pytest.approx(n * n * np.pi**2, rel=1e-10)

    def test_unit_wave_b2_dirichlet(self):
        got = dirichlet_spectrum(Profile.constant(1.0, 2.0), 3)
        for n, lam in enumerate(got, start=1):
            assert lam == pytest.approx(n * n * np.pi**2 / 4.0, rel=1e-10)

    def test_quarter_dirichlet_neumann(self, quarter):
        got = dirichlet_neumann_spectrum(quarter, 4)
        for n, lam in enumerate(got, start=1):
            assert lam == pytest.approx((2 * n - 1) ** 2 * np.pi**2, rel=1e-10)

    def test_free_potential_dirichlet_neumann(self, zero_potential):
        got = dirichlet_neumann_spectrum(zero_potential, 3)
        for n, lam in enumerate(got, start=1):
            assert lam == pytest.approx((2 * n - 1) ** 2 * np.pi**2 / 4.0, rel=1e-10)

    def test_unit_wave_b2_dirichlet_neumann(self):
        got = dirichlet_neumann_spectrum(Profile.constant(1.0, 2.0), 3)
        for n, lam in enumerate(got, start=1):
            assert lam == pytest.approx((2 * n - 1) ** 2 * np.pi**2 / 16.0, rel=1e-10)

    def test_negative_potential_shifts_spectrum(self):
        p = Profile.constant(-30.0, 1.0, kind=ProfileKind.POTENTIAL)
        got = dirichlet_spectrum(p, 2)
        assert got[0] == pytest.approx(np.pi**2 - 30.0, rel=1e-9)


class TestCsv:
    def test_round_trip_shortest_decimal(self, quarter):
        ev = dispersion_evaluator(quarter)
        recs = find_eigenvalues(ev, ContourBox(-1.0, 60.0, -2.0, 2.0), 0.05,
                                lattice_unit=np.pi**2 / 0.25)
        text = records_to_csv(recs)
        back = records_from_csv(text)
        assert back == recs
        assert text.splitlines()[0] == \
            "re_lambda,im_lambda,multiplicity,kind,index_hint,residual"

    def test_polish_root_multiplicity_aware(self):
        ev = product_evaluator([(7.3, 1), (20.0, 2)])
        root, _, ok = polish_root(ev, complex(7.8, 0.3), 1)
        assert ok and root == pytest.approx(7.3, rel=1e-12)
        root, _, ok = polish_root(ev, complex(19.0), 2)
        assert ok and root == pytest.approx(20.0, rel=1e-10)
