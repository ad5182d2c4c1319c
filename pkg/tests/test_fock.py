import math

import numpy as np
import pytest

import sgphase as sg
from sgphase.errors import IncompatibleTruncation, TruncationTooSmall
from sgphase.fock import wavefunction_table

from conftest import brute_force_x_moment

PI4 = np.pi ** -0.25


class TestCoherent:
    def test_mean_photon_alpha_one(self):
        st = sg.make_coherent(1.0, 30)
        assert abs(st.mean_photon_number - 1.0) <= 1e-10

    def test_mean_photon_alpha_sqrt2(self):
        st = sg.make_coherent(math.sqrt(2.0), 40)
        assert abs(st.mean_photon_number - 2.0) <= 1e-10

    def test_vacuum_limit(self):
        st = sg.make_coherent(0.0, 5)
        assert np.array_equal(st.amplitudes, np.array([1, 0, 0, 0, 0, 0], dtype=complex))

    def test_truncation_too_small(self):
        with pytest.raises(TruncationTooSmall):
            sg.make_coherent(3.0, 5)

    def test_adaptive_default_cutoff(self):
        st = sg.make_coherent(2.5)
        assert abs(st.mean_photon_number - 6.25) <= 1e-9
        assert abs(st.norm - 1.0) <= 1e-12


class TestSqueezedVacuum:
    def test_mean_photon(self):
        st = sg.make_squeezed_vacuum(0.88, 60)
        assert abs(st.mean_photon_number - math.sinh(0.88) ** 2) <= 1e-7

    def test_zero_squeezing_is_vacuum(self):
        st = sg.make_squeezed_vacuum(0.0, 10)
        assert st.amplitudes[0] == 1.0
        assert np.all(st.amplitudes[1:] == 0.0)

    def test_even_parity(self):
        st = sg.make_squeezed_vacuum(0.88, 60)
        assert st.amplitudes[1] == 0.0
        assert st.amplitudes[3] == 0.0
        assert np.all(st.amplitudes[1::2] == 0.0)

    def test_quadrature_variance_fixes_sign_convention(self):
        # <x^2> at phi = 0 must be the squeezed one, e^{-2r}/2
        r = 0.88
        st = sg.make_squeezed_vacuum(r, 60)
        var = brute_force_x_moment(st.amplitudes, 2, lo_phase=0.0)
        assert abs(var - math.exp(-2 * r) / 2.0) <= 1e-8
        var_anti = brute_force_x_moment(st.amplitudes, 2, lo_phase=math.pi / 2)
        assert abs(var_anti - math.exp(2 * r) / 2.0) <= 1e-6

    def test_default_cutoff_adapts(self):
        st = sg.make_squeezed_vacuum(0.88)
        # the naive 4<n>+20 rule (30) leaves ~3e-6 outside; the constructor must grow past it
        assert st.truncation >= 48
        assert abs(st.mean_photon_number - math.sinh(0.88) ** 2) <= 1e-7


class TestWavefunctions:
    def test_ground_state_value(self):
        grid = sg.QuadratureGrid.symmetric(1.0, 3)
        psi0 = sg.quadrature_wavefunction(0, grid)
        assert abs(psi0[1] - PI4) <= 1e-15
        assert abs(PI4 - 0.7511255444649425) <= 1e-15

    def test_first_excited_odd(self):
        grid = sg.QuadratureGrid.symmetric(2.0, 5)
        psi1 = sg.quadrature_wavefunction(1, grid)
        assert psi1[2] == 0.0

    def test_l2_norm_high_order(self):
        grid = sg.QuadratureGrid.symmetric(10.0, 4001)
        psi = sg.quadrature_wavefunction(25, grid)
        norm = np.trapezoid(psi ** 2, grid.values)
        assert abs(norm - 1.0) <= 1e-6

    def test_parity_exact(self):
        x = 0.05 * (np.arange(241) - 120)  # bitwise symmetric about 0
        table = wavefunction_table(12, x)
        for n in range(13):
            assert np.array_equal(table[n][::-1], (-1.0) ** n * table[n])


class TestQuadratureDistribution:
    def test_vacuum_gaussian(self):
        grid = sg.QuadratureGrid.symmetric(6.0, 601)
        p = sg.quadrature_distribution(sg.make_vacuum(), 0.3, grid)
        expected = np.exp(-grid.values ** 2) / math.sqrt(math.pi)
        assert np.max(np.abs(p - expected)) <= 1e-12

    def test_coherent_mean_matches_displacement(self):
        st = sg.make_coherent(1.0, 40)
        grid = sg.QuadratureGrid.for_truncation(40, 4001)
        p = sg.quadrature_distribution(st, 0.0, grid)
        mean_dist = np.trapezoid(grid.values * p, grid.values)
        mean_ladder = brute_force_x_moment(st.amplitudes, 1, 0.0)
        assert abs(mean_dist - math.sqrt(2.0)) <= 1e-9
        assert abs(mean_ladder - math.sqrt(2.0)) <= 1e-10

    def test_phase_rotation_convention(self):
        # alpha = i displaces the phi = pi/2 quadrature to +sqrt(2)
        st = sg.make_coherent(1j, 40)
        grid = sg.QuadratureGrid.for_truncation(40, 4001)
        p = sg.quadrature_distribution(st, math.pi / 2, grid)
        mean = np.trapezoid(grid.values * p, grid.values)
        assert abs(mean - math.sqrt(2.0)) <= 1e-9

    def test_squeezed_variance_ratio(self, squeezed_state):
        grid = sg.QuadratureGrid.for_truncation(60, 4001)
        x = grid.values
        p0 = sg.quadrature_distribution(squeezed_state, 0.0, grid)
        p90 = sg.quadrature_distribution(squeezed_state, math.pi / 2, grid)
        v0 = np.trapezoid(x ** 2 * p0, x)
        v90 = np.trapezoid(x ** 2 * p90, x)
        assert abs(v0 / v90 - math.exp(-4 * 0.88)) <= 1e-6

    @pytest.mark.parametrize("maker", [lambda: sg.make_vacuum(8), lambda: sg.make_coherent(1.2, 40), lambda: sg.make_squeezed_vacuum(0.5, 40)])
    def test_normalization_and_positivity(self, maker):
        st = maker()
        grid = sg.QuadratureGrid.for_truncation(st.truncation, 2001)
        for phi in (0.0, 0.7, 2.3):
            p = sg.quadrature_distribution(st, phi, grid)
            assert np.min(p) >= -1e-12
            assert abs(np.trapezoid(p, grid.values) - 1.0) <= 1e-6

    def test_phase_shift_mirrors_outcome(self, squeezed_state):
        grid = sg.QuadratureGrid.for_truncation(60, 801)
        for phi in (0.0, 0.4, 1.1):
            lhs = sg.quadrature_distribution(squeezed_state, phi + math.pi, grid)
            rhs = sg.quadrature_distribution(squeezed_state, phi, grid)[::-1]
            assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_incompatible_wavefunction_table(self):
        st = sg.make_coherent(1.0, 30)
        grid = sg.QuadratureGrid.symmetric(5.0, 101)
        small = wavefunction_table(10, grid.values)
        with pytest.raises(IncompatibleTruncation):
            sg.quadrature_distribution(st, 0.0, grid, wavefunctions=small)


class TestDensityMatrix:
    def test_from_pure_round_trip(self):
        st = sg.make_coherent(0.7, 20)
        rho = st.density_matrix()
        assert rho.truncation == 20
        assert abs(np.trace(rho.elements).real - 1.0) <= 1e-12
        assert np.array_equal(rho.elements, rho.elements.conj().T)
        assert abs(rho.mean_photon_number - st.mean_photon_number) <= 1e-12

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
        with pytest.raises(ValueError):
            sg.DensityMatrix(bad)

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            sg.DensityMatrix(np.diag([0.7, 0.7]).astype(complex))
