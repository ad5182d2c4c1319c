import math

import numpy as np
import pytest
from scipy import linalg, special

import sgphase as sg
from sgphase._util import sinc
from sgphase.errors import DomainMismatch, EpsilonNonpositive
from sgphase.phase import (
    coarse_amplitudes,
    default_coarse_truncation,
    reduce_phase,
)


class TestOperators:
    def test_exponential_matrix_n1(self):
        e = sg.build_exponential_operator(1)
        assert np.array_equal(e, np.array([[0, 1], [0, 0]], dtype=complex))

    def test_one_sided_unitarity_lowest_block(self):
        e = sg.build_exponential_operator(2)
        ee = e @ e.conj().T
        assert np.array_equal(ee[:2, :2], np.eye(2, dtype=complex))
        assert np.array_equal(e.conj().T @ e, np.diag([0, 1, 1]).astype(complex))

    def test_c_psi_zero_is_cosine_operator(self):
        c = sg.build_c_psi_operator(0.0, 2)
        expected = np.array([[0, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0]], dtype=complex)
        assert np.array_equal(c, expected)

    def test_c_psi_quarter_is_sine_operator(self):
        s = sg.build_c_psi_operator(math.pi / 2, 2)
        e = sg.build_exponential_operator(2)
        expected = -0.5j * (e - e.conj().T)
        assert np.max(np.abs(s - expected)) <= 1e-15

    @pytest.mark.parametrize("psi", [0.0, 0.3, math.pi / 2, 2.5])
    def test_truncated_spectrum_inside_unit_interval(self, psi):
        c = sg.build_c_psi_operator(psi, 200)
        ev = linalg.eigvalsh(c)
        assert ev.min() >= -1.0 + 1e-12
        assert ev.max() <= 1.0 - 1e-12


class TestPhaseStates:
    def test_coefficient_pattern_at_right_angle(self):
        c = sg.phase_state_coefficients(math.pi / 2, 0.0, 8)
        expected = math.sqrt(2.0 / math.pi) * np.array([1, 0, -1, 0, 1, 0, -1, 0, 1])
        assert np.max(np.abs(c - expected)) <= 1e-14

    def test_cosine_specialization(self):
        phi = 0.73
        c = sg.phase_state_coefficients(phi, 0.0, 12)
        n = np.arange(13)
        assert np.max(np.abs(c - math.sqrt(2 / math.pi) * np.sin((n + 1) * phi))) <= 1e-14

    def test_sine_specialization_is_sine_eigenvector(self):
        # |sin phi> = |pi/2 - phi, psi = pi/2>: the truncated sine operator must
        # reproduce the eigenvalue on interior components
        phi = 0.41
        n_max = 400
        c = sg.phase_state_coefficients(math.pi / 2 - phi, math.pi / 2, n_max)
        s_op = sg.build_c_psi_operator(math.pi / 2, n_max)
        resid = s_op @ c - math.sin(phi) * c
        assert np.max(np.abs(resid[: n_max - 1])) <= 1e-10

    @pytest.mark.parametrize("phase,psi", [(0.9, 0.0), (2.2, 1.3), (0.3, math.pi / 2)])
    def test_truncated_eigen_relation(self, phase, psi):
        n_max = 500
        c = sg.phase_state_coefficients(phase, psi, n_max)
        op = sg.build_c_psi_operator(psi, n_max)
        resid = op @ c - math.cos(phase) * c
        assert np.max(np.abs(resid[: n_max - 1])) <= 1e-10

    @pytest.mark.parametrize("phase", [-0.3, 3.5, math.pi + 0.1, -4.0])
    def test_reduce_phase_identity(self, phase):
        psi = 0.7
        reduced, psi2, sign = reduce_phase(phase, psi)
        assert 0.0 <= reduced <= math.pi
        a = sg.phase_state_coefficients(phase, psi, 20)
        b = sign * sg.phase_state_coefficients(reduced, psi2, 20)
        assert np.max(np.abs(a - b)) <= 1e-12


class TestCoarseGrainedStates:
    def test_amplitude_formula(self):
        st = sg.coarse_grained_state(math.pi / 2, 0.0, 0.4, n_max=4)
        expected_c0 = math.sqrt(2 * 0.4 / math.pi) * math.sin(math.pi / 2) * math.sin(0.2) / 0.2
        assert abs(st.amplitudes[0] - expected_c0) <= 1e-15

    def test_epsilon_must_be_positive(self):
        with pytest.raises(EpsilonNonpositive):
            sg.coarse_grained_state(1.0, 0.0, 0.0)

    def test_default_truncation_rule(self):
        assert default_coarse_truncation(0.4) == math.ceil(20 * math.pi / 0.4)
        assert default_coarse_truncation(0.01) == 4000  # capped

    def test_truncated_norm_with_tail_at_reference_cutoff(self):
        # direct truncation at 2000 leaves a ~8e-4 tail; adding the analytic
        # trigamma estimate recovers unity to 1e-6
        st = sg.coarse_grained_state(math.pi / 2, 0.0, 0.4, n_max=2000)
        assert abs(st.truncated_norm - 1.0) <= 2e-3
        assert abs(st.truncated_norm + st.norm_tail_estimate - 1.0) <= 1e-6

    @pytest.mark.parametrize("phase", [0.3, 1.0, math.pi / 2, math.pi - 0.3])
    def test_analytic_norm_interior(self, phase):
        assert abs(sg.coarse_state_norm(phase, 0.4) - 1.0) <= 1e-12

    def test_analytic_norm_boundary(self):
        # window centred a quarter-width inside: exactly half the mass survives
        assert abs(sg.coarse_state_norm(0.1, 0.4) - 0.5) <= 1e-12
        assert abs(sg.coarse_state_norm(0.0, 0.4)) <= 1e-12

    def test_exact_state_limit_overlap(self):
        # eps * |<coarse|exact>|^2 -> 1; the series needs ~1/eps terms times a
        # large factor, so moderate widths probe the limit
        for eps, n_terms, tol in [(0.2, 2_000_000, 2e-5), (0.05, 2_000_000, 1e-4)]:
            k = np.arange(1, n_terms + 1, dtype=float)
            total = float(np.sum(sinc(k * eps / 2.0) * np.sin(k * math.pi / 2) ** 2))
            overlap = 2.0 * math.sqrt(eps) / math.pi * total
            assert abs(eps * overlap ** 2 - 1.0) <= tol

    def test_disjoint_interval_orthogonality(self):
        eps, n_max = 0.4, 2000
        n = np.arange(n_max + 1)
        w = sinc((n + 1) * eps / 2.0) ** 2
        for p1, p2 in [(0.8, 1.4), (1.0, 1.45), (math.pi / 4, 3 * math.pi / 4)]:
            assert abs(p2 - p1) > eps
            overlap = 2 * eps / math.pi * float(np.sum(np.sin((n + 1) * p1) * np.sin((n + 1) * p2) * w))
            assert abs(overlap) <= 1e-3


class TestExactDistributions:
    def test_vacuum_cosine_closed_form(self):
        d = sg.exact_phase_distribution(sg.make_vacuum(), "cosine")
        assert np.max(np.abs(d.values - (2 / math.pi) * np.sin(d.grid) ** 2)) <= 1e-10

    def test_vacuum_sine_closed_form(self):
        # normalization forces (2/pi) cos^2; the (2 pi)^-1 variant would not integrate to 1
        d = sg.exact_phase_distribution(sg.make_vacuum(), "sine")
        assert np.max(np.abs(d.values - (2 / math.pi) * np.cos(d.grid) ** 2)) <= 1e-10
        assert abs(d.integral() - 1.0) <= 1e-6

    def test_completeness_normalization(self):
        for state in (sg.make_fock(0, 6), sg.make_coherent(1.0, 40), sg.make_squeezed_vacuum(0.6, 40)):
            for kind in ("cosine", "sine"):
                d = sg.exact_phase_distribution(state, kind)
                assert abs(d.integral() - 1.0) <= 1e-6
                assert np.min(d.values) >= -1e-12

    def test_domain_mismatch(self):
        with pytest.raises(DomainMismatch):
            sg.exact_phase_distribution(sg.make_vacuum(), "sine", grid=np.linspace(0, math.pi, 11))

    def test_truncation_insensitivity_oracle(self):
        # same physical state at two cutoffs: the distribution is a truncation-
        # converged quantity, so a higher-resolution recomputation is the oracle
        grid = np.linspace(0, math.pi, 101)
        lo = sg.exact_phase_distribution(sg.make_coherent(1.0, 30), "cosine", grid=grid)
        hi = sg.exact_phase_distribution(sg.make_coherent(1.0, 80), "cosine", grid=grid)
        assert np.max(np.abs(lo.values - hi.values)) <= 1e-8


class TestCoarseDistributions:
    def test_epsilon_flattens_coherent_peak(self):
        st = sg.make_coherent(1.0, 40)
        exact = sg.exact_phase_distribution(st, "cosine")
        c04 = sg.coarse_phase_distribution(st, "cosine", 0.4)
        c08 = sg.coarse_phase_distribution(st, "cosine", 0.8)
        assert c08.values.max() < c04.values.max() < exact.values.max()
        for d in (c04, c08):
            assert abs(d.integral() - 1.0) <= 1e-6

    def test_small_epsilon_converges_to_exact(self):
        for state in (sg.make_coherent(1.0, 40), sg.make_squeezed_vacuum(0.88, 60)):
            for kind in ("cosine", "sine"):
                exact = sg.exact_phase_distribution(state, kind)
                coarse = sg.coarse_phase_distribution(state, kind, 1e-3)
                assert np.max(np.abs(coarse.values - exact.values)) <= 1e-3

    def test_squeezed_sine_double_peak(self, squeezed_state):
        d = sg.coarse_phase_distribution(squeezed_state, "sine", 0.4)
        centre = np.argmin(np.abs(d.grid))
        peak = np.argmax(d.values)
        assert 1.0 <= abs(d.grid[peak]) <= 1.45
        assert d.values[centre] < 0.6 * d.values[peak]
        # symmetric partner peak on the other side
        mirrored = np.argmax(np.where(np.sign(d.grid) != np.sign(d.grid[peak]), d.values, -np.inf))
        assert abs(abs(d.grid[mirrored]) - abs(d.grid[peak])) <= 0.2

    def test_normalization_constant_recorded(self, squeezed_state):
        d = sg.coarse_phase_distribution(squeezed_state, "cosine", 0.4)
        assert d.normalization > 0
        assert abs(d.integral() - 1.0) <= 1e-6


class TestExports:
    def test_csv_and_json_round_trip(self, tmp_path):
        d = sg.exact_phase_distribution(sg.make_vacuum(), "cosine")
        csv_path = tmp_path / "dist.csv"
        json_path = tmp_path / "dist.json"
        d.to_csv(csv_path)
        d.to_json(json_path)
        rows = csv_path.read_text().strip().splitlines()
        assert rows[0] == "phase,p,std_error"
        assert len(rows) == d.grid.size + 1
        import json

        payload = json.loads(json_path.read_text())
        assert payload["kind"] == "cosine"
        assert np.max(np.abs(np.array(payload["values"]) - d.values)) == 0.0
