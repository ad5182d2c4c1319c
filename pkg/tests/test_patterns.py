import math

import numpy as np
import pytest
from scipy import special

import sgphase as sg
from sgphase.errors import NumericalInstability, OutsideAllowedRegion, TableMismatch, UnsupportedS
from sgphase.fock import QuadratureGrid, wavefunction_table
from sgphase.patterns import (
    _calibration_factor,
    build_wavefunction_tables,
    classical_action,
    classical_momentum,
    classical_turning_point,
)

# frozen from the quadrature oracle (and equal to 2/pi analytically)
F00_AT_ZERO = 0.6366197723675814
# frozen from the quadrature oracle; the elements decay only algebraically (~ -1/(pi x^2))
F00_AT_EIGHT = -0.005094982197459208


def closed_form_f00(x):
    x = np.asarray(x, dtype=float)
    return 2.0 / math.pi - (2.0 / math.sqrt(math.pi)) * x * np.exp(-(x ** 2)) * special.erfi(x)


@pytest.fixture(scope="module")
def table16():
    return sg.build_pattern_table(16)


class TestOracle:
    def test_calibration_constant(self):
        assert abs(sg.pattern_integral(0, 0, 0.0) - F00_AT_ZERO) <= 1e-10
        assert abs(F00_AT_ZERO - 2.0 / math.pi) <= 1e-15

    def test_odd_element_vanishes_at_origin(self):
        assert abs(sg.pattern_integral(0, 1, 0.0)) <= 1e-12

    def test_far_tail_value(self):
        # decays only algebraically; the often-assumed exponential falloff is wrong
        for sign in (+1.0, -1.0):
            val = sg.pattern_integral(0, 0, sign * 8.0)
            assert abs(val - F00_AT_EIGHT) <= 1e-9
            assert abs(val) < 1e-2

    def test_closed_form_match(self):
        for x in (0.0, 0.5, 1.3, 2.7, 5.0):
            assert abs(sg.pattern_integral(0, 0, x) - closed_form_f00(x)) <= 1e-10

    def test_symmetric_in_orders(self):
        assert abs(sg.pattern_integral(2, 5, 1.1) - sg.pattern_integral(5, 2, 1.1)) <= 1e-12

    def test_rejects_nonzero_s(self):
        with pytest.raises(UnsupportedS):
            sg.pattern_integral(0, 0, 0.0, s=-0.25)


class TestProductRoute:
    def test_matches_oracle_small_orders(self, table16):
        worst = 0.0
        for n in range(6):
            for m in range(n, 6):
                for x in (0.0, 0.7, -1.9, 3.3, -5.0):
                    o = sg.pattern_integral(n, m, x)
                    p = sg.pattern_product(n, m, x, tables=table16.tables)
                    worst = max(worst, abs(o - p))
        assert worst <= 1e-8

    def test_closed_form_f00_on_grid(self, table16):
        x = table16.grid.values
        f = table16.element(0, 0)
        assert np.max(np.abs(f - closed_form_f00(x))) <= 1e-8

    def test_wronskian_constant(self, table16):
        t = table16.tables
        for n in (0, 1, 7, 16):
            w = t.psi[n] * t.dchi[n] - t.dpsi[n] * t.chi[n]
            assert np.max(np.abs(w * math.pi / 2.0 - 1.0)) <= 1e-8

    def test_parity(self, table16):
        for n, m in ((0, 0), (0, 1), (2, 5), (7, 16)):
            f = table16.element(n, m)
            assert np.max(np.abs(f[::-1] - (-1.0) ** (n + m) * f)) <= 1e-9

    def test_calibration_factor_is_unity(self):
        assert abs(_calibration_factor() - 1.0) <= 1e-9

    def test_overflow_guard(self):
        with pytest.raises(NumericalInstability):
            build_wavefunction_tables(4, np.linspace(-40.0, 40.0, 1601))


class TestSemiclassical:
    def test_action_vanishes_at_turning_point(self):
        for n in (0, 5, 40):
            a = classical_turning_point(n)
            assert abs(classical_action(n, a)) <= 1e-12

    def test_momentum_ground_state_origin(self):
        assert classical_momentum(0, 0.0) == 1.0

    def test_action_origin_asymptote(self):
        # deep inside the well the action approaches -(n + 1/2) pi / 2
        for n in (10, 40):
            assert abs(classical_action(n, 0.0) + (n + 0.5) * math.pi / 2.0) <= 1e-12

    def test_outside_allowed_region_raises(self):
        with pytest.raises(OutsideAllowedRegion):
            sg.pattern_wkb(4, 4, 3.5)

    @pytest.mark.parametrize("n", [20, 40])
    def test_large_order_agreement_with_oracle(self, n):
        o = sg.pattern_integral(n, n, 0.5)
        w = sg.pattern_wkb(n, n, 0.5)
        assert abs(w - o) <= 0.10 * abs(o)

    def test_off_diagonal_agreement(self):
        o = sg.pattern_integral(30, 34, 0.8)
        w = sg.pattern_wkb(30, 34, 0.8)
        assert abs(w - o) <= 0.15 * abs(o)


class TestPatternTable:
    def test_minimal_table_matches_oracle(self):
        table = sg.build_pattern_table(0, QuadratureGrid.symmetric(2.0, 3))
        x = table.grid.values
        f = table.element(0, 0)
        for xv, fv in zip(x, f):
            assert abs(fv - sg.pattern_integral(0, 0, xv)) <= 1e-6

    def test_mirror_symmetry_is_exact(self, table16):
        for n, m in ((0, 3), (2, 11), (5, 5)):
            assert np.array_equal(table16.element(n, m), table16.element(m, n))

    def test_checksum_stability(self):
        a = sg.build_pattern_table(4)
        b = sg.build_pattern_table(4)
        assert a.checksum == b.checksum
        assert np.array_equal(a.tables.chi, b.tables.chi)

    def test_order_beyond_table_raises(self, table16):
        with pytest.raises(TableMismatch):
            table16.element(3, 17)

    def test_save_load_round_trip(self, tmp_path, table16):
        path = tmp_path / "pattern.npz"
        sg.save_pattern_table(table16, path)
        loaded = sg.load_pattern_table(path)
        assert loaded.checksum == table16.checksum
        assert np.array_equal(loaded.element(2, 7), table16.element(2, 7))

    def test_load_verifies_expected_header(self, tmp_path, table16):
        path = tmp_path / "pattern.npz"
        sg.save_pattern_table(table16, path)
        with pytest.raises(TableMismatch):
            sg.load_pattern_table(path, expected_header={"n_max": 32})

    def test_wkb_fallback_provenance(self):
        table = sg.build_pattern_table(12, wkb_threshold=8)
        assert table.algorithm_for(2, 5) == "product"
        assert table.algorithm_for(9, 11) == "wkb"
        inside = np.abs(table.grid.values) < classical_turning_point(9)
        direct = np.zeros(table.grid.n_points)
        direct[inside] = sg.pattern_wkb(9, 11, table.grid.values[inside])
        assert np.array_equal(table.element(9, 11), direct)

    def test_get_pattern_table_caches(self, tmp_path):
        t1 = sg.get_pattern_table(6, directory=tmp_path)
        t2 = sg.get_pattern_table(6, directory=tmp_path)
        assert t1 is t2
        files = list(tmp_path.glob("pattern_*.npz"))
        assert len(files) == 1
        t3 = sg.get_pattern_table(6, directory=tmp_path, no_cache=True)
        assert t3.checksum == t1.checksum


class TestBiorthogonality:
    def test_delta_reconstruction(self, table16):
        # pi * integral f_nm psi_k psi_l = delta_nk delta_ml for matched offsets;
        # this fixes the constant in front of the reconstruction integrals
        x = table16.grid.values
        psi = wavefunction_table(8, x)
        cases = {
            (0, 0, 0, 0): 1.0,
            (1, 1, 1, 1): 1.0,
            (0, 2, 0, 2): 1.0,
            (3, 5, 3, 5): 1.0,
            (0, 0, 1, 1): 0.0,
            (2, 2, 4, 4): 0.0,
            (0, 2, 1, 3): 0.0,
        }
        for (n, m, k, l), expected in cases.items():
            val = math.pi * np.trapezoid(table16.element(n, m) * psi[k] * psi[l], x)
            assert abs(val - expected) <= 1e-5
