import numpy as np
import pytest
from hypothesis import given, strategies as st

from asympolaron.model import ModelParams, gc, gc0
from asympolaron.qfi import (COMPONENTS, QFI_COLUMNS, PeakWindowError, find_qfi_peak,
                             param_derivatives, parabola_vertex, qfi_at, qfi_decompose, qfi_rows,
                             whole_function_qfi)
from asympolaron.variational import OptimizerSettings, optimize, scan_g

OMEGA = 0.1


@pytest.fixture(scope="module")
def rows():
    out = {}
    for mode in ("symmetric", "asymmetric"):
        for r in (0.8, 1.0, 1.3):
            res = optimize(ModelParams(OMEGA, r * gc(OMEGA)), -1, mode)
            out[mode, r] = qfi_at(res, 1e-4 * gc0(OMEGA))
    return out


class TestDecomposition:
    def test_columns(self):
        assert QFI_COLUMNS == ("g", "g_over_gc0", "xx", "xixi", "dd", "rr", "xxi", "xrho", "xd",
                               "rhoxi", "rhod", "xid", "total", "total_oracle")

    @pytest.mark.parametrize("mode", ["symmetric", "asymmetric"])
    @pytest.mark.parametrize("r", [0.8, 1.0, 1.3])
    def test_sum_rule(self, rows, mode, r):
        b = rows[mode, r]
        assert b.component_sum() == pytest.approx(b.total, rel=1e-6)

    @pytest.mark.parametrize("mode", ["symmetric", "asymmetric"])
    @pytest.mark.parametrize("r", [0.8, 1.0, 1.3])
    def test_matches_whole_function_oracle(self, rows, mode, r):
        b = rows[mode, r]
        assert b.total == pytest.approx(b.total_oracle, rel=1e-4)

    def test_symmetric_mode_has_no_delta_resource(self, rows):
        b = rows["symmetric", 1.0]
        assert b.dd == 0.0 and b.xd == 0.0 and b.rhod == 0.0 and b.xid == 0.0

    def test_diagonal_components_nonnegative(self, rows):
        for b in rows.values():
            assert min(b.xx, b.xixi, b.dd, b.rr) >= 0.0

    @given(st.lists(st.floats(-3, 3), min_size=8, max_size=8))
    def test_sum_rule_any_derivatives(self, dparams):
        res = optimize(ModelParams(OMEGA, gc(OMEGA)), -1, settings=OptimizerSettings(starts=2))
        b = qfi_decompose(res, dparams)
        assert b.component_sum() == pytest.approx(b.total, rel=1e-9, abs=1e-12)

    def test_literal_bookkeeping_breaks_sum_rule(self, rows):
        # the literal cross-term listing skips same-packet pairs and reuses
        # displacement factors in the delta-rho block; compare both readings
        res = optimize(ModelParams(OMEGA, gc(OMEGA)), -1)
        d = np.array([0.8, 1.1, -2.0, 3.0, 0.7, -0.9, 1.5, -2.5])
        corrected = qfi_decompose(res, d)
        literal = qfi_decompose(res, d, literal=True)
        assert corrected.total == literal.total
        assert abs(literal.component_sum() - literal.total) > 1e-3 * literal.total
        assert corrected.component_sum() == pytest.approx(corrected.total, rel=1e-12)
        for k in ("xx", "xixi", "dd", "rr"):
            assert getattr(literal, k) == getattr(corrected, k)

    def test_rejects_asymmetric_grid(self):
        from asympolaron.oscillator import QuadratureGrid
        res = optimize(ModelParams(OMEGA, gc(OMEGA)), -1, settings=OptimizerSettings(starts=2))
        x = np.linspace(-20, 25, 501)
        with pytest.raises(ValueError):
            qfi_decompose(res, np.zeros(8), QuadratureGrid(x, np.full(501, 0.09), 25.0))

    def test_rows_layout(self, rows):
        out = list(qfi_rows([rows["asymmetric", 1.0]], OMEGA))
        assert len(out[0]) == len(QFI_COLUMNS)
        assert out[0][1] == pytest.approx(gc(OMEGA) / gc0(OMEGA))


class TestWholeFunctionOracle:
    def test_scales_as_inverse_step_squared_for_fixed_states(self):
        # for two fixed states the estimate is ||psi_hi - psi_lo||^2 / (2h)^2 times 2
        from asympolaron.variational import grid_for
        lo = optimize(ModelParams(0.3, 0.10), -1, settings=OptimizerSettings(starts=2))
        hi = optimize(ModelParams(0.3, 0.12), -1, settings=OptimizerSettings(starts=2))
        grid = grid_for(lo.params)
        x = grid.nodes
        du = hi.state.psi_plus(x) - lo.state.psi_plus(x)
        dd = hi.state.psi_minus(x) - lo.state.psi_minus(x)
        ref = 2.0 * float(np.sum(grid.weights * (du * du + dd * dd))) / 0.02 ** 2
        assert whole_function_qfi(lo, hi, grid) == pytest.approx(ref, rel=1e-12)


class TestParamDerivatives:
    def test_scan_derivatives(self):
        g = gc(0.3) * np.linspace(0.8, 1.2, 5)
        sc = scan_g(0.3, g, -1)
        d = param_derivatives(sc)
        assert not d.valid[0] and not d.valid[-1]
        assert d.valid[1:-1].all() or sc.jumps
        k = 2
        fd = (d.values[k + 1] - d.values[k - 1]) / (g[k + 1] - g[k - 1])
        assert np.allclose(d.derivs[k], fd)

    def test_nonuniform_stencil_exact_for_quadratics(self):
        from asympolaron.qfi import _three_point
        f = lambda t: 3 * t * t - 2 * t + 1
        assert _three_point(0.9, 1.0, 1.3, f(0.9), f(1.0), f(1.3)) == pytest.approx(4.0, abs=1e-12)


class TestPeak:
    def test_parabola_vertex(self):
        g = np.linspace(0.0, 2.0, 21)
        F = 5.0 - 3.0 * (g - 0.937) ** 2
        gp, Fp = find_qfi_peak(g, F)
        assert gp == pytest.approx(0.937, abs=1e-8)
        assert Fp == pytest.approx(5.0, abs=1e-8)

    def test_boundary_maximum(self):
        with pytest.raises(PeakWindowError):
            find_qfi_peak([0, 1, 2], [1, 2, 3])

    @given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(-5, 5))
    def test_vertex_exact(self, x0, a, c):
        x = (x0 - 0.3, x0 + 0.1, x0 + 0.4)
        y = [c - a * (t - x0) ** 2 for t in x]
        xv, yv = parabola_vertex(x, y)
        assert xv == pytest.approx(x0, abs=1e-7)
        assert yv == pytest.approx(c, abs=1e-7)
