import numpy as np
import pytest

from asympolaron.oscillator import make_grid
from asympolaron.validate import (ORACLE_TOL, Check, Report, closed_elements, oracle_errors,
                                  quadrature_elements, random_draw, run_validation)


class TestReport:
    def test_lines(self):
        rep = Report([Check("a", 1e-12, 1e-9), Check("b", 1e-3, 1e-9)])
        lines = list(rep.lines())
        assert lines[0].startswith("PASS a") and lines[1].startswith("FAIL b")
        assert not rep.ok

    def test_nan_fails(self):
        assert not Check("x", float("nan"), 1.0).ok


class TestOracle:
    def test_draw_ranges(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            om, xa, xb, za, zb, da, db, gp = random_draw(rng)
            assert 0.2 <= min(xa, xb) and max(xa, xb) <= 2.0
            assert max(abs(za), abs(zb)) <= 1.5 and max(abs(da), abs(db)) <= 1.0
            assert 0.0 <= gp <= 6.0 and 0.05 <= om <= 2.0

    def test_same_keys(self):
        p = random_draw(np.random.default_rng(2))
        assert set(quadrature_elements(*p, make_grid(501, 30.0))) == set(closed_elements(*p))

    def test_worst_errors(self):
        worst = oracle_errors(draws=30, seed=3)
        assert max(worst.values()) < ORACLE_TOL

    def test_seeded(self):
        assert oracle_errors(draws=5, seed=4) == oracle_errors(draws=5, seed=4)


def test_run_validation_passes():
    rep = run_validation(draws=20)
    assert rep.ok, "\n".join(rep.lines())
