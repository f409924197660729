import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import _oracle
from asympolaron.ed import converged_cutoff, diagonalize, observables_ed
from asympolaron.model import ModelParams, Parity, gc
from asympolaron.oscillator import inner, make_grid
from asympolaron.polaron import (Packet, PolaronShape, PolaronWeights, TrialState, channel_energies,
                                 eval_packet, hplus_element, induced_potential, observables,
                                 overlap_flip, overlap_same, packet_norm2, packet_partials,
                                 peak_offset, peak_position)
from asympolaron.variational import energy, optimize

xis = st.floats(0.2, 2.0)
zetas = st.floats(-1.5, 1.5)
deltas = st.floats(-1.0, 1.0)


def unit_state(shape, params, parity=-1):
    _, w = energy(shape, params, parity)
    return TrialState(shape, w, params, Parity.parse(parity))


class TestShape:
    def test_rejects_nonpositive_xi(self):
        with pytest.raises(ValueError):
            PolaronShape(0.5, 0.5, 0.0, 1.0)

    def test_round_trip(self):
        s = PolaronShape(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
        assert PolaronShape.from_sequence(s.as_tuple()) == s
        assert s.symmetric().as_tuple()[4:] == (0.0, 0.0)

    @pytest.mark.parametrize("name,expected", [("a", Packet.POLARON), ("beta", Packet.ANTIPOLARON),
                                               ("polaron", Packet.POLARON)])
    def test_packet_parse(self, name, expected):
        assert Packet.parse(name) is expected


class TestPacket:
    def test_centered_ground_value(self):
        s = PolaronShape(0.0, 0.0, 1.0, 1.0)
        assert eval_packet("a", s, ModelParams(1.0, 0.0), 0.0) == pytest.approx(math.pi ** -0.25)

    def test_value_at_center(self):
        p = ModelParams(1.0, math.sqrt(2.0))  # g' = 2
        s = PolaronShape(1.0, 0.5, 1.0, 1.0, 0.3, 0.0)
        assert eval_packet("a", s, p, -2.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)

    @given(xis, deltas, zetas)
    def test_norm(self, wide_grid, xi, delta, zeta):
        s = PolaronShape(zeta, 0.3, xi, 1.0, delta, 0.0)
        f = eval_packet("a", s, ModelParams(0.5, 0.4), wide_grid.nodes)
        assert inner(f, f, wide_grid) == pytest.approx(packet_norm2(xi, delta), abs=1e-10)

    @given(xis, deltas)
    def test_partials_match_finite_differences(self, xi, delta):
        p = ModelParams(0.5, 0.3)
        s = PolaronShape(0.7, 0.4, xi, 0.9, delta, 0.1)
        x = np.linspace(-6, 6, 41)
        dc, dxi, dd = packet_partials("a", s, p, x)
        h = 1e-6

        def f(center_shift=0.0, dxi_=0.0, dd_=0.0):
            y = x - (-s.zeta_a * p.gprime + center_shift)
            return _oracle.packet(y, xi + dxi_, 0.0, delta + dd_)[0]

        assert np.allclose(dc, (f(h) - f(-h)) / (2 * h), atol=1e-7)
        assert np.allclose(dxi, (f(dxi_=h) - f(dxi_=-h)) / (2 * h), atol=1e-7)
        assert np.allclose(dd, (f(dd_=h) - f(dd_=-h)) / (2 * h), atol=1e-7)


class TestOverlaps:
    def test_flip_without_delta(self):
        p = ModelParams(0.5, 0.4)
        s = PolaronShape(0.8, 0.5, 0.7, 1.0)
        expected = math.exp(-s.zeta_a ** 2 * s.xi_a * p.gprime ** 2)
        assert overlap_flip("a", "a", s, p) == pytest.approx(expected, rel=1e-14)

    def test_flip_zero_displacement(self):
        s = PolaronShape(0.8, 0.5, 1.0, 1.0, 0.4, 0.0)
        assert overlap_flip("a", "a", s, ModelParams(1.0, 0.0)) == pytest.approx(0.92, abs=1e-15)

    def test_flip_symmetric_in_arguments(self):
        p = ModelParams(0.5, 0.4)
        s = PolaronShape(0.8, 0.5, 0.7, 1.0, 0.2, -0.3)
        assert overlap_flip("a", "b", s, p) == overlap_flip("b", "a", s, p)

    def test_same_packet_norm(self):
        s = PolaronShape(0.8, 0.5, 2.0, 1.0, 0.5, 0.0)
        assert overlap_same("a", "a", s, ModelParams(0.5, 0.4)) == pytest.approx(1.0625, abs=1e-14)
        assert overlap_same("b", "b", s, ModelParams(0.5, 0.4)) == pytest.approx(1.0, abs=1e-14)

    def test_coherent_overlap(self):
        p = ModelParams(0.5, 0.4)
        s = PolaronShape(0.8, 0.5, 0.7, 0.7)
        d = (s.zeta_a + s.zeta_b) * p.gprime
        assert overlap_same("a", "b", s, p) == pytest.approx(math.exp(-0.7 * d * d / 4), rel=1e-13)


class TestHplus:
    def test_packet_at_potential_bottom(self):
        p = ModelParams(0.4, 0.3)
        s = PolaronShape(1.0, 0.5, 1.0, 1.0)
        assert hplus_element("a", "a", s, p) == pytest.approx(0.2, abs=1e-15)

    def test_centered_packet(self):
        p = ModelParams(0.4, 0.3)
        s = PolaronShape(0.0, 0.5, 1.0, 1.0)
        assert hplus_element("a", "a", s, p) == pytest.approx(0.2 * (1 + p.gprime ** 2), rel=1e-14)

    def test_truncated_switch(self):
        p = ModelParams(0.4, 0.3)
        s = PolaronShape(0.8, 0.6, 0.9, 0.7, 0.4, -0.2)
        assert hplus_element("a", "b", s, p) != hplus_element("a", "b", s, p, truncated=True)
        s0 = PolaronShape(0.8, 0.6, 0.9, 0.7, 0.0, -0.2)
        assert hplus_element("a", "b", s0, p) == pytest.approx(hplus_element("a", "b", s0, p, truncated=True))


class TestTrialState:
    @given(xis, xis, st.floats(0.0, 1.5), st.floats(0.0, 1.5), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
    def test_normalization_and_parity(self, xa, xb, za, zb, ta, tb):
        p = ModelParams(0.3, 0.25)
        s = PolaronShape(za, zb, xa, xb, ta * math.sqrt(xa), tb * math.sqrt(xb))
        if abs(za + zb) * p.gprime < 0.05 and abs(xa - xb) < 0.05:
            return
        try:
            st_ = unit_state(s, p)
        except ValueError:
            return
        assert st_.norm2() == pytest.approx(1.0, abs=1e-10)
        x = np.linspace(-10, 10, 201)
        assert np.max(np.abs(st_.psi_minus(x) + st_.psi_plus(-x))) == 0.0

    def test_second_derivative(self):
        p = ModelParams(0.3, 0.25)
        st_ = unit_state(PolaronShape(0.9, 0.5, 0.8, 0.6, 0.3, -0.2), p)
        x = np.linspace(-6, 6, 31)
        h = 1e-4
        fd = (st_.psi_plus(x + h) - 2 * st_.psi_plus(x) + st_.psi_plus(x - h)) / h ** 2
        assert np.allclose(st_.psi_plus_dd(x), fd, atol=1e-6)


class TestPeakPosition:
    def test_small_delta_limit(self):
        p = ModelParams(0.5, 0.6)
        s = PolaronShape(0.9, 0.7, 0.8, 0.8, 1e-6, 0.0)
        xp, _ = peak_position("a", s, p)
        assert abs(xp + s.zeta_a * p.gprime) < 1e-5

    @given(xis, deltas)
    def test_offset_is_packet_maximum(self, xi, delta):
        # d/dy [(1 + d y) exp(-xi y^2/2)] = 0 on the positive-prefactor side
        off = peak_offset(xi, delta)
        assert delta - xi * off * (1 + delta * off) == pytest.approx(0.0, abs=1e-12)
        assert 1 + delta * off > 0

    def test_zero_delta_exact(self):
        assert peak_offset(0.7, 0.0) == 0.0

    def test_zeta_p(self):
        p = ModelParams(0.5, 0.6)
        s = PolaronShape(0.9, 0.7, 0.8, 0.8, 0.2, -0.1)
        xp, zp = peak_position("b", s, p)
        assert xp == pytest.approx(zp * p.gprime)
        xa, za = peak_position("a", s, p)
        assert xa == pytest.approx(-za * p.gprime)


class TestObservables:
    def test_zero_coupling(self):
        res = optimize(ModelParams(0.3, 0.0), -1, "symmetric")
        o = res.observables
        assert o.photon_number == pytest.approx(0.0, abs=1e-10)
        assert o.sigma_x == pytest.approx(-1.0, abs=1e-10)
        assert o.coupling_corr == pytest.approx(0.0, abs=1e-10)

    def test_against_fock_expectations(self):
        # photon number of a general state from its Hermite expansion
        from asympolaron.oscillator import hermite_table
        p = ModelParams(0.3, 0.2)
        st_ = unit_state(PolaronShape(0.9, 0.5, 0.8, 0.6, 0.3, -0.2), p)
        grid = make_grid(4001, 30.0)
        obs = observables(st_, grid)
        tab = hermite_table(120, grid.nodes)
        c = tab @ (grid.weights * st_.psi_plus(grid.nodes))
        n = np.arange(121)
        assert obs.photon_number == pytest.approx(float(np.sum(n * c * c)), abs=1e-9)

    def test_deep_strong_photon_number(self):
        p = ModelParams(0.5, 3.0 * gc(0.5))
        res = optimize(p, -1, "asymmetric")
        ed = diagonalize(p, converged_cutoff(p))
        n_ed = observables_ed(ed, 0).photon_number
        assert res.observables.photon_number == pytest.approx(n_ed, rel=0.05)
        assert n_ed == pytest.approx(p.gprime ** 2 / 2, rel=0.05)


class TestInducedPotential:
    def test_zero_coupling_ground(self):
        st_ = unit_state(PolaronShape(0.0, 0.3, 1.0, 0.6), ModelParams(0.25, 0.0))
        v, ok = induced_potential(st_, np.array([0.0]))
        assert ok[0]
        assert v[0] == pytest.approx(-1.0 / 0.25, rel=1e-13)

    def test_guard_flags_small_denominator(self):
        st_ = unit_state(PolaronShape(0.9, 0.3, 1.0, 0.6), ModelParams(0.25, 0.3))
        v, ok = induced_potential(st_, np.linspace(-60, 60, 101))
        assert not ok.all()
        assert np.all(np.isnan(v[~ok]))

    def test_bad_component(self):
        st_ = unit_state(PolaronShape(0.9, 0.3, 1.0, 0.6), ModelParams(0.25, 0.3))
        with pytest.raises(ValueError):
            induced_potential(st_, [0.0], component="x")


class TestChannelEnergies:
    def test_sum_rule(self):
        p = ModelParams(0.15, gc(0.15))
        res = optimize(p, -1)
        ch = channel_energies(res.state)
        s, w = res.shape, res.weights
        n_pm = (w.alpha ** 2 * overlap_flip("a", "a", s, p) + w.beta ** 2 * overlap_flip("b", "b", s, p)
                + 2 * w.alpha * w.beta * overlap_flip("a", "b", s, p))
        assert ch.total == pytest.approx(-0.5 * n_pm, abs=1e-12)

    def test_ground_cross_channel_negative(self):
        res = optimize(ModelParams(0.15, gc(0.15)), -1)
        assert res.weights.alpha * res.weights.beta > 0
        assert channel_energies(res.state).omega_ab < 0

    def test_excited_channels(self):
        res = optimize(ModelParams(0.15, gc(0.15)), +1)
        assert res.weights.alpha * res.weights.beta < 0
        ch = channel_energies(res.state)
        assert ch.omega_ab < 0
        assert ch.omega_aa > 0
