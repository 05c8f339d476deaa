import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuroimpulse import bounds
from neuroimpulse import experiments as ex
from neuroimpulse.exceptions import NoEventsEver
from neuroimpulse.model import RectifiedProjection

B1 = np.array([[-1.0, 1.0]])
PAIR_G = RectifiedProjection([[1.0], [-1.0]], [1.0, 1.0])
FIG4_B = np.array([[-1.0, 1.0, 0, 0], [0, 0, -1.0, 1.0]])


def rot(a, omega):
    return np.array([[a, omega], [-omega, a]])


class TestScalar:
    def test_thm1_fig2(self):
        r = bounds.thm1_bound(1.0, 2.5, 3.0, B1)
        assert r.applicable
        assert (r.prefactor, r.decay_rate, r.ultimate_bound) == (1.0, -0.75, 2.0)

    def test_thm1_minimal_at_matching_leak(self):
        assert bounds.thm1_bound(1.0, 2.5, 1.5, B1).ultimate_bound == 1.0

    @pytest.mark.parametrize("b", [1.0, 0.5])
    def test_thm1_needs_gain_margin(self, b):
        assert not bounds.thm1_bound(1.0, b, 0.0, B1).applicable

    def test_cor1(self):
        assert bounds.cor1_bound(1.0, 2.5, 1.5, B1).ultimate_bound == 2.0
        assert bounds.cor1_bound(1.0, 2.5, 0.0, B1).ultimate_bound == 2.0
        assert not bounds.cor1_bound(1.0, 2.5, 3.0, B1).applicable

    @pytest.mark.parametrize("lam", [0.0, 1.5])
    def test_thm2(self, lam):
        r = bounds.thm2_bound(1.0, 2.5, lam, B1, PAIR_G)
        assert r.applicable and r.decay_rate == -1.5 and r.ultimate_bound == 1.0

    def test_thm2_refusals(self):
        assert not bounds.thm2_bound(1.0, 2.5, 3.0, B1, PAIR_G).applicable
        same = RectifiedProjection([[1.0], [1.0]], [1.0, 1.0])
        r = bounds.thm2_bound(1.0, 2.5, 0.0, B1, same)
        assert not r.applicable and "sign-partitioned" in r.reason


class TestLyapunovBounds:
    @pytest.mark.parametrize("lam", [0.0, 1.5, 3.0])
    def test_scalar_reduction(self, lam):
        t3 = bounds.thm3_bound([[1.0]], [[2.5]], B1, lam * np.eye(2))
        t1 = bounds.thm1_bound(1.0, 2.5, lam, B1)
        assert t3.aux["lambda_min_P"] == pytest.approx(1 / 3, abs=1e-15)
        assert abs(t3.decay_rate - t1.decay_rate) <= 1e-12
        assert abs(t3.ultimate_bound - t1.ultimate_bound) <= 1e-12
        assert t3.prefactor == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.1, 4), st.floats(0, 5))
    def test_scalar_reduction_property(self, a, margin, lam):
        b = a + margin
        t3 = bounds.thm3_bound([[a]], [[b]], B1, lam * np.eye(2))
        t1 = bounds.thm1_bound(a, b, lam, B1)
        assert t3.decay_rate == pytest.approx(t1.decay_rate, rel=1e-9, abs=1e-12)
        assert t3.ultimate_bound == pytest.approx(t1.ultimate_bound, rel=1e-9, abs=1e-12)

    def test_fig4_identity_certificate(self):
        r = bounds.thm3_bound(rot(1.0, 0.5), 1.5 * np.eye(2), FIG4_B, 0.2 * np.eye(4))
        assert r.applicable
        assert r.aux["kappa_P"] == pytest.approx(1.0, abs=1e-10)
        assert r.decay_rate == pytest.approx(-0.25, abs=1e-10)

    def test_not_hurwitz(self):
        r = bounds.thm3_bound([[1.0]], [[0.9]], B1, np.zeros((2, 2)))
        assert not r.applicable and "Hurwitz" in r.reason

    @pytest.mark.parametrize("omega, expected", [(0.5, 3 * math.sqrt(2)), (3.0, 8 * math.sqrt(2))])
    def test_cor4_fig4(self, omega, expected):
        r = bounds.cor4_bound(rot(1.0, omega), 1.5 * np.eye(2), FIG4_B, 0.2)
        assert r.applicable
        assert r.aux["norm_S"] == pytest.approx(omega, rel=1e-10)
        assert r.ultimate_bound == pytest.approx(expected, rel=1e-10)

    def test_cor4_leak_condition(self):
        # P = 0.6 I from A - K = -(5/6) I; 1/(2 lambda) = 0.5 < 0.6
        r = bounds.cor4_bound(np.zeros((2, 2)), (5 / 6) * np.eye(2), FIG4_B, 1.0)
        assert not r.applicable and r.aux["psd_margin"] < 0


class TestInterEvent:
    def test_examples(self):
        lo, _ = bounds.inter_event_bounds(0.4, 0.0, 0.0, 50.5)
        assert lo == pytest.approx(0.4 / 50.5, rel=1e-15)
        lo, _ = bounds.inter_event_bounds(1.0, 1.0, 0.0, 2.0)
        assert lo == pytest.approx(math.log(2), rel=1e-15)
        _, up = bounds.inter_event_bounds(1.0, 2.0, 1.0, 3.0)
        assert up == math.inf

    def test_no_events(self):
        with pytest.raises(NoEventsEver):
            bounds.inter_event_bounds(1.0, 2.0, 0.0, 2.0)
        with pytest.raises(NoEventsEver):
            bounds.inter_event_bounds(1.0, 0.0, 0.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 5), st.floats(0, 5), st.floats(0.01, 100), st.floats(1.0, 10.0))
    def test_ordering_and_small_leak_continuity(self, theta, lam, g_lo, ratio):
        g_hi = g_lo * ratio
        if lam * theta >= g_hi:
            return
        lo, up = bounds.inter_event_bounds(theta, lam, g_lo, g_hi)
        assert 0 < lo <= up
        # approaching zero leak meets the analytic limit smoothly
        lo_small, _ = bounds.inter_event_bounds(theta, 1e-9, g_lo, g_hi)
        assert lo_small == pytest.approx(theta / g_hi, rel=1e-6)

    def test_global(self):
        C = 2.0 + 2.0
        assert bounds.min_inter_event_global([0.4, 0.4], [0.0, 0.0], PAIR_G, C) == pytest.approx(0.4 / C)
        assert bounds.min_inter_event_global([0.4, 0.4], [0.0, 0.0], PAIR_G, 0.0) == math.inf

    def test_default_trajectory_bound(self):
        plant, ctrl = ex.scalar_pair(1.0, 2.5, 0.0)
        reports = ex.all_bounds(plant, ctrl)
        # thm2: D = 1, C_ub = 1 is the tightest at t = 0
        assert ex.trajectory_bound(reports, 2.0) == pytest.approx(3.0)


def test_envelope_evaluation():
    r = bounds.thm1_bound(1.0, 2.5, 3.0, B1)
    np.testing.assert_allclose(r.envelope([0.0, 1.0], 2.0), [4.0, 2 * math.exp(-0.75) + 2])
    assert r.bound_at_zero(2.0) == 4.0
    assert r.as_dict()["theorem"] == "thm1"


def test_all_bounds_lists_refusals_for_nonlinear_gain():
    plant, ctrl = ex.scalar_pair(1.0, 2.5, 0.0, b1=1.0, b2=1.0)
    reports = ex.all_bounds(plant, ctrl)
    assert reports and not any(r.applicable for r in reports)
    assert all("not linear" in r.reason for r in reports)
