"""Ergodic-set tracing, membership, and invariance under random switching."""

import numpy as np
import numpy.testing as npt
import pytest

from switchgrowth import (
    Segment,
    at,
    contains,
    distance_to_set,
    invariance_check,
    preset,
    spectral,
    trace_boundary,
)
from switchgrowth.errors import DimensionMismatchError, HorizonTooShortError


@pytest.fixture(scope="module")
def pmca_boundary(pmca):
    return trace_boundary(pmca.control_set, horizon=2000.0, dt=0.01)


class TestTraceBoundaryDim2:
    def test_interval_endpoints(self, dim2):
        # extremal Perron points of the exchange family: theta* at alpha
        # and 1-alpha, i.e. exactly (2/3, 1/3) and (1/3, 2/3) for a = 0.2
        b = trace_boundary(dim2.control_set, horizon=200.0, dt=0.01)
        npt.assert_allclose(b.closed_polyline,
                            [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]],
                            atol=1e-6)
        assert not b.degenerate and not b.pruned
        assert b.delta_boundary > 0.3

    def test_symmetry_in_a(self):
        # the set for parameter a maps onto itself under coordinate swap
        b1 = trace_boundary(preset("dim2", a=0.3).control_set,
                            horizon=200.0, dt=0.01)
        npt.assert_allclose(b1.closed_polyline[0, ::-1],
                            b1.closed_polyline[1], atol=1e-9)

    def test_membership_and_distance(self, dim2):
        b = trace_boundary(dim2.control_set, horizon=200.0, dt=0.01)
        assert contains(b, [0.5, 0.5])
        assert not contains(b, [0.9, 0.1])
        npt.assert_allclose(distance_to_set(b, [[0.5, 0.5]]), 0.0, atol=1e-12)
        # l1 distance from theta = 0.1 to the lower endpoint theta = 1/3
        npt.assert_allclose(distance_to_set(b, [[0.9, 0.1]]),
                            2.0 * (1.0 / 3.0 - 0.1), atol=1e-6)


class TestTraceBoundaryDegenerate:
    def test_single_point(self, dim2):
        cs = dim2.control_set
        deg = Segment(G=cs.G, F=cs.F, a=0.5, A=0.5)
        b = trace_boundary(deg, horizon=100.0, dt=0.01)
        assert b.degenerate
        z = spectral(at(deg, 0.5)).e1
        npt.assert_allclose(b.closed_polyline[0], z, atol=1e-10)
        assert contains(b, z)
        assert not contains(b, [0.9, 0.1])
        npt.assert_allclose(distance_to_set(b, [z]), 0.0, atol=1e-10)


class TestTraceBoundaryPmca:
    def test_extremal_points_on_boundary(self, pmca, pmca_boundary):
        b = pmca_boundary
        npt.assert_allclose(b.z_low, spectral(at(pmca.control_set, 2.0)).e1,
                            atol=1e-12)
        npt.assert_allclose(b.z_high, spectral(at(pmca.control_set, 8.0)).e1,
                            atol=1e-12)
        assert contains(b, b.z_low) and contains(b, b.z_high)

    def test_interior_and_exterior(self, pmca_boundary):
        mid = 0.5 * (pmca_boundary.z_low + pmca_boundary.z_high)
        assert contains(pmca_boundary, mid)
        assert not contains(pmca_boundary, [1.0, 0.0, 0.0])
        assert not contains(pmca_boundary, [0.0, 0.0, 1.0])

    def test_strictly_positive_boundary(self, pmca_boundary):
        assert pmca_boundary.delta_boundary > 0
        assert np.all(pmca_boundary.closed_polyline > 0)

    def test_parity_matches_winding_oracle(self, pmca_boundary):
        # even-odd crossing against a signed angle-summation winding test
        poly = pmca_boundary.closed_polyline[:, :2]
        rng = np.random.default_rng(0)
        pts = rng.dirichlet(np.ones(3), size=100)

        def winding(p):
            v = poly - p[:2]
            ang = np.arctan2(v[:, 1], v[:, 0])
            dd = np.diff(np.concatenate([ang, ang[:1]]))
            dd = (dd + np.pi) % (2 * np.pi) - np.pi
            return abs(dd.sum()) > np.pi

        for p in pts:
            if distance_to_set(pmca_boundary, p[None, :]).item() < 1e-3:
                continue  # too close to the boundary for either test
            assert contains(pmca_boundary, p) == winding(p)

    def test_curves_connect_the_extremal_points(self, pmca_boundary):
        npt.assert_allclose(pmca_boundary.curve_from_low.states[-1],
                            pmca_boundary.z_high, atol=1e-6)
        npt.assert_allclose(pmca_boundary.curve_from_high.states[-1],
                            pmca_boundary.z_low, atol=1e-6)


class TestInvariance:
    def test_pmca(self, pmca, pmca_boundary):
        rep = invariance_check(pmca_boundary, pmca.control_set, trials=20,
                               horizon=200.0, seed=0)
        assert rep.trials == 20
        assert rep.inside_pass == 20
        assert rep.attract_pass == 20
        d = rep.to_dict()
        assert set(d) == {"trials", "inside_pass", "attract_pass",
                          "delta_boundary", "pruned"}

    def test_deterministic(self, pmca, pmca_boundary):
        r1 = invariance_check(pmca_boundary, pmca.control_set, trials=5,
                              horizon=100.0, seed=7)
        r2 = invariance_check(pmca_boundary, pmca.control_set, trials=5,
                              horizon=100.0, seed=7)
        assert r1 == r2


class TestErrors:
    def test_horizon_too_short(self, pmca):
        with pytest.raises(HorizonTooShortError):
            trace_boundary(pmca.control_set, horizon=5.0, dt=0.01)

    def test_dimension_mismatch(self, dim2):
        b = trace_boundary(dim2.control_set, horizon=200.0, dt=0.01)
        with pytest.raises(DimensionMismatchError):
            contains(b, [0.3, 0.3, 0.4])
