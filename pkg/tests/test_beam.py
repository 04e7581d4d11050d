import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluidarray.beam import array_factor, beam_map, mainlobe_mask, psl_db
from fluidarray.crb import SourceDirection
from fluidarray.errors import NoSidelobeError
from fluidarray.geometry import Aperture, PortLayout
from fluidarray.placement import PlacementConfig, greedy_select

from conftest import random_points

DIR = SourceDirection.from_degrees(45, 30)
CORNERS = PortLayout.cornered(Aperture(2.0, 2.0))


def direct_af(points, u, v, u0, v0):
    s = np.exp(2j * np.pi * (points[:, 0] * (u - u0) + points[:, 1] * (v - v0))).mean()
    return abs(s) ** 2


class TestArrayFactor:
    def test_peak_is_exactly_one(self, rng):
        assert array_factor(random_points(rng, 9), 0.3, -0.2, 0.3, -0.2) == 1.0

    def test_single_port(self):
        u = np.linspace(-1, 1, 11)
        np.testing.assert_allclose(array_factor(np.array([[0.7, 1.3]]), u, u[:, None], 0.1, 0.2),
                                   1.0, rtol=1e-15)

    def test_two_port_null(self):
        p = array_factor(np.array([[0.0, 0.0], [0.5, 0.0]]), 0.8, 0.0, -0.2, 0.0)
        assert p == pytest.approx(0.0, abs=1e-30)

    def test_matches_direct_sum(self, rng):
        pts = random_points(rng, 15)
        for u, v in rng.uniform(-0.7, 0.7, (25, 2)):
            assert array_factor(pts, u, v, DIR.u, DIR.v) == pytest.approx(
                direct_af(pts, u, v, DIR.u, DIR.v), rel=1e-12, abs=1e-15)

    def test_reciprocity_exact(self, rng):
        pts = random_points(rng, 12)
        u, v = rng.uniform(-0.7, 0.7, (2, 50))
        forward = array_factor(pts, u, v, 0.2, 0.4)
        backward = [array_factor(pts, 0.2, 0.4, a, b) for a, b in zip(u, v)]
        np.testing.assert_array_equal(forward, backward)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1),
       st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_energy_bound(m, seed, u, v, u0, v0):
    p = array_factor(random_points(np.random.default_rng(seed), m), u, v, u0, v0)
    assert 0.0 <= p <= 1.0 + 1e-12


class TestBeamMap:
    def test_grid(self):
        bmap = beam_map(CORNERS, DIR, n_uv=301)
        assert bmap.power.shape == (301, 301)
        assert bmap.u_values[0] == -1.0 and bmap.u_values[-1] == 1.0
        assert bmap.u_values[150] == 0.0

    def test_invisible_cells_masked(self):
        bmap = beam_map(CORNERS, DIR, n_uv=51)
        uu, vv = np.meshgrid(bmap.u_values, bmap.v_values, indexing="ij")
        np.testing.assert_array_equal(bmap.valid, uu**2 + vv**2 <= 1.0)

    def test_peak_near_steer(self):
        bmap = beam_map(random_points(np.random.default_rng(1), 20), DIR, n_uv=301)
        assert bmap.power[bmap.steer_cell()] >= 0.99

    def test_point_symmetry_at_broadside(self):
        bmap = beam_map(CORNERS, SourceDirection(0.0, 0.0), n_uv=101)
        flipped = bmap.power[::-1, ::-1]
        both = bmap.valid & ~np.isnan(flipped)  # rim cells can differ by one ulp of u^2+v^2
        np.testing.assert_allclose(bmap.power[both], flipped[both], rtol=0, atol=1e-12)

    def test_threads_bit_identical(self, rng):
        pts = random_points(rng, 25)
        a = beam_map(pts, DIR, n_uv=121, threads=1)
        b = beam_map(pts, DIR, n_uv=121, threads=4)
        assert a.power.tobytes() == b.power.tobytes()

    def test_db_floor(self):
        db = beam_map(CORNERS, DIR, n_uv=61).db(-30.0)
        assert np.nanmin(db) >= -30.0


class TestPsl:
    def test_corners_grating_lobes_full_height(self):
        assert psl_db(beam_map(CORNERS, DIR, n_uv=301)) == pytest.approx(0.0, abs=0.1)

    def test_single_port_has_no_sidelobe(self):
        with pytest.raises(NoSidelobeError):
            psl_db(beam_map(np.array([[1.0, 1.0]]), DIR, n_uv=51))

    def test_translation_invariance(self, rng):
        pts = random_points(rng, 15)
        a = psl_db(beam_map(pts, DIR, n_uv=151))
        b = psl_db(beam_map(pts + [0.37, -1.1], DIR, n_uv=151))
        assert abs(a - b) <= 1e-10

    def test_mask_contains_peak(self, rng):
        bmap = beam_map(random_points(rng, 20), DIR, n_uv=151)
        mask = mainlobe_mask(bmap)
        assert mask[bmap.steer_cell()]
        assert np.nanmax(bmap.power[mask]) == np.nanmax(bmap.power)

    def test_threshold_method_floor(self):
        # The literal -3 dB component leaves the beam skirt outside the mask.
        layout = greedy_select(PlacementConfig(25, Aperture(2, 2), 0.1, 0.2, beta0=100))
        bmap = beam_map(layout, DIR, n_uv=301)
        assert psl_db(bmap, method="threshold") == pytest.approx(10 * math.log10(0.5), abs=0.05)
        assert psl_db(bmap) < -10.0

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            mainlobe_mask(beam_map(CORNERS, DIR, n_uv=31), method="watershed")

    @pytest.mark.slow
    @pytest.mark.parametrize("beta0", [0.0, 0.8, 5.0, 10.0, 100.0])
    def test_grid_refinement_stability(self, beta0):
        layout = greedy_select(PlacementConfig(25, Aperture(2, 2), 0.1, 0.2, beta0=beta0))
        coarse = psl_db(beam_map(layout, DIR, n_uv=301))
        fine = psl_db(beam_map(layout, DIR, n_uv=601))
        assert abs(coarse - fine) <= 0.5
