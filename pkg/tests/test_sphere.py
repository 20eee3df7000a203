import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from soiqe.errors import InvalidArgumentError
from soiqe.sphere import (ErpImage, ErpStereoPair, Viewpoint, default_viewport_side,
                          extract_stereo_viewports, render_viewport, rays_to_lonlat,
                          sample_viewpoints, viewport_rays)


def exact_viewpoints(n0):
    """Independent enumeration with exact trigonometry."""
    theta = sympy.Rational(360, n0)
    last = sympy.floor(90 / theta)
    rings = list(range(1, last))
    if last * theta != 90:
        rings.append(last)
    pts = {(round(float(k * theta), 9), 0.0) for k in range(n0)}
    for m in rings:
        lat = m * theta
        count = int(sympy.floor(n0 * sympy.cos(sympy.pi * lat / 180)))
        for sign in (1, -1):
            pts |= {(round(float(sympy.Rational(360, count) * k), 9), float(sign * lat))
                    for k in range(count)}
    pts |= {(0.0, 90.0), (0.0, -90.0)}
    return pts


def as_set(points):
    return {(round(p.longitude_deg, 9), p.latitude_deg) for p in points}


def test_n0_8_layout():
    pts = sample_viewpoints(8)
    assert len(pts) == 20
    lats = [p.latitude_deg for p in pts]
    assert lats.count(0.0) == 8
    assert lats.count(45.0) == 5 and lats.count(-45.0) == 5
    assert lats.count(90.0) == 1 and lats.count(-90.0) == 1
    assert all(lat % 45.0 == 0.0 for lat in lats)


def test_n0_4_has_equator_and_poles_only():
    pts = sample_viewpoints(4)
    assert [(p.longitude_deg, p.latitude_deg) for p in pts] == [
        (0.0, 0.0), (90.0, 0.0), (180.0, 0.0), (270.0, 0.0), (0.0, 90.0), (0.0, -90.0)]


def test_ordering():
    pts = sample_viewpoints(8)
    assert [p.latitude_deg for p in pts] == [0.0] * 8 + [45.0] * 5 + [-45.0] * 5 + [90.0, -90.0]
    ring = [p.longitude_deg for p in pts[8:13]]
    assert ring == sorted(ring) and ring[0] == 0.0
    assert ring == pytest.approx([0, 72, 144, 216, 288])


@pytest.mark.parametrize("n0", range(4, 17))
def test_matches_exact_enumeration(n0):
    pts = sample_viewpoints(n0)
    assert as_set(pts) == exact_viewpoints(n0)
    assert len(pts) == len(exact_viewpoints(n0))


@pytest.mark.parametrize("n0", range(4, 17))
def test_count_formula(n0):
    theta = 360.0 / n0
    last = math.floor(90.0 / theta + 1e-9)
    inner = sum(math.floor(n0 * math.cos(math.radians(m * theta)) + 1e-9) for m in range(1, last))
    if math.isclose(last * theta, 90.0):
        expected = n0 + 2 * inner + 2
    else:
        expected = n0 + 2 * inner + 2 * math.floor(n0 * math.cos(math.radians(last * theta))) + 2
    assert len(sample_viewpoints(n0)) == expected


@pytest.mark.parametrize("bad", [3, 0, -8, 2.5])
def test_rejects_small_n0(bad):
    with pytest.raises(InvalidArgumentError):
        sample_viewpoints(bad)


def test_viewpoint_ranges():
    with pytest.raises(InvalidArgumentError):
        Viewpoint(360.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        Viewpoint(0.0, 91.0)


def test_erp_validation():
    with pytest.raises(InvalidArgumentError):
        ErpImage(np.full((1, 8), 0.5))
    with pytest.raises(InvalidArgumentError):
        ErpImage(np.full((4, 8), 1.5))
    with pytest.raises(InvalidArgumentError):
        ErpStereoPair(ErpImage(np.zeros((4, 8))), ErpImage(np.zeros((4, 6))))


def test_constant_erp_gives_constant_viewport():
    erp = ErpImage(np.full((64, 128), 0.5))
    for vp in (Viewpoint(0, 0), Viewpoint(123.0, 67.0), Viewpoint(0, -90)):
        view = render_viewport(erp, vp, 90.0, 24)
        np.testing.assert_allclose(view.luma, 0.5, atol=1e-15)


def test_centre_pixel_looks_along_the_viewpoint():
    for vp in (Viewpoint(10.0, 20.0), Viewpoint(300.0, -75.0)):
        rays = viewport_rays(vp, 90.0, 33)
        lon, lat = rays_to_lonlat(rays[16, 16])
        assert lat == pytest.approx(vp.latitude_deg, abs=1e-9)
        assert lon % 360.0 == pytest.approx(vp.longitude_deg, abs=1e-9)


def test_centre_sample_of_a_ramp():
    w, h = 256, 128
    erp = ErpImage(np.tile(np.arange(w) / w, (h, 1)))
    view = render_viewport(erp, Viewpoint(0.0, 0.0), 90.0, 33)
    # longitude 0 sits between columns w/2 - 1 and w/2
    assert view.luma[16, 16] == pytest.approx(0.5, abs=1.0 / w)


def test_pole_viewport_reads_only_high_latitudes():
    h, w = 180, 360
    vp = Viewpoint(0.0, 90.0)
    side = 41
    # brute force: the lowest latitude any viewport ray reaches
    _, lat = rays_to_lonlat(viewport_rays(vp, 90.0, side))
    lowest = lat.min()
    assert 35.0 < lowest < 36.0
    row_lat = 90.0 - (np.arange(h) + 0.5) * 180.0 / h
    marked = (row_lat > lowest - 2.0).astype(float)
    erp = ErpImage(np.repeat(marked[:, None], w, axis=1))
    assert render_viewport(erp, vp, 90.0, side).luma.mean() > 0.9


def test_pole_viewport_top_band_fraction():
    h, w = 180, 360
    vp = Viewpoint(0.0, 90.0)
    side = 101
    row_lat = 90.0 - (np.arange(h) + 0.5) * 180.0 / h
    band = (np.arange(h) < h // 10).astype(float)
    erp = ErpImage(np.repeat(band[:, None], w, axis=1))
    _, lat = rays_to_lonlat(viewport_rays(vp, 90.0, side))
    expected = (lat > row_lat[h // 10 - 1]).mean()
    assert render_viewport(erp, vp, 90.0, side).luma.mean() == pytest.approx(expected, abs=0.02)


@pytest.mark.parametrize("shift", [1, 7, 40, 255])
def test_longitude_shift_equivariance(shift, rng):
    h, w = 64, 256
    erp = rng.random((h, w))
    vp = Viewpoint(33.0, 20.0)
    moved = Viewpoint((33.0 + shift * 360.0 / w) % 360.0, 20.0)
    a = render_viewport(ErpImage(erp), vp, 90.0, 32).luma
    b = render_viewport(ErpImage(np.roll(erp, shift, axis=1)), moved, 90.0, 32).luma
    np.testing.assert_allclose(a, b, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1),
       lon=st.floats(0, 359.999), lat=st.floats(-90, 90),
       fov=st.floats(1.0, 179.0), side=st.integers(16, 40))
def test_output_stays_in_unit_range(seed, lon, lat, fov, side):
    erp = np.random.default_rng(seed).random((16, 32))
    erp[0, 0], erp[-1, -1] = 0.0, 1.0
    view = render_viewport(ErpImage(erp), Viewpoint(lon, lat), fov, side)
    assert view.luma.shape == (side, side)
    assert view.luma.min() >= 0.0 and view.luma.max() <= 1.0


def test_render_preconditions():
    erp = ErpImage(np.zeros((16, 32)))
    with pytest.raises(InvalidArgumentError):
        render_viewport(erp, Viewpoint(0, 0), 90.0, 15)
    with pytest.raises(InvalidArgumentError):
        render_viewport(erp, Viewpoint(0, 0), 180.0, 16)


def test_default_side_matches_equator_density():
    assert default_viewport_side(1024, 90.0) == 256
    assert default_viewport_side(512) == 128


def test_extract_stereo_viewports(rng):
    left = ErpImage(rng.random((32, 64)))
    right = ErpImage(rng.random((32, 64)))
    views = extract_stereo_viewports(ErpStereoPair(left, right), 8, 90.0, 16)
    assert len(views) == 20
    assert [v[0].center for v in views] == sample_viewpoints(8)
    swapped = extract_stereo_viewports(ErpStereoPair(right, left), 8, 90.0, 16)
    for (a_l, a_r), (b_l, b_r) in zip(views, swapped):
        np.testing.assert_array_equal(a_l.luma, b_r.luma)
        np.testing.assert_array_equal(a_r.luma, b_l.luma)
    same = extract_stereo_viewports(ErpStereoPair(left, left), 8, 90.0, 16)
    for a, b in same:
        np.testing.assert_array_equal(a.luma, b.luma)
