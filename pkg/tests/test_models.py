import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from shadowlink.models import (
    DEFAULT_WAVELENGTH,
    LinkGeometry,
    SingleSlopeParams,
    TwoRayParams,
    free_space_pathloss,
    model_from_dict,
    pathloss,
    reflection_coefficient,
    single_slope_pathloss,
    two_ray_pathloss,
    wrap_degrees,
)

XC70_S60M_LOS = TwoRayParams(-0.8, -6.42, -34.53, 3.12)
GEOM = LinkGeometry(h_tx=1.60, h_rx=1.45)

distances = st.floats(1.0, 5000.0)
heights = st.floats(0.3, 5.0)
phases = st.floats(-720.0, 720.0)
ratios = st.floats(-30.0, 6.0)


def test_wavelength_at_5_9_ghz():
    assert DEFAULT_WAVELENGTH == pytest.approx(0.0508123, abs=1e-7)


def test_friis_at_ten_metres():
    assert free_space_pathloss(10.0) == pytest.approx(oracles.friis_db(10.0), abs=1e-12)
    assert free_space_pathloss(10.0) == pytest.approx(67.8648, abs=1e-4)


@given(d=distances, h_tx=heights, h_rx=heights, g=ratios, ratio=ratios, phi=phases,
       pol=st.sampled_from(["vertical", "horizontal"]))
@settings(max_examples=200, deadline=None)
def test_two_ray_matches_scalar_oracle(d, h_tx, h_rx, g, ratio, phi, pol):
    geom = LinkGeometry(h_tx=h_tx, h_rx=h_rx, polarization=pol)
    got = two_ray_pathloss(d, TwoRayParams(g, ratio, phi, 1.0), geom)
    want = oracles.two_ray_db(d, g, ratio, phi, h_tx, h_rx, pol=pol)
    assert got == pytest.approx(want, abs=1e-8)


@given(d=distances, g=ratios)
def test_no_reflection_is_free_space_minus_antenna_gain(d, g):
    pl = two_ray_pathloss(d, TwoRayParams(g, 0.0, 0.0, 1.0), GEOM, reflection=False)
    d_los = math.hypot(d, GEOM.h_tx - GEOM.h_rx)
    assert pl == pytest.approx(oracles.friis_db(d_los) - g, abs=1e-9)


@given(d=distances, h_tx=heights, h_rx=heights, pol=st.sampled_from(["vertical", "horizontal"]))
def test_reflection_coefficient_passive(d, h_tx, h_rx, pol):
    gam = reflection_coefficient(d, LinkGeometry(h_tx=h_tx, h_rx=h_rx, polarization=pol))
    assert abs(gam) <= 1.0 + 1e-12


@pytest.mark.parametrize("pol", ["vertical", "horizontal"])
def test_reflection_tends_to_minus_one_at_grazing(pol):
    gam = reflection_coefficient(1e6, LinkGeometry(polarization=pol))
    assert gam == pytest.approx(-1.0, abs=1e-3)


@given(d=distances, k=st.integers(-3, 3), phi=st.floats(0.0, 359.9))
def test_phase_is_periodic(d, k, phi):
    a = two_ray_pathloss(d, TwoRayParams(0.0, -5.0, phi, 1.0), GEOM)
    b = two_ray_pathloss(d, TwoRayParams(0.0, -5.0, phi + 360.0 * k, 1.0), GEOM)
    assert a == pytest.approx(b, abs=1e-7)


def test_phase_wrapped_on_construction():
    assert XC70_S60M_LOS.delta_phi == pytest.approx(325.47)
    assert wrap_degrees(-1e-17) == 0.0
    assert wrap_degrees(720.0) == 0.0


def test_published_los_curve_at_100m():
    assert two_ray_pathloss(100.0, XC70_S60M_LOS, GEOM) == pytest.approx(93.22894851, abs=1e-6)


def test_golden_two_ray_curve(data_dir):
    with open(data_dir / "two_ray_xc70_s60m_los.csv") as fh:
        rows = [(float(r["d_m"]), float(r["pathloss_db"])) for r in csv.DictReader(fh)]
    d = np.array([r[0] for r in rows])
    want = np.array([r[1] for r in rows])
    np.testing.assert_allclose(two_ray_pathloss(d, XC70_S60M_LOS, GEOM), want, atol=1e-7)


def test_far_field_slope_is_40_db_per_decade_for_plain_two_ray():
    plain = TwoRayParams(0.0, 0.0, 0.0, 1.0)
    slope = two_ray_pathloss(20_000.0, plain, GEOM) - two_ray_pathloss(2_000.0, plain, GEOM)
    assert slope == pytest.approx(40.0, abs=0.5)


def test_fitted_gain_ratio_flattens_far_field_slope():
    # a ground ray 6.4 dB weaker never cancels the direct ray, so the slope stays nearer 20 dB/decade
    slope = two_ray_pathloss(20_000.0, XC70_S60M_LOS, GEOM) - two_ray_pathloss(2_000.0, XC70_S60M_LOS, GEOM)
    assert 20.0 < slope < 25.0


def test_two_ray_rejects_non_positive_distance():
    with pytest.raises(ValueError):
        two_ray_pathloss(0.0, XC70_S60M_LOS, GEOM)
    with pytest.raises(ValueError):
        two_ray_pathloss(np.array([10.0, -1.0]), XC70_S60M_LOS, GEOM)


@given(pl0=st.floats(30, 90), alpha=st.floats(0.5, 5.0), d=st.floats(10.0, 1e4))
def test_single_slope_matches_oracle(pl0, alpha, d):
    p = SingleSlopeParams(pl0, alpha, 1.0)
    assert single_slope_pathloss(d, p) == pytest.approx(oracles.single_slope_db(d, pl0, alpha), abs=1e-9)


def test_single_slope_decade_and_reference():
    p = SingleSlopeParams(59.53, 2.73, 5.52)
    assert single_slope_pathloss(10.0, p) == pytest.approx(59.53)
    assert single_slope_pathloss(100.0, p) - single_slope_pathloss(10.0, p) == pytest.approx(27.3)
    with pytest.raises(ValueError):
        single_slope_pathloss(9.99, p)


def test_vectorized_and_scalar_agree():
    d = np.array([12.0, 50.0, 300.0])
    vec = pathloss(d, XC70_S60M_LOS, GEOM)
    assert vec.shape == (3,)
    for x, v in zip(d, vec):
        assert isinstance(pathloss(float(x), XC70_S60M_LOS, GEOM), float)
        assert pathloss(float(x), XC70_S60M_LOS, GEOM) == pytest.approx(v)


@given(g=ratios, ratio=ratios, phi=phases, sigma=st.floats(0.0, 10.0))
def test_two_ray_dict_round_trip(g, ratio, phi, sigma):
    p = TwoRayParams(g, ratio, phi, sigma)
    assert model_from_dict(p.to_dict()) == p


def test_single_slope_dict_round_trip():
    p = SingleSlopeParams(59.53, 2.73, 5.52, d0=10.0)
    assert model_from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        model_from_dict({"model": "three_ray"})


def test_geometry_validation_and_round_trip():
    g = LinkGeometry(h_tx=1.78, h_rx=1.35, eps_r=complex(15, -1), polarization="horizontal")
    assert LinkGeometry.from_dict(g.to_dict()) == g
    assert LinkGeometry.from_dict({"frequency_hz": 5.9e9}).wavelength == pytest.approx(DEFAULT_WAVELENGTH)
    for bad in ({"h_tx": 0.0}, {"h_rx": -1.0}, {"eps_r": 0.5}, {"polarization": "circular"}, {"wavelength": 0.0}):
        with pytest.raises(ValueError):
            LinkGeometry(**bad)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        SingleSlopeParams(60, 2, -1.0)
    with pytest.raises(ValueError):
        TwoRayParams(0, 0, 0, -0.1)
