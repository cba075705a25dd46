import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from seawake import geoproject as gp
from seawake.errors import (
    ContractError,
    DegenerateAnnotationWarning,
    EmptyInputError,
    ScaleUndefinedError,
    UnknownVesselError,
    ValidationError,
)
from seawake.geoproject import ClipTiming, GeoPixelProjector, LocalOrigin
from seawake.telemetry import GeoFix, TelemetryLog

# mpmath at 40 digits: 111320 * cos(37 deg)
M_LON_37 = 88904.10497846464
# mpmath at 40 digits: rotation of (10, 5) by 100 deg
ROT_100 = (-6.660520541730344, 8.979836641787429)

finite = dict(allow_nan=False, allow_infinity=False)


def test_make_origin_single_fix():
    origin = gp.make_origin(TelemetryLog([GeoFix(0.0, 1, 25.0, 37.0)]))
    assert (origin.lon_bar, origin.lat_bar) == (25.0, 37.0)
    assert origin.m_lat == 111320.0
    assert origin.m_lon == pytest.approx(M_LON_37, rel=1e-12)


def test_make_origin_mean_and_equator():
    origin = gp.make_origin(TelemetryLog([GeoFix(0.0, 1, 0.0, 0.0), GeoFix(1.0, 2, 2.0, 4.0)]))
    assert (origin.lon_bar, origin.lat_bar) == (1.0, 2.0)
    assert LocalOrigin(10.0, 0.0).m_lon == 111320.0


def test_make_origin_empty():
    with pytest.raises(EmptyInputError):
        gp.make_origin([])


def test_origin_rejects_pole():
    with pytest.raises(ValidationError):
        LocalOrigin(0.0, 90.0)


def test_to_local_metric_examples():
    assert gp.to_local_metric(GeoFix(0.0, 1, 5.0, 6.0), LocalOrigin(5.0, 6.0)) == (0.0, 0.0)
    e, n = gp.to_local_metric(GeoFix(0.0, 1, 0.001, 0.0), LocalOrigin(0.0, 0.0))
    assert e == pytest.approx(111.32, abs=1e-9) and n == 0.0
    e, _ = gp.to_local_metric(GeoFix(0.0, 1, 10.002, 60.0), LocalOrigin(10.0, 60.0))
    assert LocalOrigin(10.0, 60.0).m_lon == pytest.approx(55660.0, rel=1e-12)
    assert e == pytest.approx(111.32, rel=1e-9)


def test_rotate_examples():
    assert gp.rotate((3.0, 4.0), 0.0) == (3.0, 4.0)
    fx, fy = gp.rotate((1.0, 0.0), 90.0)
    assert fx == pytest.approx(0.0, abs=1e-15) and fy == pytest.approx(1.0)
    fx, fy = gp.rotate((10.0, 5.0), 100.0)
    assert fx == pytest.approx(ROT_100[0], abs=1e-12)
    assert fy == pytest.approx(ROT_100[1], abs=1e-12)


@given(st.floats(-1e6, 1e6, **finite), st.floats(-1e6, 1e6, **finite), st.floats(-720, 720, **finite))
def test_rotate_preserves_norm_and_inverts(e, n, theta):
    fx, fy = gp.rotate((e, n), theta)
    norm = math.hypot(e, n)
    assert math.hypot(fx, fy) == pytest.approx(norm, rel=1e-9, abs=1e-9)
    be, bn = gp.rotate((fx, fy), -theta)
    assert be == pytest.approx(e, rel=1e-9, abs=1e-9 * max(norm, 1.0))
    assert bn == pytest.approx(n, rel=1e-9, abs=1e-9 * max(norm, 1.0))


def _pair_10m():
    origin = LocalOrigin(0.0, 0.0)
    a = GeoFix(0.0, 1, 0.0, 0.0)
    b = GeoFix(0.0, 2, 10.0 / 111320.0, 0.0)
    return origin, a, b


def test_estimate_scale_fixture():
    origin, a, b = _pair_10m()
    assert gp.estimate_scale(a, b, (0.0, 0.0), (283.0, 0.0), origin) == pytest.approx(28.3, abs=1e-9)
    assert gp.estimate_scale(a, b, (0.0, 0.0), (10.0, 0.0), origin) == pytest.approx(1.0, abs=1e-12)


def test_estimate_scale_is_symmetric():
    origin = LocalOrigin(25.0, 37.0)
    a, b = GeoFix(0.0, 1, 25.0001, 37.0002), GeoFix(0.0, 2, 24.9998, 37.0001)
    s_ab = gp.estimate_scale(a, b, (10.0, 20.0), (200.0, 90.0), origin)
    s_ba = gp.estimate_scale(b, a, (200.0, 90.0), (10.0, 20.0), origin)
    assert s_ab == s_ba


def test_estimate_scale_degenerate_cases():
    origin, a, _ = _pair_10m()
    with pytest.raises(ScaleUndefinedError):
        gp.estimate_scale(a, a, (0.0, 0.0), (5.0, 5.0), origin)
    _, a, b = _pair_10m()
    with pytest.warns(DegenerateAnnotationWarning):
        assert gp.estimate_scale(a, b, (4.0, 4.0), (4.0, 4.0), origin) == 0.0


def _east_log(n=16, fps=7.0):
    """Vessel 1 moves 1 m East per frame on the equator; vessel 2 is parked."""
    fixes = [GeoFix(i / fps, 1, i / 111320.0, 0.0) for i in range(n)]
    fixes += [GeoFix(i / fps, 2, -0.001, 0.0005) for i in range(n)]
    return TelemetryLog(fixes)


def _east_model(theta=0.0, scale=10.0):
    return gp.build_model(_east_log(), ClipTiming(), {1: (500.0, 300.0), 2: (100.0, 100.0)},
                          theta_deg=theta, scale=scale)


def test_project_trajectory_due_east():
    model = _east_model()
    traj = gp.project_trajectory(_east_log(), 1, model)
    assert len(traj) == 14
    expected = np.column_stack([500.0 + 10.0 * np.arange(14), np.full(14, 300.0)])
    np.testing.assert_allclose(traj.points, expected, atol=1e-6)
    np.testing.assert_allclose(traj.timestamps, np.arange(14) / 7.0)


def test_project_stationary_vessel():
    traj = gp.project_trajectory(_east_log(), 2, _east_model(theta=100.0))
    assert np.all(traj.points == np.array([100.0, 100.0]))


def test_anchor_is_exact():
    traj = gp.project_trajectory(_east_log(), 1, _east_model(theta=100.0, scale=28.3))
    assert tuple(traj.points[0]) == (500.0, 300.0)


def test_projection_linearity():
    model = _east_model(theta=100.0, scale=28.3)
    anchor = model.anchor(1).fix
    d = np.array([3e-5, -2e-5])
    p1 = gp.project_points([anchor.lon + d[0], anchor.lat + d[1]], model, 1)
    p2 = gp.project_points([anchor.lon + 2 * d[0], anchor.lat + 2 * d[1]], model, 1)
    c = np.array([500.0, 300.0])
    np.testing.assert_allclose(p2 - c, 2 * (p1 - c), rtol=1e-9)


def test_inverse_project_examples():
    model = _east_model()
    fix = gp.inverse_project((500.0, 300.0), 0.0, model, 1)
    anchor = model.anchor(1).fix
    assert fix.lon == pytest.approx(anchor.lon, abs=1e-15)
    assert fix.lat == pytest.approx(anchor.lat, abs=1e-15)
    moved = gp.inverse_project((510.0, 300.0), 0.0, model, 1)
    e, n = gp.to_local_metric(moved, model.origin)
    e0, n0 = gp.to_local_metric(anchor, model.origin)
    assert e - e0 == pytest.approx(1.0, abs=1e-9)
    assert n - n0 == pytest.approx(0.0, abs=1e-9)


def test_inverse_project_round_trip_random_points():
    model = _east_model(theta=100.0, scale=28.3)
    rng = np.random.default_rng(1)
    pts = rng.uniform([0, 0], [1024, 576], size=(100, 2))
    for p in pts:
        fix = gp.inverse_project(p, 0.0, model, 1)
        back = gp.project_points([fix.lon, fix.lat], model, 1)
        assert np.hypot(*(back - p)) < 1e-6


@settings(max_examples=50)
@given(st.floats(-170, 170), st.floats(-80, 80), st.floats(-360, 360), st.floats(0.5, 80),
       st.floats(-0.01, 0.01), st.floats(-0.01, 0.01))
def test_geo_round_trip(lon0, lat0, theta, scale, dlon, dlat):
    timing = ClipTiming()
    anchor = GeoFix(0.0, 1, lon0, lat0)
    model = gp.CameraFrameModel(LocalOrigin(lon0, lat0), theta, scale,
                                {1: gp.Anchor(512.0, 288.0, anchor)}, timing)
    px = gp.project_points([lon0 + dlon, lat0 + dlat], model, 1)
    back = gp.unproject_points(px, model, 1)
    assert abs(back[0] - (lon0 + dlon)) < 1e-9
    assert abs(back[1] - (lat0 + dlat)) < 1e-9


def test_camera_model_invariants():
    anchor = GeoFix(0.0, 1, 0.0, 0.0)
    with pytest.raises(ValidationError):
        gp.CameraFrameModel(LocalOrigin(0, 0), 0.0, 0.0, {1: gp.Anchor(5, 5, anchor)}, ClipTiming())
    with pytest.raises(ValidationError):
        gp.CameraFrameModel(LocalOrigin(0, 0), 0.0, 1.0, {1: gp.Anchor(1024, 5, anchor)}, ClipTiming())
    model = _east_model()
    with pytest.raises(UnknownVesselError):
        model.anchor(42)


def test_clip_timing():
    t = ClipTiming(t_start=3.0)
    assert t.times[0] == 3.0 and len(t.times) == 14
    assert t.t_end == pytest.approx(3.0 + 13 / 7.0)
    for bad in (dict(fps=0), dict(n_frames=0), dict(width=0)):
        with pytest.raises(ValidationError):
            ClipTiming(**bad)


def test_origin_uses_clip_window():
    # a far-away fix outside the clip window must not move the origin
    fixes = list(_east_log()) + [GeoFix(100.0, 1, 1.0, 0.0)]
    model = gp.build_model(TelemetryLog(fixes), ClipTiming(), {1: (500.0, 300.0)}, scale=10.0)
    assert model.origin.lon_bar < 0.01


def test_config_round_trip():
    model = _east_model(theta=100.0, scale=None)
    doc = gp.model_to_config(model)
    assert set(doc) == {"theta_deg", "scale_px_per_m", "t_start", "fps", "n_frames", "width",
                        "height", "vessels"}
    again = gp.model_from_config(doc, _east_log())
    assert again == model
    doc.pop("scale_px_per_m")
    assert gp.model_from_config(doc, _east_log()).scale == pytest.approx(model.scale)


def test_projector_estimator_api():
    proj = GeoPixelProjector(theta_deg=100.0)
    params = proj.get_params()
    assert params["theta_deg"] == 100.0 and params["scale_px_per_m"] is None
    assert clone(proj).get_params() == params
    with pytest.raises(NotFittedError):
        proj.transform([[0.0, 0.0]])
    log = _east_log()
    proj.fit(log, {1: (500.0, 300.0), 2: (100.0, 100.0)})
    assert proj.scale_ > 0
    anchor = proj.model_.anchor(1).fix
    np.testing.assert_allclose(proj.transform([[anchor.lon, anchor.lat]], vessel_id=1), [[500.0, 300.0]])
    pts = np.array([[510.0, 280.0], [600.0, 400.0]])
    np.testing.assert_allclose(proj.transform(proj.inverse_transform(pts, 1), 1), pts, atol=1e-6)
    trajs = proj.trajectories()
    assert set(trajs) == {1, 2} and all(len(t) == 14 for t in trajs.values())


def test_projector_fit_needs_two_vessels_for_scale():
    with pytest.raises(ContractError):
        GeoPixelProjector().fit(_east_log(), {1: (500.0, 300.0)})
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        GeoPixelProjector(scale_px_per_m=5.0).fit(_east_log(), {1: (500.0, 300.0)})
