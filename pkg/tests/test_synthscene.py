import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from seawake import geoproject as gp
from seawake import synthscene as synth
from seawake import telemetry as tl
from seawake.errors import ContractError, OutOfRangeError, ValidationError
from seawake.geoproject import ClipTiming
from seawake.synthscene import Background, MotionScript, VesselScript

SMALL = ClipTiming(width=256, height=192)


def _segment_script():
    return MotionScript((VesselScript(1, [[0.0, 0.0, 0.0], [10.0, 10.0, 20.0]]),))


def test_interpolate_script_examples():
    s = _segment_script()
    assert synth.interpolate_script(s, 1, 0.0) == (0.0, 0.0)
    assert synth.interpolate_script(s, 1, 10.0) == (10.0, 20.0)
    assert synth.interpolate_script(s, 1, 5.0) == (5.0, 10.0)
    assert synth.interpolate_script(s, 1, 2.5) == (2.5, 5.0)
    with pytest.raises(OutOfRangeError):
        synth.interpolate_script(s, 1, 10.5)


def test_script_invariants():
    with pytest.raises(ValidationError):
        VesselScript(1, [[0.0, 1.0, 1.0], [0.0, 2.0, 2.0]])
    script = MotionScript((VesselScript(1, [[0.0, 300.0, 10.0], [1.0, 10.0, 10.0]]),))
    with pytest.raises(ValidationError):
        script.validate(SMALL)


def test_script_document_minimal_keys():
    doc = {"vessels": [{"id": 4, "waypoints": [[0, 10, 20], [2, 30, 40]], "radius_px": 3}],
           "background": {"seed": 9, "octaves": 2, "drift": [0.5, 0]}}
    s = MotionScript.from_dict(doc)
    assert s.vessels[0].radius_px == 3.0 and s.background.drift == (0.5, 0.0)
    assert MotionScript.from_dict(s.to_dict()).to_dict() == s.to_dict()
    with pytest.raises(ContractError):
        MotionScript.from_dict({"vessels": [{"waypoints": []}]})


def test_value_noise_is_pointwise():
    xs, ys = np.arange(0, 80, 1.0), np.arange(0, 60, 1.0)
    full = synth.value_noise(xs, ys, seed=3)
    part = synth.value_noise(xs[17:40], ys[5:9], seed=3)
    np.testing.assert_array_equal(part, full[5:9, 17:40])
    assert not np.array_equal(full, synth.value_noise(xs, ys, seed=4))


def _scene(script, timing=SMALL, **kw):
    model = synth.synthetic_model(script, timing)
    return synth.generate_scene(script, timing, model, **kw)


def test_static_script():
    script = MotionScript((VesselScript(1, [[-1.0, 100.0, 90.0], [4.0, 100.0, 90.0]]),
                           VesselScript(2, [[-1.0, 160.0, 60.0], [4.0, 160.0, 60.0]])))
    scene = _scene(script)
    for f in scene.frames[1:]:
        np.testing.assert_array_equal(f, scene.frames[0])
    for vid in (1, 2):
        traj = gp.project_trajectory(scene.log, vid, scene.model)
        assert np.abs(traj.points - scene.gt_trajectories[vid].points).max() < 1e-6


def test_linear_round_trip():
    script = synth.linear_script([(60.0, 80.0), (150.0, 120.0)], [(2.0, 0.0), (-1.0, 1.5)], SMALL)
    scene = _scene(script, offset=21.0)
    log = tl.align(scene.log, 21.0)
    for vid, gt in scene.gt_trajectories.items():
        traj = gp.project_trajectory(log, vid, scene.model)
        assert np.abs(traj.points - gt.points).max() < 1e-4
    # the model a user would estimate from the log and first-frame centres matches
    centres = {vid: tuple(t.points[0]) for vid, t in scene.gt_trajectories.items()}
    est = gp.build_model(log, SMALL, centres)
    assert est.scale == pytest.approx(28.3, rel=1e-9)
    assert est.origin == scene.model.origin


def test_gps_log_is_one_hertz():
    script = synth.linear_script([(60.0, 80.0), (150.0, 120.0)], [(2.0, 0.0), (0.0, 1.0)], SMALL)
    scene = _scene(script)
    times = scene.log.times(script.vessels[0].id)
    np.testing.assert_allclose(np.diff(times), 1.0)
    fix = scene.log.fixes(script.vessels[0].id)[0]
    assert fix.sog > 0 and 0 <= fix.cog < 360


def test_determinism_and_thread_independence(monkeypatch):
    script = synth.linear_script([(60.0, 80.0), (150.0, 120.0)], [(2.0, 0.0), (-1.0, 1.5)], SMALL,
                                 seed=5, drift=(0.3, 0.0))
    monkeypatch.setenv("SEAWAKE_THREADS", "1")
    a = _scene(script)
    monkeypatch.setenv("SEAWAKE_THREADS", "4")
    b = _scene(script)
    for x, y in zip(a.frames, b.frames):
        assert x.tobytes() == y.tobytes()
    assert tl.serialize_log(a.log) == tl.serialize_log(b.log)


def test_drift_moves_background():
    vessels = (VesselScript(1, [[-1.0, 100.0, 90.0], [4.0, 100.0, 90.0]]),)
    still = MotionScript(vessels, Background(seed=1))
    moving = MotionScript(vessels, Background(seed=1, drift=(1.0, 0.0)))
    f0 = synth.render_frame(moving, SMALL, 0)
    f2 = synth.render_frame(moving, SMALL, 2)
    assert np.array_equal(f0, synth.render_frame(still, SMALL, 0))
    # away from the vessel, frame 2 is frame 0 shifted right by 2 px
    np.testing.assert_allclose(f2[150:, 2:], f0[150:, :-2], atol=1e-12)


def test_vessels_are_trackable():
    script = synth.linear_script([(60.0, 80.0), (150.0, 120.0)], [(2.0, 0.0), (-1.0, 1.5)], SMALL)
    scene = _scene(script)
    for gt in scene.gt_trajectories.values():
        for k in (0, len(scene.frames) - 1):
            assert synth.structure_condition(scene.frames[k], gt.points[k]) < synth.MAX_STRUCTURE_CONDITION


def test_untrackable_scene_is_rejected():
    vessels = (VesselScript(1, [[-1.0, 100.0, 90.0], [4.0, 100.0, 90.0]], intensity=0.0),)
    flat = MotionScript(vessels, Background(amplitude=0.0))
    with pytest.raises(ContractError):
        _scene(flat)
    assert synth.structure_condition(np.full((40, 40), 0.3), (20, 20)) == np.inf


def test_script_model_mismatch():
    script = synth.linear_script([(60.0, 80.0), (150.0, 120.0)], [(1.0, 0.0), (1.0, 0.0)], SMALL)
    other = synth.linear_script([(60.0, 80.0), (150.0, 120.0)], [(1.0, 0.0), (1.0, 0.0)], SMALL, ids=(1, 2))
    with pytest.raises(ContractError):
        synth.generate_scene(script, SMALL, synth.synthetic_model(other, SMALL))


@settings(max_examples=20, deadline=None)
@given(st.floats(20, 230), st.floats(20, 170), st.floats(-3, 3), st.floats(-3, 3))
def test_round_trip_property(x, y, vx, vy):
    timing = ClipTiming(width=256, height=192, n_frames=6)
    script = synth.linear_script([(x, y), (128.0, 96.0)], [(vx, vy), (0.0, 0.0)], timing)
    try:
        script.validate(timing)
    except ValidationError:
        assume(False)
    model = synth.synthetic_model(script, timing)
    log = synth._emit_log(script, model, 0.0)
    for v in script.vessels:
        traj = gp.project_trajectory(log, v.id, model)
        expected = synth._positions(v, timing.times)
        assert np.abs(traj.points - expected).max() < 1e-4
