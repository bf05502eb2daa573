import math

import numpy as np
import pytest
from scipy import stats

from atglearn.model import GRASP, ORBIT, RELEASE
from atglearn.simworld import (
    ARCubeWorld,
    ContactPair,
    SimConfig,
    WorldState,
    controller_step,
    grasp_residuals,
    relative_angle,
    reset,
    sector_index,
    step,
    true_aspect,
    visible_detections,
)

CFG = SimConfig()
QUIET = CFG.noiseless()


def state_at(beta, yaw=0.3):
    return WorldState(azimuth=(yaw + beta) % (2 * math.pi), object_yaw=yaw)


def test_reset_is_deterministic():
    assert reset(CFG, 5) == reset(CFG, 5)


def test_reset_yaw_is_uniform():
    yaws = [reset(CFG, s).object_yaw for s in range(1000)]
    assert stats.kstest(yaws, stats.uniform(0, 2 * math.pi).cdf).pvalue > 0.01


def test_reset_not_held():
    assert all(not reset(CFG, s).held and reset(CFG, s).azimuth == 0.0 for s in range(20))


def test_orbit_quarter_turn():
    s = step(WorldState(0.0, 1.0), ORBIT, [math.pi / 4], QUIET).state
    assert s.azimuth == pytest.approx(math.pi / 4)


def test_orbit_noise_is_applied():
    rng = np.random.default_rng(0)
    outs = [step(WorldState(1.0, 0.0), ORBIT, [0.0], CFG, rng).state.azimuth for _ in range(500)]
    assert np.std(outs) == pytest.approx(CFG.act_noise_sigma, rel=0.15)


@pytest.mark.parametrize("k", range(-4, 5))
@pytest.mark.parametrize("sector", range(8))
def test_orbit_from_sector_center_shifts_sector(k, sector):
    t = step(state_at(sector * math.pi / 4), ORBIT, [k * math.pi / 4], QUIET).state
    assert sector_index(relative_angle(t)) == (sector + k) % 8


def test_grasp_at_face_center_holds_with_zero_residuals():
    s = step(state_at(0.0), GRASP, [0.0, 0.0, 0.0], QUIET)
    assert s.changed and s.state.held
    assert grasp_residuals(s.state.contacts) == pytest.approx((0.0, 0.0), abs=1e-12)
    assert true_aspect(s.state, CFG).endswith(";tactile:grasp")


def test_grasp_from_corner_aligns_counterclockwise():
    s = step(state_at(math.pi / 4), GRASP, [0.0, 0.0, 0.0], QUIET).state
    assert relative_angle(s) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("rho, ok", [
    ((0.10, 0.0, 0.0), True), ((0.1001, 0.0, 0.0), False),
    ((0.0, -0.10, 0.0), True), ((0.0, -0.1001, 0.0), False),
    ((0.0, 0.0, 0.08), True), ((0.0, 0.0, 0.0801), False),
    ((0.10, 0.10, -0.08), True),
])
def test_grasp_success_box(rho, ok):
    r = step(state_at(0.0), GRASP, rho, QUIET)
    assert r.state.held == ok and r.failed == (not ok)


def test_failed_grasp_leaves_state():
    s = state_at(0.0)
    r = step(s, GRASP, [0.11, 0.0, 0.0], QUIET)
    assert r.state.azimuth == s.azimuth and not r.state.held and r.state.contacts is None


def test_release_restores_previous_aspect():
    s = state_at(math.pi / 4)
    held = step(s, GRASP, [0.0, 0.0, 0.0], QUIET).state
    back = step(held, RELEASE, [], QUIET).state
    assert not back.held
    assert true_aspect(back, CFG) == true_aspect(held, CFG).replace(";tactile:grasp", "")


def test_noops_are_flagged():
    s = state_at(0.0)
    assert step(s, RELEASE, [], QUIET).noop
    held = step(s, GRASP, [0, 0, 0], QUIET).state
    assert step(held, GRASP, [0, 0, 0], QUIET).noop


def test_held_orbit_keeps_aspect():
    held = step(state_at(0.0), GRASP, [0, 0, 0], QUIET).state
    for theta in np.linspace(-math.pi, math.pi, 17):
        assert true_aspect(step(held, ORBIT, [theta], QUIET).state, CFG) == true_aspect(held, CFG)


def test_wrong_parameter_count():
    with pytest.raises(ValueError):
        step(state_at(0.0), GRASP, [0.0], QUIET)


def test_visibility_face_on_and_corner():
    assert len(visible_detections(state_at(0.0), QUIET)) == 1
    assert len(visible_detections(state_at(math.pi / 4), QUIET)) == 2


def test_full_sweep_gives_eight_aspects_without_top_or_bottom():
    keys = {true_aspect(state_at(b), CFG) for b in np.linspace(0, 2 * math.pi, 3600, endpoint=False)}
    assert len(keys) == 8
    assert not any("ARtag:4" in k or "ARtag:5" in k for k in keys)


def test_corner_tags_ordered_left_to_right():
    # from the corner between faces 0 and 1, face 0 is on the camera's left
    assert true_aspect(state_at(math.pi / 4), CFG) == "ARtag:0;ARtag:1"


def test_aspect_periodicity():
    for b in np.linspace(0, 2 * math.pi, 50):
        s = state_at(b)
        turned = step(s, ORBIT, [2 * math.pi], QUIET).state
        assert true_aspect(turned, CFG) == true_aspect(s, CFG)


def test_residual_examples():
    z = np.zeros(3)
    antipodal = ContactPair(np.array([-5.0, 0, 0]), np.array([5.0, 0, 0]), np.array([0.1, 0, 0]), np.array([-0.1, 0, 0]))
    assert grasp_residuals(antipodal) == (0.0, 0.0)
    assert grasp_residuals(ContactPair(np.array([1.0, 0, 0]), z, z, z)) == (1.0, 0.0)
    F2, M2 = grasp_residuals(ContactPair(np.array([1.0, 0, 0]), z, np.array([0, 0.1, 0]), z))
    assert M2 == pytest.approx(0.01)


def test_controller_step_examples():
    assert controller_step(1.0, [[2.0]], 0.5) == pytest.approx([0.25])
    assert controller_step(1.0, [[0.0]], 0.5) == pytest.approx([0.0])
    with pytest.raises(ValueError):
        controller_step(1.0, [[1.0]], 0.0)


def test_controller_step_pinv_identity(rng):
    for _ in range(200):
        n = int(rng.integers(1, 6))
        J = rng.normal(size=(n, n + int(rng.integers(0, 3))))
        dphi = rng.normal(size=n)
        du = controller_step(dphi, J, 0.3)
        np.testing.assert_allclose(J @ du, 0.3 * dphi, atol=1e-9)


def test_world_wrapper_is_seeded():
    a, b = ARCubeWorld(CFG), ARCubeWorld(CFG)
    a.reset(4), b.reset(4)
    for theta in (0.3, -1.2, 2.0):
        assert a.step(ORBIT, [theta]).state == b.step(ORBIT, [theta]).state
    assert [d.pos.tolist() for d in a.detections()] == [d.pos.tolist() for d in b.detections()]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(kappa=0.0)
    with pytest.raises(ValueError):
        SimConfig(sector_half_width=0.3)
