import math

import numpy as np
import pytest

from armlab.sim import (
    ACTION_DIM, LEFT, RIGHT, ArmGeometry, WorldConfig,
    ee_pose, fk_points, hold_action, ik_solve, make_task, observe,
    proprio_vector, render, reset, step, success,
)
from armlab.sim.world import GRIP_CLOSE


CFG = WorldConfig()
TASK = make_task("single_insertion")


def _state(seed=0, task=TASK):
    return reset(task, seed, CFG)


# -- reset ---------------------------------------------------------------

def test_reset_is_deterministic():
    a, b = _state(123), _state(123)
    np.testing.assert_array_equal(a.joints, b.joints)
    for k in a.object_poses:
        np.testing.assert_array_equal(a.object_poses[k], b.object_poses[k])


def test_reset_positions_respect_bounds():
    for seed in range(1000):
        st = _state(seed)
        for obj in TASK.objects:
            (x0, x1), (y0, y1), (a0, a1) = obj.init_range
            x, y, a = st.object_poses[obj.name]
            assert x0 <= x <= x1 and y0 <= y <= y1 and a0 <= a <= a1


def test_reset_x_positions_are_uniform_ks():
    # one-sample Kolmogorov-Smirnov against the uniform CDF at alpha=0.01
    n = 10_000
    (x0, x1) = TASK.objects[0].init_range[0]
    xs = np.sort([_state(seed).object_poses["peg"][0] for seed in range(n)])
    cdf = (xs - x0) / (x1 - x0)
    emp = np.arange(1, n + 1) / n
    d = np.max(np.maximum(np.abs(emp - cdf), np.abs(cdf - (np.arange(n) / n))))
    assert d < 1.63 / math.sqrt(n)  # K-S critical value at alpha=0.01


def test_fresh_reset_is_never_successful():
    for task_id in ("single_insertion", "double_insertion", "mug_on_plate"):
        task = make_task(task_id)
        for seed in range(50):
            assert not success(reset(task, seed, CFG), task)


# -- stepping ------------------------------------------------------------

def test_hold_action_changes_only_tick():
    st = _state(7)
    nxt = step(st, hold_action(st), TASK, CFG)
    np.testing.assert_allclose(nxt.joints, st.joints, atol=1e-12)
    np.testing.assert_allclose(nxt.grippers, st.grippers, atol=1e-12)
    assert nxt.tick == st.tick + 1


def test_rate_limit_clamps_joint_motion():
    st = _state(0)
    action = hold_action(st)
    action[0] = st.joints[0, 0] + 1.0  # far beyond one tick of travel
    nxt = step(st, action, TASK, CFG)
    expect = st.joints[0, 0] + CFG.joint_rate / CFG.control_hz
    assert nxt.joints[0, 0] == pytest.approx(expect, abs=1e-9)


def test_rate_limit_never_exceeded_under_random_actions():
    rng = np.random.default_rng(3)
    st = _state(1)
    for _ in range(60):
        action = rng.uniform(-math.pi, math.pi, ACTION_DIM)
        action[6:] = rng.uniform(0, 1, 2)
        nxt = step(st, action, TASK, CFG)
        assert np.abs(nxt.joints - st.joints).max() <= CFG.joint_rate / CFG.control_hz + 1e-9
        assert np.abs(nxt.grippers - st.grippers).max() <= CFG.grip_rate / CFG.control_hz + 1e-9
        st = nxt


def test_nan_action_faults_the_episode():
    st = _state(0)
    action = hold_action(st)
    action[2] = np.nan
    nxt = step(st, action, TASK, CFG)
    assert nxt.fault and not success(nxt, TASK)


def _drive_gripper_to(st, arm, target, task=TASK, extra_action=None, ticks=8):
    for _ in range(ticks):
        action = hold_action(st) if extra_action is None else extra_action.copy()
        action[6 + arm] = target
        st = step(st, action, task, CFG)
    return st


def test_closing_at_distance_does_not_attach():
    st = _state(0)
    # home pose is far from the peg
    ee, _ = ee_pose(LEFT, st, CFG)
    assert np.linalg.norm(ee - st.object_poses["peg"][:2]) > TASK.grasp_threshold
    st = _drive_gripper_to(st, LEFT, 0.0)
    assert st.attached[LEFT] is None


def _bring_arm_to_peg(seed=0):
    st = _state(seed)
    q = ik_solve(LEFT, tuple(st.object_poses["peg"][:2]), CFG)
    assert q is not None
    for _ in range(40):
        action = hold_action(st)
        action[0:3] = q
        st = step(st, action, TASK, CFG)
    return st


def test_closing_within_threshold_attaches_and_object_follows():
    st = _bring_arm_to_peg()
    ee, _ = ee_pose(LEFT, st, CFG)
    assert np.linalg.norm(ee - st.object_poses["peg"][:2]) < 1e-5
    st = _drive_gripper_to(st, LEFT, 0.0)
    assert st.attached[LEFT] == "peg"
    # drag the arm; the peg must ride along
    target = ee + np.array([0.05, 0.03])
    q2 = ik_solve(LEFT, tuple(target), CFG)
    for _ in range(30):
        action = hold_action(st)
        action[0:3] = q2
        st = step(st, action, TASK, CFG)
    ee2, _ = ee_pose(LEFT, st, CFG)
    assert np.linalg.norm(ee2 - target) < 1e-4
    assert np.linalg.norm(st.object_poses["peg"][:2] - ee2) < TASK.grasp_threshold + 1e-6
    # opening releases
    st = _drive_gripper_to(st, LEFT, 1.0)
    assert st.attached[LEFT] is None


def test_object_attached_to_at_most_one_gripper():
    st = _bring_arm_to_peg()
    st = _drive_gripper_to(st, LEFT, 0.0)
    assert st.attached[LEFT] == "peg"
    # park the right arm on the same spot and close it too
    ee, _ = ee_pose(LEFT, st, CFG)
    q = ik_solve(RIGHT, tuple(ee), CFG)
    for _ in range(40):
        action = hold_action(st)
        action[3:6] = q
        st = step(st, action, TASK, CFG)
    st = _drive_gripper_to(st, RIGHT, 0.0)
    assert st.attached[RIGHT] != "peg"
    assert [st.attached[LEFT], st.attached[RIGHT]].count("peg") == 1


def test_attachment_conserves_objects():
    st = _bring_arm_to_peg(3)
    names = set(st.object_poses)
    st = _drive_gripper_to(st, LEFT, 0.0)
    for _ in range(20):
        st = step(st, hold_action(st), TASK, CFG)
        assert set(st.object_poses) == names


# -- success predicate ---------------------------------------------------

def _place_peg_at(st, xy):
    poses = {k: v.copy() for k, v in st.object_poses.items()}
    poses["peg"] = np.array([xy[0], xy[1], 0.0])
    from dataclasses import replace
    return replace(st, object_poses=poses)


def test_success_boundary_around_tolerance():
    st = _state(0)
    sock = st.object_poses["socket"][:2]
    eps = 1e-4
    inside = _place_peg_at(st, sock + np.array([TASK.success_tolerance - eps, 0]))
    outside = _place_peg_at(st, sock + np.array([TASK.success_tolerance + eps, 0]))
    exact = _place_peg_at(st, sock)
    assert success(inside, TASK)
    assert not success(outside, TASK)
    assert success(exact, TASK)


def test_success_requires_release():
    from dataclasses import replace
    st = _state(0)
    sock = st.object_poses["socket"][:2]
    st = _place_peg_at(st, sock)
    held = replace(st, attached=("peg", None), grasp_offsets=(np.zeros(3), None))
    assert not success(held, TASK)


def test_success_is_stable_under_noop_steps():
    st = _place_peg_at(_state(0), _state(0).object_poses["socket"][:2])
    assert success(st, TASK)
    for _ in range(25):
        st = step(st, hold_action(st), TASK, CFG)
        assert success(st, TASK)


def test_double_insertion_latch_is_order_aware():
    from dataclasses import replace
    task = make_task("double_insertion")
    st = reset(task, 5, CFG)
    assert not success(st, task)
    # peg visiting the left socket latches it even after the peg leaves
    poses = {k: v.copy() for k, v in st.object_poses.items()}
    poses["peg"] = poses["socket_left"].copy()
    st = replace(st, object_poses=poses)
    st = step(st, hold_action(st), task, CFG)
    assert "socket_left" in st.latched and not success(st, task)
    poses = {k: v.copy() for k, v in st.object_poses.items()}
    poses["peg"] = poses["socket_right"].copy()
    st = replace(st, object_poses=poses)
    st = step(st, hold_action(st), task, CFG)
    assert "socket_right" in st.latched and success(st, task)


# -- kinematics ----------------------------------------------------------

def test_straight_arm_configuration_is_all_zero_joints():
    cfg = WorldConfig(arms=(
        ArmGeometry(base=(0.0, 0.0), base_angle=0.0, links=(0.3, 0.3, 0.1), elbow_sign=-1.0),
        CFG.arms[1],
    ))
    q = ik_solve(0, (0.7, 0.0), cfg)
    np.testing.assert_allclose(q, np.zeros(3), atol=1e-9)


def test_ik_fk_round_trip_over_random_reachable_targets():
    rng = np.random.default_rng(0)
    geo = CFG.arms[LEFT]
    l1, l2, l3 = geo.links
    lo, hi = abs(l1 - l2) + l3 + 1e-6, l1 + l2 + l3 - 1e-6
    checked = 0
    while checked < 10_000:
        r = rng.uniform(lo, hi)
        a = rng.uniform(-math.pi, math.pi)
        target = np.array(geo.base) + r * np.array([math.cos(a), math.sin(a)])
        q = ik_solve(LEFT, tuple(target), CFG)
        assert q is not None
        pts = fk_points(LEFT, q, CFG)
        assert np.linalg.norm(pts[3] - target) < 1e-6
        checked += 1


def test_ik_returns_none_when_out_of_reach():
    geo = CFG.arms[LEFT]
    too_far = np.array(geo.base) + np.array([sum(geo.links) + 0.01, 0.0])
    assert ik_solve(LEFT, tuple(too_far), CFG) is None
    assert ik_solve(LEFT, tuple(np.array(geo.base) + np.array([0.02, 0.0])), CFG) is None


def test_task_zones_are_reachable_by_both_arms():
    # every corner of every graspable/goal zone must be inside both reach annuli
    for task_id in ("single_insertion", "mug_on_plate"):
        task = make_task(task_id)
        for obj in task.objects:
            (x0, x1), (y0, y1), _ = obj.init_range
            for x in (x0, x1):
                for y in (y0, y1):
                    for arm in (LEFT, RIGHT):
                        assert ik_solve(arm, (x, y), CFG) is not None, \
                            f"{task_id}:{obj.name} corner ({x},{y}) unreachable by arm {arm}"


def test_double_insertion_zones_reachable_by_assigned_arms():
    from armlab.sim.expert import HANDOVER_POINT
    task = make_task("double_insertion")
    assign = {"socket_left": LEFT, "socket_right": RIGHT, "peg": None}
    for obj in task.objects:
        (x0, x1), (y0, y1), _ = obj.init_range
        arms = (LEFT, RIGHT) if assign[obj.name] is None else (assign[obj.name],)
        for x in (x0, x1):
            for y in (y0, y1):
                for arm in arms:
                    assert ik_solve(arm, (x, y), CFG) is not None
    for arm in (LEFT, RIGHT):
        assert ik_solve(arm, HANDOVER_POINT, CFG) is not None


# -- proprio / layout ----------------------------------------------------

def test_proprio_matches_action_layout():
    st = _state(0)
    p = proprio_vector(st)
    assert p.shape == (ACTION_DIM,)
    np.testing.assert_allclose(p[:6], st.joints.reshape(-1), rtol=1e-6)
    np.testing.assert_allclose(p[6:], st.grippers, rtol=1e-6)


# -- rendering -----------------------------------------------------------

def test_render_is_deterministic():
    st = _state(11)
    a = render(st, "overhead", TASK, CFG, hw=(48, 48))
    b = render(st, "overhead", TASK, CFG, hw=(48, 48))
    assert a.dtype == np.uint8 and a.shape == (48, 48, 3)
    np.testing.assert_array_equal(a, b)


def test_render_background_color_constant():
    st = _state(0)
    img = render(st, "overhead", TASK, CFG, hw=(64, 64))
    from armlab.sim.render import BACKGROUND
    expect = tuple(int(c * 255 + 0.5) for c in BACKGROUND)
    corners = [img[0, 0], img[0, -1], img[-1, -1]]
    for c in corners:
        assert tuple(c) == expect


def test_moving_object_out_of_wrist_frustum_removes_its_pixels():
    from dataclasses import replace
    st = _bring_arm_to_peg(2)  # peg right at the left wrist
    near = render(st, "wrist_left", TASK, CFG, hw=(48, 48))
    poses = {k: v.copy() for k, v in st.object_poses.items()}
    poses["peg"][0:2] += np.array([0.5, 0.5])  # way outside the window
    far = render(replace(st, object_poses=poses), "wrist_left", TASK, CFG, hw=(48, 48))

    def reddish(img):
        r = img[..., 0].astype(int)
        return ((r > 150) & (img[..., 1] < 100)).sum()

    assert reddish(near) > 4
    assert reddish(far) == 0


def test_moving_peg_moves_pixels_in_overhead():
    from dataclasses import replace
    st = _state(4)
    img1 = render(st, "overhead", TASK, CFG, hw=(64, 64))
    poses = {k: v.copy() for k, v in st.object_poses.items()}
    poses["peg"][0] += 0.05
    img2 = render(replace(st, object_poses=poses), "overhead", TASK, CFG, hw=(64, 64))
    assert (img1 != img2).any()


def test_subpixel_motion_changes_the_image():
    # antialiasing must expose sub-pixel object shifts to the policy
    from dataclasses import replace
    st = _state(4)
    img1 = render(st, "overhead", TASK, CFG, hw=(48, 48))
    poses = {k: v.copy() for k, v in st.object_poses.items()}
    poses["peg"][0] += 0.004  # roughly a quarter pixel
    img2 = render(replace(st, object_poses=poses), "overhead", TASK, CFG, hw=(48, 48))
    assert (img1 != img2).any()


def test_observe_packs_views_and_proprio():
    st = _state(0)
    obs = observe(st, TASK, CFG, views=("overhead", "wrist_left"), hw=(32, 32))
    assert set(obs.images) == {"overhead", "wrist_left"}
    assert obs.images["overhead"].shape == (32, 32, 3)
    np.testing.assert_allclose(obs.proprio, proprio_vector(st))
