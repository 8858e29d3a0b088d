# Standard library imports
from dataclasses import replace

# Third-party imports
import numpy as np
import pytest

# Local application imports
from src.scripted.policies import CLOSE, DIST_THRESH, OPEN, PickPlaceStage, pick_place_step, to_action
from src.sim.tasks import get_task
from src.sim.world import LIFT_HEIGHT, reset


@pytest.fixture
def state(target_domain):
    return reset(get_task('stack_can'), target_domain, seed=0)


def holding(state, height):
    obj = state.objects[0]
    pos = np.array([state.gripper_pos[0], state.gripper_pos[1], height])
    return replace(state, objects=(replace(obj, grasped=True, pos=pos),) + tuple(state.objects[1:]))


def test_place_attempted_is_terminal(state, target_domain):
    action, stage, placed = pick_place_step(state, state.objects[0].pos, state.gripper_pos, DIST_THRESH, True,
                                            target_domain)
    np.testing.assert_array_equal(action, [0.0, 0.0, 0.0, OPEN])
    assert stage == PickPlaceStage.DONE
    assert placed


def test_far_from_object_moves_with_open_gripper(state, target_domain):
    pick = state.gripper_pos + np.array([0.2, 0.0, -0.1])
    action, stage, placed = pick_place_step(state, pick, pick, DIST_THRESH, False, target_domain)

    assert stage in (PickPlaceStage.REACH, PickPlaceStage.DESCEND)
    assert action[3] == OPEN
    assert np.all(np.abs(action[:3]) <= 1.0)
    assert action[0] > 0 and action[2] < 0
    assert not placed


def test_at_object_closes_gripper(state, target_domain):
    action, stage, _ = pick_place_step(state, state.gripper_pos, state.gripper_pos, DIST_THRESH, False,
                                       target_domain)
    assert stage == PickPlaceStage.CLOSE
    assert action[3] == CLOSE


def test_held_object_is_lifted_before_carrying(state, target_domain):
    low = holding(state, LIFT_HEIGHT / 2)
    action, stage, _ = pick_place_step(low, low.gripper_pos, low.gripper_pos, DIST_THRESH, False, target_domain)
    np.testing.assert_array_equal(action, [0.0, 0.0, 1.0, CLOSE])
    assert stage == PickPlaceStage.LIFT


def test_carry_then_release(state, target_domain):
    high = holding(state, LIFT_HEIGHT + 0.05)
    drop = high.gripper_pos + np.array([0.0, 0.1, 0.0])

    _, stage, placed = pick_place_step(high, high.gripper_pos, drop, DIST_THRESH, False, target_domain)
    assert stage == PickPlaceStage.CARRY and not placed

    action, stage, placed = pick_place_step(high, high.gripper_pos, high.gripper_pos, DIST_THRESH, False,
                                            target_domain)
    assert stage == PickPlaceStage.RELEASE and placed
    assert action[3] == OPEN


def test_noise_only_touches_motion(state, target_domain):
    pick = state.gripper_pos + np.array([0.2, 0.0, 0.0])
    clean, _, _ = pick_place_step(state, pick, pick, DIST_THRESH, False, target_domain)
    noisy, _, _ = pick_place_step(state, pick, pick, DIST_THRESH, False, target_domain,
                                  rng=np.random.default_rng(0))

    assert noisy[3] == clean[3]
    assert not np.allclose(noisy[:3], clean[:3])


def test_to_action_shrinks_uniformly(target_domain):
    action = to_action([1.0, 0.5, 0.0], target_domain)
    assert action[0] == pytest.approx(1.0)
    assert action[1] == pytest.approx(0.5)
