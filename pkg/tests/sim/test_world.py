# Standard library imports
import math
from dataclasses import replace

# Third-party imports
import numpy as np
import pytest

# Local application imports
from src.database.records import Domain, Suite
from src.sim.domains import get_domain
from src.sim.render import project, render, unproject
from src.sim.tasks import get_task
from src.sim.world import (
    EvalScenario,
    GRID_SIZE,
    HOME_POSITION,
    proprio,
    reset,
    step,
    success,
    wrap_angle,
)


def test_reset_is_deterministic_per_seed(source_domain):
    task = get_task('stack_milk')
    assert reset(task, source_domain, seed=3) == reset(task, source_domain, seed=3)
    assert reset(task, source_domain, seed=3) != reset(task, source_domain, seed=4)


def test_zero_action_leaves_gripper_in_place(target_domain):
    """A zero action only advances the clock"""
    state = reset(get_task('stack_can'), target_domain, seed=0)
    after = step(state, [0.0, 0.0, 0.0, 0.0], target_domain)

    np.testing.assert_allclose(after.gripper_pos, state.gripper_pos)
    assert after.gripper_aperture == state.gripper_aperture
    assert after.t == state.t + 1


def test_lag_scales_commanded_displacement(target_domain):
    """With lag 0.5 and unit scale a 0.1 command moves the gripper 0.05"""
    domain = replace(target_domain, lag=0.5, action_scale=1.0)
    state = reset(get_task('stack_can'), domain, seed=0)
    after = step(state, [0.1, 0.0, 0.0, 0.0], domain)

    np.testing.assert_allclose(after.gripper_pos - state.gripper_pos, [0.05, 0.0, 0.0], atol=1e-12)


def test_out_of_range_actions_are_clipped(target_domain):
    state = reset(get_task('stack_can'), target_domain, seed=0)
    after = step(state, [5.0, np.nan, -np.inf, 3.0], target_domain)

    assert np.all(np.isfinite(after.gripper_pos))
    # Positive gripper commands clip to fully open
    assert after.gripper_aperture == 1.0


def test_gripper_starts_at_home(source_domain):
    state = reset(get_task('wrap_ccw'), source_domain, seed=0)
    np.testing.assert_allclose(state.gripper_pos, HOME_POSITION)
    assert proprio(state, source_domain).shape == (4,)


def test_extended_proprio_dimension(source_domain):
    domain = replace(source_domain, proprio_dim=22)
    state = reset(get_task('stack_milk'), domain, seed=0)
    assert proprio(state, domain).shape == (22,)


def test_wrap_angle_of_semicircle_and_full_circle():
    semicircle = [(math.cos(a), math.sin(a), 0.0) for a in np.linspace(0.0, math.pi, 9)]
    circle = [(math.cos(a), math.sin(a), 0.0) for a in np.linspace(0.0, 2.0 * math.pi, 17)]

    assert wrap_angle(np.array(semicircle), (0.0, 0.0)) == pytest.approx(math.pi)
    assert wrap_angle(np.array(circle), (0.0, 0.0)) == pytest.approx(2.0 * math.pi)
    # Clockwise traversal is negative
    assert wrap_angle(np.array(semicircle[::-1]), (0.0, 0.0)) == pytest.approx(-math.pi)


def test_wrap_angle_needs_two_points():
    with pytest.raises(ValueError):
        wrap_angle(np.zeros((1, 3)), (0.0, 0.0))


def test_two_step_partial_credit(target_domain):
    """Item in the vessel scores one subtask; vessel on the plate completes the task"""
    state = reset(get_task('two_step_carrot'), target_domain, seed=0)
    item, vessel = state.objects
    in_vessel = replace(state, objects=(replace(item, resting_on=vessel.name), vessel))
    on_plate = replace(in_vessel, objects=(in_vessel.objects[0], replace(vessel, pos=state.containers[0].pos.copy())))

    assert success([state], Suite.TWO_STEP) == (False, 0)
    assert success([state, in_vessel], Suite.TWO_STEP) == (False, 1)
    assert success([state, in_vessel, on_plate], Suite.TWO_STEP) == (True, 2)


def test_empty_history_is_not_success():
    assert success([], Suite.STACK) == (False, 0)


def test_grid_scenario_must_match_domain(source_domain):
    scenario = EvalScenario(suite=Suite.STACK, domain=Domain.TARGET, init_index=0, seed=0)
    with pytest.raises(ValueError):
        reset(get_task('stack_can'), source_domain, scenario=scenario)


def test_grid_scenarios_are_distinct(target_domain):
    task = get_task('stack_can')
    starts = [reset(task, target_domain, EvalScenario(Suite.STACK, Domain.TARGET, i, 0)).objects[0].pos
              for i in range(GRID_SIZE)]
    assert len({tuple(np.round(p, 6)) for p in starts}) == GRID_SIZE


def test_render_shape_and_determinism(source_domain):
    state = reset(get_task('stack_milk'), source_domain, seed=0)
    image = render(state, source_domain)

    assert image.shape == (32, 32, 3)
    assert image.dtype == np.uint8
    np.testing.assert_array_equal(image, render(state, source_domain))


def test_domains_render_visibly_differently(source_domain, target_domain):
    """The same state differs in at least 1% of pixels across the two domains"""
    state = reset(get_task('stack_can'), source_domain, seed=0)
    source_image = render(state, source_domain)
    target_image = render(state, target_domain)

    changed = np.any(source_image != target_image, axis=-1).mean()
    assert changed >= 0.01


@pytest.mark.parametrize("domain_name", [Domain.SOURCE, Domain.TARGET])
def test_look_at_point_projects_to_centre(domain_name):
    view = get_domain(domain_name, 64).view
    centre, _ = project(np.array(view.target), view, 64)
    np.testing.assert_allclose(centre[0], [32.0, 32.0], atol=1e-9)


def test_unproject_inverts_project_on_table_plane():
    view = get_domain(Domain.TARGET, 64).view
    point = np.array([0.1, -0.05, 0.0])
    centre, _ = project(point, view, 64)
    col, row = centre[0]
    np.testing.assert_allclose(unproject(col, row, 0.0, view, 64), point, atol=1e-9)
