import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from tests.conftest import random_rotation
from twinnav.exceptions import DegenerateConfiguration, InsufficientPoints, TwinNavError
from twinnav.geometry import EulerAngles, RigidTransform, compose, project_points, transform_point
from twinnav.pnp import (
    Correspondence,
    PnPSolution,
    PoseParameters,
    head_pose_angles,
    head_position_px,
    solve_pnp,
)
from twinnav.simulate.views import head_pose

NOISE_TRIALS = 20
RESTARTS = 8


def _landmarks(rng, n=8):
    return rng.uniform(-80.0, 80.0, (n, 3))


def _observe(K, T, world, sigma=0.0, rng=None):
    px = project_points(K, T, world)
    if sigma:
        px = px + rng.normal(0.0, sigma, px.shape)
    return [Correspondence(p, uv) for p, uv in zip(world, px)]


def _rotation_error(A, B):
    return Rotation.from_matrix(A @ B.T).magnitude()


def test_exact_recovery(camera):
    rng = np.random.default_rng(0)
    world = _landmarks(rng)
    truth = RigidTransform(random_rotation(rng, 0.5), [15.0, -10.0, 650.0])
    solution = solve_pnp(camera, _observe(camera, truth, world))
    assert solution.converged
    assert _rotation_error(solution.pose.rotation, truth.rotation) < 1e-6
    assert np.max(np.abs(solution.pose.translation - truth.translation)) < 1e-6
    assert solution.rms_reprojection_px < 1e-6


@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_zero_noise_recovery_random_poses(camera, seed):
    """
    Strategies
    ----------
    seed : int
        Drives eight landmarks in a 160 mm box and a pose turned up to 45
        degrees, 500-800 mm in front of the camera.
    """
    rng = np.random.default_rng(seed)
    world = _landmarks(rng)
    t = [rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(500, 800)]
    truth = RigidTransform(random_rotation(rng, np.radians(45)), t)
    solution = solve_pnp(camera, _observe(camera, truth, world))
    assert _rotation_error(solution.pose.rotation, truth.rotation) < 1e-6
    assert np.max(np.abs(solution.pose.translation - truth.translation)) < 1e-6


@pytest.mark.parametrize("sigma", [0.0, 0.5])
def test_world_frame_invariance(camera, sigma):
    rng = np.random.default_rng(6)
    world = _landmarks(rng)
    truth = RigidTransform(random_rotation(rng, 0.3), [10.0, -5.0, 650.0])
    corr = _observe(camera, truth, world, sigma, rng)
    G = RigidTransform(random_rotation(rng, 0.2), rng.normal(0.0, 20.0, 3))
    moved = [Correspondence(transform_point(G, c.world_point), c.observation) for c in corr]

    a = solve_pnp(camera, corr)
    b = solve_pnp(camera, moved)
    assert a.converged and b.converged
    back = compose(b.pose, G)
    assert _rotation_error(back.rotation, a.pose.rotation) < 1e-6
    assert np.max(np.abs(back.translation - a.pose.translation)) < 1e-3
    assert b.rms_reprojection_px == pytest.approx(a.rms_reprojection_px, rel=1e-6, abs=1e-9)


def test_cost_history_decreases(camera):
    rng = np.random.default_rng(1)
    world = _landmarks(rng)
    truth = RigidTransform(random_rotation(rng, 0.3), [0.0, 0.0, 700.0])
    corr = _observe(camera, truth, world, 0.5, rng)
    solution = solve_pnp(camera, corr)
    history = solution.cost_history
    assert all(b < a for a, b in zip(history, history[1:]))
    assert solution.rms_reprojection_px == pytest.approx(np.sqrt(history[-1] / len(world)))


def test_noisy_solution_is_global(camera):
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(NOISE_TRIALS):
        world = _landmarks(rng)
        truth = RigidTransform(random_rotation(rng, 0.5), [0.0, 0.0, 600.0])
        corr = _observe(camera, truth, world, 0.5, rng)
        cost = solve_pnp(camera, corr).cost_history[-1]

        best = np.inf
        for _ in range(RESTARTS):
            t0 = [rng.normal(0, 30), rng.normal(0, 30), rng.uniform(400, 900)]
            init = PoseParameters(rng.normal(0.0, 0.5, 3), t0)
            try:
                best = min(best, solve_pnp(camera, corr, init).cost_history[-1])
            except TwinNavError:
                continue
        hits += cost <= best + 1e-9 * max(1.0, best)
    assert hits >= 0.95 * NOISE_TRIALS


def test_three_points_insufficient(camera):
    world = _landmarks(np.random.default_rng(3), 3)
    corr = [Correspondence(p, (0.0, 0.0)) for p in world]
    with pytest.raises(InsufficientPoints):
        solve_pnp(camera, corr)


def test_collinear_points(camera):
    corr = [Correspondence((float(i), 2.0 * i, 3.0 * i), (0.0, 0.0)) for i in range(6)]
    with pytest.raises(DegenerateConfiguration):
        solve_pnp(camera, corr)


def test_zero_iterations_returns_init(camera):
    world = _landmarks(np.random.default_rng(4))
    truth = RigidTransform(random_rotation(np.random.default_rng(5), 0.3), [0, 0, 600.0])
    solution = solve_pnp(camera, _observe(camera, truth, world), max_iterations=0)
    assert solution.iterations == 0
    assert not solution.converged
    assert np.array_equal(solution.pose.rotation, np.eye(3))


def test_identity_pose_angles():
    solution = PnPSolution(RigidTransform.identity(), 0.0, 0, True)
    assert head_pose_angles(solution).as_tuple() == (0.0, 0.0, 0.0)


@pytest.mark.parametrize(
    "angles", [EulerAngles(25.0, 0.0, 0.0), EulerAngles(0.0, 0.0, -15.0)], ids=["yaw", "roll"]
)
def test_simulated_head_angles(camera, head_scene, angles):
    pose = head_pose(angles, (0.0, 0.0, 600.0))
    world = head_scene.landmarks.array
    solution = solve_pnp(camera, _observe(camera, pose, world))
    recovered = head_pose_angles(solution)
    assert np.allclose(recovered.as_tuple(), angles.as_tuple(), rtol=0, atol=1e-6)


def test_head_position_on_axis(camera):
    solution = PnPSolution(RigidTransform(np.eye(3), [0.0, 0.0, 600.0]), 0.0, 0, True)
    px = head_position_px(camera, solution)
    assert (px.u, px.v) == (camera.cx, camera.cy)
