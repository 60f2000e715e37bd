import numpy as np
import pytest

from promsb.core import validate_generator
from promsb.mrna import MrnaModel, mrna_factorial_moment
from promsb.protein import ProteinModel, joint_moment
from promsb.ssa import default_burn, default_gap, simulate, stationary_samples

MODEL = MrnaModel(
    validate_generator(np.array([[-10.0, 10.0], [0.34, -0.34]])),
    np.array([5.0, 0.0]),
)


def test_trajectory_structure(rng):
    traj = simulate(MODEL, 50.0, rng)
    assert traj.times[0] == 0.0
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[-1] <= 50.0
    assert np.all(traj.states[:, 1] >= 0)
    # every event changes exactly one coordinate, m by +-1
    de = np.diff(traj.states[:, 0]) != 0
    dm = np.abs(np.diff(traj.states[:, 1]))
    assert np.all(de ^ (dm == 1))
    assert np.all(dm[~de] == 1) and np.all(dm[de] == 0)


def test_trajectory_deterministic_under_seed():
    a = simulate(MODEL, 20.0, np.random.default_rng(8))
    b = simulate(MODEL, 20.0, np.random.default_rng(8))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)


def test_stationary_samples_match_moments():
    rng = np.random.default_rng(21)
    s = stationary_samples(MODEL, default_burn(MODEL), default_gap(MODEL), 20_000, rng)
    m = s[:, 1].astype(float)
    se = m.std() / np.sqrt(m.size)
    assert abs(m.mean() - mrna_factorial_moment(MODEL, 1)) < 4 * se
    frac = (s[:, 0] == 0).mean()
    mu0 = MODEL.mu[0]
    assert abs(frac - mu0) < 4 * np.sqrt(mu0 * (1 - mu0) / s.shape[0])


def test_protein_trajectory_respects_cap(rng):
    model = ProteinModel(MODEL, 1.0, 1.0, c=3)
    traj = simulate(model, 200.0, rng)
    assert traj.states.shape[1] == 3
    assert np.all(traj.states[:, 1] <= 3)
    assert np.all(traj.states[:, 2] >= 0)


def test_protein_stationary_samples_match_moments():
    rng = np.random.default_rng(9)
    model = ProteinModel(MODEL, 1.0, 1.0, c=12)
    s = stationary_samples(model, 20.0, 10.0, 20_000, rng)
    for col, expected in ((1, joint_moment(model, 1, 0)), (2, joint_moment(model, 0, 1))):
        v = s[:, col].astype(float)
        se = v.std() / np.sqrt(v.size)
        assert abs(v.mean() - expected) < 4 * se


def test_zero_count_and_bad_args(rng):
    assert stationary_samples(MODEL, 1.0, 1.0, 0, rng).shape == (0, 2)
    with pytest.raises(ValueError):
        simulate(MODEL, 0.0, rng)
    with pytest.raises(ValueError):
        stationary_samples(MODEL, -1.0, 1.0, 5, rng)


def test_default_horizons():
    assert default_burn(MODEL) == pytest.approx(20.0)  # min(delta=1, theta=10)
    assert default_gap(MODEL) == pytest.approx(10.0)
