import numpy as np
import pytest
import scipy.sparse

from promsb.core import validate_generator
from promsb.errors import CapacityOverflow
from promsb.mrna import MrnaModel, mrna_factorial_moment
from promsb.protein import (
    ProteinModel,
    boundary_mass,
    build_bounded_generator,
    choose_capacity,
    joint_moment,
    sample_protein_batch,
    sample_protein_stationary,
)

BASE = MrnaModel(
    validate_generator(np.array([[-10.0, 10.0], [0.34, -0.34]])),
    np.array([5.0, 0.0]),
)


def small_model(c=12):
    return ProteinModel(BASE, alpha=1.0, gamma=1.0, c=c)


def test_bounded_generator_is_generator():
    bg = small_model().bounded
    dense = bg.matrix.toarray()
    assert np.allclose(dense.sum(axis=1), 0.0, atol=1e-12)
    off = dense - np.diag(np.diag(dense))
    assert np.all(off >= 0)


def test_bounded_stationary_matches_dense_solve():
    model = small_model()
    mu = model.stationary
    dense = model.bounded.matrix.toarray()
    A = np.vstack([dense.T, np.ones(dense.shape[0])])
    b = np.zeros(dense.shape[0] + 1)
    b[-1] = 1.0
    mu_dense, *_ = np.linalg.lstsq(A, b, rcond=None)
    assert np.allclose(mu, mu_dense, atol=1e-10)
    assert np.isclose(mu.sum(), 1.0)
    assert np.all(mu > 0)


def test_bounded_mrna_marginal_approaches_unbounded():
    # with negligible boundary mass the capped mRNA mean matches the
    # resolvent formula of the uncapped model
    model = small_model(c=25)
    assert joint_moment(model, 1, 0) == pytest.approx(
        mrna_factorial_moment(BASE, 1), abs=1e-8
    )


def test_protein_balance_identity():
    # stationarity of E[P]: alpha E[M] = gamma E[P]
    model = ProteinModel(BASE, alpha=2.0, gamma=0.5, c=15)
    assert joint_moment(model, 0, 1) == pytest.approx(
        (model.alpha / model.gamma) * joint_moment(model, 1, 0), rel=1e-9
    )


def _full_joint_stationary(model, p_max):
    """Brute-force oracle: stationary law of (i, m, p) with protein
    truncated at p_max (production blocked there)."""
    n, c = model.base.G.n, model.c
    G = model.base.G.entries
    beta, delta = model.base.beta, model.base.delta
    alpha, gamma = model.alpha, model.gamma
    N = n * (c + 1) * (p_max + 1)

    def idx(i, m, p):
        return (i * (c + 1) + m) * (p_max + 1) + p

    A = scipy.sparse.lil_matrix((N, N))
    for i in range(n):
        for m in range(c + 1):
            for p in range(p_max + 1):
                s = idx(i, m, p)
                for j in range(n):
                    if j != i:
                        A[s, idx(j, m, p)] = G[i, j]
                if m < c:
                    A[s, idx(i, m + 1, p)] = beta[i]
                if m > 0:
                    A[s, idx(i, m - 1, p)] = delta * m
                if p < p_max:
                    A[s, idx(i, m, p + 1)] = alpha * m
                if p > 0:
                    A[s, idx(i, m, p - 1)] = gamma * p
                A[s, s] = -(A[s].sum() - A[s, s])
    B = A.T.tolil()
    B[0, :] = 1.0
    rhs = np.zeros(N)
    rhs[0] = 1.0
    mu = scipy.sparse.linalg.spsolve(B.tocsc(), rhs)
    return mu, idx


def test_joint_moment_against_brute_force():
    model = small_model(c=8)
    p_max = 35
    mu, idx = _full_joint_stationary(model, p_max)
    n, c = 2, model.c
    em, ep, emp = 0.0, 0.0, 0.0
    for i in range(n):
        for m in range(c + 1):
            for p in range(p_max + 1):
                w = mu[idx(i, m, p)]
                em += w * m
                ep += w * p
                emp += w * m * p
    assert joint_moment(model, 1, 0) == pytest.approx(em, rel=1e-8)
    assert joint_moment(model, 0, 1) == pytest.approx(ep, rel=1e-7)
    assert joint_moment(model, 1, 1) == pytest.approx(emp, rel=1e-7)


def test_joint_moment_trivial_orders():
    model = small_model()
    assert joint_moment(model, 0, 0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        joint_moment(model, -1, 0)


def test_sampler_moments(policy):
    rng = np.random.default_rng(2)
    model = small_model()
    e, m, p = sample_protein_batch(model, 60_000, policy, rng)
    for values, expected in ((m, joint_moment(model, 1, 0)), (p, joint_moment(model, 0, 1))):
        se = values.std() / np.sqrt(values.size)
        assert abs(values.mean() - expected) < 4 * se
    mp = m.astype(float) * p
    se = mp.std() / np.sqrt(mp.size)
    assert abs(mp.mean() - joint_moment(model, 1, 1)) < 4 * se


def test_single_draw(policy, rng):
    model = small_model()
    e, m, p = sample_protein_stationary(model, policy, rng)
    assert e in (0, 1) and 0 <= m <= model.c and p >= 0


def test_boundary_mass_decreasing_and_choose_capacity():
    masses = [boundary_mass(BASE, c) for c in (2, 6, 12)]
    assert masses[0] > masses[1] > masses[2]
    c = choose_capacity(BASE, 1e-8)
    assert boundary_mass(BASE, c) < 1e-8
    assert c == 1 or boundary_mass(BASE, c - 1) >= 1e-8


def test_capacity_overflow():
    with pytest.raises(CapacityOverflow):
        ProteinModel(BASE, 1.0, 1.0, c=200_000).bounded


def test_state_indexing_roundtrip():
    model = small_model()
    for s in range(model.n_states):
        i, m = model.state_tuple(s)
        assert model.state_index(i, m) == s
