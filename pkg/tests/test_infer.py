import numpy as np
import pytest
from scipy import stats

from promsb import presets
from promsb.core import validate_generator
from promsb.errors import MaskViolation, NonFiniteStart
from promsb.infer import (
    ConstraintMask,
    EtaVector,
    GibbsConfig,
    eta_from_params,
    gibbs_fit,
    log_likelihood_mc,
    log_prior,
    moment_init,
    param_vector,
    params_from_eta,
    rmse,
)
from promsb.mrna import MrnaModel
from promsb.msbm import TruncationPolicy


def test_full_mask_counts():
    mask = ConstraintMask.full(3)
    assert mask.q == 9
    assert len(mask.free_beta) == 3 and len(mask.free_g) == 6


def test_preset_mask_dimensions():
    assert presets.two_state_mask().q == 4
    assert presets.three_state_structural_mask().q == 7
    assert presets.refractory_three_state_mask().q == 5
    assert ConstraintMask.full(3).q == 9


def test_mask_rejects_reducible_zero_pattern():
    with pytest.raises(MaskViolation):
        ConstraintMask(
            2, ("free", "free"), (("", "zero"), ("free", ""))
        )


def test_mask_rejects_all_zero_beta():
    with pytest.raises(MaskViolation):
        ConstraintMask(2, ("zero", "zero"), (("", "free"), ("free", "")))


def test_mask_json_roundtrip():
    mask = presets.refractory_three_state_mask()
    assert ConstraintMask.from_json(mask.to_json()) == mask


def test_eta_two_state_frozen():
    mask = presets.two_state_mask()
    eta = eta_from_params(presets.two_state(), mask)
    # log(1000-1), log(1), log(10), log(0.34)
    assert np.allclose(eta.values, np.log([999.0, 1.0, 10.0, 0.34]))
    assert mask.labels() == ["beta_1", "beta_2", "G_1,2", "G_2,1"]


def _support_mask(model):
    n = model.G.n
    beta = tuple("free" if b > 0 else "zero" for b in model.beta)
    g = tuple(
        tuple(
            "" if i == j else ("free" if model.G.entries[i, j] > 0 else "zero")
            for j in range(n)
        )
        for i in range(n)
    )
    return ConstraintMask(n, beta, g)


def test_eta_roundtrip_all_presets(preset_model):
    mask = _support_mask(preset_model)
    back = params_from_eta(eta_from_params(preset_model, mask))
    assert np.allclose(back.beta, preset_model.beta)
    assert np.allclose(back.G.entries, preset_model.G.entries)


def test_eta_roundtrip_constrained():
    mask = presets.refractory_three_state_mask()
    model = MrnaModel(
        validate_generator(
            np.array([[-1.0, 1.0, 0.0], [2.0, -5.0, 3.0], [0.0, 4.0, -4.0]])
        ),
        np.array([7.0, 0.0, 0.0]),
    )
    eta = eta_from_params(model, mask)
    assert eta.values.shape == (5,)
    back = params_from_eta(eta)
    assert np.allclose(back.beta, model.beta)
    assert np.allclose(back.G.entries, model.G.entries)


def test_eta_rejects_mask_violations():
    mask = presets.refractory_three_state_mask()
    bad = MrnaModel(
        validate_generator(
            np.array([[-1.0, 1.0, 0.0], [2.0, -5.0, 3.0], [0.0, 4.0, -4.0]])
        ),
        np.array([7.0, 1.0, 0.0]),
    )
    with pytest.raises(MaskViolation):
        eta_from_params(bad, mask)


def test_eta_requires_ordered_beta():
    mask = ConstraintMask.full(2)
    model = MrnaModel(
        validate_generator(np.array([[-1.0, 1.0], [1.0, -1.0]])),
        np.array([1.0, 5.0]),
    )
    with pytest.raises(MaskViolation):
        eta_from_params(model, mask)


def test_params_from_eta_preserves_ordering():
    mask = ConstraintMask.full(2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        model = params_from_eta(EtaVector(rng.normal(size=4), mask))
        assert model.beta[0] > model.beta[1] > 0


def test_tie_constraints_apply():
    mask = ConstraintMask(
        2, ("free", "tie:0"), (("", "free"), ("tie:0,1", ""))
    )
    assert mask.q == 2
    model = params_from_eta(EtaVector(np.array([0.3, -0.2]), mask))
    assert model.beta[0] == model.beta[1]
    assert model.G.entries[1, 0] == model.G.entries[0, 1]
    back = eta_from_params(model, mask)
    assert np.allclose(back.values, [0.3, -0.2])


def test_log_prior_matches_scipy():
    eta = np.array([-3.0, 0.0, 2.5])
    # exp(eta) ~ Gamma(shape 0.01, rate 0.01); change of variables adds eta
    expected = sum(
        stats.gamma.logpdf(np.exp(v), a=0.01, scale=100.0) + v for v in eta
    )
    assert log_prior(eta) == pytest.approx(expected, rel=1e-12)


def test_log_likelihood_exact_in_degenerate_mixture(policy):
    # constant beta makes lambda deterministic, so the MC likelihood is exact
    G = validate_generator(np.array([[-1.0, 1.0], [1.0, -1.0]]))
    model = MrnaModel(G, np.array([4.0, 4.0]))
    rng = np.random.default_rng(1)
    data = np.array([0, 3, 5, 4, 4, 2])
    res = log_likelihood_mc(data, model, 50, policy, rng)
    assert not res.degenerate
    assert res.value == pytest.approx(stats.poisson.logpmf(data, 4.0).sum(), rel=1e-12)


def test_log_likelihood_flags_degenerate(policy):
    # a single intensity draw from a path that never enters the
    # transcribing state is zero: likelihood of a positive count vanishes
    G = validate_generator(np.array([[-10.0, 10.0], [0.1, -0.1]]))
    model = MrnaModel(G, np.array([5.0, 0.0]))
    rng = np.random.default_rng(12)
    res = log_likelihood_mc(np.array([5]), model, 1, policy, rng)
    assert res.degenerate and res.value == -np.inf


def test_gibbs_trace_shapes_and_determinism():
    mask = ConstraintMask.full(2)
    data = np.array([3, 0, 41, 2, 0, 55, 1])
    cfg = GibbsConfig(iterations=30, burn_in=10, B=100, seed=42)
    a = gibbs_fit(data, mask, cfg)
    b = gibbs_fit(data, mask, cfg)
    assert a.draws.shape == (30, 4) and a.accepted.shape == (30, 4)
    assert np.array_equal(a.draws, b.draws)
    assert np.array_equal(a.accepted, b.accepted)
    assert a.post_burn_in.shape == (20, 4)
    assert np.all(a.acceptance_rates <= 1.0)


def test_gibbs_share_lambda_runs():
    mask = ConstraintMask.full(2)
    data = np.array([3, 0, 41, 2])
    cfg = GibbsConfig(iterations=10, burn_in=5, B=100, seed=3, share_lambda=True)
    trace = gibbs_fit(data, mask, cfg)
    assert trace.draws.shape == (10, 4)


def test_gibbs_prior_only_targets_gamma():
    # constant likelihood: coordinates sample the log-gamma prior
    mask = ConstraintMask(
        2, ("free", "zero"), (("", "free"), ("tie:0,1", ""))
    )
    cfg = GibbsConfig(iterations=6000, burn_in=1000, seed=7, init_eta=(0.0, 0.0))
    trace = gibbs_fit(np.array([1]), mask, cfg, loglik_fn=lambda eta: 0.0)
    draws = np.exp(trace.post_burn_in[::5, 0])
    res = stats.kstest(draws, stats.gamma(a=0.01, scale=100.0).cdf)
    assert res.pvalue > 1e-4


def test_gibbs_rejects_nonfinite_start():
    mask = ConstraintMask.full(2)
    cfg = GibbsConfig(iterations=5, burn_in=1, seed=0, init_eta=(0.0, 0.0, 0.0, 0.0))
    with pytest.raises(NonFiniteStart):
        gibbs_fit(np.array([2]), mask, cfg, loglik_fn=lambda eta: -np.inf)


def test_moment_init_matches_mean():
    mask = ConstraintMask.full(3)
    data = np.array([10, 20, 30])
    eta = moment_init(data, mask)
    model = params_from_eta(EtaVector(eta, mask))
    assert float(np.mean(model.beta)) == pytest.approx(20.0, rel=1e-10)


def test_posterior_mean_params_scale():
    mask = ConstraintMask.full(2)
    model = presets.two_state()
    truth = param_vector(model, mask)
    assert np.allclose(truth, [1000.0, 1.0, 10.0, 0.34])


def test_rmse():
    est = np.array([[1.0, 2.0], [3.0, 2.0]])
    assert np.allclose(rmse(est, np.array([2.0, 2.0])), [1.0, 0.0])
    with pytest.raises(ValueError):
        rmse(np.empty((0, 2)), np.array([1.0, 2.0]))
