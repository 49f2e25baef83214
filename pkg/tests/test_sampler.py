import math

import numpy as np
import pytest
from scipy.special import expit

from mutcause.conjugate import beta_binomial_posterior
from mutcause.data import TransformedDataset
from mutcause.diagnostics import mcse_mean
from mutcause.errors import DivergenceExplosion, NonFiniteGradient
from mutcause.model import OUTCOME, Family, Logistic, ModelSpec, Normal, make_model
from mutcause.sampler import ChainConfig, DualAveraging, Metric, leapfrog, run_chain, sample, warmup_schedule
from mutcause.samples import PosteriorSamples, ess, r_hat, run_chains

from .conftest import small_dataset

SHORT = dict(warmup=300, samples=300, chains=2)


def normal2():
    return ModelSpec("normal2", (Family("x", OUTCOME, "intercept", Normal(0.0, 1.0)),), ("a", "b"))


def intercept_model(prior):
    return ModelSpec("intercept", (Family("alpha", OUTCOME, "intercept", prior),), ("p",))


def bernoulli_data(killed, total):
    y = np.r_[np.ones(killed), np.zeros(total - killed)]
    zeros = np.zeros(total)
    return TransformedDataset(("p",), np.zeros(total, int), zeros, zeros, y)


class Quadratic:
    def __init__(self, scales):
        self.prec = 1.0 / np.asarray(scales, dtype=float) ** 2
        self.dim = self.prec.size

    def logp(self, q):
        return -0.5 * float(q @ (self.prec * q))

    def grad(self, q):
        return -self.prec * q


# --- config ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [dict(samples=0), dict(chains=0), dict(target_accept=0.5), dict(target_accept=0.995), dict(metric="full"), dict(steps=0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ChainConfig(**kwargs)


def test_defaults_give_4000_draws():
    cfg = ChainConfig()
    assert cfg.chains * cfg.samples == 4000 and cfg.warmup == 1000


def test_warmup_schedule():
    assert warmup_schedule(1000) == [99, 149, 249, 449, 949]
    assert warmup_schedule(100) == [89]
    assert warmup_schedule(10) == []


# --- integrator and adaptation -------------------------------------------------------


def test_leapfrog_energy_error_is_second_order():
    target = Quadratic([1.0, 0.5, 2.0])
    metric = Metric(np.ones(3))
    q0, p0 = np.array([1.0, -0.5, 0.3]), np.array([0.2, 1.0, -0.7])
    h0 = -target.logp(q0) + metric.kinetic(p0)
    errors = []
    for eps in (0.1, 0.05, 0.025):
        q, p, _, ok = leapfrog(target, q0, p0, target.grad(q0), eps, round(1.0 / eps), metric)
        assert ok
        errors.append(abs(-target.logp(q) + metric.kinetic(p) - h0))
    for big, small in zip(errors, errors[1:]):
        assert 3.0 < big / small < 5.0


def test_leapfrog_is_reversible():
    target = Quadratic([1.0, 0.3])
    metric = Metric(np.array([[1.0, 0.2], [0.2, 0.5]]))
    q0, p0 = np.array([0.4, -1.0]), np.array([0.3, 0.8])
    q1, p1, g1, _ = leapfrog(target, q0, p0, target.grad(q0), 0.1, 17, metric)
    q2, p2, _, _ = leapfrog(target, q1, -p1, g1, 0.1, 17, metric)
    np.testing.assert_allclose(q2, q0, atol=1e-12)
    np.testing.assert_allclose(-p2, p0, atol=1e-12)


def test_dense_momentum_has_metric_covariance():
    inv = np.array([[2.0, 0.6], [0.6, 0.5]])
    metric = Metric(inv)
    rng = np.random.default_rng(0)
    p = np.array([metric.momentum(rng) for _ in range(20000)])
    np.testing.assert_allclose(np.cov(p, rowvar=False), np.linalg.inv(inv), rtol=0.05, atol=0.02)


def test_dual_averaging_converges_on_acceptance_target():
    # acceptance falls smoothly with step size; the fixed point is exp(-eps) = 0.8
    da = DualAveraging(1.0, 0.8)
    eps = 1.0
    for _ in range(2000):
        eps = da.update(math.exp(-eps))
    assert da.final == pytest.approx(-math.log(0.8), rel=0.05)


# --- whole-chain behaviour ------------------------------------------------------------


def test_standard_normal_moments():
    s = run_chains(normal2(), None, ChainConfig(seed=1))
    x = s.flat()
    assert x.shape == (4000, 2)
    np.testing.assert_allclose(x.mean(axis=0), 0.0, atol=0.05)
    np.testing.assert_allclose(x.std(axis=0), 1.0, atol=0.05)
    assert np.all(s.rhat < 1.01) and np.all(s.ess > 400)


def test_same_seed_is_bitwise_identical():
    cfg = ChainConfig(seed=42, **SHORT)
    a = run_chains(make_model("rq2", 2), small_dataset(40, 2), cfg)
    b = run_chains(make_model("rq2", 2), small_dataset(40, 2), cfg)
    assert a.draws.tobytes() == b.draws.tobytes()
    assert a.to_csv() == b.to_csv()


def test_different_seeds_differ():
    a = run_chains(normal2(), None, ChainConfig(seed=1, **SHORT))
    b = run_chains(normal2(), None, ChainConfig(seed=2, **SHORT))
    assert not np.array_equal(a.draws, b.draws)


def test_parallel_matches_serial():
    spec, data = make_model("rq1", 2), small_dataset(40, 2)
    serial = run_chains(spec, data, ChainConfig(seed=3, **SHORT))
    parallel = run_chains(spec, data, ChainConfig(seed=3, n_jobs=2, **SHORT))
    assert serial.draws.tobytes() == parallel.draws.tobytes()


def test_chain_uses_spawned_seed():
    from mutcause.model import LogPosterior

    cfg = ChainConfig(seed=9, **SHORT)
    target = LogPosterior(normal2())
    second = run_chain(target, cfg, np.random.SeedSequence(9).spawn(2)[1])
    np.testing.assert_array_equal(sample(target, cfg)[1].draws, second.draws)


def test_seventy_thirty_intercept():
    s = run_chains(intercept_model(Normal(0.0, 10.0)), bernoulli_data(70, 100), ChainConfig(seed=5))
    assert expit(s.param("alpha[p]")).mean() == pytest.approx(0.7, abs=0.02)


def test_matches_conjugate_posterior_across_seeds():
    post = beta_binomial_posterior(1, 1, 70, 100, 0.95)
    spec, data = intercept_model(Logistic(0.0, 1.0)), bernoulli_data(70, 100)
    within = 0
    for seed in range(20):
        s = run_chains(spec, data, ChainConfig(seed=seed, warmup=500, samples=500))
        theta = expit(s.param("alpha[p]"))
        within += abs(theta.mean() - post.mean) < 2 * mcse_mean(theta)
    assert within >= 18


def test_tiny_steps_accept_almost_everything():
    cfg = ChainConfig(step_size=0.02, steps=100, warmup=50, samples=200, chains=2, seed=4)
    s = run_chains(normal2(), None, cfg)
    assert s.accept_rate.min() > 0.95


def test_positive_families_stay_positive(toy_data):
    s = run_chains(make_model("rq3", toy_data.projects), toy_data, ChainConfig(seed=6, **SHORT))
    for fam in ("beta", "gamma", "sigma"):
        assert np.all(s.family(fam) > 0)
    assert np.all(np.isfinite(s.draws))


def test_recovers_slopes_on_toy_data():
    data = small_dataset(400, 3, seed=8)
    s = run_chains(make_model("rq2", data.projects), data, ChainConfig(seed=8, warmup=500, samples=500))
    # toy data uses beta = 0.8, gamma = 0.6 in every project
    for fam, truth in (("beta", 0.8), ("gamma", 0.6)):
        lo, hi = np.quantile(s.family(fam), [0.005, 0.995], axis=0)
        assert np.all((lo < truth) & (truth < hi))


class Quartic:
    dim = 2

    def logp(self, q):
        return -float(np.sum(q**4))

    def grad(self, q):
        return -4.0 * q**3


class Broken:
    dim = 2

    def logp(self, q):
        return 0.0

    def grad(self, q):
        return np.full(2, np.nan)


def test_persistent_divergences_raise():
    cfg = ChainConfig(step_size=50.0, steps=3, warmup=0, samples=500, chains=1, adapt_metric=False)
    with pytest.raises(DivergenceExplosion):
        sample(Quartic(), cfg)


def test_non_finite_gradient_at_init():
    with pytest.raises(NonFiniteGradient):
        sample(Broken(), ChainConfig(chains=1, **{k: v for k, v in SHORT.items() if k != "chains"}))


# --- samples container ------------------------------------------------------------------


def test_csv_roundtrip_and_sidecar(toy_data):
    spec = make_model("rq1", toy_data.projects)
    s = run_chains(spec, toy_data, ChainConfig(seed=2, **SHORT))
    text = s.to_csv()
    assert text.splitlines()[0].split(",")[:3] == ["chain", "iteration", "alpha[proj0]"]
    assert len(text.splitlines()) == 1 + 600
    back = PosteriorSamples.from_csv(text, spec)
    np.testing.assert_array_equal(back.draws, s.draws)
    diag = s.diagnostics()
    assert diag["format_version"] == 1
    assert set(diag["parameters"]) == set(spec.param_names())
    assert r_hat(s, "beta[proj0]") == pytest.approx(s.rhat[s.index("beta[proj0]")])
    assert ess(s, "beta[proj0]") == pytest.approx(s.ess[s.index("beta[proj0]")])
