"""Static-trajectory Hamiltonian Monte Carlo.

Each transition integrates for a jittered time with the leapfrog scheme and
applies a Metropolis correction. Warmup tunes the step size with dual
averaging and estimates the (diagonal or dense) inverse metric over doubling
windows, in the usual init buffer / slow windows / terminal buffer layout.

Chain ``c`` draws all its randomness from
``np.random.SeedSequence(seed).spawn(chains)[c]``, so a chain's output does
not depend on whether chains run serially or in parallel.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import DivergenceExplosion, NonFiniteGradient

log = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = 1000.0
MAX_DIVERGENT_RUN = 100


class Target(Protocol):
    dim: int

    def logp(self, q: np.ndarray) -> float: ...

    def grad(self, q: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ChainConfig:
    """Sampler settings. Defaults give 4 x 1000 = 4000 retained draws.

    ``trajectory_length`` is the mean integration time in metric-whitened
    units; each transition draws it uniformly from +/- ``jitter`` of that.
    Setting ``steps`` instead fixes the mean number of leapfrog steps.
    ``step_size`` disables step-size adaptation.
    """

    warmup: int = 1000
    samples: int = 1000
    chains: int = 4
    target_accept: float = 0.8
    trajectory_length: float = math.pi / 2
    steps: int | None = None
    jitter: float = 0.5
    max_steps: int = 256
    metric: str = "dense"
    adapt_metric: bool = True
    step_size: float | None = None
    seed: int = 0
    init_scale: float = 0.1
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.samples < 1 or self.warmup < 0:
            raise ValueError("samples must be >= 1 and warmup >= 0")
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if not 0.6 < self.target_accept < 0.99:
            raise ValueError("target_accept must lie in (0.6, 0.99)")
        if self.metric not in ("diag", "dense"):
            raise ValueError("metric must be 'diag' or 'dense'")
        if not 0 <= self.jitter < 1:
            raise ValueError("jitter must lie in [0, 1)")
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be positive")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.trajectory_length <= 0 or self.max_steps < 1:
            raise ValueError("trajectory_length and max_steps must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# --- metric ------------------------------------------------------------------------------


class Metric:
    """Kinetic energy 0.5 p^T M^-1 p, stored as the inverse metric."""

    def __init__(self, inv: np.ndarray):
        inv = np.asarray(inv, dtype=float)
        self.dense = inv.ndim == 2
        self.inv = inv
        if self.dense:
            self._chol = np.linalg.cholesky(np.linalg.inv(inv))
        else:
            self._sd = 1.0 / np.sqrt(inv)

    def momentum(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.inv.shape[0])
        return self._chol @ z if self.dense else z * self._sd

    def velocity(self, p: np.ndarray) -> np.ndarray:
        return self.inv @ p if self.dense else self.inv * p

    def kinetic(self, p: np.ndarray) -> float:
        return 0.5 * float(p @ self.velocity(p))


def leapfrog(target: Target, q: np.ndarray, p: np.ndarray, g: np.ndarray, eps: float, n_steps: int, metric: Metric):
    """Integrate ``n_steps`` leapfrog steps. Returns (q, p, grad, finite)."""
    q, p = q.copy(), p + 0.5 * eps * g
    for i in range(n_steps):
        q = q + eps * metric.velocity(p)
        g = target.grad(q)
        if not np.all(np.isfinite(g)):
            return q, p, g, False
        p = p + (eps if i < n_steps - 1 else 0.5 * eps) * g
    return q, p, g, True


def hamiltonian(target: Target, q: np.ndarray, p: np.ndarray, metric: Metric) -> float:
    return -target.logp(q) + metric.kinetic(p)


# --- adaptation --------------------------------------------------------------------------


class DualAveraging:
    """Nesterov dual averaging of log step size towards a target acceptance rate."""

    def __init__(self, eps: float, target: float, gamma: float = 0.05, t0: float = 10.0, kappa: float = 0.75):
        self.target, self.gamma, self.t0, self.kappa = target, gamma, t0, kappa
        self.restart(eps)

    def restart(self, eps: float) -> None:
        self.mu = math.log(10.0 * eps)
        self.m = 0
        self.h_bar = 0.0
        self.log_eps = math.log(eps)
        self.log_eps_bar = 0.0

    def update(self, accept_prob: float) -> float:
        self.m += 1
        m = self.m
        w = 1.0 / (m + self.t0)
        self.h_bar = (1 - w) * self.h_bar + w * (self.target - accept_prob)
        self.log_eps = self.mu - math.sqrt(m) / self.gamma * self.h_bar
        eta = m ** (-self.kappa)
        self.log_eps_bar = eta * self.log_eps + (1 - eta) * self.log_eps_bar
        return math.exp(self.log_eps)

    @property
    def final(self) -> float:
        return math.exp(self.log_eps_bar)


def warmup_schedule(warmup: int, init_buffer: int = 75, term_buffer: int = 50, base_window: int = 25) -> list[int]:
    """Iterations (0-based) after which the metric is re-estimated."""
    if warmup < 20:
        return []
    if init_buffer + term_buffer + base_window > warmup:
        init_buffer = int(0.15 * warmup)
        term_buffer = int(0.1 * warmup)
        base_window = warmup - init_buffer - term_buffer
    ends = []
    start, window = init_buffer, base_window
    last = warmup - term_buffer
    while start < last:
        end = start + window
        if end + 2 * window > last:  # stretch the final slow window to the terminal buffer
            end = last
        ends.append(end - 1)
        start, window = end, 2 * window
    return ends


def regularized_metric(window_draws: np.ndarray, dense: bool) -> np.ndarray:
    n, d = window_draws.shape
    var = window_draws.var(axis=0, ddof=1)
    if not dense:
        return (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
    cov = np.cov(window_draws, rowvar=False).reshape(d, d)
    # shrink off-diagonal terms when the window is short relative to the dimension
    w = n / (n + d)
    cov = w * cov + (1 - w) * np.diag(var)
    return (n / (n + 5.0)) * cov + 1e-3 * (5.0 / (n + 5.0)) * np.eye(d)


def curvature_metric(target: Target, q: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Diagonal inverse metric from finite-difference curvature at ``q``."""
    d = q.size
    inv = np.ones(d)
    h = 1e-4
    for k in range(d):
        qk = q.copy()
        qk[k] += h
        gk = target.grad(qk)
        curv = -(gk[k] - g[k]) / h
        if np.isfinite(curv) and curv > 0:
            inv[k] = 1.0 / curv
    return np.clip(inv, 1e-8, 1e2)


def find_reasonable_step(target: Target, q: np.ndarray, g: np.ndarray, logp: float, metric: Metric, rng: np.random.Generator, eps: float = 1.0) -> float:
    """Double or halve one-step proposals until the acceptance ratio crosses 1/2."""
    p = metric.momentum(rng)
    h0 = -logp + metric.kinetic(p)

    def log_ratio(e: float) -> float:
        q1, p1, _, ok = leapfrog(target, q, p, g, e, 1, metric)
        if not ok:
            return -math.inf
        h1 = hamiltonian(target, q1, p1, metric)
        return h0 - h1 if math.isfinite(h1) else -math.inf

    direction = 1 if log_ratio(eps) > math.log(0.5) else -1
    for _ in range(60):
        nxt = eps * (2.0**direction)
        above = log_ratio(nxt) > math.log(0.5)
        if (direction == 1 and not above) or (direction == -1 and above):
            return nxt if direction == -1 else eps
        eps = nxt
    return eps


# --- one chain ----------------------------------------------------------------------------


@dataclass
class ChainResult:
    draws: np.ndarray  # (samples, dim), unconstrained
    accept_prob: np.ndarray
    divergent: np.ndarray
    n_steps: np.ndarray
    step_size: float
    inv_metric: np.ndarray
    warmup_divergences: int = 0
    extra: dict = field(default_factory=dict)


def _initial_point(target: Target, rng: np.random.Generator, scale: float):
    for _ in range(100):
        q = rng.normal(0.0, scale, target.dim)
        g = target.grad(q)
        lp = target.logp(q)
        if np.all(np.isfinite(g)) and math.isfinite(lp):
            return q, g, lp
    raise NonFiniteGradient("could not find an initial point with finite log density and gradient")


def run_chain(target: Target, cfg: ChainConfig, seed: np.random.SeedSequence | int) -> ChainResult:
    # divergent trajectories overflow by design; they are detected and rejected below
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _run_chain(target, cfg, seed)


def _run_chain(target: Target, cfg: ChainConfig, seed: np.random.SeedSequence | int) -> ChainResult:
    rng = np.random.default_rng(seed)
    q, g, lp = _initial_point(target, rng, cfg.init_scale)
    dense = cfg.metric == "dense"
    metric = Metric(curvature_metric(target, q, g) if cfg.adapt_metric else np.ones(target.dim))
    if cfg.step_size is not None:
        eps = cfg.step_size
    else:
        eps = find_reasonable_step(target, q, g, lp, metric, rng)
    adapter = DualAveraging(eps, cfg.target_accept)
    window_ends = warmup_schedule(cfg.warmup) if cfg.adapt_metric else []
    window: list[np.ndarray] = []
    window_start = warmup_schedule_start(cfg.warmup)

    total = cfg.warmup + cfg.samples
    draws = np.empty((cfg.samples, target.dim))
    accept = np.empty(cfg.samples)
    divergent = np.zeros(cfg.samples, dtype=bool)
    steps_used = np.empty(cfg.samples, dtype=np.int64)
    warm_div = 0
    run = 0

    for it in range(total):
        warm = it < cfg.warmup
        if cfg.steps is not None:
            lo = max(1, math.ceil(cfg.steps * (1 - cfg.jitter)))
            hi = max(lo, math.floor(cfg.steps * (1 + cfg.jitter)))
            n_steps = int(rng.integers(lo, hi + 1))
        else:
            t = cfg.trajectory_length * rng.uniform(1 - cfg.jitter, 1 + cfg.jitter)
            n_steps = int(min(cfg.max_steps, max(1, math.ceil(t / eps))))

        p0 = metric.momentum(rng)
        h0 = -lp + metric.kinetic(p0)
        q1, p1, g1, ok = leapfrog(target, q, p0, g, eps, n_steps, metric)
        lp1 = target.logp(q1) if ok else -math.inf
        h1 = -lp1 + metric.kinetic(p1) if math.isfinite(lp1) else math.inf
        delta = h1 - h0
        is_div = not math.isfinite(delta) or delta > DIVERGENCE_THRESHOLD
        a = 0.0 if is_div else math.exp(min(0.0, -delta))
        if rng.uniform() < a:
            q, g, lp = q1, g1, lp1

        if warm:
            warm_div += is_div
            if cfg.step_size is None:
                eps = adapter.update(a)
            if window_ends and it >= window_start:
                window.append(q.copy())
            if window_ends and it == window_ends[0]:
                metric = Metric(regularized_metric(np.array(window), dense))
                window = []
                window_ends.pop(0)
                if cfg.step_size is None:
                    eps = find_reasonable_step(target, q, g, lp, metric, rng, eps)
                    adapter.restart(eps)
            if it == cfg.warmup - 1 and cfg.step_size is None:
                eps = adapter.final
        else:
            k = it - cfg.warmup
            draws[k] = q
            accept[k] = a
            divergent[k] = is_div
            steps_used[k] = n_steps
            run = run + 1 if is_div else 0
            if run >= MAX_DIVERGENT_RUN:
                raise DivergenceExplosion(
                    f"{run} consecutive divergent transitions after warmup (step size {eps:.3g})"
                )

    return ChainResult(draws, accept, divergent, steps_used, eps, metric.inv, warm_div)


def warmup_schedule_start(warmup: int) -> int:
    ends = warmup_schedule(warmup)
    if not ends:
        return warmup
    if 75 + 50 + 25 > warmup:
        return int(0.15 * warmup)
    return 75


def chain_seeds(seed: int, chains: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(chains)


def _run_indexed(args):
    target, cfg, seed = args
    return run_chain(target, cfg, seed)


def sample(target: Target, cfg: ChainConfig) -> list[ChainResult]:
    """Run ``cfg.chains`` chains; results come back in chain order."""
    jobs = [(target, cfg, s) for s in chain_seeds(cfg.seed, cfg.chains)]
    if cfg.n_jobs > 1 and cfg.chains > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.n_jobs, cfg.chains)) as pool:
            return list(pool.map(_run_indexed, jobs))
    return [_run_indexed(j) for j in jobs]
