"""Analysis products built from posterior draws.

Coefficient tables and their differences, odds / probability conversions,
prior and posterior predictive checks, Bayesian R-squared and counterfactual
curves. Everything here is a read-only transform of ``PosteriorSamples``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit, logit

from .data import TransformedDataset
from .errors import DomainError, ShapeMismatch, UnknownProject
from .model import ModelSpec, linear_predictor, prior_draws
from .samples import PosteriorSamples

TABLE_COLUMNS = ("project", "mean", "se", "q025", "q975")
CURVE_COLUMNS = ("grid", "causal_mean", "causal_lo", "causal_hi", "noncausal_mean", "noncausal_lo", "noncausal_hi")
DEFAULT_GRID = tuple(np.round(np.linspace(-2.0, 2.0, 41), 10))
_CHUNK = 64  # draws per block when a (draws x records) matrix is needed


# --- coefficient tables -------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientSummary:
    project: str
    mean: float
    se: float
    q025: float
    q975: float

    def row(self) -> dict:
        return {"project": self.project, "mean": self.mean, "se": self.se, "q025": self.q025, "q975": self.q975}

    def display(self) -> dict:
        """Row rounded to two decimals, as printed in the tables."""
        return {"project": self.project, **{k: f"{v:.2f}" for k, v in self.row().items() if k != "project"}}


def summarize_draws(draws: np.ndarray, projects: Sequence[str], level: float = 0.95) -> list[CoefficientSummary]:
    """One summary per column of ``draws`` (shape (n_draws, n_projects))."""
    draws = np.asarray(draws, dtype=float)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [tail, 1.0 - tail], axis=0)
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) if draws.shape[0] > 1 else np.zeros(draws.shape[1])
    se[np.ptp(draws, axis=0) == 0] = 0.0  # the mean can round away from a constant column
    return [CoefficientSummary(p, float(m), float(s), float(a), float(b)) for p, m, s, a, b in zip(projects, mean, se, lo, hi)]


def _projects_for(samples: PosteriorSamples, family: str) -> list[str]:
    s = samples.spec.slice_of(family)
    return list(samples.spec.projects) if s.stop - s.start == samples.spec.P else [family]


def summarize_coefficients(samples: PosteriorSamples, family: str) -> list[CoefficientSummary]:
    return summarize_draws(samples.family(family), _projects_for(samples, family))


def coefficient_difference(a: PosteriorSamples, b: PosteriorSamples, family: str, family_b: str | None = None) -> list[CoefficientSummary]:
    """Summaries of the draw-wise difference a - b, pairing draws by (chain, iteration)."""
    family_b = family_b or family
    if a.draws.shape[:2] != b.draws.shape[:2]:
        raise ShapeMismatch(f"draw layouts differ: {a.draws.shape[:2]} vs {b.draws.shape[:2]}")
    pa, pb = _projects_for(a, family), _projects_for(b, family_b)
    if pa != pb:
        raise ShapeMismatch("the two sample sets cover different projects")
    return summarize_draws(a.family(family) - b.family(family_b), pa)


def table_csv(rows: Sequence[CoefficientSummary]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.row().items()})
    return buf.getvalue()


# --- scale conversions -------------------------------------------------------------------


def odds_factor(logit_coef: float) -> float:
    """Multiplicative change in odds for a one-unit increase: exp(coef)."""
    if not math.isfinite(logit_coef):
        raise DomainError("coefficient must be finite")
    return math.exp(logit_coef)


def shifted_probability(base_prob: float, logit_delta: float) -> float:
    """Probability after adding ``logit_delta`` on the logit scale."""
    if not 0.0 < base_prob < 1.0:
        raise DomainError(f"base probability must lie in (0, 1), got {base_prob}")
    if not math.isfinite(logit_delta):
        raise DomainError("logit shift must be finite")
    if logit_delta == 0:
        return base_prob
    return float(expit(logit(base_prob) + logit_delta))


# --- predictive checks ---------------------------------------------------------------------


def _family_draws(spec: ModelSpec, flat: np.ndarray) -> dict[str, np.ndarray]:
    return {f.name: flat[:, spec.slice_of(f.name)] for f in spec.families}


def _project_theta_means(spec: ModelSpec, flat: np.ndarray, data: TransformedDataset) -> np.ndarray:
    """Mean of theta over each project's records, per draw: shape (n_draws, P)."""
    onehot = np.zeros((len(data), data.n_projects))
    onehot[np.arange(len(data)), data.project_index] = 1.0
    out = np.empty((flat.shape[0], data.n_projects))
    for start in range(0, flat.shape[0], _CHUNK):
        block = _family_draws(spec, flat[start : start + _CHUNK])
        out[start : start + _CHUNK] = expit(linear_predictor(spec, block, data)) @ onehot
    return out / onehot.sum(axis=0)


def _check_match(spec: ModelSpec, data: TransformedDataset) -> None:
    if tuple(spec.projects) != tuple(data.projects):
        raise ShapeMismatch("model and data cover different projects")
    if not spec.has_outcome:
        raise ShapeMismatch(f"model {spec.name!r} has no Bernoulli outcome")


@dataclass(frozen=True)
class Histogram:
    values: np.ndarray
    edges: np.ndarray
    counts: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {"bin_lo": float(a), "bin_hi": float(b), "count": int(c)}
            for a, b, c in zip(self.edges[:-1], self.edges[1:], self.counts)
        ]


def prior_predictive_mutation_score(spec: ModelSpec, data: TransformedDataset, n_sims: int = 1000, seed: int = 0, bins: int = 20) -> Histogram:
    """Mutation scores implied by prior draws over the observed covariates.

    Each simulation draws one parameter vector from the prior and records the
    mean of theta over all records.
    """
    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    _check_match(spec, data)
    flat = prior_draws(spec, n_sims, seed)
    counts = np.bincount(data.project_index, minlength=data.n_projects).astype(float)
    scores = _project_theta_means(spec, flat, data) @ (counts / counts.sum())
    hist, edges = np.histogram(scores, bins=bins, range=(0.0, 1.0))
    return Histogram(scores, edges, hist)


@dataclass(frozen=True)
class PredictiveRow:
    project: str
    mean: float
    lo: float
    hi: float
    observed: float

    @property
    def covered(self) -> bool:
        return self.lo <= self.observed <= self.hi

    def row(self) -> dict:
        return {"project": self.project, "mean": self.mean, "lo": self.lo, "hi": self.hi, "observed": self.observed}


def _require_spec(samples: PosteriorSamples) -> ModelSpec:
    if samples.spec is None:
        raise ShapeMismatch("samples carry no model spec")
    return samples.spec


def posterior_predictive_check(spec: ModelSpec, samples: PosteriorSamples, data: TransformedDataset, level: float = 0.95) -> list[PredictiveRow]:
    """Per project: posterior of the mean kill probability against the observed mutation score."""
    _check_match(spec, data)
    if samples.draws.shape[2] != spec.n_params or tuple(samples.names) != tuple(spec.param_names()):
        raise ShapeMismatch("samples do not belong to this model")
    ms = _project_theta_means(spec, samples.flat(), data)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(ms, [tail, 1.0 - tail], axis=0)
    counts = np.bincount(data.project_index, minlength=data.n_projects)
    observed = np.bincount(data.project_index, weights=data.killed.astype(float), minlength=data.n_projects) / counts
    mean = ms.mean(axis=0)
    return [
        PredictiveRow(p, float(m), float(a), float(b), float(o))
        for p, m, a, b, o in zip(data.projects, mean, np.minimum(lo, mean), np.maximum(hi, mean), observed)
    ]


@dataclass(frozen=True)
class IntervalSummary:
    mean: float
    lo: float
    hi: float
    draws: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "lo": self.lo, "hi": self.hi, "n_draws": int(self.draws.size)}


def r_squared_from_theta(theta: np.ndarray) -> np.ndarray:
    """var(theta) / (var(theta) + mean(theta (1 - theta))) along the last axis, population variances."""
    fit = theta.var(axis=-1)
    resid = (theta * (1.0 - theta)).mean(axis=-1)
    return fit / (fit + resid)


def bayesian_r_squared(spec: ModelSpec, samples: PosteriorSamples, data: TransformedDataset, level: float = 0.95) -> IntervalSummary:
    _check_match(spec, data)
    if tuple(samples.names) != tuple(spec.param_names()):
        raise ShapeMismatch("samples do not belong to this model")
    flat = samples.flat()
    r2 = np.empty(flat.shape[0])
    for start in range(0, flat.shape[0], _CHUNK):
        block = _family_draws(spec, flat[start : start + _CHUNK])
        r2[start : start + _CHUNK] = r_squared_from_theta(expit(linear_predictor(spec, block, data)))
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(r2, [tail, 1.0 - tail])
    return IntervalSummary(float(r2.mean()), float(lo), float(hi), r2)


# --- counterfactuals ------------------------------------------------------------------------


@dataclass(frozen=True)
class Band:
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    median: np.ndarray
    logit_mean: np.ndarray

    @classmethod
    def of(cls, theta: np.ndarray, eta: np.ndarray, level: float) -> "Band":
        tail = (1.0 - level) / 2.0
        lo, med, hi = np.quantile(theta, [tail, 0.5, 1.0 - tail], axis=0)
        mean = theta.mean(axis=0)
        # identical draws can put the mean an ulp outside the quantiles
        return cls(mean, np.minimum(lo, mean), np.maximum(hi, mean), med, eta.mean(axis=0))


@dataclass(frozen=True)
class CounterfactualCurve:
    """Kill probability along an intervened covariate for one project.

    ``causal`` comes from the adjusted model; ``noncausal`` (optional) from
    the unadjusted one. Bands are equal-tailed at ``level``.
    """

    project: str
    variable: str
    grid: np.ndarray
    causal: Band
    noncausal: Band | None = None
    level: float = 0.95

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*CURVE_COLUMNS, "causal_median", "noncausal_median"])
        nan = np.full(self.grid.size, np.nan)
        nc = self.noncausal
        cols = [
            self.grid,
            self.causal.mean,
            self.causal.lo,
            self.causal.hi,
            nc.mean if nc else nan,
            nc.lo if nc else nan,
            nc.hi if nc else nan,
            self.causal.median,
            nc.median if nc else nan,
        ]
        for row in zip(*cols):
            w.writerow(["" if math.isnan(v) else repr(float(v)) for v in row])
        return buf.getvalue()


def _project_slot(samples: PosteriorSamples, project: str) -> int:
    spec = _require_spec(samples)
    if project not in spec.projects:
        raise UnknownProject(f"no project {project!r}; known: {', '.join(spec.projects)}")
    return spec.projects.index(project)


def _coef(samples: PosteriorSamples, family: str, p: int) -> np.ndarray:
    d = samples.family(family)
    return d[:, p] if d.shape[1] > 1 else d[:, 0]


def _grid(grid: Sequence[float] | None) -> np.ndarray:
    g = np.asarray(DEFAULT_GRID if grid is None else grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("grid must be a nonempty list of values")
    return g


def counterfactual_exec_curve(
    rq3_samples: PosteriorSamples,
    rq1_samples: PosteriorSamples | None,
    project: str,
    grid: Sequence[float] | None = None,
    cover_fixed: float = 0.0,
    level: float = 0.95,
) -> CounterfactualCurve:
    """Set exec_z to each grid value with cover_z held at ``cover_fixed``."""
    g = _grid(grid)
    p = _project_slot(rq3_samples, project)
    alpha, beta = _coef(rq3_samples, "alpha", p), _coef(rq3_samples, "beta", p)
    gamma = _coef(rq3_samples, "gamma", p) if "gamma" in {f.name for f in rq3_samples.spec.families} else 0.0
    eta = (alpha + gamma * cover_fixed)[:, None] + beta[:, None] * g[None, :]
    causal = Band.of(expit(eta), eta, level)
    noncausal = None
    if rq1_samples is not None:
        q = _project_slot(rq1_samples, project)
        eta1 = _coef(rq1_samples, "alpha", q)[:, None] + _coef(rq1_samples, "beta", q)[:, None] * g[None, :]
        noncausal = Band.of(expit(eta1), eta1, level)
    return CounterfactualCurve(project, "exec", g, causal, noncausal, level)


def intervene_on_cover(
    rq3_samples: PosteriorSamples,
    project: str,
    cover_grid: Sequence[float] | None = None,
    seed: int = 0,
    level: float = 0.95,
) -> CounterfactualCurve:
    """Set cover_z to each grid value and let exec_z respond through its sub-model."""
    g = _grid(cover_grid)
    p = _project_slot(rq3_samples, project)
    c = {name: _coef(rq3_samples, name, p)[:, None] for name in ("alpha", "beta", "gamma", "nu", "lambda", "sigma")}
    rng = np.random.default_rng(seed)
    exec_z = c["nu"] + c["lambda"] * g[None, :] + c["sigma"] * rng.standard_normal((c["nu"].shape[0], g.size))
    eta = c["alpha"] + c["beta"] * exec_z + c["gamma"] * g[None, :]
    return CounterfactualCurve(project, "cover", g, Band.of(expit(eta), eta, level), None, level)
