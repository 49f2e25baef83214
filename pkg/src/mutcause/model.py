"""Multi-level Bernoulli-logit models with an optional Normal sub-model for Exec.

Parameters live on an unconstrained real vector. Families with positive
support (LogNormal and Exponential priors) are stored as log values; the
prior density then carries the log-Jacobian of ``exp`` so that the density
over the unconstrained vector is the right one to sample from.

Layout of the vector: families in declaration order, each occupying ``P``
consecutive slots if it varies by project, one slot otherwise.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .data import TransformedDataset
from .errors import ShapeMismatch, UnknownFamily

LOG_2PI = math.log(2.0 * math.pi)

OUTCOME = "outcome"
EXEC_SUBMODEL = "exec"


# --- priors ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0
    positive = False

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("Normal sigma must be positive")

    def logp_unconstrained(self, u: np.ndarray) -> float:
        z = (u - self.mu) / self.sigma
        return float(np.sum(-0.5 * z * z - math.log(self.sigma) - 0.5 * LOG_2PI))

    def grad_unconstrained(self, u: np.ndarray) -> np.ndarray:
        return -(u - self.mu) / self.sigma**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mu, self.sigma, size)

    def to_dict(self) -> dict:
        return {"kind": "Normal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class LogNormal:
    mu: float = 0.0
    sigma: float = 1.0
    positive = True

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("LogNormal sigma must be positive")

    def logp_unconstrained(self, u: np.ndarray) -> float:
        # log-density of exp(u) plus the Jacobian u: the -log x term cancels
        z = (u - self.mu) / self.sigma
        return float(np.sum(-0.5 * z * z - math.log(self.sigma) - 0.5 * LOG_2PI))

    def grad_unconstrained(self, u: np.ndarray) -> np.ndarray:
        return -(u - self.mu) / self.sigma**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.lognormal(self.mu, self.sigma, size)

    def to_dict(self) -> dict:
        return {"kind": "LogNormal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Exponential:
    rate: float = 1.0
    positive = True

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError("Exponential rate must be positive")

    def logp_unconstrained(self, u: np.ndarray) -> float:
        return float(np.sum(math.log(self.rate) - self.rate * np.exp(u) + u))

    def grad_unconstrained(self, u: np.ndarray) -> np.ndarray:
        return 1.0 - self.rate * np.exp(u)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size)

    def to_dict(self) -> dict:
        return {"kind": "Exponential", "rate": self.rate}


@dataclass(frozen=True)
class Logistic:
    """Logistic(loc, scale); Logistic(0, 1) on a logit is a uniform prior on the probability."""

    loc: float = 0.0
    scale: float = 1.0
    positive = False

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError("Logistic scale must be positive")

    def logp_unconstrained(self, u: np.ndarray) -> float:
        z = (np.asarray(u) - self.loc) / self.scale
        # log pdf = -z - 2 log(1 + e^-z) - log(scale), written stably
        return float(np.sum(-np.abs(z) - 2.0 * np.log1p(np.exp(-np.abs(z))) - math.log(self.scale)))

    def grad_unconstrained(self, u: np.ndarray) -> np.ndarray:
        z = (np.asarray(u) - self.loc) / self.scale
        return -np.tanh(z / 2.0) / self.scale

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.logistic(self.loc, self.scale, size)

    def to_dict(self) -> dict:
        return {"kind": "Logistic", "loc": self.loc, "scale": self.scale}


Prior = Union[Normal, LogNormal, Exponential, Logistic]


def prior_from_dict(d: Mapping) -> Prior:
    kind = d["kind"]
    if kind == "Normal":
        return Normal(d["mu"], d["sigma"])
    if kind == "LogNormal":
        return LogNormal(d["mu"], d["sigma"])
    if kind == "Exponential":
        return Exponential(d["rate"])
    if kind == "Logistic":
        return Logistic(d["loc"], d["scale"])
    raise ValueError(f"unknown prior kind {kind!r}")


# --- model specification ------------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """One coefficient family.

    ``role`` is ``intercept`` or ``slope`` (on ``covariate``) for either
    sub-model, or ``scale`` for the residual sd of the Exec sub-model.
    """

    name: str
    submodel: str
    role: str
    prior: Prior
    covariate: str | None = None
    varying: bool = True

    def __post_init__(self) -> None:
        if self.submodel not in (OUTCOME, EXEC_SUBMODEL):
            raise ValueError(f"unknown sub-model {self.submodel!r}")
        if self.role not in ("intercept", "slope", "scale"):
            raise ValueError(f"unknown role {self.role!r}")
        if (self.role == "slope") != (self.covariate is not None):
            raise ValueError("exactly the slope families take a covariate")
        if self.role == "scale" and (self.submodel != EXEC_SUBMODEL or not self.prior.positive):
            raise ValueError("scale families belong to the Exec sub-model and need a positive prior")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "submodel": self.submodel,
            "role": self.role,
            "covariate": self.covariate,
            "varying": self.varying,
            "prior": self.prior.to_dict(),
        }


@dataclass(frozen=True)
class ModelSpec:
    name: str
    families: tuple[Family, ...]
    projects: tuple[str, ...]
    _slices: dict[str, slice] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.projects:
            raise ValueError("a model needs at least one project")
        names = [f.name for f in self.families]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate family names: {names}")
        for sub in (OUTCOME, EXEC_SUBMODEL):
            fams = [f for f in self.families if f.submodel == sub]
            if not fams:
                continue
            if sum(f.role == "intercept" for f in fams) != 1:
                raise ValueError(f"{sub} sub-model needs exactly one intercept family")
            if sub == EXEC_SUBMODEL:
                if sum(f.role == "scale" for f in fams) != 1:
                    raise ValueError("the Exec sub-model needs exactly one scale family")
                slopes = [f for f in fams if f.role == "slope"]
                if len(slopes) > 1 or any(f.covariate == "exec" for f in slopes):
                    raise ValueError("the Exec sub-model takes at most one slope, on a covariate other than exec")
        slices, start = {}, 0
        for f in self.families:
            width = self.P if f.varying else 1
            slices[f.name] = slice(start, start + width)
            start += width
        object.__setattr__(self, "_slices", slices)

    @property
    def P(self) -> int:
        return len(self.projects)

    @property
    def n_params(self) -> int:
        return sum(s.stop - s.start for s in self._slices.values())

    @property
    def has_outcome(self) -> bool:
        return any(f.submodel == OUTCOME for f in self.families)

    @property
    def has_exec_submodel(self) -> bool:
        return any(f.submodel == EXEC_SUBMODEL for f in self.families)

    def family(self, name: str) -> Family:
        for f in self.families:
            if f.name == name:
                return f
        raise UnknownFamily(f"model {self.name!r} has no family {name!r}")

    def slice_of(self, name: str) -> slice:
        self.family(name)
        return self._slices[name]

    def slot(self, family: str, project: int = 0) -> int:
        f = self.family(family)
        s = self._slices[family]
        if not f.varying:
            return s.start
        if not 0 <= project < self.P:
            raise IndexError(f"project index {project} out of range")
        return s.start + project

    def param_names(self) -> list[str]:
        out = []
        for f in self.families:
            if f.varying:
                out += [f"{f.name}[{p}]" for p in self.projects]
            else:
                out.append(f.name)
        return out

    def positive_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_params, dtype=bool)
        for f in self.families:
            mask[self._slices[f.name]] = f.prior.positive
        return mask

    def covariates(self) -> set[str]:
        return {f.covariate for f in self.families if f.covariate} | ({"exec"} if self.has_exec_submodel else set())

    def to_dict(self) -> dict:
        return {"name": self.name, "projects": list(self.projects), "families": [f.to_dict() for f in self.families]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        fams = tuple(
            Family(
                name=f["name"],
                submodel=f["submodel"],
                role=f["role"],
                prior=prior_from_dict(f["prior"]),
                covariate=f.get("covariate"),
                varying=f.get("varying", True),
            )
            for f in d["families"]
        )
        return cls(d["name"], fams, tuple(d["projects"]))

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


MODEL_IDS = ("rq1", "rq2", "rq3", "rq4")


def make_model(rq: str, P: int | Sequence[str]) -> ModelSpec:
    """Build one of the four analysis models, or ``exec`` for the Exec sub-model alone.

    ``P`` is a project count or a sequence of project names.

    rq1: logit(theta) = alpha + beta * exec
    rq2: logit(theta) = alpha + beta * exec + gamma * cover
    rq3: rq2 plus exec ~ Normal(nu + lambda * cover, sigma)
    rq4: logit(theta) = alpha + beta * cover
    """
    if isinstance(P, int):
        if P < 1:
            raise ValueError("P must be at least 1")
        projects = tuple(str(i) for i in range(P))
    else:
        projects = tuple(P)
    rq = rq.lower()
    alpha = Family("alpha", OUTCOME, "intercept", Normal(0.0, 1.0))
    nu = Family("nu", EXEC_SUBMODEL, "intercept", Normal(0.0, 1.0))
    lam = Family("lambda", EXEC_SUBMODEL, "slope", Normal(0.0, 1.0), covariate="cover")
    sigma = Family("sigma", EXEC_SUBMODEL, "scale", Exponential(1.0))
    if rq == "rq1":
        fams = (alpha, Family("beta", OUTCOME, "slope", LogNormal(0.0, 1.0), "exec"))
    elif rq == "rq2":
        fams = (
            alpha,
            Family("beta", OUTCOME, "slope", LogNormal(0.0, 1.0), "exec"),
            Family("gamma", OUTCOME, "slope", LogNormal(0.0, 1.0), "cover"),
        )
    elif rq == "rq3":
        fams = (
            alpha,
            Family("beta", OUTCOME, "slope", LogNormal(0.0, 1.0), "exec"),
            Family("gamma", OUTCOME, "slope", LogNormal(0.0, 1.0), "cover"),
            nu,
            lam,
            sigma,
        )
    elif rq == "rq4":
        fams = (alpha, Family("beta", OUTCOME, "slope", LogNormal(0.0, 1.0), "cover"))
    elif rq == "exec":
        fams = (nu, lam, sigma)
    else:
        raise ValueError(f"unknown model id {rq!r}; expected one of {', '.join(MODEL_IDS)}")
    return ModelSpec(rq, fams, projects)


# --- parameter vectors ------------------------------------------------------------------


@dataclass(frozen=True)
class ParameterVector:
    spec: ModelSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.n_params,):
            raise ShapeMismatch(f"expected {self.spec.n_params} unconstrained values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def constrained(self) -> dict[str, np.ndarray]:
        return constrain(self.spec, self.values)

    @classmethod
    def from_constrained(cls, spec: ModelSpec, params: Mapping[str, np.ndarray | float]) -> "ParameterVector":
        v = np.zeros(spec.n_params)
        for f in spec.families:
            s = spec.slice_of(f.name)
            x = np.broadcast_to(np.asarray(params[f.name], dtype=float), (s.stop - s.start,))
            if f.prior.positive:
                if np.any(x <= 0):
                    raise ValueError(f"{f.name} must be positive")
                x = np.log(x)
            v[s] = x
        return cls(spec, v)


def _as_values(spec: ModelSpec, p: ParameterVector | np.ndarray) -> np.ndarray:
    if isinstance(p, ParameterVector):
        if p.spec.n_params != spec.n_params:
            raise ShapeMismatch("parameter vector belongs to a differently shaped model")
        return p.values
    v = np.asarray(p, dtype=float)
    if v.shape != (spec.n_params,):
        raise ShapeMismatch(f"expected {spec.n_params} unconstrained values, got shape {v.shape}")
    return v


def constrain(spec: ModelSpec, values: np.ndarray) -> dict[str, np.ndarray]:
    """Unconstrained values (last axis) to per-family constrained arrays."""
    values = np.asarray(values, dtype=float)
    out = {}
    for f in spec.families:
        x = values[..., spec.slice_of(f.name)]
        out[f.name] = np.exp(x) if f.prior.positive else x.copy()
    return out


def to_constrained(spec: ModelSpec, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    mask = spec.positive_mask()
    out = values.copy()
    out[..., mask] = np.exp(values[..., mask])
    return out


def to_unconstrained(spec: ModelSpec, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    mask = spec.positive_mask()
    out = values.copy()
    out[..., mask] = np.log(values[..., mask])
    return out


# --- log density -------------------------------------------------------------------------


class LogPosterior:
    """Log prior, log likelihood and their gradient for one model and dataset.

    Records are grouped by project once. The logistic part then works on one
    contiguous design block per project; the Gaussian Exec sub-model is
    evaluated from per-project sufficient statistics, so its cost does not
    grow with the number of records. ``data=None`` gives the prior alone.

    Instances cache the last linear predictor, so give each chain its own.
    """

    def __init__(self, spec: ModelSpec, data: TransformedDataset | None = None):
        self.spec = spec
        self.dim = spec.n_params
        self.names = spec.param_names()
        self._fams = [(f, spec.slice_of(f.name)) for f in spec.families]
        self._positive = spec.positive_mask()
        self._cache_q: np.ndarray | None = None
        self._cache_eta: np.ndarray | None = None
        self.data = data
        if data is None:
            return
        if data.n_projects != spec.P:
            raise ShapeMismatch(f"model has {spec.P} projects, data has {data.n_projects}")
        order = np.argsort(data.project_index, kind="stable")
        counts = np.bincount(data.project_index, minlength=spec.P)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        self._n = counts.astype(float)
        self._slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        x = {name: data.covariate(name)[order] for name in ("exec", "cover")}

        self._outcome = [(f, s) for f, s in self._fams if f.submodel == OUTCOME]
        if self._outcome:
            self._y = data.killed[order].astype(float)
            cols = [np.ones(len(order)) if f.role == "intercept" else x[f.covariate] for f, _ in self._outcome]
            design = np.stack(cols, axis=1)
            n_max = int(counts.max())
            # pad projects to equal length when cheap: one batched matmul beats a loop over blocks
            self._padded = n_max * spec.P <= 2 * len(order)
            if self._padded:
                self._X3 = np.zeros((spec.P, n_max, design.shape[1]))
                self._y3 = np.zeros((spec.P, n_max))
                for p, sl in enumerate(self._slices):
                    self._X3[p, : sl.stop - sl.start] = design[sl]
                    self._y3[p, : sl.stop - sl.start] = self._y[sl]
                self._y = self._y3.ravel()
                self._n_pad = spec.P * n_max - len(order)
            else:
                self._blocks = [np.ascontiguousarray(design[sl]) for sl in self._slices]

        self._sub = {f.role: (f, s) for f, s in self._fams if f.submodel == EXEC_SUBMODEL}
        if self._sub:
            e = x["exec"]
            c = x[self._sub["slope"][0].covariate] if "slope" in self._sub else np.zeros_like(e)
            stat = lambda v: np.add.reduceat(v, bounds[:-1])  # noqa: E731
            self._se, self._sc = stat(e), stat(c)
            self._see, self._scc, self._sec = stat(e * e), stat(c * c), stat(e * c)

    def _per_project(self, fam: Family, vals: np.ndarray) -> np.ndarray:
        return vals if fam.varying else np.full(self.spec.P, vals[0])

    def _collapse(self, fam: Family, per_project: np.ndarray) -> np.ndarray | float:
        return per_project if fam.varying else per_project.sum()

    def _constrained(self, q: np.ndarray) -> np.ndarray:
        c = q.copy()
        c[self._positive] = np.exp(q[self._positive])
        return c

    def _eta(self, c: np.ndarray) -> np.ndarray:
        coef = np.stack([self._per_project(f, c[s]) for f, s in self._outcome], axis=1)
        if self._padded:
            return np.matmul(self._X3, coef[:, :, None]).ravel()
        return np.concatenate([b @ k for b, k in zip(self._blocks, coef)])

    # --- prior
    def log_prior(self, q: np.ndarray) -> float:
        return sum(f.prior.logp_unconstrained(q[s]) for f, s in self._fams)

    def grad_log_prior(self, q: np.ndarray) -> np.ndarray:
        g = np.empty(self.dim)
        for f, s in self._fams:
            g[s] = f.prior.grad_unconstrained(q[s])
        return g

    # --- likelihood
    def _require_data(self) -> None:
        if self.data is None:
            raise ShapeMismatch("log likelihood needs data")

    def log_likelihood(self, q: np.ndarray) -> float:
        self._require_data()
        c = self._constrained(q)
        total = 0.0
        if self._outcome:
            if self._cache_q is not None and np.array_equal(q, self._cache_q):
                eta = self._cache_eta
            else:
                eta = self._eta(c)
            # sum of y*eta - softplus(eta), with softplus(x) = (x + |x|)/2 + log1p(exp(-|x|))
            a = np.abs(eta)
            total += float(self._y @ eta - 0.5 * (eta.sum() + a.sum()) - np.log1p(np.exp(-a)).sum())
            if self._padded:
                total += self._n_pad * math.log(2.0)  # padded rows have eta = 0
        if self._sub:
            total += self._sub_loglik(c)
        return total

    def _sub_terms(self, c: np.ndarray):
        fi, si = self._sub["intercept"]
        fs, ss = self._sub["scale"]
        nu = self._per_project(fi, c[si])
        sigma = self._per_project(fs, c[ss])
        lam = self._per_project(self._sub["slope"][0], c[self._sub["slope"][1]]) if "slope" in self._sub else 0.0
        n = self._n
        # per-project sum of squared residuals, expanded in sufficient statistics
        sq = (
            self._see
            - 2.0 * nu * self._se
            - 2.0 * lam * self._sec
            + n * nu * nu
            + 2.0 * nu * lam * self._sc
            + lam * lam * self._scc
        )
        return nu, lam, sigma, np.maximum(sq, 0.0)

    def _sub_loglik(self, c: np.ndarray) -> float:
        _, _, sigma, sq = self._sub_terms(c)
        n = self._n
        return float(np.sum(-n * np.log(sigma) - 0.5 * n * LOG_2PI - 0.5 * sq / (sigma * sigma)))

    def grad_log_likelihood(self, q: np.ndarray) -> np.ndarray:
        self._require_data()
        c = self._constrained(q)
        g = np.zeros(self.dim)
        if self._outcome:
            eta = self._eta(c)
            self._cache_q, self._cache_eta = q.copy(), eta
            with np.errstate(over="ignore"):
                resid = self._y - 1.0 / (1.0 + np.exp(-eta))
            if self._padded:
                per = np.matmul(resid.reshape(self.spec.P, 1, -1), self._X3)[:, 0, :]
            else:
                per = np.stack([resid[sl] @ b for sl, b in zip(self._slices, self._blocks)])
            for k, (f, s) in enumerate(self._outcome):
                g[s] = self._collapse(f, per[:, k])
        if self._sub:
            nu, lam, sigma, sq = self._sub_terms(c)
            n = self._n
            inv_var = 1.0 / (sigma * sigma)
            fi, si = self._sub["intercept"]
            g[si] = self._collapse(fi, (self._se - n * nu - lam * self._sc) * inv_var)
            if "slope" in self._sub:
                fl, sl = self._sub["slope"]
                g[sl] = self._collapse(fl, (self._sec - nu * self._sc - lam * self._scc) * inv_var)
            fs, ss = self._sub["scale"]
            # d/dsigma; the exp chain rule is applied below with the other positive slots
            g[ss] = self._collapse(fs, -n / sigma + sq * inv_var / sigma)
        g[self._positive] *= c[self._positive]
        return g

    # --- posterior
    def logp(self, q: np.ndarray) -> float:
        lp = self.log_prior(q)
        return lp + self.log_likelihood(q) if self.data is not None else lp

    def grad(self, q: np.ndarray) -> np.ndarray:
        g = self.grad_log_prior(q)
        return g + self.grad_log_likelihood(q) if self.data is not None else g

    def logp_and_grad(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        g = self.grad(q)
        return self.logp(q), g

    def constrain(self, q: np.ndarray) -> np.ndarray:
        return to_constrained(self.spec, q)


# --- functional API -----------------------------------------------------------------


def log_prior(spec: ModelSpec, p: ParameterVector | np.ndarray) -> float:
    """Sum of prior log densities plus the log-Jacobian of each positivity transform."""
    return LogPosterior(spec).log_prior(_as_values(spec, p))


def log_likelihood(spec: ModelSpec, p: ParameterVector | np.ndarray, data: TransformedDataset) -> float:
    return LogPosterior(spec, data).log_likelihood(_as_values(spec, p))


def log_posterior(spec: ModelSpec, p: ParameterVector | np.ndarray, data: TransformedDataset) -> float:
    return LogPosterior(spec, data).logp(_as_values(spec, p))


def grad_log_posterior(spec: ModelSpec, p: ParameterVector | np.ndarray, data: TransformedDataset) -> np.ndarray:
    """Analytic gradient of log prior + log likelihood w.r.t. the unconstrained vector."""
    return LogPosterior(spec, data).grad(_as_values(spec, p))


def prior_sample(spec: ModelSpec, seed: int | np.random.Generator) -> ParameterVector:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = np.empty(spec.n_params)
    for f in spec.families:
        s = spec.slice_of(f.name)
        draw = f.prior.sample(rng, s.stop - s.start)
        v[s] = np.log(draw) if f.prior.positive else draw
    return ParameterVector(spec, v)


def prior_draws(spec: ModelSpec, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """``n`` constrained prior draws, shape (n, n_params)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = np.empty((n, spec.n_params))
    for f in spec.families:
        s = spec.slice_of(f.name)
        out[:, s] = f.prior.sample(rng, n * (s.stop - s.start)).reshape(n, -1)
    return out


def linear_predictor(spec: ModelSpec, constrained: Mapping[str, np.ndarray], data: TransformedDataset) -> np.ndarray:
    """logit(theta_i) for each record; ``constrained`` values may carry a leading draw axis."""
    eta = None
    for f in spec.families:
        if f.submodel != OUTCOME:
            continue
        vals = np.asarray(constrained[f.name], dtype=float)
        per_record = vals[..., data.project_index] if f.varying else vals[..., :1]
        term = per_record * data.covariate(f.covariate) if f.role == "slope" else per_record
        eta = term if eta is None else eta + term
    if eta is None:
        raise ShapeMismatch(f"model {spec.name!r} has no outcome sub-model")
    return eta
