"""Synthetic data from the Cover -> Exec -> Mutant structural causal model.

``generate_transformed`` draws directly on the model scale:

    cover_z ~ Normal(0, 1)
    exec_z  = nu + lambda * cover_z + Normal(0, sigma)
    killed  ~ Bernoulli(invlogit(alpha + beta * exec_z + gamma * cover_z))

so every model parameter has a known true value. ``generate_raw`` produces
integer counts instead. Cover is negative binomial, and each covering test runs
the mutant once plus a negative-binomial number of extra times. The kill
probability is applied to the log1p-standardized counts that ``preprocess`` will
compute, so that alpha, beta and gamma keep their meaning. nu, lambda and sigma
play no part in the raw generator.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .data import Dataset, TransformedDataset, _standardize


@dataclass(frozen=True)
class ProjectTruth:
    name: str
    alpha: float
    beta: float
    gamma: float
    nu: float = 0.0
    lam: float = 0.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"project {self.name!r}: sigma must be positive")

    @property
    def total_cover_effect(self) -> float:
        """Slope of the kill logit on cover_z with exec left to respond: gamma + lambda * beta."""
        return self.gamma + self.lam * self.beta


@dataclass(frozen=True)
class NegBinomialLaw:
    """Raw count law: cover ~ NB(cover_size, mean cover_mean); extra runs per covering test ~ NB(exec_size, mean exec_mean)."""

    cover_mean: float = 20.0
    cover_size: float = 0.6
    exec_mean: float = 30.0
    exec_size: float = 0.5

    def __post_init__(self) -> None:
        if min(self.cover_mean, self.cover_size, self.exec_mean, self.exec_size) <= 0:
            raise ValueError("negative-binomial parameters must be positive")


@dataclass(frozen=True)
class ScmConfig:
    projects: tuple[ProjectTruth, ...]
    mutants: int = 2000
    seed: int = 0
    raw_law: NegBinomialLaw = field(default_factory=NegBinomialLaw)

    def __post_init__(self) -> None:
        if not self.projects:
            raise ValueError("need at least one project")
        if self.mutants < 1:
            raise ValueError("need at least one mutant per project")
        names = [p.name for p in self.projects]
        if len(set(names)) != len(names):
            raise ValueError("project names must be unique")

    @classmethod
    def uniform(cls, n_projects: int, mutants: int = 2000, seed: int = 0, spread: float = 0.0, **truth: float) -> "ScmConfig":
        """``n_projects`` projects sharing ``truth``, with optional uniform jitter of +/- ``spread`` on alpha, beta and gamma.

        The jitter comes from a fixed-seed generator, so projects differ while the truth stays the same across data seeds.
        """
        rng = np.random.default_rng(12345)
        width = len(str(n_projects - 1))
        projects = []
        for i in range(n_projects):
            t = dict(truth)
            for key in ("alpha", "beta", "gamma"):
                t[key] = float(t.get(key, 0.0) + (rng.uniform(-spread, spread) if spread else 0.0))
            projects.append(ProjectTruth(f"proj{i:0{width}d}", **t))
        return cls(tuple(projects), mutants, seed)

    def to_dict(self) -> dict:
        return {
            "projects": [asdict(p) for p in self.projects],
            "mutants": self.mutants,
            "seed": self.seed,
            "raw_law": asdict(self.raw_law),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ScmConfig":
        return cls(
            tuple(ProjectTruth(**p) for p in d["projects"]),
            int(d.get("mutants", 2000)),
            int(d.get("seed", 0)),
            NegBinomialLaw(**d.get("raw_law", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScmConfig":
        return cls.from_dict(json.loads(text))

    def truth(self) -> dict[str, np.ndarray]:
        """True values per family, in project order, keyed like the model families."""
        get = lambda attr: np.array([getattr(p, attr) for p in self.projects])  # noqa: E731
        return {
            "alpha": get("alpha"),
            "beta": get("beta"),
            "gamma": get("gamma"),
            "nu": get("nu"),
            "lambda": get("lam"),
            "sigma": get("sigma"),
            "total_cover_effect": np.array([p.total_cover_effect for p in self.projects]),
        }

    def truth_json(self) -> str:
        t = {k: v.tolist() for k, v in self.truth().items()}
        return json.dumps({"format_version": 1, "projects": [p.name for p in self.projects], "truth": t, "config": self.to_dict()}, indent=2)


def _kill(rng: np.random.Generator, cfg: ScmConfig, idx: np.ndarray, exec_z: np.ndarray, cover_z: np.ndarray) -> np.ndarray:
    t = cfg.truth()
    eta = t["alpha"][idx] + t["beta"][idx] * exec_z + t["gamma"][idx] * cover_z
    return (rng.random(idx.size) < expit(eta)).astype(np.int8)


def generate_transformed(cfg: ScmConfig) -> tuple[TransformedDataset, dict[str, np.ndarray]]:
    rng = np.random.default_rng(cfg.seed)
    P, n = len(cfg.projects), cfg.mutants
    idx = np.repeat(np.arange(P), n)
    t = cfg.truth()
    cover_z = rng.standard_normal(P * n)
    exec_z = t["nu"][idx] + t["lambda"][idx] * cover_z + t["sigma"][idx] * rng.standard_normal(P * n)
    killed = _kill(rng, cfg, idx, exec_z, cover_z)
    names = tuple(p.name for p in cfg.projects)
    return TransformedDataset(names, idx, exec_z, cover_z, killed), t


def generate_raw(cfg: ScmConfig) -> Dataset:
    """Integer (exec, cover, killed) records satisfying exec >= cover and cover = 0 => exec = 0."""
    rng = np.random.default_rng(cfg.seed)
    law = cfg.raw_law
    P, n = len(cfg.projects), cfg.mutants
    idx = np.repeat(np.arange(P), n)
    cover = rng.negative_binomial(law.cover_size, law.cover_size / (law.cover_size + law.cover_mean), P * n).astype(np.int64)
    # a sum of `cover` independent NB(exec_size, p) draws is NB(cover * exec_size, p)
    extra = np.zeros(P * n, dtype=np.int64)
    covered = cover > 0
    p_extra = law.exec_size / (law.exec_size + law.exec_mean)
    extra[covered] = rng.negative_binomial(cover[covered] * law.exec_size, p_extra)
    exec_ = cover + extra
    names = [p.name for p in cfg.projects]
    exec_z, _, _ = _standardize(exec_, idx, P, "exec", names)
    cover_z, _, _ = _standardize(cover, idx, P, "cover", names)
    killed = _kill(rng, cfg, idx, exec_z, cover_z)
    ids = [f"m{i:06d}" for i in range(P * n)]
    return Dataset.from_records([names[i] for i in idx], ids, exec_, cover, killed)
