"""Posterior draws, their diagnostics, and CSV / JSON export."""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import TransformedDataset
from .diagnostics import DiagnosticWarning, effective_sample_size, split_rhat
from .errors import ParseError, ShapeMismatch, UnknownFamily
from .model import LogPosterior, ModelSpec, to_constrained
from .sampler import ChainConfig, sample

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PosteriorSamples:
    """Retained draws on the constrained scale, shape (iterations, chains, params)."""

    draws: np.ndarray
    names: tuple[str, ...]
    spec: ModelSpec | None = None
    accept_rate: np.ndarray = field(default_factory=lambda: np.empty(0))
    divergences: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    step_size: np.ndarray = field(default_factory=lambda: np.empty(0))
    mean_steps: np.ndarray = field(default_factory=lambda: np.empty(0))
    config: dict = field(default_factory=dict)
    rhat: np.ndarray = field(init=False)
    ess: np.ndarray = field(init=False)
    ess_capped: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        d = np.asarray(self.draws, dtype=float)
        if d.ndim != 3 or d.shape[2] != len(self.names):
            raise ShapeMismatch(f"draws shape {d.shape} does not match {len(self.names)} names")
        if not np.all(np.isfinite(d)):
            raise ValueError("draws must be finite")
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)
        rhat = np.full(d.shape[2], math.nan)
        ess = np.full(d.shape[2], math.nan)
        capped = np.zeros(d.shape[2], dtype=bool)
        if d.shape[1] >= 2 and d.shape[0] >= 4:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DiagnosticWarning)
                for k in range(d.shape[2]):
                    rhat[k] = split_rhat(d[:, :, k])
                    ess[k], capped[k] = effective_sample_size(d[:, :, k])
        object.__setattr__(self, "rhat", rhat)
        object.__setattr__(self, "ess", ess)
        object.__setattr__(self, "ess_capped", capped)

    @property
    def n_iterations(self) -> int:
        return self.draws.shape[0]

    @property
    def n_chains(self) -> int:
        return self.draws.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownFamily(f"no parameter {name!r}") from None

    def param(self, name: str) -> np.ndarray:
        """Draws of one parameter, shape (iterations, chains)."""
        return self.draws[:, :, self.index(name)]

    def family(self, name: str) -> np.ndarray:
        """Pooled draws of a family, shape (iterations * chains, width)."""
        if self.spec is None:
            raise UnknownFamily("samples carry no model spec")
        s = self.spec.slice_of(name)
        return self.draws[:, :, s].reshape(-1, s.stop - s.start)

    def flat(self) -> np.ndarray:
        """All draws pooled over chains, shape (iterations * chains, params)."""
        return self.draws.reshape(-1, self.draws.shape[2])

    def constrained(self) -> dict[str, np.ndarray]:
        """Family name -> pooled draws, for use with ``linear_predictor``."""
        return {f.name: self.family(f.name) for f in self.spec.families}

    # --- export
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["chain", "iteration", *self.names])
        for c in range(self.n_chains):
            for i in range(self.n_iterations):
                w.writerow([c, i, *(repr(float(v)) for v in self.draws[i, c])])
        return buf.getvalue()

    def diagnostics(self) -> dict:
        nan = lambda v: None if not math.isfinite(v) else float(v)  # noqa: E731
        return {
            "format_version": FORMAT_VERSION,
            "model": self.spec.name if self.spec else None,
            "iterations": self.n_iterations,
            "chains": self.n_chains,
            "config": self.config,
            "accept_rate": [float(a) for a in self.accept_rate],
            "divergences": [int(x) for x in self.divergences],
            "step_size": [float(x) for x in self.step_size],
            "mean_leapfrog_steps": [float(x) for x in self.mean_steps],
            "parameters": {
                n: {"rhat": nan(self.rhat[k]), "ess": nan(self.ess[k]), "ess_capped": bool(self.ess_capped[k])}
                for k, n in enumerate(self.names)
            },
        }

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics(), indent=2)

    @classmethod
    def from_csv(cls, text: str, spec: ModelSpec | None = None) -> "PosteriorSamples":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:2] != ["chain", "iteration"]:
            raise ParseError("draws file must start with chain,iteration columns", row=1)
        names = tuple(rows[0][2:])
        if spec is not None and tuple(spec.param_names()) != names:
            raise ShapeMismatch("draws columns do not match the model parameters")
        try:
            body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        except ValueError as exc:
            raise ParseError(f"non-numeric value in draws: {exc}") from None
        if body.size == 0:
            raise ParseError("draws file has no rows", row=2)
        chains = body[:, 0].astype(int)
        m = chains.max() + 1
        n = int(np.sum(chains == 0))
        if body.shape[0] != n * m:
            raise ShapeMismatch("chains have unequal lengths")
        draws = np.empty((n, m, len(names)))
        for c in range(m):
            block = body[chains == c]
            draws[block[:, 1].astype(int), c] = block[:, 2:]
        return cls(draws, names, spec)


def run_chains(spec: ModelSpec, data: TransformedDataset | None, cfg: ChainConfig | None = None) -> PosteriorSamples:
    """Sample the posterior of ``spec`` given ``data`` (``None`` samples the prior)."""
    cfg = cfg or ChainConfig()
    target = LogPosterior(spec, data)
    results = sample(target, cfg)
    draws = np.stack([to_constrained(spec, r.draws) for r in results], axis=1)
    return PosteriorSamples(
        draws,
        tuple(spec.param_names()),
        spec,
        accept_rate=np.array([r.accept_prob.mean() for r in results]),
        divergences=np.array([int(r.divergent.sum()) for r in results]),
        step_size=np.array([r.step_size for r in results]),
        mean_steps=np.array([r.n_steps.mean() for r in results]),
        config=cfg.to_dict(),
    )


def r_hat(samples: PosteriorSamples, param: str) -> float:
    return split_rhat(samples.param(param))


def ess(samples: PosteriorSamples, param: str) -> float:
    return effective_sample_size(samples.param(param))[0]
