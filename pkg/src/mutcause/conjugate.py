"""Closed-form Beta-Binomial posterior for a single mutation score."""
from __future__ import annotations

from dataclasses import dataclass

from scipy.stats import beta as beta_dist

from .errors import DomainError


@dataclass(frozen=True)
class BetaPosterior:
    a: float
    b: float
    level: float
    lower: float
    upper: float

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "mean": self.mean, "level": self.level, "lower": self.lower, "upper": self.upper}


def beta_binomial_posterior(prior_a: float, prior_b: float, killed: int, total: int, level: float = 0.95) -> BetaPosterior:
    """Beta(prior_a + killed, prior_b + total - killed) with an equal-tailed interval."""
    if not (prior_a > 0 and prior_b > 0):
        raise DomainError("prior shape parameters must be positive")
    if int(killed) != killed or int(total) != total or not 0 <= killed <= total:
        raise DomainError(f"need integer counts with 0 <= killed <= total, got {killed}/{total}")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    a = float(prior_a + killed)
    b = float(prior_b + total - killed)
    tail = (1.0 - level) / 2.0
    lower, upper = beta_dist.ppf([tail, 1.0 - tail], a, b)
    return BetaPosterior(a, b, level, float(lower), float(upper))
