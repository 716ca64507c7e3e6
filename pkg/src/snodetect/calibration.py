"""Score calibration for two-class detectors.

Converts between posterior probability, likelihood-ratio product and log-odds
forms, and shifts posteriors to a different prior odds ratio. A classifier
trained at prior odds O can be rescored for deployment odds O' by adding
log(O') - log(O) to the logit; the mapping is strictly monotone, so score
rankings are untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class OddsSpec:
    """Prior odds at training time and at deployment time."""

    train_odds: float
    deploy_odds: float

    def __post_init__(self) -> None:
        for name, value in (("train_odds", self.train_odds), ("deploy_odds", self.deploy_odds)):
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and > 0, got {value}")

    @property
    def bias(self) -> float:
        """Logit shift applied when moving from training odds to deployment odds."""
        return math.log(self.deploy_odds) - math.log(self.train_odds)


def _sigmoid(z: float) -> float:
    # branch keeps exp() arguments non-positive: no overflow at any |z|
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def posterior_from_llr(llr: float, log_odds: float) -> float:
    """Posterior probability from a log-likelihood ratio plus log prior odds."""
    if not (math.isfinite(llr) and math.isfinite(log_odds)):
        raise ValueError(f"llr and log_odds must be finite, got ({llr}, {log_odds})")
    return _sigmoid(llr + log_odds)


def lr_odds_product(posterior: float) -> float:
    """The likelihood-ratio times prior-odds product: p / (1 - p)."""
    if not 0.0 < posterior < 1.0:
        raise ValueError(f"posterior must lie strictly in (0, 1), got {posterior}")
    return posterior / (1.0 - posterior)


def recalibrate(posterior: float, odds: OddsSpec, clamp: bool = False) -> float:
    """Shift a posterior from the training prior odds to the deployment ones.

    Posteriors of exactly 0 or 1 are rejected; pass clamp=True to pull them
    to within 1e-12 first (off by default so upstream saturation is visible).
    """
    if clamp:
        posterior = min(max(posterior, 1e-12), 1.0 - 1e-12)
    if not 0.0 < posterior < 1.0:
        raise ValueError(f"posterior must lie strictly in (0, 1), got {posterior}")
    if odds.bias == 0.0:
        return posterior
    return _sigmoid(_logit(posterior) + odds.bias)
