"""Spectral-entropy complexity measurement and the adaptive reuse budget."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DegenerateSpectrumError


@dataclass(frozen=True)
class BudgetConfig:
    """Bounds of the reuse ratio; entropy is normalized by log(bin count)."""

    alpha_min: float = 0.08
    alpha_max: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha_min <= self.alpha_max <= 1.0:
            raise ValueError(
                f"need 0 <= alpha_min <= alpha_max <= 1, got "
                f"({self.alpha_min}, {self.alpha_max})"
            )


@dataclass(frozen=True)
class EntropyReading:
    raw: float         # nats, in [0, ln(bin_count)]
    normalized: float  # raw / ln(bin_count), in [0, 1]
    bin_count: int


def spectral_entropy(amplitude, include_dc=True):
    """Shannon entropy of the normalized power spectrum.

    Power is the squared amplitude, normalized to a distribution over all
    frequency bins; zero-power bins contribute nothing. The raw entropy is
    in nats and also reported divided by log(bin count) so the reading lands
    in [0, 1] regardless of grid size. Set ``include_dc=False`` to drop the
    (0, 0) bin from the distribution.
    """
    a = np.asarray(amplitude, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("amplitude grid contains non-finite values")
    if np.any(a < 0.0):
        raise ValueError("amplitude grid must be nonnegative")
    power = (a * a).ravel().copy()
    if power.size < 2:
        raise ValueError("amplitude grid must have at least 2 bins")
    if not include_dc:
        power[0] = 0.0
    total = float(power.sum())
    if total <= 0.0:
        raise DegenerateSpectrumError("degenerate spectrum")
    p = power / total
    raw = float(-np.sum(xlogy(p, p))) + 0.0
    return EntropyReading(raw, raw / math.log(p.size), p.size)


def reuse_budget(normalized_entropy, cfg, n_tokens):
    """Map normalized entropy to a reuse ratio and a whole-token budget.

    The ratio decays exponentially from alpha_max at zero entropy toward
    alpha_min, so busier spectra get smaller budgets; the token budget is
    floor(ratio * n_tokens).
    """
    psi = float(normalized_entropy)
    if not 0.0 <= psi <= 1.0:
        raise ValueError(f"normalized entropy must lie in [0, 1], got {psi}")
    n_tokens = int(n_tokens)
    if n_tokens < 1:
        raise ValueError(f"token count must be >= 1, got {n_tokens}")
    alpha = cfg.alpha_min + (cfg.alpha_max - cfg.alpha_min) * math.exp(-psi)
    return alpha, int(math.floor(alpha * n_tokens))
