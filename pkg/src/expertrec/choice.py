"""Conditional-logit choice over a slate with an optional null item."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class ChoiceConfig:
    no_click_mass: float = 1.0

    def __post_init__(self):
        if self.no_click_mass < 0:
            raise ValueError("no_click_mass must be >= 0")


def choice_probabilities(utilities: Sequence[float], no_click_mass: float) -> np.ndarray:
    """Click probability per slate item, with the no-click probability appended last."""
    u = np.asarray(utilities, dtype=float)
    if np.any(u < 0) or no_click_mass < 0:
        raise ValueError("utilities and no-click mass must be nonnegative")
    total = u.sum() + no_click_mass
    if not total > 0:
        raise ValueError("choice model has zero total mass")
    return np.append(u, no_click_mass) / total


def sample_choice(probabilities: Sequence[float], rng: np.random.Generator) -> Optional[int]:
    """Index of the chosen item, or None when the last (no-click) entry is drawn."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or len(p) < 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a probability vector: {p}")
    # inverse-cdf with one uniform keeps the rng stream length fixed per call
    i = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
    i = min(i, len(p) - 1)
    while p[i] == 0:
        i -= 1
    return None if i == len(p) - 1 else i
