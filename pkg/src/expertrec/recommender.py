"""Similarity classifier over expert states and the expert-policy recommender built on it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import ExpertStateRecord, corpus_descriptor
from .domain import Slate, Video
from .irl import Discretizer, realize_action


@dataclass(frozen=True)
class ClassifierConfig:
    th1: float = 0.5  # interest margin
    th2: float = 0.1  # corpus margin
    nearest: bool = False

    def __post_init__(self):
        if self.th1 < 0 or self.th2 < 0:
            raise ValueError("margins must be nonnegative")


class StateIndex:
    """Expert states as dense arrays, in dataset order."""

    def __init__(self, records: Sequence[ExpertStateRecord]):
        self.records = list(records)
        if self.records:
            self.e_s = np.array([r.e_s for r in self.records])
            self.e_c = np.array([r.e_c for r in self.records])
            self._norm_s = (self.e_s ** 2).sum(axis=1)
        else:
            self.e_s = self.e_c = None

    def __len__(self):
        return len(self.records)

    def classify(self, u_i, u_c, config: ClassifierConfig = ClassifierConfig()) -> Optional[int]:
        """Index of the first record within both margins (or the nearest one if configured)."""
        if not self.records:
            return None
        u_i = np.asarray(u_i, dtype=float)
        u_c = np.asarray(u_c, dtype=float)
        if u_i.shape != self.e_s.shape[1:] or u_c.shape != self.e_c.shape[1:]:
            raise ValueError(f"user state layout {u_i.shape}/{u_c.shape} does not match dataset "
                             f"{self.e_s.shape[1:]}/{self.e_c.shape[1:]}")
        # cheap squared-distance prefilter with slack, then exact distances on the survivors
        uu = float(u_i @ u_i)
        slack = 1e-9 * (1.0 + self._norm_s.max() + uu)
        approx = self._norm_s - 2.0 * (self.e_s @ u_i) + uu
        cand = np.flatnonzero(approx <= config.th1 ** 2 + slack)
        if not cand.size:
            return None
        d1 = np.sqrt(((self.e_s[cand] - u_i) ** 2).sum(axis=1))
        d2 = np.sqrt(((self.e_c[cand] - u_c) ** 2).sum(axis=1))
        ok = (d1 <= config.th1) & (d2 <= config.th2)
        if not ok.any():
            return None
        if config.nearest:
            best = np.flatnonzero(ok)
            return int(cand[best[np.argmin(d1[best] ** 2 + d2[best] ** 2)]])
        return int(cand[ok.argmax()])


def classify(u_i, u_c, dataset, config: ClassifierConfig = ClassifierConfig()) -> Optional[ExpertStateRecord]:
    index = dataset if isinstance(dataset, StateIndex) else StateIndex(dataset)
    i = index.classify(u_i, u_c, config)
    return None if i is None else index.records[i]


def random_slate(corpus: Sequence[Video], k: int, rng: np.random.Generator) -> Slate:
    if len(corpus) < k:
        raise ValueError("corpus smaller than slate size")
    picks = rng.choice(len(corpus), size=k, replace=False)
    return Slate(tuple(corpus[int(i)].id for i in picks))


class FebrAgent:
    """Follows the learned expert policy when the user state matches an expert state."""

    name = "febr"

    def __init__(self, dataset, disc: Discretizer, rng: np.random.Generator,
                 config: ClassifierConfig = ClassifierConfig()):
        self.index = dataset if isinstance(dataset, StateIndex) else StateIndex(dataset)
        self.disc = disc
        self.rng = rng
        self.config = config
        self.last_guided = False
        self.last_match: Optional[ExpertStateRecord] = None

    def recommend(self, obs) -> Slate:
        k = self.disc.slate_size
        if len(obs.corpus) < k:
            raise ValueError("corpus smaller than slate size")
        u_c = corpus_descriptor(obs.corpus, self.disc.n_topics)
        i = self.index.classify(obs.user.interests, u_c, self.config)
        if i is None:
            self.last_guided = False
            self.last_match = None
            return random_slate(obs.corpus, k, self.rng)
        rec = self.index.records[i]
        self.last_guided = True
        self.last_match = rec
        return realize_action(rec.policy_action, obs.corpus, obs.user.dominant_topic, self.disc)
