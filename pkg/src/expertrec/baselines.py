"""Comparison agents. All run against the unmodified user environment.

Agents that do not use expert evaluations look at videos through
``quality_view``: by default the inherent (latent) quality, never the
expert-assigned one.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import Response, Slate, Video, video_score
from .irl import Discretizer, encode_state, realize_action
from .recommender import random_slate
from .user_env import Observation, UserEnvConfig, user_utilities


def latent_view(v: Video) -> float:
    return v.latent_quality


QUALITY_VIEWS: dict[str, Callable[[Video], float]] = {"latent": latent_view, "score": video_score}


def corpus_topic(corpus: Sequence[Video]) -> int:
    """Most frequent topic in the corpus, lowest id on ties."""
    counts = Counter(v.topic for v in corpus)
    return min(counts, key=lambda t: (-counts[t], t))


class RandomAgent:
    name = "random"
    last_guided = False

    def __init__(self, k: int, rng: np.random.Generator):
        self.k = k
        self.rng = rng

    def recommend(self, obs: Observation) -> Slate:
        return random_slate(obs.corpus, self.k, self.rng)


class QTable:
    def __init__(self, n_states: int, n_actions: int, lr: float = 0.1, gamma: float = 0.5):
        self.q = np.zeros((n_states, n_actions))
        self.lr = lr
        self.gamma = gamma

    def greedy(self, s: int) -> int:
        return int(np.argmax(self.q[s]))

    def update(self, s: int, a: int, r: float, s2: Optional[int]) -> None:
        target = r if s2 is None else r + self.gamma * self.q[s2].max()
        self.q[s, a] += self.lr * (target - self.q[s, a])


class RecFSQAgent:
    """Full-slate tabular Q-learning over abstract actions, epsilon-greedy."""

    name = "recfsq"
    last_guided = False

    def __init__(self, disc: Discretizer, rng: np.random.Generator, lr: float = 0.1, gamma: float = 0.5,
                 epsilon: float = 0.1, epsilon_decay: float = 0.999, epsilon_min: float = 0.01,
                 quality_weight: float = 1.0, quality_view: str = "latent"):
        self.disc = disc
        self.rng = rng
        self.table = QTable(disc.n_states, disc.n_actions, lr, gamma)
        self.epsilon = epsilon
        self.epsilon_decay = epsilon_decay
        self.epsilon_min = epsilon_min
        self.quality_weight = quality_weight
        self.view = QUALITY_VIEWS[quality_view]
        self._pending = None
        self._action = None

    def act(self, s: int) -> int:
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(self.disc.n_actions))
        return self.table.greedy(s)

    def recommend(self, obs: Observation) -> Slate:
        s = encode_state(obs.last_response, self.disc)
        if self._pending is not None:
            self.table.update(*self._pending, s)
            self._pending = None
        a = self.act(s)
        self._action = (s, a)
        return realize_action(a, obs.corpus, corpus_topic(obs.corpus), self.disc, self.view)

    def reward(self, obs: Observation, slate: Slate, response: Response) -> float:
        if response.clicked is None:
            return 0.0
        v = next(v for v in obs.corpus if v.id == slate.items[response.clicked])
        return response.watch_time + self.quality_weight * self.view(v)

    def feedback(self, obs: Observation, slate: Slate, response: Response) -> None:
        s, a = self._action
        self._pending = (s, a, self.reward(obs, slate, response))

    def end_session(self) -> None:
        if self._pending is not None:
            self.table.update(*self._pending, None)
            self._pending = None
        self.epsilon = max(self.epsilon_min, self.epsilon * self.epsilon_decay)


class RecPCTRAgent:
    """Myopic: the k items with the highest click probability under the true user model."""

    name = "recpctr"
    last_guided = False

    def __init__(self, k: int, config: UserEnvConfig = UserEnvConfig()):
        self.k = k
        self.config = config

    def recommend(self, obs: Observation) -> Slate:
        u = user_utilities(obs.corpus, obs.user, self.config)
        order = sorted(range(len(obs.corpus)), key=lambda i: (-u[i], obs.corpus[i].id))
        return Slate(tuple(obs.corpus[i].id for i in order[:self.k]))


class TopicUCB:
    """UCB1 over topics; arms never pulled come first, lowest id first."""

    def __init__(self, n_arms: int, c: float = math.sqrt(2)):
        self.counts = np.zeros(n_arms, dtype=np.int64)
        self.sums = np.zeros(n_arms)
        self.c = c

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def select(self, available: Optional[Sequence[int]] = None) -> int:
        arms = sorted(set(available)) if available is not None else range(len(self.counts))
        for a in arms:
            if self.counts[a] == 0:
                return a
        log_n = math.log(self.total)
        return max(arms, key=lambda a: (self.sums[a] / self.counts[a]
                                        + self.c * math.sqrt(log_n / self.counts[a]), -a))

    def update(self, arm: int, reward: float) -> None:
        self.counts[arm] += 1
        self.sums[arm] += reward


class RecBanditAgent:
    """UCB over topic engagement; best-quality items within the chosen topic."""

    name = "recbandit"
    last_guided = False

    def __init__(self, n_topics: int, k: int, c: float = math.sqrt(2), quality_view: str = "latent"):
        self.ucb = TopicUCB(n_topics, c)
        self.k = k
        self.view = QUALITY_VIEWS[quality_view]
        self._topic = None

    def recommend(self, obs: Observation) -> Slate:
        topic = self.ucb.select({v.topic for v in obs.corpus})
        self._topic = topic
        ranked = sorted(obs.corpus, key=lambda v: (v.topic != topic, -self.view(v), v.id))
        return Slate(tuple(v.id for v in ranked[:self.k]))

    def feedback(self, obs: Observation, slate: Slate, response: Response) -> None:
        hit = response.clicked is not None and response.topic == self._topic
        self.ucb.update(self._topic, response.engagement_rate if hit else 0.0)


class RecNaiveAgent:
    """Random picks among highly rated corpus videos on topics the user likes."""

    name = "recnaive"
    last_guided = False

    def __init__(self, k: int, rng: np.random.Generator, rating_threshold: float = 0.5):
        self.k = k
        self.rng = rng
        self.rating_threshold = rating_threshold

    def qualifying(self, obs: Observation) -> list[Video]:
        return [v for v in obs.corpus
                if v.evaluated and v.evaluated_quality > self.rating_threshold
                and obs.user.interests[v.topic] > 0]

    def recommend(self, obs: Observation) -> Slate:
        pool = self.qualifying(obs)
        if len(pool) < self.k:
            return random_slate(obs.corpus, self.k, self.rng)
        return random_slate(pool, self.k, self.rng)
