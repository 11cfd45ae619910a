"""Core value types: videos, slates, responses, and the video catalog."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import ndtri

DEFAULT_N_TOPICS = 8
DEFAULT_VIDEO_LENGTH = 4.0
EVAL_FEATURES = ("pedagogy", "accuracy", "importance", "entertainment")
CATALOG_COLUMNS = ("id", "topic", "length", "latent_quality", "evaluated", "evaluated_quality")


def clamp(x: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return float(min(max(x, lo), hi))


def check_topic(topic: int, n_topics: int) -> int:
    if not 0 <= topic < n_topics:
        raise ValueError(f"topic {topic} outside [0, {n_topics})")
    return topic


@dataclass(frozen=True)
class Video:
    id: int
    topic: int
    length: float = DEFAULT_VIDEO_LENGTH
    latent_quality: float = 0.0
    evaluated: bool = False
    evaluated_quality: Optional[float] = None

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("video length must be positive")
        if not -1.0 <= self.latent_quality <= 1.0:
            raise ValueError("latent_quality outside [-1, 1]")
        if self.evaluated:
            if self.evaluated_quality is None or not -1.0 <= self.evaluated_quality <= 1.0:
                raise ValueError("evaluated video needs evaluated_quality in [-1, 1]")


def video_score(v: Video) -> float:
    """Expert evaluation overrides the latent quality once present."""
    if v.evaluated:
        return float(v.evaluated_quality)
    return float(v.latent_quality)


@dataclass(frozen=True)
class Slate:
    items: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise ValueError(f"duplicate video ids in slate {self.items}")

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class EvaluationFeatures:
    pedagogy: float = 0.0
    accuracy: float = 0.0
    importance: float = 0.0
    entertainment: float = 0.0

    def __post_init__(self):
        for name in EVAL_FEATURES:
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} outside [-1, 1]")

    def values(self) -> tuple[float, float, float, float]:
        return (self.pedagogy, self.accuracy, self.importance, self.entertainment)

    def mean(self) -> float:
        return sum(self.values()) / 4.0


@dataclass(frozen=True)
class Response:
    """Feedback for one presented slate. ``clicked`` indexes into the slate; None is the null item."""

    clicked: Optional[int] = None
    watch_time: float = 0.0
    engagement_rate: float = 0.0
    observed_quality: float = 0.0
    topic: Optional[int] = None
    video_id: Optional[int] = None
    evaluation: Optional[EvaluationFeatures] = None

    def __post_init__(self):
        if self.watch_time < 0:
            raise ValueError("negative watch time")
        if (self.clicked is None) != (self.watch_time == 0):
            raise ValueError("watch_time must be zero exactly when nothing is clicked")
        if not 0.0 <= self.engagement_rate <= 1.0:
            raise ValueError("engagement_rate outside [0, 1]")
        if not -1.0 <= self.observed_quality <= 1.0:
            raise ValueError("observed_quality outside [-1, 1]")


NO_CLICK = Response()


class Catalog:
    """Column store of every video in an experiment.

    Corpora are sampled from it at every step, so the per-video attributes
    are kept as numpy arrays; :meth:`video` materialises a :class:`Video`.
    Expert evaluations are the only mutation.
    """

    def __init__(self, topic, length, latent_quality, evaluated=None, evaluated_quality=None,
                 n_topics: int = DEFAULT_N_TOPICS):
        self.topic = np.asarray(topic, dtype=np.int64)
        n = len(self.topic)
        self.length = np.asarray(length, dtype=float)
        self.latent_quality = np.asarray(latent_quality, dtype=float)
        self.evaluated = (np.zeros(n, dtype=bool) if evaluated is None
                          else np.asarray(evaluated, dtype=bool).copy())
        self.evaluated_quality = (np.zeros(n) if evaluated_quality is None
                                  else np.asarray(evaluated_quality, dtype=float).copy())
        self.n_topics = n_topics
        self._topic_ids = None
        if n == 0:
            raise ValueError("empty catalog")
        if self.topic.min() < 0 or self.topic.max() >= n_topics:
            raise ValueError("topic id out of range")

    def __len__(self):
        return len(self.topic)

    def video(self, i: int) -> Video:
        i = int(i)
        ev = bool(self.evaluated[i])
        return Video(i, int(self.topic[i]), float(self.length[i]), float(self.latent_quality[i]),
                     ev, float(self.evaluated_quality[i]) if ev else None)

    def videos(self, ids: Iterable[int]) -> list[Video]:
        return [self.video(i) for i in ids]

    @property
    def scores(self) -> np.ndarray:
        return np.where(self.evaluated, self.evaluated_quality, self.latent_quality)

    def update(self, v: Video) -> None:
        self.evaluated[v.id] = v.evaluated
        self.evaluated_quality[v.id] = v.evaluated_quality if v.evaluated else 0.0

    def copy(self) -> "Catalog":
        return Catalog(self.topic.copy(), self.length.copy(), self.latent_quality.copy(),
                       self.evaluated, self.evaluated_quality, self.n_topics)

    def _topic_table(self):
        """Video ids grouped by topic, padded to a (n_topics, max count) array, plus counts."""
        if self._topic_ids is None:
            groups = [np.flatnonzero(self.topic == t) for t in range(self.n_topics)]
            counts = np.array([len(g) for g in groups])
            table = np.zeros((self.n_topics, max(counts.max(), 1)), dtype=np.int64)
            for t, g in enumerate(groups):
                table[t, :len(g)] = g
            self._topic_ids = (table, counts)
        return self._topic_ids

    def sample_corpus(self, interests: np.ndarray, size: int, rng: np.random.Generator,
                      noise: float = 0.1) -> list[Video]:
        """Top-``size`` videos by interest in their topic plus Normal(0, noise) jitter.

        Only each topic's ``size`` largest jitters can reach the top, so those
        are drawn directly as normal order statistics and attached to a
        uniformly random subset of the topic's videos. This has the same
        distribution as jittering every video, at a cost independent of the
        catalog size. Catalogs with sparsely populated topics use the
        exhaustive form.
        """
        if size > len(self):
            raise ValueError("corpus larger than catalog")
        interests = np.asarray(interests, dtype=float)
        table, counts = self._topic_table()
        live = counts > 0
        if noise <= 0 or counts[live].min() < 4 * size:
            return self.sample_corpus_exhaustive(interests, size, rng, noise)
        n = counts[live][:, None]
        j = np.arange(size)
        # descending order statistics of n uniforms: log U_(n-j) = sum_{i<=j} log(V_i) / (n - i)
        log_u = np.cumsum(np.log(rng.random((len(n), size))) / (n - j), axis=1)
        jitter = -noise * ndtri(-np.expm1(log_u))  # Phi^-1(U) = -Phi^-1(1 - U), accurate near U = 1
        picks = _distinct_rows(rng, n[:, 0], size)
        ids = np.take_along_axis(table[live], picks, axis=1).ravel()
        affinity = (interests[live][:, None] + jitter).ravel()
        top = np.argsort(-affinity, kind="stable")[:size]
        return self.videos(ids[top])

    def sample_corpus_exhaustive(self, interests: np.ndarray, size: int, rng: np.random.Generator,
                                 noise: float = 0.1) -> list[Video]:
        """Reference retrieval: jitter every video and keep the top ``size``."""
        if size > len(self):
            raise ValueError("corpus larger than catalog")
        affinity = np.asarray(interests, dtype=float)[self.topic]
        if noise > 0:
            affinity = affinity + rng.normal(0.0, noise, len(self))
        top = np.argpartition(-affinity, size - 1)[:size]
        top = top[np.lexsort((top, -affinity[top]))]
        return self.videos(top)


def _distinct_rows(rng: np.random.Generator, n: np.ndarray, k: int) -> np.ndarray:
    """Row r holds k distinct indices drawn uniformly from range(n[r]), in random order."""
    out = rng.integers(0, n[:, None], (len(n), k))
    while True:
        srt = np.sort(out, axis=1)
        bad = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
        if not bad.size:
            return out
        out[bad] = rng.integers(0, n[bad, None], (len(bad), k))


def sample_catalog(seed, size: int, n_topics: int = DEFAULT_N_TOPICS,
                   length: float = DEFAULT_VIDEO_LENGTH) -> Catalog:
    if size < 1:
        raise ValueError("catalog size must be >= 1")
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    rng = np.random.default_rng(seed)
    topic = rng.integers(0, n_topics, size)
    quality = rng.uniform(-1.0, 1.0, size)
    return Catalog(topic, np.full(size, float(length)), quality, n_topics=n_topics)


def save_catalog(catalog: Catalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CATALOG_COLUMNS)
        for i in range(len(catalog)):
            ev = bool(catalog.evaluated[i])
            w.writerow([i, int(catalog.topic[i]), repr(float(catalog.length[i])),
                        repr(float(catalog.latent_quality[i])), int(ev),
                        repr(float(catalog.evaluated_quality[i])) if ev else ""])


def load_catalog(path, n_topics: int = DEFAULT_N_TOPICS) -> Catalog:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CATALOG_COLUMNS:
        raise ValueError(f"{path}: bad catalog header")
    body = rows[1:]
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(CATALOG_COLUMNS) or int(r[0]) != lineno - 2:
            raise ValueError(f"{path}:{lineno}: malformed catalog row")
    return Catalog([int(r[1]) for r in body], [float(r[2]) for r in body],
                   [float(r[3]) for r in body], [r[4] == "1" for r in body],
                   [float(r[5]) if r[5] else 0.0 for r in body], n_topics=n_topics)


def slate_videos(slate: Slate, corpus: Sequence[Video]) -> list[Video]:
    by_id = {v.id: v for v in corpus}
    return [by_id[i] for i in slate.items]


def with_evaluation(v: Video, quality: float) -> Video:
    return replace(v, evaluated=True, evaluated_quality=clamp(quality))
