"""Finite state/action encoding of sessions.

A state is the last click (topic, quality bin, engagement bin), or the
"nothing clicked yet" state 0.  An action is a multiset of per-item
descriptors (on dominant topic?, quality bin), which keeps the action set
stationary even though corpora change at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement
from typing import Callable, Optional, Sequence

import numpy as np

from ..domain import DEFAULT_N_TOPICS, Response, Slate, Video, video_score

INITIAL_STATE = 0


@dataclass(frozen=True)
class Discretizer:
    n_topics: int = DEFAULT_N_TOPICS
    quality_edges: tuple[float, ...] = (-1.0, -0.5, 0.0, 0.5, 1.0)
    engagement_bins: int = 2
    slate_size: int = 2

    def __post_init__(self):
        e = self.quality_edges
        if len(e) < 2 or e[0] != -1.0 or e[-1] != 1.0 or any(b <= a for a, b in zip(e, e[1:])):
            raise ValueError(f"quality edges must increase strictly from -1 to 1: {e}")
        if self.engagement_bins < 1 or self.n_topics < 1 or self.slate_size < 1:
            raise ValueError("bin counts must be positive")

    @property
    def quality_bins(self) -> int:
        return len(self.quality_edges) - 1

    @property
    def n_states(self) -> int:
        return 1 + self.n_topics * self.quality_bins * self.engagement_bins

    @property
    def n_descriptors(self) -> int:
        return 2 * self.quality_bins

    @cached_property
    def actions(self) -> tuple[tuple[int, ...], ...]:
        return tuple(combinations_with_replacement(range(self.n_descriptors), self.slate_size))

    @cached_property
    def _action_index(self) -> dict:
        return {a: i for i, a in enumerate(self.actions)}

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def quality_bin(self, q: float) -> int:
        inner = self.quality_edges[1:-1]
        return int(np.searchsorted(inner, q, side="right"))

    def bin_center(self, qbin: int) -> float:
        return 0.5 * (self.quality_edges[qbin] + self.quality_edges[qbin + 1])

    def engagement_bin(self, rate: float) -> int:
        return min(int(rate * self.engagement_bins), self.engagement_bins - 1)

    # states

    def encode(self, topic: int, qbin: int, ebin: int) -> int:
        return 1 + (topic * self.quality_bins + qbin) * self.engagement_bins + ebin

    def decode(self, state: int) -> Optional[tuple[int, int, int]]:
        if not 0 <= state < self.n_states:
            raise ValueError(f"state {state} out of range")
        if state == INITIAL_STATE:
            return None
        rest, ebin = divmod(state - 1, self.engagement_bins)
        topic, qbin = divmod(rest, self.quality_bins)
        return topic, qbin, ebin

    # actions

    def descriptor(self, on_topic: bool, qbin: int) -> int:
        return int(on_topic) * self.quality_bins + qbin

    def split_descriptor(self, d: int) -> tuple[bool, int]:
        on, qbin = divmod(d, self.quality_bins)
        return bool(on), qbin

    def encode_action(self, descriptors: Sequence[int]) -> int:
        key = tuple(sorted(descriptors))
        if key not in self._action_index:
            raise ValueError(f"no action for descriptors {descriptors}")
        return self._action_index[key]

    def decode_action(self, action: int) -> tuple[int, ...]:
        return self.actions[action]


def encode_state(last_response: Optional[Response], disc: Discretizer) -> int:
    if last_response is None or last_response.clicked is None:
        return INITIAL_STATE
    return disc.encode(last_response.topic, disc.quality_bin(last_response.observed_quality),
                       disc.engagement_bin(last_response.engagement_rate))


def abstract_slate(videos: Sequence[Video], dominant_topic: int, disc: Discretizer,
                   score: Callable[[Video], float] = video_score) -> int:
    return disc.encode_action([disc.descriptor(v.topic == dominant_topic, disc.quality_bin(score(v)))
                               for v in videos])


def realize_action(action: int, corpus: Sequence[Video], dominant_topic: int, disc: Discretizer,
                   score: Callable[[Video], float] = video_score) -> Slate:
    """Concrete slate for an abstract action.

    Descriptors with an exact (topic flag, quality bin) match in the corpus
    take the matching video closest to the bin center; the rest fall back to
    the best-scoring videos left over.
    """
    if not corpus:
        raise ValueError("empty corpus")
    descs = disc.decode_action(action)
    if len(corpus) < len(descs):
        raise ValueError("corpus smaller than slate")
    scores = [score(v) for v in corpus]
    taken: list[Optional[int]] = [None] * len(descs)
    used: set[int] = set()
    for j, d in enumerate(descs):
        on, qbin = disc.split_descriptor(d)
        center = disc.bin_center(qbin)
        best = None
        for i, v in enumerate(corpus):
            if i in used or (v.topic == dominant_topic) != on or disc.quality_bin(scores[i]) != qbin:
                continue
            if best is None or abs(scores[i] - center) < abs(scores[best] - center):
                best = i
        if best is not None:
            taken[j] = best
            used.add(best)
    for j in range(len(descs)):
        if taken[j] is None:
            left = [i for i in range(len(corpus)) if i not in used]
            best = max(left, key=lambda i: scores[i])
            taken[j] = best
            used.add(best)
    return Slate(tuple(corpus[i].id for i in taken))
