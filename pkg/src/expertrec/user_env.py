"""Interest-evolution user environment: choice, watch time, interest drift, time budget."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .choice import choice_probabilities, sample_choice
from .domain import Catalog, Response, Slate, Video, clamp, slate_videos, video_score

SESSION_COLUMNS = ("session_id", "step", "expert_guided", "clicked", "topic", "score",
                   "watch_time", "budget_after")


class SessionOver(RuntimeError):
    pass


@dataclass(frozen=True)
class UserEnvConfig:
    corpus_size: int = 5
    beta_interest: float = 2.0
    no_click_mass: float = 1.0
    browse_cost: float = 1.0
    budget_bonus: float = 0.2
    retrieval_noise: float = 0.1
    max_steps: int = 10_000


@dataclass(frozen=True)
class UserProfile:
    interests: tuple[float, ...]
    time_budget: float = 200.0
    interest_step: float = 0.05
    quality_sensitivity: float = 1.0

    def __post_init__(self):
        if any(not -1.0 <= x <= 1.0 for x in self.interests):
            raise ValueError("interests outside [-1, 1]")

    @property
    def dominant_topic(self) -> int:
        return int(np.argmax(self.interests))


@dataclass(frozen=True)
class Observation:
    """What every agent is handed before recommending; agents use only what they are allowed to."""

    corpus: tuple[Video, ...]
    user: UserProfile
    last_response: Optional[Response]
    step: int


@dataclass(frozen=True)
class SessionStep:
    corpus: tuple[int, ...]
    slate: Slate
    response: Response
    expert_guided: bool
    quality: Optional[float]  # score of the clicked video, None when nothing was clicked
    budget_after: float


@dataclass
class SessionLog:
    session_id: int
    steps: list[SessionStep] = field(default_factory=list)
    terminal_reason: str = ""

    def __len__(self):
        return len(self.steps)

    @property
    def watch_time(self) -> float:
        return sum(s.response.watch_time for s in self.steps)


def user_utilities(videos: Sequence[Video], profile: UserProfile,
                   config: UserEnvConfig = UserEnvConfig()) -> np.ndarray:
    """Click weights; an empty slate has none, so only the null item can be chosen."""
    return np.array([math.exp(config.beta_interest * profile.interests[v.topic]
                              + profile.quality_sensitivity * video_score(v)) for v in videos],
                    dtype=float)


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def step(profile: UserProfile, videos: Sequence[Video], rng: np.random.Generator,
         config: UserEnvConfig = UserEnvConfig()) -> tuple[Response, UserProfile]:
    """User reacts to the slate; returns the response and the user after drift and budget use."""
    if profile.time_budget <= 0:
        raise SessionOver("time budget exhausted")
    probs = choice_probabilities(user_utilities(videos, profile, config), config.no_click_mass)
    pick = sample_choice(probs, rng)
    if pick is None:
        return Response(), replace(profile, time_budget=profile.time_budget - config.browse_cost)
    v = videos[pick]
    score = video_score(v)
    interest = profile.interests[v.topic]
    watch = v.length * _sigmoid(2.0 * (interest + profile.quality_sensitivity * score))
    interests = list(profile.interests)
    interests[v.topic] = clamp(interest + profile.interest_step * float(np.sign(score)))
    budget = (profile.time_budget - watch - config.browse_cost
              + config.budget_bonus * max(score, 0.0) * watch)
    response = Response(pick, watch, min(watch / v.length, 1.0), score, v.topic, v.id)
    return response, replace(profile, interests=tuple(interests), time_budget=budget)


def run_user_session(profile: UserProfile, agent, catalog: Catalog, rng: np.random.Generator,
                     config: UserEnvConfig = UserEnvConfig(), session_id: int = 0) -> SessionLog:
    """Retrieve a corpus, let the agent pick a slate, step the user, until the budget runs out.

    ``agent`` needs ``recommend(obs) -> Slate``; optional hooks are
    ``begin_session(obs)``, ``feedback(obs, slate, response)``, ``end_session()``
    and a ``last_guided`` flag set by ``recommend``.
    """
    log = SessionLog(session_id)
    last = None
    hook = getattr(agent, "begin_session", None)
    first = True
    while profile.time_budget > 0:
        if len(log) >= config.max_steps:
            log.terminal_reason = "max_steps"
            break
        corpus = catalog.sample_corpus(np.asarray(profile.interests), config.corpus_size, rng,
                                       config.retrieval_noise)
        obs = Observation(tuple(corpus), profile, last, len(log))
        if first and hook is not None:
            hook(obs)
        first = False
        slate = agent.recommend(obs)
        guided = bool(getattr(agent, "last_guided", False))
        response, profile = step(profile, slate_videos(slate, corpus), rng, config)
        fb = getattr(agent, "feedback", None)
        if fb is not None:
            fb(obs, slate, response)
        log.steps.append(SessionStep(tuple(v.id for v in corpus), slate, response, guided,
                                     response.observed_quality if response.clicked is not None else None,
                                     profile.time_budget))
        last = response
    else:
        log.terminal_reason = "budget"
    end = getattr(agent, "end_session", None)
    if end is not None:
        end()
    return log


def save_session_logs(logs: Sequence[SessionLog], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SESSION_COLUMNS)
        for log in logs:
            for t, s in enumerate(log.steps):
                r = s.response
                w.writerow([log.session_id, t, int(s.expert_guided),
                            r.video_id if r.clicked is not None else "",
                            r.topic if r.clicked is not None else "",
                            f"{s.quality:.9g}" if s.quality is not None else "",
                            f"{r.watch_time:.9g}", f"{s.budget_after:.9g}"])
