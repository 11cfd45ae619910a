"""Simulated experts: corpus retrieval, video evaluation and demonstration sessions."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .choice import choice_probabilities, sample_choice
from .domain import (Catalog, EvaluationFeatures, Response, Slate, Video, clamp, slate_videos,
                     video_score, with_evaluation)
from .irl import AbstractTrajectory, Discretizer, encode_state, realize_action

TRAJECTORY_COLUMNS = ("expert_id", "traj_id", "step", "abstract_state", "abstract_action",
                      "clicked_video", "watch_time", "s_v", "evaluated_quality", "corpus_video_ids")


@dataclass(frozen=True)
class ExpertProfile:
    id: int
    interests: tuple[float, ...]
    expertise_topics: frozenset
    quality_factor: float
    session_budget: float = 60.0

    def __post_init__(self):
        if not 0.0 <= self.quality_factor <= 1.0:
            raise ValueError("quality factor must lie in [0, 1]")
        if not self.expertise_topics:
            raise ValueError("an expert needs at least one expertise topic")
        if any(not -1.0 <= x <= 1.0 for x in self.interests):
            raise ValueError("interests outside [-1, 1]")

    @property
    def dominant_topic(self) -> int:
        return int(np.argmax(self.interests))


@dataclass(frozen=True)
class ExpertEnvConfig:
    corpus_size: int = 5
    slate_size: int = 2
    max_steps: int = 20
    browse_cost: float = 1.0
    no_click_mass: float = 1.0
    beta_quality: float = 2.0
    beta_topic: float = 1.0
    beta_expertise: float = 1.0
    eval_sigma: float = 0.3
    retrieval_noise: float = 0.1


@dataclass(frozen=True)
class StateModel:
    expert_state: tuple[float, ...]
    response_state: Response
    video_state: tuple[Video, ...]


@dataclass(frozen=True)
class TrajectoryStep:
    state_model: StateModel
    slate: Slate
    abstract_state: int
    abstract_action: int


@dataclass(frozen=True)
class Trajectory:
    expert_id: int
    steps: tuple[TrajectoryStep, ...]
    final_state: int

    def __len__(self):
        return len(self.steps)

    def abstract(self) -> AbstractTrajectory:
        return AbstractTrajectory(tuple(s.abstract_state for s in self.steps),
                                  tuple(s.abstract_action for s in self.steps), self.final_state)


def evaluate_video(v: Video, profile: ExpertProfile, rng: np.random.Generator,
                   sigma: float = 0.3, features: Optional[EvaluationFeatures] = None):
    """Score a watched video on the four criteria and fold the mean into its quality.

    Judgement noise shrinks with expertise; the update itself is scaled by
    the expert's quality factor.
    """
    if features is None:
        noise = rng.normal(0.0, sigma * (1.0 - profile.quality_factor), 4)
        features = EvaluationFeatures(*(clamp(v.latent_quality + e) for e in noise))
    s_v = features.mean()
    return features, with_evaluation(v, v.latent_quality + s_v * profile.quality_factor)


def expert_utilities(videos: Sequence[Video], profile: ExpertProfile,
                     config: ExpertEnvConfig = ExpertEnvConfig()) -> np.ndarray:
    if not videos:
        raise ValueError("empty slate")
    interests = np.asarray(profile.interests)
    return np.array([np.exp(config.beta_quality * v.latent_quality
                            + config.beta_topic * interests[v.topic]
                            + config.beta_expertise * (v.topic in profile.expertise_topics))
                     for v in videos])


def behavior_policy(disc: Discretizer, epsilon: float = 0.1, topic_bonus: float = 0.5) -> np.ndarray:
    """Epsilon-soft greedy demonstrator: prefer on-topic, high-quality slates in every state."""
    utility = np.array([sum(disc.bin_center(q) + topic_bonus * on
                            for on, q in map(disc.split_descriptor, disc.decode_action(a)))
                        for a in range(disc.n_actions)])
    pi = np.full((disc.n_states, disc.n_actions), epsilon / disc.n_actions)
    pi[:, int(np.argmax(utility))] += 1.0 - epsilon
    return pi


def run_expert_session(profile: ExpertProfile, catalog: Catalog, policy: np.ndarray,
                       rng: np.random.Generator, disc: Discretizer,
                       config: ExpertEnvConfig = ExpertEnvConfig()) -> Trajectory:
    """One demonstration session; evaluations are written back into ``catalog``.

    The first step always runs, so every trajectory has at least one step.
    """
    interests = np.asarray(profile.interests)
    budget = profile.session_budget
    last: Optional[Response] = None
    steps = []
    while True:
        corpus = catalog.sample_corpus(interests, config.corpus_size, rng, config.retrieval_noise)
        state = encode_state(last, disc)
        action = int(rng.choice(disc.n_actions, p=policy[state]))
        slate = realize_action(action, corpus, profile.dominant_topic, disc)
        shown = slate_videos(slate, corpus)
        probs = choice_probabilities(expert_utilities(shown, profile, config), config.no_click_mass)
        pick = sample_choice(probs, rng)
        if pick is None:
            response = Response()
            budget -= config.browse_cost
        else:
            v = shown[pick]
            feats, evaluated = evaluate_video(v, profile, rng, config.eval_sigma)
            catalog.update(evaluated)
            response = Response(pick, v.length, 1.0, video_score(evaluated), v.topic, v.id, feats)
            budget -= v.length + config.browse_cost
        steps.append(TrajectoryStep(StateModel(profile.interests, response, tuple(corpus)),
                                    slate, state, action))
        last = response
        if budget <= 0 or len(steps) >= config.max_steps:
            break
    return Trajectory(profile.id, tuple(steps), encode_state(last, disc))


def generate_demonstrations(profiles: Sequence[ExpertProfile], per_expert: int, catalog: Catalog,
                            policy: np.ndarray, rng: np.random.Generator, disc: Discretizer,
                            config: ExpertEnvConfig = ExpertEnvConfig()) -> list[Trajectory]:
    if per_expert < 1:
        raise ValueError("per_expert must be >= 1")
    return [run_expert_session(p, catalog, policy, rng, disc, config)
            for p in profiles for _ in range(per_expert)]


def make_expert_profiles(interests: np.ndarray, rng: np.random.Generator,
                         session_budget: float = 60.0) -> list[ExpertProfile]:
    """Experts with the given interest rows; expertise covers the top-interest topic plus a random one."""
    profiles = []
    n_topics = interests.shape[1]
    for i, row in enumerate(np.asarray(interests)):
        extra = int(rng.integers(n_topics))
        f = float(rng.uniform(0.0, 1.0))
        profiles.append(ExpertProfile(i, tuple(float(x) for x in row),
                                      frozenset({int(np.argmax(row)), extra}), f, session_budget))
    return profiles


def save_trajectories_csv(trajectories: Sequence[Trajectory], path) -> None:
    per_expert: dict[int, int] = {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for traj in trajectories:
            tid = per_expert.get(traj.expert_id, 0)
            per_expert[traj.expert_id] = tid + 1
            for t, step in enumerate(traj.steps):
                r = step.state_model.response_state
                clicked = r.video_id if r.clicked is not None else ""
                s_v = f"{r.evaluation.mean():.9g}" if r.evaluation else ""
                q = f"{r.observed_quality:.9g}" if r.clicked is not None else ""
                corpus = " ".join(str(v.id) for v in step.state_model.video_state)
                w.writerow([traj.expert_id, tid, t, step.abstract_state, step.abstract_action,
                            clicked, f"{r.watch_time:.9g}", s_v, q, corpus])


# Lossless JSON-lines form used between pipeline stages.

def _video_dict(v: Video):
    return [v.id, v.topic, v.length, v.latent_quality, v.evaluated, v.evaluated_quality]


def _response_dict(r: Response):
    return {"clicked": r.clicked, "watch_time": r.watch_time, "engagement_rate": r.engagement_rate,
            "observed_quality": r.observed_quality, "topic": r.topic, "video_id": r.video_id,
            "evaluation": list(r.evaluation.values()) if r.evaluation else None}


def trajectory_to_json(traj: Trajectory) -> str:
    steps = [{"interests": list(s.state_model.expert_state),
              "response": _response_dict(s.state_model.response_state),
              "corpus": [_video_dict(v) for v in s.state_model.video_state],
              "slate": list(s.slate.items), "state": s.abstract_state, "action": s.abstract_action}
             for s in traj.steps]
    return json.dumps({"expert_id": traj.expert_id, "final_state": traj.final_state, "steps": steps})


def trajectory_from_json(line: str) -> Trajectory:
    d = json.loads(line)
    steps = []
    for s in d["steps"]:
        r = dict(s["response"])
        ev = r.pop("evaluation")
        resp = Response(**r, evaluation=EvaluationFeatures(*ev) if ev else None)
        corpus = tuple(Video(*v) for v in s["corpus"])
        steps.append(TrajectoryStep(StateModel(tuple(s["interests"]), resp, corpus),
                                    Slate(tuple(s["slate"])), s["state"], s["action"]))
    return Trajectory(d["expert_id"], tuple(steps), d["final_state"])


def save_trajectories(trajectories: Sequence[Trajectory], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trajectories:
            fh.write(trajectory_to_json(t) + "\n")


def load_trajectories(path) -> list[Trajectory]:
    with open(path, encoding="utf-8") as fh:
        return [trajectory_from_json(line) for line in fh if line.strip()]
