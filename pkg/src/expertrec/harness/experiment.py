"""Pipeline stages (catalog, demonstrations, IRL, dataset) and the per-agent simulation arms."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..baselines import RecBanditAgent, RecFSQAgent, RecNaiveAgent, RecPCTRAgent
from ..dataset import DatasetHeader, ExpertStateRecord, build_dataset, load_dataset, save_dataset
from ..domain import Catalog, load_catalog, sample_catalog, save_catalog
from ..expert_env import (ExpertEnvConfig, ExpertProfile, Trajectory, behavior_policy,
                          generate_demonstrations, load_trajectories, make_expert_profiles,
                          save_trajectories, save_trajectories_csv)
from ..irl import (Discretizer, MaxEntResult, estimate_transitions, feature_map, load_model,
                   maxent_irl, save_model, save_trace)
from ..recommender import ClassifierConfig, FebrAgent, StateIndex
from ..user_env import SessionLog, UserEnvConfig, UserProfile, run_user_session, save_session_logs
from .config import AGENTS, ExperimentConfig, to_ini
from .metrics import MetricsRow, compute_metrics, save_metrics

log = logging.getLogger(__name__)

CATALOG = "catalog.csv"
EXPERTS = "experts.json"
TRAJECTORIES = "trajectories.jsonl"
TRAJECTORIES_CSV = "trajectories.csv"
EVALUATED_CATALOG = "catalog_evaluated.csv"
MODEL = "irl_model.txt"
TRACE = "irl_trace.csv"
DATASET = "dataset.csv"
CONFIG_ECHO = "config.ini"

# rng stream ids, one per independent source of randomness
_CATALOG, _COMMUNITIES, _EXPERTS, _DEMOS, _USERS, _SESSION, _AGENT = range(7)


class MissingArtifact(RuntimeError):
    def __init__(self, path, stage):
        super().__init__(f"{path} not found; run `expertrec {stage}` first")
        self.stage = stage


def rng_for(config: ExperimentConfig, *keys: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, *keys])


def discretizer(config: ExperimentConfig) -> Discretizer:
    return Discretizer(n_topics=config.n_topics, slate_size=config.slate_size)


def expert_env_config(config: ExperimentConfig) -> ExpertEnvConfig:
    return ExpertEnvConfig(config.corpus_size, config.slate_size, config.max_steps, config.browse_cost,
                           config.expert_no_click_mass, config.beta_quality, config.beta_topic,
                           config.beta_expertise, config.eval_sigma, config.retrieval_noise)


def user_env_config(config: ExperimentConfig) -> UserEnvConfig:
    return UserEnvConfig(config.corpus_size, config.beta_interest, config.user_no_click_mass,
                         config.browse_cost, config.budget_bonus, config.retrieval_noise)


# population: experts and users are drawn around the same interest communities

def community_centroids(config: ExperimentConfig) -> np.ndarray:
    return rng_for(config, _COMMUNITIES).uniform(-1.0, 1.0, (config.n_experts, config.n_topics))


def _members(centroids, idx, spread, rng):
    return np.clip(centroids[idx] + rng.normal(0.0, spread, (len(idx), centroids.shape[1])), -1.0, 1.0)


def make_experts(config: ExperimentConfig) -> list[ExpertProfile]:
    rng = rng_for(config, _EXPERTS)
    centroids = community_centroids(config)
    interests = _members(centroids, np.arange(config.n_experts), config.population_spread, rng)
    return make_expert_profiles(interests, rng, config.expert_budget)


def make_users(config: ExperimentConfig) -> list[UserProfile]:
    rng = rng_for(config, _USERS)
    centroids = community_centroids(config)
    idx = rng.integers(0, config.n_experts, config.sessions)
    return [UserProfile(tuple(float(x) for x in row), config.user_budget, config.interest_step,
                        config.quality_sensitivity)
            for row in _members(centroids, idx, config.population_spread, rng)]


def profile_hash(users: Sequence[UserProfile]) -> str:
    h = hashlib.sha256()
    for u in users:
        h.update(np.asarray(u.interests + (u.time_budget,), dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


# stages, in memory

def make_catalog(config: ExperimentConfig) -> Catalog:
    return sample_catalog([config.seed, _CATALOG], config.catalog_size, config.n_topics,
                          config.video_length)


def run_demonstrations(config: ExperimentConfig, catalog: Catalog):
    """Expert sessions; returns (experts, trajectories, catalog with the experts' evaluations)."""
    disc = discretizer(config)
    experts = make_experts(config)
    evaluated = catalog.copy()
    trajs = generate_demonstrations(experts, config.trajectories_per_expert, evaluated,
                                    behavior_policy(disc, config.behavior_epsilon), rng_for(config, _DEMOS),
                                    disc, expert_env_config(config))
    return experts, trajs, evaluated


def train_policy(config: ExperimentConfig, trajectories: Sequence[Trajectory]) -> MaxEntResult:
    disc = discretizer(config)
    demos = [t.abstract() for t in trajectories]
    tm = estimate_transitions(demos, disc.n_states, disc.n_actions, config.smoothing)
    return maxent_irl(demos, tm, feature_map(config.feature_map, disc), gamma=config.gamma,
                      learning_rate=config.learning_rate, iterations=config.irl_iterations,
                      lr_decay=config.lr_decay, horizon=config.max_steps, softness=config.policy_softness,
                      vi_tol=config.vi_tol, feature_kind=config.feature_map)


def dataset_header(config: ExperimentConfig) -> DatasetHeader:
    disc = discretizer(config)
    return DatasetHeader(config.n_topics, config.corpus_size, disc.n_states, disc.n_actions)


@dataclass
class Artifacts:
    catalog: Catalog  # after expert evaluations
    policy: np.ndarray
    dataset: list[ExpertStateRecord]


def build_artifacts(config: ExperimentConfig) -> Artifacts:
    catalog = make_catalog(config)
    _, trajs, evaluated = run_demonstrations(config, catalog)
    result = train_policy(config, trajs)
    return Artifacts(evaluated, result.policy, build_dataset(trajs, result.policy, config.n_topics))


# simulation arms

def make_agent(name: str, config: ExperimentConfig, index: Optional[StateIndex], rng: np.random.Generator):
    disc = discretizer(config)
    k = config.slate_size
    if name == "febr":
        if index is None:
            raise MissingArtifact(DATASET, "build-dataset")
        return FebrAgent(index, disc, rng, ClassifierConfig(config.th1, config.th2, config.nearest))
    if name == "recfsq":
        return RecFSQAgent(disc, rng, config.fsq_lr, config.gamma, config.fsq_epsilon,
                           config.fsq_epsilon_decay, quality_weight=config.quality_weight,
                           quality_view=config.baseline_quality_view)
    if name == "recpctr":
        return RecPCTRAgent(k, user_env_config(config))
    if name == "recbandit":
        return RecBanditAgent(config.n_topics, k, config.ucb_c, config.baseline_quality_view)
    if name == "recnaive":
        return RecNaiveAgent(k, rng, config.naive_threshold)
    raise ValueError(f"unknown agent {name!r}")


@dataclass
class ArmResult:
    agent: str
    rows: list[MetricsRow]
    logs: list[SessionLog]
    profile_hash: str


def simulate_arm(config: ExperimentConfig, name: str, artifacts: Artifacts,
                 users: Optional[Sequence[UserProfile]] = None) -> ArmResult:
    """All sessions for one agent; session i sees user i and rng stream i in every arm."""
    users = make_users(config) if users is None else users
    index = StateIndex(artifacts.dataset) if name == "febr" else None
    agent = make_agent(name, config, index, rng_for(config, _AGENT, AGENTS.index(name)))
    env = user_env_config(config)
    logs, rows = [], []
    for i, user in enumerate(users):
        session = run_user_session(user, agent, artifacts.catalog, rng_for(config, _SESSION, i), env, i)
        logs.append(session)
        rows.append(compute_metrics(session, config.count_no_click))
    return ArmResult(name, rows, logs, profile_hash(users))


def run_experiment(config: ExperimentConfig, artifacts: Optional[Artifacts]) -> dict[str, ArmResult]:
    if artifacts is None:
        raise MissingArtifact(MODEL, "train-irl")
    users = make_users(config)
    results = {}
    for name in config.agents:
        log.info("simulating %d sessions for %s", len(users), name)
        results[name] = simulate_arm(config, name, artifacts, users)
    return results


# stages, on disk

def _need(out: Path, name: str, stage: str) -> Path:
    p = out / name
    if not p.exists():
        raise MissingArtifact(p, stage)
    return p


def write_config_echo(config: ExperimentConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_ECHO).write_text(to_ini(config), encoding="utf-8")


def stage_catalog(config: ExperimentConfig, out: Path) -> Path:
    write_config_echo(config, out)
    save_catalog(make_catalog(config), out / CATALOG)
    return out / CATALOG


def stage_trajectories(config: ExperimentConfig, out: Path) -> Path:
    catalog = load_catalog(_need(out, CATALOG, "gen-catalog"), config.n_topics)
    experts, trajs, evaluated = run_demonstrations(config, catalog)
    write_config_echo(config, out)
    (out / EXPERTS).write_text(json.dumps(
        [{"id": e.id, "interests": list(e.interests), "expertise_topics": sorted(e.expertise_topics),
          "quality_factor": e.quality_factor, "session_budget": e.session_budget} for e in experts],
        indent=1), encoding="utf-8")
    save_trajectories(trajs, out / TRAJECTORIES)
    save_trajectories_csv(trajs, out / TRAJECTORIES_CSV)
    save_catalog(evaluated, out / EVALUATED_CATALOG)
    return out / TRAJECTORIES


def stage_train(config: ExperimentConfig, out: Path) -> MaxEntResult:
    trajs = load_trajectories(_need(out, TRAJECTORIES, "gen-trajectories"))
    result = train_policy(config, trajs)
    write_config_echo(config, out)
    save_model(result, out / MODEL)
    save_trace(result.trace, out / TRACE)
    return result


def stage_dataset(config: ExperimentConfig, out: Path) -> Path:
    trajs = load_trajectories(_need(out, TRAJECTORIES, "gen-trajectories"))
    model = load_model(_need(out, MODEL, "train-irl"))
    records = build_dataset(trajs, model.policy, config.n_topics)
    write_config_echo(config, out)
    save_dataset(records, out / DATASET, dataset_header(config))
    return out / DATASET


def load_artifacts(config: ExperimentConfig, out: Path) -> Artifacts:
    # the dataset header pins the layout, so check it before anything else
    _, records = load_dataset(_need(out, DATASET, "build-dataset"), dataset_header(config))
    model = load_model(_need(out, MODEL, "train-irl"))
    catalog = load_catalog(_need(out, EVALUATED_CATALOG, "gen-trajectories"), config.n_topics)
    return Artifacts(catalog, model.policy, records)


def save_arm(result: ArmResult, out: Path) -> None:
    save_metrics(result.rows, out / f"metrics_{result.agent}.csv")
    save_session_logs(result.logs, out / f"sessions_{result.agent}.csv")


def run_pipeline(config: ExperimentConfig, out: Path) -> dict[str, ArmResult]:
    """Every stage end to end, writing each stage's artifacts into ``out``."""
    stage_catalog(config, out)
    stage_trajectories(config, out)
    stage_train(config, out)
    stage_dataset(config, out)
    results = run_experiment(config, load_artifacts(config, out))
    for r in results.values():
        save_arm(r, out)
    return results
