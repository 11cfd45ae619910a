"""Experiment configuration: defaults, named profiles, INI files and overrides."""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

AGENTS = ("febr", "recfsq", "recpctr", "recbandit", "recnaive")


class ConfigError(ValueError):
    pass


# INI sections, purely organisational: every key maps to one ExperimentConfig field
SECTIONS = {
    "experiment": ("seed", "agents", "sessions", "count_no_click"),
    "catalog": ("n_topics", "catalog_size", "video_length", "corpus_size", "slate_size",
                "retrieval_noise"),
    "experts": ("n_experts", "trajectories_per_expert", "max_steps", "expert_budget", "browse_cost",
                "behavior_epsilon", "eval_sigma", "expert_no_click_mass", "beta_quality",
                "beta_topic", "beta_expertise", "population_spread"),
    "irl": ("gamma", "irl_iterations", "learning_rate", "lr_decay", "smoothing", "feature_map",
            "vi_tol", "policy_softness"),
    "classifier": ("th1", "th2", "nearest"),
    "users": ("user_budget", "interest_step", "quality_sensitivity", "beta_interest", "budget_bonus",
              "user_no_click_mass"),
    "baselines": ("fsq_lr", "fsq_epsilon", "fsq_epsilon_decay", "quality_weight", "ucb_c",
                  "naive_threshold", "baseline_quality_view"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 42
    agents: tuple[str, ...] = AGENTS
    sessions: int = 3000
    count_no_click: bool = False

    n_topics: int = 8
    catalog_size: int = 100_000
    video_length: float = 4.0
    corpus_size: int = 5
    slate_size: int = 2
    retrieval_noise: float = 0.1

    n_experts: int = 10
    trajectories_per_expert: int = 100
    max_steps: int = 20
    expert_budget: float = 60.0
    browse_cost: float = 1.0
    behavior_epsilon: float = 0.1
    eval_sigma: float = 0.3
    expert_no_click_mass: float = 1.0
    beta_quality: float = 2.0
    beta_topic: float = 1.0
    beta_expertise: float = 1.0
    population_spread: float = 0.1

    gamma: float = 0.5
    irl_iterations: int = 10_000
    learning_rate: float = 0.01
    lr_decay: float = 0.999
    smoothing: float = 0.05
    feature_map: str = "onehot"
    vi_tol: float = 1e-6
    policy_softness: float = 0.0

    th1: float = 0.5
    th2: float = 0.1
    nearest: bool = False

    user_budget: float = 200.0
    interest_step: float = 0.05
    quality_sensitivity: float = 1.0
    beta_interest: float = 2.0
    budget_bonus: float = 0.2
    user_no_click_mass: float = 1.0

    fsq_lr: float = 0.1
    fsq_epsilon: float = 0.1
    fsq_epsilon_decay: float = 0.999
    quality_weight: float = 1.0
    ucb_c: float = math.sqrt(2)
    naive_threshold: float = 0.5
    baseline_quality_view: str = "latent"

    def __post_init__(self):
        problems = []
        positive = ("sessions", "n_topics", "catalog_size", "video_length", "corpus_size", "slate_size",
                    "n_experts", "trajectories_per_expert", "max_steps", "user_budget", "learning_rate",
                    "vi_tol")
        for name in positive:
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive")
        if self.slate_size > self.corpus_size:
            problems.append("slate_size exceeds corpus_size")
        if self.corpus_size > self.catalog_size:
            problems.append("corpus_size exceeds catalog_size")
        if not 0 <= self.gamma < 1:
            problems.append("gamma must lie in [0, 1)")
        if self.irl_iterations < 0:
            problems.append("irl_iterations must be >= 0")
        if self.th1 < 0 or self.th2 < 0:
            problems.append("classifier margins must be >= 0")
        if not 0 <= self.behavior_epsilon <= 1 or not 0 <= self.policy_softness <= 1:
            problems.append("epsilon/softness must lie in [0, 1]")
        if self.feature_map not in ("onehot", "factored"):
            problems.append(f"unknown feature_map {self.feature_map!r}")
        if self.baseline_quality_view not in ("latent", "score"):
            problems.append(f"unknown baseline_quality_view {self.baseline_quality_view!r}")
        unknown = set(self.agents) - set(AGENTS)
        if unknown or not self.agents:
            problems.append(f"unknown agents {sorted(unknown)}; choose from {AGENTS}")
        if problems:
            raise ConfigError("; ".join(problems))

    def digest(self) -> str:
        return hashlib.sha256(to_ini(self).encode()).hexdigest()[:12]


PROFILES = {
    "paper": {},
    "desk": {"catalog_size": 10_000, "irl_iterations": 2000, "sessions": 500},
}

_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _parse(name: str, raw: str):
    kind = type(getattr(ExperimentConfig(), name))
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind is tuple:
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if kind is int:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    parsed = {}
    for key, value in overrides.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        parsed[key] = _parse(key, value) if isinstance(value, str) else value
    try:
        return replace(config, **parsed)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, profile: str = "paper", overrides: dict | None = None) -> ExperimentConfig:
    """Profile defaults, then the INI file, then explicit overrides."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    config = apply_overrides(ExperimentConfig(), PROFILES[profile])
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values = {}
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in SECTIONS[section]:
                    raise ConfigError(f"key {key!r} does not belong in [{section}]")
                values[key] = value
        config = apply_overrides(config, values)
    return apply_overrides(config, overrides or {})


def to_ini(config: ExperimentConfig) -> str:
    d = asdict(config)
    out = []
    for section, keys in SECTIONS.items():
        out.append(f"[{section}]")
        for k in keys:
            v = d[k]
            if isinstance(v, tuple):
                v = ",".join(v)
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{k} = {v}")
        out.append("")
    return "\n".join(out)

