"""Maximum-entropy IRL over the abstract session MDP."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .abstraction import Discretizer
from .mdp import AbstractTrajectory, TransitionModel, state_visitation_frequencies, value_iteration

log = logging.getLogger(__name__)

MODEL_MAGIC = "expertrec-irl-model v1"
TRACE_COLUMNS = ("iteration", "grad_norm", "residual_inf")


class TrainingError(RuntimeError):
    pass


def onehot_features(n_states: int) -> np.ndarray:
    return np.eye(n_states)


def factored_features(disc: Discretizer) -> np.ndarray:
    """Topic one-hot, quality-bin one-hot and engagement one-hot, concatenated.

    The initial (nothing clicked) state maps to the zero vector.
    """
    k = disc.n_topics + disc.quality_bins + disc.engagement_bins
    phi = np.zeros((disc.n_states, k))
    for s in range(1, disc.n_states):
        topic, qbin, ebin = disc.decode(s)
        phi[s, topic] = 1.0
        phi[s, disc.n_topics + qbin] = 1.0
        phi[s, disc.n_topics + disc.quality_bins + ebin] = 1.0
    return phi


def feature_map(kind: str, disc: Discretizer) -> np.ndarray:
    if kind == "onehot":
        return onehot_features(disc.n_states)
    if kind == "factored":
        return factored_features(disc)
    raise ValueError(f"unknown feature map {kind!r}")


@dataclass
class RewardModel:
    features: np.ndarray  # (S, k)
    theta: np.ndarray  # (k,)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.features.shape[1] != len(self.theta):
            raise ValueError("theta length must equal feature dimension")

    def rewards(self) -> np.ndarray:
        return self.features @ self.theta


def trajectory_feature_counts(traj: AbstractTrajectory, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if not len(traj):
        return np.zeros(features.shape[1])
    return features[list(traj.states)].sum(axis=0)


def empirical_feature_expectation(trajectories: Sequence[AbstractTrajectory],
                                  features: np.ndarray) -> np.ndarray:
    if not trajectories:
        raise ValueError("need at least one demonstration")
    return np.mean([trajectory_feature_counts(t, features) for t in trajectories], axis=0)


def survival_weights(trajectories: Sequence[AbstractTrajectory], horizon: int) -> np.ndarray:
    """Fraction of demonstrations still running at each step."""
    lengths = np.array([len(t) for t in trajectories])
    return np.array([(lengths > t).mean() for t in range(horizon)])


@dataclass
class MaxEntResult:
    theta: np.ndarray
    policy: np.ndarray
    values: np.ndarray
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    residual_inf: float = float("nan")
    gamma: float = 0.5
    feature_kind: str = "onehot"

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([r[1] for r in self.trace])


def matching_residual(trajectories, tm: TransitionModel, features: np.ndarray, policy: np.ndarray,
                      horizon: int) -> np.ndarray:
    """Per-step expert feature expectation minus the policy's, step-weighted like the demos."""
    mean_len = np.mean([len(t) for t in trajectories])
    target = empirical_feature_expectation(trajectories, features) / mean_len
    d = state_visitation_frequencies(policy, tm, horizon, survival_weights(trajectories, horizon))
    return target - features.T @ (d / d.sum())


def maxent_irl(trajectories: Sequence[AbstractTrajectory], tm: TransitionModel, features: np.ndarray,
               gamma: float = 0.5, learning_rate: float = 0.01, iterations: int = 10_000,
               lr_decay: float = 0.999, horizon: Optional[int] = None, softness: float = 0.0,
               vi_tol: float = 1e-6, divergence: float = 1e6, feature_kind: str = "onehot") -> MaxEntResult:
    """Gradient ascent on the demonstration likelihood.

    Each iteration solves the MDP under the current reward, rolls the policy
    forward to expected visitation frequencies, and moves theta along the
    difference between the demonstrations' and the policy's per-step feature
    expectations.  The policy's visits are weighted by the fraction of
    demonstrations still alive at each step, so that variable-length demos
    are compared like with like.
    """
    if not trajectories:
        raise ValueError("need at least one demonstration")
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    features = np.asarray(features, dtype=float)
    horizon = horizon or max(len(t) for t in trajectories)
    weights = survival_weights(trajectories, horizon)
    mean_len = np.mean([len(t) for t in trajectories])
    target = empirical_feature_expectation(trajectories, features) / mean_len

    theta = np.zeros(features.shape[1])
    trace = []
    v = None
    lr = learning_rate
    for it in range(iterations):
        v, policy = value_iteration(features @ theta, tm, gamma, vi_tol, softness=softness, v0=v)
        d = state_visitation_frequencies(policy, tm, horizon, weights)
        grad = target - features.T @ (d / d.sum())
        norm = float(np.linalg.norm(grad))
        if not np.isfinite(norm) or norm > divergence:
            raise TrainingError(f"gradient norm {norm:.3g} at iteration {it}")
        trace.append((it, norm, float(np.abs(grad).max())))
        theta = theta + lr * grad
        lr *= lr_decay
        if it % 1000 == 0:
            log.debug("maxent iteration %d grad norm %.4g", it, norm)

    v, policy = value_iteration(features @ theta, tm, gamma, vi_tol, softness=softness, v0=v)
    resid = matching_residual(trajectories, tm, features, policy, horizon)
    return MaxEntResult(theta, policy, v, trace, float(np.abs(resid).max()), gamma, feature_kind)


def save_model(result: MaxEntResult, path) -> None:
    n_s, n_a = result.policy.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MODEL_MAGIC}\n")
        fh.write(f"n_states={n_s}\nn_actions={n_a}\nk_feat={len(result.theta)}\n")
        fh.write(f"gamma={result.gamma!r}\nfeature_map={result.feature_kind}\n")
        fh.write(f"residual_inf={result.residual_inf!r}\n")
        fh.write("theta\n")
        for x in result.theta:
            fh.write(f"{float(x)!r}\n")
        fh.write("policy\n")
        for row in result.policy:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def load_model(path) -> MaxEntResult:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"{path}: not a model file (expected {MODEL_MAGIC!r})")
    header = {}
    i = 1
    while lines[i] != "theta":
        key, _, value = lines[i].partition("=")
        header[key] = value
        i += 1
    try:
        n_s, n_a, k = int(header["n_states"]), int(header["n_actions"]), int(header["k_feat"])
        theta = np.array([float(x) for x in lines[i + 1:i + 1 + k]])
        if lines[i + 1 + k] != "policy":
            raise ValueError("missing policy section")
        rows = lines[i + 2 + k:i + 2 + k + n_s]
        policy = np.array([[float(x) for x in r.split(",")] for r in rows])
    except (KeyError, IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed model file ({exc})") from exc
    if policy.shape != (n_s, n_a) or len(theta) != k:
        raise ValueError(f"{path}: model dimensions disagree with header")
    return MaxEntResult(theta, policy, np.zeros(n_s), [], float(header.get("residual_inf", "nan")),
                        float(header["gamma"]), header["feature_map"])


def save_trace(trace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for it, g, r in trace:
            w.writerow([it, f"{g:.9g}", f"{r:.9g}"])
