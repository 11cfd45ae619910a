"""Tabular MDP machinery: empirical transitions, value iteration, visitation DP."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"value iteration did not converge in {iterations} iterations "
                         f"(residual {residual:.3g})")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class AbstractTrajectory:
    """State/action ids of one session; ``final_state`` is where the last action led."""

    states: tuple[int, ...]
    actions: tuple[int, ...]
    final_state: Optional[int] = None

    def __post_init__(self):
        if len(self.states) != len(self.actions):
            raise ValueError("states and actions differ in length")

    def __len__(self):
        return len(self.states)

    def transitions(self):
        nxt = list(self.states[1:])
        if self.final_state is not None:
            nxt.append(self.final_state)
        return zip(self.states, self.actions, nxt)


@dataclass(frozen=True)
class TransitionModel:
    T: np.ndarray  # (S, A, S)
    D0: np.ndarray  # (S,)

    def __post_init__(self):
        if not np.allclose(self.T.sum(axis=2), 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")
        if abs(self.D0.sum() - 1.0) > 1e-9:
            raise ValueError("initial distribution must sum to 1")

    @property
    def n_states(self) -> int:
        return self.T.shape[0]

    @property
    def n_actions(self) -> int:
        return self.T.shape[1]


def estimate_transitions(trajectories: Sequence[AbstractTrajectory], n_states: int, n_actions: int,
                         smoothing: float = 0.05) -> TransitionModel:
    """Additively smoothed maximum-likelihood transitions; unseen (s, a) rows are uniform."""
    if not trajectories:
        raise ValueError("no trajectories to estimate transitions from")
    counts = np.zeros((n_states, n_actions, n_states))
    d0 = np.zeros(n_states)
    for traj in trajectories:
        if len(traj):
            d0[traj.states[0]] += 1
        for s, a, s2 in traj.transitions():
            counts[s, a, s2] += 1
    totals = counts.sum(axis=2, keepdims=True)
    denom = totals + smoothing * n_states
    with np.errstate(invalid="ignore", divide="ignore"):
        T = np.where(denom > 0, (counts + smoothing) / np.where(denom > 0, denom, 1.0), 1.0 / n_states)
    if d0.sum() == 0:
        raise ValueError("all trajectories are empty")
    return TransitionModel(T, d0 / d0.sum())


def greedy_policy(q: np.ndarray, softness: float = 0.0, tie_tol: float = 1e-12) -> np.ndarray:
    """Argmax policy (lowest action id on ties) mixed with ``softness`` of uniform."""
    n_s, n_a = q.shape
    best = (q >= q.max(axis=1, keepdims=True) - tie_tol).argmax(axis=1)
    pi = np.full((n_s, n_a), softness / n_a)
    pi[np.arange(n_s), best] += 1.0 - softness
    return pi


def bellman_backup(rewards: np.ndarray, tm: TransitionModel, gamma: float, v: np.ndarray):
    q = rewards[:, None] + gamma * tm.T @ v
    return q.max(axis=1), q


def value_iteration(rewards: np.ndarray, tm: TransitionModel, gamma: float = 0.5, tol: float = 1e-6,
                    max_iters: int = 10_000, softness: float = 0.0,
                    v0: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    """Solve V = R + gamma * max_a T V for a state reward R.

    Returns (V, policy) with Bellman residual of V below ``tol``.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rewards = np.asarray(rewards, dtype=float)
    v = np.zeros(tm.n_states) if v0 is None else np.asarray(v0, dtype=float)
    residual = np.inf
    for _ in range(max_iters):
        v_new, q = bellman_backup(rewards, tm, gamma, v)
        residual = float(np.abs(v_new - v).max())
        v = v_new
        if residual * gamma < tol:
            # the backup contracts by gamma, so residual(v_new) <= gamma * residual
            break
    else:
        raise ConvergenceError(residual, max_iters)
    _, q = bellman_backup(rewards, tm, gamma, v)
    greedy = greedy_policy(q)
    # exact evaluation of the greedy policy; kept when it is at least as close to the fixed point
    exact = policy_evaluation(greedy, rewards, tm, gamma)
    if bellman_residual(exact, rewards, tm, gamma) <= bellman_residual(v, rewards, tm, gamma):
        v = exact
        _, q = bellman_backup(rewards, tm, gamma, v)
    return v, greedy_policy(q, softness)


def policy_evaluation(policy: np.ndarray, rewards: np.ndarray, tm: TransitionModel, gamma: float) -> np.ndarray:
    """V of a fixed policy, by solving (I - gamma P_pi) V = R."""
    chain = np.einsum("sa,sap->sp", policy, tm.T)
    return np.linalg.solve(np.eye(tm.n_states) - gamma * chain, np.asarray(rewards, dtype=float))


def bellman_residual(v: np.ndarray, rewards: np.ndarray, tm: TransitionModel, gamma: float) -> float:
    v_new, _ = bellman_backup(np.asarray(rewards, dtype=float), tm, gamma, v)
    return float(np.abs(v_new - v).max())


def state_visitation_frequencies(policy: np.ndarray, tm: TransitionModel, horizon: int = 20,
                                 step_weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """Expected visits per state over ``horizon`` steps starting from D0.

    ``step_weights[t]`` scales the step-t occupancy, e.g. the fraction of
    demonstrations still running at step t; default is all ones.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    w = np.ones(horizon) if step_weights is None else np.asarray(step_weights, dtype=float)
    if len(w) != horizon:
        raise ValueError("need one weight per step")
    # (S, A, S) collapsed under the policy to an (S, S) chain
    chain = np.einsum("sa,sap->sp", policy, tm.T)
    d = tm.D0.copy()
    total = np.zeros(tm.n_states)
    for t in range(horizon):
        total += w[t] * d
        d = d @ chain
    return total
