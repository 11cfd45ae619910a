"""5x5 gridworld with a single rewarding absorbing corner, used as an IRL oracle."""

import numpy as np

from expertrec.irl import AbstractTrajectory, TransitionModel, value_iteration

MOVES = [(-1, 0), (1, 0), (0, -1), (0, 1)]  # up, down, left, right


def gridworld(size=5):
    n = size * size
    goal = n - 1
    T = np.zeros((n, len(MOVES), n))
    for s in range(n):
        r, c = divmod(s, size)
        for a, (dr, dc) in enumerate(MOVES):
            if s == goal:
                T[s, a, s] = 1.0
                continue
            r2 = min(max(r + dr, 0), size - 1)
            c2 = min(max(c + dc, 0), size - 1)
            T[s, a, r2 * size + c2] = 1.0
    reward = np.zeros(n)
    reward[goal] = 1.0
    return TransitionModel(T, np.full(n, 1.0 / n)), reward


def optimal_q(tm, reward, gamma):
    v, _ = value_iteration(reward, tm, gamma, tol=1e-12)
    return reward[:, None] + gamma * tm.T @ v, v


def demonstrations(tm, reward, gamma, n_demos, length, rng):
    q, _ = optimal_q(tm, reward, gamma)
    policy = q.argmax(axis=1)
    demos = []
    for _ in range(n_demos):
        s = int(rng.integers(tm.n_states))
        states, actions = [], []
        for _ in range(length):
            a = int(policy[s])
            states.append(s)
            actions.append(a)
            s = int(tm.T[s, a].argmax())
        demos.append(AbstractTrajectory(tuple(states), tuple(actions), s))
    return demos


def policy_value(policy, tm, reward, gamma):
    """Exact V^pi for a state reward, by solving the linear system."""
    P = np.einsum("sa,sap->sp", policy, tm.T)
    return np.linalg.solve(np.eye(tm.n_states) - gamma * P, reward)
