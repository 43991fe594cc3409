"""Tabular Q-learning pieces for profit-maximising C-firms.

Observations are log price deltas and log stocks binned onto equally spaced
poles; actions are multiplicative log-steps on price and target output.
"""
from typing import NamedTuple

import numpy as np

from rmabm.policy.policy import FirmDecision


class Observation(NamedTuple):
    log_price_delta: float
    log_stock: float


class DiscreteState(NamedTuple):
    price_bin: int
    stock_bin: int


class ActionPair(NamedTuple):
    a_P: float
    a_Y: float


def poles(n, lo, hi):
    return lo + np.arange(n) * (hi - lo) / (n - 1)


def obs_poles(rl):
    return poles(rl.n_states, rl.obs_min, rl.obs_max)


def action_grid(rl):
    return poles(rl.n_actions, rl.act_min, rl.act_max)


def observe(firm, P_t, floor=1e-6):
    output = np.maximum(firm.output, floor)
    demand = np.maximum(firm.demand, floor)

    return Observation(np.log(firm.price / P_t), np.log(output / demand))


def discretize(x, n, lo, hi):
    """Index of the nearest pole; ties go to the lower index, outliers to the extreme poles."""
    grid = poles(n, lo, hi)
    dist = np.abs(np.asarray(x, dtype=float)[..., None] - grid)
    idx = dist.argmin(axis=-1)
    return int(idx) if idx.ndim == 0 else idx


def discretize_observation(obs, rl):
    return DiscreteState(
        discretize(obs.log_price_delta, rl.n_states, rl.obs_min, rl.obs_max),
        discretize(obs.log_stock, rl.n_states, rl.obs_min, rl.obs_max))


def select_action(q, s, epsilon, rng):
    """Epsilon-greedy (price action, quantity action) indices; greedy ties broken at random."""
    n_actions = q.n_actions

    if rng.random() < epsilon:
        return int(rng.integers(n_actions)), int(rng.integers(n_actions))

    flat = q.action_values(s).reshape(-1)
    best = np.flatnonzero(flat == flat.max())
    k = best[0] if len(best) == 1 else best[rng.integers(len(best))]

    i_price, i_quantity = divmod(int(k), n_actions)
    return i_price, i_quantity


def action_pair(indices, grid):
    return ActionPair(float(grid[indices[0]]), float(grid[indices[1]]))


def apply_action(price, target_output, a, floor=1e-6):
    return FirmDecision(price * np.exp(a.a_P), max(target_output, floor) * np.exp(a.a_Y))


def compute_reward(profit, assets, penalty=-100.0):
    return profit if assets > 0 else penalty


def q_update(q, s, a, r, s_next, alpha, gamma):
    idx = (s.price_bin, s.stock_bin, a[0], a[1])
    target = r + gamma * q.action_values(s_next).max()

    q.values[idx] = (1 - alpha) * q.values[idx] + alpha * target
    q.update_count[idx] += 1


def cumulative_return(rewards, gamma):
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        return 0.0
    discounts = gamma ** np.arange(1, rewards.size + 1)
    return float(np.dot(discounts, rewards))
