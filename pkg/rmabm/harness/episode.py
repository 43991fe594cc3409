from typing import NamedTuple
import logging

import numpy as np

from rmabm.economy.economy import episode_streams, init_economy, step_economy
from rmabm.errors import ConfigurationError
from rmabm.harness.frames import FrameStream
from rmabm.policy.agents import QLearningController
from rmabm.policy.heuristic import HeuristicPolicy
from rmabm.policy.policy import FirmDecision


logger = logging.getLogger(__name__)

EPSILON_DECAY = 0.9
EPSILON_MIN = 0.01


def epsilon_schedule(tau):
    """Exploration rate of training episode tau (1-based)."""
    if tau < 1:
        raise ValueError(f'episode index must be >= 1, got {tau}')
    return max(EPSILON_DECAY ** (tau - 1), EPSILON_MIN)


class Shock(NamedTuple):
    """Multiplies household consumption propensities by 1 + size for `duration` steps from t_start."""
    t_start: int
    size: float
    duration: int = 1

    def factor(self, t):
        return 1.0 + self.size if self.t_start <= t < self.t_start + self.duration else 1.0


def rl_firm_ids(cfg):
    return np.arange(cfg.num_rl_agents)


def run_episode(cfg, policies, epsilon, seed, learning, shock=None):
    """One episode: heuristic burn-in, then RL control of the first N C-firms.

    Returns the frame stream and the (in-place updated) policy set.
    """
    n_rl = cfg.num_rl_agents
    if n_rl > cfg.model.num_cfirms:
        raise ConfigurationError(f'{n_rl} RL agents cannot control {cfg.model.num_cfirms} C-firms', key='experiment.num_rl_agents')
    if n_rl > 0 and policies is None:
        raise ConfigurationError('RL agents need a policy set', key='experiment.num_rl_agents')

    streams = episode_streams(seed)
    state = init_economy(cfg.model, seed)
    state.price_base_step = cfg.t_burn_in + 1

    heuristic = HeuristicPolicy(streams.heuristic)
    all_ids = np.arange(cfg.model.num_cfirms)
    rl_ids = rl_firm_ids(cfg)

    agents = None
    if n_rl > 0:
        agents = QLearningController(policies, cfg.rl, rl_ids, streams.agents,
                                     epsilon=epsilon if learning else 0.0, learning=learning)

    frames = FrameStream(cfg.episode_length, cfg.model.num_cfirms)

    for t in range(1, cfg.episode_length + 1):
        price, target = heuristic.decide(state, all_ids)
        rl_active = agents is not None and t > cfg.t_burn_in

        if rl_active:
            rl_decision = agents.decide(state)
            price[rl_ids] = rl_decision.next_price
            target[rl_ids] = rl_decision.next_target_output

        state.consumption_shock = shock.factor(t) if shock is not None else 1.0
        frame = step_economy(state, FirmDecision(price, target))

        if rl_active:
            frame.reward[rl_ids] = agents.feedback(state)

        frames.append(frame)

    logger.debug('run_episode: seed=%s learning=%s epsilon=%.3f final real GDP=%.4g',
                 seed, learning, epsilon, state.real_gdp)

    return frames, policies
