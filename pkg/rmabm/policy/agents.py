from dataclasses import asdict, fields
from hashlib import sha256
import logging

import numpy as np

from rmabm.codec import dumps, loads, read_bytes, write_bytes
from rmabm.errors import ArtifactError, ConfigurationError
from rmabm.params import RLConfig
from rmabm.policy.policy import FirmDecision, Policy
from rmabm.policy.qlearning import (
    DiscreteState, Observation, action_grid, action_pair, apply_action, compute_reward,
    discretize_observation, obs_poles, observe, q_update, select_action)
from rmabm.policy.qtable import QTable


logger = logging.getLogger(__name__)

POLICY_FORMAT = 'rmabm.policy'
POLICY_VERSION = 1


class TrainedPolicySet(object):
    """Q-tables of the RL firms: one shared table, or one per agent."""

    def __init__(self, mode, tables, rl, config=None, epsilon=1.0, episodes=0):
        if mode not in ('shared', 'independent'):
            raise ValueError(f'unknown policy mode: {mode}')
        if mode == 'shared' and len(tables) != 1:
            raise ValueError(f'shared policy sets hold exactly one table, got {len(tables)}')

        self.mode = mode
        self.tables = list(tables)
        self.rl = rl
        self.config = config
        self.epsilon = epsilon
        self.episodes = episodes


    @classmethod
    def create(cls, rl, num_agents, config=None):
        count = 1 if rl.policy_mode == 'shared' else num_agents
        tables = [QTable(rl.n_states, rl.n_actions) for _ in range(count)]
        return cls(rl.policy_mode, tables, rl, config)


    def table_for(self, agent):
        return self.tables[0] if self.mode == 'shared' else self.tables[agent]


    def check_compatible(self, cfg):
        grids = ('n_states', 'obs_min', 'obs_max', 'n_actions', 'act_min', 'act_max')
        for name in grids:
            if getattr(self.rl, name) != getattr(cfg.rl, name):
                raise ConfigurationError(
                    f'policy was trained with rl.{name}={getattr(self.rl, name)}, config has {getattr(cfg.rl, name)}',
                    key=f'rl.{name}')

        if self.mode != cfg.rl.policy_mode:
            raise ConfigurationError(f'policy set is {self.mode}, config asks for {cfg.rl.policy_mode}', key='rl.policy_mode')

        if self.mode == 'independent' and len(self.tables) != cfg.num_rl_agents:
            raise ConfigurationError(
                f'policy set holds {len(self.tables)} tables for {cfg.num_rl_agents} RL agents',
                key='experiment.num_rl_agents')


    def digest(self):
        h = sha256(self.mode.encode())
        for q in self.tables:
            h.update(q.digest().encode())
        return h.hexdigest()


    def copy(self):
        return TrainedPolicySet(self.mode, [q.copy() for q in self.tables], self.rl, self.config, self.epsilon, self.episodes)


    def dumps(self):
        return dumps(POLICY_FORMAT, POLICY_VERSION, {
            'mode': self.mode,
            'grids': {'observation': obs_poles(self.rl).tolist(), 'action': action_grid(self.rl).tolist()},
            'shape': list(self.tables[0].shape) if self.tables else None,
            'tables': [q.to_dict() for q in self.tables],
            'rl': asdict(self.rl),
            'config': self.config,
            'epsilon': self.epsilon,
            'episodes': self.episodes,
        })


    @classmethod
    def loads(cls, data, *, path=None):
        obj = loads(data, POLICY_FORMAT, POLICY_VERSION, path=path)

        try:
            rl = RLConfig(**{f.name: obj['rl'][f.name] for f in fields(RLConfig)})
            tables = [QTable.from_dict(t) for t in obj['tables']]
            return cls(obj['mode'], tables, rl, obj.get('config'), obj['epsilon'], obj['episodes'])
        except (KeyError, TypeError, ValueError) as exc:
            raise ArtifactError(f'{path or "data"}: corrupt policy dump: {exc}', path=path) from None


    def write(self, path):
        write_bytes(path, self.dumps())
        logger.info('TrainedPolicySet.write: %d %s table(s) written to %s', len(self.tables), self.mode, path)


def read_policy_set(path):
    return TrainedPolicySet.loads(read_bytes(path, 'policy'), path=path)


class QLearningController(Policy):
    """Drives the RL firms `firm_ids`; agent k controls firm firm_ids[k]."""

    def __init__(self, policies, rl, firm_ids, rng, epsilon=0.0, learning=False):
        super().__init__()
        self.policies = policies
        self.rl = rl
        self.firm_ids = np.asarray(firm_ids, dtype='i8')
        self.rng = rng
        self.epsilon = epsilon
        self.learning = learning

        self._grid = action_grid(rl)
        self._states = None
        self._actions = None


    def _observe(self, state):
        obs = observe(state.cfirms, state.avg_price, self.rl.quantity_floor)
        price_bins, stock_bins = discretize_observation(
            Observation(obs.log_price_delta[self.firm_ids], obs.log_stock[self.firm_ids]), self.rl)

        return [DiscreteState(int(i), int(j)) for i, j in zip(price_bins, stock_bins)]


    def _order(self):
        n = len(self.firm_ids)
        return self.rng.permutation(n) if self.rl.update_order == 'shuffled' else range(n)


    def decide(self, state, firm_ids=None):
        cf = state.cfirms
        states = self._observe(state)
        actions = [None] * len(self.firm_ids)

        next_price = np.empty(len(self.firm_ids))
        next_target = np.empty(len(self.firm_ids))

        for k in self._order():
            i = self.firm_ids[k]
            actions[k] = select_action(self.policies.table_for(k), states[k], self.epsilon, self.rng)
            decision = apply_action(cf.price[i], cf.target_output[i], action_pair(actions[k], self._grid), self.rl.quantity_floor)
            next_price[k], next_target[k] = decision

        self._states = states
        self._actions = actions

        return FirmDecision(next_price, next_target)


    def feedback(self, state):
        out = state.outcome.cfirms
        rl = self.rl

        rewards = np.array([
            compute_reward(out.real_profit[i], out.assets[i], rl.bankruptcy_penalty)
            for i in self.firm_ids
        ], dtype=float)

        if self.learning:
            next_states = self._observe(state)
            for k in self._order():
                q_update(self.policies.table_for(k), self._states[k], self._actions[k], rewards[k], next_states[k],
                         rl.learning_rate, rl.discount)

        return rewards
