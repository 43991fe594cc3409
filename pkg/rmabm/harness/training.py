from functools import partial
from multiprocessing import Pool
from os import path
from typing import NamedTuple
import logging

import numpy as np
import pandas as pd

from rmabm.analysis.gdp import combine_gdp_moments, episode_gdp_moments
from rmabm.analysis.summary import agent_returns, count_strategies, summarize_episode
from rmabm.errors import ConfigurationError, IntegrityError
from rmabm.harness.episode import epsilon_schedule, rl_firm_ids, run_episode
from rmabm.params import config_to_dict
from rmabm.policy.agents import TrainedPolicySet


logger = logging.getLogger(__name__)

EVALUATION_SEED_OFFSET = 10 ** 6


def train_seed(cfg, tau):
    return cfg.base_seed if cfg.fixed_seed else cfg.base_seed + tau


def evaluation_seed(cfg, k):
    return cfg.base_seed + EVALUATION_SEED_OFFSET + k


def parallel_map(fn, items, jobs=1):
    """`map` over a process pool; results keep the order of `items`."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    with Pool(min(jobs, len(items))) as pool:
        return pool.map(fn, items)


class TrainingResult(NamedTuple):
    policies: TrainedPolicySet
    curves: pd.DataFrame


def _post_burn_in_means(cfg, frames):
    window = frames.after(cfg.t_burn_in)
    n_rl = cfg.num_rl_agents

    rewards = frames.firm_series('reward')[window][:, :n_rl]
    profits = frames.firm_series('profit')[window][:, n_rl:]

    mean_reward = float(rewards.mean()) if n_rl > 0 else np.nan
    mean_profit = float(profits.mean()) if profits.size else np.nan
    return mean_reward, mean_profit


def train(cfg, policies=None):
    """T_train sequential learning episodes; Q-tables carry over, the economy does not."""
    if policies is None:
        policies = TrainedPolicySet.create(cfg.rl, cfg.num_rl_agents, config_to_dict(cfg))

    rows = []

    for tau in range(1, cfg.t_train + 1):
        epsilon = epsilon_schedule(tau)
        seed = train_seed(cfg, tau)

        frames, policies = run_episode(cfg, policies, epsilon, seed, learning=True)
        mean_reward, mean_profit = _post_burn_in_means(cfg, frames)

        policies.epsilon = epsilon
        policies.episodes = tau

        rows.append({
            'episode': tau,
            'seed': seed,
            'epsilon': epsilon,
            'mean_reward': mean_reward,
            'mean_heuristic_profit': mean_profit,
            'bankruptcies': int(frames.series('bankruptcies').sum()),
        })

        logger.info('train: episode %d/%d seed=%d epsilon=%.3f mean_reward=%.4g mean_heuristic_profit=%.4g',
                    tau, cfg.t_train, seed, epsilon, mean_reward, mean_profit)

    return TrainingResult(policies, pd.DataFrame(rows))


class EpisodeReport(NamedTuple):
    episode: int
    seed: int
    firms: pd.DataFrame
    gdp_mean: float
    gdp_std: float
    mean_reward: float
    mean_heuristic_profit: float
    total_return: float
    frames_path: str


def _evaluation_episode(cfg, policies, frames_dir, k):
    seed = evaluation_seed(cfg, k)
    frames, _ = run_episode(cfg, policies, 0.0, seed, learning=False)

    rl_ids = rl_firm_ids(cfg)
    firms = summarize_episode(frames, cfg.t_burn_in, rl_ids, cfg.analysis)
    firms.insert(0, 'episode', k)

    gdp_mean, gdp_std = episode_gdp_moments(frames, cfg.analysis.gdp_window)
    mean_reward, mean_profit = _post_burn_in_means(cfg, frames)
    returns = agent_returns(frames, rl_ids, cfg.t_burn_in, cfg.rl.discount)

    frames_path = None
    if frames_dir is not None:
        frames_path = path.join(frames_dir, f'episode-{k}.tsv.gz')
        frames.write_tsv(frames_path)

    logger.info('evaluate: episode %d seed=%d mean_reward=%.4g gdp=%.4g', k, seed, mean_reward, gdp_mean)

    return EpisodeReport(k, seed, firms, gdp_mean, gdp_std, mean_reward, mean_profit, float(returns.sum()), frames_path)


class EvaluationResult(NamedTuple):
    episodes: pd.DataFrame
    firms: pd.DataFrame
    summary: dict
    frames_paths: list


def _mean_std(values):
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if len(values) == 0:
        return None
    return {'mean': float(values.mean()), 'std': float(values.std())}


def evaluate(cfg, policies, jobs=1, frames_dir=None):
    """T_test greedy episodes; error bars are one standard deviation across episodes."""
    if cfg.analysis.gdp_window > cfg.episode_length:
        raise ConfigurationError(
            f'GDP window of {cfg.analysis.gdp_window} steps exceeds the {cfg.episode_length}-step episode', key='analysis.gdp_window')

    if policies is not None:
        policies.check_compatible(cfg)
    before = policies.digest() if policies is not None else None

    reports = parallel_map(partial(_evaluation_episode, cfg, policies, frames_dir), range(cfg.t_test), jobs)

    if policies is not None and policies.digest() != before:
        raise IntegrityError('evaluation changed the Q-tables')

    episodes = pd.DataFrame([{
        'episode': r.episode,
        'seed': r.seed,
        'gdp_mean': r.gdp_mean,
        'gdp_std': r.gdp_std,
        'mean_reward': r.mean_reward,
        'mean_heuristic_profit': r.mean_heuristic_profit,
        'total_return': r.total_return,
    } for r in reports])

    firms = pd.concat([r.firms for r in reports], ignore_index=True)
    rl_firms = firms[firms.rl]
    per_agent = rl_firms.groupby('firm')[['median_log_price_delta', 'median_sales', 'mean_reward']].mean()
    heuristic = firms[~firms.rl]

    gdp = combine_gdp_moments(episodes[['gdp_mean', 'gdp_std']].to_numpy())

    summary = {
        'episodes': len(reports),
        'num_rl_agents': cfg.num_rl_agents,
        'policy_mode': cfg.rl.policy_mode,
        'search_depth': cfg.model.search_depth,
        'mean_reward': _mean_std(episodes.mean_reward),
        'mean_heuristic_profit': _mean_std(episodes.mean_heuristic_profit),
        'total_return': _mean_std(episodes.total_return),
        'rl_median_log_price_delta': _mean_std(rl_firms.median_log_price_delta),
        'rl_median_sales': _mean_std(rl_firms.median_sales),
        'heuristic_median_log_price_delta': float(heuristic.median_log_price_delta.median()) if len(heuristic) else None,
        'heuristic_median_sales': float(heuristic.median_sales.median()) if len(heuristic) else None,
        'rl_strategies': {label: int(n) for label, n in rl_firms.strategy.value_counts().items()},
        'rl_distinct_strategies': _mean_std(count_strategies(firms)),
        'gdp': gdp._asdict(),
        'agents': {int(i): {k: float(v) for k, v in row.items()} for i, row in per_agent.iterrows()},
    }

    return EvaluationResult(episodes, firms, summary, [r.frames_path for r in reports if r.frames_path])
