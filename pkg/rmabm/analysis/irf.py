"""Impulse responses from paired shocked/unshocked episodes with common random numbers."""
from functools import partial
from typing import NamedTuple
import logging

import numpy as np
import pandas as pd

from rmabm.errors import ConfigurationError
from rmabm.harness.episode import Shock, run_episode
from rmabm.harness.training import evaluation_seed, parallel_map


logger = logging.getLogger(__name__)

IRF_VARIABLES = ('consumption', 'real_gdp', 'deflator')


class IRFResult(NamedTuple):
    steps: np.ndarray
    mean: dict
    se: dict
    shock: Shock
    seeds: list


    def to_dataframe(self):
        df = pd.DataFrame({'t': self.steps})
        for name in IRF_VARIABLES:
            df[name] = self.mean[name]
            df[f'{name}_se'] = self.se[name]
        return df


def percent_deviation(shocked, baseline):
    shocked = np.asarray(shocked, dtype=float)
    baseline = np.asarray(baseline, dtype=float)

    deviation = np.zeros_like(baseline)
    np.divide(shocked - baseline, baseline, out=deviation, where=baseline != 0)
    return 100.0 * deviation


def _irf_series(frames):
    return {
        'consumption': frames.series('consumption'),
        'real_gdp': frames.series('real_gdp'),
        'deflator': frames.deflator(),
    }


def _paired_run(cfg, policies, shock, seed):
    baseline, _ = run_episode(cfg, policies, 0.0, seed, learning=False)
    shocked, _ = run_episode(cfg, policies, 0.0, seed, learning=False, shock=shock)

    window = baseline.after(cfg.t_burn_in)
    base, hit = _irf_series(baseline), _irf_series(shocked)

    return {name: percent_deviation(hit[name], base[name])[window] for name in IRF_VARIABLES}


def impulse_response(cfg, policies, shock_size=None, t_shock=None, num_seeds=None, shock_duration=None, jobs=1):
    """Mean percentage deviation of consumption, real GDP and deflator after a propensity shock."""
    shock = Shock(
        t_start=cfg.t_shock if t_shock is None else t_shock,
        size=cfg.shock_size if shock_size is None else shock_size,
        duration=cfg.shock_duration if shock_duration is None else shock_duration)
    num_seeds = cfg.irf_seeds if num_seeds is None else num_seeds

    if shock.t_start <= cfg.t_burn_in:
        raise ConfigurationError(f'shock at t={shock.t_start} falls inside the {cfg.t_burn_in}-step burn-in', key='experiment.t_shock')
    if shock.t_start > cfg.episode_length:
        raise ConfigurationError(f'shock at t={shock.t_start} falls after the {cfg.episode_length}-step episode', key='experiment.t_shock')
    if shock.size <= -1:
        raise ConfigurationError(f'shock size must exceed -1, got {shock.size}', key='experiment.shock_size')
    if shock.duration < 1:
        raise ConfigurationError(f'shock duration must be positive, got {shock.duration}', key='experiment.shock_duration')
    if num_seeds < 1:
        raise ConfigurationError(f'need at least one seed, got {num_seeds}', key='experiment.irf_seeds')

    if policies is not None:
        policies.check_compatible(cfg)

    seeds = [evaluation_seed(cfg, k) for k in range(num_seeds)]
    runs = parallel_map(partial(_paired_run, cfg, policies, shock), seeds, jobs)

    mean, se = {}, {}
    for name in IRF_VARIABLES:
        stacked = np.stack([run[name] for run in runs])
        mean[name] = stacked.mean(axis=0)
        se[name] = stacked.std(axis=0, ddof=1) / np.sqrt(len(runs)) if len(runs) > 1 else np.zeros(stacked.shape[1])

    steps = np.arange(cfg.t_burn_in + 1, cfg.episode_length + 1)
    logger.info('impulse_response: shock %+.0f%% at t=%d for %d step(s), %d seeds, peak consumption deviation %.3g%%',
                100 * shock.size, shock.t_start, shock.duration, len(seeds), mean['consumption'].max())

    return IRFResult(steps, mean, se, shock, seeds)
