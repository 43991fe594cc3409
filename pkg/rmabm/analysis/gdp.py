from typing import NamedTuple

import numpy as np

from rmabm.errors import ConfigurationError


class GDPStats(NamedTuple):
    mean: float
    std: float
    mean_se: float
    std_se: float
    episodes: int


def episode_gdp_moments(frames, window):
    """(mean, std) of real GDP over the last `window` steps of one episode."""
    if window > len(frames):
        raise ConfigurationError(f'GDP window of {window} steps exceeds the {len(frames)}-step episode', key='analysis.gdp_window')

    tail = frames.series('real_gdp')[-window:]
    return float(tail.mean()), float(tail.std())


def _standard_error(values):
    return float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0


def combine_gdp_moments(moments):
    moments = np.asarray(moments, dtype=float).reshape(-1, 2)
    if len(moments) == 0:
        raise ValueError('no episodes to combine')

    means, stds = moments[:, 0], moments[:, 1]
    return GDPStats(float(means.mean()), float(stds.mean()), _standard_error(means), _standard_error(stds), len(moments))


def gdp_stats(frames, window=1000):
    """GDP level and volatility over the final `window` steps, averaged over episodes."""
    return combine_gdp_moments([episode_gdp_moments(f, window) for f in frames])
