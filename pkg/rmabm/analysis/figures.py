"""Plot-ready tables: strategies across sweep cells, GDP level and volatility, rewards."""
import logging

import numpy as np
import pandas as pd

from rmabm.analysis.gdp import combine_gdp_moments
from rmabm.analysis.summary import StrategyLabel


logger = logging.getLogger(__name__)

CELL_KEYS = ['policy_mode', 'num_rl_agents', 'search_depth']


def _cells(df):
    keys = [k for k in CELL_KEYS if k in df.columns]
    if not keys:
        raise ValueError(f'table has none of the cell columns {CELL_KEYS}')
    return keys


def strategy_table(firms):
    """Per cell: median RL price delta and sales (raw and market-relative) and label shares."""
    rl = firms[firms.rl]
    keys = _cells(firms)

    grouped = rl.groupby(keys)
    table = grouped.agg(
        agents=('firm', 'size'),
        median_log_price_delta=('median_log_price_delta', 'median'),
        median_sales=('median_sales', 'median'),
        relative_sales=('relative_sales', 'median'),
        mean_reward=('mean_reward', 'mean'))

    for label in StrategyLabel:
        table[f'share_{label.value}'] = grouped.strategy.apply(lambda s, v=label.value: float((s == v).mean()))

    heuristic = firms[~firms.rl].groupby(keys).agg(
        heuristic_median_log_price_delta=('median_log_price_delta', 'median'),
        heuristic_median_sales=('median_sales', 'median'))

    return table.join(heuristic, how='outer').reset_index()


def gdp_table(episodes):
    """Per cell: mean and volatility of real GDP with standard errors across episodes."""
    rows = []
    for cell, group in episodes.groupby(_cells(episodes)):
        cell = cell if isinstance(cell, tuple) else (cell,)
        stats = combine_gdp_moments(group[['gdp_mean', 'gdp_std']].to_numpy())
        rows.append({**dict(zip(_cells(episodes), cell)), **stats._asdict()})

    return pd.DataFrame(rows)


def reward_table(episodes):
    """Per cell: total discounted return of the RL agents, mean and standard error across episodes."""
    def se(x):
        return float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else 0.0

    return (episodes.groupby(_cells(episodes))
            .total_return.agg(['mean', 'std', se])
            .rename(columns={'mean': 'total_return', 'std': 'total_return_std', 'se': 'total_return_se'})
            .reset_index())


def write_table(df, file_path, **kwargs):
    if 'sep' not in kwargs:
        kwargs['sep'] = '\t'

    df.to_csv(file_path, index=False, **kwargs)
    logger.debug('write_table: %d rows written to %s', len(df), file_path)
