from dataclasses import dataclass, asdict
from enum import Enum

import numpy as np
import pandas as pd

from rmabm.policy.qlearning import cumulative_return


class StrategyLabel(Enum):
    MARKET_POWER = 'MarketPower'
    DUMPING = 'Dumping'
    PERFECT_COMPETITION = 'PerfectCompetition'


@dataclass(frozen=True)
class FirmSummary:
    firm: int
    median_log_price_delta: float
    median_sales: float
    mean_reward: float
    mean_profit: float


def summarize_firm(frames, firm_id, t_burn_in):
    """Medians and means of one C-firm over the steps after burn-in.

    Firms that never acted as RL agents report their mean real profit as reward.
    """
    window = frames.after(t_burn_in)
    if not window.any():
        raise ValueError(f'no steps after t={t_burn_in} in a stream of {len(frames)} steps')

    profit = frames.firm_series('profit', firm_id)[window]
    rewards = frames.firm_series('reward', firm_id)[window]
    rewards = rewards[~np.isnan(rewards)]

    return FirmSummary(
        firm=int(firm_id),
        median_log_price_delta=float(np.median(frames.log_price_delta(firm_id)[window])),
        median_sales=float(np.median(frames.firm_series('sales', firm_id)[window])),
        mean_reward=float(rewards.mean()) if len(rewards) else float(profit.mean()),
        mean_profit=float(profit.mean()))


def classify_strategy(s, market_median_sales, thresholds):
    if s.median_log_price_delta > thresholds.market_power_delta and s.median_sales < thresholds.market_power_sales * market_median_sales:
        return StrategyLabel.MARKET_POWER

    if s.median_log_price_delta < thresholds.dumping_delta and s.median_sales > thresholds.dumping_sales * market_median_sales:
        return StrategyLabel.DUMPING

    return StrategyLabel.PERFECT_COMPETITION


def agent_returns(frames, firm_ids, t_burn_in, gamma):
    window = frames.after(t_burn_in)
    return np.array([cumulative_return(frames.firm_series('reward', i)[window], gamma) for i in firm_ids])


def summarize_episode(frames, t_burn_in, rl_ids, thresholds):
    """One row per C-firm with its summary, role, market-normalised sales and strategy label."""
    summaries = [summarize_firm(frames, i, t_burn_in) for i in range(frames.n_firms)]
    market_median = float(np.median([s.median_sales for s in summaries]))

    df = pd.DataFrame([asdict(s) for s in summaries])
    df.insert(1, 'rl', df.firm.isin(list(rl_ids)))
    df['relative_sales'] = df.median_sales / market_median if market_median > 0 else np.nan
    df['strategy'] = [classify_strategy(s, market_median, thresholds).value for s in summaries]

    return df


def count_strategies(firms):
    """Distinct strategy labels among the RL firms of each episode; two or more means the agents segregated."""
    rl = firms[firms.rl]
    return rl.groupby('episode').strategy.nunique()
