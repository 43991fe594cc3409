import numpy as np
import pandas as pd
import pytest

from conftest import small_config
from rmabm.analysis.figures import gdp_table, reward_table, strategy_table, write_table
from rmabm.analysis.gdp import combine_gdp_moments, episode_gdp_moments, gdp_stats
from rmabm.analysis.irf import impulse_response, percent_deviation
from rmabm.analysis.summary import (
    FirmSummary, StrategyLabel, classify_strategy, count_strategies, summarize_episode, summarize_firm)
from rmabm.errors import ConfigurationError
from rmabm.harness.frames import FrameStream
from rmabm.harness.training import train


def stream(prices, sales, avg_price=1.0, real_gdp=None):
    """Frame stream with per-step, per-firm prices and sales; t runs from 1."""
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    sales = np.atleast_2d(np.asarray(sales, dtype=float))
    n_steps, n_firms = prices.shape

    frames = FrameStream(n_steps, n_firms)
    frames.t[:] = np.arange(1, n_steps + 1)
    frames.firms['price'][:] = prices
    frames.firms['sales'][:] = sales
    frames.firms['reward'][:] = np.nan
    frames.aggregates['avg_price'][:] = avg_price
    frames.aggregates['real_gdp'][:] = 1.0 if real_gdp is None else real_gdp
    frames._size = n_steps
    return frames


def test_constant_firm_summary():
    frames = stream(np.full((6, 2), [1.2, 1.0]), np.full((6, 2), 3.0))

    s = summarize_firm(frames, 0, t_burn_in=2)

    assert s.firm == 0
    assert s.median_log_price_delta == pytest.approx(np.log(1.2), abs=1e-12)
    assert s.median_sales == 3.0


def test_summary_ignores_burn_in():
    sales = np.array([[100.0], [100.0], [1.0], [5.0], [3.0]])
    frames = stream(np.ones((5, 1)), sales)

    assert summarize_firm(frames, 0, t_burn_in=2).median_sales == 3.0


def test_summary_needs_steps_after_burn_in():
    with pytest.raises(ValueError):
        summarize_firm(stream(np.ones((3, 1)), np.ones((3, 1))), 0, t_burn_in=3)


def test_mean_reward_skips_missing_rewards():
    frames = stream(np.ones((4, 1)), np.ones((4, 1)))
    frames.firms['reward'][2:, 0] = [2.0, 4.0]
    frames.firms['profit'][:, 0] = 10.0

    s = summarize_firm(frames, 0, t_burn_in=1)
    assert s.mean_reward == 3.0
    assert s.mean_profit == 10.0


@pytest.mark.parametrize('delta, sales, label', [
    (1.2, 0.1, StrategyLabel.MARKET_POWER),
    (-0.1, 3.0, StrategyLabel.DUMPING),
    (0.0, 1.0, StrategyLabel.PERFECT_COMPETITION),
    (0.25, 0.1, StrategyLabel.PERFECT_COMPETITION),
    (1.2, 1.0, StrategyLabel.PERFECT_COMPETITION),
    (-0.1, 1.5, StrategyLabel.PERFECT_COMPETITION),
])
def test_strategy_labels(small_cfg, delta, sales, label):
    s = FirmSummary(0, delta, sales, 0.0, 0.0)
    assert classify_strategy(s, 1.0, small_cfg.analysis) is label


def test_label_names():
    assert [label.value for label in StrategyLabel] == ['MarketPower', 'Dumping', 'PerfectCompetition']


def test_episode_summary_normalises_sales(small_cfg):
    prices = np.tile([2.0, 1.0, 1.0, 0.8], (5, 1))
    sales = np.tile([0.1, 1.0, 1.0, 4.0], (5, 1))
    frames = stream(prices, sales)

    df = summarize_episode(frames, 1, [0, 3], small_cfg.analysis)

    assert df.rl.tolist() == [True, False, False, True]
    np.testing.assert_allclose(df.relative_sales, [0.1, 1.0, 1.0, 4.0])
    assert df.strategy.tolist() == ['MarketPower', 'PerfectCompetition', 'PerfectCompetition', 'Dumping']


def test_segregation_count():
    firms = pd.DataFrame({
        'episode': [0, 0, 0, 1, 1, 1],
        'rl': [True, True, False, True, True, False],
        'strategy': ['MarketPower', 'Dumping', 'Dumping', 'Dumping', 'Dumping', 'MarketPower'],
    })

    assert count_strategies(firms).tolist() == [2, 1]


def test_constant_gdp():
    frames = stream(np.ones((20, 1)), np.ones((20, 1)), real_gdp=7.0)
    stats = gdp_stats([frames, frames], window=10)

    assert stats.mean == 7.0
    assert stats.std == 0.0
    assert stats.mean_se == 0.0
    assert stats.episodes == 2


def test_gdp_over_episodes():
    low = stream(np.ones((4, 1)), np.ones((4, 1)), real_gdp=10.0)
    high = stream(np.ones((4, 1)), np.ones((4, 1)), real_gdp=12.0)

    stats = gdp_stats([low, high], window=4)

    assert stats.mean == pytest.approx(11.0)
    assert stats.mean_se == pytest.approx(1.0)


def test_gdp_uses_final_window():
    frames = stream(np.ones((6, 1)), np.ones((6, 1)), real_gdp=np.array([100.0, 100.0, 1.0, 3.0, 1.0, 3.0]))

    mean, std = episode_gdp_moments(frames, 4)
    assert mean == 2.0
    assert std == 1.0


def test_gdp_ignores_order_within_window():
    gdp = np.array([5.0, 1.0, 2.0, 3.0, 4.0])
    a = stream(np.ones((5, 1)), np.ones((5, 1)), real_gdp=gdp)
    b = stream(np.ones((5, 1)), np.ones((5, 1)), real_gdp=np.concatenate([gdp[:1], gdp[:0:-1]]))

    assert episode_gdp_moments(a, 4) == pytest.approx(episode_gdp_moments(b, 4), abs=1e-12)


def test_gdp_window_longer_than_episode():
    frames = stream(np.ones((5, 1)), np.ones((5, 1)))

    with pytest.raises(ConfigurationError) as exc:
        episode_gdp_moments(frames, 6)
    assert exc.value.key == 'analysis.gdp_window'


def test_combine_needs_episodes():
    with pytest.raises(ValueError):
        combine_gdp_moments([])


def test_percent_deviation():
    np.testing.assert_allclose(percent_deviation([11.0, 9.0, 1.0], [10.0, 10.0, 0.0]), [10.0, -10.0, 0.0])


def test_zero_shock_gives_flat_response():
    cfg = small_config('N=0')
    result = impulse_response(cfg, None, shock_size=0.0)

    assert len(result.steps) == cfg.t_sim
    for name in ('consumption', 'real_gdp', 'deflator'):
        np.testing.assert_array_equal(result.mean[name], 0.0)
        np.testing.assert_array_equal(result.se[name], 0.0)


def test_demand_shock_raises_consumption_on_impact():
    cfg = small_config('N=0')
    result = impulse_response(cfg, None, shock_size=0.5)

    at_shock = int(np.flatnonzero(result.steps == cfg.t_shock)[0])
    before = result.steps < cfg.t_shock

    np.testing.assert_array_equal(result.mean['consumption'][before], 0.0)
    assert result.mean['consumption'][at_shock] > 0.0
    assert result.seeds == [10 ** 6, 10 ** 6 + 1]


def test_irf_with_trained_agents(small_cfg):
    policies = train(small_cfg).policies
    result = impulse_response(small_cfg, policies, shock_duration=3)

    df = result.to_dataframe()
    assert list(df.columns) == ['t', 'consumption', 'consumption_se', 'real_gdp', 'real_gdp_se', 'deflator', 'deflator_se']
    assert len(df) == small_cfg.t_sim
    assert result.shock.duration == 3


@pytest.mark.parametrize('kwargs, key', [
    ({'t_shock': 10}, 'experiment.t_shock'),
    ({'t_shock': 41}, 'experiment.t_shock'),
    ({'shock_size': -1.0}, 'experiment.shock_size'),
    ({'shock_duration': 0}, 'experiment.shock_duration'),
    ({'num_seeds': 0}, 'experiment.irf_seeds'),
])
def test_irf_argument_checks(kwargs, key):
    with pytest.raises(ConfigurationError) as exc:
        impulse_response(small_config('N=0'), None, **kwargs)
    assert exc.value.key == key


def sweep_frames():
    rows = []
    for mode, n in (('shared', 1), ('shared', 2)):
        for episode in range(2):
            for firm in range(3):
                rl = firm < n
                rows.append({
                    'episode': episode, 'firm': firm, 'rl': rl,
                    'median_log_price_delta': 0.5 if rl else 0.0,
                    'median_sales': 0.2 if rl else 1.0,
                    'mean_reward': 1.0, 'mean_profit': 1.0,
                    'relative_sales': 0.2 if rl else 1.0,
                    'strategy': 'MarketPower' if rl else 'PerfectCompetition',
                    'policy_mode': mode, 'num_rl_agents': n, 'search_depth': 5,
                })
    return pd.DataFrame(rows)


def sweep_episodes():
    return pd.DataFrame([
        {'episode': k, 'gdp_mean': 10.0 + 2 * k, 'gdp_std': 1.0, 'total_return': float(k),
         'policy_mode': 'shared', 'num_rl_agents': n, 'search_depth': 5}
        for n in (1, 2) for k in range(2)
    ])


def test_strategy_table():
    table = strategy_table(sweep_frames())

    assert table.num_rl_agents.tolist() == [1, 2]
    assert table.agents.tolist() == [2, 4]
    np.testing.assert_allclose(table.share_MarketPower, 1.0)
    np.testing.assert_allclose(table.share_Dumping, 0.0)
    np.testing.assert_allclose(table.heuristic_median_sales, 1.0)


def test_gdp_table():
    table = gdp_table(sweep_episodes())

    assert len(table) == 2
    np.testing.assert_allclose(table['mean'], 11.0)
    np.testing.assert_allclose(table.mean_se, 1.0)


def test_reward_table(tmp_path):
    table = reward_table(sweep_episodes())

    np.testing.assert_allclose(table.total_return, 0.5)
    assert {'total_return_std', 'total_return_se'} <= set(table.columns)

    table_path = tmp_path / 'rewards.tsv'
    write_table(table, str(table_path))
    assert pd.read_csv(table_path, sep='\t').shape == table.shape


def test_tables_need_cell_columns():
    with pytest.raises(ValueError):
        gdp_table(pd.DataFrame({'gdp_mean': [1.0], 'gdp_std': [0.0]}))
