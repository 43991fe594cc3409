"""Full-scale reproductions of the qualitative results; minutes to hours each."""
from functools import partial
import os

import numpy as np
import pytest

from rmabm.analysis.irf import impulse_response
from rmabm.analysis.summary import count_strategies
from rmabm.economy.economy import init_economy, step_economy
from rmabm.harness.training import evaluate, parallel_map, train
from rmabm.params import default_config
from rmabm.policy.heuristic import HeuristicPolicy
from test_economy import random_config


pytestmark = pytest.mark.acceptance

JOBS = int(os.environ.get('RMABM_JOBS', os.cpu_count() or 1))
SEEDS = range(10)


def trained_summary(overrides, seed):
    cfg = default_config(list(overrides) + [f'experiment.base_seed={seed}', 'experiment.t_test=5'])
    policies = train(cfg).policies if cfg.num_rl_agents > 0 else None
    result = evaluate(cfg, policies)

    rl = result.firms[result.firms.rl]
    heuristic = result.firms[~result.firms.rl]
    return {
        'mean_reward': result.episodes.mean_reward.mean(),
        'mean_heuristic_profit': result.episodes.mean_heuristic_profit.mean(),
        'total_return': result.episodes.total_return.mean(),
        'rl_delta': rl.median_log_price_delta.median() if len(rl) else np.nan,
        'rl_sales': rl.median_sales.median() if len(rl) else np.nan,
        'heuristic_sales': heuristic.median_sales.median(),
        'labels': count_strategies(result.firms).median() if len(rl) else 0,
        'gdp_mean': result.summary['gdp']['mean'],
        'gdp_std': result.summary['gdp']['std'],
    }


def across_seeds(*overrides):
    return parallel_map(partial(trained_summary, overrides), SEEDS, JOBS)


def test_rl_firm_outearns_heuristic_firms():
    runs = across_seeds('N=1', 'z_c=5')
    assert sum(r['mean_reward'] > r['mean_heuristic_profit'] for r in runs) >= 8


def test_search_depth_switches_strategy():
    shallow = across_seeds('N=1', 'z_c=2')
    deep = across_seeds('N=1', 'z_c=5')

    assert sum(r['rl_delta'] > 0 for r in shallow) >= 8
    assert sum(r['rl_delta'] < 0 for r in deep) >= 8
    assert np.median([r['rl_sales'] - r['heuristic_sales'] for r in shallow]) < 0
    assert np.median([r['rl_sales'] - r['heuristic_sales'] for r in deep]) > 0


def test_shared_policy_stops_dumping_as_n_grows():
    for n in (1, 2):
        runs = across_seeds(f'N={n}', 'z_c=5', 'policy_mode=shared')
        assert sum(r['rl_delta'] < 0 for r in runs) > len(runs) / 2
    for n in (5, 10):
        runs = across_seeds(f'N={n}', 'z_c=5', 'policy_mode=shared')
        assert sum(abs(r['rl_delta']) <= 0.1 for r in runs) > len(runs) / 2


@pytest.mark.parametrize('n', [3, 5, 10])
def test_independent_tables_earn_more(n):
    shared = across_seeds(f'N={n}', 'policy_mode=shared')
    independent = across_seeds(f'N={n}', 'policy_mode=independent')

    wins = sum(i['total_return'] > s['total_return'] for s, i in zip(shared, independent))
    assert wins >= 7


def test_independent_agents_segregate():
    runs = across_seeds('N=20', 'policy_mode=independent')
    assert sum(r['labels'] >= 2 for r in runs) > len(runs) / 2


@pytest.mark.parametrize('mode', ['shared', 'independent'])
@pytest.mark.parametrize('n', [1, 3, 5, 10])
def test_rl_agents_raise_output(mode, n):
    baseline = across_seeds('N=0')
    runs = across_seeds(f'N={n}', f'policy_mode={mode}')

    wins = sum(r['gdp_mean'] > b['gdp_mean'] for r, b in zip(runs, baseline))
    assert wins > len(runs) / 2


def test_volatility_ordering():
    baseline = across_seeds('N=0')

    def majority_above(runs, reference):
        return sum(r['gdp_std'] > b['gdp_std'] for r, b in zip(runs, reference)) > len(runs) / 2

    for n in (1, 2):
        assert majority_above(across_seeds(f'N={n}', 'policy_mode=shared'), baseline)
    for n in (5, 10):
        shared = across_seeds(f'N={n}', 'policy_mode=shared')
        independent = across_seeds(f'N={n}', 'policy_mode=independent')
        assert majority_above(baseline, shared)
        assert sum(i['gdp_std'] >= s['gdp_std'] for s, i in zip(shared, independent)) > len(shared) / 2


def recovery_step(result, t_shock):
    """First step after the shock from which consumption stays within 1% of its unshocked path."""
    after = result.steps > t_shock
    outside = np.flatnonzero(after & (abs(result.mean['consumption']) > 1.0))
    return int(result.steps[outside[-1]]) + 1 if len(outside) else t_shock + 1


def test_demand_shock_response():
    cfg = default_config(['N=1'])
    policies = train(cfg).policies

    flat = impulse_response(cfg, policies, shock_size=0.0, jobs=JOBS)
    for name in ('consumption', 'real_gdp', 'deflator'):
        np.testing.assert_array_equal(flat.mean[name], 0.0)

    shocked = impulse_response(cfg, policies, jobs=JOBS)
    response = shocked.mean['consumption']
    at_shock = int(np.flatnonzero(shocked.steps == cfg.t_shock)[0])

    assert response[at_shock] > 0
    assert abs(response[-100:]).mean() < response[at_shock]

    baseline = impulse_response(default_config(['N=0']), None, jobs=JOBS)
    assert recovery_step(shocked, cfg.t_shock) <= recovery_step(baseline, cfg.t_shock)


def random_config_run(seed):
    params = random_config(seed).model
    state = init_economy(params, seed)
    heuristic = HeuristicPolicy(np.random.default_rng(seed))
    ids = np.arange(params.num_cfirms)

    for _ in range(200):
        frame = step_economy(state, heuristic.decide(state, ids))
        outcome = state.outcome.cfirms
        bound = np.minimum(params.labour_productivity * outcome.workforce, params.capital_productivity * outcome.capital)

        if not np.allclose(frame.output, bound, rtol=1e-12, atol=1e-12):
            return False
        if not np.allclose(frame.sales, np.minimum(frame.output, frame.demand), rtol=1e-9, atol=1e-9):
            return False

    return True


def test_market_identities_on_many_configurations():
    assert all(parallel_map(random_config_run, range(100), JOBS))
