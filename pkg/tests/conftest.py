import os

import pytest

from rmabm.params import default_config


SMALL = [
    'model.num_workers=60',
    'model.num_cfirms=6',
    'model.num_kfirms=3',
    'model.num_capitalists=5',
    'model.search_depth=3',
    'experiment.num_rl_agents=2',
    'experiment.t_train=2',
    'experiment.t_test=2',
    'experiment.t_sim=30',
    'experiment.t_burn_in=10',
    'experiment.t_shock=20',
    'experiment.irf_seeds=2',
    'analysis.gdp_window=10',
]


def small_config(*overrides):
    return default_config(SMALL + list(overrides))


@pytest.fixture
def small_cfg():
    return small_config()


@pytest.fixture
def small_params(small_cfg):
    return small_cfg.model


def pytest_collection_modifyitems(config, items):
    if os.environ.get('RMABM_ACCEPTANCE') == '1':
        return

    skip = pytest.mark.skip(reason='set RMABM_ACCEPTANCE=1 to run full-scale reproductions')
    for item in items:
        if 'acceptance' in item.keywords:
            item.add_marker(skip)
