from typing import NamedTuple
import logging

import numpy as np

from rmabm.economy.accounting import settle_accounting, aggregate_statistics
from rmabm.economy.markets import (
    ceil_units, labour_market, credit_market, capital_market, production, consumption_market)
from rmabm.economy.state import (
    Bank, CFirms, EconomyState, Households, KFirms, LoanBook, UNEMPLOYED)
from rmabm.errors import ConfigurationError
from rmabm.harness.frames import MetricsFrame
from rmabm.params import ModelParams
from rmabm.policy.heuristic import HeuristicInputs, heuristic_decide


logger = logging.getLogger(__name__)


class EpisodeStreams(NamedTuple):
    economy: np.random.Generator
    heuristic: np.random.Generator
    agents: np.random.Generator


def episode_streams(seed):
    """Independent generators for market matching, heuristic noise and agent exploration."""
    children = np.random.SeedSequence(seed).spawn(3)
    return EpisodeStreams(*(np.random.default_rng(child) for child in children))


def init_economy(params, seed):
    if not isinstance(params, ModelParams):
        raise ConfigurationError(f'init_economy expects ModelParams, got {type(params).__name__}', key='model')

    p = params

    hh = Households(p.num_workers + p.num_capitalists)
    hh.is_capitalist[p.num_workers:] = True
    hh.employer[:] = UNEMPLOYED
    hh.deposits[:] = p.initial_deposits

    cf = CFirms(p.num_cfirms)
    cf.price[:] = p.initial_price
    cf.target_output[:] = p.initial_target_output
    cf.output[:] = p.initial_target_output
    cf.demand[:] = p.initial_target_output
    cf.sales[:] = p.initial_target_output
    cf.assets[:] = p.initial_cfirm_assets
    cf.capital[:] = ceil_units(p.initial_target_output / p.capital_productivity)

    kf = KFirms(p.num_kfirms)
    kf.price[:] = p.initial_price
    kf.target_output[:] = p.initial_kfirm_target
    kf.output[:] = p.initial_kfirm_target
    kf.demand[:] = p.initial_kfirm_target
    kf.sales[:] = p.initial_kfirm_target
    kf.assets[:] = p.initial_kfirm_assets

    state = EconomyState(p, hh, cf, kf, Bank(), LoanBook(0), episode_streams(seed).economy)

    logger.debug('init_economy: seed=%s households=%d cfirms=%d kfirms=%d', seed, len(hh), len(cf), len(kf))
    return state


def apply_decisions(state, decisions):
    n = state.params.num_cfirms

    price = np.asarray(decisions.next_price, dtype=float)
    target = np.asarray(decisions.next_target_output, dtype=float)

    if price.shape != (n,) or target.shape != (n,):
        raise ValueError(f'expected one decision per C-firm ({n}), got prices {price.shape} and targets {target.shape}')

    if not np.all(price > 0):
        raise ValueError(f'C-firm prices must be positive, got {price[~(price > 0)][:5]}')

    state.cfirms.price = price.copy()
    state.cfirms.target_output = np.maximum(target, 0.0)


def decide_kfirms(state):
    p = state.params
    kf = state.kfirms

    inputs = HeuristicInputs.from_firms(kf, state.avg_kprice)
    kf.price, kf.target_output = heuristic_decide(inputs, p.quantity_adjustment, p.price_adjustment_max, state.rng)


def step_economy(state, decisions):
    """Advance one step under the C-firms' decisions; returns the step's frame."""
    apply_decisions(state, decisions)
    decide_kfirms(state)

    state.t += 1

    labour_market(state)
    credit_market(state)
    capital_market(state)
    production(state)
    consumption_market(state)
    settle_accounting(state)
    aggregate_statistics(state)

    return MetricsFrame.from_state(state)
