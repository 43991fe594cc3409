import logging

import numpy as np

from rmabm.economy.state import StepOutcome, UNEMPLOYED
from rmabm.errors import IntegrityError


logger = logging.getLogger(__name__)

MONEY_TOLERANCE = 1e-6
CLEARING_TOLERANCE = 1e-9


def average_price(prices, sales):
    """Sales-weighted mean price; unweighted when nothing was sold."""
    prices = np.asarray(prices, dtype=float)
    sales = np.asarray(sales, dtype=float)

    total = sales.sum()
    if total > 0:
        return float(np.dot(prices, sales) / total)
    return float(prices.mean())


def gdp(state):
    """(nominal, real) value of C-goods and K-goods sold this step."""
    nominal = float(state.cfirms.revenue.sum() + state.kfirms.revenue.sum())
    return nominal, nominal / state.price_index


def update_price_level(state):
    state.avg_price = average_price(state.cfirms.price, state.cfirms.sales)
    state.avg_kprice = average_price(state.kfirms.price, state.kfirms.sales)

    if state.price_base_step is not None and state.t == state.price_base_step:
        state.price_base = state.avg_price
        logger.debug('update_price_level: price base fixed at t=%d to %.6g', state.t, state.price_base)

    state.price_index = state.avg_price / state.price_base


def _distribute_to_capitalists(state, amount):
    hh = state.households
    capitalists = hh.is_capitalist
    share = amount / capitalists.sum()

    hh.deposits[capitalists] += share
    hh.income[capitalists] = share


def _pay_instalments(state):
    p = state.params
    cf, kf = state.cfirms, state.kfirms
    n_c = p.num_cfirms

    amortization, interest = state.loans.due(state.t, p.loan_duration, p.interest_rate)
    per_firm = state.loans.by_firm(n_c + p.num_kfirms, amortization + interest)
    state.loans.repay(state.t, amortization)

    cf.instalments = per_firm[:n_c]
    kf.instalments = per_firm[n_c:]
    cf.assets = cf.assets - cf.instalments
    kf.assets = kf.assets - kf.instalments

    return float(interest.sum())


def _pay_dividends(firms, rate, pre_dividend_profit):
    firms.dividends = rate * np.maximum(pre_dividend_profit, 0.0)
    firms.profit = pre_dividend_profit - firms.dividends
    firms.assets = firms.assets - firms.dividends
    return float(firms.dividends.sum())


def _charge_capitalists(state, amount):
    """Capitalists bear `amount` pro rata to their deposits; bank equity covers the rest."""
    hh = state.households
    capitalists = hh.is_capitalist

    available = hh.deposits[capitalists].sum()
    taken = min(amount, available)

    if taken > 0:
        hh.deposits[capitalists] *= 1.0 - taken / available

    state.bank.equity -= amount - taken


def _replace_bankrupt(state, firms, offset, entrant_price, initial_assets):
    """Swap bankrupt firms for entrants in place; returns the number replaced."""
    p = state.params

    bankrupt = firms.assets <= 0
    n = int(bankrupt.sum())
    if n == 0:
        return 0

    ids = np.flatnonzero(bankrupt)
    alive = ~bankrupt

    # written-off loans and negative cash are the bank's losses
    losses = state.loans.write_off(ids + offset) - float(firms.assets[ids].sum())
    firms.assets[ids] = 0.0

    mean_assets = firms.assets[alive].mean() if alive.any() else initial_assets
    endowment = p.entrant_asset_fraction * mean_assets
    _charge_capitalists(state, losses + endowment * n)

    target = firms.target_output[alive].mean() if alive.any() else firms.target_output.mean()

    firms.assets[ids] = endowment
    firms.price[ids] = entrant_price
    firms.target_output[ids] = target
    firms.output[ids] = target
    firms.demand[ids] = target
    firms.sales[ids] = target
    firms.workforce[ids] = 0

    employer = state.households.employer
    employer[np.isin(employer, ids + offset)] = UNEMPLOYED

    firms.bankrupt = np.zeros(len(firms), dtype=bool)
    return n


def settle_accounting(state):
    p = state.params
    cf, kf = state.cfirms, state.kfirms

    interest = _pay_instalments(state)
    update_price_level(state)

    c_profit = cf.revenue - cf.wage_bill - cf.investment - cf.instalments
    k_profit = kf.revenue - kf.wage_bill - kf.instalments

    dividends = _pay_dividends(cf, p.dividend_rate, c_profit) + _pay_dividends(kf, p.dividend_rate, k_profit)

    # a bank with negative equity keeps its interest income until it is whole again
    retained = min(interest, max(-state.bank.equity, 0.0))
    state.bank.equity += retained
    _distribute_to_capitalists(state, dividends + interest - retained)

    cf.real_profit = cf.profit / state.price_index

    cf.bankrupt = cf.assets <= 0
    kf.bankrupt = kf.assets <= 0
    state.outcome = StepOutcome(cf.copy(), kf.copy())

    n_c = _replace_bankrupt(state, cf, 0, state.avg_price, p.initial_cfirm_assets)
    n_k = _replace_bankrupt(state, kf, p.num_cfirms, state.avg_kprice, p.initial_kfirm_assets)
    state.bankruptcies = n_c + n_k

    if state.bankruptcies:
        logger.debug('settle_accounting: t=%d bankrupt C-firms=%d K-firms=%d', state.t, n_c, n_k)


def check_integrity(state):
    drift = abs(state.money_stock() - state.money_reference)
    if not np.isfinite(drift) or drift > MONEY_TOLERANCE * state.money_scale():
        raise IntegrityError(f'money stock drifted by {drift:.3g} at t={state.t}', step=state.t, mismatch=drift)

    spending = state.households.spending.sum()
    revenue = state.outcome.cfirms.revenue.sum()
    gap = abs(spending - revenue)
    if not np.isfinite(gap) or gap > CLEARING_TOLERANCE * max(1.0, spending):
        raise IntegrityError(f'consumption spending and C-firm revenue differ by {gap:.3g} at t={state.t}', step=state.t, mismatch=gap)


def aggregate_statistics(state):
    state.nominal_gdp, state.real_gdp = gdp(state)

    state.bank.total_deposits = float(state.households.deposits.sum())
    state.bank.outstanding_loans = state.loans.total
    state.bank.equity = float(state.bank.equity)

    check_integrity(state)

