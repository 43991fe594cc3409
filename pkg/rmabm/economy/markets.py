from typing import NamedTuple
import logging

import numpy as np

from rmabm.economy.state import UNEMPLOYED


logger = logging.getLogger(__name__)

# tolerance for ceilings of ratios that are integral up to rounding (4 / (1/3))
CEIL_TOL = 1e-9


def ceil_units(x):
    return np.maximum(np.ceil(np.asarray(x, dtype=float) - CEIL_TOL), 0.0)


def _rank_within_groups(groups):
    """Position of every element inside its (already sorted) group."""
    starts = np.searchsorted(groups, groups, side='left')
    return np.arange(len(groups)) - starts


def random_visits(rng, n_buyers, n_sellers, depth):
    """`depth` distinct sellers per buyer, uniformly at random."""
    keys = rng.random((n_buyers, n_sellers))
    if depth == n_sellers:
        return np.argsort(keys, axis=1)
    return np.argpartition(keys, depth - 1, axis=1)[:, :depth]


def sort_by_price(visits, prices):
    order = np.argsort(prices[visits], axis=1, kind='stable')
    return np.take_along_axis(visits, order, axis=1)


class MatchResult(NamedTuple):
    bought: np.ndarray
    spent: np.ndarray
    sold: np.ndarray
    demanded: np.ndarray
    revenue: np.ndarray


def search_and_match(visits, prices, stock, budgets, wants=None):
    """Buyers walk their price-sorted visit lists in simultaneous rounds.

    In round k every buyer with budget left asks its k-th seller for as much as the
    budget (and `wants`, if given) allows. Over-subscribed sellers serve every request
    in the same proportion and the buyer carries the rest of its budget on. A seller's
    demand is what it delivered plus, for buyers it rationed last, whatever they still
    could not buy after their final visit; a buyer's demand never exceeds its budget.
    """
    n_buyers, depth = visits.shape
    n_sellers = len(prices)

    budget = np.asarray(budgets, dtype=float).copy()
    want = None if wants is None else np.asarray(wants, dtype=float).copy()
    stock = np.asarray(stock, dtype=float).copy()

    bought = np.zeros(n_buyers)
    spent = np.zeros(n_buyers)
    sold = np.zeros(n_sellers)
    demanded = np.zeros(n_sellers)
    revenue = np.zeros(n_sellers)
    rationed_by = np.full(n_buyers, -1)

    for k in range(depth):
        seller = visits[:, k]
        price = prices[seller]

        request = budget / price
        if want is not None:
            request = np.minimum(request, want)
        request = np.where(request > 0, request, 0.0)

        if not request.any():
            break

        requested = np.bincount(seller, weights=request, minlength=n_sellers)

        fill = np.ones(n_sellers)
        over = requested > stock
        fill[over] = stock[over] / requested[over]

        got = request * fill[seller]
        cost = np.minimum(got * price, budget)
        rationed_by = np.where((request > 0) & (fill[seller] < 1.0), seller, rationed_by)

        bought += got
        spent += cost
        budget -= cost
        if want is not None:
            want = np.maximum(want - got, 0.0)

        delivered = np.bincount(seller, weights=got, minlength=n_sellers)
        demanded += delivered
        sold += np.minimum(delivered, stock)
        stock = np.maximum(stock - delivered, 0.0)
        revenue += np.bincount(seller, weights=cost, minlength=n_sellers)

    unmet = rationed_by >= 0
    last = rationed_by[unmet]
    residual = np.maximum(budget[unmet], 0.0) / prices[last]
    if want is not None:
        residual = np.minimum(residual, want[unmet])
    demanded += np.bincount(last, weights=residual, minlength=n_sellers)

    return MatchResult(bought, spent, sold, demanded, revenue)


def labour_targets(state):
    p = state.params
    cf, kf = state.cfirms, state.kfirms

    c_target = np.minimum(cf.target_output, p.capital_productivity * cf.capital) / p.labour_productivity
    k_target = np.maximum(kf.target_output - kf.inventory, 0.0) / p.labour_productivity

    return ceil_units(np.concatenate([c_target, k_target])).astype('i8')


def labour_market(state):
    p = state.params
    hh = state.households
    rng = state.rng
    n_firms = p.num_cfirms + p.num_kfirms

    target = labour_targets(state)
    employer = hh.employer

    # firing: surplus workers chosen at random
    employed = np.flatnonzero(employer != UNEMPLOYED)
    keys = rng.random(len(employed))
    order = np.lexsort((keys, employer[employed]))
    staff = employed[order]
    staff_firm = employer[staff]
    fired = _rank_within_groups(staff_firm) >= target[staff_firm]
    employer[staff[fired]] = UNEMPLOYED

    workforce = np.bincount(employer[employer != UNEMPLOYED], minlength=n_firms)
    vacancies = np.maximum(target - workforce, 0)

    # hiring: each visit goes to a random firm still posting vacancies; a firm that
    # turned applicants away is full, so no worker visits the same firm twice
    hired_total = 0
    for _ in range(p.labour_search_depth):
        seekers = np.flatnonzero(hh.workers & (employer == UNEMPLOYED))
        posting = np.flatnonzero(vacancies > 0)
        if len(seekers) == 0 or len(posting) == 0:
            break

        choice = posting[rng.integers(len(posting), size=len(seekers))]
        keys = rng.random(len(seekers))
        order = np.lexsort((keys, choice))
        applicants = seekers[order]
        applied_to = choice[order]

        hired = _rank_within_groups(applied_to) < vacancies[applied_to]
        employer[applicants[hired]] = applied_to[hired]
        vacancies -= np.bincount(applied_to[hired], minlength=n_firms)
        hired_total += int(hired.sum())

    workforce = np.bincount(employer[employer != UNEMPLOYED], minlength=n_firms)
    state.cfirms.workforce = workforce[:p.num_cfirms].astype('i8')
    state.kfirms.workforce = workforce[p.num_cfirms:].astype('i8')
    state.employment = int(workforce.sum())

    logger.debug('labour_market: t=%d fired=%d hired=%d employed=%d', state.t, int(fired.sum()), hired_total, state.employment)


def capital_demand(state):
    """Capital units each C-firm wants to buy: depreciation replacement plus any gap."""
    p = state.params
    cf = state.cfirms

    desired = ceil_units(cf.target_output / p.capital_productivity)
    return p.capital_depreciation * cf.capital + np.maximum(desired - cf.capital, 0.0)


def credit_market(state):
    p = state.params
    cf, kf = state.cfirms, state.kfirms

    # investment can only be planned up to the capital goods on offer
    investment = np.minimum(capital_demand(state), kf.inventory.sum())
    c_outlays = p.wage * cf.workforce + investment * state.avg_kprice
    k_outlays = p.wage * kf.workforce

    outlays = np.concatenate([c_outlays, k_outlays])
    assets = np.concatenate([cf.assets, kf.assets])
    shortfall = np.maximum(outlays - assets, 0.0)

    n = state.loans.issue(np.arange(len(outlays)), shortfall, p.loan_duration, state.t)

    cf.assets = cf.assets + shortfall[:p.num_cfirms]
    kf.assets = kf.assets + shortfall[p.num_cfirms:]

    logger.debug('credit_market: t=%d loans=%d amount=%.4g', state.t, n, shortfall.sum())


def capital_market(state):
    p = state.params
    cf, kf = state.cfirms, state.kfirms

    wants = capital_demand(state)
    cf.capital = (1.0 - p.capital_depreciation) * cf.capital

    budgets = np.maximum(cf.assets - p.wage * cf.workforce, 0.0)
    visits = sort_by_price(random_visits(state.rng, p.num_cfirms, p.num_kfirms, p.capital_search_depth), kf.price)

    match = search_and_match(visits, kf.price, kf.inventory, budgets, wants)

    cf.capital = cf.capital + match.bought
    cf.investment = match.spent
    cf.assets = cf.assets - match.spent

    kf.inventory = np.maximum(kf.inventory - match.sold, 0.0)
    kf.sales = match.sold
    kf.demand = match.demanded
    kf.revenue = match.revenue
    kf.assets = kf.assets + match.revenue


def pay_wages(state):
    p = state.params
    hh = state.households
    cf, kf = state.cfirms, state.kfirms

    cf.wage_bill = p.wage * cf.workforce
    kf.wage_bill = p.wage * kf.workforce
    cf.assets = cf.assets - cf.wage_bill
    kf.assets = kf.assets - kf.wage_bill

    employed = hh.employer != UNEMPLOYED
    hh.income = np.where(hh.is_capitalist, hh.income, np.where(employed, p.wage, 0.0))
    hh.deposits = hh.deposits + np.where(employed, p.wage, 0.0)


def production(state):
    p = state.params
    cf, kf = state.cfirms, state.kfirms

    pay_wages(state)

    # consumption goods are not storable: output replaces last step's
    cf.output = np.minimum(p.labour_productivity * cf.workforce, p.capital_productivity * cf.capital)

    kf.output = p.labour_productivity * kf.workforce
    kf.inventory = kf.inventory + kf.output


def consumption_budgets(state):
    p = state.params
    hh = state.households

    wealth = np.maximum(hh.deposits - hh.income, 0.0)
    budget = state.consumption_shock * (p.propensity_income * hh.income + p.propensity_wealth * wealth)
    return np.minimum(budget, hh.deposits)


def consumption_market(state):
    p = state.params
    hh = state.households
    cf = state.cfirms

    budgets = consumption_budgets(state)
    visits = sort_by_price(random_visits(state.rng, len(hh), p.num_cfirms, p.search_depth), cf.price)

    match = search_and_match(visits, cf.price, cf.output, budgets)

    cf.demand = match.demanded
    cf.sales = np.minimum(match.sold, cf.output)
    cf.revenue = match.revenue
    cf.assets = cf.assets + match.revenue

    hh.spending = match.spent
    hh.deposits = np.maximum(hh.deposits - match.spent, 0.0)
    state.consumption = float(match.spent.sum())
