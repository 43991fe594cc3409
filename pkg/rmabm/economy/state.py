from dataclasses import dataclass, asdict
import logging

import numpy as np

from rmabm.codec import dumps, loads, pack_array, unpack_array, read_bytes, write_bytes
from rmabm.params import ModelParams


logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = 'rmabm.snapshot'
SNAPSHOT_VERSION = 1

UNEMPLOYED = -1


class AgentArrays(object):
    """Struct-of-arrays population; subclasses list their columns in FIELDS."""

    FIELDS = ()

    def __init__(self, n):
        for name, dtype in self.FIELDS:
            setattr(self, name, np.zeros(n, dtype=dtype))


    def __len__(self):
        return len(getattr(self, self.FIELDS[0][0]))


    def to_dict(self):
        return {name: pack_array(getattr(self, name)) for name, _ in self.FIELDS}


    @classmethod
    def from_dict(cls, data):
        obj = cls.__new__(cls)
        for name, dtype in cls.FIELDS:
            setattr(obj, name, unpack_array(data[name]).astype(dtype, copy=False))
        return obj


    def copy(self):
        obj = self.__class__.__new__(self.__class__)
        for name, _ in self.FIELDS:
            setattr(obj, name, getattr(self, name).copy())
        return obj


class CFirms(AgentArrays):
    FIELDS = (
        ('price', 'f8'),
        ('target_output', 'f8'),
        ('output', 'f8'),
        ('demand', 'f8'),
        ('sales', 'f8'),
        ('assets', 'f8'),
        ('capital', 'f8'),
        ('workforce', 'i8'),
        ('revenue', 'f8'),
        ('wage_bill', 'f8'),
        ('investment', 'f8'),
        ('instalments', 'f8'),
        ('dividends', 'f8'),
        ('profit', 'f8'),           # nominal, after dividends
        ('real_profit', 'f8'),
        ('bankrupt', '?'),
    )


class KFirms(AgentArrays):
    FIELDS = (
        ('price', 'f8'),
        ('target_output', 'f8'),
        ('output', 'f8'),
        ('demand', 'f8'),
        ('sales', 'f8'),
        ('inventory', 'f8'),
        ('assets', 'f8'),
        ('workforce', 'i8'),
        ('revenue', 'f8'),
        ('wage_bill', 'f8'),
        ('instalments', 'f8'),
        ('dividends', 'f8'),
        ('profit', 'f8'),
        ('bankrupt', '?'),
    )


class Households(AgentArrays):
    FIELDS = (
        ('is_capitalist', '?'),
        ('employer', 'i8'),
        ('income', 'f8'),
        ('deposits', 'f8'),
        ('spending', 'f8'),
    )


    @property
    def workers(self):
        return ~self.is_capitalist


class LoanBook(AgentArrays):
    """Outstanding loans; `firm` indexes C-firms first, then K-firms."""

    FIELDS = (
        ('firm', 'i8'),
        ('principal', 'f8'),
        ('outstanding', 'f8'),
        ('remaining', 'i8'),
        ('issued', 'i8'),
    )


    def issue(self, firm_ids, amounts, duration, step):
        mask = amounts > 0
        n = int(mask.sum())

        self.firm = np.concatenate([self.firm, firm_ids[mask]])
        self.principal = np.concatenate([self.principal, amounts[mask]])
        self.outstanding = np.concatenate([self.outstanding, amounts[mask]])
        self.remaining = np.concatenate([self.remaining, np.full(n, duration, dtype='i8')])
        self.issued = np.concatenate([self.issued, np.full(n, step, dtype='i8')])

        return n


    def due(self, step, duration, rate):
        """Per-loan (amortization, interest) due at `step`; loans start paying the step after issue."""
        paying = self.issued < step

        amortization = np.where(self.remaining > 1, np.minimum(self.principal / duration, self.outstanding), self.outstanding)
        amortization = np.where(paying, amortization, 0.0)
        interest = np.where(paying, rate * self.outstanding, 0.0)

        return amortization, interest


    def repay(self, step, amortization):
        paying = self.issued < step

        self.outstanding = np.maximum(self.outstanding - amortization, 0.0)
        self.remaining = self.remaining - paying.astype('i8')
        self._keep(self.remaining > 0)


    def write_off(self, firm_ids):
        mask = np.isin(self.firm, firm_ids)
        written = float(self.outstanding[mask].sum())
        self._keep(~mask)
        return written


    def by_firm(self, n_firms, values=None):
        values = self.outstanding if values is None else values
        return np.bincount(self.firm, weights=values, minlength=n_firms)


    def for_firm(self, firm_id):
        mask = self.firm == firm_id
        return list(zip(self.outstanding[mask].tolist(), self.remaining[mask].tolist()))


    def _keep(self, mask):
        for name, _ in self.FIELDS:
            setattr(self, name, getattr(self, name)[mask])


    @property
    def total(self):
        return float(self.outstanding.sum())


class Bank(object):
    def __init__(self, equity=0.0):
        self.equity = equity
        self.total_deposits = 0.0
        self.outstanding_loans = 0.0


    def to_dict(self):
        return {'equity': self.equity, 'total_deposits': self.total_deposits, 'outstanding_loans': self.outstanding_loans}


    @classmethod
    def from_dict(cls, data):
        bank = cls(data['equity'])
        bank.total_deposits = data['total_deposits']
        bank.outstanding_loans = data['outstanding_loans']
        return bank


@dataclass(frozen=True)
class CFirmState:
    id: int
    price: float
    target_output: float
    output: float
    demand: float
    sales: float
    assets: float
    capital: float
    workforce: int
    outstanding_loans: list
    profit: float
    bankrupt: bool


@dataclass(frozen=True)
class KFirmState:
    id: int
    price: float
    output: float
    inventory: float
    workforce: int
    assets: float


@dataclass(frozen=True)
class HouseholdState:
    id: int
    is_capitalist: bool
    employer: object
    income: float
    deposits: float


class StepOutcome(object):
    """Per-firm observables of the last step, taken before bankrupt firms are replaced."""

    def __init__(self, cfirms, kfirms):
        self.cfirms = cfirms
        self.kfirms = kfirms


def _encode_ints(obj):
    # PCG64 state words do not fit msgpack integers
    if isinstance(obj, dict):
        return {k: _encode_ints(v) for k, v in obj.items()}
    if isinstance(obj, int) and not isinstance(obj, bool):
        return {'__int__': str(obj)}
    return obj


def _decode_ints(obj):
    if isinstance(obj, dict):
        if set(obj) == {'__int__'}:
            return int(obj['__int__'])
        return {k: _decode_ints(v) for k, v in obj.items()}
    return obj


class EconomyState(object):
    AGGREGATES = (
        't', 'avg_price', 'avg_kprice', 'price_base', 'price_base_step', 'price_index',
        'nominal_gdp', 'real_gdp', 'consumption', 'employment', 'bankruptcies',
        'consumption_shock', 'money_reference',
    )

    def __init__(self, params, households, cfirms, kfirms, bank, loans, rng):
        self.params = params
        self.households = households
        self.cfirms = cfirms
        self.kfirms = kfirms
        self.bank = bank
        self.loans = loans
        self.rng = rng
        self.outcome = None

        self.t = 0
        self.avg_price = params.initial_price
        self.avg_kprice = params.initial_price
        self.price_base = params.initial_price
        self.price_base_step = None
        self.price_index = 1.0
        self.nominal_gdp = 0.0
        self.real_gdp = 0.0
        self.consumption = 0.0
        self.employment = 0
        self.bankruptcies = 0
        self.consumption_shock = 1.0
        self.money_reference = self.money_stock()


    def money_stock(self):
        """Deposits and firm cash net of bank credit plus bank equity; constant across steps."""
        return (self.households.deposits.sum()
                + self.cfirms.assets.sum()
                + self.kfirms.assets.sum()
                - self.loans.total
                + self.bank.equity)


    def money_scale(self):
        return max(1.0, self.households.deposits.sum() + np.abs(self.cfirms.assets).sum()
                   + np.abs(self.kfirms.assets).sum() + self.loans.total)


    def cfirm(self, i):
        cf = self.cfirms
        return CFirmState(
            id=i,
            price=float(cf.price[i]),
            target_output=float(cf.target_output[i]),
            output=float(cf.output[i]),
            demand=float(cf.demand[i]),
            sales=float(cf.sales[i]),
            assets=float(cf.assets[i]),
            capital=float(cf.capital[i]),
            workforce=int(cf.workforce[i]),
            outstanding_loans=self.loans.for_firm(i),
            profit=float(cf.real_profit[i]),
            bankrupt=bool(cf.bankrupt[i]))


    def kfirm(self, j):
        kf = self.kfirms
        return KFirmState(
            id=j,
            price=float(kf.price[j]),
            output=float(kf.output[j]),
            inventory=float(kf.inventory[j]),
            workforce=int(kf.workforce[j]),
            assets=float(kf.assets[j]))


    def household(self, h):
        hh = self.households
        employer = int(hh.employer[h])
        return HouseholdState(
            id=h,
            is_capitalist=bool(hh.is_capitalist[h]),
            employer=None if employer == UNEMPLOYED else employer,
            income=float(hh.income[h]),
            deposits=float(hh.deposits[h]))


    def to_snapshot(self):
        return dumps(SNAPSHOT_FORMAT, SNAPSHOT_VERSION, {
            'params': asdict(self.params),
            'aggregates': {name: getattr(self, name) for name in self.AGGREGATES},
            'households': self.households.to_dict(),
            'cfirms': self.cfirms.to_dict(),
            'kfirms': self.kfirms.to_dict(),
            'loans': self.loans.to_dict(),
            'bank': self.bank.to_dict(),
            'rng': _encode_ints(self.rng.bit_generator.state),
        })


    @classmethod
    def from_snapshot(cls, data, *, path=None):
        obj = loads(data, SNAPSHOT_FORMAT, SNAPSHOT_VERSION, path=path)

        rng_state = _decode_ints(obj['rng'])
        bit_generator = getattr(np.random, rng_state['bit_generator'])()
        bit_generator.state = rng_state

        state = cls.__new__(cls)
        state.params = ModelParams(**obj['params'])
        state.households = Households.from_dict(obj['households'])
        state.cfirms = CFirms.from_dict(obj['cfirms'])
        state.kfirms = KFirms.from_dict(obj['kfirms'])
        state.loans = LoanBook.from_dict(obj['loans'])
        state.bank = Bank.from_dict(obj['bank'])
        state.rng = np.random.Generator(bit_generator)
        state.outcome = None

        for name, value in obj['aggregates'].items():
            setattr(state, name, value)

        return state


def write_snapshot(path, state):
    write_bytes(path, state.to_snapshot())
    logger.debug('write_snapshot: t=%d written to %s', state.t, path)


def read_snapshot(path):
    return EconomyState.from_snapshot(read_bytes(path, 'snapshot'), path=path)
