"""Per-step observables of an episode.

A frame stream is persisted as one TSV row per step. Columns are `t`, the
aggregates (`avg_price`, `avg_kprice`, `price_index`, `nominal_gdp`, `real_gdp`,
`employment`, `consumption`, `bankruptcies`) and then one column per C-firm and
field, named `<field>.<firm id>` for the fields `price`, `sales`, `output`,
`demand`, `profit`, `reward`, `assets` and `bankrupt`. Profits are real; rewards
are empty for firms that are not RL-controlled at that step.
"""
from dataclasses import dataclass
import logging

import numpy as np
import pandas as pd


logger = logging.getLogger(__name__)

FIRM_FIELDS = ('price', 'sales', 'output', 'demand', 'profit', 'reward', 'assets', 'bankrupt')
AGGREGATE_FIELDS = ('avg_price', 'avg_kprice', 'price_index', 'nominal_gdp', 'real_gdp', 'employment', 'consumption', 'bankruptcies')


@dataclass
class MetricsFrame:
    t: int
    price: np.ndarray
    sales: np.ndarray
    output: np.ndarray
    demand: np.ndarray
    profit: np.ndarray
    reward: np.ndarray
    assets: np.ndarray
    bankrupt: np.ndarray
    avg_price: float
    avg_kprice: float
    price_index: float
    nominal_gdp: float
    real_gdp: float
    employment: int
    consumption: float
    bankruptcies: int


    @classmethod
    def from_state(cls, state):
        """Frame of the step just settled, read before bankrupt firms were replaced."""
        cf = state.outcome.cfirms

        return cls(
            t=state.t,
            price=cf.price.copy(),
            sales=cf.sales.copy(),
            output=cf.output.copy(),
            demand=cf.demand.copy(),
            profit=cf.real_profit.copy(),
            reward=np.full(len(cf), np.nan),
            assets=cf.assets.copy(),
            bankrupt=cf.bankrupt.copy(),
            avg_price=state.avg_price,
            avg_kprice=state.avg_kprice,
            price_index=state.price_index,
            nominal_gdp=state.nominal_gdp,
            real_gdp=state.real_gdp,
            employment=state.employment,
            consumption=state.consumption,
            bankruptcies=state.bankruptcies)


class FrameStream(object):
    """Preallocated column store of the frames of one episode."""

    def __init__(self, n_steps, n_firms):
        self.n_firms = n_firms
        self.t = np.zeros(n_steps, dtype='i8')
        self.firms = {name: np.zeros((n_steps, n_firms)) for name in FIRM_FIELDS}
        self.aggregates = {name: np.zeros(n_steps) for name in AGGREGATE_FIELDS}
        self._size = 0


    def __len__(self):
        return self._size


    def append(self, frame):
        k = self._size
        if k == len(self.t):
            raise IndexError(f'frame stream is full ({k} steps)')

        self.t[k] = frame.t
        for name in FIRM_FIELDS:
            self.firms[name][k] = getattr(frame, name)
        for name in AGGREGATE_FIELDS:
            self.aggregates[name][k] = getattr(frame, name)

        self._size += 1


    def firm_series(self, name, firm_id=None):
        values = self.firms[name][:self._size]
        return values if firm_id is None else values[:, firm_id]


    def series(self, name):
        return self.aggregates[name][:self._size]


    def steps(self):
        return self.t[:self._size]


    def deflator(self):
        nominal = self.series('nominal_gdp')
        real = self.series('real_gdp')
        return np.where(real > 0, nominal / np.where(real > 0, real, 1.0), self.series('price_index'))


    def log_price_delta(self, firm_id=None):
        prices = self.firm_series('price', firm_id)
        avg = self.series('avg_price')
        return np.log(prices / (avg if firm_id is not None else avg[:, None]))


    def after(self, t_start):
        """Row mask of the steps strictly after `t_start`."""
        return self.steps() > t_start


    def to_dataframe(self):
        columns = {'t': self.steps()}
        columns.update({name: self.series(name) for name in AGGREGATE_FIELDS})

        for name in FIRM_FIELDS:
            values = self.firm_series(name)
            columns.update({f'{name}.{i}': values[:, i] for i in range(self.n_firms)})

        return pd.DataFrame(columns)


    @classmethod
    def from_dataframe(cls, df):
        n_firms = sum(1 for c in df.columns if c.startswith('price.'))
        stream = cls(len(df), n_firms)

        stream.t[:] = df['t'].to_numpy()
        for name in AGGREGATE_FIELDS:
            stream.aggregates[name][:] = df[name].to_numpy(dtype=float)
        for name in FIRM_FIELDS:
            stream.firms[name][:] = df[[f'{name}.{i}' for i in range(n_firms)]].to_numpy(dtype=float)

        stream._size = len(df)
        return stream


    def write_tsv(self, file_path, **kwargs):
        if 'sep' not in kwargs:
            kwargs['sep'] = '\t'

        self.to_dataframe().to_csv(file_path, index=False, **kwargs)
        logger.debug('FrameStream.write_tsv: %d steps written to %s', len(self), file_path)


def read_frames_tsv(file_path, **kwargs):
    if 'sep' not in kwargs:
        kwargs['sep'] = '\t'

    return FrameStream.from_dataframe(pd.read_csv(file_path, **kwargs))
