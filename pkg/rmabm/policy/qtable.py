from hashlib import sha256

import numpy as np
import pandas as pd

from rmabm.codec import pack_array, unpack_array


class QTable(object):
    """Action values over (price bin, stock bin) x (price action, quantity action)."""

    def __init__(self, n_states, n_actions, values=None, update_count=None):
        shape = (n_states, n_states, n_actions, n_actions)

        self.values = np.zeros(shape) if values is None else values
        self.update_count = np.zeros(shape, dtype='i8') if update_count is None else update_count

        if self.values.shape != shape or self.update_count.shape != shape:
            raise ValueError(f'Q-table arrays must have shape {shape}, got {self.values.shape} and {self.update_count.shape}')


    @property
    def shape(self):
        return self.values.shape


    @property
    def n_states(self):
        return self.values.shape[0]


    @property
    def n_actions(self):
        return self.values.shape[2]


    def action_values(self, s):
        return self.values[s.price_bin, s.stock_bin]


    def greedy_actions(self, s):
        """All maximising (price action, quantity action) index pairs at s."""
        slice_ = self.action_values(s)
        return [tuple(a) for a in np.argwhere(slice_ == slice_.max())]


    def digest(self):
        h = sha256()
        h.update(self.values.tobytes())
        h.update(self.update_count.tobytes())
        return h.hexdigest()


    def copy(self):
        return QTable(self.n_states, self.n_actions, self.values.copy(), self.update_count.copy())


    def to_dict(self):
        return {'values': pack_array(self.values), 'counts': pack_array(self.update_count)}


    @classmethod
    def from_dict(cls, data):
        values = unpack_array(data['values']).astype('f8', copy=False)
        counts = unpack_array(data['counts']).astype('i8', copy=False)
        return cls(values.shape[0], values.shape[2], values, counts)


    def to_dataframe(self, obs_poles=None, action_grid=None):
        idx = np.indices(self.shape).reshape(4, -1)

        df = pd.DataFrame({
            'price_bin': idx[0],
            'stock_bin': idx[1],
            'price_action': idx[2],
            'quantity_action': idx[3],
            'value': self.values.reshape(-1),
            'updates': self.update_count.reshape(-1),
        })

        if obs_poles is not None:
            df.insert(2, 'log_price_delta', obs_poles[df.price_bin])
            df.insert(3, 'log_stock', obs_poles[df.stock_bin])

        if action_grid is not None:
            df['a_price'] = action_grid[df.price_action]
            df['a_quantity'] = action_grid[df.quantity_action]

        return df


    def write_tsv(self, file_path, obs_poles=None, action_grid=None, **kwargs):
        if 'sep' not in kwargs:
            kwargs['sep'] = '\t'

        self.to_dataframe(obs_poles, action_grid).to_csv(file_path, index=False, **kwargs)


def read_tsv_qtable(file_path, **kwargs):
    if 'sep' not in kwargs:
        kwargs['sep'] = '\t'

    df = pd.read_csv(file_path, **kwargs)

    n_states = int(df.price_bin.max()) + 1
    n_actions = int(df.price_action.max()) + 1
    q = QTable(n_states, n_actions)

    idx = (df.price_bin.to_numpy(), df.stock_bin.to_numpy(), df.price_action.to_numpy(), df.quantity_action.to_numpy())
    q.values[idx] = df.value.to_numpy()
    q.update_count[idx] = df.updates.to_numpy()

    return q
