from dataclasses import dataclass

import numpy as np

from rmabm.policy.policy import FirmDecision, Policy


@dataclass(frozen=True)
class HeuristicInputs:
    price: object
    output: object
    target: object
    firm_stock: object     # Y - Y_d
    price_delta: object    # P - P_t


    @classmethod
    def from_firms(cls, firms, avg_price, idx=slice(None)):
        return cls(
            price=firms.price[idx],
            output=firms.output[idx],
            target=firms.target_output[idx],
            firm_stock=firms.output[idx] - firms.demand[idx],
            price_delta=firms.price[idx] - avg_price)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def heuristic_adjust(inputs, rho, eta):
    """Trend-following price/quantity rule for a given eta (scalar or per-firm)."""
    dY = np.asarray(inputs.firm_stock, dtype=float)
    dP = np.asarray(inputs.price_delta, dtype=float)
    price = np.asarray(inputs.price, dtype=float)
    output = np.asarray(inputs.output, dtype=float)
    target = np.asarray(inputs.target, dtype=float)

    short = dY <= 0
    cheap = dP < 0

    next_price = np.where(short & cheap, price * (1 + eta),
                 np.where(~short & ~cheap, price * (1 - eta), price))

    next_target = np.where(short & ~cheap, output + rho * np.abs(dY),
                  np.where(~short & cheap, output - rho * np.abs(dY), target))

    return FirmDecision(_scalar_or_array(next_price), _scalar_or_array(np.maximum(next_target, 0.0)))


def draw_eta(rng, eta_bar, shape=()):
    return rng.uniform(0.0, eta_bar, size=shape) if shape else rng.uniform(0.0, eta_bar)


def heuristic_decide(inputs, rho, eta_bar, rng):
    return heuristic_adjust(inputs, rho, draw_eta(rng, eta_bar, np.shape(inputs.price)))


class HeuristicPolicy(Policy):
    """Bounded-rational C-firms."""

    def __init__(self, rng):
        super().__init__()
        self.rng = rng


    def decide(self, state, firm_ids):
        p = state.params
        inputs = HeuristicInputs.from_firms(state.cfirms, state.avg_price, firm_ids)
        return heuristic_decide(inputs, p.quantity_adjustment, p.price_adjustment_max, self.rng)
