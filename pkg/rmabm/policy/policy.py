from typing import NamedTuple


class FirmDecision(NamedTuple):
    """Price and target output a C-firm commits to for the next step.

    Fields are floats for a single firm or aligned arrays for a batch of firms.
    """
    next_price: object
    next_target_output: object


class Policy(object):
    def __init__(self):
        pass


    def decide(self, state, firm_ids):
        """FirmDecision batch for `firm_ids` given the state left by the last step."""
        raise NotImplementedError()


    def feedback(self, state):
        """Called once the step the decisions were made for has been settled.

        Returns the per-firm rewards, if the policy has any.
        """
        return None
