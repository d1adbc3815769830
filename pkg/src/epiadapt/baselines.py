"""Reference weight-adaptation strategies: keep w0, or scale it by a constant.

The constant strategy discounts every initial weight by the ratio that
spends the deviation budget exactly, making its constraint value zero by
construction. Both strategies are deterministic for a fixed network.
"""
from __future__ import annotations

import math

import numpy as np

from .dynamics import WeightSchedule
from .graph import Network


def no_adaptation_schedule(net: Network, horizon: int) -> WeightSchedule:
    """Schedule holding the initial weights on every interval."""
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    return WeightSchedule(blocks=np.repeat(net.w0[None, :, :], horizon - 1, axis=0))


def constant_adaptation_ratio(net: Network, horizon: int, budget: float) -> float:
    """Ratio c in [0, 1] with (1-c)^2 * (T-1) * sum(w0^2) equal to the budget.

    Solving the budget identity exactly gives c = 1 - sqrt(C / ((T-1)*S)).
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    if budget < 0.0:
        raise ValueError("budget must be nonnegative")
    s = float(np.sum(net.w0 * net.w0))
    if s <= 0.0:
        raise ValueError("network has no weights to adapt")
    cap = (horizon - 1) * s
    if budget > cap:
        raise ValueError(f"budget {budget} exceeds the spendable maximum {cap}")
    return 1.0 - math.sqrt(budget / cap)


def constant_adaptation_schedule(
    net: Network, horizon: int, budget: float
) -> WeightSchedule:
    """Schedule holding c * w0 on every interval, with c spending the budget."""
    c = constant_adaptation_ratio(net, horizon, budget)
    return WeightSchedule(blocks=np.repeat((c * net.w0)[None, :, :], horizon - 1, axis=0))
