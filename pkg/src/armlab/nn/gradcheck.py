"""Central finite-difference gradient checking.

Build the model under test in float64 (ParamStore(dtype=np.float64)), pass a
closure that recomputes the scalar loss from current parameter values, and
compare analytic gradients against central differences.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from armlab.nn import tensor as T
from armlab.nn.layers import ParamStore


def finite_difference_check(store: ParamStore, loss_fn: Callable[[], T.Tensor],
                            h: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    Relative error per element is |a - n| / max(|a| + |n|, 1e-4), which
    degrades to a scaled absolute error where both gradients vanish.
    """
    assert store.dtype == np.float64, "gradient checks must run in float64"
    store.zero_grad()
    loss = loss_fn()
    T.backward(loss)
    analytic = {n: store.grad_of(n).copy() for n in store.params}
    worst = 0.0
    with T.no_grad():
        for name, p in store.params.items():
            flat = p.data.reshape(-1)
            num = np.zeros_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = float(loss_fn().data)
                flat[i] = orig - h
                down = float(loss_fn().data)
                flat[i] = orig
                num[i] = (up - down) / (2 * h)
            a = analytic[name].reshape(-1)
            err = np.abs(a - num) / np.maximum(np.abs(a) + np.abs(num), 1e-4)
            worst = max(worst, float(err.max()) if err.size else 0.0)
    return worst
