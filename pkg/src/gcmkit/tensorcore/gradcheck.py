"""Central finite-difference verification of analytic gradients.

`grad_check` evaluates a scalar-producing closure, compares every analytic
parameter gradient coordinate against (f(x+eps) - f(x-eps)) / (2 eps), and
returns the worst relative error

    |analytic - numeric| / max(1e-6, |analytic|, |numeric|)

The 1e-6 floor keeps coordinates whose true gradient is zero from turning
finite-difference rounding noise into a spurious blow-up. For parameter
tensors larger than `max_coords_per_param`, a seeded deterministic subset
of coordinates is checked.
"""

from typing import Callable, List, Optional

import numpy as np

from ..rng import SplitMix64
from .tensor import Tensor


def grad_check(
    f: Callable[[], Tensor],
    params: List[Tensor],
    epsilon: float = 1e-5,
    max_coords_per_param: Optional[int] = None,
    seed: int = 2024,
) -> float:
    for p in params:
        p.zero_grad()
    loss = f()
    loss.backward()
    analytic = [p.grad.copy() for p in params]

    rng = SplitMix64(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        n = flat.size
        if max_coords_per_param is not None and n > max_coords_per_param:
            coords = rng.permutation(n)[:max_coords_per_param]
        else:
            coords = np.arange(n)
        gflat = grad.reshape(-1)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + epsilon
            f_plus = f().item()
            flat[idx] = orig - epsilon
            f_minus = f().item()
            flat[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            err = abs(gflat[idx] - numeric) / max(1e-6, abs(gflat[idx]), abs(numeric))
            if err > worst:
                worst = err
    return worst
