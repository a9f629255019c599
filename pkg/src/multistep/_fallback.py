"""Pure numpy implementations of the hot kernels.

Same contracts as the compiled module ``multistep._ext``; selected by
``multistep._backend`` when the extension is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np


def best_split(xs: np.ndarray, ys: np.ndarray, min_leaf: int = 1) -> tuple[float, int]:
    """Best binary split of rows sorted by feature value.

    Parameters
    ----------
    xs : (n,) float64, ascending
        Feature values in sorted order.
    ys : (n, m) float64
        Targets in the same order.
    min_leaf : int
        Minimum rows on each side.

    Returns
    -------
    (score, pos)
        ``pos`` in ``[1, n-1]`` puts rows ``[:pos]`` left; ``score`` is
        ``|sum_left|^2/n_left + |sum_right|^2/n_right`` (maximising it
        minimises the pooled squared error).  ``(-inf, 0)`` if no valid
        split exists.
    """
    n = xs.shape[0]
    if n < 2 * min_leaf or n < 2:
        return (-np.inf, 0)
    cum = np.cumsum(ys, axis=0)
    total = cum[-1]
    left = cum[:-1]
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    score = (left * left).sum(axis=1) / n_left
    score += ((total - left) ** 2).sum(axis=1) / n_right
    valid = xs[1:] != xs[:-1]
    if min_leaf > 1:
        valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return (-np.inf, 0)
    score = np.where(valid, score, -np.inf)
    pos = int(np.argmax(score))
    return (float(score[pos]), pos + 1)


def mg_integrate(
    buf: np.ndarray,
    delay: int,
    steps: int,
    beta: float,
    gamma: float,
    exponent: float,
    dt: float,
) -> int:
    """Fixed-step RK4 integration of the delayed feedback equation
    ``dx/dt = beta*x(t-tau)/(1 + x(t-tau)^exponent) - gamma*x(t)``.

    ``buf[:delay]`` must hold the initial history and ``buf[delay]`` the
    initial state; ``buf[delay+1 : delay+steps+1]`` is filled in place.
    The delayed value is held constant within each step.

    Returns -1 on success, or the step index at which |x| exceeded 1e6.
    """
    x = buf[delay]
    for i in range(steps):
        xt = buf[i]
        drive = beta * xt / (1.0 + xt**exponent)
        k1 = dt * (drive - gamma * x)
        k2 = dt * (drive - gamma * (x + 0.5 * k1))
        k3 = dt * (drive - gamma * (x + 0.5 * k2))
        k4 = dt * (drive - gamma * (x + k3))
        x = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if abs(x) > 1e6:
            return i
        buf[delay + i + 1] = x
    return -1
