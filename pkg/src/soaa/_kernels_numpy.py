"""Pure-numpy fallback kernels.

Mirrors ``_kernels_numba`` operation-for-operation: identical element-wise
expressions and identical left-to-right reduction order, so the two
backends produce bit-identical results. This path allocates temporaries;
the numba path fuses everything into two passes.
"""

from __future__ import annotations

import numpy as np

from . import ops

NAME = "numpy"


def soaa_group_update(
    theta: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    s: np.ndarray,
    beta1: float,
    beta2: float,
    bc1: float,
    bc2: float,
    dt: float,
    alpha: float,
    weight_decay: float,
    epsilon: float,
) -> tuple[float, float]:
    """One SOAA update for one parameter group, in place.

    Returns the group's contributions to the predicted reduction:
    (sum(m_hat * g_adj), sum(s_hat * g_adj**2)).
    """
    m_new, s_new = ops.update_moments(m, s, g, beta1, beta2)
    m[:] = m_new
    s[:] = s_new
    m_hat = m / bc1
    s_hat = s / bc2
    fisher = ops.fisher_approx(m_hat, s_hat, epsilon)
    trust = ops.trust_region_scale(dt, fisher, s_hat)
    g_adj = ops.adjusted_gradient(m_hat, dt, trust, epsilon)
    if weight_decay != 0.0:
        theta -= alpha * weight_decay * theta
    theta -= alpha * g_adj
    g_adj_sq = g_adj * g_adj
    return ops.seq_sum(m_hat * g_adj), ops.seq_sum(s_hat * g_adj_sq)


def adam_group_update(
    theta: np.ndarray,
    g: np.ndarray,
    m: np.ndarray,
    s: np.ndarray,
    beta1: float,
    beta2: float,
    bc1: float,
    bc2: float,
    alpha: float,
    weight_decay: float,
    epsilon: float,
    decoupled: bool,
) -> None:
    """One Adam/AdamW update for one parameter group, in place.

    Coupled decay folds weight_decay * theta into the gradient before the
    moment updates; decoupled decay shrinks theta directly.
    """
    if weight_decay != 0.0 and not decoupled:
        g = g + weight_decay * theta
    m_new, s_new = ops.update_moments(m, s, g, beta1, beta2)
    m[:] = m_new
    s[:] = s_new
    m_hat = m / bc1
    s_hat = s / bc2
    if weight_decay != 0.0 and decoupled:
        theta -= alpha * weight_decay * theta
    theta -= alpha * (m_hat / (np.sqrt(s_hat) + epsilon))
