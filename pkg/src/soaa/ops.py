"""Element-wise building blocks of the SOAA update rule.

Each function is a pure numpy implementation operating on one parameter
group (a flat float64 vector). The fused kernels in ``_kernels_numba`` /
``_kernels_numpy`` compose exactly these formulas; keeping the reference
versions separate makes them independently testable and lets the ``trace``
tool show every intermediate.

All reductions go through :func:`seq_sum`, a strict left-to-right
accumulation. Both kernel backends use the same order, so results are
bit-reproducible across runs and across backends.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError


def seq_sum(x: np.ndarray) -> float:
    """Sum ``x`` in strict left-to-right order.

    ``np.add.accumulate`` materializes every prefix sum, which pins the
    association order; plain ``np.sum`` uses pairwise summation and would
    round differently from the scalar loops in the numba kernels.
    """
    if x.size == 0:
        return 0.0
    return float(np.add.accumulate(x)[-1])


def update_moments(
    m: np.ndarray,
    s: np.ndarray,
    g: np.ndarray,
    beta1: float,
    beta2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Exponential moving averages of the gradient and its square.

    m <- beta1 * m + (1 - beta1) * g
    s <- beta2 * s + (1 - beta2) * g**2
    """
    m_new = beta1 * m + (1.0 - beta1) * g
    s_new = beta2 * s + (1.0 - beta2) * (g * g)
    return m_new, s_new


def bias_correct(
    m: np.ndarray,
    s: np.ndarray,
    t: int,
    beta1: float,
    beta2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Remove the zero-initialization bias from the moment EMAs.

    Requires ``t >= 1``: at t=0 the correction factors are zero.
    """
    if t < 1:
        raise PreconditionError(f"bias correction requires step t >= 1, got t={t}")
    m_hat = m / (1.0 - beta1**t)
    s_hat = s / (1.0 - beta2**t)
    return m_hat, s_hat


def fisher_coefficient(m_hat: np.ndarray, s_hat: np.ndarray, epsilon: float) -> float:
    """Scalar gain 1 + sum(m_hat^2) / sum(s_hat + epsilon) over one group."""
    return 1.0 + seq_sum(m_hat * m_hat) / seq_sum(s_hat + epsilon)


def fisher_approx(m_hat: np.ndarray, s_hat: np.ndarray, epsilon: float) -> np.ndarray:
    """Diagonal curvature estimate: the second moment scaled by the group gain.

    The gain grows when the (squared) mean gradient is large relative to the
    gradient variance, i.e. when the descent direction is consistent.
    """
    return fisher_coefficient(m_hat, s_hat, epsilon) * s_hat


def trust_region_scale(dt: float, fisher: np.ndarray, s_hat: np.ndarray) -> np.ndarray:
    """Element-wise max(dt * fisher, sqrt(s_hat)).

    The sqrt branch is the Adam denominator; it keeps the scale from
    collapsing when dt shrinks.
    """
    return np.maximum(dt * fisher, np.sqrt(s_hat))


def adjusted_gradient(
    m_hat: np.ndarray,
    dt: float,
    trust_scale: np.ndarray,
    epsilon: float,
) -> np.ndarray:
    """Descent direction (m_hat * dt) / (trust_scale + epsilon).

    When trust_scale is zero everywhere the step is bounded only by
    epsilon, so a unit m_hat produces a 1/epsilon entry. Callers relying
    on bounded steps must keep s_hat (and hence trust_scale) nonzero.
    """
    return (m_hat * dt) / (trust_scale + epsilon)


def dt_bounds(t: int, total_steps: int, gamma: float) -> tuple[float, float]:
    """Clamp window for the trust-region scalar at step ``t``.

    The exponent (t-1)/total_steps is clamped to 1 so the window stays
    fixed at [1-gamma, 1+gamma] if a run overshoots its planned horizon.
    """
    e = min((t - 1) / total_steps, 1.0)
    return (1.0 - gamma) ** e, 1.0 + gamma**e
