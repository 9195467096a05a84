"""Numba-jitted hot kernels.

Importing this module raises ImportError when numba is unavailable; the
backend selector falls back to ``_kernels_numpy`` in that case.

The loops replicate the numpy kernels exactly: same element-wise operation
order, reductions accumulated left to right. Bias-correction factors are
precomputed by the caller so no transcendental functions run inside the
kernels (keeps the two backends bit-identical).
"""

from __future__ import annotations

import math

from numba import njit

NAME = "numba"


@njit(cache=True)
def soaa_group_update(theta, g, m, s, beta1, beta2, bc1, bc2, dt, alpha, weight_decay, epsilon):
    n = theta.shape[0]
    sum_m2 = 0.0
    sum_se = 0.0
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        s[i] = beta2 * s[i] + (1.0 - beta2) * (g[i] * g[i])
        mh = m[i] / bc1
        sh = s[i] / bc2
        sum_m2 += mh * mh
        sum_se += sh + epsilon
    c = 1.0 + sum_m2 / sum_se
    sum_mg = 0.0
    sum_sg2 = 0.0
    for i in range(n):
        mh = m[i] / bc1
        sh = s[i] / bc2
        fisher = c * sh
        trust = max(dt * fisher, math.sqrt(sh))
        g_adj = (mh * dt) / (trust + epsilon)
        if weight_decay != 0.0:
            theta[i] -= alpha * weight_decay * theta[i]
        theta[i] -= alpha * g_adj
        g_adj_sq = g_adj * g_adj
        sum_mg += mh * g_adj
        sum_sg2 += sh * g_adj_sq
    return sum_mg, sum_sg2


@njit(cache=True)
def adam_group_update(theta, g, m, s, beta1, beta2, bc1, bc2, alpha, weight_decay, epsilon, decoupled):
    n = theta.shape[0]
    coupled_wd = weight_decay != 0.0 and not decoupled
    decoupled_wd = weight_decay != 0.0 and decoupled
    for i in range(n):
        gi = g[i]
        if coupled_wd:
            gi = gi + weight_decay * theta[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        s[i] = beta2 * s[i] + (1.0 - beta2) * (gi * gi)
        mh = m[i] / bc1
        sh = s[i] / bc2
        if decoupled_wd:
            theta[i] -= alpha * weight_decay * theta[i]
        theta[i] -= alpha * (mh / (math.sqrt(sh) + epsilon))
