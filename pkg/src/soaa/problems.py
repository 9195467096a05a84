"""Desk-scale differentiable objectives with analytic gradients.

Each factory returns a :class:`Problem`: an immutable bundle of loss,
gradient, seeded initial-point generator and dimension. Dataset-backed
problems are pure functions of their construction arguments, so two
problems built with the same sizes and seed expose identical loss
surfaces.

:func:`gradcheck` compares the analytic gradient against central finite
differences; :func:`validate_problem` is the gate the benchmark harness
runs before touching a problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, GradientCheckError, NumericsError, UnknownNameError


@dataclass(frozen=True)
class Problem:
    """A differentiable objective over a flat float64 parameter vector."""

    name: str
    dim: int
    initial_point: Callable[[int], np.ndarray]
    loss: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    known_optimum: float | None = None


def quadratic(dim: int = 1, condition_number: float = 1.0, seed: int = 0) -> Problem:
    """f(x) = 0.5 * sum(d_i * x_i^2) with d_i log-spaced in [1, condition_number]."""
    if dim < 1:
        raise ConfigError(f"quadratic: dim must be >= 1, got {dim}")
    if condition_number < 1:
        raise ConfigError(f"quadratic: condition_number must be >= 1, got {condition_number}")
    d = np.logspace(0.0, math.log10(condition_number), num=dim)

    def loss(theta: np.ndarray) -> float:
        return 0.5 * float(d @ (theta * theta))

    def grad(theta: np.ndarray) -> np.ndarray:
        return d * theta

    def initial_point(run_seed: int) -> np.ndarray:
        return np.random.default_rng([seed, run_seed]).standard_normal(dim)

    return Problem("quadratic", dim, initial_point, loss, grad, known_optimum=0.0)


def rosenbrock(dim: int = 2) -> Problem:
    """Pairwise Rosenbrock: sum over pairs of 100*(y - x^2)^2 + (1 - x)^2."""
    if dim < 2 or dim % 2 != 0:
        raise ConfigError(f"rosenbrock: dim must be even and >= 2, got {dim}")

    def loss(theta: np.ndarray) -> float:
        x, y = theta[0::2], theta[1::2]
        return float(np.sum(100.0 * (y - x * x) ** 2 + (1.0 - x) ** 2))

    def grad(theta: np.ndarray) -> np.ndarray:
        x, y = theta[0::2], theta[1::2]
        g = np.empty_like(theta)
        g[0::2] = -400.0 * x * (y - x * x) - 2.0 * (1.0 - x)
        g[1::2] = 200.0 * (y - x * x)
        return g

    def initial_point(run_seed: int) -> np.ndarray:
        # The classic start, jittered so different seeds give distinct runs.
        base = np.tile([-1.2, 1.0], dim // 2)
        return base + 0.1 * np.random.default_rng(run_seed).standard_normal(dim)

    return Problem("rosenbrock", dim, initial_point, loss, grad, known_optimum=0.0)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_regression(n_samples: int = 200, dim: int = 10, seed: int = 0) -> Problem:
    """Mean cross-entropy of a linear classifier on two seeded Gaussian blobs.

    The optimized vector is [weights..., bias], so the problem dimension is
    dim + 1. At the zero vector the prediction is uniform and the loss is
    log(2) for any labels.
    """
    if dim < 1:
        raise ConfigError(f"logistic_regression: dim must be >= 1, got {dim}")
    if n_samples < 2 * dim:
        raise ConfigError(
            f"logistic_regression: n_samples must be >= 2*dim, got {n_samples} < {2 * dim}"
        )
    rng = np.random.default_rng(seed)
    half = n_samples // 2
    y = np.zeros(n_samples)
    y[half:] = 1.0
    mu = np.ones(dim) / math.sqrt(dim)
    x = rng.standard_normal((n_samples, dim))
    x[: half] -= mu
    x[half:] += mu

    def loss(theta: np.ndarray) -> float:
        z = x @ theta[:dim] + theta[dim]
        return float(np.mean(np.logaddexp(0.0, z) - y * z))

    def grad(theta: np.ndarray) -> np.ndarray:
        z = x @ theta[:dim] + theta[dim]
        r = (_sigmoid(z) - y) / n_samples
        g = np.empty(dim + 1)
        g[:dim] = x.T @ r
        g[dim] = np.sum(r)
        return g

    def initial_point(run_seed: int) -> np.ndarray:
        return np.random.default_rng([seed, run_seed]).standard_normal(dim + 1)

    return Problem("logistic_regression", dim + 1, initial_point, loss, grad)


def mlp_loss_grad(
    theta: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    in_dim: int,
    hidden: int,
) -> tuple[float, np.ndarray]:
    """Mean-squared error and hand-written backprop for a 1-hidden-layer tanh net.

    Parameter layout: [W1 (hidden*in_dim, row-major), b1 (hidden),
    w2 (hidden), b2 (1)].
    """
    n = x.shape[0]
    k = hidden * in_dim
    w1 = theta[:k].reshape(hidden, in_dim)
    b1 = theta[k : k + hidden]
    w2 = theta[k + hidden : k + 2 * hidden]
    b2 = theta[k + 2 * hidden]

    h = np.tanh(x @ w1.T + b1)
    pred = h @ w2 + b2
    r = pred - y
    loss = float(np.mean(r * r))

    d_pred = (2.0 / n) * r
    g_w2 = h.T @ d_pred
    g_b2 = np.sum(d_pred)
    d_h = np.outer(d_pred, w2) * (1.0 - h * h)
    g_w1 = d_h.T @ x
    g_b1 = np.sum(d_h, axis=0)

    g = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])
    return loss, g


def tiny_mlp(n_samples: int = 128, in_dim: int = 4, hidden: int = 8, seed: int = 0) -> Problem:
    """Regression onto a seeded teacher network of the same architecture.

    The teacher is realizable by the student, so the global optimum is 0.
    """
    if min(n_samples, in_dim, hidden) < 1:
        raise ConfigError(
            f"tiny_mlp: all sizes must be >= 1, got n_samples={n_samples}, "
            f"in_dim={in_dim}, hidden={hidden}"
        )
    rng = np.random.default_rng(seed)
    dim = hidden * in_dim + 2 * hidden + 1
    x = rng.standard_normal((n_samples, in_dim))
    teacher = rng.standard_normal(dim)
    y = np.tanh(x @ teacher[: hidden * in_dim].reshape(hidden, in_dim).T
                + teacher[hidden * in_dim : hidden * in_dim + hidden]) \
        @ teacher[hidden * in_dim + hidden : hidden * in_dim + 2 * hidden] + teacher[-1]

    def loss(theta: np.ndarray) -> float:
        return mlp_loss_grad(theta, x, y, in_dim, hidden)[0]

    def grad(theta: np.ndarray) -> np.ndarray:
        return mlp_loss_grad(theta, x, y, in_dim, hidden)[1]

    def initial_point(run_seed: int) -> np.ndarray:
        return 0.5 * np.random.default_rng([seed, run_seed]).standard_normal(dim)

    return Problem("tiny_mlp", dim, initial_point, loss, grad, known_optimum=0.0)


def gradcheck(problem: Problem, theta: np.ndarray, h: float = 1e-5) -> float:
    """Max deviation of the analytic gradient from central differences.

    Per coordinate the deviation is relative to |grad_i|, falling back to
    the absolute difference when |grad_i| < 1e-8.
    """
    if not h > 0:
        raise ConfigError(f"gradcheck: h must be > 0, got {h}")
    theta = np.asarray(theta, dtype=np.float64).copy()
    if not np.isfinite(theta).all():
        raise NumericsError("gradcheck: theta has non-finite entries")
    g = np.asarray(problem.grad(theta), dtype=np.float64)
    worst = 0.0
    for i in range(theta.size):
        orig = theta[i]
        theta[i] = orig + h
        f_plus = problem.loss(theta)
        theta[i] = orig - h
        f_minus = problem.loss(theta)
        theta[i] = orig
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise NumericsError(f"gradcheck: non-finite loss while probing coordinate {i}")
        numeric = (f_plus - f_minus) / (2.0 * h)
        err = abs(numeric - g[i])
        if abs(g[i]) >= 1e-8:
            err /= abs(g[i])
        worst = max(worst, err)
    return worst


def validate_problem(
    problem: Problem,
    n_points: int = 10,
    tol: float = 1e-5,
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    """Gradcheck at seeded random points; raises if any point exceeds tol.

    The harness calls this before every benchmark run, so a problem with an
    inconsistent gradient can never produce results.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        worst = max(worst, gradcheck(problem, rng.standard_normal(problem.dim), h=h))
        if worst > tol:
            raise GradientCheckError(
                f"problem {problem.name!r}: gradient check error {worst:.3e} exceeds {tol:.1e}"
            )
    return worst


REGISTRY: dict[str, Callable[..., Problem]] = {
    "quadratic": quadratic,
    "rosenbrock": rosenbrock,
    "logistic_regression": logistic_regression,
    "tiny_mlp": tiny_mlp,
}


def problem_names() -> list[str]:
    return sorted(REGISTRY)


def build_problem(name: str, **params) -> Problem:
    """Instantiate a registered problem by name, with factory overrides."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise UnknownNameError(
            f"unknown problem {name!r}: known problems are {', '.join(problem_names())}"
        ) from None
    try:
        return factory(**params)
    except TypeError:
        raise ConfigError(
            f"invalid parameters {sorted(params)} for problem {name!r}"
        ) from None
