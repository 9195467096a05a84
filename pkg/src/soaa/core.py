"""SOAA: a second-order adaptive Adam variant with a trust region.

The update keeps Adam's first/second moment EMAs, scales the second moment
by a per-group gain (1 + sum(m_hat^2)/sum(s_hat + eps)) into a diagonal
curvature estimate, bounds the denominator below by the Adam sqrt term,
and multiplies the step by a global trust-region scalar ``dt``. When the
caller supplies the loss, ``dt`` is re-fit each step from the ratio of
observed to predicted loss reduction and clamped to a window that narrows
as the run approaches its planned horizon.

All arithmetic is float64. Reductions are strict left-to-right, so runs
are bit-reproducible (same config, gradients and losses give bit-identical
parameters and state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import backend, checkpoint, ops
from .errors import ConfigError, NumericsError, ShapeError


def _validate_adam_fields(cfg) -> None:
    """Bounds shared by SOAA and the Adam baselines. Raises ConfigError."""
    if not cfg.alpha > 0:
        raise ConfigError(f"alpha must be > 0, got {cfg.alpha}")
    if not 0 <= cfg.beta1 < 1:
        raise ConfigError(f"beta1 must be in [0, 1), got {cfg.beta1}")
    if not 0 <= cfg.beta2 < 1:
        raise ConfigError(f"beta2 must be in [0, 1), got {cfg.beta2}")
    if not cfg.epsilon > 0:
        raise ConfigError(f"epsilon must be > 0, got {cfg.epsilon}")
    if not cfg.weight_decay >= 0:
        raise ConfigError(f"weight_decay must be >= 0, got {cfg.weight_decay}")


@dataclass(frozen=True)
class SoaaConfig:
    """Hyperparameters of the SOAA update rule.

    total_steps is the planned horizon of the run; it only shapes the
    trust-region clamp window, so running past it is allowed (the window
    freezes at [1-gamma, 1+gamma]).
    """

    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    gamma: float = 0.1
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    total_steps: int = 100

    def __post_init__(self):
        for f in fields(self):
            raw = getattr(self, f.name)
            try:
                val = int(raw) if f.name == "total_steps" else float(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{f.name} must be a number, got {raw!r}") from None
            object.__setattr__(self, f.name, val)
        _validate_adam_fields(self)
        if not 0 < self.gamma < 1:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.total_steps < 1:
            raise ConfigError(f"total_steps must be >= 1, got {self.total_steps}")


@dataclass
class ParamGroup:
    """One flat vector of trainable parameters with optional per-group knobs."""

    theta: np.ndarray
    alpha: float | None = None
    weight_decay: float | None = None


@dataclass
class SoaaState:
    """Mutable optimizer state: two vectors per group plus four scalars."""

    t: int
    m: list[np.ndarray]
    s: list[np.ndarray]
    dt: float
    l_avg: float
    pr: float


@dataclass
class TraceStep:
    """Every intermediate of one step, for debugging and the `trace` CLI."""

    t: int
    loss: float | None
    g: list[np.ndarray]
    m: list[np.ndarray]
    s: list[np.ndarray]
    m_hat: list[np.ndarray]
    s_hat: list[np.ndarray]
    fisher_c: list[float]
    fisher: list[np.ndarray]
    trust: list[np.ndarray]
    g_adj: list[np.ndarray]
    theta: list[np.ndarray]
    dt_before: float
    dt_after: float
    pr_before: float
    pr_after: float
    l_avg: float
    l_hat: float | None = None
    ratio: float | None = None
    dt_bounds: tuple[float, float] | None = None


def _as_groups(params, who: str) -> list[ParamGroup]:
    """Normalize ndarray | ParamGroup | sequence thereof into ParamGroup list.

    1-D C-contiguous float64 arrays are shared (updated in place); anything
    else is converted, which copies.
    """
    if isinstance(params, (np.ndarray, ParamGroup)):
        params = [params]
    groups: list[ParamGroup] = []
    for k, item in enumerate(params):
        if isinstance(item, ParamGroup):
            group = item
        else:
            group = ParamGroup(theta=item)
        theta = np.asarray(group.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise ShapeError(f"{who}: group {k} must be a 1-D vector, got shape {theta.shape}")
        if theta.size == 0:
            raise ShapeError(f"{who}: group {k} is empty")
        if not theta.flags.c_contiguous:
            theta = np.ascontiguousarray(theta)
        if group.alpha is not None and not group.alpha > 0:
            raise ConfigError(f"{who}: group {k} alpha override must be > 0, got {group.alpha}")
        if group.weight_decay is not None and not group.weight_decay >= 0:
            raise ConfigError(
                f"{who}: group {k} weight_decay override must be >= 0, got {group.weight_decay}"
            )
        groups.append(ParamGroup(theta=theta, alpha=group.alpha, weight_decay=group.weight_decay))
    if not groups:
        raise ShapeError(f"{who}: at least one parameter group is required")
    return groups


def _check_grads(grads, groups: list[ParamGroup], who: str) -> list[np.ndarray]:
    if isinstance(grads, np.ndarray) and len(groups) == 1:
        grads = [grads]
    grads = list(grads)
    if len(grads) != len(groups):
        raise ShapeError(f"{who}: got {len(grads)} gradient vectors for {len(groups)} groups")
    out = []
    for k, (g, group) in enumerate(zip(grads, groups)):
        g = np.ascontiguousarray(g, dtype=np.float64)
        if g.shape != group.theta.shape:
            raise ShapeError(
                f"{who}: gradient for group {k} has shape {g.shape}, expected {group.theta.shape}"
            )
        if not np.isfinite(g).all():
            raise NumericsError(f"{who}: non-finite gradient entry in group {k}")
        out.append(g)
    return out


def _check_loss(loss) -> float | None:
    if loss is None:
        return None
    loss = float(loss)
    if not math.isfinite(loss):
        raise NumericsError(f"loss must be finite, got {loss}")
    return loss


class SOAA:
    """The SOAA optimizer over one or more flat parameter groups.

    Parameters are updated in place. ``step`` takes the gradients and,
    optionally, the loss observed at the pre-step parameters; without a
    loss the trust-region scalar and predicted reduction stay frozen.
    """

    checkpoint_tag = "soaa"

    def __init__(self, params, config: SoaaConfig | None = None, **kwargs):
        if config is None:
            config = SoaaConfig(**kwargs)
        elif kwargs:
            raise ConfigError("pass either a config object or keyword overrides, not both")
        self.config = config
        self.groups = _as_groups(params, "SOAA")
        self.state = SoaaState(
            t=0,
            m=[np.zeros_like(g.theta) for g in self.groups],
            s=[np.zeros_like(g.theta) for g in self.groups],
            dt=1.0,
            l_avg=0.0,
            pr=0.0,
        )

    def _group_hypers(self, k: int) -> tuple[float, float]:
        group = self.groups[k]
        alpha = self.config.alpha if group.alpha is None else group.alpha
        wd = self.config.weight_decay if group.weight_decay is None else group.weight_decay
        return alpha, wd

    def step(self, grads, loss=None) -> None:
        """Advance one step: update moments, dt-scaled step, dt/pr re-fit."""
        glist = _check_grads(grads, self.groups, "SOAA.step")
        loss = _check_loss(loss)
        cfg, st = self.config, self.state
        st.t += 1
        bc1 = 1.0 - cfg.beta1**st.t
        bc2 = 1.0 - cfg.beta2**st.t
        kern = backend.kernels()
        pr_new = 0.0
        for k, g in enumerate(glist):
            alpha, wd = self._group_hypers(k)
            sum_mg, sum_sg2 = kern.soaa_group_update(
                self.groups[k].theta, g, st.m[k], st.s[k],
                cfg.beta1, cfg.beta2, bc1, bc2,
                st.dt, alpha, wd, cfg.epsilon,
            )
            pr_new += alpha * (sum_mg - 0.5 * sum_sg2)
        if loss is not None:
            self._refit_trust_region(loss, bc1, pr_new)

    def _refit_trust_region(self, loss: float, bc1: float, pr_new: float) -> None:
        cfg, st = self.config, self.state
        st.l_avg = cfg.beta1 * st.l_avg + (1.0 - cfg.beta1) * loss
        l_hat = st.l_avg / bc1
        ratio = (l_hat - loss) / max(st.pr, cfg.epsilon)
        lo, hi = ops.dt_bounds(st.t, cfg.total_steps, cfg.gamma)
        st.dt = min(max(ratio * st.dt, lo), hi)
        st.pr = pr_new

    def step_trace(self, grads, loss=None) -> TraceStep:
        """Like :meth:`step`, but computed via the unfused reference ops and
        returning every intermediate. State evolves identically to ``step``."""
        glist = _check_grads(grads, self.groups, "SOAA.step")
        loss = _check_loss(loss)
        cfg, st = self.config, self.state
        st.t += 1
        bc1 = 1.0 - cfg.beta1**st.t
        rec = TraceStep(
            t=st.t, loss=loss, g=glist, m=[], s=[], m_hat=[], s_hat=[],
            fisher_c=[], fisher=[], trust=[], g_adj=[], theta=[],
            dt_before=st.dt, dt_after=st.dt, pr_before=st.pr, pr_after=st.pr,
            l_avg=st.l_avg,
        )
        pr_new = 0.0
        for k, g in enumerate(glist):
            alpha, wd = self._group_hypers(k)
            theta = self.groups[k].theta
            st.m[k], st.s[k] = ops.update_moments(st.m[k], st.s[k], g, cfg.beta1, cfg.beta2)
            m_hat, s_hat = ops.bias_correct(st.m[k], st.s[k], st.t, cfg.beta1, cfg.beta2)
            c = ops.fisher_coefficient(m_hat, s_hat, cfg.epsilon)
            fisher = c * s_hat
            trust = ops.trust_region_scale(st.dt, fisher, s_hat)
            g_adj = ops.adjusted_gradient(m_hat, st.dt, trust, cfg.epsilon)
            if wd != 0.0:
                theta -= alpha * wd * theta
            theta -= alpha * g_adj
            g_adj_sq = g_adj * g_adj
            pr_new += alpha * (ops.seq_sum(m_hat * g_adj) - 0.5 * ops.seq_sum(s_hat * g_adj_sq))
            rec.m.append(st.m[k].copy())
            rec.s.append(st.s[k].copy())
            rec.m_hat.append(m_hat)
            rec.s_hat.append(s_hat)
            rec.fisher_c.append(c)
            rec.fisher.append(fisher)
            rec.trust.append(trust)
            rec.g_adj.append(g_adj)
            rec.theta.append(theta.copy())
        if loss is not None:
            rec.dt_bounds = ops.dt_bounds(st.t, cfg.total_steps, cfg.gamma)
            ratio_den = max(st.pr, cfg.epsilon)
            self._refit_trust_region(loss, bc1, pr_new)
            rec.l_hat = (st.l_avg / bc1)
            rec.ratio = (rec.l_hat - loss) / ratio_den
        rec.l_avg = st.l_avg
        rec.dt_after = st.dt
        rec.pr_after = st.pr
        return rec

    # -- checkpointing ----------------------------------------------------

    def serialize_state(self) -> bytes:
        """Version-tagged checkpoint of config echo, scalars and m/s vectors."""
        return checkpoint.encode(
            self.checkpoint_tag,
            self.config,
            scalars={
                "t": self.state.t,
                "dt": self.state.dt,
                "l_avg": self.state.l_avg,
                "pr": self.state.pr,
            },
            groups=self.groups,
            moment_pairs=list(zip(self.state.m, self.state.s)),
        )

    def restore_state(self, data: bytes) -> None:
        """Restore from :meth:`serialize_state` output. Round trip is bit-exact."""
        scalars, pairs = checkpoint.decode_into(
            data, self.checkpoint_tag, self.config, self.groups,
            required_scalars=("t", "dt", "l_avg", "pr"),
        )
        self.state.t = int(scalars["t"])
        self.state.dt = float(scalars["dt"])
        self.state.l_avg = float(scalars["l_avg"])
        self.state.pr = float(scalars["pr"])
        for k, (m, s) in enumerate(pairs):
            self.state.m[k] = m
            self.state.s[k] = s
