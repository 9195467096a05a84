"""Adam and AdamW baselines.

One class covers both: ``decoupled=False`` folds weight decay into the
gradient before the moment updates (classic Adam L2), ``decoupled=True``
shrinks the parameters directly (AdamW). The moment and bias-correction
arithmetic is shared with SOAA, so the two optimizers produce bit-identical
m_hat / s_hat on identical gradient streams.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import backend, checkpoint
from .core import _as_groups, _check_grads, _check_loss, _validate_adam_fields
from .errors import ConfigError


@dataclass(frozen=True)
class AdamConfig:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    decoupled: bool = False

    def __post_init__(self):
        for f in fields(self):
            raw = getattr(self, f.name)
            if f.name == "decoupled":
                object.__setattr__(self, f.name, bool(raw))
                continue
            try:
                object.__setattr__(self, f.name, float(raw))
            except (TypeError, ValueError):
                raise ConfigError(f"{f.name} must be a number, got {raw!r}") from None
        _validate_adam_fields(self)


@dataclass
class AdamState:
    t: int
    m: list[np.ndarray]
    s: list[np.ndarray]


class Adam:
    """Reference Adam/AdamW over flat parameter groups, updated in place."""

    checkpoint_tag = "adam"

    def __init__(self, params, config: AdamConfig | None = None, **kwargs):
        if config is None:
            config = AdamConfig(**kwargs)
        elif kwargs:
            raise ConfigError("pass either a config object or keyword overrides, not both")
        self.config = config
        self.groups = _as_groups(params, "Adam")
        self.state = AdamState(
            t=0,
            m=[np.zeros_like(g.theta) for g in self.groups],
            s=[np.zeros_like(g.theta) for g in self.groups],
        )

    def step(self, grads, loss=None) -> None:
        """Standard update theta -= alpha * m_hat / (sqrt(s_hat) + eps).

        ``loss`` is accepted for interface parity with SOAA and ignored.
        """
        glist = _check_grads(grads, self.groups, "Adam.step")
        _check_loss(loss)
        cfg, st = self.config, self.state
        st.t += 1
        bc1 = 1.0 - cfg.beta1**st.t
        bc2 = 1.0 - cfg.beta2**st.t
        kern = backend.kernels()
        for k, g in enumerate(glist):
            group = self.groups[k]
            alpha = cfg.alpha if group.alpha is None else group.alpha
            wd = cfg.weight_decay if group.weight_decay is None else group.weight_decay
            kern.adam_group_update(
                group.theta, g, st.m[k], st.s[k],
                cfg.beta1, cfg.beta2, bc1, bc2,
                alpha, wd, cfg.epsilon, cfg.decoupled,
            )

    def serialize_state(self) -> bytes:
        return checkpoint.encode(
            self.checkpoint_tag,
            self.config,
            scalars={"t": self.state.t},
            groups=self.groups,
            moment_pairs=list(zip(self.state.m, self.state.s)),
        )

    def restore_state(self, data: bytes) -> None:
        scalars, pairs = checkpoint.decode_into(
            data, self.checkpoint_tag, self.config, self.groups
        )
        self.state.t = int(scalars["t"])
        for k, (m, s) in enumerate(pairs):
            self.state.m[k] = m
            self.state.s[k] = s
