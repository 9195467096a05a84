"""Kernel backend selection.

The hot per-group update kernels exist twice: a numba-jitted version and a
pure-numpy version with identical arithmetic. Selection order:

* ``SOAA_BACKEND=numpy`` or ``SOAA_BACKEND=numba`` in the environment pins
  the choice at import time (``numba`` fails loudly if numba is missing).
* ``SOAA_BACKEND=auto`` (or unset) uses numba when importable, numpy
  otherwise.
* :func:`set_backend` switches at runtime, e.g. for tests and benchmarks.

Both backends produce bit-identical results (see ``tests/test_backends.py``),
so switching never changes trajectories, only speed.
"""

from __future__ import annotations

import os
import warnings
from types import ModuleType

from .errors import ConfigError

_ENV_VAR = "SOAA_BACKEND"
_CHOICES = ("auto", "numba", "numpy")

_active: ModuleType | None = None


def _load(name: str) -> ModuleType:
    if name == "numpy":
        from . import _kernels_numpy

        return _kernels_numpy
    if name == "numba":
        from . import _kernels_numba

        return _kernels_numba
    if name == "auto":
        try:
            from . import _kernels_numba

            return _kernels_numba
        except ImportError:
            warnings.warn(
                "numba is not importable; falling back to the pure-numpy kernels "
                f"(set {_ENV_VAR}=numpy to silence this warning)",
                RuntimeWarning,
                stacklevel=3,
            )
            from . import _kernels_numpy

            return _kernels_numpy
    raise ConfigError(f"unknown backend {name!r}: choose one of {', '.join(_CHOICES)}")


def set_backend(name: str) -> None:
    """Select the kernel backend ("auto", "numba" or "numpy") for this process."""
    global _active
    _active = _load(name)


def kernels() -> ModuleType:
    """Return the active kernel module, resolving it on first use."""
    global _active
    if _active is None:
        _active = _load(os.environ.get(_ENV_VAR, "auto"))
    return _active


def backend_name() -> str:
    """Name of the active backend: "numba" or "numpy"."""
    return kernels().NAME


def available_backends() -> list[str]:
    """Backends that can load in this environment ("numpy" always can)."""
    names = []
    try:
        from . import _kernels_numba  # noqa: F401

        names.append("numba")
    except ImportError:
        pass
    names.append("numpy")
    return names
