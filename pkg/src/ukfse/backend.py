"""Selection between the compiled kernels and the pure-Python fallback.

The compiled extension is optional; ``get_backend("auto")`` prefers it when
importable and silently falls back otherwise.  The UKFSE_BACKEND environment
variable overrides the "auto" choice; an explicit name always wins.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from . import _pykernels
from .errors import ConfigError

try:
    from . import _native
except ImportError:
    _native = None


@dataclass(frozen=True)
class Backend:
    name: str
    truth_rollout: Callable
    filter_rollout: Callable


_PURE = Backend("pure", _pykernels.truth_rollout, _pykernels.filter_rollout)
_NATIVE = (
    Backend("native", _native.truth_rollout, _native.filter_rollout)
    if _native is not None
    else None
)


def have_native() -> bool:
    return _NATIVE is not None


def available_backends() -> tuple[str, ...]:
    return ("pure", "native") if have_native() else ("pure",)


def get_backend(name: str = "auto") -> Backend:
    if name == "auto":
        name = os.environ.get("UKFSE_BACKEND", "auto")
    if name == "auto":
        return _NATIVE if _NATIVE is not None else _PURE
    if name == "pure":
        return _PURE
    if name == "native":
        if _NATIVE is None:
            raise ConfigError("native backend requested but the extension is not built")
        return _NATIVE
    raise ConfigError(f"unknown backend '{name}' (choices: auto, pure, native)")
