"""Hot-loop kernels: compiled Cython when built, pure Python otherwise.

The choice is made once at import; SAMEZ_BACKEND=python forces the fallback.
``use_backend`` switches it explicitly, which the tests and the benchmark use
to compare the two.
"""
from __future__ import annotations

import logging
import os

from . import _pycore

log = logging.getLogger(__name__)

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None
    log.debug("compiled kernels unavailable; using pure-Python fallback")

BACKENDS = ("compiled", "python") if _compiled is not None else ("python",)

_active = _compiled if _compiled is not None else _pycore
if os.environ.get("SAMEZ_BACKEND", "").lower() == "python":
    _active = _pycore


def backend() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def use_backend(name: str) -> None:
    global _active
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels were not built")
        _active = _compiled
    elif name == "python":
        _active = _pycore
    else:
        raise ValueError(f"unknown backend {name!r}")


def module(name: str | None = None):
    if name is None:
        return _active
    return {"compiled": _compiled, "python": _pycore}[name]


def run_flyout(*args, **kwargs):
    return _active.run_flyout(*args, **kwargs)


def build_tree(*args, **kwargs):
    return _active.build_tree(*args, **kwargs)


def predict_forest(*args, **kwargs):
    return _active.predict_forest(*args, **kwargs)


def adam_step(*args, **kwargs):
    return _active.adam_step(*args, **kwargs)
