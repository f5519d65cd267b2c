"""Kernel backend selection.

The compiled extension ``splat._kernels`` is used when it imports;
otherwise the pure-Python twin ``splat._pykernels`` is used. Setting
``SPLAT_BACKEND=python`` (or ``cython``) forces a choice.
"""

from __future__ import annotations

import importlib
import logging
import os
from types import ModuleType

log = logging.getLogger(__name__)

_MODULES = {"python": "splat._pykernels", "cython": "splat._kernels"}


def get_kernels(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (``"python"``, ``"cython"`` or None for auto)."""
    if name is None:
        try:
            return importlib.import_module(_MODULES["cython"])
        except ImportError:
            log.debug("compiled kernels unavailable; using pure-Python fallback")
            return importlib.import_module(_MODULES["python"])
    if name not in _MODULES:
        raise ValueError(f"unknown backend {name!r}; expected one of {sorted(_MODULES)}")
    return importlib.import_module(_MODULES[name])


def available_backends() -> list[str]:
    out = []
    for name, mod in _MODULES.items():
        try:
            importlib.import_module(mod)
        except ImportError:
            continue
        out.append(name)
    return out


kernels = get_kernels(os.environ.get("SPLAT_BACKEND") or None)
BACKEND = "cython" if kernels.__name__.endswith("._kernels") else "python"
