"""Kernel backend selection.

The compiled extension (Cython) is used when importable; otherwise the pure
numpy/Python backend. Set TOKRAIL_PURE=1 to force the pure backend. The two
backends agree to float64 tolerance (see tests/test_kernels_parity.py); exact
byte-level reproducibility claims hold per backend.
"""

from __future__ import annotations

import os

from . import _pure, automaton

__all__ = [
    "BACKEND",
    "automaton",
    "softmax",
    "entropy",
    "apply_bias",
    "apply_temperature",
    "apply_mask",
    "invalid_mass",
    "argmax_low",
    "multinomial_pick",
    "fold_token",
    "allowlist_mask",
    "get_backend",
]

_impl = _pure
BACKEND = "pure"

if os.environ.get("TOKRAIL_PURE", "") != "1":
    try:
        from . import _speed  # type: ignore[attr-defined]

        _impl = _speed
        BACKEND = "compiled"
    except ImportError:
        pass

softmax = _impl.softmax
entropy = _impl.entropy
apply_bias = _impl.apply_bias
apply_temperature = _impl.apply_temperature
apply_mask = _impl.apply_mask
invalid_mass = _impl.invalid_mass
argmax_low = _impl.argmax_low
multinomial_pick = _impl.multinomial_pick
fold_token = _impl.fold_token
allowlist_mask = _impl.allowlist_mask


def get_backend(name: str):
    """Return a backend module by name ('pure' or 'compiled')."""
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _speed  # raises ImportError if not built

        return _speed
    raise ValueError(f"unknown backend {name!r}")
