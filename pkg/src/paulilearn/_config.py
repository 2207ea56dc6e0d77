"""Size caps for the dense code paths, overridable through environment variables.

The dense simulators and transforms allocate arrays of size 4^n (or act on
2^n x 2^n matrices), so every entry point that goes dense checks one of these
caps first.  Each cap can be raised or lowered without touching code, e.g.::

    PAULILEARN_MAX_DENSE_N=15 paulilearn transform ...
"""

from __future__ import annotations

import os

_DEFAULTS = {
    # Largest n for 4^n-length error-rate / eigenvalue arrays (~0.5 GiB at 13).
    "PAULILEARN_MAX_DENSE_N": 13,
    # Largest n for rendering a single Pauli as a dense 2^n x 2^n matrix.
    "PAULILEARN_MAX_MATRIX_N": 6,
    # Largest n for dense density-matrix scheme simulation.
    "PAULILEARN_MAX_SCHEME_N": 4,
    # Largest n for the bitwise (stabilizer-level) protocol samplers.
    "PAULILEARN_MAX_PROTOCOL_N": 12,
    # Largest number of leaves when enumerating a policy tree exactly.
    "PAULILEARN_MAX_LEAVES": 100_000,
}


def _get(name: str) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return _DEFAULTS[name]
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def max_dense_n() -> int:
    return _get("PAULILEARN_MAX_DENSE_N")


def max_matrix_n() -> int:
    return _get("PAULILEARN_MAX_MATRIX_N")


def max_scheme_n() -> int:
    return _get("PAULILEARN_MAX_SCHEME_N")


def max_protocol_n() -> int:
    return _get("PAULILEARN_MAX_PROTOCOL_N")


def max_leaves() -> int:
    return _get("PAULILEARN_MAX_LEAVES")
