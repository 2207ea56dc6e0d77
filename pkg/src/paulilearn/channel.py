"""Pauli channels in the two dual representations, and the transform between them.

A Pauli channel is a probability distribution p over the 4^n Pauli operators
(the *error rates*); its action is rho -> sum_a p_a P_a rho P_a.  The dual
description is the vector of *eigenvalues* (Pauli fidelities)

    lambda_b = sum_a p_a (-1)^<a,b>,      p_a = 4^-n sum_b lambda_b (-1)^<a,b>,

i.e. a Walsh-Hadamard transform with the symplectic sign kernel.  Both arrays
are kept in canonical index order (see :mod:`paulilearn.pauli`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _config
from .pauli import PauliString, nonidentity_indices

#: Default absolute tolerance for validity checks.
DEFAULT_TOL = 1e-9

# Per-qubit transform kernel K[a][b] = (-1)^<a,b> on digits (I, Z, X, Y).
# K is symmetric and K @ K = 4 I, so the inverse transform is K/4 per qubit.
_KERNEL = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=np.float64,
)


class ChannelFormatError(ValueError):
    """Raised when a channel or partition file does not match the format."""


class InvalidChannelError(ValueError):
    """Raised when a loaded channel fails validity checks."""

    def __init__(self, message: str, report: "ValidityReport"):
        super().__init__(message)
        self.report = report


def _infer_n(length: int) -> int:
    n = max(1, round(math.log(length, 4))) if length > 1 else 0
    if length < 4 or 4**n != length:
        raise ValueError(f"array length {length} is not 4^n for any n >= 1")
    if n > _config.max_dense_n():
        raise ValueError(
            f"n={n} exceeds dense cap {_config.max_dense_n()} "
            "(override with PAULILEARN_MAX_DENSE_N)"
        )
    return n


def _butterfly(values: np.ndarray, n: int) -> np.ndarray:
    """Apply the symplectic Walsh-Hadamard kernel along every qubit axis."""
    out = values.reshape((4,) * n)
    for axis in range(n):
        out = np.moveaxis(np.tensordot(_KERNEL, out, axes=([1], [axis])), 0, axis)
    return out.reshape(-1)


def eigenvalues_from_error_rates(error_rates) -> np.ndarray:
    """Forward transform: lambda_b = sum_a p_a (-1)^<a,b>.  O(n 4^n)."""
    p = np.asarray(error_rates, dtype=np.float64)
    n = _infer_n(p.size)
    return _butterfly(p, n)


def error_rates_from_eigenvalues(eigenvalues) -> np.ndarray:
    """Inverse transform: p_a = 4^-n sum_b lambda_b (-1)^<a,b>.  O(n 4^n)."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    n = _infer_n(lam.size)
    return _butterfly(lam, n) / 4**n


class PauliChannel:
    """An n-qubit Pauli channel, storing either dual representation lazily.

    Construction does not validate channel-ness; arbitrary real vectors are
    allowed so that invalid candidates can be inspected with :func:`validate`.
    """

    def __init__(self, n: int, *, error_rates=None, eigenvalues=None):
        if error_rates is None and eigenvalues is None:
            raise ValueError("provide error_rates or eigenvalues")
        self._n = n
        self._error_rates = self._ingest(error_rates, n)
        self._eigenvalues = self._ingest(eigenvalues, n)

    @staticmethod
    def _ingest(values, n: int):
        if values is None:
            return None
        arr = np.array(values, dtype=np.float64)
        if arr.shape != (4**n,):
            raise ValueError(f"expected {4**n} entries for n={n}, got {arr.shape}")
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_error_rates(cls, error_rates) -> "PauliChannel":
        arr = np.asarray(error_rates, dtype=np.float64)
        return cls(_infer_n(arr.size), error_rates=arr)

    @classmethod
    def from_eigenvalues(cls, eigenvalues) -> "PauliChannel":
        arr = np.asarray(eigenvalues, dtype=np.float64)
        return cls(_infer_n(arr.size), eigenvalues=arr)

    @property
    def n(self) -> int:
        return self._n

    @property
    def error_rates(self) -> np.ndarray:
        if self._error_rates is None:
            p = error_rates_from_eigenvalues(self._eigenvalues)
            p.setflags(write=False)
            self._error_rates = p
        return self._error_rates

    @property
    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            lam = eigenvalues_from_error_rates(self._error_rates)
            lam.setflags(write=False)
            self._eigenvalues = lam
        return self._eigenvalues

    def __repr__(self) -> str:
        return f"PauliChannel(n={self._n})"


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the CPTP checks on a candidate Pauli channel."""

    n: int
    trace_preserving: bool
    completely_positive: bool
    eigenvalues_in_range: bool
    lambda0: float
    error_rate_sum: float
    min_error_rate: float
    max_abs_eigenvalue: float
    failures: tuple[str, ...] = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return not self.failures


def validate(channel: PauliChannel, tol: float = DEFAULT_TOL) -> ValidityReport:
    """Check that a candidate is a genuine Pauli channel.

    Trace preservation is lambda_0 = 1 (equivalently sum_a p_a = 1); complete
    positivity is p_a >= 0; both are tested within absolute tolerance ``tol``.
    """
    p = channel.error_rates
    lam = channel.eigenvalues
    failures = []

    lambda0 = float(lam[0])
    rate_sum = float(p.sum())
    min_rate = float(p.min())
    max_abs = float(np.abs(lam).max())

    trace_ok = abs(lambda0 - 1.0) <= tol
    if not trace_ok:
        failures.append(f"not trace preserving: lambda_0 = {lambda0!r}")
    cp_ok = min_rate >= -tol
    if not cp_ok:
        failures.append(f"not completely positive: min error rate = {min_rate!r}")
    range_ok = max_abs <= 1.0 + tol
    if not range_ok:
        failures.append(f"eigenvalue out of [-1, 1]: max |lambda| = {max_abs!r}")

    return ValidityReport(
        n=channel.n,
        trace_preserving=trace_ok,
        completely_positive=cp_ok,
        eigenvalues_in_range=range_ok,
        lambda0=lambda0,
        error_rate_sum=rate_sum,
        min_error_rate=min_rate,
        max_abs_eigenvalue=max_abs,
        failures=tuple(failures),
    )


# -- reference channel families ---------------------------------------------


def completely_depolarizing(n: int) -> PauliChannel:
    """The channel mapping every state to the maximally mixed state."""
    lam = np.zeros(4**n)
    lam[0] = 1.0
    return PauliChannel(n, eigenvalues=lam)


def _check_eps0(eps0: float) -> None:
    if not 0.0 <= eps0 <= 1.0:
        raise ValueError(f"eps0 must be in [0, 1], got {eps0}")


def _check_sign(sign: int) -> None:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")


def make_hypothesis_channel(n: int, a: int, sign: int, eps0: float) -> PauliChannel:
    """The two-point test channel: lambda_0 = 1, lambda_a = sign * eps0, rest 0.

    Its error rates are p_c = 4^-n (1 + sign * eps0 * (-1)^<c,a>), which are
    nonnegative exactly when eps0 <= 1.
    """
    _check_sign(sign)
    _check_eps0(eps0)
    if not 1 <= a < 4**n:
        raise ValueError(f"target index must be a non-identity Pauli, got {a}")
    lam = np.zeros(4**n)
    lam[0] = 1.0
    lam[a] = sign * eps0
    return PauliChannel(n, eigenvalues=lam)


def make_coarse_hypothesis_channel(n: int, block, sign: int, eps0: float) -> PauliChannel:
    """Block variant: lambda_b = sign * eps0 / |B| for every b in the block."""
    _check_sign(sign)
    _check_eps0(eps0)
    members = sorted(set(int(b) for b in block))
    if not members:
        raise ValueError("block must be nonempty")
    if members[0] < 1 or members[-1] >= 4**n:
        raise ValueError(f"block members must be non-identity indices for n={n}")
    lam = np.zeros(4**n)
    lam[0] = 1.0
    lam[members] = sign * eps0 / len(members)
    return PauliChannel(n, eigenvalues=lam)


def random_channel(n: int, rng: np.random.Generator, concentration: float = 1.0) -> PauliChannel:
    """Random Pauli channel with Dirichlet-distributed error rates."""
    rates = rng.dirichlet(np.full(4**n, concentration))
    return PauliChannel(n, error_rates=rates)


# -- partitions and block fidelities ----------------------------------------


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of non-identity Pauli indices covering all of them."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        blocks = []
        for block in self.blocks:
            members = tuple(sorted(int(b) for b in block))
            if not members:
                raise ValueError("partition blocks must be nonempty")
            if members[0] < 1 or members[-1] >= 4**self.n:
                raise ValueError(f"block {members} has out-of-range indices for n={self.n}")
            if seen.intersection(members):
                raise ValueError(f"partition blocks overlap at {seen.intersection(members)}")
            seen.update(members)
            blocks.append(members)
        if len(seen) != 4**self.n - 1:
            raise ValueError(
                f"partition must cover all {4**self.n - 1} non-identity indices, "
                f"covers {len(seen)}"
            )
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def max_block_size(self) -> int:
        return max(len(block) for block in self.blocks)

    def block_weight(self, block_index: int) -> float:
        """Probability pi(B) = |B| / (4^n - 1) of drawing this block."""
        return len(self.blocks[block_index]) / (4**self.n - 1)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple((a,) for a in nonidentity_indices(n)))

    @classmethod
    def adjacent_pairs(cls, n: int) -> "Partition":
        """Pairs of consecutive indices (final block a singleton when odd)."""
        indices = list(nonidentity_indices(n))
        blocks = [tuple(indices[i : i + 2]) for i in range(0, len(indices), 2)]
        return cls(n, tuple(blocks))


def geometric_mean_fidelity(channel: PauliChannel, block) -> float:
    """Signed geometric mean of the eigenvalues in a block.

    Returns sgn(prod) * |prod|^(1/|B|), with the convention that a zero factor
    makes the whole block value 0 (sgn 0 = 0).
    """
    members = [int(b) for b in block]
    if not members:
        raise ValueError("block must be nonempty")
    values = channel.eigenvalues[members]
    if np.any(values == 0.0):
        return 0.0
    sign = -1.0 if np.count_nonzero(values < 0) % 2 else 1.0
    return float(sign * np.exp(np.mean(np.log(np.abs(values)))))


# -- file formats ------------------------------------------------------------

_REPRESENTATIONS = ("error_rates", "eigenvalues")


def save_channel(channel: PauliChannel, path, representation: str = "error_rates") -> None:
    if representation not in _REPRESENTATIONS:
        raise ValueError(f"representation must be one of {_REPRESENTATIONS}")
    values = getattr(channel, representation)
    payload = {
        "n": channel.n,
        "representation": representation,
        "values": [float(v) for v in values],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)
        handle.write("\n")


def channel_from_dict(payload: dict) -> PauliChannel:
    if not isinstance(payload, dict):
        raise ChannelFormatError("channel file must contain a JSON object")
    missing = {"n", "representation", "values"} - payload.keys()
    if missing:
        raise ChannelFormatError(f"channel file missing keys: {sorted(missing)}")
    n = payload["n"]
    representation = payload["representation"]
    values = payload["values"]
    if not isinstance(n, int) or n < 1:
        raise ChannelFormatError(f"invalid qubit count {n!r}")
    if representation not in _REPRESENTATIONS:
        raise ChannelFormatError(f"invalid representation {representation!r}")
    if not isinstance(values, list) or len(values) != 4**n:
        raise ChannelFormatError(
            f"expected {4**n} values for n={n}, got {len(values) if isinstance(values, list) else type(values)}"
        )
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ChannelFormatError(f"values must be real numbers: {exc}") from exc
    return PauliChannel(n, **{representation: arr})


def load_channel(path, tol: float = DEFAULT_TOL, strict: bool = True) -> PauliChannel:
    """Load a channel JSON file; with ``strict`` the loader also validates."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ChannelFormatError(f"invalid JSON in {path}: {exc}") from exc
    channel = channel_from_dict(payload)
    if strict:
        report = validate(channel, tol)
        if not report.valid:
            raise InvalidChannelError(
                f"channel in {path} failed validation: {'; '.join(report.failures)}",
                report,
            )
    return channel


def save_partition(partition: Partition, path) -> None:
    payload = {"n": partition.n, "blocks": [list(b) for b in partition.blocks]}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)
        handle.write("\n")


def load_partition(path) -> Partition:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ChannelFormatError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict) or {"n", "blocks"} - payload.keys():
        raise ChannelFormatError("partition file must contain keys 'n' and 'blocks'")
    n, blocks = payload["n"], payload["blocks"]
    if not isinstance(n, int) or not isinstance(blocks, list):
        raise ChannelFormatError("invalid partition payload types")
    try:
        return Partition(n, tuple(tuple(int(i) for i in block) for block in blocks))
    except (TypeError, ValueError) as exc:
        raise ChannelFormatError(f"invalid partition: {exc}") from exc


def pauli_label(index: int, n: int) -> str:
    """Letter string for a canonical index (CLI/report convenience)."""
    return PauliString.from_index(index, n).to_string()
