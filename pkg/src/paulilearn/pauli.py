"""n-qubit Pauli operators over the binary symplectic representation.

A Pauli operator on n qubits is encoded by two length-n bit vectors x, z:

    P = (i)^(x.z) X^x Z^z   (tensor product over qubits)

so that each qubit carries one of I, X, Y, Z.  The canonical integer index of
a Pauli interleaves the bits qubit by qubit, qubit 1 most significant:

    index = sum_j (2*x_j + z_j) * 4^(n-j),   j = 1..n

which makes the per-qubit digit 0=I, 1=Z, 2=X, 3=Y and the letter string
("IXYZ...", qubit 1 leftmost) a plain base-4 reading of the index.

Commutation is governed by the symplectic product

    <a,b> = sum_j (a_x,j * b_z,j + a_z,j * b_x,j)  mod 2,

which is 1 exactly when the two operators anticommute.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _config

_LETTER_TO_DIGIT = {"I": 0, "Z": 1, "X": 2, "Y": 3}
_DIGIT_TO_LETTER = "IZXY"

# Single-qubit matrices indexed by digit 2x+z; Y carries the i*XZ phase.
_SINGLE_QUBIT = (
    np.eye(2, dtype=complex),                            # I
    np.array([[1, 0], [0, -1]], dtype=complex),          # Z
    np.array([[0, 1], [1, 0]], dtype=complex),           # X
    np.array([[0, -1j], [1j, 0]], dtype=complex),        # Y
)


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"qubit count must be a positive integer, got {n!r}")


def _check_index(index: int, n: int) -> None:
    if not 0 <= index < 4**n:
        raise ValueError(f"Pauli index {index} out of range for n={n}")


def interleave(x: int, z: int, n: int) -> int:
    """Fold separate x/z bit vectors into the canonical interleaved index."""
    index = 0
    for i in range(n):
        index |= ((x >> i) & 1) << (2 * i + 1)
        index |= ((z >> i) & 1) << (2 * i)
    return index


def deinterleave(index: int, n: int) -> tuple[int, int]:
    """Split a canonical index back into (x, z) bit vectors."""
    x = z = 0
    for i in range(n):
        x |= ((index >> (2 * i + 1)) & 1) << i
        z |= ((index >> (2 * i)) & 1) << i
    return x, z


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator, phase ignored.

    ``x`` and ``z`` are bit vectors packed into ints; bit (n-j) belongs to
    qubit j, so qubit 1 sits in the most significant position.
    """

    n: int
    x: int
    z: int

    def __post_init__(self) -> None:
        _check_n(self.n)
        mask = (1 << self.n) - 1
        if not (0 <= self.x <= mask and 0 <= self.z <= mask):
            raise ValueError(
                f"x/z bits out of range for n={self.n}: x={self.x}, z={self.z}"
            )

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0)

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliString":
        _check_n(n)
        _check_index(index, n)
        x, z = deinterleave(index, n)
        return cls(n, x, z)

    @classmethod
    def from_string(cls, letters: str) -> "PauliString":
        """Parse a letter string like ``"IXYZ"``; qubit 1 is the leftmost."""
        if not letters:
            raise ValueError("empty Pauli string")
        n = len(letters)
        x = z = 0
        for j, letter in enumerate(letters):
            digit = _LETTER_TO_DIGIT.get(letter)
            if digit is None:
                raise ValueError(f"invalid Pauli letter {letter!r} in {letters!r}")
            pos = n - 1 - j
            x |= (digit >> 1) << pos
            z |= (digit & 1) << pos
        return cls(n, x, z)

    # -- conversions -------------------------------------------------------

    @property
    def index(self) -> int:
        return interleave(self.x, self.z, self.n)

    def to_string(self) -> str:
        letters = []
        for j in range(self.n):
            pos = self.n - 1 - j
            digit = (((self.x >> pos) & 1) << 1) | ((self.z >> pos) & 1)
            letters.append(_DIGIT_TO_LETTER[digit])
        return "".join(letters)

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n unitary (Hermitian) matrix; for small n only."""
        cap = _config.max_matrix_n()
        if self.n > cap:
            raise ValueError(
                f"dense Pauli matrix requested for n={self.n}, cap is {cap} "
                "(override with PAULILEARN_MAX_MATRIX_N)"
            )
        out = np.ones((1, 1), dtype=complex)
        for j in range(self.n):
            pos = self.n - 1 - j
            digit = (((self.x >> pos) & 1) << 1) | ((self.z >> pos) & 1)
            out = np.kron(out, _SINGLE_QUBIT[digit])
        return out

    # -- algebra -----------------------------------------------------------

    def symplectic_product(self, other: "PauliString") -> int:
        """Return <self, other> in {0, 1}; 1 means the operators anticommute."""
        if self.n != other.n:
            raise ValueError(f"qubit counts differ: {self.n} vs {other.n}")
        return ((self.x & other.z) ^ (self.z & other.x)).bit_count() & 1

    def commutes_with(self, other: "PauliString") -> bool:
        return self.symplectic_product(other) == 0

    def weight(self) -> int:
        """Number of qubits acted on non-trivially."""
        return (self.x | self.z).bit_count()

    def multiply(self, other: "PauliString") -> "PauliString":
        """Product up to phase: bitwise XOR of the symplectic vectors."""
        if self.n != other.n:
            raise ValueError(f"qubit counts differ: {self.n} vs {other.n}")
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return self.multiply(other)

    def __str__(self) -> str:
        return self.to_string()


# -- index-level helpers (vectorizable, used by the samplers) ---------------


def index_weight(index: int, n: int) -> int:
    """Weight of a Pauli given by canonical index."""
    _check_index(index, n)
    weight = 0
    for j in range(n):
        weight += ((index >> (2 * j)) & 3) != 0
    return weight


@lru_cache(maxsize=8)
def weight_table(n: int) -> np.ndarray:
    """Array of Pauli weights for all 4^n canonical indices."""
    _check_n(n)
    if n > _config.max_dense_n():
        raise ValueError(f"weight table for n={n} exceeds dense cap")
    indices = np.arange(4**n, dtype=np.int64)
    weights = np.zeros(4**n, dtype=np.int64)
    for j in range(n):
        weights += ((indices >> (2 * j)) & 3) != 0
    weights.setflags(write=False)
    return weights


def symplectic_parity(a_indices, b_index: int, n: int):
    """Vectorized symplectic product <a, b> for canonical indices.

    ``a_indices`` may be a scalar or ndarray of indices; ``b_index`` is a
    single index.  Returns 0/1 with the same shape as ``a_indices``.
    """
    _check_index(b_index, n)
    even_mask = 0
    for i in range(n):
        even_mask |= 1 << (2 * i)
    a = np.asarray(a_indices, dtype=np.int64)
    b = np.int64(b_index)
    mixed = (((a >> 1) & b) ^ (a & (b >> 1))) & np.int64(even_mask)
    parity = np.bitwise_count(mixed) & 1
    if np.isscalar(a_indices) or np.ndim(a_indices) == 0:
        return int(parity)
    return parity.astype(np.int64)


@lru_cache(maxsize=8)
def pauli_matrices(n: int) -> np.ndarray:
    """Stacked dense matrices of all 4^n Paulis, shape (4^n, 2^n, 2^n).

    Only available for the dense-simulation regime; the stack at n qubits
    costs 16^n complex entries.
    """
    cap = _config.max_scheme_n()
    if n > cap:
        raise ValueError(
            f"stacked Pauli matrices requested for n={n}, cap is {cap} "
            "(override with PAULILEARN_MAX_SCHEME_N)"
        )
    if n == 1:
        stack = np.stack(_SINGLE_QUBIT)
    else:
        prev = pauli_matrices(n - 1)
        single = np.stack(_SINGLE_QUBIT)
        # index = digit * 4^(n-1) + rest, so the new qubit is the leftmost.
        stack = np.einsum("aij,bkl->abikjl", single, prev).reshape(
            4**n, 2**n, 2**n
        )
    stack.setflags(write=False)
    return stack


def nonidentity_indices(n: int) -> range:
    """Canonical indices of the 4^n - 1 non-identity Paulis."""
    _check_n(n)
    return range(1, 4**n)
