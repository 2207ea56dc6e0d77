"""Canonical Pauli encoding, symplectic products, dense matrices."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from paulilearn.pauli import (
    PauliString,
    index_weight,
    nonidentity_indices,
    pauli_matrices,
    symplectic_parity,
    weight_table,
)


def test_single_qubit_letters():
    assert PauliString.from_string("I").index == 0
    assert PauliString.from_string("Z").index == 1
    assert PauliString.from_string("X").index == 2
    assert PauliString.from_string("Y").index == 3


def test_first_qubit_is_most_significant():
    # "XI" = X on qubit 1 -> digit 2 in the most significant position
    assert PauliString.from_string("XI").index == 2 * 4 + 0
    assert PauliString.from_string("IX").index == 2
    assert PauliString.from_string("ZY").to_string() == "ZY"


@given(st.integers(min_value=1, max_value=5), st.data())
def test_index_string_round_trip(n, data):
    index = data.draw(st.integers(min_value=0, max_value=4**n - 1))
    p = PauliString.from_index(index, n)
    assert p.index == index
    assert PauliString.from_string(p.to_string()).index == index


@given(st.integers(min_value=1, max_value=4), st.data())
def test_symplectic_is_symmetric_and_bilinear(n, data):
    top = 4**n - 1
    a = data.draw(st.integers(min_value=0, max_value=top))
    b = data.draw(st.integers(min_value=0, max_value=top))
    c = data.draw(st.integers(min_value=0, max_value=top))
    assert symplectic_parity(a, b, n) == symplectic_parity(b, a, n)
    # multiplication is XOR on indices, and the form is additive in each slot
    assert symplectic_parity(a ^ b, c, n) == (
        symplectic_parity(a, c, n) ^ symplectic_parity(b, c, n)
    )
    assert symplectic_parity(a, 0, n) == 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_symplectic_matches_matrix_commutators(n):
    dim = 4**n
    for a in range(dim):
        pa = oracles.pauli_matrix(a, n)
        for b in range(dim):
            pb = oracles.pauli_matrix(b, n)
            commute = np.allclose(pa @ pb, pb @ pa)
            assert symplectic_parity(a, b, n) == (0 if commute else 1)


def test_symplectic_parity_vectorized_matches_scalar():
    n = 3
    indices = np.arange(4**n)
    for b in (1, 7, 33, 63):
        vec = symplectic_parity(indices, b, n)
        assert vec.shape == (4**n,)
        assert all(vec[a] == symplectic_parity(int(a), b, n) for a in indices)


@given(st.integers(min_value=1, max_value=6), st.data())
def test_weight_counts_nonidentity_letters(n, data):
    index = data.draw(st.integers(min_value=0, max_value=4**n - 1))
    p = PauliString.from_index(index, n)
    expected = sum(ch != "I" for ch in p.to_string())
    assert p.weight() == expected
    assert index_weight(index, n) == expected


def test_weight_table_agrees_with_scalar():
    n = 4
    table = weight_table(n)
    assert table.shape == (4**n,)
    assert all(table[i] == index_weight(i, n) for i in range(4**n))


@pytest.mark.parametrize("n", [1, 2])
def test_pauli_matrices_match_oracle(n):
    stack = pauli_matrices(n)
    for a in range(4**n):
        assert np.allclose(stack[a], oracles.pauli_matrix(a, n))


def test_multiplication_is_xor_up_to_phase():
    n = 2
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.integers(0, 4**n, size=2)
        pa = PauliString.from_index(int(a), n)
        pb = PauliString.from_index(int(b), n)
        assert (pa * pb).index == a ^ b
        # dense product equals the dense matrix of a^b up to a phase
        prod = oracles.pauli_matrix(int(a), n) @ oracles.pauli_matrix(int(b), n)
        target = oracles.pauli_matrix(int(a ^ b), n)
        overlap = np.trace(prod.conj().T @ target) / 2**n
        assert np.isclose(abs(overlap), 1.0)


def test_nonidentity_indices():
    assert list(nonidentity_indices(1)) == [1, 2, 3]
    assert len(list(nonidentity_indices(3))) == 63
