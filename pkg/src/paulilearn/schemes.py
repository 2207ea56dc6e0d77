"""Adaptive measurement schemes with classical memory, and their separable
(unentangled-ancilla) counterparts.

A *policy* fixes everything an experimenter controls when probing an unknown
Pauli channel N times without entangled memory: an initial state ensemble, a
quantum instrument after each of the first N-1 channel uses (chosen
adaptively from the outcome history), and a final POVM after the last use.
Transcript distributions are computed exactly by propagating (sub-normalized)
conditional states down the outcome tree.

The separable-scheme classes model the a-priori more general setup where a
quantum ancilla is carried along but every operation and state stays product
across the system/ancilla cut; the two compilers translate in both directions
while preserving the transcript distribution.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np

from . import _config
from .channel import PauliChannel
from .pauli import pauli_matrices

DEFAULT_TOL = 1e-9

#: Branches with conditional probability below this are dropped by the exact
#: transcript runner.
DEFAULT_PRUNE = 1e-14

History = Tuple[Hashable, ...]


class ZeroProbabilityBranch(ZeroDivisionError):
    """Conditioning on an outcome branch that has probability zero."""


# -- linear-algebra helpers ---------------------------------------------------


def _as_complex(matrix) -> np.ndarray:
    arr = np.asarray(matrix, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def kraus_povm_element(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """POVM element sum_K K^dagger K of one instrument branch."""
    mats = [_as_complex(k) for k in kraus]
    if not mats:
        raise ValueError("branch must have at least one Kraus operator")
    acc = np.zeros_like(mats[0])
    for k in mats:
        acc += k.conj().T @ k
    return acc


def apply_kraus(kraus: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """CP map rho -> sum_K K rho K^dagger."""
    out = np.zeros_like(rho)
    for k in kraus:
        out += k @ rho @ k.conj().T
    return out


def is_proportional_to_identity(matrix: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    dim = matrix.shape[0]
    scale = np.trace(matrix) / dim
    return bool(np.abs(matrix - scale * np.eye(dim)).max() <= tol)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank random density matrix (normalized Wishart)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    w = g @ g.conj().T
    return w / np.trace(w).real


# -- channel action on states -------------------------------------------------


def apply_channel(channel: PauliChannel, rho: np.ndarray) -> np.ndarray:
    """Act with the Pauli channel on a density matrix (possibly sub-normalized).

    Decomposes rho in the Pauli basis, scales the coefficient of P_b by
    lambda_b, and reassembles; identical to sum_a p_a P_a rho P_a.
    """
    n = channel.n
    paulis = pauli_matrices(n)
    coeffs = np.einsum("aij,ji->a", paulis, rho)
    return np.einsum("a,aij->ij", coeffs * channel.eigenvalues / 2**n, paulis)


def apply_channel_to_system(
    channel: PauliChannel, rho: np.ndarray, ancilla_dim: int
) -> np.ndarray:
    """Act with the channel on the system factor of an ancilla (x) system state."""
    n = channel.n
    d_sys = 2**n
    paulis = pauli_matrices(n)
    rho4 = rho.reshape(ancilla_dim, d_sys, ancilla_dim, d_sys)
    blocks = np.einsum("akl,iljk->aij", paulis, rho4)
    weights = channel.eigenvalues / d_sys
    out = np.einsum("a,aij,akl->ikjl", weights, blocks, paulis)
    return out.reshape(ancilla_dim * d_sys, ancilla_dim * d_sys)


# -- instruments and policies -------------------------------------------------


@dataclass(frozen=True)
class Instrument:
    """A quantum instrument: outcome label -> list of Kraus operators."""

    branches: Dict[Hashable, Tuple[np.ndarray, ...]]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("instrument must have at least one outcome")
        frozen = {}
        for label, kraus in self.branches.items():
            mats = tuple(_as_complex(k) for k in kraus)
            if not mats:
                raise ValueError(f"outcome {label!r} has no Kraus operators")
            for m in mats:
                m.setflags(write=False)
            frozen[label] = mats
        object.__setattr__(self, "branches", frozen)

    @property
    def outcomes(self) -> Tuple[Hashable, ...]:
        return tuple(self.branches.keys())

    @property
    def dim(self) -> int:
        first = next(iter(self.branches.values()))
        return first[0].shape[0]

    def povm_element(self, label: Hashable) -> np.ndarray:
        return kraus_povm_element(self.branches[label])

    def completeness_defect(self) -> float:
        total = sum(self.povm_element(o) for o in self.branches)
        return float(np.abs(total - np.eye(self.dim)).max())

    def is_trivial(self, tol: float = DEFAULT_TOL) -> bool:
        """True when every outcome's POVM element is proportional to identity,
        i.e. the outcome distribution carries no information about the state."""
        return all(
            is_proportional_to_identity(self.povm_element(o), tol) for o in self.branches
        )


@dataclass(frozen=True)
class SchemePolicy:
    """A full adaptive strategy for ``depth`` sequential channel uses.

    ``initial`` is an ensemble of (label, sub-normalized state) pairs whose
    traces are the selection probabilities.  ``instruments[h]`` is applied
    after channel use ``len(h)`` when the outcome history so far is ``h``
    (initial label included); ``final_povms[h]`` measures after the last use.
    """

    n: int
    depth: int
    initial: Tuple[Tuple[Hashable, np.ndarray], ...]
    instruments: Dict[History, Instrument] = field(default_factory=dict)
    final_povms: Dict[History, Dict[Hashable, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        initial = tuple((label, _as_complex(rho)) for label, rho in self.initial)
        for _, rho in initial:
            rho.setflags(write=False)
        povms = {}
        for history, elements in self.final_povms.items():
            frozen = {}
            for label, element in elements.items():
                mat = _as_complex(element)
                mat.setflags(write=False)
                frozen[label] = mat
            povms[tuple(history)] = frozen
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "instruments", {tuple(h): i for h, i in self.instruments.items()})
        object.__setattr__(self, "final_povms", povms)

    def initial_labels(self) -> Tuple[Hashable, ...]:
        return tuple(label for label, _ in self.initial)


def _walk_histories(policy: SchemePolicy):
    """Yield (history, kind) pairs for every structurally reachable node."""
    frontier: List[History] = [(label,) for label, _ in policy.initial]
    for t in range(1, policy.depth):
        next_frontier = []
        for history in frontier:
            yield history, "instrument"
            instrument = policy.instruments.get(history)
            if instrument is None:
                continue
            next_frontier.extend(history + (o,) for o in instrument.outcomes)
        frontier = next_frontier
    for history in frontier:
        yield history, "povm"


def validate_policy(policy: SchemePolicy, tol: float = DEFAULT_TOL) -> None:
    """Raise ValueError unless the policy is a complete, physical strategy."""
    if policy.depth < 1:
        raise ValueError(f"depth must be >= 1, got {policy.depth}")
    if not policy.initial:
        raise ValueError("policy needs at least one initial state")
    if policy.n > _config.max_scheme_n():
        raise ValueError(
            f"n={policy.n} exceeds scheme cap {_config.max_scheme_n()} "
            "(override with PAULILEARN_MAX_SCHEME_N)"
        )
    dim = 2**policy.n
    labels = policy.initial_labels()
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate initial labels: {labels}")
    total = 0.0
    for label, rho in policy.initial:
        if rho.shape != (dim, dim):
            raise ValueError(f"initial state {label!r} has shape {rho.shape}, expected {(dim, dim)}")
        if np.abs(rho - rho.conj().T).max() > tol:
            raise ValueError(f"initial state {label!r} is not Hermitian")
        if np.linalg.eigvalsh(rho).min() < -tol:
            raise ValueError(f"initial state {label!r} is not positive semidefinite")
        total += float(np.trace(rho).real)
    if abs(total - 1.0) > tol:
        raise ValueError(f"initial ensemble traces sum to {total!r}, expected 1")

    for history, kind in _walk_histories(policy):
        if kind == "instrument":
            instrument = policy.instruments.get(history)
            if instrument is None:
                raise ValueError(f"missing instrument for history {history!r}")
            if instrument.dim != dim:
                raise ValueError(f"instrument at {history!r} acts on dimension {instrument.dim}")
            defect = instrument.completeness_defect()
            if defect > tol:
                raise ValueError(
                    f"instrument at {history!r} is not trace preserving (defect {defect:.3e})"
                )
        else:
            povm = policy.final_povms.get(history)
            if povm is None:
                raise ValueError(f"missing final POVM for history {history!r}")
            acc = np.zeros((dim, dim), dtype=np.complex128)
            for label, element in povm.items():
                if element.shape != (dim, dim):
                    raise ValueError(f"POVM element {label!r} at {history!r} has shape {element.shape}")
                if np.abs(element - element.conj().T).max() > tol:
                    raise ValueError(f"POVM element {label!r} at {history!r} is not Hermitian")
                if np.linalg.eigvalsh(element).min() < -tol:
                    raise ValueError(f"POVM element {label!r} at {history!r} is not psd")
                acc += element
            if np.abs(acc - np.eye(dim)).max() > tol:
                raise ValueError(f"POVM at {history!r} does not sum to identity")


def count_measurements(policy: SchemePolicy, tol: float = DEFAULT_TOL) -> int:
    """Worst-case number of informative measurements along any outcome path.

    An instrument (or the final POVM) is not counted when all its POVM
    elements are proportional to the identity, since its outcome distribution
    is then independent of the state.
    """
    trivial_povm_cache: Dict[History, bool] = {}

    def povm_is_trivial(history: History) -> bool:
        if history not in trivial_povm_cache:
            elements = policy.final_povms[history].values()
            trivial_povm_cache[history] = all(
                is_proportional_to_identity(e, tol) for e in elements
            )
        return trivial_povm_cache[history]

    best = 0
    stack: List[Tuple[History, int]] = [((label,), 0) for label, _ in policy.initial]
    while stack:
        history, count = stack.pop()
        if len(history) == policy.depth:
            total = count + (0 if povm_is_trivial(history) else 1)
            best = max(best, total)
            continue
        instrument = policy.instruments[history]
        step = 0 if instrument.is_trivial(tol) else 1
        for outcome in instrument.outcomes:
            stack.append((history + (outcome,), count + step))
    return best


# -- exact and sampled transcript distributions -------------------------------


def run_scheme_exact(
    policy: SchemePolicy, channel: PauliChannel, prune: float = DEFAULT_PRUNE
) -> Dict[History, float]:
    """Exact probability of every full outcome history.

    States are propagated sub-normalized (their trace is the history
    probability); branches whose probability drops below ``prune`` are
    discarded.
    """
    if channel.n != policy.n:
        raise ValueError(f"channel acts on {channel.n} qubits, policy on {policy.n}")
    cap = _config.max_leaves()
    frontier: List[Tuple[History, np.ndarray]] = [
        ((label,), rho.astype(np.complex128)) for label, rho in policy.initial
    ]
    for t in range(1, policy.depth):
        next_frontier: List[Tuple[History, np.ndarray]] = []
        for history, rho in frontier:
            rho = apply_channel(channel, rho)
            instrument = policy.instruments[history]
            for outcome in instrument.outcomes:
                branch = apply_kraus(instrument.branches[outcome], rho)
                if np.trace(branch).real > prune:
                    next_frontier.append((history + (outcome,), branch))
            if len(next_frontier) > cap:
                raise RuntimeError(
                    f"outcome tree exceeds {cap} branches at step {t} "
                    "(override with PAULILEARN_MAX_LEAVES)"
                )
        frontier = next_frontier

    result: Dict[History, float] = {}
    for history, rho in frontier:
        rho = apply_channel(channel, rho)
        for label, element in policy.final_povms[history].items():
            prob = float(np.trace(element @ rho).real)
            if prob > prune:
                result[history + (label,)] = prob
        if len(result) > cap:
            raise RuntimeError(
                f"outcome tree exceeds {cap} leaves (override with PAULILEARN_MAX_LEAVES)"
            )
    return result


def run_scheme_sampled(
    policy: SchemePolicy,
    channel: PauliChannel,
    shots: int,
    rng: np.random.Generator,
) -> Dict[History, int]:
    """Sample full outcome histories shot by shot (exact conditionals)."""
    if shots < 0:
        raise ValueError(f"shots must be nonnegative, got {shots}")
    weights = np.array([np.trace(rho).real for _, rho in policy.initial])
    weights = weights / weights.sum()
    counts: Dict[History, int] = {}
    for _ in range(shots):
        idx = int(rng.choice(len(policy.initial), p=weights))
        label, rho = policy.initial[idx]
        history: History = (label,)
        state = rho.astype(np.complex128) / np.trace(rho).real
        for t in range(1, policy.depth):
            state = apply_channel(channel, state)
            instrument = policy.instruments[history]
            outcomes = instrument.outcomes
            probs = np.array(
                [
                    np.trace(apply_kraus(instrument.branches[o], state)).real
                    for o in outcomes
                ]
            )
            probs = np.clip(probs, 0.0, None)
            probs = probs / probs.sum()
            pick = int(rng.choice(len(outcomes), p=probs))
            outcome = outcomes[pick]
            state = apply_kraus(instrument.branches[outcome], state)
            norm = np.trace(state).real
            if norm <= 0.0:
                raise ZeroProbabilityBranch(f"sampled a zero-probability branch at {history!r}")
            state = state / norm
            history = history + (outcome,)
        state = apply_channel(channel, state)
        povm = policy.final_povms[history]
        labels = tuple(povm.keys())
        probs = np.array([np.trace(povm[k] @ state).real for k in labels])
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
        pick = int(rng.choice(len(labels), p=probs))
        history = history + (labels[pick],)
        counts[history] = counts.get(history, 0) + 1
    return counts


# -- scalar recurrence for two-point hypothesis channels -----------------------


def pauli_pair_coefficients(
    kraus: Sequence[np.ndarray], a: int, n: int
) -> Tuple[float, float, float, float]:
    """Coefficients (c00, c0a, ca0, caa) with c_xy = Tr[P_x C(P_y)] / 2^n for
    the branch CP map C, x/y ranging over {identity, P_a}."""
    paulis = pauli_matrices(n)
    dim = 2**n
    p_a = paulis[a]
    c_i = apply_kraus(kraus, np.eye(dim, dtype=np.complex128))
    c_pa = apply_kraus(kraus, p_a)
    c00 = np.trace(c_i).real / dim
    c0a = np.trace(c_pa).real / dim
    ca0 = np.trace(p_a @ c_i).real / dim
    caa = np.trace(p_a @ c_pa).real / dim
    return float(c00), float(c0a), float(ca0), float(caa)


def mu_recurrence_step(
    mu: float,
    sign: int,
    eps0: float,
    coefficients: Tuple[float, float, float, float],
) -> Tuple[float, float]:
    """One instrument branch of the conditional-overlap recurrence.

    Under the hypothesis channel with lambda_a = sign * eps0, a conditional
    state is determined by mu = Tr[P_a rho]; taking branch C maps it to

        prob   = c00 + sign eps0 mu c0a
        mu'    = (ca0 + sign eps0 mu caa) / prob.

    Returns (prob, mu'); raises ZeroProbabilityBranch when prob vanishes.
    """
    c00, c0a, ca0, caa = coefficients
    prob = c00 + sign * eps0 * mu * c0a
    if prob <= 0.0:
        raise ZeroProbabilityBranch(f"branch probability {prob!r} is not positive")
    mu_next = (ca0 + sign * eps0 * mu * caa) / prob
    return prob, mu_next


# -- separable (unentangled ancilla) schemes ----------------------------------


@dataclass(frozen=True)
class SeparableScheme:
    """An adaptive scheme that carries an ancilla but never entangles it.

    Every round applies one of several product CP maps A (x) B (ancilla,
    system); completeness requires sum_j X_j (x) Y_j = identity where X_j,
    Y_j are the branch POVM elements.  The final measurement is a separable
    POVM with elements M_k (x) N_k.
    """

    n: int
    ancilla_dim: int
    initial: Tuple[Tuple[Hashable, np.ndarray, np.ndarray], ...]
    steps: Tuple[Tuple[Tuple[Hashable, Tuple[np.ndarray, ...], Tuple[np.ndarray, ...]], ...], ...]
    povm: Tuple[Tuple[Hashable, np.ndarray, np.ndarray], ...]

    def __post_init__(self) -> None:
        initial = tuple(
            (label, _as_complex(sigma), _as_complex(gamma)) for label, sigma, gamma in self.initial
        )
        steps = tuple(
            tuple(
                (
                    label,
                    tuple(_as_complex(k) for k in a_kraus),
                    tuple(_as_complex(k) for k in b_kraus),
                )
                for label, a_kraus, b_kraus in step
            )
            for step in self.steps
        )
        povm = tuple((label, _as_complex(m), _as_complex(nn)) for label, m, nn in self.povm)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "povm", povm)

    @property
    def depth(self) -> int:
        return len(self.steps) + 1


def validate_separable(scheme: SeparableScheme, tol: float = DEFAULT_TOL) -> None:
    d_anc, d_sys = scheme.ancilla_dim, 2**scheme.n
    total = 0.0
    for label, sigma, gamma in scheme.initial:
        if sigma.shape != (d_anc, d_anc) or gamma.shape != (d_sys, d_sys):
            raise ValueError(f"initial factor shapes wrong for {label!r}")
        if np.linalg.eigvalsh(sigma).min() < -tol or np.linalg.eigvalsh(gamma).min() < -tol:
            raise ValueError(f"initial factors for {label!r} are not psd")
        if abs(np.trace(gamma).real - 1.0) > tol:
            raise ValueError(f"system factor for {label!r} must have unit trace")
        total += float(np.trace(sigma).real)
    if abs(total - 1.0) > tol:
        raise ValueError(f"ancilla-side weights sum to {total!r}, expected 1")
    for t, step in enumerate(scheme.steps):
        acc = np.zeros((d_anc * d_sys, d_anc * d_sys), dtype=np.complex128)
        for label, a_kraus, b_kraus in step:
            acc += np.kron(kraus_povm_element(a_kraus), kraus_povm_element(b_kraus))
        if np.abs(acc - np.eye(d_anc * d_sys)).max() > tol:
            raise ValueError(f"separable instrument at step {t} is not trace preserving")
    acc = np.zeros((d_anc * d_sys, d_anc * d_sys), dtype=np.complex128)
    for label, m, nn in scheme.povm:
        acc += np.kron(m, nn)
    if np.abs(acc - np.eye(d_anc * d_sys)).max() > tol:
        raise ValueError("separable POVM does not sum to identity")


def run_separable_exact(
    scheme: SeparableScheme, channel: PauliChannel, prune: float = DEFAULT_PRUNE
) -> Dict[History, float]:
    """Exact transcript distribution of a separable scheme."""
    if channel.n != scheme.n:
        raise ValueError(f"channel acts on {channel.n} qubits, scheme on {scheme.n}")
    cap = _config.max_leaves()
    frontier: List[Tuple[History, np.ndarray]] = [
        ((label,), np.kron(sigma, gamma)) for label, sigma, gamma in scheme.initial
    ]
    for step in scheme.steps:
        next_frontier: List[Tuple[History, np.ndarray]] = []
        for history, rho in frontier:
            rho = apply_channel_to_system(channel, rho, scheme.ancilla_dim)
            for label, a_kraus, b_kraus in step:
                branch = sum(
                    np.kron(ka, kb) @ rho @ np.kron(ka, kb).conj().T
                    for ka, kb in itertools.product(a_kraus, b_kraus)
                )
                if np.trace(branch).real > prune:
                    next_frontier.append((history + (label,), branch))
            if len(next_frontier) > cap:
                raise RuntimeError(f"outcome tree exceeds {cap} branches")
        frontier = next_frontier
    result: Dict[History, float] = {}
    for history, rho in frontier:
        rho = apply_channel_to_system(channel, rho, scheme.ancilla_dim)
        for label, m, nn in scheme.povm:
            prob = float(np.trace(np.kron(m, nn) @ rho).real)
            if prob > prune:
                result[history + (label,)] = prob
    return result


# -- compilation in both directions -------------------------------------------


def compile_separable_to_cma(
    scheme: SeparableScheme, prune: float = 0.0
) -> SchemePolicy:
    """Replace the ancilla by classical bookkeeping.

    The ancilla trajectory is a deterministic function of the branch history,
    so its contribution collapses to a classical weight w = Tr A(alpha)/Tr
    alpha folded into the system Kraus operators, and the final POVM picks up
    the scalar Tr[M alpha]/Tr alpha.
    """
    instruments: Dict[History, Instrument] = {}
    final_povms: Dict[History, Dict[Hashable, np.ndarray]] = {}
    initial = []
    d_sys = 2**scheme.n

    # (history, ancilla state alpha); alpha sub-normalized by past weights.
    frontier: List[Tuple[History, np.ndarray]] = []
    for label, sigma, gamma in scheme.initial:
        weight = float(np.trace(sigma).real)
        if weight > prune:
            initial.append((label, weight * gamma))
            frontier.append(((label,), sigma / weight))

    for step in scheme.steps:
        next_frontier: List[Tuple[History, np.ndarray]] = []
        for history, alpha in frontier:
            branches: Dict[Hashable, Tuple[np.ndarray, ...]] = {}
            for label, a_kraus, b_kraus in step:
                alpha_next = apply_kraus(a_kraus, alpha)
                weight = float(np.trace(alpha_next).real)
                branches[label] = tuple(math.sqrt(max(weight, 0.0)) * k for k in b_kraus)
                if weight > prune:
                    next_frontier.append((history + (label,), alpha_next / weight))
            instruments[history] = Instrument(branches)
        frontier = next_frontier

    for history, alpha in frontier:
        elements: Dict[Hashable, np.ndarray] = {}
        for label, m, nn in scheme.povm:
            weight = float(np.trace(m @ alpha).real)
            elements[label] = weight * nn
        final_povms[history] = elements

    return SchemePolicy(
        n=scheme.n,
        depth=scheme.depth,
        initial=tuple(initial),
        instruments=instruments,
        final_povms=final_povms,
    )


PAD_LABEL = "__pad__"


def compile_cma_to_separable(policy: SchemePolicy) -> SeparableScheme:
    """Realize a classical-memory policy as a separable ancilla scheme.

    The ancilla is a stack of classical registers, one per round, holding the
    outcome history; each branch's ancilla Kraus projects onto the expected
    past and overwrites the current register.  A pad branch (projector onto
    the unreachable part of the register space, identity on the system)
    restores exact completeness and never fires on reachable states.
    """
    init_labels = list(policy.initial_labels())
    step_alphabets: List[List[Hashable]] = []
    for t in range(1, policy.depth):
        labels: set = set()
        for history, instrument in policy.instruments.items():
            if len(history) == t:
                labels.update(instrument.outcomes)
        step_alphabets.append(sorted(labels, key=repr))

    dims = [len(init_labels)] + [1 + len(alpha) for alpha in step_alphabets]
    d_anc = int(np.prod(dims))
    d_sys = 2**policy.n

    def encode(history: History) -> int:
        digits = [init_labels.index(history[0])]
        for t, label in enumerate(history[1:]):
            digits.append(1 + step_alphabets[t].index(label))
        digits.extend([0] * (policy.depth - len(history)))
        index = 0
        for digit, dim in zip(digits, dims):
            index = index * dim + digit
        return index

    def basis_ket(index: int) -> np.ndarray:
        vec = np.zeros((d_anc, 1), dtype=np.complex128)
        vec[index, 0] = 1.0
        return vec

    initial = []
    for label, rho in policy.initial:
        weight = float(np.trace(rho).real)
        ket = basis_ket(encode((label,)))
        sigma = weight * (ket @ ket.conj().T)
        gamma = rho / weight if weight > 0 else np.eye(d_sys) / d_sys
        initial.append((label, sigma, gamma))

    steps = []
    for t in range(1, policy.depth):
        branches = []
        used_projector = np.zeros((d_anc, d_anc), dtype=np.complex128)
        for history, instrument in policy.instruments.items():
            if len(history) != t:
                continue
            source = basis_ket(encode(history))
            used_projector += source @ source.conj().T
            for outcome in instrument.outcomes:
                target = basis_ket(encode(history + (outcome,)))
                a_kraus = (target @ source.conj().T,)
                branches.append(((history, outcome), a_kraus, instrument.branches[outcome]))
        pad = np.eye(d_anc) - used_projector
        branches.append(((PAD_LABEL, t), (pad,), (np.eye(d_sys, dtype=np.complex128),)))
        steps.append(tuple(branches))

    povm = []
    used_projector = np.zeros((d_anc, d_anc), dtype=np.complex128)
    for history, elements in policy.final_povms.items():
        ket = basis_ket(encode(history))
        proj = ket @ ket.conj().T
        used_projector += proj
        for label, element in elements.items():
            povm.append(((history, label), proj, element))
    povm.append(((PAD_LABEL, policy.depth), np.eye(d_anc) - used_projector, np.eye(d_sys, dtype=np.complex128)))

    return SeparableScheme(
        n=policy.n,
        ancilla_dim=d_anc,
        initial=tuple(initial),
        steps=tuple(steps),
        povm=tuple(povm),
    )


def random_separable_scheme(
    n: int,
    depth: int,
    rng: np.random.Generator,
    ancilla_dim: int = 2,
    max_outcomes: int = 2,
) -> SeparableScheme:
    """Random separable scheme alternating ancilla- and system-side
    instruments, with a product POVM at the end."""
    d_sys = 2**n
    weights = rng.dirichlet(np.ones(2))
    initial = tuple(
        (f"r{j}", weights[j] * random_density(ancilla_dim, rng), random_density(d_sys, rng))
        for j in range(2)
    )

    def random_instrument_kraus(dim: int) -> List[np.ndarray]:
        m = int(rng.integers(2, max_outcomes + 1))
        g = rng.normal(size=(m * dim, dim)) + 1j * rng.normal(size=(m * dim, dim))
        q, _ = np.linalg.qr(g)
        return [q[i * dim : (i + 1) * dim, :] for i in range(m)]

    steps = []
    for t in range(depth - 1):
        branches = []
        if t % 2 == 0:
            for j, k in enumerate(random_instrument_kraus(ancilla_dim)):
                branches.append((f"s{j}", (k,), (random_unitary(d_sys, rng),)))
        else:
            for j, k in enumerate(random_instrument_kraus(d_sys)):
                branches.append((f"s{j}", (random_unitary(ancilla_dim, rng),), (k,)))
        steps.append(tuple(branches))

    anc_povm = [k.conj().T @ k for k in random_instrument_kraus(ancilla_dim)]
    sys_povm = [k.conj().T @ k for k in random_instrument_kraus(d_sys)]
    povm = tuple(
        (f"m{u}.{v}", m, nn) for u, m in enumerate(anc_povm) for v, nn in enumerate(sys_povm)
    )
    return SeparableScheme(
        n=n, ancilla_dim=ancilla_dim, initial=initial, steps=tuple(steps), povm=povm
    )


# -- policy serialization ------------------------------------------------------


def _encode_matrix(matrix: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in matrix]


def _decode_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128)


def _history_key(history: History) -> str:
    parts = []
    for label in history:
        text = str(label)
        if "," in text:
            raise ValueError(f"outcome label {label!r} may not contain a comma")
        parts.append(text)
    return ",".join(parts)


def policy_to_dict(policy: SchemePolicy) -> dict:
    """JSON-ready form; outcome labels are coerced to strings."""
    return {
        "n": policy.n,
        "depth": policy.depth,
        "initial": [[str(label), _encode_matrix(rho)] for label, rho in policy.initial],
        "instruments": {
            _history_key(h): {
                str(o): [_encode_matrix(k) for k in instr.branches[o]] for o in instr.outcomes
            }
            for h, instr in policy.instruments.items()
        },
        "final_povms": {
            _history_key(h): {str(o): _encode_matrix(e) for o, e in povm.items()}
            for h, povm in policy.final_povms.items()
        },
    }


def policy_from_dict(payload: dict) -> SchemePolicy:
    missing = {"n", "depth", "initial", "instruments", "final_povms"} - payload.keys()
    if missing:
        raise ValueError(f"policy payload missing keys: {sorted(missing)}")
    initial = tuple((label, _decode_matrix(rows)) for label, rows in payload["initial"])
    instruments = {
        tuple(key.split(",")): Instrument(
            {o: tuple(_decode_matrix(k) for k in kraus) for o, kraus in branches.items()}
        )
        for key, branches in payload["instruments"].items()
    }
    final_povms = {
        tuple(key.split(",")): {o: _decode_matrix(rows) for o, rows in povm.items()}
        for key, povm in payload["final_povms"].items()
    }
    return SchemePolicy(
        n=int(payload["n"]),
        depth=int(payload["depth"]),
        initial=initial,
        instruments=instruments,
        final_povms=final_povms,
    )


def save_policy(policy: SchemePolicy, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(policy_to_dict(policy), handle)
        handle.write("\n")


def load_policy(path, validate: bool = True, tol: float = DEFAULT_TOL) -> SchemePolicy:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    policy = policy_from_dict(payload)
    if validate:
        validate_policy(policy, tol)
    return policy
