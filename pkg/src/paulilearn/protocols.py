"""Concrete estimation protocols: entanglement-assisted Bell sampling with
noisy pairs, ancilla-free eigenvalue estimation over commuting covers, block
(geometric-mean) estimation, and the two-point distinguishing game.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from . import _config
from .channel import (
    PauliChannel,
    Partition,
    completely_depolarizing,
    error_rates_from_eigenvalues,
    make_hypothesis_channel,
)
from .pauli import index_weight, nonidentity_indices, symplectic_parity

Player = Callable[[PauliChannel, int, np.random.Generator], float]


def _check_protocol_n(n: int) -> None:
    if n > _config.max_protocol_n():
        raise ValueError(
            f"n={n} exceeds protocol cap {_config.max_protocol_n()} "
            "(override with PAULILEARN_MAX_PROTOCOL_N)"
        )


# -- Bell-pair noise model -----------------------------------------------------


def fidelity_from_p(p: float) -> float:
    """Fidelity of a Bell pair whose two qubits each depolarize with rate p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing rate must be in [0, 1], got {p}")
    return (1.0 + 3.0 * (1.0 - p) ** 2) / 4.0


def p_from_fidelity(f_bell: float) -> float:
    """Inverse of :func:`fidelity_from_p` on the branch p in [0, 1]."""
    if not 0.25 <= f_bell <= 1.0:
        raise ValueError(f"Bell fidelity must be in [1/4, 1], got {f_bell}")
    return 1.0 - math.sqrt((4.0 * f_bell - 1.0) / 3.0)


@dataclass(frozen=True)
class NoiseModel:
    """Local depolarizing noise of strength p on every Bell-pair qubit."""

    p: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarizing rate must be in [0, 1], got {self.p}")

    @property
    def bell_fidelity(self) -> float:
        return fidelity_from_p(self.p)

    @classmethod
    def from_bell_fidelity(cls, f_bell: float) -> "NoiseModel":
        return cls(p_from_fidelity(f_bell))


# -- entanglement-assisted protocol --------------------------------------------


def bell_outcome_distribution_exact(channel: PauliChannel, p: float = 0.0) -> np.ndarray:
    """Distribution of Bell-basis outcomes with noisy pairs.

    Noise attenuates each eigenvalue by (1-p)^(2 |b|), so the outcome
    distribution is the inverse transform of the attenuated eigenvalues:
    q(a) = 4^-n sum_b (-1)^<a,b> (1-p)^(2|b|) lambda_b.
    """
    n = channel.n
    _check_protocol_n(n)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing rate must be in [0, 1], got {p}")
    weights = np.array([(1.0 - p) ** (2 * index_weight(b, n)) for b in range(4**n)])
    return error_rates_from_eigenvalues(channel.eigenvalues * weights)


def bell_sample(
    channel: PauliChannel, p: float, shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample Bell-basis outcome indices, one per prepared pair block.

    Implemented physically rather than from the closed-form distribution: a
    channel error b is drawn from the error rates, then each of the 2n noisy
    qubits contributes an extra Pauli (identity with probability 1 - 3p/4,
    otherwise uniform), and everything folds together by symplectic XOR.
    """
    n = channel.n
    _check_protocol_n(n)
    if shots < 0:
        raise ValueError(f"shots must be nonnegative, got {shots}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing rate must be in [0, 1], got {p}")
    rates = np.clip(channel.error_rates, 0.0, None)
    cumulative = np.cumsum(rates)
    if cumulative[-1] <= 0.0:
        raise ValueError("channel error rates do not sum to a positive value")
    cumulative = cumulative / cumulative[-1]
    outcomes = np.searchsorted(cumulative, rng.random(shots), side="right").astype(np.int64)
    if p > 0.0:
        digit_probs = [1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p]
        digits = rng.choice(4, size=(shots, n, 2), p=digit_probs)
        noise = np.zeros(shots, dtype=np.int64)
        for k in range(n):
            noise = (noise << 2) | (digits[:, k, 0] ^ digits[:, k, 1])
        outcomes ^= noise
    return outcomes


def ea_estimate(samples: np.ndarray, b: int, p: float, n: int) -> float:
    """Unbiased eigenvalue estimate from Bell outcomes.

    Each outcome a contributes (1-p)^(-2|b|) (-1)^<a,b>; noise attenuation is
    undone by the weight-dependent rescaling.
    """
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("need at least one sample")
    signs = 1.0 - 2.0 * symplectic_parity(samples, b, n)
    return float(np.mean(signs) * (1.0 - p) ** (-2 * index_weight(b, n)))


def ea_sample_count(eps: float, delta: float, weight: int, p: float = 0.0) -> int:
    """Bell rounds sufficient for one eigenvalue of the given Pauli weight:
    ceil(2 eps^-2 (1-p)^(-4 weight) ln(2/delta))."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if weight < 0:
        raise ValueError(f"weight must be nonnegative, got {weight}")
    return math.ceil(2.0 * eps**-2 * (1.0 - p) ** (-4 * weight) * math.log(2.0 / delta))


# -- ancilla-free protocol over commuting covers --------------------------------


def _span(generators: Sequence[int]) -> set:
    elements = {0}
    for g in generators:
        elements |= {e ^ g for e in elements}
    return elements


def _gf2_basis(members: Sequence[int]) -> List[int]:
    """Echelon basis (by leading bit) of the F2-span of the given indices."""
    basis: List[int] = []
    for m in sorted(members):
        reduced = m
        for vec in basis:
            if reduced ^ vec < reduced:
                reduced ^= vec
        if reduced:
            basis.append(reduced)
            basis.sort(reverse=True)
    return basis


def _express(index: int, basis: Sequence[int]) -> int:
    """Coefficient bitmask of ``index`` in the echelon basis."""
    coeffs = 0
    reduced = index
    for i, vec in enumerate(basis):
        if reduced ^ vec < reduced:
            reduced ^= vec
            coeffs |= 1 << i
    if reduced:
        raise ValueError(f"index {index} is not in the span of the basis")
    return coeffs


def enumerate_commuting_groups(n: int) -> List[Tuple[int, ...]]:
    """All maximal commuting Pauli subgroups (identity omitted), n <= 3.

    There are prod_k (2^k + 1) of them: 3, 15, 135 for n = 1, 2, 3.
    """
    if n > 3:
        raise ValueError(f"full enumeration is only supported for n <= 3, got {n}")
    total = 4**n
    groups: set = set()

    def extend(generators: List[int], span: set) -> None:
        if len(span) == 2**n:
            groups.add(tuple(sorted(span - {0})))
            return
        for candidate in range(1, total):
            if candidate in span:
                continue
            if any(symplectic_parity(candidate, g, n) for g in generators):
                continue
            # prune: only extend by the smallest element of the added coset
            # (different generator sequences can still reach the same group,
            # so the results are deduplicated above)
            if any((s ^ candidate) < candidate for s in span):
                continue
            extend(generators + [candidate], _span(generators + [candidate]))

    extend([], {0})
    return sorted(groups)


def _exact_cover(n: int, groups: Sequence[Tuple[int, ...]]) -> Optional[List[Tuple[int, ...]]]:
    """Backtracking search for disjoint groups covering all non-identity indices."""
    containing: Dict[int, List[Tuple[int, ...]]] = {}
    for group in groups:
        for member in group:
            containing.setdefault(member, []).append(group)

    def solve(uncovered: frozenset) -> Optional[List[Tuple[int, ...]]]:
        if not uncovered:
            return []
        pivot = min(uncovered)
        for group in containing.get(pivot, []):
            if uncovered.issuperset(group):
                rest = solve(uncovered - frozenset(group))
                if rest is not None:
                    return [group] + rest
        return None

    return solve(frozenset(range(1, 4**n)))


def _randomized_cover(n: int, rng: np.random.Generator) -> List[Tuple[int, ...]]:
    uncovered = set(range(1, 4**n))
    groups: List[Tuple[int, ...]] = []
    while uncovered:
        seed_elem = min(uncovered)
        generators = [seed_elem]
        span = _span(generators)
        while len(span) < 2**n:
            candidates = [
                c
                for c in range(1, 4**n)
                if c not in span and not any(symplectic_parity(c, g, n) for g in generators)
            ]
            preferred = [c for c in candidates if c in uncovered] or candidates
            choice = preferred[int(rng.integers(len(preferred)))]
            generators.append(choice)
            span = _span(generators)
        groups.append(tuple(sorted(span - {0})))
        uncovered -= span
    return groups


def commuting_cover(
    n: int, strategy: str = "greedy", rng: Optional[np.random.Generator] = None
) -> List[Tuple[int, ...]]:
    """Cover the non-identity Paulis by maximal commuting groups.

    "greedy" finds a minimum cover of 2^n + 1 disjoint groups by exact-cover
    search over the full group list (n <= 3), falling back to a randomized
    build-up at n = 4.  "product" uses the 3^n single-qubit basis assignments.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if strategy == "product":
        if n > 8:
            raise ValueError(f"product covers are limited to n <= 8, got {n}")
        groups = []
        for assignment in np.ndindex(*(3,) * n):
            generators = []
            for k, digit in enumerate(assignment):
                generators.append((digit + 1) << (2 * (n - 1 - k)))
            groups.append(tuple(sorted(_span(generators) - {0})))
        return sorted(groups)
    if strategy == "greedy":
        if n <= 3:
            cover = _exact_cover(n, enumerate_commuting_groups(n))
            if cover is None:
                raise RuntimeError(f"no disjoint cover exists for n={n}")
            return sorted(cover)
        if n == 4:
            return sorted(_randomized_cover(n, rng or np.random.default_rng(0)))
        raise ValueError(f"greedy covers are limited to n <= 4, got {n}")
    raise ValueError(f"strategy must be 'greedy' or 'product', got {strategy!r}")


def validate_cover(cover: Sequence[Tuple[int, ...]], n: int) -> None:
    """Check each group is a maximal commuting subgroup and the union covers
    every non-identity index."""
    covered: set = set()
    for group in cover:
        members = set(group)
        if len(members) != 2**n - 1:
            raise ValueError(f"group {group} has {len(members)} members, expected {2**n - 1}")
        span = _span(list(members))
        if span != members | {0}:
            raise ValueError(f"group {group} is not closed under multiplication")
        for a in group:
            for b in group:
                if symplectic_parity(a, b, n):
                    raise ValueError(f"group {group} contains anticommuting pair ({a}, {b})")
        covered |= members
    missing = set(nonidentity_indices(n)) - covered
    if missing:
        raise ValueError(f"cover misses indices {sorted(missing)}")


def _group_outcome_model(channel: PauliChannel, group: Tuple[int, ...]):
    """Exact outcome distribution of the joint eigenbasis measurement.

    Preparing the group's +1 joint eigenstate and measuring the same basis
    after one channel use yields sign vectors s with
    P(s) = 2^-n sum_v lambda_{m(v)} (-1)^(s.v).
    """
    basis = _gf2_basis(group)
    k = len(basis)
    element = np.zeros(2**k, dtype=np.int64)
    for v in range(2**k):
        idx = 0
        for i in range(k):
            if v >> i & 1:
                idx ^= basis[i]
        element[v] = idx
    v_range = np.arange(2**k)
    parities = np.bitwise_count(v_range[:, None] & v_range[None, :]).astype(np.int64)
    signs = 1 - 2 * (parities & 1)
    probs = signs @ channel.eigenvalues[element] / 2**k
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    member_coeffs = {m: _express(m, basis) for m in group}
    return probs, signs, member_coeffs


def af_group_estimates(
    channel: PauliChannel,
    group: Tuple[int, ...],
    shots: int,
    rng: np.random.Generator,
) -> Dict[int, float]:
    """Estimate every eigenvalue in one commuting group from ``shots`` uses."""
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    probs, signs, member_coeffs = _group_outcome_model(channel, group)
    cumulative = np.cumsum(probs)
    outcomes = np.searchsorted(cumulative, rng.random(shots), side="right")
    outcomes = np.minimum(outcomes, len(probs) - 1)
    return {
        member: float(np.mean(signs[outcomes, coeff]))
        for member, coeff in member_coeffs.items()
    }


def af_estimate_eigenvalue(
    channel: PauliChannel, a: int, shots: int, rng: np.random.Generator
) -> float:
    """Single-target version: prepare the +1 eigenstate of P_a, measure P_a."""
    if not 1 <= a < 4**channel.n:
        raise ValueError(f"target must be a non-identity index, got {a}")
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    plus_prob = float(np.clip((1.0 + channel.eigenvalues[a]) / 2.0, 0.0, 1.0))
    hits = int(rng.binomial(shots, plus_prob))
    return 2.0 * hits / shots - 1.0


@dataclass(frozen=True)
class AFLearningResult:
    """Outcome of running the cover-based ancilla-free protocol."""

    n: int
    estimates: np.ndarray
    shots_per_group: int
    total_shots: int
    group_count: int


def af_estimate_all(
    channel: PauliChannel,
    eps: float,
    delta: float,
    cover: Optional[Sequence[Tuple[int, ...]]] = None,
    rng: Optional[np.random.Generator] = None,
) -> AFLearningResult:
    """Estimate all eigenvalues by measuring each cover group
    ceil(2 eps^-2 ln(2/delta)) times; overlapping estimates are averaged."""
    n = channel.n
    if cover is None:
        cover = commuting_cover(n, "greedy" if n <= 4 else "product", rng)
    validate_cover(cover, n)
    if rng is None:
        rng = np.random.default_rng(0)
    shots_per_group = math.ceil(2.0 * eps**-2 * math.log(2.0 / delta))
    sums = np.zeros(4**n)
    counts = np.zeros(4**n, dtype=np.int64)
    for group in cover:
        for member, value in af_group_estimates(channel, group, shots_per_group, rng).items():
            sums[member] += value
            counts[member] += 1
    estimates = np.ones(4**n)
    mask = counts > 0
    estimates[mask] = sums[mask] / counts[mask]
    estimates[0] = 1.0
    return AFLearningResult(
        n=n,
        estimates=estimates,
        shots_per_group=shots_per_group,
        total_shots=shots_per_group * len(cover),
        group_count=len(cover),
    )


def clipped_geometric_mean(values: np.ndarray) -> float:
    """Signed geometric mean of estimates clipped to [-1, 1]; any zero factor
    collapses the block value to 0."""
    clipped = np.clip(np.asarray(values, dtype=np.float64), -1.0, 1.0)
    if clipped.size == 0:
        raise ValueError("need at least one value")
    if np.any(clipped == 0.0):
        return 0.0
    sign = -1.0 if np.count_nonzero(clipped < 0.0) % 2 else 1.0
    return float(sign * np.exp(np.mean(np.log(np.abs(clipped)))))


def coarse_estimate(
    channel: PauliChannel,
    partition: Partition,
    shots_per_group: int,
    rng: np.random.Generator,
    cover: Optional[Sequence[Tuple[int, ...]]] = None,
) -> np.ndarray:
    """Estimate the block geometric means of a partition, one value per block."""
    n = channel.n
    if partition.n != n:
        raise ValueError(f"partition is for n={partition.n}, channel has n={n}")
    if cover is None:
        cover = commuting_cover(n, "greedy" if n <= 4 else "product", rng)
    validate_cover(cover, n)
    sums = np.zeros(4**n)
    counts = np.zeros(4**n, dtype=np.int64)
    for group in cover:
        for member, value in af_group_estimates(channel, group, shots_per_group, rng).items():
            sums[member] += value
            counts[member] += 1
    estimates = np.divide(sums, counts, out=np.ones(4**n), where=counts > 0)
    return np.array(
        [clipped_geometric_mean(estimates[list(block)]) for block in partition.blocks]
    )


# -- the two-point distinguishing game ------------------------------------------


@dataclass(frozen=True)
class GameResult:
    """Aggregate record of repeated rounds of the distinguishing game."""

    n: int
    eps0: float
    trials: int
    wins: int
    breakdown: Dict[Tuple[int, int], Tuple[int, int]] = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return self.wins / self.trials if self.trials else 0.0


def ea_player(shots: int, p: float = 0.0) -> Player:
    """Bell-sampling player: estimates lambda_a after the target is revealed."""

    def play(channel: PauliChannel, a: int, rng: np.random.Generator) -> float:
        samples = bell_sample(channel, p, shots, rng)
        return ea_estimate(samples, a, p, channel.n)

    return play


def ignore_player() -> Player:
    """Baseline that never measures; always reports eigenvalue 0."""

    def play(channel: PauliChannel, a: int, rng: np.random.Generator) -> float:
        return 0.0

    return play


def oracle_player() -> Player:
    """Upper baseline that reads the true eigenvalue."""

    def play(channel: PauliChannel, a: int, rng: np.random.Generator) -> float:
        return float(channel.eigenvalues[a])

    return play


def lecam_game(
    n: int,
    eps0: float,
    player: Player,
    trials: int,
    rng: np.random.Generator,
) -> GameResult:
    """Repeatedly draw a uniformly random two-point instance and score the player.

    Each round: a non-identity target a and sign s are drawn uniformly, then a
    fair coin picks either the null channel (all non-trivial eigenvalues 0) or
    the alternative with lambda_a = s eps0.  The player probes the channel,
    the target is revealed, and the player's estimate is classified to the
    nearest of {-eps0, 0, +eps0}; it wins when nonzero-vs-zero matches the
    coin.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if not 0.0 < eps0 <= 1.0:
        raise ValueError(f"eps0 must be in (0, 1], got {eps0}")
    null_channel = completely_depolarizing(n)
    wins = 0
    breakdown: Dict[Tuple[int, int], List[int]] = {}
    for _ in range(trials):
        a = int(rng.integers(1, 4**n))
        sign = 1 if rng.integers(2) else -1
        is_alternative = bool(rng.integers(2))
        channel = make_hypothesis_channel(n, a, sign, eps0) if is_alternative else null_channel
        estimate = player(channel, a, rng)
        guessed_alternative = abs(estimate) > eps0 / 2.0
        win = guessed_alternative == is_alternative
        wins += win
        cell = breakdown.setdefault((a, sign), [0, 0])
        cell[0] += win
        cell[1] += 1
    return GameResult(
        n=n,
        eps0=eps0,
        trials=trials,
        wins=wins,
        breakdown={key: (w, t) for key, (w, t) in breakdown.items()},
    )


@dataclass(frozen=True)
class EstimateRecord:
    """One row of a simulation run (CSV-friendly)."""

    protocol: str
    n: int
    target: int
    shots: int
    estimate: float
    truth: float
    error: float
    seed: int
