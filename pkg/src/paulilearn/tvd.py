"""Information bounds for adaptive ancilla-free strategies.

The two-point obstruction works with a family of hypothesis channels indexed
by a target (a single non-identity Pauli, or a partition block): the average
distinguishability between the null channel and the sign-mixed alternatives,
measured in total variation over full measurement transcripts, is bounded by

    E_target TVD <= N_meas eps0^2 (2^n / (4^n - 1)) (1 + 2 sqrt(f(eps0))).

This module computes both sides exactly for explicit policies, checks the
scalar conditional-overlap recurrence against dense simulation, and provides
the random policy generator used to exercise the certification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from .bounds import f_of
from .channel import (
    Partition,
    PauliChannel,
    completely_depolarizing,
    make_coarse_hypothesis_channel,
    make_hypothesis_channel,
)
from .pauli import nonidentity_indices, pauli_matrices
from .schemes import (
    History,
    Instrument,
    SchemePolicy,
    ZeroProbabilityBranch,
    apply_channel,
    apply_kraus,
    count_measurements,
    mu_recurrence_step,
    pauli_pair_coefficients,
    random_density,
    random_unitary,
    run_scheme_exact,
    validate_policy,
)

#: Absolute slack allowed when comparing the exact TVD to its budget.
FLOAT_SLACK = 1e-12

_KINDS = ("pointwise", "coarse")


@dataclass(frozen=True)
class HypothesisFamily:
    """The two-point alternatives at detection strength eps0.

    "pointwise" puts lambda_a = +/- eps0 on a single target; "coarse" spreads
    +/- eps0 / |B| over a partition block, drawn with probability
    |B| / (4^n - 1).
    """

    n: int
    eps0: float
    kind: str = "pointwise"
    partition: Optional[Partition] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.eps0 <= 1 / 3:
            raise ValueError(f"eps0 must be in (0, 1/3], got {self.eps0}")
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == "coarse":
            if self.partition is None:
                raise ValueError("coarse families need a partition")
            if self.partition.n != self.n:
                raise ValueError(
                    f"partition is for n={self.partition.n}, family has n={self.n}"
                )
        elif self.partition is not None:
            raise ValueError("pointwise families take no partition")

    @property
    def C(self) -> int:
        return 1 if self.kind == "pointwise" else self.partition.max_block_size

    def null_channel(self) -> PauliChannel:
        return completely_depolarizing(self.n)

    def alternatives(self) -> Iterator[Tuple[float, object, PauliChannel, PauliChannel]]:
        """Yield (weight, key, plus-channel, minus-channel) per target."""
        if self.kind == "pointwise":
            weight = 1.0 / (4**self.n - 1)
            for a in nonidentity_indices(self.n):
                yield (
                    weight,
                    a,
                    make_hypothesis_channel(self.n, a, 1, self.eps0),
                    make_hypothesis_channel(self.n, a, -1, self.eps0),
                )
        else:
            for i, block in enumerate(self.partition.blocks):
                yield (
                    self.partition.block_weight(i),
                    block,
                    make_coarse_hypothesis_channel(self.n, block, 1, self.eps0),
                    make_coarse_hypothesis_channel(self.n, block, -1, self.eps0),
                )


def _tvd(dist_a: Dict[History, float], dist_b: Dict[History, float]) -> float:
    keys = dist_a.keys() | dist_b.keys()
    return 0.5 * sum(abs(dist_a.get(k, 0.0) - dist_b.get(k, 0.0)) for k in keys)


def avg_tvd(policy: SchemePolicy, family: HypothesisFamily) -> float:
    """Exact target-averaged TVD between null and sign-mixed transcripts."""
    null_dist = run_scheme_exact(policy, family.null_channel(), prune=0.0)
    total = 0.0
    for weight, _, plus, minus in family.alternatives():
        dist_plus = run_scheme_exact(policy, plus, prune=0.0)
        dist_minus = run_scheme_exact(policy, minus, prune=0.0)
        keys = dist_plus.keys() | dist_minus.keys()
        mixed = {k: 0.5 * (dist_plus.get(k, 0.0) + dist_minus.get(k, 0.0)) for k in keys}
        total += weight * _tvd(null_dist, mixed)
    return total


def tvd_budget(family: HypothesisFamily, n_meas: int) -> float:
    """Right-hand side of the transcript-distinguishability inequality."""
    if n_meas < 0:
        raise ValueError(f"n_meas must be nonnegative, got {n_meas}")
    n, eps0 = family.n, family.eps0
    return (
        n_meas
        * eps0**2
        * (2.0**n / (4.0**n - 1.0))
        * (1.0 + 2.0 * math.sqrt(f_of(eps0)))
    )


@dataclass(frozen=True)
class CertificationReport:
    """One policy checked against the transcript-distinguishability budget."""

    n: int
    kind: str
    eps0: float
    n_meas: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + FLOAT_SLACK


def certify_inequality(policy: SchemePolicy, family: HypothesisFamily) -> CertificationReport:
    """Exactly evaluate both sides of the budget inequality for one policy."""
    validate_policy(policy)
    n_meas = count_measurements(policy)
    lhs = avg_tvd(policy, family)
    rhs = tvd_budget(family, n_meas)
    return CertificationReport(
        n=policy.n, kind=family.kind, eps0=family.eps0, n_meas=n_meas, lhs=lhs, rhs=rhs
    )


# -- recurrence cross-checks ---------------------------------------------------


def mu_trajectory_check(
    policy: SchemePolicy, a: int, eps0: float, prune: float = 1e-12
) -> float:
    """Maximum deviation between dense conditional simulation and the scalar
    recurrence, over both signs and all transcripts with probability > prune.

    Compares each branch's conditional probability and the conditional
    overlap mu = Tr[P_a rho] after it, then the final POVM probabilities.
    """
    n = policy.n
    paulis = pauli_matrices(n)
    p_a = paulis[a]
    dim = 2**n
    worst = 0.0
    for sign in (1, -1):
        channel = make_hypothesis_channel(n, a, sign, eps0)
        frontier = []
        for label, rho in policy.initial:
            weight = float(np.trace(rho).real)
            if weight <= prune:
                continue
            state = rho.astype(np.complex128) / weight
            frontier.append(((label,), state, float(np.trace(p_a @ state).real)))
        for _ in range(1, policy.depth):
            next_frontier = []
            for history, state, mu in frontier:
                evolved = apply_channel(channel, state)
                instrument = policy.instruments[history]
                for outcome in instrument.outcomes:
                    kraus = instrument.branches[outcome]
                    branch = apply_kraus(kraus, evolved)
                    prob_dense = float(np.trace(branch).real)
                    coeffs = pauli_pair_coefficients(kraus, a, n)
                    try:
                        prob_rec, mu_rec = mu_recurrence_step(mu, sign, eps0, coeffs)
                    except ZeroProbabilityBranch:
                        worst = max(worst, abs(prob_dense))
                        continue
                    worst = max(worst, abs(prob_dense - prob_rec))
                    if prob_dense <= prune:
                        continue
                    mu_dense = float(np.trace(p_a @ branch).real) / prob_dense
                    worst = max(worst, abs(mu_dense - mu_rec))
                    next_frontier.append((history + (outcome,), branch / prob_dense, mu_rec))
            frontier = next_frontier
        for history, state, mu in frontier:
            evolved = apply_channel(channel, state)
            for element in policy.final_povms[history].values():
                prob_dense = float(np.trace(element @ evolved).real)
                prob_rec = (
                    float(np.trace(element).real)
                    + sign * eps0 * mu * float(np.trace(element @ p_a).real)
                ) / dim
                worst = max(worst, abs(prob_dense - prob_rec))
    return worst


@dataclass(frozen=True)
class SecondMomentReport:
    """Conditional-overlap second moments against their uniform bounds."""

    n: int
    eps0: float
    initial_lhs: float
    initial_rhs: float
    step_lhs: float
    step_rhs: float

    @property
    def holds(self) -> bool:
        return (
            self.initial_lhs <= self.initial_rhs + FLOAT_SLACK
            and self.step_lhs <= self.step_rhs + FLOAT_SLACK
        )


def second_moment_check(
    policy: SchemePolicy, family: HypothesisFamily, prune: float = 1e-14
) -> SecondMomentReport:
    """Verify the target-averaged second moment of mu at every checkpoint.

    At the input states E_target[mu^2] <= 2^n / (4^n - 1); after any number
    of measurement branches the average picks up at most the factor
    2 / (1 - 2 eps0 - eps0^2).  Branches with conditional probability below
    ``prune`` are treated as unreachable and contribute zero.
    """
    n, eps0 = policy.n, family.eps0
    paulis = pauli_matrices(n)

    # targets: (weight, channel builder args, member index) flattened so that
    # the average over (block, member) is uniform over non-identity indices
    targets = []
    if family.kind == "pointwise":
        for a in nonidentity_indices(n):
            targets.append((a, (a,)))
    else:
        for block in family.partition.blocks:
            for b in block:
                targets.append((b, block))
    uniform_weight = 1.0 / (4**n - 1)

    initial_sums: Dict[Tuple[int, History], float] = {}
    step_sums: Dict[Tuple[int, History], float] = {}

    for member, target in targets:
        p_member = paulis[member]
        for sign in (1, -1):
            if family.kind == "pointwise":
                channel = make_hypothesis_channel(n, target[0], sign, eps0)
            else:
                channel = make_coarse_hypothesis_channel(n, target, sign, eps0)
            frontier = []
            for label, rho in policy.initial:
                weight = float(np.trace(rho).real)
                if weight <= prune:
                    continue
                state = rho.astype(np.complex128) / weight
                mu = float(np.trace(p_member @ state).real)
                key = (sign, (label,))
                initial_sums[key] = initial_sums.get(key, 0.0) + uniform_weight * mu**2
                frontier.append(((label,), state))
            for _ in range(1, policy.depth):
                next_frontier = []
                for history, state in frontier:
                    evolved = apply_channel(channel, state)
                    instrument = policy.instruments[history]
                    for outcome in instrument.outcomes:
                        branch = apply_kraus(instrument.branches[outcome], evolved)
                        prob = float(np.trace(branch).real)
                        if prob <= prune:
                            continue
                        conditional = branch / prob
                        mu = float(np.trace(p_member @ conditional).real)
                        key = (sign, history + (outcome,))
                        step_sums[key] = step_sums.get(key, 0.0) + uniform_weight * mu**2
                        next_frontier.append((history + (outcome,), conditional))
                frontier = next_frontier

    initial_lhs = max(initial_sums.values(), default=0.0)
    step_lhs = max(step_sums.values(), default=0.0)
    ratio = 2.0**n / (4.0**n - 1.0)
    return SecondMomentReport(
        n=n,
        eps0=eps0,
        initial_lhs=initial_lhs,
        initial_rhs=ratio,
        step_lhs=step_lhs,
        step_rhs=ratio * 2.0 / (1.0 - 2.0 * eps0 - eps0**2),
    )


# -- random policies -----------------------------------------------------------


def _random_instrument(dim: int, rng: np.random.Generator, max_outcomes: int) -> Instrument:
    kind = rng.choice(["isometry", "projective", "trivial"], p=[0.45, 0.35, 0.2])
    if kind == "isometry":
        m = int(rng.integers(1, max_outcomes + 1))
        g = rng.normal(size=(m * dim, dim)) + 1j * rng.normal(size=(m * dim, dim))
        q, _ = np.linalg.qr(g)
        return Instrument(
            {str(o): (q[o * dim : (o + 1) * dim, :],) for o in range(m)}
        )
    if kind == "projective":
        groups = int(rng.integers(2, min(dim, max_outcomes) + 1)) if dim > 1 else 1
        unitary = random_unitary(dim, rng)
        order = rng.permutation(dim)
        cuts = sorted(rng.choice(np.arange(1, dim), size=groups - 1, replace=False)) if groups > 1 else []
        parts = np.split(order, cuts)
        branches = {}
        for o, part in enumerate(parts):
            columns = unitary[:, part]
            branches[str(o)] = (columns @ columns.conj().T,)
        return Instrument(branches)
    # trivial: outcome statistics carry no information about the state
    style = int(rng.integers(3))
    eye = np.eye(dim, dtype=np.complex128)
    if style == 0:
        return Instrument({"0": (eye,)})
    q = float(rng.uniform(0.1, 0.9))
    if style == 1:
        return Instrument({"0": (math.sqrt(q) * eye,), "1": (math.sqrt(1 - q) * eye,)})
    return Instrument(
        {
            "0": (math.sqrt(q) * random_unitary(dim, rng),),
            "1": (math.sqrt(1 - q) * random_unitary(dim, rng),),
        }
    )


def _random_povm(dim: int, rng: np.random.Generator, max_outcomes: int) -> Dict[str, np.ndarray]:
    if rng.random() < 0.1:
        return {"0": np.eye(dim, dtype=np.complex128)}
    instrument = _random_instrument(dim, rng, max_outcomes)
    return {str(o): instrument.povm_element(o) for o in instrument.outcomes}


def random_policy(
    n: int,
    depth: int,
    rng: np.random.Generator,
    max_outcomes: int = 3,
) -> SchemePolicy:
    """Random adaptive policy: mixed instrument kinds, independent per history."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    dim = 2**n
    m0 = int(rng.integers(1, 4))
    weights = rng.dirichlet(np.ones(m0))
    initial = tuple(
        (f"r{j}", weights[j] * random_density(dim, rng)) for j in range(m0)
    )

    instruments: Dict[History, Instrument] = {}
    final_povms: Dict[History, Dict[str, np.ndarray]] = {}
    frontier = [(label,) for label, _ in initial]
    for _ in range(1, depth):
        next_frontier = []
        for history in frontier:
            instrument = _random_instrument(dim, rng, max_outcomes)
            instruments[history] = instrument
            next_frontier.extend(history + (o,) for o in instrument.outcomes)
        frontier = next_frontier
    for history in frontier:
        final_povms[history] = _random_povm(dim, rng, max_outcomes)

    return SchemePolicy(
        n=n, depth=depth, initial=initial, instruments=instruments, final_povms=final_povms
    )
