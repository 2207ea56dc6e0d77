"""Sample-complexity bounds for Pauli eigenvalue estimation without ancillas,
and the entanglement-assisted upper bound they are compared against.

The central quantity is f(eps0), a constant controlling how fast conditional
second moments of Pauli overlaps can grow under adaptive ancilla-free
strategies; the lower bounds all take the form

    N >= (4^n - 1) / (12 (1 + 2 sqrt(f(2 eps))) 2^n eps^2)

(with an extra 1/C^2 for block-averaged targets), together with simplified
numeric constants used for plotting and quick comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

_MODES = ("exact", "simplified", "plotted")

#: Largest n scanned when searching for a crossing point.
CROSSOVER_SCAN_LIMIT = 1000


def f_of(eps0: float) -> float:
    """Second-moment growth constant.

    f(eps0) = 1/2 [ (2 / (1 - eps0^2))^2 + 8 / ((1-eps0)^2 (1 - 2 eps0 - eps0^2)) ]

    defined for 0 <= eps0 <= 1/3 (f(0) = 6, f(1/3) = 43.03125).
    """
    if not 0.0 <= eps0 <= 1 / 3:
        raise ValueError(f"eps0 must be in [0, 1/3], got {eps0}")
    first = (2.0 / (1.0 - eps0**2)) ** 2
    second = 8.0 / ((1.0 - eps0) ** 2 * (1.0 - 2.0 * eps0 - eps0**2))
    return 0.5 * (first + second)


def _ratio_4n_over_2n(n: int) -> float:
    # (4^n - 1) / 2^n, written to stay finite for n up to ~1000.
    return 2.0**n - 2.0**-n


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if n > CROSSOVER_SCAN_LIMIT:
        raise ValueError(f"n={n} exceeds supported range {CROSSOVER_SCAN_LIMIT}")


def ef_lower_bound(n: int, eps: float, mode: str = "exact") -> float:
    """Measurements needed to learn every eigenvalue to precision eps
    without ancillas.

    Modes: "exact" uses the full constant 1/(12 (1 + 2 sqrt(f(2 eps)))),
    "simplified" the rounded-down constant 0.005, and "plotted" the constant
    0.01 used for curve comparisons.
    """
    return coarse_lower_bound(n, eps, 1, mode)


def coarse_lower_bound(n: int, eps: float, C: int, mode: str = "exact") -> float:
    """Lower bound for learning block geometric means, blocks of size <= C."""
    _check_n(n)
    if not isinstance(C, int) or C < 1:
        raise ValueError(f"C must be a positive integer, got {C!r}")
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if not 0.0 < eps <= 1.0 / (6.0 * C):
        raise ValueError(f"eps must be in (0, 1/(6 C)] = (0, {1.0 / (6 * C)}], got {eps}")
    scale = _ratio_4n_over_2n(n) / (eps**2 * C**2)
    if mode == "exact":
        return scale / (12.0 * (1.0 + 2.0 * math.sqrt(f_of(2.0 * C * eps))))
    if mode == "simplified":
        return 0.005 * scale
    return 0.01 * scale


def af_previous_lower_bound(n: int) -> float:
    """Earlier ancilla-free lower bound, (2^n - 1)^(1/3) / 6."""
    _check_n(n)
    return (2.0**n - 1.0) ** (1.0 / 3.0) / 6.0


def _check_ea_params(eps: float, delta: float, f_bell: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not 0.25 < f_bell <= 1.0:
        raise ValueError(f"Bell-pair fidelity must be in (1/4, 1], got {f_bell}")


def ea_upper_bound(n: int, eps: float, delta: float = 1 / 3, f_bell: float = 1.0) -> int:
    """Copies sufficient for the entanglement-assisted protocol.

    ceil(2 eps^-2 ((4 F - 1)/3)^(-2 n) ln(2/delta)) Bell-sampling rounds
    estimate every eigenvalue to eps with failure probability delta, where F
    is the fidelity of each noisy Bell pair.
    """
    _check_n(n)
    _check_ea_params(eps, delta, f_bell)
    log_count = (
        math.log(2.0)
        - 2.0 * math.log(eps)
        - 2.0 * n * math.log((4.0 * f_bell - 1.0) / 3.0)
        + math.log(math.log(2.0 / delta))
    )
    if log_count > 700.0:
        raise OverflowError(
            f"sample count exceeds float range (ln N = {log_count:.1f})"
        )
    count = 2.0 * eps**-2 * ((4.0 * f_bell - 1.0) / 3.0) ** (-2.0 * n) * math.log(2.0 / delta)
    return math.ceil(count)


def ea_growth_rate(f_bell: float) -> float:
    """Per-qubit growth factor (3 / (4 F - 1))^2 of the assisted upper bound."""
    if not 0.25 < f_bell <= 1.0:
        raise ValueError(f"Bell-pair fidelity must be in (1/4, 1], got {f_bell}")
    return (3.0 / (4.0 * f_bell - 1.0)) ** 2


@dataclass(frozen=True)
class CrossoverResult:
    """Outcome of scanning for the qubit count where an ancilla-free lower
    bound overtakes the entanglement-assisted upper bound."""

    variant: str
    f_bell: float
    eps: float
    delta: float
    lower_rate: float
    upper_rate: float
    n_cross: Optional[int]
    lower_at_cross: Optional[float]
    upper_at_cross: Optional[float]
    reason: str


def _lower_curve(variant: str, eps: float) -> Callable[[int], float]:
    if variant == "previous":
        return af_previous_lower_bound
    if variant == "improved":
        return lambda n: ef_lower_bound(n, eps, mode="plotted")
    raise ValueError(f"variant must be 'previous' or 'improved', got {variant!r}")


def crossover(
    f_bell: float,
    eps: float = 0.1,
    delta: float = 1 / 3,
    variant: str = "improved",
) -> CrossoverResult:
    """First n (up to 1000) where the chosen lower bound strictly exceeds the
    assisted upper bound at matching precision and failure probability."""
    _check_ea_params(eps, delta, f_bell)
    lower = _lower_curve(variant, eps)
    lower_rate = 2.0 if variant == "improved" else 2.0 ** (1.0 / 3.0)
    upper_rate = ea_growth_rate(f_bell)

    for n in range(1, CROSSOVER_SCAN_LIMIT + 1):
        try:
            upper = float(ea_upper_bound(n, eps, delta, f_bell))
        except OverflowError:
            upper = math.inf
        low = lower(n)
        if low > upper:
            return CrossoverResult(
                variant=variant,
                f_bell=f_bell,
                eps=eps,
                delta=delta,
                lower_rate=lower_rate,
                upper_rate=upper_rate,
                n_cross=n,
                lower_at_cross=low,
                upper_at_cross=upper,
                reason=f"lower bound exceeds assisted upper bound at n={n}",
            )
        if math.isinf(upper) and lower_rate <= upper_rate:
            break

    if lower_rate <= upper_rate:
        reason = (
            f"no crossing: lower bound growth rate {lower_rate:.6g} per qubit "
            f"does not exceed assisted rate {upper_rate:.6g}"
        )
    else:
        reason = f"no crossing found for n <= {CROSSOVER_SCAN_LIMIT}"
    return CrossoverResult(
        variant=variant,
        f_bell=f_bell,
        eps=eps,
        delta=delta,
        lower_rate=lower_rate,
        upper_rate=upper_rate,
        n_cross=None,
        lower_at_cross=None,
        upper_at_cross=None,
        reason=reason,
    )


@dataclass(frozen=True)
class BoundQuery:
    """A single bound evaluation request (mirrors the CLI flags)."""

    family: str
    n: int
    eps: float = 0.1
    delta: float = 1 / 3
    C: int = 1
    f_bell: float = 1.0
    mode: str = "exact"


def evaluate_bound(query: BoundQuery) -> float:
    if query.family == "ef":
        return ef_lower_bound(query.n, query.eps, query.mode)
    if query.family == "coarse":
        return coarse_lower_bound(query.n, query.eps, query.C, query.mode)
    if query.family == "af_previous":
        return af_previous_lower_bound(query.n)
    if query.family == "ea_upper":
        return float(ea_upper_bound(query.n, query.eps, query.delta, query.f_bell))
    raise ValueError(
        f"family must be one of ('ef', 'coarse', 'af_previous', 'ea_upper'), got {query.family!r}"
    )
