"""Transcript-distinguishability budget: exact TVD, certification, recurrences."""

import numpy as np
import pytest

from paulilearn.channel import Partition
from paulilearn.schemes import (
    Instrument,
    SchemePolicy,
    count_measurements,
    run_scheme_exact,
)
from paulilearn.tvd import (
    CertificationReport,
    HypothesisFamily,
    avg_tvd,
    certify_inequality,
    mu_trajectory_check,
    random_policy,
    second_moment_check,
    tvd_budget,
)

KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
KET1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
Z_POVM = {"0": KET0, "1": KET1}


def repeated_z_policy() -> SchemePolicy:
    """Prepare |0>, read Z after each of two channel uses."""
    instrument = Instrument({"0": (KET0,), "1": (KET1,)})
    return SchemePolicy(
        n=1,
        depth=2,
        initial=(("r", KET0),),
        instruments={("r",): instrument},
        final_povms={("r", "0"): Z_POVM, ("r", "1"): Z_POVM},
    )


def blind_policy() -> SchemePolicy:
    """A coin flip and an identity POVM: learns nothing about the channel."""
    coin = Instrument(
        {"h": (np.sqrt(0.5) * np.eye(2, dtype=complex),),
         "t": (np.sqrt(0.5) * np.eye(2, dtype=complex),)}
    )
    eye_povm = {"x": np.eye(2, dtype=complex)}
    return SchemePolicy(
        n=1,
        depth=2,
        initial=(("r", 0.5 * np.eye(2, dtype=complex)),),
        instruments={("r",): coin},
        final_povms={("r", "h"): eye_povm, ("r", "t"): eye_povm},
    )


# -- families -------------------------------------------------------------------


def test_family_validation():
    with pytest.raises(ValueError):
        HypothesisFamily(1, eps0=0.5)  # beyond 1/3
    with pytest.raises(ValueError):
        HypothesisFamily(1, eps0=0.0)
    with pytest.raises(ValueError):
        HypothesisFamily(1, eps0=0.2, kind="blockwise")
    with pytest.raises(ValueError):
        HypothesisFamily(1, eps0=0.2, kind="coarse")  # partition missing
    with pytest.raises(ValueError):
        HypothesisFamily(1, eps0=0.2, partition=Partition.singletons(1))
    with pytest.raises(ValueError):
        HypothesisFamily(2, eps0=0.2, kind="coarse", partition=Partition.singletons(1))


def test_pointwise_alternatives_are_uniform():
    family = HypothesisFamily(1, eps0=0.25)
    assert family.C == 1
    rows = list(family.alternatives())
    assert [key for _, key, _, _ in rows] == [1, 2, 3]
    assert all(w == pytest.approx(1 / 3) for w, _, _, _ in rows)
    _, _, plus, minus = rows[0]
    assert plus.eigenvalues[1] == 0.25
    assert minus.eigenvalues[1] == -0.25


def test_coarse_alternatives_weight_by_block_size():
    part = Partition.adjacent_pairs(1)  # blocks (1, 2) and (3,)
    family = HypothesisFamily(1, eps0=0.3, kind="coarse", partition=part)
    assert family.C == 2
    rows = list(family.alternatives())
    assert [w for w, _, _, _ in rows] == pytest.approx([2 / 3, 1 / 3])
    _, _, plus, _ = rows[0]
    assert plus.eigenvalues[1] == pytest.approx(0.15)


# -- exact average TVD ------------------------------------------------------------


def test_avg_tvd_of_repeated_z_readout_closed_form():
    # Only the Z target is visible to this policy; mixing the two signs
    # cancels the first-order term and leaves per-target TVD eps0^2 / 2,
    # hence eps0^2 / 6 after averaging over the three targets.
    policy = repeated_z_policy()
    for eps0 in (0.1, 0.2, 1 / 3):
        value = avg_tvd(policy, HypothesisFamily(1, eps0=eps0))
        assert value == pytest.approx(eps0**2 / 6, abs=1e-12)


def test_blind_policy_has_zero_tvd():
    policy = blind_policy()
    assert avg_tvd(policy, HypothesisFamily(1, eps0=0.3)) == pytest.approx(0.0, abs=1e-14)
    assert count_measurements(policy) == 0


def _z_readout_with_coin(instrument: Instrument) -> SchemePolicy:
    """|0>, the given mid-circuit instrument, then a Z readout."""
    return SchemePolicy(
        n=1,
        depth=2,
        initial=(("r", KET0),),
        instruments={("r",): instrument},
        final_povms={("r", o): Z_POVM for o in instrument.outcomes},
    )


def test_trivial_coin_bias_changes_neither_side():
    # A trivial instrument only relabels transcripts: a branch carrying
    # sqrt(q) * I scales every downstream probability by q, so the bias
    # drops out of the TVD.  It is not counted as a measurement either,
    # so the budget side is untouched too.
    family = HypothesisFamily(1, eps0=0.3)
    plain = _z_readout_with_coin(Instrument({"s": (np.eye(2, dtype=complex),)}))
    reference = certify_inequality(plain, family)
    # Only the final Z readout is informative, and the sign mixing cancels
    # the first-order term, so the lhs matches the repeated-readout value.
    assert reference.lhs == pytest.approx(0.3**2 / 6, abs=1e-12)
    for q in (0.5, 0.3, 0.9):
        coin = Instrument(
            {"h": (np.sqrt(q) * np.eye(2, dtype=complex),),
             "t": (np.sqrt(1.0 - q) * np.eye(2, dtype=complex),)}
        )
        report = certify_inequality(_z_readout_with_coin(coin), family)
        assert report.lhs == pytest.approx(reference.lhs, abs=1e-14)
        assert report.n_meas == reference.n_meas == 1
        assert report.rhs == reference.rhs


def _optimal_win_rate(policy: SchemePolicy, family: HypothesisFamily) -> float:
    """Best transcript classifier for a fair null/alternative coin."""
    null_dist = run_scheme_exact(policy, family.null_channel(), prune=0.0)
    total = 0.0
    for weight, _, plus, minus in family.alternatives():
        dist_plus = run_scheme_exact(policy, plus, prune=0.0)
        dist_minus = run_scheme_exact(policy, minus, prune=0.0)
        keys = null_dist.keys() | dist_plus.keys() | dist_minus.keys()
        win = 0.5 * sum(
            max(null_dist.get(k, 0.0), 0.5 * (dist_plus.get(k, 0.0) + dist_minus.get(k, 0.0)))
            for k in keys
        )
        total += weight * win
    return total


def test_optimal_classifier_win_rate_matches_avg_tvd(rng):
    # With a fair prior the best classifier succeeds with probability
    # 1/2 + TVD/2, so winning the distinguishing game at rate 2/3 requires
    # an average TVD of at least 1/3.
    family = HypothesisFamily(1, eps0=1 / 3)
    for policy in (repeated_z_policy(), random_policy(1, 3, rng)):
        win = _optimal_win_rate(policy, family)
        assert win == pytest.approx(0.5 + avg_tvd(policy, family) / 2, abs=1e-12)
    assert _optimal_win_rate(repeated_z_policy(), family) < 2 / 3


def test_budget_frozen_value():
    family = HypothesisFamily(1, eps0=0.2)
    assert tvd_budget(family, 1) == pytest.approx(0.22139435152992543, rel=1e-15)
    assert tvd_budget(family, 3) == pytest.approx(3 * 0.22139435152992543, rel=1e-14)
    with pytest.raises(ValueError):
        tvd_budget(family, -1)


# -- certification -----------------------------------------------------------------


def test_certify_repeated_z_readout():
    report = certify_inequality(repeated_z_policy(), HypothesisFamily(1, eps0=0.2))
    assert isinstance(report, CertificationReport)
    assert report.n_meas == 2
    assert report.lhs == pytest.approx(0.2**2 / 6, abs=1e-12)
    assert report.holds
    assert report.slack > 0


def test_certify_blind_policy_is_tight_at_zero():
    report = certify_inequality(blind_policy(), HypothesisFamily(1, eps0=0.2))
    assert report.n_meas == 0
    assert report.rhs == 0.0
    assert report.holds


def test_certify_random_policies_both_kinds(rng):
    coarse = HypothesisFamily(
        1, eps0=0.3, kind="coarse", partition=Partition.adjacent_pairs(1)
    )
    pointwise = HypothesisFamily(1, eps0=0.3)
    for _ in range(10):
        policy = random_policy(1, int(rng.integers(1, 4)), rng)
        for family in (pointwise, coarse):
            report = certify_inequality(policy, family)
            assert report.holds, f"budget violated: {report}"


# -- recurrence and moment checks -----------------------------------------------------


def test_mu_trajectory_check_on_random_policies(rng):
    for _ in range(5):
        policy = random_policy(1, 3, rng)
        for a in (1, 2, 3):
            assert mu_trajectory_check(policy, a, eps0=0.25) < 1e-10


def test_second_moment_check_bounds(rng):
    family = HypothesisFamily(1, eps0=0.2)
    for _ in range(5):
        report = second_moment_check(random_policy(1, 3, rng), family)
        assert report.initial_rhs == pytest.approx(2 / 3)
        assert report.step_rhs == pytest.approx((2 / 3) * 2 / (1 - 0.4 - 0.04))
        assert report.holds


def test_second_moment_check_coarse_flattens(rng):
    family = HypothesisFamily(
        1, eps0=0.2, kind="coarse", partition=Partition.adjacent_pairs(1)
    )
    report = second_moment_check(random_policy(1, 2, rng), family)
    assert report.holds
