"""Adaptive measurement schemes: instruments, policies, recurrences, compilers."""

import numpy as np
import pytest

import oracles
from paulilearn.channel import (
    PauliChannel,
    completely_depolarizing,
    make_hypothesis_channel,
    random_channel,
)
from paulilearn.schemes import (
    Instrument,
    SchemePolicy,
    ZeroProbabilityBranch,
    apply_channel,
    apply_channel_to_system,
    apply_kraus,
    compile_cma_to_separable,
    compile_separable_to_cma,
    count_measurements,
    is_proportional_to_identity,
    kraus_povm_element,
    load_policy,
    mu_recurrence_step,
    pauli_pair_coefficients,
    random_density,
    random_separable_scheme,
    random_unitary,
    run_scheme_exact,
    run_scheme_sampled,
    run_separable_exact,
    save_policy,
    validate_policy,
    validate_separable,
)
from paulilearn.tvd import random_policy

KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
KET1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
PLUS = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)


def z_instrument() -> Instrument:
    return Instrument({"0": (KET0,), "1": (KET1,)})


def coin_instrument(q: float = 0.5) -> Instrument:
    root = np.sqrt(q) * np.eye(2)
    other = np.sqrt(1 - q) * np.eye(2)
    return Instrument({"h": (root,), "t": (other,)})


def z_policy(initial=PLUS) -> SchemePolicy:
    """Prepare, measure Z, measure Z again: two channel uses."""
    povm = {"0": KET0, "1": KET1}
    return SchemePolicy(
        n=1,
        depth=2,
        initial=(("r", initial),),
        instruments={("r",): z_instrument()},
        final_povms={("r", "0"): povm, ("r", "1"): povm},
    )


# -- small linear-algebra helpers ------------------------------------------------


def test_kraus_povm_element_and_apply():
    kraus = (KET0, np.array([[0, 1], [0, 0]], dtype=complex))
    element = kraus_povm_element(kraus)
    assert np.allclose(element, np.eye(2))  # K0'K0 + K1'K1
    rho = apply_kraus(kraus, PLUS)
    assert np.isclose(np.trace(rho).real, 1.0)


def test_is_proportional_to_identity():
    assert is_proportional_to_identity(0.3 * np.eye(4))
    assert is_proportional_to_identity(np.zeros((2, 2)))
    assert not is_proportional_to_identity(KET0)


def test_random_unitary_is_unitary(rng):
    u = random_unitary(4, rng)
    assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-12)


def test_random_density_is_a_state(rng):
    rho = random_density(4, rng)
    assert np.isclose(np.trace(rho).real, 1.0)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_apply_channel_matches_kraus_sum(rng):
    for n in (1, 2):
        chan = random_channel(n, rng)
        rho = random_density(2**n, rng)
        direct = apply_channel(chan, rho)
        literal = oracles.kraus_apply(chan.error_rates, rho, n)
        assert np.allclose(direct, literal, atol=1e-12)


def test_apply_channel_to_system_acts_on_second_factor(rng):
    chan = random_channel(1, rng)
    sigma = random_density(3, rng)
    rho = random_density(2, rng)
    joint = apply_channel_to_system(chan, np.kron(sigma, rho), ancilla_dim=3)
    expected = np.kron(sigma, apply_channel(chan, rho))
    assert np.allclose(joint, expected, atol=1e-12)


# -- instruments ------------------------------------------------------------------


def test_instrument_completeness_and_outcomes():
    instr = z_instrument()
    assert instr.outcomes == ("0", "1")
    assert instr.dim == 2
    assert instr.completeness_defect() < 1e-15
    assert np.allclose(instr.povm_element("0"), KET0)


def test_instrument_triviality():
    assert coin_instrument().is_trivial()
    assert not z_instrument().is_trivial()


def test_instrument_rejects_empty():
    with pytest.raises(ValueError):
        Instrument({})
    with pytest.raises(ValueError):
        Instrument({"0": ()})


# -- policies and validation -------------------------------------------------------


def test_z_policy_is_valid():
    validate_policy(z_policy())


def test_validate_policy_structural_errors():
    povm = {"0": KET0, "1": KET1}
    with pytest.raises(ValueError, match="missing instrument"):
        validate_policy(
            SchemePolicy(n=1, depth=2, initial=(("r", PLUS),), final_povms={})
        )
    with pytest.raises(ValueError, match="missing final POVM"):
        validate_policy(
            SchemePolicy(
                n=1,
                depth=2,
                initial=(("r", PLUS),),
                instruments={("r",): z_instrument()},
                final_povms={("r", "0"): povm},
            )
        )
    with pytest.raises(ValueError, match="sum to identity"):
        validate_policy(
            SchemePolicy(n=1, depth=1, initial=(("r", PLUS),), final_povms={("r",): {"0": KET0}})
        )


def test_validate_policy_physicality_errors():
    with pytest.raises(ValueError, match="traces sum"):
        validate_policy(
            SchemePolicy(
                n=1, depth=1, initial=(("r", 0.5 * PLUS),),
                final_povms={("r",): {"0": KET0, "1": KET1}},
            )
        )
    not_psd = np.array([[0.5, 0.9], [0.9, 0.5]], dtype=complex)
    with pytest.raises(ValueError, match="positive semidefinite"):
        validate_policy(
            SchemePolicy(
                n=1, depth=1, initial=(("r", not_psd),),
                final_povms={("r",): {"0": KET0, "1": KET1}},
            )
        )
    lossy = Instrument({"0": (0.5 * KET0,)})
    with pytest.raises(ValueError, match="not trace preserving"):
        validate_policy(
            SchemePolicy(
                n=1, depth=2, initial=(("r", PLUS),),
                instruments={("r",): lossy},
                final_povms={("r", "0"): {"0": KET0, "1": KET1}},
            )
        )


def test_random_policies_validate(rng):
    for depth in (1, 2, 3):
        validate_policy(random_policy(1, depth, rng))
    validate_policy(random_policy(2, 2, rng))


# -- counting informative measurements ----------------------------------------------


def test_count_skips_trivial_instruments_and_povms():
    identity_povm = {"x": np.eye(2, dtype=complex)}
    informative_povm = {"0": KET0, "1": KET1}

    def build(instr, povm):
        return SchemePolicy(
            n=1, depth=2, initial=(("r", PLUS),),
            instruments={("r",): instr},
            final_povms={("r", o): povm for o in instr.outcomes},
        )

    assert count_measurements(build(coin_instrument(), identity_povm)) == 0
    assert count_measurements(build(z_instrument(), identity_povm)) == 1
    assert count_measurements(build(coin_instrument(), informative_povm)) == 1
    assert count_measurements(build(z_instrument(), informative_povm)) == 2


def test_count_takes_worst_case_over_paths():
    # heads -> informative POVM, tails -> trivial POVM: worst case counts heads
    policy = SchemePolicy(
        n=1, depth=2, initial=(("r", PLUS),),
        instruments={("r",): coin_instrument()},
        final_povms={
            ("r", "h"): {"0": KET0, "1": KET1},
            ("r", "t"): {"x": np.eye(2, dtype=complex)},
        },
    )
    assert count_measurements(policy) == 1


# -- exact and sampled runs -----------------------------------------------------------


def test_exact_run_z_policy_closed_form():
    # Full dephasing keeps Z-diagonal states fixed: two Z reads of |0><0|
    # agree with certainty.
    dephasing = PauliChannel(1, eigenvalues=[1.0, 1.0, 0.0, 0.0])
    dist = run_scheme_exact(z_policy(initial=KET0), dephasing)
    assert dist[("r", "0", "0")] == pytest.approx(1.0, abs=1e-12)
    assert set(dist) == {("r", "0", "0")}
    # the depolarizing channel erases the first outcome: all four transcripts
    dist = run_scheme_exact(z_policy(initial=PLUS), completely_depolarizing(1))
    assert len(dist) == 4
    assert all(p == pytest.approx(0.25, abs=1e-12) for p in dist.values())


def test_exact_run_matches_kraus_oracle(rng):
    for n, depth in ((1, 2), (1, 3), (2, 2)):
        for _ in range(5):
            policy = random_policy(n, depth, rng)
            chan = random_channel(n, rng)
            fast = run_scheme_exact(policy, chan, prune=0.0)
            slow = oracles.run_policy_kraus(policy, chan.error_rates)
            assert set(fast) == set(slow)
            for history, prob in slow.items():
                assert fast[history] == pytest.approx(prob, abs=1e-11)
            assert sum(fast.values()) == pytest.approx(1.0, abs=1e-10)


def test_exact_run_checks_qubit_count(rng):
    with pytest.raises(ValueError):
        run_scheme_exact(z_policy(), random_channel(2, rng))


def test_sampled_run_tracks_exact_distribution(rng):
    policy = random_policy(1, 2, rng)
    chan = random_channel(1, rng)
    exact = run_scheme_exact(policy, chan)
    shots = 4000
    counts = run_scheme_sampled(policy, chan, shots, rng)
    assert sum(counts.values()) == shots
    for history, count in counts.items():
        p = exact.get(history, 0.0)
        sigma = np.sqrt(max(p * (1 - p), 1e-12) / shots)
        assert abs(count / shots - p) < 6 * sigma + 1e-3


# -- scalar recurrence ------------------------------------------------------------------


def test_pair_coefficients_of_projector_branch():
    coeffs = pauli_pair_coefficients((KET0,), a=1, n=1)
    assert coeffs == pytest.approx((0.5, 0.5, 0.5, 0.5))


def test_recurrence_step_matches_dense_branch():
    # |+> through Lambda_{Z,+} then the |0><0| branch: prob 1/2, mu jumps to 1
    coeffs = pauli_pair_coefficients((KET0,), a=1, n=1)
    prob, mu_next = mu_recurrence_step(0.0, 1, 0.3, coeffs)
    assert prob == pytest.approx(0.5)
    assert mu_next == pytest.approx(1.0)


def test_recurrence_step_random_branch_agrees_with_density_matrices(rng):
    a, eps0, sign = 2, 0.2, -1
    chan = make_hypothesis_channel(1, a=a, sign=sign, eps0=eps0)
    kraus = (random_unitary(2, rng) @ np.diag([1.0, 0.4]),)
    coeffs = pauli_pair_coefficients(kraus, a=a, n=1)
    pauli_a = np.array([[0, 1], [1, 0]], dtype=complex)  # a=2 is X
    for mu in (-0.8, 0.0, 0.64):
        rho = 0.5 * (np.eye(2) + mu * pauli_a)
        out = apply_kraus(kraus, apply_channel(chan, rho))
        prob_dense = float(np.trace(out).real)
        mu_dense = float(np.trace(pauli_a @ out).real) / prob_dense
        prob, mu_next = mu_recurrence_step(mu, sign, eps0, coeffs)
        assert prob == pytest.approx(prob_dense, abs=1e-12)
        assert mu_next == pytest.approx(mu_dense, abs=1e-12)


def test_recurrence_step_raises_on_dead_branch():
    with pytest.raises(ZeroProbabilityBranch):
        mu_recurrence_step(-1.0, 1, 1.0, (0.5, 0.5, 0.5, 0.5))


# -- separable schemes and the two compilers ------------------------------------------------


def test_random_separable_scheme_validates(rng):
    scheme = random_separable_scheme(1, 3, rng)
    validate_separable(scheme)
    dist = run_separable_exact(scheme, random_channel(1, rng))
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_validate_separable_rejects_incomplete_step(rng):
    scheme = random_separable_scheme(1, 2, rng)
    broken = scheme.__class__(
        n=scheme.n,
        ancilla_dim=scheme.ancilla_dim,
        initial=scheme.initial,
        steps=((scheme.steps[0][0],),),  # drop all but one branch
        povm=scheme.povm,
    )
    with pytest.raises(ValueError, match="not trace preserving"):
        validate_separable(broken)


def test_compile_separable_to_classical_memory(rng):
    for _ in range(3):
        scheme = random_separable_scheme(1, 3, rng)
        policy = compile_separable_to_cma(scheme)
        validate_policy(policy)
        chan = random_channel(1, rng)
        sep = run_separable_exact(scheme, chan, prune=0.0)
        cma = run_scheme_exact(policy, chan, prune=0.0)
        for history, prob in sep.items():
            assert cma.get(history, 0.0) == pytest.approx(prob, abs=1e-9)


def test_compile_classical_memory_to_separable(rng):
    for _ in range(3):
        policy = random_policy(1, 3, rng)
        scheme = compile_cma_to_separable(policy)
        validate_separable(scheme)
        chan = random_channel(1, rng)
        direct = run_scheme_exact(policy, chan, prune=0.0)
        lifted = run_separable_exact(scheme, chan, prune=1e-12)
        # separable histories are ((initial,), (h, o), ..., (h, label))
        total = 0.0
        for history, prob in lifted.items():
            flat = (history[0],) + tuple(step[1] for step in history[1:])
            assert direct.get(flat, 0.0) == pytest.approx(prob, abs=1e-9)
            total += prob
        assert total == pytest.approx(1.0, abs=1e-9)


def test_compiled_ancilla_never_pads(rng):
    policy = random_policy(1, 2, rng)
    scheme = compile_cma_to_separable(policy)
    dist = run_separable_exact(scheme, random_channel(1, rng), prune=1e-12)
    from paulilearn.schemes import PAD_LABEL

    assert not any(
        any(isinstance(part, tuple) and part[0] == PAD_LABEL for part in history)
        for history in dist
    )


# -- serialization ------------------------------------------------------------------------


def test_policy_file_round_trip(tmp_path, rng):
    policy = random_policy(1, 3, rng)
    path = tmp_path / "policy.json"
    save_policy(policy, path)
    loaded = load_policy(path)
    chan = random_channel(1, rng)
    original = run_scheme_exact(policy, chan)
    reloaded = run_scheme_exact(loaded, chan)
    assert set(original) == set(reloaded)
    for history, prob in original.items():
        assert reloaded[history] == prob  # float repr survives JSON exactly


def test_policy_rejects_comma_labels(tmp_path):
    povm = {"0": KET0, "1": KET1}
    policy = SchemePolicy(
        n=1, depth=1, initial=(("a,b", PLUS),), final_povms={("a,b",): povm}
    )
    with pytest.raises(ValueError, match="comma"):
        save_policy(policy, tmp_path / "bad.json")
