"""Learning Pauli channels with and without entangled memory: canonical Pauli
encodings, the eigenvalue/error-rate transform, sample-complexity bounds,
adaptive measurement schemes, and concrete estimation protocols."""

from .pauli import (
    PauliString,
    index_weight,
    nonidentity_indices,
    pauli_matrices,
    symplectic_parity,
    weight_table,
)
from .channel import (
    ChannelFormatError,
    InvalidChannelError,
    Partition,
    PauliChannel,
    ValidityReport,
    completely_depolarizing,
    eigenvalues_from_error_rates,
    error_rates_from_eigenvalues,
    geometric_mean_fidelity,
    load_channel,
    load_partition,
    make_coarse_hypothesis_channel,
    make_hypothesis_channel,
    pauli_label,
    random_channel,
    save_channel,
    save_partition,
    validate,
)
from .bounds import (
    BoundQuery,
    CrossoverResult,
    af_previous_lower_bound,
    coarse_lower_bound,
    crossover,
    ea_growth_rate,
    ea_upper_bound,
    ef_lower_bound,
    evaluate_bound,
    f_of,
)
from .schemes import (
    Instrument,
    SchemePolicy,
    SeparableScheme,
    ZeroProbabilityBranch,
    apply_channel,
    compile_cma_to_separable,
    compile_separable_to_cma,
    count_measurements,
    load_policy,
    mu_recurrence_step,
    pauli_pair_coefficients,
    random_separable_scheme,
    run_scheme_exact,
    run_scheme_sampled,
    run_separable_exact,
    save_policy,
    validate_policy,
    validate_separable,
)
from .protocols import (
    AFLearningResult,
    GameResult,
    NoiseModel,
    af_estimate_all,
    af_estimate_eigenvalue,
    af_group_estimates,
    bell_outcome_distribution_exact,
    bell_sample,
    clipped_geometric_mean,
    coarse_estimate,
    commuting_cover,
    ea_estimate,
    ea_player,
    ea_sample_count,
    enumerate_commuting_groups,
    fidelity_from_p,
    ignore_player,
    lecam_game,
    oracle_player,
    p_from_fidelity,
    validate_cover,
)
from .tvd import (
    CertificationReport,
    HypothesisFamily,
    SecondMomentReport,
    avg_tvd,
    certify_inequality,
    mu_trajectory_check,
    random_policy,
    second_moment_check,
    tvd_budget,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
