"""Command-line interface.

All data output is CSV on stdout (or ``--out PATH``) with a mandatory header
row, ``.``-decimal floats in shortest round-trip form, and LF line endings,
so runs are byte-for-byte reproducible for a fixed ``--seed``.  Errors are
reported as a single JSON object on stderr.

Exit codes: 0 success, 1 runtime error, 2 usage error, 3 a validity or
certification check failed.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys
from collections import Counter

import numpy as np

from . import bounds as bounds_mod
from .channel import (
    Partition,
    geometric_mean_fidelity,
    load_channel,
    load_partition,
    pauli_label,
    random_channel,
    save_channel,
    validate,
)
from .pauli import index_weight, nonidentity_indices
from .protocols import (
    af_estimate_all,
    bell_sample,
    commuting_cover,
    coarse_estimate,
    ea_estimate,
    ea_player,
    ea_sample_count,
    ignore_player,
    lecam_game,
    oracle_player,
    p_from_fidelity,
)
from .schemes import load_policy
from .tvd import HypothesisFamily, certify_inequality, random_policy

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 3


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle


def _write_rows(path, header, rows) -> None:
    with _output(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _bell_noise(args) -> float:
    if getattr(args, "bell_fidelity", None) is not None:
        return p_from_fidelity(args.bell_fidelity)
    if getattr(args, "p_depol", None) is not None:
        return args.p_depol
    return 0.0


# -- subcommands ---------------------------------------------------------------


def cmd_transform(args) -> int:
    channel = load_channel(args.input, strict=False)
    representation = args.to.replace("-", "_")
    if args.out in (None, "-"):
        values = getattr(channel, representation)
        payload = {
            "n": channel.n,
            "representation": representation,
            "values": [float(v) for v in values],
        }
        json.dump(payload, sys.stdout)
        sys.stdout.write("\n")
    else:
        save_channel(channel, args.out, representation=representation)
    return EXIT_OK


def cmd_validate(args) -> int:
    channel = load_channel(args.input, strict=False)
    report = validate(channel, tol=args.tol)
    rows = [
        ("n", report.n),
        ("valid", report.valid),
        ("trace_preserving", report.trace_preserving),
        ("completely_positive", report.completely_positive),
        ("eigenvalues_in_range", report.eigenvalues_in_range),
        ("lambda0", report.lambda0),
        ("error_rate_sum", report.error_rate_sum),
        ("min_error_rate", report.min_error_rate),
        ("max_abs_eigenvalue", report.max_abs_eigenvalue),
        ("failures", "; ".join(report.failures)),
    ]
    _write_rows(args.out, ("field", "value"), rows)
    return EXIT_OK if report.valid else EXIT_CHECK_FAILED


def cmd_bounds(args) -> int:
    query = bounds_mod.BoundQuery(
        family=args.family.replace("-", "_"),
        n=args.n,
        eps=args.eps,
        delta=args.delta,
        C=args.block_size,
        f_bell=args.f_bell,
        mode=args.mode,
    )
    value = bounds_mod.evaluate_bound(query)
    _write_rows(
        args.out,
        ("family", "n", "eps", "delta", "C", "f_bell", "mode", "value"),
        [(args.family, args.n, args.eps, args.delta, args.block_size, args.f_bell, args.mode, float(value))],
    )
    return EXIT_OK


def _curve_rows(n_max: int, eps: float, delta: float, f_bell: float):
    rows = []
    for n in range(1, n_max + 1):
        try:
            ea = float(bounds_mod.ea_upper_bound(n, eps, delta, f_bell))
        except OverflowError:
            ea = math.inf
        rows.append(
            (
                n,
                bounds_mod.ef_lower_bound(n, eps, "exact"),
                bounds_mod.ef_lower_bound(n, eps, "plotted"),
                bounds_mod.af_previous_lower_bound(n),
                ea,
            )
        )
    return rows


_CURVE_HEADER = ("n", "ef_exact", "ef_plotted", "af_previous", "ea_upper")


def _plot_curves(path, rows, vlines=()) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [row[0] for row in rows]
    fig, ax = plt.subplots(figsize=(7, 5))
    for column, label, style in (
        (1, "ancilla-free lower (exact const)", "-"),
        (2, "ancilla-free lower (plotted const)", "--"),
        (3, "previous ancilla-free lower", ":"),
        (4, "assisted upper", "-."),
    ):
        values = [row[column] for row in rows]
        ax.plot(ns, values, style, label=label)
    for x in vlines:
        ax.axvline(x, color="gray", linewidth=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("qubits n")
    ax.set_ylabel("channel uses")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cmd_curve(args) -> int:
    rows = _curve_rows(args.n_max, args.eps, args.delta, args.f_bell)
    _write_rows(args.out, _CURVE_HEADER, rows)
    if args.plot:
        _plot_curves(args.plot, rows)
    return EXIT_OK


def cmd_crossover(args) -> int:
    variants = ("previous", "improved") if args.variant == "both" else (args.variant,)
    if args.at_n is not None:
        rows = []
        for variant in variants:
            if variant == "previous":
                lower = bounds_mod.af_previous_lower_bound(args.at_n)
            else:
                lower = bounds_mod.ef_lower_bound(args.at_n, args.eps, "plotted")
            upper = float(bounds_mod.ea_upper_bound(args.at_n, args.eps, args.delta, args.f_bell))
            rows.append(
                (variant, args.f_bell, args.eps, args.delta, args.at_n, lower, upper, lower / upper)
            )
        _write_rows(
            args.out,
            ("variant", "f_bell", "eps", "delta", "n", "lower", "upper", "ratio"),
            rows,
        )
        if args.plot:
            span = min(max(40, 2 * args.at_n), bounds_mod.CROSSOVER_SCAN_LIMIT)
            _plot_curves(
                args.plot,
                _curve_rows(span, args.eps, args.delta, args.f_bell),
                vlines=(args.at_n,),
            )
        return EXIT_OK
    results = [
        bounds_mod.crossover(args.f_bell, args.eps, args.delta, variant)
        for variant in variants
    ]
    rows = [
        (
            r.variant,
            r.f_bell,
            r.eps,
            r.delta,
            "" if r.n_cross is None else r.n_cross,
            r.lower_rate,
            r.upper_rate,
            "" if r.lower_at_cross is None else r.lower_at_cross,
            "" if r.upper_at_cross is None else r.upper_at_cross,
            r.reason,
        )
        for r in results
    ]
    _write_rows(
        args.out,
        (
            "variant",
            "f_bell",
            "eps",
            "delta",
            "n_cross",
            "lower_rate",
            "upper_rate",
            "lower_at_cross",
            "upper_at_cross",
            "reason",
        ),
        rows,
    )
    if args.plot:
        crossings = [r.n_cross for r in results if r.n_cross is not None]
        span = max([40] + [2 * x for x in crossings])
        span = min(span, bounds_mod.CROSSOVER_SCAN_LIMIT)
        _plot_curves(args.plot, _curve_rows(span, args.eps, args.delta, args.f_bell), vlines=crossings)
    return EXIT_OK


def _simulate_channel(args):
    if args.channel:
        return load_channel(args.channel)
    return random_channel(args.n, _rng(args.seed, 0))


def cmd_simulate(args) -> int:
    channel = _simulate_channel(args)
    n = channel.n
    p = _bell_noise(args)
    rows = []
    if args.protocol == "ea":
        for i, b in enumerate(range(4**n)):
            shots = args.shots or ea_sample_count(args.eps, args.delta, index_weight(b, n), p)
            samples = bell_sample(channel, p, shots, _rng(args.seed, i + 1))
            estimate = ea_estimate(samples, b, p, n)
            truth = float(channel.eigenvalues[b])
            rows.append(("ea", n, pauli_label(b, n), shots, estimate, truth, estimate - truth, args.seed))
    elif args.protocol == "af":
        cover = commuting_cover(n, args.cover, _rng(args.seed, 0))
        result = af_estimate_all(channel, args.eps, args.delta, cover, _rng(args.seed, 1))
        membership = Counter(m for group in cover for m in group)
        for b in nonidentity_indices(n):
            estimate = float(result.estimates[b])
            truth = float(channel.eigenvalues[b])
            shots = result.shots_per_group * membership[b]
            rows.append(("af", n, pauli_label(b, n), shots, estimate, truth, estimate - truth, args.seed))
    else:  # coarse
        partition = load_partition(args.partition) if args.partition else Partition.adjacent_pairs(n)
        if partition.n != n:
            raise ValueError(f"partition is for n={partition.n}, channel has n={n}")
        shots_per_group = args.shots or math.ceil(2.0 * args.eps**-2 * math.log(2.0 / args.delta))
        cover = commuting_cover(n, args.cover, _rng(args.seed, 0))
        estimates = coarse_estimate(channel, partition, shots_per_group, _rng(args.seed, 1), cover)
        for i, block in enumerate(partition.blocks):
            target = "|".join(pauli_label(b, n) for b in block)
            estimate = float(estimates[i])
            truth = geometric_mean_fidelity(channel, block)
            shots = shots_per_group * len(cover)
            rows.append(("coarse", n, target, shots, estimate, truth, estimate - truth, args.seed))
    _write_rows(
        args.out,
        ("protocol", "n", "target", "shots", "estimate", "truth", "error", "seed"),
        rows,
    )
    return EXIT_OK


def cmd_game(args) -> int:
    p = _bell_noise(args)
    shots = args.shots or ea_sample_count(args.eps0 / 2.0, 1 / 3, args.n, p)
    if args.player == "ea":
        player = ea_player(shots, p)
    elif args.player == "ignore":
        player = ignore_player()
    else:
        player = oracle_player()
    result = lecam_game(args.n, args.eps0, player, args.trials, _rng(args.seed, 0))
    rows = []
    for (a, sign), (wins, trials) in sorted(result.breakdown.items()):
        rows.append((pauli_label(a, args.n), sign, wins, trials, wins / trials))
    rows.append(("all", 0, result.wins, result.trials, result.success_rate))
    _write_rows(args.out, ("target", "sign", "wins", "trials", "success_rate"), rows)
    return EXIT_OK


def cmd_tvd_check(args) -> int:
    partition = None
    if args.kind == "coarse":
        partition = load_partition(args.partition) if args.partition else Partition.adjacent_pairs(args.n)
    family = HypothesisFamily(n=args.n, eps0=args.eps0, kind=args.kind, partition=partition)
    if args.policies.startswith("random:"):
        count = int(args.policies.split(":", 1)[1])
        policies = [
            (f"random-{i}", random_policy(args.n, args.depth, _rng(args.seed, i)))
            for i in range(count)
        ]
    else:
        policies = [(args.policies, load_policy(args.policies))]
    rows = []
    all_hold = True
    for name, policy in policies:
        report = certify_inequality(policy, family)
        all_hold &= report.holds
        rows.append(
            (
                name,
                report.n,
                report.kind,
                report.eps0,
                report.n_meas,
                report.lhs,
                report.rhs,
                report.slack,
                report.holds,
            )
        )
    _write_rows(
        args.out,
        ("policy", "n", "kind", "eps0", "n_meas", "lhs", "rhs", "slack", "holds"),
        rows,
    )
    return EXIT_OK if all_hold else EXIT_CHECK_FAILED


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paulilearn",
        description="Pauli-channel eigenvalue estimation: transforms, bounds, protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", default=None, help="output path (default: stdout)")

    p = sub.add_parser("transform", help="convert a channel file between representations")
    p.add_argument("--in", dest="input", required=True, help="channel JSON file")
    p.add_argument("--to", choices=("eigenvalues", "error-rates"), required=True)
    add_out(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("validate", help="check a channel file for CPTP validity")
    p.add_argument("--in", dest="input", required=True, help="channel JSON file")
    p.add_argument("--tol", type=float, default=1e-9)
    add_out(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bounds", help="evaluate one sample-complexity bound")
    p.add_argument("--family", choices=("ef", "coarse", "af-previous", "ea-upper"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=1 / 3)
    p.add_argument("--block-size", type=int, default=1, metavar="C")
    p.add_argument("--f-bell", type=float, default=1.0)
    p.add_argument("--mode", choices=("exact", "simplified", "plotted"), default="exact")
    add_out(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("curve", help="tabulate bound curves over n (optionally plot)")
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=1 / 3)
    p.add_argument("--f-bell", type=float, default=1.0)
    p.add_argument("--plot", default=None, help="also render the curves to this image file")
    add_out(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("crossover", help="find where the lower bounds overtake the assisted upper bound")
    p.add_argument("--f-bell", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=1 / 3)
    p.add_argument("--variant", choices=("previous", "improved", "both"), default="both")
    p.add_argument(
        "--at-n",
        dest="at_n",
        type=int,
        default=None,
        metavar="N",
        help="skip the scan and report lower/upper/ratio at this fixed n",
    )
    p.add_argument("--plot", default=None, help="also render the curves to this image file")
    add_out(p)
    p.set_defaults(func=cmd_crossover)

    p = sub.add_parser("simulate", help="run an estimation protocol on a channel")
    p.add_argument("--protocol", choices=("ea", "af", "coarse"), required=True)
    p.add_argument("--n", type=int, default=2, help="qubits for the random channel")
    p.add_argument("--channel", default=None, help="channel JSON file (default: seeded random)")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=1 / 3)
    p.add_argument("--shots", type=int, default=None, help="override the per-target/group shot count")
    p.add_argument("--cover", choices=("greedy", "product"), default="greedy")
    p.add_argument("--partition", default=None, help="partition JSON file (coarse protocol)")
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--p-depol", type=float, default=None)
    noise.add_argument("--bell-fidelity", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("game", help="play the two-point distinguishing game")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--eps0", type=float, default=0.3)
    p.add_argument("--player", choices=("ea", "ignore", "oracle"), default="ea")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--shots", type=int, default=None)
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--p-depol", type=float, default=None)
    noise.add_argument("--bell-fidelity", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("tvd-check", help="certify the transcript-distinguishability budget")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--eps0", type=float, default=0.1)
    p.add_argument("--kind", choices=("pointwise", "coarse"), default="pointwise")
    p.add_argument("--partition", default=None, help="partition JSON file (coarse kind)")
    p.add_argument("--policies", default="random:10", help="'random:COUNT' or a policy JSON file")
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=cmd_tvd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
