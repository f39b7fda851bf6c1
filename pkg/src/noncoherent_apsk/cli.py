"""Command-line front end.

Subcommands
-----------
design        design the amplitude set of one allocation (or the best
              allocation for ``--lv``) and write a codebook file
search-alloc  rank the bit allocations of ``--lv`` bits over ``--K`` symbols
analyze       report distances, the MCD bound and the Chernoff PEP of a codebook
simulate      run a seeded Monte Carlo sweep and write a CSV results file

Exit status is 0 on success, 2 for invalid arguments or unreadable input
files, and 3 when a design or simulation fails.  Output files are written
atomically, so a failing command never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

from .constellation import MAX_ENUMERATED_POINTS, BitAllocation, closest_pair, pep_chernoff_bound
from .design import DesignConfig, design_amplitude_set, search_bit_allocations
from .distance import decomposed_terms, mcd_upper_bound, pilot_psk_mcd
from .errors import DesignFailureError, InvalidInputError, SimulationError
from .io import read_codebook, write_codebook, write_results
from .simulation import DETECTORS, SimConfig, run_sweep, snr_db_to_sigma2

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILURE = 3

#: Largest constellation for which ``analyze`` also runs the pairwise enumeration.
ANALYZE_BRUTEFORCE_POINTS = 2**14


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would print usage and exit(2) itself
        raise _UsageError(message)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _design_config(args) -> DesignConfig:
    return DesignConfig(
        epsilon_v=args.epsilon_v,
        sca_tol=args.sca_tol,
        sca_max_iters=args.sca_max_iters,
        restarts=args.restarts,
        seed=args.seed,
    )


def _add_design_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=_positive_int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sca-max-iters", type=_positive_int, default=100)
    p.add_argument("--sca-tol", type=float, default=1e-6)
    p.add_argument("--epsilon-v", type=float, default=1e-4)
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker threads; results do not depend on this")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noncoherent-apsk", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="design a codebook")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lv", type=int, help="total bits; the best allocation is searched")
    p.add_argument("--lu", type=int, help="amplitude bits (with --lphi)")
    p.add_argument("--lphi", type=_int_list, help="comma-separated phase bits per symbol")
    p.add_argument("--out", required=True)
    _add_design_options(p)

    p = sub.add_parser("search-alloc", help="rank bit allocations")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--lv", type=int, required=True)
    _add_design_options(p)

    p = sub.add_parser("analyze", help="distance report of a codebook")
    p.add_argument("--codebook", required=True)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--antennas", type=_positive_int, default=1)

    p = sub.add_parser("simulate", help="Monte Carlo BLER/BER sweep")
    p.add_argument("--codebook", required=True)
    p.add_argument("--detector", choices=DETECTORS, default="iuap-improved-pr")
    p.add_argument("--snr-start", type=float, required=True)
    p.add_argument("--snr-stop", type=float, required=True)
    p.add_argument("--snr-step", type=float, default=1.0)
    p.add_argument("--antennas", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-errors", type=_positive_int, default=200)
    p.add_argument("--max-trials", type=_positive_int, default=10**7)
    p.add_argument("--iuap-max-iters", type=_positive_int, default=10)
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker threads; results do not depend on this")
    p.add_argument("--out", required=True)
    return parser


def _snr_grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise InvalidInputError("--snr-step must be positive")
    if stop < start:
        raise InvalidInputError("--snr-stop must not be below --snr-start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def _fmt_alloc(alloc: BitAllocation) -> str:
    return f"lu={alloc.l_u} lphi={','.join(map(str, alloc.l_phi))}"


def cmd_design(args) -> int:
    cfg = _design_config(args)
    if args.lphi is not None:
        if args.lv is not None:
            raise InvalidInputError("give either --lv or --lu/--lphi, not both")
        alloc = BitAllocation(args.K, args.lu or 0, args.lphi)
        codebook = design_amplitude_set(alloc, cfg, workers=args.threads)
    elif args.lv is not None:
        entries = search_bit_allocations(args.K, args.lv, cfg, workers=args.threads)
        codebook = entries[0].codebook
    else:
        raise InvalidInputError("either --lv or --lphi is required")
    write_codebook(args.out, codebook)
    print(f"allocation: {_fmt_alloc(codebook.alloc)}")
    print(f"achieved_mcd: {codebook.achieved_mcd:.6f}")
    print(f"mcd_upper_bound: {mcd_upper_bound(codebook.alloc):.6f}")
    print(f"written: {args.out}")
    return EXIT_OK


def cmd_search_alloc(args) -> int:
    entries = search_bit_allocations(args.K, args.lv, _design_config(args), workers=args.threads)
    print(f"{'rank':>4}  {'lu':>2}  {'lphi':<16} {'achieved_mcd':>12}  {'upper_bound':>11}")
    for rank, entry in enumerate(entries, start=1):
        lphi = ",".join(map(str, entry.alloc.l_phi))
        print(f"{rank:>4}  {entry.alloc.l_u:>2}  {lphi:<16} {entry.codebook.achieved_mcd:>12.6f}  {entry.bound:>11.6f}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    codebook = read_codebook(args.codebook)
    alloc = codebook.alloc
    terms = decomposed_terms(codebook)
    print(f"allocation: K={alloc.K} {_fmt_alloc(alloc)} (l_v={alloc.total_bits})")
    print(f"mcd_decomposed: {terms.mcd:.6f}")
    if math.isfinite(terms.amplitude_distance):
        print(f"  amplitude_pairs_min: {terms.amplitude_distance:.6f} (rows {terms.amplitude_pair[0]}, {terms.amplitude_pair[1]})")
    if math.isfinite(terms.phase_distance):
        print(f"  same_row_phase_min: {terms.phase_distance:.6f} (row {terms.phase_row})")
    if alloc.n_points <= ANALYZE_BRUTEFORCE_POINTS:
        i, j, d = closest_pair(codebook, MAX_ENUMERATED_POINTS)
        print(f"mcd_bruteforce: {d:.6f} (points {i}, {j})")
    else:
        print(f"mcd_bruteforce: skipped ({alloc.n_points} points)")
    print(f"mcd_upper_bound: {mcd_upper_bound(alloc):.6f}")
    if alloc.phase_symbols:
        print(f"pilot_psk_mcd: {pilot_psk_mcd(alloc):.6f}")
    sigma2 = snr_db_to_sigma2(args.snr_db)
    pep = pep_chernoff_bound(min(1.0, terms.mcd), sigma2, args.antennas)
    print(f"chernoff_pep_at_mcd: {pep:.6e} (snr_db={args.snr_db:g}, antennas={args.antennas})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    codebook = read_codebook(args.codebook)
    cfg = SimConfig(
        M=args.antennas,
        snr_grid_db=_snr_grid(args.snr_start, args.snr_stop, args.snr_step),
        detector=args.detector,
        min_block_errors=args.min_errors,
        max_trials_per_point=args.max_trials,
        seed=args.seed,
        iuap_max_iters=args.iuap_max_iters,
    )
    result = run_sweep(codebook, cfg, workers=args.threads)
    write_results(args.out, result.points)
    for p in result.points:
        print(f"snr_db={p.snr_db:g} trials={p.trials} block_errors={p.block_errors} "
              f"bler={p.bler:.4e} ber={p.ber:.4e}")
    print(f"written: {args.out}")
    return EXIT_OK


_COMMANDS = {
    "design": cmd_design,
    "search-alloc": cmd_search_alloc,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if getattr(args, "seed", 0) < 0:
            raise InvalidInputError("--seed must be non-negative")
        return _COMMANDS[args.command](args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DesignFailureError, SimulationError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
