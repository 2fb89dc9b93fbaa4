#!/usr/bin/env python3
"""
Command-line entry point.

Reports go to stdout (and to --report PATH with a .meta.json sidecar); logging goes
to stderr and the log file.
"""

import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Tuple

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.settings import settings
from src import __version__
from src.criterion import CriterionConfig, run_criterion
from src.curves import count_range, good_primes, is_cm_shape
from src.errors import (
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_RESOURCE_CAP,
    EXIT_USAGE,
    EXIT_WITNESS,
    IsogenyRadicalError,
)
from src.file_handler import FileHandler
from src.galois_sim import (
    JointImageModel,
    ModelKind,
    check_det_coincidence,
    goursat_degrees,
    joint_image_order,
    obstruction_pair_check,
    projected_kernel_audit,
    step3_congruence_experiment,
)
from src.models import RunManifest
from src.modmath import primes_in_range
from src.symplectic import (
    GroupSpec,
    cardinal_separation_scan,
    enumerate_sp,
    gsp_order,
    normal_subgroup_audit,
    random_gsp_element,
    scalar_sp_index,
    simplicity_lemma_excluded,
    sp_order,
    sylow_exponent,
)
from src.tame_inertia import threshold_table, unramified_threshold_check
from src.utils import (
    format_fraction,
    format_matrix,
    format_rate,
    log_performance_metrics,
    parse_lambda_set,
    setup_logging,
)

def _flag(value: bool) -> str:
    return 'true' if value else 'false'


def _enumerable(spec: GroupSpec) -> bool:
    try:
        return sp_order(spec) <= settings.ENUMERATION_CAP
    except OverflowError:
        return False


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', '-v', action='store_true',
                        help='Enable verbose logging')
    common.add_argument('--report', type=Path, metavar='PATH',
                        help='Also write the report to PATH (with a PATH.meta.json sidecar)')
    common.add_argument('--with-timing', action='store_true',
                        help='Add a timing line to the report manifest')
    common.add_argument('--jobs', type=int, default=settings.DEFAULT_JOBS,
                        help='Worker processes for point counting')
    common.add_argument('--seed', type=int, default=settings.DEFAULT_SEED,
                        help='Seed for every sampled quantity')

    parser = argparse.ArgumentParser(
        prog='isogeny-radical',
        description='Point-count divisibility criterion for isogeny, with the group-theoretic checks behind it',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python src/main.py count curves.txt --pmax 1000
  python src/main.py criterion curves.txt --labels E1 E2 --pmax 10000 --lambda 3,5,7,11,13
  python src/main.py simulate --model twist --g 1 --ell 5 --exhaustive
  python src/main.py group-audit --g 2 --ell 3
  python src/main.py raynaud-bound --g 1 --ellmax 100
        """
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest='command', required=True)

    count = commands.add_parser('count', parents=[common], help='Count points and extend the cache')
    count.add_argument('curve_file', type=Path)
    count.add_argument('--pmax', type=int, default=settings.DEFAULT_P_MAX)
    count.add_argument('--cache', type=Path, default=None,
                       help='Count cache file (default: $ISOGENY_RADICAL_CACHE_DIR/counts.txt)')

    criterion = commands.add_parser('criterion', parents=[common], help='Scan for divisibility witnesses')
    criterion.add_argument('curve_file', type=Path)
    criterion.add_argument('--labels', nargs=2, metavar=('A', 'B'), required=True)
    criterion.add_argument('--pmax', type=int, default=settings.DEFAULT_P_MAX)
    criterion.add_argument('--lambda', dest='lambda_set', default=settings.DEFAULT_LAMBDA,
                           help='Comma-separated odd primes')
    criterion.add_argument('--max-witnesses', type=int, default=20)

    simulate = commands.add_parser('simulate', parents=[common], help='Joint-image experiments')
    simulate.add_argument('--model', choices=[kind.value for kind in ModelKind], required=True)
    simulate.add_argument('--g', type=int, default=1)
    simulate.add_argument('--ell', type=int, default=5)
    mode = simulate.add_mutually_exclusive_group()
    mode.add_argument('--trials', type=int)
    mode.add_argument('--exhaustive', action='store_true')
    simulate.add_argument('--word-length', type=int, default=settings.WORD_LENGTH)
    simulate.add_argument('--conjugate', action='store_true',
                          help='Use a seeded random conjugating element u instead of I')
    simulate.add_argument('--c', type=int, default=None, help='Bound on kernel orders')

    audit = commands.add_parser('group-audit', parents=[common], help='Orders and normal subgroups of Sp')
    audit.add_argument('--g', type=int, required=True)
    audit.add_argument('--ell', type=int, required=True)

    raynaud = commands.add_parser('raynaud-bound', parents=[common], help='Tame-inertia invariant bounds')
    raynaud.add_argument('--g', type=int, required=True)
    raynaud.add_argument('--ellmax', type=int, required=True)

    return parser


def run_count(args, logger, handler: FileHandler) -> Tuple[List[str], int]:
    """Count points at every good p <= pmax and append missing records to the cache"""
    curves = handler.read_curves(args.curve_file)
    state = handler.load_cache()
    handler.touch_cache()
    lines = []
    total_appended = 0
    for curve in curves.values():
        handler.check_guard(state, curve)
        if is_cm_shape(curve):
            logger.warning(f"{curve.label} has a CM shape (a2 = 0 with a4 = 0 or a6 = 0); "
                           f"the criterion's converse direction does not apply")
        primes = good_primes(curve, args.pmax)
        cached = state.counts.get(curve.label, {})
        missing = [p for p in primes if p.value not in cached]
        records = count_range(curve, missing, args.jobs)
        appended = handler.append_counts(curve, records, state)
        total_appended += appended
        bad = [p.value for p in primes_in_range(5, args.pmax) if curve.discriminant % p.value == 0] if args.pmax >= 5 else []
        lines.append(
            f"COUNT label={curve.label} records={len(primes)} new={appended} "
            f"bad={','.join(str(p) for p in bad) or 'none'}"
        )
    lines.append(f"TOTAL curves={len(curves)} appended={total_appended}")
    return lines, EXIT_OK


def run_criterion_command(args, logger, handler: FileHandler) -> Tuple[List[str], int]:
    curves = handler.read_curves(args.curve_file)
    first, second = handler.select_curves(curves, args.labels)
    cfg = CriterionConfig(args.pmax, tuple(parse_lambda_set(args.lambda_set)))
    for curve in (first, second):
        if is_cm_shape(curve):
            logger.warning(f"{curve.label} has a CM shape; a consistent outcome says even less")

    verdict = run_criterion(first, second, cfg, jobs=args.jobs)

    lines = [f"HEADER first={first.label} second={second.label} {cfg.describe()}"]
    lines.extend(w.report_line() for w in verdict.witnesses()[:max(0, args.max_witnesses)])
    for ell, row in verdict.summary.iterrows():
        lines.append(
            f"SUMMARY ell={ell} both={row['both']} neither={row['neither']} "
            f"first_only={row['first_only']} second_only={row['second_only']}"
        )
    lines.append(f"SKIPPED {','.join(str(p) for p in verdict.skipped) or 'none'}")
    if not verdict.is_witness:
        lines.append("# consistent up to the scanned bounds; this is not a proof of isogeny")
    lines.append(verdict.verdict_line())
    return lines, EXIT_WITNESS if verdict.is_witness else EXIT_OK


def run_simulate(args, logger) -> Tuple[List[str], int]:
    spec = GroupSpec(args.g, args.ell)
    kind = ModelKind(args.model)
    u = random_gsp_element(spec, 1, args.seed, args.word_length) if args.conjugate else None
    if kind is ModelKind.GRAPH:
        model = JointImageModel.graph(spec, u, c=args.c)
    elif kind is ModelKind.TWIST:
        model = JointImageModel.twist(spec, u, c=args.c)
    else:
        if args.conjugate:
            raise ValueError("--conjugate applies to the graph and twist models only")
        model = JointImageModel.product(spec, c=args.c)

    exhaustive = True if args.exhaustive else (False if args.trials is not None else None)
    report = check_det_coincidence(model, exhaustive=exhaustive, trials=args.trials,
                                   seed=args.seed, word_length=args.word_length)
    mode = 'exhaustive' if report.exhaustive else f"trials={report.total_pairs}"
    lines = [
        f"MODEL kind={kind.value} g={spec.g} ell={spec.p} mode={mode}"
        + (f" u={format_matrix(model.u.entries)}" if model.u is not None else ''),
        f"COINCIDENCE rate={format_rate(float(report.rate))} violating={report.violating_pairs} "
        f"total={report.total_pairs} fraction={format_fraction(report.violating_fraction)}",
    ]
    if report.counterexample is None:
        lines.append("COUNTEREXAMPLE none")
    else:
        sample = report.counterexample
        lines.append(
            f"COUNTEREXAMPLE x={format_matrix(sample.x.entries)} y={format_matrix(sample.y.entries)} "
            f"lambda={sample.lam} epsilon={sample.epsilon:+d}"
        )
    obstruction = obstruction_pair_check(model)
    lines.append(f"OBSTRUCTION pair=(-I,I) member={_flag(obstruction.member)} violates={_flag(obstruction.violates)}")

    if _enumerable(spec):
        kernel = projected_kernel_audit(model)
        goursat = goursat_degrees(model)
        lines.append(
            f"KERNEL order={kernel.order} contains_minus_identity={_flag(kernel.contains_minus_identity)} "
            f"is_sp_subgroup={_flag(kernel.is_sp_subgroup)}"
        )
        goursat_line = (f"GOURSAT ker_pi1={goursat.ker_pi1_order} ker_pi2={goursat.ker_pi2_order} "
                        f"dichotomy={goursat.dichotomy.value}")
        if goursat.within_c is not None:
            goursat_line += f" within_c={_flag(goursat.within_c)}"
        lines.append(goursat_line)
    else:
        lines.append("KERNEL skipped reason=cap")
        lines.append("GOURSAT skipped reason=cap")
    try:
        lines.append(f"IMAGE order={joint_image_order(model)}")
    except OverflowError:
        lines.append("IMAGE order=overflow")
    if kind is ModelKind.TWIST:
        lines.append(f"CONGRUENCE value={pow(2, 2 * spec.g, spec.p)} holds={_flag(step3_congruence_experiment(model, spec.g, spec.p))}")
    return lines, EXIT_OK


def run_group_audit(args, logger) -> Tuple[List[str], int]:
    spec = GroupSpec(args.g, args.ell)
    order = sp_order(spec)
    exponent = sylow_exponent(spec)
    lines = [
        f"GROUP g={spec.g} ell={spec.p} sp_order={order} gsp_order={gsp_order(spec)}",
        f"SYLOW exponent={exponent} expected={spec.g * spec.g} ok={_flag(exponent == spec.g * spec.g)}",
        f"SCALAR_INDEX index={scalar_sp_index(spec)}",
        f"SEPARATION g_max={spec.g + 1} ok={_flag(cardinal_separation_scan(spec.g + 1, [spec.p]))}",
    ]
    orders = normal_subgroup_audit(enumerate_sp(spec))
    extra = [o for o in orders if o not in (1, 2, order)]
    lines.append(f"NORMAL orders={','.join(str(o) for o in orders)}")
    lines.append(f"EXTRA {','.join(str(o) for o in extra) or 'none'}")
    excluded = simplicity_lemma_excluded(spec.g, spec.p)
    lines.append(f"CASE {'excluded' if excluded else 'included'}")
    if not excluded and extra:
        logger.error(f"{spec}: unexpected normal subgroups of orders {extra}")
        return lines, EXIT_FAILURE
    return lines, EXIT_OK


def run_raynaud(args, logger) -> Tuple[List[str], int]:
    lines = [f"HEADER g={args.g} ell_max={args.ellmax}"]
    for row in threshold_table(args.g, args.ellmax):
        lines.append(
            f"ROW ell={row.ell} max={row.max_value} bound={format_fraction(row.bound)} "
            f"max_diff={format_fraction(row.max_difference)} status={row.status}"
        )
    passed = unramified_threshold_check(args.g, args.ellmax)
    lines.append(f"RESULT {'pass' if passed else 'fail'}")
    return lines, EXIT_OK if passed else EXIT_FAILURE


def _manifest_config(args) -> dict:
    skip = {'command', 'verbose', 'report', 'with_timing', 'seed'}
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None or value is False:
            continue
        if isinstance(value, (list, tuple)):
            value = ','.join(str(v) for v in value)
        config[key] = value
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command, emit its report; returns the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    # Setup
    settings.ensure_directories()
    setup_logging('DEBUG' if args.verbose else None)
    logger = logging.getLogger(__name__)

    start_time = datetime.now()
    try:
        if args.command == 'count':
            lines, code = run_count(args, logger, FileHandler(args.cache))
        elif args.command == 'criterion':
            lines, code = run_criterion_command(args, logger, FileHandler())
        elif args.command == 'simulate':
            lines, code = run_simulate(args, logger)
        elif args.command == 'group-audit':
            lines, code = run_group_audit(args, logger)
        else:
            lines, code = run_raynaud(args, logger)

    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        print("\nOperation cancelled", file=sys.stderr)
        return 130
    except IsogenyRadicalError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except OverflowError as e:
        logger.error(f"Overflow: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RESOURCE_CAP
    except ValueError as e:
        logger.error(f"Invalid arguments: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        print(f"\nError: {str(e)}", file=sys.stderr)
        print("Check the logs for more details.", file=sys.stderr)
        return EXIT_FAILURE

    end_time = datetime.now()
    duration = log_performance_metrics(args.command, start_time, end_time, {'exit_code': code})
    manifest = RunManifest(args.command, args.seed, __version__, _manifest_config(args), duration)
    text = '\n'.join(manifest.lines(args.with_timing) + lines) + '\n'
    sys.stdout.write(text)
    if args.report:
        FileHandler().save_report(text, args.report, manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
