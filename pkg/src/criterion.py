"""
Divisibility scan over places p and test primes ell.

For every p <= p_max of good reduction for both curves and every ell in the lambda set,
record whether ell divides #E1(F_p) and #E2(F_p). A cell where exactly one count is
divisible is a witness against isogeny; if none exists, the pair is consistent up to the
scanned bounds, which proves nothing about isogeny.
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.curves import count_points, count_range, ell_torsion_rank, quadratic_twist, reduce
from src.errors import EmptyScan, InvariantViolation
from src.models import CountRecord, CurveOverQ, WitnessRecord
from src.modmath import PrimeModulus, as_modulus, legendre_symbol, primes_in_range
from src.utils import ProgressTracker, format_lambda_set, log_performance_metrics

logger = logging.getLogger(__name__)

STATES = ('both', 'neither', 'first_only', 'second_only')


@dataclass(frozen=True)
class CriterionConfig:
    p_max: int
    lambda_set: Tuple[PrimeModulus, ...]
    excluded_places: FrozenSet[int] = frozenset()

    def __post_init__(self):
        primes = sorted({as_modulus(ell).value for ell in self.lambda_set})
        if not primes:
            raise ValueError("lambda_set must not be empty")
        if primes[0] < 3:
            raise ValueError("every ell in lambda_set must be an odd prime")
        if self.p_max < 5:
            raise ValueError(f"p_max must be at least 5, got {self.p_max}")
        object.__setattr__(self, 'lambda_set', tuple(as_modulus(ell) for ell in primes))
        object.__setattr__(self, 'excluded_places', frozenset(int(p) for p in self.excluded_places))

    @property
    def ells(self) -> List[int]:
        return [ell.value for ell in self.lambda_set]

    def describe(self) -> str:
        return f"p_max={self.p_max} lambda={format_lambda_set(self.ells)}"


@dataclass
class Verdict:
    config: CriterionConfig
    witness: Optional[WitnessRecord]
    summary: pd.DataFrame
    matrix: pd.DataFrame = field(repr=False)
    skipped: List[int] = field(default_factory=list)

    @property
    def is_witness(self) -> bool:
        return self.witness is not None

    @property
    def outcome(self) -> str:
        return 'witness' if self.is_witness else 'consistent'

    @property
    def scanned_places(self) -> int:
        return int(self.matrix['p'].nunique()) if len(self.matrix) else 0

    def witnesses(self) -> List[WitnessRecord]:
        """Every xor cell, in scan order"""
        cells = self.matrix[self.matrix['state'].isin(('first_only', 'second_only'))]
        return [
            WitnessRecord(int(row.p), int(row.ell), bool(row.divides_first), bool(row.divides_second))
            for row in cells.itertuples(index=False)
        ]

    def verdict_line(self) -> str:
        if self.is_witness:
            return 'VERDICT witness'
        return f"VERDICT consistent {self.config.describe()}"


def scan_places(E1: CurveOverQ, E2: CurveOverQ, cfg: CriterionConfig) -> Tuple[List[PrimeModulus], List[int]]:
    """Places of good reduction for both curves, and the skipped ones"""
    good, skipped = [], []
    for p in primes_in_range(5, cfg.p_max):
        if p.value in cfg.excluded_places or E1.discriminant % p.value == 0 or E2.discriminant % p.value == 0:
            skipped.append(p.value)
        else:
            good.append(p)
    return good, skipped


def _matrix_from_records(records1: Sequence[CountRecord], records2: Sequence[CountRecord],
                         ells: Sequence[int]) -> pd.DataFrame:
    ps = np.array([rec.p for rec in records1], dtype=np.int64)
    n1 = np.array([rec.count for rec in records1], dtype=np.int64)
    n2 = np.array([rec.count for rec in records2], dtype=np.int64)
    ell_column = np.tile(np.asarray(ells, dtype=np.int64), len(ps))
    first = (np.repeat(n1, len(ells)) % ell_column) == 0
    second = (np.repeat(n2, len(ells)) % ell_column) == 0
    state = np.select(
        [first & second, ~first & ~second, first & ~second],
        ['both', 'neither', 'first_only'],
        default='second_only',
    )
    return pd.DataFrame({
        'p': np.repeat(ps, len(ells)),
        'ell': ell_column,
        'n1': np.repeat(n1, len(ells)),
        'n2': np.repeat(n2, len(ells)),
        'divides_first': first,
        'divides_second': second,
        'state': state,
    })


def coincidence_matrix(E1: CurveOverQ, E2: CurveOverQ, cfg: CriterionConfig, jobs: int = 1) -> pd.DataFrame:
    """One row per (p, ell), p ascending then ell ascending"""
    good, _ = scan_places(E1, E2, cfg)
    records1 = count_range(E1, good, jobs)
    records2 = count_range(E2, good, jobs)
    if [r.p for r in records1] != [r.p for r in records2]:
        raise InvariantViolation("count ranges for the two curves cover different places")
    return _matrix_from_records(records1, records2, cfg.ells)


def summarize(matrix: pd.DataFrame, ells: Sequence[int]) -> pd.DataFrame:
    """Per-ell tallies of the four divisibility states"""
    if matrix.empty:
        return pd.DataFrame(0, index=pd.Index(list(ells), name='ell'), columns=list(STATES))
    counts = matrix.groupby(['ell', 'state']).size().unstack(fill_value=0)
    return counts.reindex(index=pd.Index(list(ells), name='ell'), columns=list(STATES), fill_value=0)


def verdict_from_matrix(matrix: pd.DataFrame, cfg: CriterionConfig, skipped: List[int]) -> Verdict:
    """The first xor cell in scan order, if any"""
    witness = None
    cells = matrix[matrix['state'].isin(('first_only', 'second_only'))]
    if len(cells):
        row = cells.iloc[0]
        witness = WitnessRecord(int(row['p']), int(row['ell']), bool(row['divides_first']), bool(row['divides_second']))
    return Verdict(cfg, witness, summarize(matrix, cfg.ells), matrix, list(skipped))


def run_criterion(E1: CurveOverQ, E2: CurveOverQ, cfg: CriterionConfig, jobs: int = 1) -> Verdict:
    start_time = datetime.now()
    good, skipped = scan_places(E1, E2, cfg)
    if not good:
        raise EmptyScan(f"no place of good reduction for {E1.label} and {E2.label} up to {cfg.p_max}")
    logger.info(f"Scanning {len(good)} places for {E1.label} vs {E2.label} ({cfg.describe()})")

    records1 = count_range(E1, good, jobs)
    records2 = count_range(E2, good, jobs)
    matrix = _matrix_from_records(records1, records2, cfg.ells)
    verdict = verdict_from_matrix(matrix, cfg, skipped)

    log_performance_metrics('run_criterion', start_time, datetime.now(), {
        'places': len(good),
        'skipped': len(skipped),
        'outcome': verdict.outcome,
    })
    return verdict


def _splitting_records(E: CurveOverQ, ell: int, p_max: int) -> List[CountRecord]:
    if ell < 3:
        raise ValueError("ell must be an odd prime")
    records = []
    candidates = [p for p in primes_in_range(5, p_max) if p.value % ell == 1 and E.discriminant % p.value]
    tracker = ProgressTracker(len(candidates), f"Splitting places of {E.label} at ell={ell}")
    for p in candidates:
        tracker.update()
        E_p = reduce(E, p)
        rec = count_points(E_p)
        if rec.count % (ell * ell):
            continue
        if ell_torsion_rank(E_p, ell, rec.count).rank != 2:
            continue
        if rec.count % ell or (rec.p - 1) % ell or (rec.trace - 2) % ell:
            raise InvariantViolation(f"split place p={rec.p} for ell={ell} breaks the Frobenius congruences")
        records.append(rec)
    tracker.finish()
    return records


def splitting_places(E: CurveOverQ, ell, p_max: int) -> List[PrimeModulus]:
    """Good places p <= p_max where all of E[ell] is rational over F_p"""
    modulus = as_modulus(ell)
    return [PrimeModulus._from_sieve(rec.p) for rec in _splitting_records(E, modulus.value, p_max)]


@dataclass
class TwistExperimentReport:
    label: str
    twist_label: str
    d: int
    ell: int
    p_max: int
    splitting: List[int]
    selected: List[int]
    twist_counts: List[int]
    witnesses: List[WitnessRecord]
    congruence_holds: bool

    @property
    def witness_count(self) -> int:
        return len(self.witnesses)

    @property
    def survival_fraction(self) -> Optional[float]:
        if not self.splitting:
            return None
        return len(self.selected) / len(self.splitting)


def twist_witness_experiment(E: CurveOverQ, d: int, ell, p_max: int) -> TwistExperimentReport:
    """
    At split places with (d/p) = -1 the twist has N(E^d) = 4 mod ell, so ell divides
    N(E) but not N(E^d): each such place is a witness for the pair (E, E^d).
    """
    modulus = as_modulus(ell)
    if modulus.value < 3:
        raise ValueError("ell must be an odd prime")
    if d == 1:
        raise ValueError("the character of d = 1 is trivial")
    twisted = quadratic_twist(E, d)
    splitting = _splitting_records(E, modulus.value, p_max)

    selected, twist_counts, witnesses = [], [], []
    holds = True
    for rec in splitting:
        if (2 * d) % rec.p == 0 or legendre_symbol(d, rec.p) != -1:
            continue
        twisted_count = count_points(reduce(twisted, rec.p)).count
        selected.append(rec.p)
        twist_counts.append(twisted_count)
        if twisted_count % modulus.value != 4 % modulus.value:
            holds = False
            logger.warning(f"N({twisted.label}) = {twisted_count} at p={rec.p} is not 4 mod {modulus}")
        first = rec.count % modulus.value == 0
        second = twisted_count % modulus.value == 0
        if first != second:
            witnesses.append(WitnessRecord(rec.p, modulus.value, first, second))

    logger.info(
        f"Twist experiment {E.label} / d={d} at ell={modulus}: {len(splitting)} split places, "
        f"{len(selected)} with (d/p) = -1"
    )
    return TwistExperimentReport(
        E.label, twisted.label, d, modulus.value, p_max,
        [rec.p for rec in splitting], selected, twist_counts, witnesses, holds,
    )
