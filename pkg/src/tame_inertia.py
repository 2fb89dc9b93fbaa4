"""
Invariants in Q/Z of products of fundamental characters of tame inertia.

At level n the fundamental characters have invariants ell^k / (ell^n - 1) for
k = 0, ..., n - 1; a product with exponents e(k) in {0, 1} has invariant
sum_k e(k) ell^k / (ell^n - 1). The set X collects these for n = 1, ..., 2g.
All arithmetic is exact.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import FrozenSet, List, Tuple

from src.errors import InvariantViolation
from src.modmath import RationalInvariant, as_modulus, primes_in_range

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class ExponentPattern:
    level: int
    exponents: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'exponents', tuple(int(e) for e in self.exponents))
        if self.level < 1:
            raise ValueError(f"level must be positive, got {self.level}")
        if len(self.exponents) != self.level:
            raise ValueError(f"level {self.level} needs {self.level} exponents, got {len(self.exponents)}")
        if any(e not in (0, 1) for e in self.exponents):
            raise ValueError(f"exponents must be 0 or 1, got {self.exponents}")

    def invariant(self, ell: int) -> RationalInvariant:
        total = sum(e * ell ** k for k, e in enumerate(self.exponents))
        return RationalInvariant.from_fraction(Fraction(total, ell ** self.level - 1))

    def complement(self) -> 'ExponentPattern':
        return ExponentPattern(self.level, tuple(1 - e for e in self.exponents))


@dataclass(frozen=True)
class InvariantSet:
    g: int
    ell: int
    values: FrozenSet[RationalInvariant]

    def __post_init__(self):
        ceiling = Fraction(1, self.ell - 1)
        for value in self.values:
            if value.as_fraction() > ceiling:
                raise InvariantViolation(f"invariant {value} exceeds 1/(ell - 1) = {ceiling}")

    def sorted_values(self) -> List[RationalInvariant]:
        return sorted(self.values)

    @property
    def max_value(self) -> RationalInvariant:
        return max(self.values)

    @property
    def min_value(self) -> RationalInvariant:
        return min(self.values)

    def max_pairwise_difference(self) -> Fraction:
        return self.max_value.as_fraction() - self.min_value.as_fraction()

    def __contains__(self, value) -> bool:
        if isinstance(value, Fraction):
            value = RationalInvariant.from_fraction(value)
        return value in self.values

    def __len__(self) -> int:
        return len(self.values)


def _check_range(g: int, ell: int):
    if g < 1:
        raise ValueError(f"g must be at least 1, got {g}")
    if ell < 3:
        raise ValueError("ell must be an odd prime")
    if ell ** (2 * g) >= 2 ** 63:
        raise OverflowError(f"ell^(2g) = {ell}^{2 * g} exceeds the machine-word range")


def patterns(g: int) -> List[ExponentPattern]:
    """Every exponent pattern of every level 1, ..., 2g"""
    return [
        ExponentPattern(n, exponents)
        for n in range(1, 2 * g + 1)
        for exponents in product((0, 1), repeat=n)
    ]


def enumerate_invariants(g: int, ell) -> InvariantSet:
    modulus = as_modulus(ell).value
    _check_range(g, modulus)
    values = frozenset(pattern.invariant(modulus) for pattern in patterns(g))
    return InvariantSet(g, modulus, values)


def complement_invariant(pattern: ExponentPattern, ell: int) -> RationalInvariant:
    """Invariant of the complementary pattern: 1/(ell - 1) - x"""
    value = Fraction(1, ell - 1) - pattern.invariant(ell).as_fraction()
    complement = pattern.complement().invariant(ell)
    if complement.as_fraction() != value:
        raise InvariantViolation(f"complement of {pattern} at ell={ell} is {complement}, expected {value}")
    return complement


def level_bound(n: int, ell: int) -> Fraction:
    """n ell^(n-1) / (ell^n - 1)"""
    return Fraction(n * ell ** (n - 1), ell ** n - 1)


def coarse_bound(g: int, ell: int) -> Fraction:
    """2g / (ell - 1)"""
    return Fraction(2 * g, ell - 1)


@dataclass
class BoundCheck:
    g: int
    ell: int
    max_value: RationalInvariant
    bound: Fraction
    below_paper_bound: bool
    level_bounds_hold: bool


def bound_check(g: int, ell) -> BoundCheck:
    """max(X) against 2g/(ell - 1), and each level's values against n ell^(n-1)/(ell^n - 1)"""
    modulus = as_modulus(ell).value
    invariants = enumerate_invariants(g, modulus)
    level_ok = all(
        pattern.invariant(modulus).as_fraction() <= level_bound(pattern.level, modulus)
        for pattern in patterns(g)
    )
    bound = coarse_bound(g, modulus)
    return BoundCheck(
        g, modulus, invariants.max_value, bound,
        invariants.max_value.as_fraction() < bound, level_ok,
    )


@dataclass
class ThresholdRow:
    ell: int
    max_value: RationalInvariant
    bound: Fraction
    max_difference: Fraction
    threshold_met: bool
    pairs_ok: bool

    @property
    def status(self) -> str:
        if not self.threshold_met:
            return 'threshold-not-met'
        return 'pass' if self.pairs_ok else 'fail'


def threshold_table(g: int, ell_max: int) -> List[ThresholdRow]:
    """One row per odd prime ell <= ell_max"""
    if g < 1:
        raise ValueError(f"g must be at least 1, got {g}")
    if ell_max < 3:
        return []
    rows = []
    for ell in primes_in_range(3, ell_max):
        invariants = enumerate_invariants(g, ell)
        difference = invariants.max_pairwise_difference()
        rows.append(ThresholdRow(
            ell=ell.value,
            max_value=invariants.max_value,
            bound=coarse_bound(g, ell.value),
            max_difference=difference,
            threshold_met=ell.value >= 4 * g + 1,
            pairs_ok=difference < HALF,
        ))
    return rows


def unramified_threshold_check(g: int, ell_max: int) -> bool:
    """True iff |x - x'| < 1/2 on X for every prime 4g + 1 <= ell <= ell_max"""
    rows = threshold_table(g, ell_max)
    failures = [row.ell for row in rows if row.threshold_met and not row.pairs_ok]
    if failures:
        logger.warning(f"pairwise bound fails for g={g} at ell in {failures}")
    return not failures
