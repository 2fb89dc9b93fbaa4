"""
Elliptic curves y^2 = x^3 + a2 x^2 + a4 x + a6 over Q and their reductions mod p.

Counting is O(p) and vectorised with numpy; p is capped by COUNT_P_CAP so that
every intermediate product stays inside int64.
"""

import logging
import multiprocessing
from dataclasses import dataclass
from functools import partial
from typing import Iterable, List, Optional, Tuple

import numpy as np

from config.settings import settings
from src.errors import BadReduction, CapExceeded, InvariantViolation, SingularCurve, SingularOutput
from src.models import CountRecord, CurveOverQ, weierstrass_discriminant
from src.modmath import (
    FieldElement,
    PrimeModulus,
    as_modulus,
    is_squarefree,
    legendre_array,
    pow_mod_array,
    primes_in_range,
    valuation,
)

logger = logging.getLogger(__name__)

Points = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True)
class ReducedCurve:
    label: str
    p: PrimeModulus
    a2: int
    a4: int
    a6: int

    def __post_init__(self):
        if self.p.value < 5:
            raise ValueError(f"places above 2 and 3 are excluded, got p={self.p}")
        for name in ('a2', 'a4', 'a6'):
            object.__setattr__(self, name, getattr(self, name) % self.p.value)

    @property
    def q(self) -> int:
        return self.p.value

    def rhs(self, xs: np.ndarray) -> np.ndarray:
        """x^3 + a2 x^2 + a4 x + a6 mod p, evaluated by Horner's rule"""
        q = self.q
        xs = np.asarray(xs, dtype=np.int64) % q
        value = (xs + self.a2) % q
        value = (value * xs + self.a4) % q
        return (value * xs + self.a6) % q


@dataclass(frozen=True)
class TorsionProfile:
    p: int
    ell: int
    rank: int
    kernel_size: int

    def __post_init__(self):
        if self.rank not in (0, 1, 2) or self.kernel_size != self.ell ** self.rank:
            raise InvariantViolation(f"kernel of {self.ell} has size {self.kernel_size}")


def reduce(E: CurveOverQ, p) -> ReducedCurve:
    modulus = as_modulus(p)
    if modulus.value < 5:
        raise ValueError(f"reduction requires p >= 5, got {modulus}")
    if E.discriminant % modulus.value == 0:
        raise BadReduction(E.label, modulus.value)
    return ReducedCurve(E.label, modulus, E.a2, E.a4, E.a6)


def _check_count_cap(E_p: ReducedCurve):
    if E_p.q > settings.COUNT_P_CAP:
        raise CapExceeded(f"p={E_p.q} exceeds the counting cap {settings.COUNT_P_CAP}")


def count_points(E_p: ReducedCurve) -> CountRecord:
    """N = p + 1 + sum_x (f(x) / p)"""
    _check_count_cap(E_p)
    xs = np.arange(E_p.q, dtype=np.int64)
    count = E_p.q + 1 + int(legendre_array(E_p.rhs(xs), E_p.q).sum())
    return CountRecord(E_p.label, E_p.q, count)


def _square_counts(q: int) -> np.ndarray:
    ys = np.arange(q, dtype=np.int64)
    return np.bincount(ys * ys % q, minlength=q)


def count_points_direct(E_p: ReducedCurve) -> CountRecord:
    """Count (x, y) pairs directly: for each x, the number of y with y^2 = f(x)"""
    _check_count_cap(E_p)
    xs = np.arange(E_p.q, dtype=np.int64)
    count = 1 + int(_square_counts(E_p.q)[E_p.rhs(xs)].sum())
    return CountRecord(E_p.label, E_p.q, count)


def enumerate_points(E_p: ReducedCurve) -> Tuple[np.ndarray, np.ndarray]:
    """All affine points as parallel arrays (xs, ys), sorted by x then y"""
    _check_count_cap(E_p)
    q = E_p.q
    ys_all = np.arange(q, dtype=np.int64)
    squares = ys_all * ys_all % q
    order = np.argsort(squares, kind='stable')
    sorted_squares = squares[order]

    xs = np.arange(q, dtype=np.int64)
    values = E_p.rhs(xs)
    start = np.searchsorted(sorted_squares, values, side='left')
    counts = np.searchsorted(sorted_squares, values, side='right') - start

    total = int(counts.sum())
    point_xs = np.repeat(xs, counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    point_ys = order[np.repeat(start, counts) + offsets]
    return point_xs, point_ys


def _add(E_p: ReducedCurve, P: Points, Q: Points) -> Points:
    """Vectorised chord-and-tangent addition; the third array flags the point at infinity"""
    q = E_p.q
    x1, y1, inf1 = P
    x2, y2, inf2 = Q
    same_x = x1 == x2
    opposite = same_x & ((y1 + y2) % q == 0)
    doubling = same_x & ~opposite

    numerator = np.where(doubling, (3 * x1 * x1 + 2 * E_p.a2 * x1 + E_p.a4) % q, (y2 - y1) % q)
    denominator = np.where(doubling, 2 * y1 % q, (x2 - x1) % q)
    denominator = np.where(opposite | inf1 | inf2, 1, denominator)
    slope = numerator * pow_mod_array(denominator, q - 2, q) % q

    x3 = (slope * slope - E_p.a2 - x1 - x2) % q
    y3 = (slope * (x1 - x3) - y1) % q
    inf3 = opposite & ~inf1 & ~inf2

    x3 = np.where(inf1, x2, np.where(inf2, x1, x3))
    y3 = np.where(inf1, y2, np.where(inf2, y1, y3))
    inf3 = np.where(inf1, inf2, np.where(inf2, inf1, inf3))
    return x3, y3, inf3


def scalar_multiple(E_p: ReducedCurve, xs: np.ndarray, ys: np.ndarray, k: int) -> Points:
    """k * P for every affine point P = (xs[i], ys[i]), by double-and-add"""
    if k < 0:
        raise ValueError("k must be non-negative")
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    result = (np.zeros_like(xs), np.zeros_like(ys), np.ones(xs.shape, dtype=bool))
    base = (xs, ys, np.zeros(xs.shape, dtype=bool))
    while k:
        if k & 1:
            result = _add(E_p, result, base)
        base = _add(E_p, base, base)
        k >>= 1
    return result


def ell_torsion_rank(E_p: ReducedCurve, ell, count: Optional[int] = None) -> TorsionProfile:
    """
    Dimension of E(F_p)[ell], from the number of points killed by ell.

    Rank 2 is full ell-torsion over F_p, which forces ell^2 | N and p = 1 mod ell.
    """
    modulus = as_modulus(ell)
    if modulus.value == 2:
        raise ValueError("ell must be odd")
    if modulus.value == E_p.q:
        raise ValueError("ell must differ from p")
    N = count_points(E_p).count if count is None else count
    if N % modulus.value:
        return TorsionProfile(E_p.q, modulus.value, 0, 1)

    xs, ys = enumerate_points(E_p)
    _, _, killed = scalar_multiple(E_p, xs, ys, modulus.value)
    kernel_size = 1 + int(killed.sum())
    rank = {1: 0, modulus.value: 1, modulus.value ** 2: 2}.get(kernel_size)
    if rank is None:
        raise InvariantViolation(f"kernel of {modulus} on {E_p.label} at p={E_p.q} has size {kernel_size}")
    if rank == 2 and (N % modulus.value ** 2 or (E_p.q - 1) % modulus.value):
        raise InvariantViolation(
            f"full {modulus}-torsion at p={E_p.q} without ell^2 | N and ell | p - 1"
        )
    return TorsionProfile(E_p.q, modulus.value, rank, kernel_size)


def quadratic_twist(E: CurveOverQ, d: int) -> CurveOverQ:
    """The twist by Q(sqrt d): (a2, a4, a6) -> (d a2, d^2 a4, d^3 a6)"""
    if d == 0 or not is_squarefree(d):
        raise ValueError(f"twist parameter must be a nonzero squarefree integer, got {d}")
    if d == 1:
        return E
    return CurveOverQ(f"{E.label}_tw{d}", d * E.a2, d * d * E.a4, d ** 3 * E.a6)


def velu_two_isogenous(E: CurveOverQ) -> CurveOverQ:
    """Quotient by <(0, 0)>: y^2 = x(x^2 + a2 x + a4) -> y^2 = x(x^2 - 2 a2 x + a2^2 - 4 a4)"""
    if E.a6 != 0:
        raise ValueError("(0, 0) is a 2-torsion point only when a6 = 0")
    if E.a4 == 0:
        raise ValueError("a4 = 0 makes (0, 0) singular")
    a4 = E.a2 * E.a2 - 4 * E.a4
    if a4 == 0 or weierstrass_discriminant(-2 * E.a2, a4, 0) == 0:
        raise SingularOutput(f"2-isogenous model of {E.label} is singular")
    try:
        return CurveOverQ(f"{E.label}_v2", -2 * E.a2, a4, 0)
    except SingularCurve as e:
        raise SingularOutput(str(e)) from e


def charpoly_mod_ell(rec: CountRecord, ell) -> Tuple[FieldElement, FieldElement]:
    """(a_p, p) mod ell, the coefficients of T^2 - a_p T + p"""
    modulus = as_modulus(ell)
    if modulus.value == rec.p:
        raise ValueError("ell must differ from p")
    return FieldElement(rec.trace, modulus), FieldElement(rec.p, modulus)


def reversed_charpoly_at_one(rec: CountRecord, ell) -> FieldElement:
    """1 - a_p + p mod ell; always equals N mod ell"""
    trace, norm = charpoly_mod_ell(rec, ell)
    return 1 - trace + norm


def is_cm_shape(E: CurveOverQ) -> bool:
    """y^2 = x^3 + a4 x or y^2 = x^3 + a6: j = 1728 or j = 0"""
    return E.a2 == 0 and (E.a4 == 0 or E.a6 == 0)


def divisibility_indicator(count: int, ell: int) -> int:
    """min(1, v_ell(N))"""
    return min(1, valuation(count, ell))


def good_primes(E: CurveOverQ, p_max: int, p_min: int = 5) -> List[PrimeModulus]:
    """Primes 5 <= p <= p_max not dividing the discriminant"""
    if p_max < max(5, p_min):
        return []
    return [p for p in primes_in_range(max(5, p_min), p_max) if E.discriminant % p.value]


def _count_at(E: CurveOverQ, p: int) -> Optional[CountRecord]:
    try:
        return count_points(reduce(E, p))
    except BadReduction:
        return None


def count_range(E: CurveOverQ, primes: Iterable, jobs: int = 1) -> List[CountRecord]:
    """Counts at every prime of good reduction, in the order given"""
    values = [int(p) for p in primes]
    worker = partial(_count_at, E)
    if jobs > 1 and len(values) > 1:
        with multiprocessing.Pool(processes=min(jobs, multiprocessing.cpu_count())) as pool:
            results = pool.map(worker, values)
    else:
        results = [worker(p) for p in values]
    records = [rec for rec in results if rec is not None]
    logger.debug(f"Counted {E.label} at {len(records)} of {len(values)} primes")
    return records
