"""
Exact modular arithmetic over machine-word primes.

Scalar operations work on plain Python ints; the array helpers work on numpy int64
arrays and keep every intermediate product below 2^63.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import List, Union

import numpy as np
import sympy

from src.errors import ModulusMismatch

WORD_LIMIT = 2 ** 64

# Array kernels square residues in int64
ARRAY_MODULUS_LIMIT = 2 ** 31

# First twelve primes: a complete witness set below 3.3 * 10^24
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _check_composite(n: int, s: int, d: int, a: int) -> bool:
    """Check compositeness of n with witness a, where d * 2^s = n - 1 and d is odd"""
    a %= n
    if a == 0:
        return False
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return False
    for _ in range(1, s):
        x = x * x % n
        if x == n - 1:
            return False
        if x == 1:
            return True
    return True


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every n below 2^64"""
    if n < 0:
        raise ValueError(f"is_prime expects a non-negative integer, got {n}")
    if n >= WORD_LIMIT:
        raise OverflowError(f"{n} exceeds the machine-word range")
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while not d & 1:
        d >>= 1
        s += 1
    return not any(_check_composite(n, s, d, a) for a in _MR_WITNESSES)


@dataclass(frozen=True)
class PrimeModulus:
    """A machine-word prime; houses both test primes ell and residue characteristics p"""
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, np.integer)):
            raise TypeError(f"prime modulus must be an integer, got {self.value!r}")
        object.__setattr__(self, 'value', int(self.value))
        if not is_prime(self.value):
            raise ValueError(f"{self.value} is not prime")

    @classmethod
    def _from_sieve(cls, value: int) -> 'PrimeModulus':
        # Values produced by the sieve are prime by construction
        instance = object.__new__(cls)
        object.__setattr__(instance, 'value', int(value))
        return instance

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __str__(self) -> str:
        return str(self.value)


IntOrPrime = Union[int, PrimeModulus]


def as_modulus(p: IntOrPrime) -> PrimeModulus:
    return p if isinstance(p, PrimeModulus) else PrimeModulus(p)


@dataclass(frozen=True)
class FieldElement:
    """An element of F_p, always fully reduced"""
    residue: int
    modulus: PrimeModulus

    def __post_init__(self):
        modulus = as_modulus(self.modulus)
        object.__setattr__(self, 'modulus', modulus)
        object.__setattr__(self, 'residue', int(self.residue) % modulus.value)

    @property
    def p(self) -> int:
        return self.modulus.value

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ModulusMismatch(f"cannot combine residues mod {self.p} and mod {other.p}")
            return other.residue
        if isinstance(other, (int, np.integer)) and not isinstance(other, bool):
            return int(other)
        return NotImplemented

    def __add__(self, other):
        value = self._coerce(other)
        if value is NotImplemented:
            return NotImplemented
        return FieldElement(self.residue + value, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        value = self._coerce(other)
        if value is NotImplemented:
            return NotImplemented
        return FieldElement(self.residue - value, self.modulus)

    def __rsub__(self, other):
        value = self._coerce(other)
        if value is NotImplemented:
            return NotImplemented
        return FieldElement(value - self.residue, self.modulus)

    def __mul__(self, other):
        value = self._coerce(other)
        if value is NotImplemented:
            return NotImplemented
        return FieldElement(self.residue * value, self.modulus)

    __rmul__ = __mul__

    def __truediv__(self, other):
        value = self._coerce(other)
        if value is NotImplemented:
            return NotImplemented
        return self * mod_inv(FieldElement(value, self.modulus))

    def __neg__(self):
        return FieldElement(-self.residue, self.modulus)

    def __pow__(self, exponent: int):
        if exponent < 0:
            return mod_inv(self) ** (-exponent)
        return FieldElement(pow(self.residue, exponent, self.p), self.modulus)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.modulus == other.modulus and self.residue == other.residue
        if isinstance(other, (int, np.integer)) and not isinstance(other, bool):
            return self.residue == int(other) % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.residue, self.modulus.value))

    def __bool__(self) -> bool:
        return self.residue != 0

    def __int__(self) -> int:
        return self.residue

    def __str__(self) -> str:
        return str(self.residue)


@total_ordering
@dataclass(frozen=True, eq=True)
class RationalInvariant:
    """An element of Q/Z stored as a reduced fraction in [0, 1)"""
    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        if not 0 <= self.numerator < self.denominator:
            raise ValueError(f"{self.numerator}/{self.denominator} is not reduced into [0, 1)")
        if math.gcd(self.numerator, self.denominator) != 1:
            raise ValueError(f"{self.numerator}/{self.denominator} is not in lowest terms")

    @classmethod
    def from_fraction(cls, value: Fraction) -> 'RationalInvariant':
        reduced = value - math.floor(value)
        return cls(reduced.numerator, reduced.denominator)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __lt__(self, other):
        if not isinstance(other, RationalInvariant):
            return NotImplemented
        return self.as_fraction() < other.as_fraction()

    def __str__(self) -> str:
        return '0' if self.numerator == 0 else f"{self.numerator}/{self.denominator}"


def legendre_symbol(a: int, p: IntOrPrime) -> int:
    """Legendre symbol (a/p) for an odd prime p, by Euler's criterion"""
    modulus = as_modulus(p).value
    if modulus == 2:
        raise ValueError("legendre_symbol is defined for odd primes only")
    residue = pow(a % modulus, (modulus - 1) // 2, modulus)
    return -1 if residue == modulus - 1 else residue


def mod_inv(x: FieldElement) -> FieldElement:
    if x.residue == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {x.p}")
    return FieldElement(pow(x.residue, -1, x.p), x.modulus)


def prime_array(lo: int, hi: int) -> np.ndarray:
    """Primes in [lo, hi] as an int64 array, by a segmented sieve"""
    if lo < 2 or hi < lo:
        raise ValueError(f"prime range requires 2 <= lo <= hi, got [{lo}, {hi}]")
    root = math.isqrt(hi)
    base = np.ones(root + 1, dtype=bool)
    base[:2] = False
    for q in range(2, math.isqrt(root) + 1):
        if base[q]:
            base[q * q::q] = False
    segment = np.ones(hi - lo + 1, dtype=bool)
    for q in np.flatnonzero(base):
        q = int(q)
        start = max(q * q, ((lo + q - 1) // q) * q)
        segment[start - lo::q] = False
    return np.flatnonzero(segment).astype(np.int64) + lo


def primes_in_range(lo: int, hi: int) -> List[PrimeModulus]:
    return [PrimeModulus._from_sieve(q) for q in prime_array(lo, hi)]


def valuation(n: int, ell: int) -> int:
    """Exact ell-adic valuation of a nonzero integer"""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n = abs(n)
    count = 0
    while n % ell == 0:
        n //= ell
        count += 1
    return count


def is_squarefree(d: int) -> bool:
    if d == 0:
        return False
    return all(exponent == 1 for exponent in sympy.factorint(abs(d)).values())


# --- array kernels ---

def _check_array_modulus(p: int):
    if p >= ARRAY_MODULUS_LIMIT:
        raise OverflowError(f"array arithmetic needs p < 2^31, got {p}")


def pow_mod_array(base: np.ndarray, exponent: int, p: int) -> np.ndarray:
    """Element-wise base^exponent mod p by square-and-multiply"""
    _check_array_modulus(p)
    result = np.ones_like(np.asarray(base, dtype=np.int64))
    square = np.asarray(base, dtype=np.int64) % p
    while exponent:
        if exponent & 1:
            result = result * square % p
        square = square * square % p
        exponent >>= 1
    return result


def legendre_array(values: np.ndarray, p: int) -> np.ndarray:
    """Element-wise Legendre symbol; agrees with legendre_symbol"""
    if p == 2:
        raise ValueError("legendre_array is defined for odd primes only")
    residues = pow_mod_array(np.asarray(values, dtype=np.int64) % p, (p - 1) // 2, p)
    return np.where(residues == p - 1, -1, residues).astype(np.int64)


def det_mod(matrices, p: int):
    """
    Exact determinant mod p of one matrix or a batch of shape (..., n, n).

    Gaussian elimination over F_p, run in lock-step across the batch.
    """
    _check_array_modulus(p)
    a = np.array(matrices, dtype=np.int64) % p
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"det_mod expects square matrices, got shape {a.shape}")
    single = a.ndim == 2
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape((-1, n, n))
    count = a.shape[0]
    rows = np.arange(count)
    det = np.ones(count, dtype=np.int64)

    for k in range(n):
        nonzero = a[:, k:, k] != 0
        has_pivot = nonzero.any(axis=1)
        pivot_row = np.argmax(nonzero, axis=1) + k

        swap = has_pivot & (pivot_row != k)
        row_k = a[rows, k].copy()
        a[rows, k] = a[rows, pivot_row]
        a[rows, pivot_row] = row_k
        det = np.where(swap, (-det) % p, det)

        pivot = np.where(has_pivot, a[:, k, k], 1)
        det = np.where(has_pivot, det * pivot % p, 0)
        if k + 1 < n:
            factors = a[:, k + 1:, k] * pow_mod_array(pivot, p - 2, p)[:, None] % p
            a[:, k + 1:, :] = (a[:, k + 1:, :] - factors[:, :, None] * a[:, None, k, :]) % p

    if single:
        return int(det[0])
    return det.reshape(batch_shape)
