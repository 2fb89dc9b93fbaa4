"""
The group GSp_{2g}(F_ell) with the standard form J = [[0, I_g], [-I_g, 0]].

Matrices are numpy int64 arrays with entries reduced into [0, ell). Group-wide work
(enumeration, conjugacy classes, normal subgroups) is vectorised over stacks of
matrices of shape (count, 2g, 2g).
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as cartesian
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from config.settings import settings
from src.errors import CapExceeded, InvariantViolation, NotSymplectic
from src.modmath import FieldElement, PrimeModulus, as_modulus, det_mod, valuation

logger = logging.getLogger(__name__)

KEY_LIMIT = 2 ** 62

Seed = Union[int, np.random.Generator, None]


@dataclass(frozen=True)
class GroupSpec:
    g: int
    ell: PrimeModulus

    def __post_init__(self):
        object.__setattr__(self, 'ell', as_modulus(self.ell))
        if self.g < 1:
            raise ValueError(f"g must be at least 1, got {self.g}")
        if self.ell.value < 3:
            raise ValueError("ell = 2 is excluded; use an odd prime")

    @property
    def n(self) -> int:
        return 2 * self.g

    @property
    def p(self) -> int:
        return self.ell.value

    def __str__(self) -> str:
        return f"GSp_{self.n}(F_{self.p})"


@lru_cache(maxsize=None)
def _form(g: int) -> np.ndarray:
    n = 2 * g
    matrix = np.zeros((n, n), dtype=np.int64)
    matrix[:g, g:] = np.eye(g, dtype=np.int64)
    matrix[g:, :g] = -np.eye(g, dtype=np.int64)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True)
class SymplecticForm:
    """The block form [[0, I_g], [-I_g, 0]]"""
    g: int

    @property
    def dimension(self) -> int:
        return 2 * self.g

    @property
    def matrix(self) -> np.ndarray:
        return _form(self.g)

    def pairing(self, x: np.ndarray, y: np.ndarray, ell: int) -> int:
        return int(np.asarray(x) @ self.matrix @ np.asarray(y)) % ell


def _as_matrix(entries, ell: int) -> np.ndarray:
    matrix = np.array(entries, dtype=np.int64) % ell
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
        raise NotSymplectic(f"expected a square matrix of even dimension, got shape {matrix.shape}")
    return matrix


def _multiplier_residue(matrix: np.ndarray, ell: int) -> Optional[int]:
    g = matrix.shape[0] // 2
    form = _form(g)
    scaled = matrix.T @ form @ matrix % ell
    lam = int(scaled[0, g])
    if lam == 0 or not np.array_equal(scaled, lam * form % ell):
        return None
    return lam


def multiplier_of(entries, ell) -> FieldElement:
    """The unique lambda with M^T J M = lambda J; NotSymplectic when none exists"""
    modulus = as_modulus(ell)
    matrix = _as_matrix(entries, modulus.value)
    lam = _multiplier_residue(matrix, modulus.value)
    if lam is None:
        raise NotSymplectic(f"matrix is not in GSp over F_{modulus.value}")
    return FieldElement(lam, modulus)


class GspElement:
    """A matrix of GSp_{2g}(F_ell) together with its cached multiplier"""

    __slots__ = ('_entries', '_multiplier', '_ell')

    def __init__(self, entries, ell, multiplier: Optional[FieldElement] = None):
        modulus = as_modulus(ell)
        matrix = _as_matrix(entries, modulus.value)
        lam = multiplier_of(matrix, modulus)
        if multiplier is not None and multiplier != lam:
            raise NotSymplectic(f"declared multiplier {multiplier} differs from {lam}")
        matrix.setflags(write=False)
        self._entries = matrix
        self._multiplier = lam
        self._ell = modulus
        if not det_multiplier_check(self):
            raise InvariantViolation("det(M) != lambda(M)^g")

    @classmethod
    def unchecked(cls, matrix: np.ndarray, lam: int, ell: PrimeModulus) -> 'GspElement':
        # Entry point for matrices produced by group operations on valid elements
        element = object.__new__(cls)
        matrix = np.array(matrix, dtype=np.int64) % ell.value
        matrix.setflags(write=False)
        element._entries = matrix
        element._multiplier = FieldElement(lam, ell)
        element._ell = ell
        return element

    @classmethod
    def identity(cls, spec: GroupSpec) -> 'GspElement':
        return cls.unchecked(np.eye(spec.n, dtype=np.int64), 1, spec.ell)

    @classmethod
    def scalar(cls, spec: GroupSpec, x: int) -> 'GspElement':
        return cls(x * np.eye(spec.n, dtype=np.int64), spec.ell)

    @classmethod
    def multiplier_diagonal(cls, spec: GroupSpec, lam: int) -> 'GspElement':
        """diag(I_g, lam I_g), the fixed element carrying multiplier lam"""
        return cls.unchecked(_diagonal(spec, lam), lam % spec.p, spec.ell)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def multiplier(self) -> FieldElement:
        return self._multiplier

    @property
    def ell(self) -> PrimeModulus:
        return self._ell

    @property
    def g(self) -> int:
        return self._entries.shape[0] // 2

    @property
    def spec(self) -> GroupSpec:
        return GroupSpec(self.g, self._ell)

    @property
    def is_special(self) -> bool:
        """True for elements of Sp (multiplier 1)"""
        return self._multiplier.residue == 1

    def _check_compatible(self, other: 'GspElement'):
        if self._ell != other._ell or self._entries.shape != other._entries.shape:
            raise ValueError("elements belong to different groups")

    def __matmul__(self, other: 'GspElement') -> 'GspElement':
        self._check_compatible(other)
        lam = self._multiplier.residue * other._multiplier.residue
        return GspElement.unchecked(self._entries @ other._entries, lam % self._ell.value, self._ell)

    def inverse(self) -> 'GspElement':
        ell = self._ell.value
        lam_inv = pow(self._multiplier.residue, -1, ell)
        matrix = symplectic_inverse(self._entries[None], np.array([self._multiplier.residue]), ell)[0]
        return GspElement.unchecked(matrix, lam_inv, self._ell)

    def scaled(self, c: int) -> 'GspElement':
        """c * M, with multiplier c^2 lambda(M)"""
        ell = self._ell.value
        return GspElement.unchecked(c * self._entries, c * c * self._multiplier.residue % ell, self._ell)

    def conjugate_by(self, u: 'GspElement') -> 'GspElement':
        """u^{-1} M u"""
        return u.inverse() @ self @ u

    def det(self) -> int:
        return det_mod(self._entries, self._ell.value)

    def det_minus_identity(self) -> int:
        """det(M - I) mod ell"""
        return det_mod(self._entries - np.eye(self._entries.shape[0], dtype=np.int64), self._ell.value)

    def key(self) -> bytes:
        return self._entries.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, GspElement):
            return NotImplemented
        return self._ell == other._ell and np.array_equal(self._entries, other._entries)

    def __hash__(self) -> int:
        return hash((self._ell.value, self.key()))

    def __repr__(self) -> str:
        rows = ','.join('[' + ','.join(str(int(v)) for v in row) + ']' for row in self._entries)
        return f"[{rows}]"


def _diagonal(spec: GroupSpec, lam: int) -> np.ndarray:
    diagonal = np.eye(spec.n, dtype=np.int64)
    diagonal[spec.g:, spec.g:] *= lam % spec.p
    return diagonal


def symplectic_inverse(matrices: np.ndarray, multipliers: np.ndarray, ell: int) -> np.ndarray:
    """M^{-1} = lambda^{-1} J^{-1} M^T J for a stack of GSp matrices"""
    g = matrices.shape[-1] // 2
    form = _form(g)
    inverse_lams = np.array([pow(int(lam), -1, ell) for lam in np.ravel(multipliers)], dtype=np.int64)
    transposed = np.swapaxes(matrices, -1, -2)
    core = (-form) @ transposed % ell @ form % ell
    return core * inverse_lams.reshape(-1, 1, 1) % ell


def det_multiplier_check(M: GspElement) -> bool:
    """det(M) = lambda(M)^g"""
    return M.det() == pow(M.multiplier.residue, M.g, M.ell.value)


def sp_order(spec: GroupSpec) -> int:
    """|Sp_{2g}(F_ell)| = ell^{g^2} prod_{i=1..g} (ell^{2i} - 1)"""
    ell = spec.p
    order = ell ** (spec.g * spec.g)
    for i in range(1, spec.g + 1):
        order *= ell ** (2 * i) - 1
    if order >= 2 ** 63:
        raise OverflowError(f"|Sp| for {spec} exceeds the machine-word range")
    return order


def gsp_order(spec: GroupSpec) -> int:
    return sp_order(spec) * (spec.p - 1)


def sylow_exponent(spec: GroupSpec) -> int:
    """Exponent of ell in |Sp|; equals g^2"""
    return valuation(sp_order(spec), spec.p)


def cardinal_separation(g1: int, z1: int, g2: int, z2: int, ell) -> bool:
    """
    Whether |Sp_{2g1}(F_ell)/Z_1| = |Sp_{2g2}(F_ell)/Z_2| for central subgroups of order z1, z2.

    Equality forces g1 = g2 and z1 = z2; a collision raises InvariantViolation.
    """
    if z1 not in (1, 2) or z2 not in (1, 2):
        raise ValueError("z1 and z2 must be orders of subgroups of {+I, -I}")
    modulus = as_modulus(ell)
    if modulus.value == 2:
        raise ValueError("ell must be odd")
    first = sp_order(GroupSpec(g1, modulus)) // z1
    second = sp_order(GroupSpec(g2, modulus)) // z2
    equal = first == second
    if equal and (g1, z1) != (g2, z2):
        raise InvariantViolation(f"quotient orders collide for (g, z) = ({g1}, {z1}) and ({g2}, {z2})")
    return equal


def cardinal_separation_scan(g_max: int, ells: Sequence[int]) -> bool:
    """Run cardinal_separation over every (g1, z1, g2, z2) with g <= g_max"""
    for ell in ells:
        for g1, z1, g2, z2 in cartesian(range(1, g_max + 1), (1, 2), range(1, g_max + 1), (1, 2)):
            equal = cardinal_separation(g1, z1, g2, z2, ell)
            if equal != ((g1, z1) == (g2, z2)):
                return False
    return True


def scalar_sp_index(spec: GroupSpec) -> int:
    """
    Index of {x M : x in F_ell^*, M in Sp} in GSp.

    Multipliers of that subgroup are the values lambda(x I) = x^2, each checked
    through multiplier_of.
    """
    squares = set()
    for x in range(1, spec.p):
        lam = multiplier_of(x * np.eye(spec.n, dtype=np.int64), spec.ell)
        if lam.residue != x * x % spec.p:
            raise InvariantViolation(f"lambda({x} I) = {lam} instead of {x * x % spec.p}")
        squares.add(lam.residue)
    return (spec.p - 1) // len(squares)


def simplicity_lemma_excluded(g: int, ell: int) -> bool:
    """Cases (g, F_ell) with ell odd that the normal-subgroup lemma excludes"""
    return g == 1 and ell == 3


# --- generators and sampling ---

def transvection(spec: GroupSpec, v: Sequence[int], c: int = 1) -> GspElement:
    """The symplectic transvection x -> x + c * <x, v> * v"""
    return GspElement.unchecked(_transvection_matrices(spec, np.array([v]), np.array([c]))[0], 1, spec.ell)


def _transvection_matrices(spec: GroupSpec, vectors: np.ndarray, scalars: np.ndarray) -> np.ndarray:
    ell = spec.p
    vectors = np.asarray(vectors, dtype=np.int64) % ell
    row = vectors @ _form(spec.g) % ell
    outer = vectors[:, :, None] * row[:, None, :] % ell
    identity = np.eye(spec.n, dtype=np.int64)
    return (identity - np.asarray(scalars, dtype=np.int64).reshape(-1, 1, 1) * outer) % ell


def standard_transvections(spec: GroupSpec) -> np.ndarray:
    """Transvections along e_i and e_i +- e_j; together they generate Sp"""
    n = spec.n
    vectors = []
    for i in range(n):
        e_i = np.zeros(n, dtype=np.int64)
        e_i[i] = 1
        vectors.append(e_i)
        for j in range(i + 1, n):
            for sign in (1, -1):
                v = e_i.copy()
                v[j] = sign
                vectors.append(v)
    return _transvection_matrices(spec, np.array(vectors), np.ones(len(vectors), dtype=np.int64))


def _rng(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_gsp_batch(spec: GroupSpec, multipliers, seed: Seed = None,
                     word_length: Optional[int] = None) -> np.ndarray:
    """
    One random element per requested multiplier, as a (count, 2g, 2g) stack.

    Each element is a word of random transvections followed by diag(I, lambda I).
    """
    ell = spec.p
    lams = np.atleast_1d(np.asarray(multipliers, dtype=np.int64)) % ell
    if np.any(lams == 0):
        raise ValueError("target multiplier must be nonzero")
    length = settings.WORD_LENGTH if word_length is None else word_length
    rng = _rng(seed)
    count = lams.shape[0]
    acc = np.broadcast_to(np.eye(spec.n, dtype=np.int64), (count, spec.n, spec.n)).copy()
    for _ in range(length):
        vectors = rng.integers(0, ell, size=(count, spec.n))
        scalars = rng.integers(1, ell, size=count)
        acc = acc @ _transvection_matrices(spec, vectors, scalars) % ell
    acc[:, :, spec.g:] = acc[:, :, spec.g:] * lams[:, None, None] % ell
    return acc


def random_gsp_element(spec: GroupSpec, target_multiplier, seed: Seed = None,
                       word_length: Optional[int] = None) -> GspElement:
    lam = int(target_multiplier) % spec.p
    matrix = random_gsp_batch(spec, [lam], seed, word_length)[0]
    return GspElement.unchecked(matrix, lam, spec.ell)


# --- exhaustive enumeration ---

def _key_weights(spec: GroupSpec) -> np.ndarray:
    if spec.p ** (spec.n * spec.n) >= KEY_LIMIT:
        raise OverflowError(f"matrix keys for {spec} exceed 64 bits")
    return spec.p ** np.arange(spec.n * spec.n, dtype=np.int64)


def encode_keys(spec: GroupSpec, matrices: np.ndarray) -> np.ndarray:
    """Injective integer key of each matrix (base-ell digits of its entries)"""
    flat = np.asarray(matrices, dtype=np.int64).reshape(-1, spec.n * spec.n)
    return flat @ _key_weights(spec)


@dataclass
class SubgroupEnumeration:
    """Explicit element set of a subgroup; elements[0] is the identity"""
    spec: GroupSpec
    elements: np.ndarray
    keys: np.ndarray = field(init=False, repr=False)
    _sorter: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.elements.setflags(write=False)
        self.keys = encode_keys(self.spec, self.elements)
        self._sorter = np.argsort(self.keys, kind='stable')

    def __len__(self) -> int:
        return self.elements.shape[0]

    @property
    def order(self) -> int:
        return len(self)

    def index_of(self, matrices: np.ndarray) -> np.ndarray:
        """Indices of the given matrices; -1 for matrices outside the set"""
        keys = encode_keys(self.spec, np.asarray(matrices) % self.spec.p)
        sorted_keys = self.keys[self._sorter]
        positions = np.searchsorted(sorted_keys, keys)
        positions = np.minimum(positions, len(self) - 1)
        found = sorted_keys[positions] == keys
        return np.where(found, self._sorter[positions], -1)

    def contains(self, matrix) -> bool:
        return bool(self.index_of(np.asarray(matrix)[None])[0] >= 0)

    def element(self, index: int) -> GspElement:
        return GspElement.unchecked(self.elements[index], 1, self.spec.ell)

    def inverses(self) -> np.ndarray:
        return symplectic_inverse(self.elements, np.ones(len(self), dtype=np.int64), self.spec.p)

    def is_closed(self) -> bool:
        """Closed under products with every element and under inversion"""
        if np.any(self.index_of(self.inverses()) < 0):
            return False
        for x in self.elements:
            if np.any(self.index_of(x @ self.elements % self.spec.p) < 0):
                return False
        return True


def close_under_generators(spec: GroupSpec, generators: np.ndarray, cap: Optional[int] = None) -> np.ndarray:
    """Breadth-first closure of {I} under right multiplication by the generators"""
    ell = spec.p
    limit = settings.ENUMERATION_CAP if cap is None else cap
    identity = np.eye(spec.n, dtype=np.int64)[None]
    generators = np.asarray(generators, dtype=np.int64) % ell
    blocks = [identity]
    known = encode_keys(spec, identity)
    frontier = identity
    while frontier.shape[0]:
        products = (frontier[:, None] @ generators[None] % ell).reshape(-1, spec.n, spec.n)
        keys = encode_keys(spec, products)
        keys, first = np.unique(keys, return_index=True)
        fresh = ~np.isin(keys, known)
        frontier = products[first[fresh]]
        if frontier.shape[0]:
            blocks.append(frontier)
            known = np.concatenate([known, keys[fresh]])
        if known.shape[0] > limit:
            raise CapExceeded(f"closure exceeded {limit} elements")
    return np.concatenate(blocks)


def enumerate_sp(spec: GroupSpec, cap: Optional[int] = None) -> SubgroupEnumeration:
    """All elements of Sp_{2g}(F_ell); I and -I come first"""
    limit = settings.ENUMERATION_CAP if cap is None else cap
    expected = sp_order(spec)
    if expected > limit:
        raise CapExceeded(f"|Sp| = {expected} for {spec} exceeds the enumeration cap {limit}")
    logger.info(f"Enumerating Sp for {spec} ({expected:,} elements)")
    elements = close_under_generators(spec, standard_transvections(spec), limit)
    if elements.shape[0] != expected:
        raise InvariantViolation(f"enumerated {elements.shape[0]} elements, expected {expected}")
    # Centre first: I at index 0, -I at index 1
    minus_identity = (-np.eye(spec.n, dtype=np.int64)) % spec.p
    position = int(np.flatnonzero(encode_keys(spec, elements) == encode_keys(spec, minus_identity[None])[0])[0])
    elements[[1, position]] = elements[[position, 1]]
    return SubgroupEnumeration(spec, elements)


def coset_elements(enum: SubgroupEnumeration, multiplier: int) -> np.ndarray:
    """The multiplier class diag(I, mu I) * Sp, in enumeration order"""
    return _diagonal(enum.spec, multiplier) @ enum.elements % enum.spec.p


# --- normal subgroups ---

def conjugacy_classes(enum: SubgroupEnumeration) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Class id of every element, and the member indices of each class"""
    ell = enum.spec.p
    class_of = np.full(len(enum), -1, dtype=np.int64)
    inverses = enum.inverses()
    members: List[np.ndarray] = []
    for index in range(len(enum)):
        if class_of[index] >= 0:
            continue
        conjugates = inverses @ enum.elements[index] % ell @ enum.elements % ell
        orbit = np.unique(enum.index_of(conjugates))
        class_of[orbit] = len(members)
        members.append(orbit)
    return class_of, members


class _NormalClosure:
    """Normal subgroups as sets of conjugacy classes"""

    def __init__(self, enum: SubgroupEnumeration):
        self.enum = enum
        self.class_of, self.members = conjugacy_classes(enum)
        self.sizes = np.array([m.shape[0] for m in self.members])
        self.identity_class = int(self.class_of[0])
        self._products: Dict[Tuple[int, int], Set[int]] = {}

    def _product_classes(self, a: int, b: int) -> Set[int]:
        # rep(A) * B meets the same classes as A * B when the union is normal
        if (a, b) not in self._products:
            ell = self.enum.spec.p
            representative = self.enum.elements[self.members[a][0]]
            products = representative @ self.enum.elements[self.members[b]] % ell
            self._products[(a, b)] = set(self.class_of[self.enum.index_of(products)].tolist())
        return self._products[(a, b)]

    def size(self, classes: FrozenSet[int]) -> int:
        return int(self.sizes[list(classes)].sum())

    def close(self, classes) -> FrozenSet[int]:
        current = set(classes) | {self.identity_class}
        everything = frozenset(range(len(self.members)))
        changed = True
        while changed:
            changed = False
            if 2 * self.size(frozenset(current)) > len(self.enum):
                return everything
            for a in sorted(current):
                for b in sorted(current):
                    new = self._product_classes(a, b) - current
                    if new:
                        current |= new
                        changed = True
        return frozenset(current)


def normal_subgroups(enum: SubgroupEnumeration) -> Tuple[List[FrozenSet[int]], _NormalClosure]:
    """Every normal subgroup, as the set of conjugacy classes it is the union of"""
    closure = _NormalClosure(enum)
    found = {closure.close(())}
    found |= {closure.close((c,)) for c in range(len(closure.members))}
    pending = True
    while pending:
        pending = False
        for first in list(found):
            for second in list(found):
                joined = closure.close(first | second)
                if joined not in found:
                    found.add(joined)
                    pending = True
    return sorted(found, key=closure.size), closure


def normal_subgroup_audit(enum: SubgroupEnumeration) -> List[int]:
    """Orders of all normal subgroups, ascending"""
    subgroups, closure = normal_subgroups(enum)
    orders = sorted(closure.size(s) for s in subgroups)
    logger.info(f"Normal subgroup orders for {enum.spec}: {orders}")
    return orders
