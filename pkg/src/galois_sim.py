"""
Models of the joint mod-ell image of a pair of Galois representations.

A model is a subgroup G of GSp x GSp with matched multipliers. Places are represented
only by their Frobenius images: sampling picks a pair (x, y) in G whose common
multiplier is the residue of the place's characteristic. Exhaustive scans walk the
multiplier classes diag(I, mu I) * Sp for mu = 1, ..., ell - 1.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
import sympy

from config.settings import settings
from src.errors import CapExceeded, InvariantViolation, ModulusMismatch
from src.modmath import FieldElement, det_mod
from src.symplectic import (
    GroupSpec,
    GspElement,
    Seed,
    SubgroupEnumeration,
    cardinal_separation,
    coset_elements,
    enumerate_sp,
    gsp_order,
    random_gsp_batch,
    random_gsp_element,
    sp_order,
)

logger = logging.getLogger(__name__)

TRIAL_CHUNK = 10_000


class ModelKind(Enum):
    GRAPH = 'graph'
    TWIST = 'twist'
    PRODUCT = 'product'


class Dichotomy(Enum):
    EQUAL_FIELDS = 'EqualFields'
    INDEX_TWO = 'IndexTwo'
    VIOLATED = 'Violated'


@dataclass(frozen=True)
class JointImageModel:
    """
    A joint image inside GSp x GSp.

    graph:   pairs (x, u^-1 x u), the isogenous case
    twist:   pairs (x, eps u^-1 x u) with eps = +1 or -1 chosen independently of x
    product: all pairs (x, y) with lambda(x) = lambda(y)

    `c` is an optional bound on kernel orders; it carries no default meaning.
    """
    kind: ModelKind
    spec: GroupSpec
    u: Optional[GspElement] = None
    spec_second: Optional[GroupSpec] = None
    c: Optional[int] = None

    def __post_init__(self):
        if self.spec_second is None:
            object.__setattr__(self, 'spec_second', self.spec)
        if self.spec_second.ell != self.spec.ell:
            raise ModulusMismatch("both factors must be taken over the same F_ell")
        if self.kind is ModelKind.PRODUCT:
            if self.u is not None:
                raise ValueError("the fibered product takes no conjugating element")
        else:
            if self.spec_second != self.spec:
                raise ValueError("graph and twist models need equal dimensions")
            u = self.u if self.u is not None else GspElement.identity(self.spec)
            if u.spec != self.spec:
                raise ValueError(f"conjugating element lives in {u.spec}, expected {self.spec}")
            object.__setattr__(self, 'u', u)
        if self.c is not None and self.c < 1:
            raise ValueError("c must be a positive integer")

    @classmethod
    def graph(cls, spec: GroupSpec, u: Optional[GspElement] = None, c: Optional[int] = None) -> 'JointImageModel':
        return cls(ModelKind.GRAPH, spec, u=u, c=c)

    @classmethod
    def twist(cls, spec: GroupSpec, u: Optional[GspElement] = None, c: Optional[int] = None) -> 'JointImageModel':
        return cls(ModelKind.TWIST, spec, u=u, c=c)

    @classmethod
    def product(cls, spec: GroupSpec, spec_second: Optional[GroupSpec] = None,
                c: Optional[int] = None) -> 'JointImageModel':
        return cls(ModelKind.PRODUCT, spec, spec_second=spec_second, c=c)

    @property
    def ell(self) -> int:
        return self.spec.p

    @property
    def equal_dimension(self) -> bool:
        return self.spec.g == self.spec_second.g

    @property
    def signs(self) -> Tuple[int, ...]:
        return (1, -1) if self.kind is ModelKind.TWIST else (1,)

    def image_of(self, x: GspElement, epsilon: int = 1) -> GspElement:
        """The second coordinate paired with x (graph and twist models)"""
        if self.kind is ModelKind.PRODUCT:
            raise ValueError("the fibered product is not a graph")
        if epsilon not in self.signs:
            raise ValueError(f"epsilon={epsilon} not allowed in the {self.kind.value} model")
        y = x.conjugate_by(self.u)
        return y.scaled(epsilon) if epsilon == -1 else y

    def _conjugate_stack(self, xs: np.ndarray) -> np.ndarray:
        u = self.u.entries
        u_inverse = self.u.inverse().entries
        return u_inverse @ xs % self.ell @ u % self.ell

    def members(self, xs: np.ndarray, x_lams: np.ndarray, ys: np.ndarray, y_lams: np.ndarray) -> np.ndarray:
        """Vectorised membership of the pairs (xs[i], ys[i])"""
        matched = np.asarray(x_lams) % self.ell == np.asarray(y_lams) % self.ell
        if self.kind is ModelKind.PRODUCT:
            return matched
        images = self._conjugate_stack(xs)
        hit = np.all(images == ys, axis=(-1, -2))
        if self.kind is ModelKind.TWIST:
            hit |= np.all((-images) % self.ell == ys, axis=(-1, -2))
        return matched & hit

    def contains(self, x: GspElement, y: GspElement) -> bool:
        return bool(self.members(
            x.entries[None], np.array([x.multiplier.residue]),
            y.entries[None], np.array([y.multiplier.residue]),
        )[0])


@dataclass(frozen=True)
class FrobeniusSample:
    x: GspElement
    y: GspElement
    lam: FieldElement
    epsilon: int = 1

    def __post_init__(self):
        if self.x.multiplier != self.lam or self.y.multiplier != self.lam:
            raise InvariantViolation(
                f"multipliers {self.x.multiplier}, {self.y.multiplier} do not match {self.lam}"
            )

    def describe(self) -> str:
        return f"x={self.x!r} y={self.y!r} lambda={self.lam} epsilon={self.epsilon:+d}"


@dataclass
class CoincidenceReport:
    holds: bool
    counterexample: Optional[FrobeniusSample]
    violating_pairs: int
    total_pairs: int
    exhaustive: bool

    @property
    def violating_fraction(self) -> Fraction:
        if self.total_pairs == 0:
            return Fraction(0)
        return Fraction(self.violating_pairs, self.total_pairs)

    @property
    def rate(self) -> Fraction:
        """Fraction of pairs satisfying the biconditional"""
        return 1 - self.violating_fraction


@dataclass
class KernelAudit:
    order: int
    contains_minus_identity: bool
    is_sp_subgroup: bool


@dataclass
class GoursatReport:
    ker_pi1_order: int
    ker_pi2_order: int
    dichotomy: Dichotomy
    within_c: Optional[bool] = None


@dataclass
class ObstructionCheck:
    """The pair (-I, I): its membership in the model and whether it breaks the biconditional"""
    member: bool
    violates: bool


def _residue(model: JointImageModel, p_residue) -> int:
    if isinstance(p_residue, FieldElement):
        if p_residue.p != model.ell:
            raise ModulusMismatch(f"residue taken mod {p_residue.p}, model is over F_{model.ell}")
        value = p_residue.residue
    else:
        value = int(p_residue) % model.ell
    if value == 0:
        raise ValueError("p_residue must be nonzero")
    return value


def sample_frobenius(model: JointImageModel, p_residue, seed: Seed = None,
                     word_length: Optional[int] = None) -> FrobeniusSample:
    """A pair from the model with multiplier p_residue; deterministic given seed"""
    lam = _residue(model, p_residue)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = random_gsp_element(model.spec, lam, rng, word_length)
    epsilon = 1
    if model.kind is ModelKind.PRODUCT:
        y = random_gsp_element(model.spec_second, lam, rng, word_length)
    else:
        if model.kind is ModelKind.TWIST:
            epsilon = int(rng.choice(model.signs))
        y = model.image_of(x, epsilon)
    return FrobeniusSample(x, y, FieldElement(lam, model.spec.ell), epsilon)


def sample_batch(model: JointImageModel, count: int, rng: np.random.Generator,
                 word_length: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    `count` independent samples with multipliers uniform in F_ell^*.

    Returns (lams, xs, ys, epsilons) as arrays.
    """
    lams = rng.integers(1, model.ell, size=count)
    xs = random_gsp_batch(model.spec, lams, rng, word_length)
    epsilons = np.ones(count, dtype=np.int64)
    if model.kind is ModelKind.PRODUCT:
        ys = random_gsp_batch(model.spec_second, lams, rng, word_length)
    else:
        ys = model._conjugate_stack(xs)
        if model.kind is ModelKind.TWIST:
            epsilons = rng.choice(np.array(model.signs), size=count)
            ys = ys * epsilons[:, None, None] % model.ell
    return lams, xs, ys, epsilons


def _singular_flags(matrices: np.ndarray, ell: int) -> np.ndarray:
    """det(M - I) == 0 for each matrix of the stack"""
    identity = np.eye(matrices.shape[-1], dtype=np.int64)
    return det_mod(matrices - identity, ell) == 0


def det_coincides(x: GspElement, y: GspElement) -> bool:
    """det(x - I) = 0 if and only if det(y - I) = 0"""
    return (x.det_minus_identity() == 0) == (y.det_minus_identity() == 0)


def exhaustive_allowed(model: JointImageModel, cap: Optional[int] = None) -> bool:
    """|Sp|^2 per multiplier class within the pair cap"""
    limit = settings.EXHAUSTIVE_PAIR_CAP if cap is None else cap
    try:
        return sp_order(model.spec) * sp_order(model.spec_second) <= limit
    except OverflowError:
        return False


def _sample(model: JointImageModel, x: np.ndarray, y: np.ndarray, lam: int, epsilon: int) -> FrobeniusSample:
    ell = model.spec.ell
    return FrobeniusSample(
        GspElement.unchecked(x, lam, ell),
        GspElement.unchecked(y, lam, ell),
        FieldElement(lam, ell),
        epsilon,
    )


def _exhaustive_coincidence(model: JointImageModel, enum: SubgroupEnumeration) -> CoincidenceReport:
    ell = model.ell
    size = len(enum)
    violating = 0
    total = 0
    counterexample = None
    for mu in range(1, ell):
        coset = coset_elements(enum, mu)
        flags = _singular_flags(coset, ell)
        if model.kind is ModelKind.PRODUCT:
            # Second coordinate outer, so pairs (x, I) from the kernel of pi_2 come first
            singular = int(flags.sum())
            violating += 2 * singular * (size - singular)
            total += size * size
            if counterexample is None and 0 < singular < size:
                y_index = 0
                x_index = int(np.argmax(flags != flags[y_index]))
                counterexample = _sample(model, coset[x_index], coset[y_index], mu, 1)
            continue
        images = model._conjugate_stack(coset)
        per_sign = []
        for epsilon in model.signs:
            ys = images * epsilon % ell
            per_sign.append((epsilon, ys, flags != _singular_flags(ys, ell)))
        for _, _, bad in per_sign:
            violating += int(bad.sum())
            total += size
        if counterexample is None:
            # x outer, epsilon = +1 before -1
            bad_any = np.any([bad for _, _, bad in per_sign], axis=0)
            if bad_any.any():
                index = int(np.argmax(bad_any))
                for epsilon, ys, bad in per_sign:
                    if bad[index]:
                        counterexample = _sample(model, coset[index], ys[index], mu, epsilon)
                        break
    return CoincidenceReport(violating == 0, counterexample, violating, total, exhaustive=True)


def _sampled_coincidence(model: JointImageModel, trials: int, seed: Seed,
                         word_length: Optional[int]) -> CoincidenceReport:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    violating = 0
    counterexample = None
    done = 0
    while done < trials:
        count = min(TRIAL_CHUNK, trials - done)
        lams, xs, ys, epsilons = sample_batch(model, count, rng, word_length)
        bad = _singular_flags(xs, model.ell) != _singular_flags(ys, model.ell)
        violating += int(bad.sum())
        if counterexample is None and bad.any():
            index = int(np.argmax(bad))
            counterexample = _sample(model, xs[index], ys[index], int(lams[index]), int(epsilons[index]))
        done += count
    return CoincidenceReport(violating == 0, counterexample, violating, trials, exhaustive=False)


def check_det_coincidence(model: JointImageModel, exhaustive: Optional[bool] = None,
                          trials: Optional[int] = None, seed: Seed = None,
                          word_length: Optional[int] = None) -> CoincidenceReport:
    """
    Test det(x - I) = 0 <=> det(y - I) = 0 over the model.

    Exhaustive mode is chosen by default when |Sp|^2 fits EXHAUSTIVE_PAIR_CAP; it walks
    every multiplier class and reports exact counts. Otherwise `trials` seeded samples.
    """
    if not model.equal_dimension:
        raise ValueError("det-coincidence experiments need factors of equal dimension")
    if exhaustive is None:
        exhaustive = exhaustive_allowed(model)
    if exhaustive:
        if not exhaustive_allowed(model):
            raise CapExceeded(
                f"exhaustive scan of {model.spec} pairs exceeds {settings.EXHAUSTIVE_PAIR_CAP}"
            )
        report = _exhaustive_coincidence(model, enumerate_sp(model.spec))
    else:
        count = settings.DEFAULT_TRIALS if trials is None else trials
        if count < 1:
            raise ValueError("trials must be positive")
        report = _sampled_coincidence(model, count, settings.DEFAULT_SEED if seed is None else seed, word_length)
    logger.info(
        f"det-coincidence for {model.kind.value} over {model.spec}: "
        f"{report.violating_pairs}/{report.total_pairs} violating"
    )
    return report


def _kernel_projection(model: JointImageModel, first_side: bool) -> KernelAudit:
    """
    pi_1(ker pi_2) when first_side, else pi_2(ker pi_1), computed over all of GSp.
    """
    spec = model.spec if first_side else model.spec_second
    other = model.spec_second if first_side else model.spec
    enum = enumerate_sp(spec)
    identity = np.eye(other.n, dtype=np.int64)
    found = []
    found_lams = []
    for mu in range(1, model.ell):
        coset = coset_elements(enum, mu)
        lams = np.full(len(enum), mu)
        fixed = np.broadcast_to(identity, (len(enum), other.n, other.n))
        ones = np.ones(len(enum), dtype=np.int64)
        if first_side:
            hit = model.members(coset, lams, fixed, ones)
        else:
            hit = model.members(fixed, ones, coset, lams)
        found.append(coset[hit])
        found_lams.append(lams[hit])
    elements = np.concatenate(found)
    multipliers = np.concatenate(found_lams)
    order = elements.shape[0]
    minus_identity = (-np.eye(spec.n, dtype=np.int64)) % model.ell
    contains_minus = bool(np.any(np.all(elements == minus_identity, axis=(-1, -2))))
    in_sp = bool(np.all(multipliers == 1))
    if in_sp and order != len(enum):
        in_sp = SubgroupEnumeration(spec, elements.copy()).is_closed()
    return KernelAudit(order, contains_minus, in_sp)


def projected_kernel_audit(model: JointImageModel) -> KernelAudit:
    """pi_1(ker pi_2) = {x : (x, I) in G}, computed exactly"""
    audit = _kernel_projection(model, first_side=True)
    logger.info(f"pi_1(ker pi_2) for {model.kind.value}: order {audit.order}, -I in it: {audit.contains_minus_identity}")
    return audit


def goursat_degrees(model: JointImageModel) -> GoursatReport:
    """Kernel orders of both projections and the resulting dichotomy"""
    ker_pi2 = _kernel_projection(model, first_side=True).order
    ker_pi1 = _kernel_projection(model, first_side=False).order
    if sp_order(model.spec_second) % ker_pi1 or sp_order(model.spec) % ker_pi2:
        raise InvariantViolation(f"kernel orders {ker_pi1}, {ker_pi2} do not divide |Sp|")
    if ker_pi1 == ker_pi2 == 1:
        dichotomy = Dichotomy.EQUAL_FIELDS
    elif ker_pi1 == ker_pi2 == 2:
        dichotomy = Dichotomy.INDEX_TWO
    else:
        dichotomy = Dichotomy.VIOLATED
    within_c = None if model.c is None else max(ker_pi1, ker_pi2) <= model.c
    return GoursatReport(ker_pi1, ker_pi2, dichotomy, within_c)


def obstruction_pair_check(model: JointImageModel) -> ObstructionCheck:
    """Whether (-I, I) lies in the model, and whether it breaks det-coincidence"""
    minus_identity = GspElement.scalar(model.spec, -1)
    identity = GspElement.identity(model.spec_second)
    return ObstructionCheck(
        member=model.contains(minus_identity, identity),
        violates=not det_coincides(minus_identity, identity),
    )


def joint_image_order(model: JointImageModel) -> int:
    """|G| over all multiplier classes"""
    if model.kind is ModelKind.GRAPH:
        return gsp_order(model.spec)
    if model.kind is ModelKind.TWIST:
        return 2 * gsp_order(model.spec)
    return (model.ell - 1) * sp_order(model.spec) * sp_order(model.spec_second)


def fiber_pair_count(model: JointImageModel, p_residue, cap: Optional[int] = None) -> int:
    """Number of pairs of G with multiplier p_residue, by testing every pair of the two classes"""
    lam = _residue(model, p_residue)
    limit = settings.EXHAUSTIVE_PAIR_CAP if cap is None else cap
    first = enumerate_sp(model.spec)
    second = first if model.spec_second == model.spec else enumerate_sp(model.spec_second)
    if len(first) * len(second) > limit:
        raise CapExceeded(f"{len(first) * len(second)} pairs exceed the cap {limit}")
    xs = coset_elements(first, lam)
    ys = coset_elements(second, lam)
    lams = np.full(len(second), lam)
    total = 0
    for x in xs:
        batch = np.broadcast_to(x, ys.shape)
        total += int(model.members(batch, lams, ys, lams).sum())
    return total


def step3_congruence_experiment(model: JointImageModel, g: Optional[int] = None, ell: Optional[int] = None) -> bool:
    """
    At a place split for the first factor (x = I) with epsilon = -1, y = -I and
    det(I - y) = 2^(2g); check the value mod ell and that it is nonzero.

    g and ell default to the model's; when given they must match it.
    """
    if model.kind is not ModelKind.TWIST:
        raise ValueError("the congruence experiment needs the twist model")
    if (g is not None and g != model.spec.g) or (ell is not None and ell != model.ell):
        raise ValueError(f"(g, ell) = ({g}, {ell}) does not match the model's ({model.spec.g}, {model.ell})")
    identity = GspElement.identity(model.spec)
    y = model.image_of(identity, -1)
    value = det_mod(identity.entries - y.entries, model.ell)
    expected = pow(2, 2 * model.spec.g, model.ell)
    logger.debug(f"det(I - y) = {value}, 2^(2g) mod {model.ell} = {expected}")
    return value == expected and value != 0


def charpoly_mod(x: GspElement) -> List[int]:
    """Coefficients of det(T I - x) mod ell, leading coefficient first"""
    T = sympy.Symbol('T')
    coefficients = sympy.Matrix(x.entries.tolist()).charpoly(T).all_coeffs()
    return [int(c) % x.ell.value for c in coefficients]


def sign_flipped(coefficients: List[int], ell: int) -> List[int]:
    """Charpoly coefficients of -x from those of x: the T^(n-k) coefficient picks up (-1)^k"""
    return [(c if k % 2 == 0 else -c) % ell for k, c in enumerate(coefficients)]


def dimension_separation(model: JointImageModel) -> bool:
    """True when no quotient |Sp_{2g_i}/Z_i| of one factor matches one of the other"""
    ell = model.ell
    g1, g2 = model.spec.g, model.spec_second.g
    matches = [
        cardinal_separation(g1, z1, g2, z2, ell)
        for z1 in (1, 2)
        for z2 in (1, 2)
    ]
    return not any(matches)
