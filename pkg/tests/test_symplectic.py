"""
Unit tests for GSp_2g(F_ell): multipliers, orders, sampling, enumeration and normal subgroups.
"""

import unittest
from itertools import product

import numpy as np
from hypothesis import given, settings as hypothesis_settings, strategies as st

from src.errors import CapExceeded, NotSymplectic
from src.modmath import FieldElement, det_mod, pow_mod_array
from src.symplectic import (
    GroupSpec,
    GspElement,
    SymplecticForm,
    cardinal_separation,
    cardinal_separation_scan,
    coset_elements,
    det_multiplier_check,
    encode_keys,
    enumerate_sp,
    gsp_order,
    multiplier_of,
    normal_subgroup_audit,
    random_gsp_batch,
    random_gsp_element,
    scalar_sp_index,
    simplicity_lemma_excluded,
    sp_order,
    standard_transvections,
    sylow_exponent,
    symplectic_inverse,
    transvection,
)


def _batch_multipliers(matrices: np.ndarray, g: int, ell: int) -> np.ndarray:
    form = SymplecticForm(g).matrix
    scaled = np.swapaxes(matrices, -1, -2) @ form % ell @ matrices % ell
    lams = scaled[:, 0, g]
    # M^T J M must be lambda J entry by entry, not only at (0, g)
    assert np.array_equal(scaled, lams[:, None, None] * form % ell)
    return lams


class TestGroupSpec(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            GroupSpec(1, 2)
        with self.assertRaises(ValueError):
            GroupSpec(0, 5)
        with self.assertRaises(ValueError):
            GroupSpec(1, 9)
        self.assertEqual(str(GroupSpec(2, 3)), 'GSp_4(F_3)')


class TestMultiplier(unittest.TestCase):
    def test_examples(self):
        """Test the multiplier of I, of scalars and of J"""
        self.assertEqual(multiplier_of(np.eye(4, dtype=int), 7), 1)
        self.assertEqual(multiplier_of(3 * np.eye(4, dtype=int), 7), 2)
        self.assertEqual(multiplier_of(SymplecticForm(1).matrix, 5), 1)

    def test_scalar_multiplier_is_square(self):
        for ell in (3, 5, 7, 11):
            for x in range(1, ell):
                self.assertEqual(multiplier_of(x * np.eye(2, dtype=int), ell), x * x % ell)

    def test_not_symplectic(self):
        with self.assertRaises(NotSymplectic):
            multiplier_of([[1, 1], [0, 0]], 5)
        with self.assertRaises(NotSymplectic):
            multiplier_of(np.diag([2, 1, 1, 1]), 5)
        with self.assertRaises(NotSymplectic):
            multiplier_of(np.eye(3, dtype=int), 5)

    def test_declared_multiplier_checked(self):
        with self.assertRaises(NotSymplectic):
            GspElement(2 * np.eye(2, dtype=int), 5, multiplier=FieldElement(2, 5))


class TestDetMultiplier(unittest.TestCase):
    def test_identity(self):
        self.assertTrue(det_multiplier_check(GspElement(np.eye(4, dtype=int), 5)))

    def test_genus_one_is_gl2(self):
        """For g = 1 every invertible matrix lies in GSp with multiplier det"""
        ell = 5
        for a, b, c, d in product(range(ell), repeat=4):
            det = (a * d - b * c) % ell
            if det == 0:
                continue
            M = GspElement([[a, b], [c, d]], ell)
            self.assertEqual(M.multiplier, det)
            self.assertTrue(det_multiplier_check(M))

    def test_random_batch_laws(self):
        """Multiplier, product, inverse and det laws on 10^4 random elements"""
        for g, ell in ((1, 5), (2, 7), (3, 11)):
            with self.subTest(g=g, ell=ell):
                spec = GroupSpec(g, ell)
                rng = np.random.default_rng(11)
                lams = rng.integers(1, ell, size=10 ** 4)
                mus = rng.integers(1, ell, size=10 ** 4)
                M = random_gsp_batch(spec, lams, rng)
                N = random_gsp_batch(spec, mus, rng)

                self.assertTrue(np.array_equal(_batch_multipliers(M, g, ell), lams))
                self.assertTrue(np.array_equal(_batch_multipliers(M @ N % ell, g, ell), lams * mus % ell))

                inverses = symplectic_inverse(M, lams, ell)
                identities = np.broadcast_to(np.eye(2 * g, dtype=np.int64), M.shape)
                self.assertTrue(np.array_equal(M @ inverses % ell, identities))
                inverse_lams = np.array([pow(int(lam), -1, ell) for lam in lams])
                self.assertTrue(np.array_equal(_batch_multipliers(inverses, g, ell), inverse_lams))

                self.assertTrue(np.array_equal(det_mod(M, ell), pow_mod_array(lams, g, ell)))


class TestGspElement(unittest.TestCase):
    def setUp(self):
        self.spec = GroupSpec(2, 5)
        self.M = random_gsp_element(self.spec, 3, seed=4)

    def test_inverse(self):
        identity = GspElement.identity(self.spec)
        self.assertEqual(self.M @ self.M.inverse(), identity)
        self.assertEqual(self.M.inverse() @ self.M, identity)
        self.assertEqual(self.M.inverse().multiplier, 2)

    def test_product_multiplier(self):
        N = random_gsp_element(self.spec, 4, seed=5)
        product_ = self.M @ N
        self.assertEqual(product_.multiplier, 2)
        self.assertEqual(multiplier_of(product_.entries, 5), 2)

    def test_scaled_and_conjugate(self):
        self.assertEqual(self.M.scaled(-1).multiplier, 3)
        u = random_gsp_element(self.spec, 1, seed=6)
        conjugate = self.M.conjugate_by(u)
        self.assertEqual(u @ conjugate, self.M @ u)
        self.assertEqual(conjugate.multiplier, self.M.multiplier)

    def test_multiplier_diagonal(self):
        D = GspElement.multiplier_diagonal(self.spec, 3)
        self.assertEqual(multiplier_of(D.entries, 5), 3)
        self.assertEqual(repr(GspElement.multiplier_diagonal(GroupSpec(1, 5), 2)), '[[1,0],[0,2]]')

    def test_transvections_are_special(self):
        for v in ([1, 0, 0, 0], [0, 1, 1, 0], [1, 2, 3, 4]):
            T = transvection(self.spec, v, c=2)
            self.assertEqual(multiplier_of(T.entries, 5), 1)
        for matrix in standard_transvections(self.spec):
            self.assertEqual(multiplier_of(matrix, 5), 1)


class TestRandomElements(unittest.TestCase):
    def test_empty_word_is_identity(self):
        spec = GroupSpec(2, 3)
        M = random_gsp_element(spec, 1, seed=0, word_length=0)
        self.assertEqual(M, GspElement.identity(spec))

    @given(st.sampled_from([(1, 3), (1, 5), (2, 3), (2, 5), (3, 7)]), st.integers(min_value=1, max_value=100),
           st.integers(min_value=0, max_value=2 ** 32))
    @hypothesis_settings(max_examples=40, deadline=None)
    def test_hits_target_multiplier(self, case, target, seed):
        g, ell = case
        if target % ell == 0:
            return
        M = random_gsp_element(GroupSpec(g, ell), target, seed=seed, word_length=16)
        self.assertEqual(multiplier_of(M.entries, ell), target % ell)

    def test_deterministic_under_seed(self):
        spec = GroupSpec(2, 7)
        first = random_gsp_batch(spec, [1, 2, 3], seed=42)
        second = random_gsp_batch(spec, [1, 2, 3], seed=42)
        self.assertTrue(np.array_equal(first, second))

    def test_zero_multiplier_rejected(self):
        with self.assertRaises(ValueError):
            random_gsp_batch(GroupSpec(1, 5), [0])

    def test_sampler_reaches_all_of_sp(self):
        """10^5 words with lambda = 1 hit every element of Sp_2(F_5)"""
        spec = GroupSpec(1, 5)
        batch = random_gsp_batch(spec, np.ones(10 ** 5, dtype=np.int64), seed=2024)
        enumeration = enumerate_sp(spec)
        self.assertTrue(np.all(enumeration.index_of(batch) >= 0))
        self.assertEqual(len(np.unique(encode_keys(spec, batch))), 120)


class TestOrders(unittest.TestCase):
    def test_sp_order_examples(self):
        self.assertEqual(sp_order(GroupSpec(1, 3)), 24)
        self.assertEqual(sp_order(GroupSpec(1, 5)), 120)
        self.assertEqual(sp_order(GroupSpec(2, 3)), 51840)
        self.assertEqual(gsp_order(GroupSpec(1, 5)), 480)

    def test_overflow(self):
        with self.assertRaises(OverflowError):
            sp_order(GroupSpec(5, 101))

    def test_sylow_exponent(self):
        for g, ell in ((1, 3), (1, 5), (1, 7), (2, 3), (2, 5), (2, 7), (3, 5)):
            self.assertEqual(sylow_exponent(GroupSpec(g, ell)), g * g)

    def test_scalar_index(self):
        for g, ell in ((1, 3), (1, 5), (2, 7), (3, 11)):
            self.assertEqual(scalar_sp_index(GroupSpec(g, ell)), 2)

    def test_simplicity_exclusion(self):
        self.assertTrue(simplicity_lemma_excluded(1, 3))
        self.assertFalse(simplicity_lemma_excluded(1, 5))
        self.assertFalse(simplicity_lemma_excluded(2, 3))


class TestCardinalSeparation(unittest.TestCase):
    def test_examples(self):
        self.assertTrue(cardinal_separation(1, 1, 1, 1, 5))
        self.assertFalse(cardinal_separation(1, 1, 1, 2, 5))
        for z1, z2 in product((1, 2), repeat=2):
            self.assertFalse(cardinal_separation(1, z1, 2, z2, 3))

    def test_scan(self):
        self.assertTrue(cardinal_separation_scan(2, [3, 5, 7, 11, 13]))
        self.assertTrue(cardinal_separation_scan(3, [3, 5]))

    def test_bad_centre(self):
        with self.assertRaises(ValueError):
            cardinal_separation(1, 3, 1, 1, 5)


class TestEnumeration(unittest.TestCase):
    def test_sizes(self):
        """Test enumeration against the order formula"""
        self.assertEqual(len(enumerate_sp(GroupSpec(1, 3))), 24)
        self.assertEqual(len(enumerate_sp(GroupSpec(1, 5))), 120)

    def test_centre_first(self):
        enum = enumerate_sp(GroupSpec(1, 5))
        self.assertTrue(np.array_equal(enum.elements[0], np.eye(2)))
        self.assertTrue(np.array_equal(enum.elements[1], 4 * np.eye(2)))

    def test_closure_and_membership(self):
        enum = enumerate_sp(GroupSpec(1, 3))
        self.assertTrue(enum.is_closed())
        self.assertEqual(enum.index_of(enum.elements).tolist(), list(range(24)))
        self.assertFalse(enum.contains(np.diag([1, 2])))
        self.assertTrue(enum.contains(np.array([[1, 1], [0, 1]])))
        for index in range(len(enum)):
            self.assertEqual(enum.element(index).det(), 1)

    def test_cosets_carry_multiplier(self):
        enum = enumerate_sp(GroupSpec(1, 5))
        for mu in range(1, 5):
            coset = coset_elements(enum, mu)
            self.assertTrue(np.all(_batch_multipliers(coset, 1, 5) == mu))

    def test_cap(self):
        with self.assertRaises(CapExceeded):
            enumerate_sp(GroupSpec(2, 3), cap=1000)

    def test_genus_two(self):
        enum = enumerate_sp(GroupSpec(2, 3))
        self.assertEqual(len(enum), 51840)
        self.assertEqual(len(set(enum.keys.tolist())), 51840)


class TestNormalSubgroups(unittest.TestCase):
    def test_sl2_f5(self):
        self.assertEqual(normal_subgroup_audit(enumerate_sp(GroupSpec(1, 5))), [1, 2, 120])

    def test_sl2_f3_has_quaternion_subgroup(self):
        self.assertEqual(normal_subgroup_audit(enumerate_sp(GroupSpec(1, 3))), [1, 2, 8, 24])

    def test_sp4_f3(self):
        self.assertEqual(normal_subgroup_audit(enumerate_sp(GroupSpec(2, 3))), [1, 2, 51840])


if __name__ == '__main__':
    unittest.main()
