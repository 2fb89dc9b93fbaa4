"""
Unit tests for the joint-image models and their audits.
"""

import unittest
from fractions import Fraction
from unittest.mock import patch

import numpy as np

from config.settings import settings
from src.errors import CapExceeded, InvariantViolation, ModulusMismatch
from src.galois_sim import (
    Dichotomy,
    FrobeniusSample,
    JointImageModel,
    ModelKind,
    charpoly_mod,
    check_det_coincidence,
    det_coincides,
    dimension_separation,
    exhaustive_allowed,
    fiber_pair_count,
    goursat_degrees,
    joint_image_order,
    obstruction_pair_check,
    projected_kernel_audit,
    sample_frobenius,
    sign_flipped,
    step3_congruence_experiment,
)
from src.modmath import FieldElement, det_mod
from src.symplectic import GroupSpec, GspElement, coset_elements, enumerate_sp, random_gsp_element


class TestModels(unittest.TestCase):
    def setUp(self):
        self.spec = GroupSpec(1, 5)

    def test_construction(self):
        graph = JointImageModel.graph(self.spec)
        self.assertIs(graph.kind, ModelKind.GRAPH)
        self.assertEqual(graph.u, GspElement.identity(self.spec))
        self.assertEqual(JointImageModel.twist(self.spec).signs, (1, -1))
        self.assertEqual(JointImageModel.product(self.spec).signs, (1,))

    def test_validation(self):
        with self.assertRaises(ModulusMismatch):
            JointImageModel.product(self.spec, GroupSpec(1, 7))
        with self.assertRaises(ValueError):
            JointImageModel(ModelKind.GRAPH, self.spec, spec_second=GroupSpec(2, 5))
        with self.assertRaises(ValueError):
            JointImageModel.graph(self.spec, c=0)
        with self.assertRaises(ValueError):
            JointImageModel.graph(self.spec, u=GspElement.identity(GroupSpec(2, 5)))

    def test_image_of(self):
        twist = JointImageModel.twist(self.spec)
        identity = GspElement.identity(self.spec)
        self.assertEqual(twist.image_of(identity, -1), GspElement.scalar(self.spec, -1))
        with self.assertRaises(ValueError):
            JointImageModel.graph(self.spec).image_of(identity, -1)
        with self.assertRaises(ValueError):
            JointImageModel.product(self.spec).image_of(identity)

    def test_membership(self):
        graph = JointImageModel.graph(self.spec)
        x = random_gsp_element(self.spec, 2, seed=1)
        self.assertTrue(graph.contains(x, x))
        self.assertFalse(graph.contains(x, x.scaled(-1)))
        self.assertTrue(JointImageModel.twist(self.spec).contains(x, x.scaled(-1)))
        y = random_gsp_element(self.spec, 2, seed=2)
        self.assertTrue(JointImageModel.product(self.spec).contains(x, y))
        self.assertFalse(JointImageModel.product(self.spec).contains(x, GspElement.identity(self.spec)))


class TestSampling(unittest.TestCase):
    def setUp(self):
        self.spec = GroupSpec(2, 7)

    def test_graph_with_identity_is_diagonal(self):
        sample = sample_frobenius(JointImageModel.graph(self.spec), 3, seed=9)
        self.assertEqual(sample.x, sample.y)
        self.assertEqual(sample.lam, 3)

    def test_multipliers_match(self):
        u = random_gsp_element(self.spec, 5, seed=3)
        for model in (JointImageModel.graph(self.spec, u), JointImageModel.twist(self.spec, u),
                      JointImageModel.product(self.spec)):
            for seed in range(5):
                sample = sample_frobenius(model, FieldElement(4, 7), seed=seed)
                self.assertEqual(sample.x.multiplier, 4)
                self.assertEqual(sample.y.multiplier, 4)
                self.assertTrue(model.contains(sample.x, sample.y))

    def test_deterministic(self):
        model = JointImageModel.product(self.spec)
        first = sample_frobenius(model, 2, seed=17)
        second = sample_frobenius(model, 2, seed=17)
        self.assertEqual(first.describe(), second.describe())

    def test_bad_residue(self):
        model = JointImageModel.graph(self.spec)
        with self.assertRaises(ValueError):
            sample_frobenius(model, 7)
        with self.assertRaises(ModulusMismatch):
            sample_frobenius(model, FieldElement(2, 5))

    def test_sample_rejects_unmatched_multipliers(self):
        x = GspElement.identity(self.spec)
        y = GspElement.scalar(self.spec, 3)
        with self.assertRaises(InvariantViolation):
            FrobeniusSample(x, y, FieldElement(1, 7))


class TestCharpolyInvariance(unittest.TestCase):
    def test_graph_preserves_charpoly(self):
        spec = GroupSpec(2, 5)
        model = JointImageModel.graph(spec, random_gsp_element(spec, 2, seed=8))
        for seed in range(10):
            sample = sample_frobenius(model, 1 + seed % 4, seed=seed)
            self.assertEqual(charpoly_mod(sample.x), charpoly_mod(sample.y))
            self.assertTrue(det_coincides(sample.x, sample.y))

    def test_twist_flips_eigenvalue_signs(self):
        spec = GroupSpec(2, 5)
        model = JointImageModel.twist(spec)
        x = random_gsp_element(spec, 3, seed=12)
        y = model.image_of(x, -1)
        self.assertEqual(charpoly_mod(y), sign_flipped(charpoly_mod(x), 5))

    def test_charpoly_of_identity(self):
        identity = GspElement.identity(GroupSpec(1, 5))
        # (T - 1)^2 = T^2 - 2T + 1
        self.assertEqual(charpoly_mod(identity), [1, 3, 1])


class TestDetCoincidence(unittest.TestCase):
    def setUp(self):
        self.spec = GroupSpec(1, 5)

    def test_graph_holds(self):
        """Conjugation preserves det(x - I)"""
        report = check_det_coincidence(JointImageModel.graph(self.spec), exhaustive=True)
        self.assertTrue(report.holds)
        self.assertIsNone(report.counterexample)
        self.assertEqual(report.total_pairs, 480)
        self.assertEqual(report.rate, 1)

    def test_graph_holds_for_any_conjugator(self):
        for seed in range(3):
            u = random_gsp_element(self.spec, 1 + seed, seed=seed)
            self.assertTrue(check_det_coincidence(JointImageModel.graph(self.spec, u), exhaustive=True).holds)

    def test_twist_counterexample(self):
        report = check_det_coincidence(JointImageModel.twist(self.spec), exhaustive=True)
        self.assertFalse(report.holds)
        self.assertEqual(report.total_pairs, 960)
        sample = report.counterexample
        self.assertEqual(sample.x, GspElement.identity(self.spec))
        self.assertEqual(sample.y, GspElement.scalar(self.spec, -1))
        self.assertEqual(sample.lam, 1)
        self.assertEqual(sample.epsilon, -1)

    def test_product_exact_fraction(self):
        """
        Per multiplier class mu the singular elements number 25 (mu = 1) or 30, so the
        violating pairs are 2 * 25 * 95 + 3 * 2 * 30 * 90 out of 4 * 120^2.
        """
        report = check_det_coincidence(JointImageModel.product(self.spec), exhaustive=True)
        self.assertFalse(report.holds)
        self.assertEqual(report.total_pairs, 57600)
        self.assertEqual(report.violating_pairs, 20950)
        self.assertEqual(report.violating_fraction, Fraction(419, 1152))
        sample = report.counterexample
        self.assertEqual(sample.x, GspElement.scalar(self.spec, -1))
        self.assertEqual(sample.y, GspElement.identity(self.spec))

    def test_default_mode_is_exhaustive_when_small(self):
        model = JointImageModel.graph(self.spec)
        self.assertTrue(exhaustive_allowed(model))
        self.assertTrue(check_det_coincidence(model).exhaustive)
        self.assertFalse(exhaustive_allowed(JointImageModel.graph(GroupSpec(2, 3))))

    def test_exhaustive_cap(self):
        with self.assertRaises(CapExceeded):
            check_det_coincidence(JointImageModel.product(GroupSpec(2, 3)), exhaustive=True)

    def test_sampled_mode(self):
        spec = GroupSpec(2, 7)
        graph = check_det_coincidence(JointImageModel.graph(spec), trials=500, seed=1, word_length=16)
        self.assertTrue(graph.holds)
        self.assertFalse(graph.exhaustive)
        self.assertEqual(graph.total_pairs, 500)

        first = check_det_coincidence(JointImageModel.product(spec), trials=2000, seed=5, word_length=16)
        second = check_det_coincidence(JointImageModel.product(spec), trials=2000, seed=5, word_length=16)
        self.assertEqual(first.violating_pairs, second.violating_pairs)
        self.assertEqual(first.counterexample.describe(), second.counterexample.describe())
        self.assertGreater(first.violating_pairs, 0)

    def test_unequal_dimensions_rejected(self):
        model = JointImageModel.product(GroupSpec(1, 3), GroupSpec(2, 3))
        with self.assertRaises(ValueError):
            check_det_coincidence(model)

    def test_trials_must_be_positive(self):
        with self.assertRaises(ValueError):
            check_det_coincidence(JointImageModel.graph(GroupSpec(2, 7)), trials=0)

    def test_default_trials_from_settings(self):
        with patch.object(settings, 'DEFAULT_TRIALS', 50):
            report = check_det_coincidence(JointImageModel.twist(GroupSpec(2, 7)), exhaustive=False, word_length=8)
        self.assertEqual(report.total_pairs, 50)


class TestKernelsAndGoursat(unittest.TestCase):
    def setUp(self):
        self.spec = GroupSpec(1, 5)

    def test_projected_kernel(self):
        graph = projected_kernel_audit(JointImageModel.graph(self.spec))
        self.assertEqual((graph.order, graph.contains_minus_identity, graph.is_sp_subgroup), (1, False, True))

        twist = projected_kernel_audit(JointImageModel.twist(self.spec))
        self.assertEqual((twist.order, twist.contains_minus_identity, twist.is_sp_subgroup), (2, True, True))

        product = projected_kernel_audit(JointImageModel.product(self.spec))
        self.assertEqual((product.order, product.contains_minus_identity, product.is_sp_subgroup), (120, True, True))

    def test_goursat(self):
        graph = goursat_degrees(JointImageModel.graph(self.spec))
        self.assertEqual((graph.ker_pi1_order, graph.ker_pi2_order), (1, 1))
        self.assertIs(graph.dichotomy, Dichotomy.EQUAL_FIELDS)
        self.assertIsNone(graph.within_c)

        twist = goursat_degrees(JointImageModel.twist(self.spec, c=2))
        self.assertEqual((twist.ker_pi1_order, twist.ker_pi2_order), (2, 2))
        self.assertIs(twist.dichotomy, Dichotomy.INDEX_TWO)
        self.assertTrue(twist.within_c)

        product = goursat_degrees(JointImageModel.product(self.spec, c=2))
        self.assertEqual((product.ker_pi1_order, product.ker_pi2_order), (120, 120))
        self.assertIs(product.dichotomy, Dichotomy.VIOLATED)
        self.assertFalse(product.within_c)

    def test_goursat_symmetric_under_conjugation(self):
        u = random_gsp_element(self.spec, 3, seed=21)
        for model in (JointImageModel.graph(self.spec, u), JointImageModel.twist(self.spec, u)):
            report = goursat_degrees(model)
            self.assertEqual(report.ker_pi1_order, report.ker_pi2_order)

    def test_obstruction_pair(self):
        product = obstruction_pair_check(JointImageModel.product(self.spec))
        self.assertTrue(product.member)
        self.assertTrue(product.violates)
        graph = obstruction_pair_check(JointImageModel.graph(self.spec))
        self.assertFalse(graph.member)
        self.assertTrue(graph.violates)

    def test_image_orders(self):
        self.assertEqual(joint_image_order(JointImageModel.graph(self.spec)), 480)
        self.assertEqual(joint_image_order(JointImageModel.twist(self.spec)), 960)
        self.assertEqual(joint_image_order(JointImageModel.product(self.spec)), 4 * 120 * 120)

    def test_fiber_counts(self):
        self.assertEqual(fiber_pair_count(JointImageModel.graph(self.spec), 2), 120)
        self.assertEqual(fiber_pair_count(JointImageModel.twist(self.spec), 2), 240)
        self.assertEqual(fiber_pair_count(JointImageModel.product(GroupSpec(1, 3)), 2), 24 * 24)

    def test_product_fiber_over_trivial_multiplier(self):
        """The product model at p = 1 mod 5 is all of Sp_2(F_5) x Sp_2(F_5)"""
        model = JointImageModel.product(self.spec)
        self.assertEqual(fiber_pair_count(model, 1), 120 * 120)
        sample = sample_frobenius(model, 1, seed=3)
        self.assertEqual(sample.lam, 1)
        self.assertTrue(model.contains(sample.x, sample.y))


class TestTwistCongruence(unittest.TestCase):
    def test_examples(self):
        """det(I - (-I)) = 2^(2g) is nonzero mod ell"""
        for g, ell in ((1, 5), (2, 7), (1, 3)):
            self.assertTrue(step3_congruence_experiment(JointImageModel.twist(GroupSpec(g, ell))))

    def test_explicit_genus_and_ell(self):
        model = JointImageModel.twist(GroupSpec(2, 7))
        self.assertTrue(step3_congruence_experiment(model, 2, 7))
        with self.assertRaises(ValueError):
            step3_congruence_experiment(model, 1, 7)
        with self.assertRaises(ValueError):
            step3_congruence_experiment(model, 2, 5)

    def test_requires_twist(self):
        with self.assertRaises(ValueError):
            step3_congruence_experiment(JointImageModel.graph(GroupSpec(1, 5)))


class TestDimensionSeparation(unittest.TestCase):
    def test_unequal_dimensions_separate(self):
        self.assertTrue(dimension_separation(JointImageModel.product(GroupSpec(1, 3), GroupSpec(2, 3))))

    def test_equal_dimensions_match(self):
        self.assertFalse(dimension_separation(JointImageModel.product(GroupSpec(1, 5))))


class TestSpotChecks(unittest.TestCase):
    def test_exhaustive_counts_match_direct_pair_scan(self):
        """Count violating product pairs of one class by brute force"""
        spec = GroupSpec(1, 3)
        coset = coset_elements(enumerate_sp(spec), 2)
        singular = det_mod(coset - np.eye(2, dtype=np.int64), 3) == 0
        violating = sum(int(a != b) for a in singular for b in singular)
        report = check_det_coincidence(JointImageModel.product(spec), exhaustive=True)
        first_class = coset_elements(enumerate_sp(spec), 1)
        singular_first = det_mod(first_class - np.eye(2, dtype=np.int64), 3) == 0
        violating += sum(int(a != b) for a in singular_first for b in singular_first)
        self.assertEqual(report.violating_pairs, violating)


if __name__ == '__main__':
    unittest.main()
