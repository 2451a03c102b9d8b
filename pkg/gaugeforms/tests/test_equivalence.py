import itertools

import numpy as np
from django.test import SimpleTestCase

from gaugeforms.builtins import builtin, twist_gauge
from gaugeforms.chart import make_chart
from gaugeforms.equivalence import (
    FULL,
    HALF_PERIOD,
    STRICT,
    GaugeMap,
    Group,
    SampledGauge,
    apply_gauge,
    check_group,
    cohomology_compare,
    construct_phase,
    decide_equivalence,
    gauge_phase,
    volume_form_reduction,
)
from gaugeforms.exceptions import (
    BadDimension,
    GridMismatch,
    NoSingleValuedPhase,
    NotClosed,
    NotInGroup,
    SingularGauge,
    VanishingVolumeForm,
)
from gaugeforms.expr import MatrixValuedField, parse_expression
from gaugeforms.symbol import from_canonical, validate

from .factories import random_gauge, random_symbol, rng


def field(texts):
    return MatrixValuedField.from_texts(texts)


def one_form(chart, *components):
    """Stack callables of the grid coordinates into a sampled 1-form."""
    x = chart.points.T
    return np.stack([np.broadcast_to(c(*x), (chart.size,)) for c in components], axis=1)


def zero(*x):
    return np.zeros_like(x[0])


# --------------------------
# Groups and gauge maps
# --------------------------
class GroupTests(SimpleTestCase):
    def test_properties(self):
        self.assertEqual(Group("gl").dim, 4)
        self.assertEqual(Group.SU.dim, 3)
        self.assertTrue(Group.SL.unimodular)
        self.assertFalse(Group.U.unimodular)
        self.assertTrue(Group.U.unitary)
        self.assertEqual(Group.GL.reduced, Group.SL)
        self.assertEqual(Group.U.reduced, Group.SU)

    def test_check_group(self):
        rotation = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]])
        check_group(rotation[None], "su")
        with self.assertRaises(NotInGroup):
            check_group(2 * rotation[None], "su")
        with self.assertRaises(NotInGroup):
            check_group(np.array([[[1.0, 1.0], [0.0, 1.0]]]), "u")
        with self.assertRaises(NotInGroup):
            check_group(np.zeros((1, 2, 2)), "gl")


class GaugeMapTests(SimpleTestCase):
    def setUp(self):
        self.chart = make_chart(3, 8)
        self.points = rng(31).uniform(0, 2 * np.pi, size=(10, 3))
        self.R1 = GaugeMap(field([["exp(i*x1)", "0.2*sin(x2)"], ["0", "2 + cos(x3)"]]))
        self.R2 = GaugeMap(field([["1", "0"], ["0.3*cos(x1)", "exp(-i*x3)"]]))

    def test_composition(self):
        composed = self.R1.compose(self.R2).sample(self.points, 3).values
        product = self.R1.sample(self.points, 3).values @ self.R2.sample(self.points, 3).values
        np.testing.assert_allclose(composed, product, atol=1e-12)

    def test_inverse(self):
        values = self.R1.compose(self.R1.inverse()).sample(self.points, 3).values
        np.testing.assert_allclose(values, np.broadcast_to(np.eye(2), values.shape), atol=1e-12)

    def test_composition_group(self):
        u = GaugeMap(field([["exp(i*x1)", "0"], ["0", "1"]]), "u")
        su = GaugeMap(MatrixValuedField.identity(), "su")
        self.assertEqual(u.compose(su).group, Group.U)
        self.assertEqual(u.compose(self.R1).group, Group.GL)

    def test_successive_gauges_compose(self):
        S = random_symbol(rng(32), self.chart)
        twice = apply_gauge(apply_gauge(S, self.R1), self.R2).sample(self.points)
        once = apply_gauge(S, self.R1.compose(self.R2)).sample(self.points)
        np.testing.assert_allclose(twice.E, once.E, atol=1e-10)
        np.testing.assert_allclose(twice.F, once.F, atol=1e-10)

    def test_symbolic_and_sampled_action_agree(self):
        S = random_symbol(rng(33), self.chart)
        symbolic = apply_gauge(S, self.R1).sample()
        sampled = apply_gauge(S.sample(), self.R1)
        np.testing.assert_allclose(sampled.E, symbolic.E, atol=1e-12)
        np.testing.assert_allclose(sampled.dE, symbolic.dE, atol=1e-11)
        np.testing.assert_allclose(sampled.F, symbolic.F, atol=1e-11)

    def test_singular_gauge(self):
        degenerate = GaugeMap(MatrixValuedField.diagonal(parse_expression("sin(x1)"), 1))
        with self.assertRaises(SingularGauge):
            apply_gauge(builtin("dirac3", 8), degenerate)

    def test_validate(self):
        phase = field([["exp(i*x1)", "0"], ["0", "1"]])
        GaugeMap(phase, "u").validate(self.chart)
        with self.assertRaises(NotInGroup):
            GaugeMap(phase, "su").validate(self.chart)

    def test_gauge_phase(self):
        R = GaugeMap(field([["exp(i*(x1 - 2*x3))", "0"], ["0", "exp(i*sin(x2))"]]))
        phase = gauge_phase(R, self.chart)
        self.assertEqual(phase.winding, (1, 0, -2))
        x2 = self.chart.points[:, 1]
        np.testing.assert_allclose(phase.one_form[:, 0], 0.5, atol=1e-12)
        np.testing.assert_allclose(phase.one_form[:, 1], 0.5 * np.cos(x2), atol=1e-12)
        np.testing.assert_allclose(phase.one_form[:, 2], -1.0, atol=1e-12)


class SampledGaugeTests(SimpleTestCase):
    def setUp(self):
        self.chart = make_chart(3, 16)
        x2 = self.chart.points[:, 1]
        self.values = np.zeros((self.chart.size, 2, 2), dtype=complex)
        self.values[:, 0, 0] = np.exp(1j * x2)
        self.values[:, 1, 1] = 1.0

    def test_spectral_derivatives(self):
        gauge = SampledGauge.from_samples(self.chart, self.values, "u")
        np.testing.assert_allclose(gauge.grads[:, 1, 0, 0], 1j * self.values[:, 0, 0], atol=1e-10)
        np.testing.assert_allclose(gauge.grads[:, [0, 2]], 0, atol=1e-10)
        gauge.validate()

    def test_lookup_by_points(self):
        gauge = SampledGauge.from_samples(self.chart, self.values)
        picked = gauge.sample(self.chart.points[[4, 40]])
        np.testing.assert_allclose(picked.values, self.values[[4, 40]])

    def test_with_phase(self):
        gauge = SampledGauge.from_samples(self.chart, self.values)
        x1 = self.chart.points[:, 0]
        omega = one_form(self.chart, lambda *x: np.cos(x[0]), zero, zero)
        phase = construct_phase(omega, self.chart)
        phased = gauge.with_phase(phase)
        factor = np.exp(1j * np.sin(x1))
        np.testing.assert_allclose(phased.values[:, 0, 0], factor * self.values[:, 0, 0],
                                   atol=1e-10)
        np.testing.assert_allclose(phased.grads[:, 0, 1, 1], 1j * np.cos(x1) * factor,
                                   atol=1e-10)

    def test_coarse(self):
        gauge = SampledGauge.from_samples(self.chart, self.values)
        self.assertEqual(gauge.coarse(4).shape, (64, 2, 2))


# --------------------------
# Cohomology and phases
# --------------------------
class CohomologyTests(SimpleTestCase):
    def setUp(self):
        self.chart = make_chart(3, 16)
        self.zero = np.zeros((self.chart.size, 3))

    def test_half_period_shift(self):
        shifted = one_form(self.chart, zero, zero, lambda *x: 0.5 + 0 * x[0])
        strict = cohomology_compare(self.zero, shifted, self.chart, STRICT)
        self.assertFalse(strict.same_class)
        np.testing.assert_allclose(strict.periods, [0, 0, np.pi], atol=1e-12)
        self.assertTrue(cohomology_compare(self.zero, shifted, self.chart, HALF_PERIOD).same_class)

    def test_exact_form_is_trivial(self):
        exact = one_form(self.chart, lambda *x: np.sin(x[0]), zero, zero)
        self.assertTrue(cohomology_compare(self.zero, exact, self.chart, STRICT).same_class)

    def test_full_period_differs_strictly(self):
        shifted = one_form(self.chart, lambda *x: 1 + 0 * x[0], zero, zero)
        self.assertFalse(cohomology_compare(self.zero, shifted, self.chart, STRICT).same_class)
        self.assertTrue(cohomology_compare(self.zero, shifted, self.chart, HALF_PERIOD).same_class)

    def test_not_closed(self):
        twisted = one_form(self.chart, zero, lambda *x: np.cos(x[0]), zero)
        with self.assertRaises(NotClosed):
            cohomology_compare(self.zero, twisted, self.chart)

    def test_phase_of_exact_form(self):
        phase = construct_phase(one_form(self.chart, lambda *x: np.cos(x[0]), zero, zero),
                                self.chart)
        self.assertEqual(phase.winding, (0, 0, 0))
        np.testing.assert_allclose(phase.values, np.sin(self.chart.points[:, 0]), atol=1e-10)

    def test_phase_with_winding(self):
        phase = construct_phase(one_form(self.chart, lambda *x: 1 + 0 * x[0], zero, zero),
                                self.chart)
        self.assertEqual(phase.winding, (1, 0, 0))
        np.testing.assert_allclose(phase.exp(), np.exp(1j * self.chart.points[:, 0]), atol=1e-10)
        np.testing.assert_allclose(phase.gradient[:, 0], 1.0, atol=1e-10)

    def test_half_period_has_no_phase(self):
        half = one_form(self.chart, lambda *x: 0.5 + 0 * x[0], zero, zero)
        with self.assertRaises(NoSingleValuedPhase) as caught:
            construct_phase(half, self.chart)
        np.testing.assert_allclose(caught.exception.periods, [np.pi, 0, 0], atol=1e-12)


# --------------------------
# Equivalence decision on built-in symbols
# --------------------------
class BuiltinEquivalenceTests(SimpleTestCase):
    def setUp(self):
        self.dirac = builtin("dirac3", 16)
        self.twisted = builtin("twisted3", 16)

    def test_unitary_principal(self):
        report = decide_equivalence(self.dirac, self.twisted, "u")
        self.assertTrue(report.equivalent)
        self.assertEqual(report.monodromy, (1, 1, -1))
        self.assertTrue(report.lift_exists)
        self.assertEqual(report.lattice_mode, HALF_PERIOD)
        transformed = apply_gauge(self.dirac.sample(), report.gauge)
        np.testing.assert_allclose(transformed.E, self.twisted.sample().E, atol=1e-8)

    def test_special_unitary_fails_at_monodromy(self):
        report = decide_equivalence(self.dirac, self.twisted, "su")
        self.assertFalse(report.equivalent)
        self.assertEqual(report.failed_stage, "monodromy")
        self.assertFalse(report.lift_exists)
        self.assertIsNone(report.gauge)

    def test_unitary_full_fails_at_electric_potential(self):
        report = decide_equivalence(self.dirac, self.twisted, "u", FULL)
        self.assertEqual(report.failed_stage, "electric_potential")
        np.testing.assert_allclose(report.periods, [0, 0, np.pi], atol=1e-8)
        self.assertAlmostEqual(report.residuals["electric_potential"], 0.5, places=8)

    def test_strict_lattice_rejects_the_half_period(self):
        report = decide_equivalence(self.dirac, self.twisted, "u", FULL, lattice_mode=STRICT)
        self.assertEqual(report.failed_stage, "potential_class")

    def test_gauged_dirac_is_fully_equivalent(self):
        gauged = apply_gauge(self.dirac, twist_gauge((0, 0, 1)))
        report = decide_equivalence(self.dirac, gauged, "u", FULL)
        self.assertTrue(report.equivalent, report.stages)
        self.assertEqual(report.phase_winding, (0, 0, 0))
        self.assertLess(report.residuals["F"], 1e-8)

    def test_spin_structures(self):
        for a in "01":
            for b in "01":
                for c in "01":
                    name = f"twisted3_k{a}{b}{c}"
                    other = builtin(name, 16)
                    trivial = name == "twisted3_k000"
                    with self.subTest(name=name):
                        self.assertTrue(decide_equivalence(self.dirac, other, "u").equivalent)
                        su = decide_equivalence(self.dirac, other, "su")
                        self.assertEqual(su.equivalent, trivial)
                        expected = tuple(-1 if d == "1" else 1 for d in (a, b, c))
                        self.assertEqual(su.monodromy, expected)

    def test_reflexive_and_symmetric(self):
        self.assertTrue(decide_equivalence(self.dirac, self.dirac, "su", FULL).equivalent)
        self.assertTrue(decide_equivalence(self.twisted, self.dirac, "u").equivalent)
        weyl = builtin("weyl4", 8)
        self.assertTrue(decide_equivalence(weyl, weyl, "sl", FULL).equivalent)

    def test_four_dimensional_twist(self):
        weyl, twisted = builtin("weyl4", 8), builtin("weyl4_twisted", 8)
        self.assertTrue(decide_equivalence(weyl, twisted, "gl").equivalent)
        report = decide_equivalence(weyl, twisted, "sl")
        self.assertEqual(report.failed_stage, "monodromy")
        self.assertEqual(report.monodromy, (1, 1, -1, 1))

    def test_charges_stage(self):
        E = [-self.dirac.E[0], self.dirac.E[1], self.dirac.E[2]]
        reflected = from_canonical(E, self.dirac.F, self.dirac.chart)
        report = decide_equivalence(self.dirac, reflected, "u")
        self.assertEqual(report.failed_stage, "charges")
        self.assertEqual(report.charges["c_top"], (1, -1))

    def test_metric_stage(self):
        E = [e.scale(2) for e in self.dirac.E]
        scaled = from_canonical(E, self.dirac.F, self.dirac.chart)
        self.assertEqual(decide_equivalence(self.dirac, scaled, "u").failed_stage, "metric")

    def test_input_checks(self):
        with self.assertRaises(GridMismatch):
            decide_equivalence(self.dirac, builtin("dirac3", 8), "u")
        with self.assertRaises(BadDimension):
            decide_equivalence(self.dirac, self.twisted, "gl")


class TwistedPairAtFineResolutionTests(SimpleTestCase):
    def setUp(self):
        self.dirac = builtin("dirac3", 32)
        self.twisted = builtin("twisted3", 32)

    def test_unitary_gauge_is_the_twist(self):
        report = decide_equivalence(self.dirac, self.twisted, "u")
        self.assertTrue(report.equivalent, report.stages)
        self.assertLess(report.residuals["E"], 1e-8)
        x3 = self.dirac.chart.points[:, 2]
        expected = np.zeros((self.dirac.chart.size, 2, 2), dtype=complex)
        expected[:, 0, 0] = np.exp(-1j * x3)
        expected[:, 1, 1] = 1.0
        overlap = np.sum(report.gauge.values * np.conj(expected))
        aligned = report.gauge.values * np.conj(overlap / abs(overlap))
        np.testing.assert_allclose(aligned, expected, rtol=0, atol=1e-7)

    def test_special_unitary_signs(self):
        report = decide_equivalence(self.dirac, self.twisted, "su")
        self.assertFalse(report.equivalent)
        self.assertEqual(report.failed_stage, "monodromy")
        self.assertEqual(report.monodromy, (1, 1, -1))


class SpinStructureFamilyTests(SimpleTestCase):
    def setUp(self):
        self.family = {
            kappa: builtin("twisted3_k{}{}{}".format(*kappa), 16)
            for kappa in itertools.product((0, 1), repeat=3)
        }

    def test_sign_patterns_cover_every_spin_structure(self):
        reference = self.family[(0, 0, 0)]
        patterns = {
            decide_equivalence(reference, other, "su").monodromy
            for other in self.family.values()
        }
        self.assertEqual(patterns, set(itertools.product((1, -1), repeat=3)))

    def test_pairwise(self):
        pairs = list(itertools.combinations(sorted(self.family), 2))
        self.assertEqual(len(pairs), 28)
        for kappa, kappa_tilde in pairs:
            S, S_tilde = self.family[kappa], self.family[kappa_tilde]
            with self.subTest(kappa=kappa, kappa_tilde=kappa_tilde):
                self.assertTrue(decide_equivalence(S, S_tilde, "u").equivalent)
                su = decide_equivalence(S, S_tilde, "su")
                self.assertFalse(su.equivalent)
                expected = tuple(-1 if a != b else 1 for a, b in zip(kappa, kappa_tilde))
                self.assertEqual(su.monodromy, expected)


# --------------------------
# Round trips through random gauges
# --------------------------
class RandomRoundTripTests(SimpleTestCase):
    charts = {3: make_chart(3, 16), 4: make_chart(4, 16)}

    def round_trip(self, group, mode, seed, winding=None, amplitude=0.02):
        generator = rng(seed)
        chart = self.charts[Group(group).dim]
        S = random_symbol(generator, chart).sample()
        R = random_gauge(generator, group, chart.dim, amplitude=amplitude, winding=winding)
        S_tilde = apply_gauge(S, GaugeMap(R, group))
        return decide_equivalence(S, S_tilde, group, mode)

    def test_principal(self):
        for group in ("gl", "sl", "u", "su"):
            for seed in range(201, 204):
                with self.subTest(group=group, seed=seed):
                    report = self.round_trip(group, "principal", seed, amplitude=0.1)
                    self.assertTrue(report.equivalent, report.stages)
                    self.assertEqual(report.monodromy, (1,) * Group(group).dim)
                    self.assertLess(report.residuals["E"], 1e-7)

    def test_full(self):
        for seed, group in enumerate(("gl", "sl", "u", "su"), start=211):
            with self.subTest(group=group):
                report = self.round_trip(group, FULL, seed)
                self.assertTrue(report.equivalent, report.stages)
                self.assertLess(report.residuals["E"], 1e-7)
                self.assertLess(report.residuals["F"], 1e-7)

    def test_full_with_winding_phase(self):
        report = self.round_trip("u", FULL, 221, winding=(1, 0, 0))
        self.assertTrue(report.equivalent, report.stages)
        self.assertEqual(report.phase_winding, (1, 0, 0))

    def test_conformal_factor(self):
        report = self.round_trip("gl", "principal", 231)
        low, high = report.conformal_factor
        self.assertGreater(low, 0)
        self.assertLess(report.residuals["conformal"], 1e-8)


class GaugeInverseTests(SimpleTestCase):
    charts = {3: make_chart(3, 12), 4: make_chart(4, 8)}
    pairs = 10

    def test_inverse_gauge_restores_the_symbol(self):
        for seed_base, group in enumerate(("gl", "sl", "u", "su")):
            chart = self.charts[Group(group).dim]
            for seed in range(300 + 100 * seed_base, 300 + 100 * seed_base + self.pairs):
                generator = rng(seed)
                S = random_symbol(generator, chart).sample()
                gauge = GaugeMap(random_gauge(generator, group, chart.dim, amplitude=0.15), group)
                with self.subTest(group=group, seed=seed):
                    gauged = apply_gauge(S, gauge)
                    self.assertTrue(validate(gauged).valid, validate(gauged).problems())
                    restored = apply_gauge(gauged, gauge.inverse())
                    np.testing.assert_allclose(restored.E, S.E, rtol=0, atol=1e-9)
                    np.testing.assert_allclose(restored.dE, S.dE, rtol=0, atol=1e-9)
                    np.testing.assert_allclose(restored.F, S.F, rtol=0, atol=1e-9)

    def test_symbolic_gauge_on_a_four_dimensional_grid(self):
        chart = make_chart(4, 12)
        generator = rng(241)
        S = random_symbol(generator, chart)
        gauge = GaugeMap(random_gauge(generator, "gl", 4, amplitude=0.15), "gl")
        symbolic = apply_gauge(S, gauge).sample()
        sampled = apply_gauge(S.sample(), gauge)
        self.assertEqual(symbolic.dE.shape, (12**4, 4, 4, 2, 2))
        self.assertTrue(validate(symbolic).valid)
        np.testing.assert_allclose(symbolic.E, sampled.E, rtol=0, atol=1e-10)
        np.testing.assert_allclose(symbolic.dE, sampled.dE, rtol=0, atol=1e-9)
        np.testing.assert_allclose(symbolic.F, sampled.F, rtol=0, atol=1e-9)



# --------------------------
# Volume form reduction
# --------------------------
class VolumeFormTests(SimpleTestCase):
    def setUp(self):
        self.dirac = builtin("dirac3", 16)
        self.gauged = apply_gauge(self.dirac, twist_gauge((0, 0, 1)))
        self.c = parse_expression("exp(i*x3)")

    def test_reduce_second(self):
        S, S_tilde = volume_form_reduction(self.dirac, self.c, self.gauged, 1)
        self.assertIs(S, self.dirac)
        np.testing.assert_allclose(S_tilde.sample().E, self.dirac.sample().E, atol=1e-12)
        self.assertTrue(decide_equivalence(S, S_tilde, "su", FULL).equivalent)

    def test_reduce_first(self):
        S, S_tilde = volume_form_reduction(self.dirac, self.c, self.gauged, 1, reduce="first")
        self.assertIs(S_tilde, self.gauged)
        self.assertTrue(decide_equivalence(S, S_tilde, "su", FULL).equivalent)

    def test_vanishing_volume_form(self):
        with self.assertRaises(VanishingVolumeForm):
            volume_form_reduction(self.dirac, parse_expression("sin(x1)"), self.gauged, 1)

    def test_unknown_side(self):
        with self.assertRaises(ValueError):
            volume_form_reduction(self.dirac, self.c, self.gauged, 1, reduce="both")
