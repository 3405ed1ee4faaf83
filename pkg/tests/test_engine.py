import math
import warnings

import numpy as np
import pytest

from givlab import arrow, engine
from givlab.engine import (
    GivSystem,
    VariableSpec,
    direct_probability,
    embed_pair,
    indirect_probability,
    interference_cross_term,
    interference_deviation,
    make_rng,
    measure,
    orthogonality_defect,
    restricted_born,
    rotation_angles,
    sample_counts,
)
from givlab.errors import (
    AngleOutOfRange,
    IndexOutOfRange,
    NotNormalized,
    ProbabilityOutOfRange,
    SameVariable,
    SingularAngle,
    UnknownVariable,
)
from givlab.hilbert import StateVector, is_orthonormal_set

COS2 = arrow.cosine_squared()
LIN = arrow.linear()
QUAD = arrow.quadratic()


def rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def iso(theta, **dirs):
    return arrow.build_arrow_system(arrow.ArrowConfig.uniform({"A": 0.0, "B": theta, **dirs}))


def compatible_system():
    vs = [VariableSpec("A", ("1", "2")), VariableSpec("B", ("1", "2"))]
    return GivSystem(vs, {("A", "B"): np.eye(2)})


class TestEmbedPair:
    @pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 2, 2.0, math.pi])
    def test_isotropic_gives_rotation_by_half_angle(self, theta):
        m = embed_pair(COS2, COS2, theta, theta).matrix
        assert np.allclose(m, rot(theta / 2), atol=1e-15)

    @pytest.mark.parametrize("f", [LIN, QUAD, COS2])
    def test_zero_angle_is_identity(self, f):
        assert np.allclose(embed_pair(f, LIN, 0.0, 0.0).matrix, np.eye(2), atol=1e-15)

    def test_mixed_functions(self):
        m = embed_pair(COS2, LIN, math.pi / 3, math.pi / 3).matrix
        expected = np.array([[math.sqrt(0.75), -math.sqrt(1 / 3)], [math.sqrt(0.25), math.sqrt(2 / 3)]])
        assert np.allclose(m, expected, atol=1e-15)

    def test_out_of_range(self):
        bad = lambda t: 1.5  # noqa: E731
        with pytest.raises(ProbabilityOutOfRange):
            embed_pair(bad, COS2, 0.3, 0.3)
        with pytest.raises(AngleOutOfRange):
            embed_pair(COS2, COS2, -0.5, 0.3)

    def test_all_positive_convention_breaks_orthogonality(self):
        m = embed_pair(COS2, COS2, 1.0, 1.0, minus_sign=False).matrix
        cols = [StateVector("A", m[:, k]) for k in range(2)]
        assert not is_orthonormal_set(cols)[0]


class TestOrthogonalityDefect:
    @pytest.mark.parametrize("f", [LIN, QUAD, COS2])
    def test_symmetric_is_zero(self, f):
        for t in np.linspace(0, math.pi, 19):
            assert orthogonality_defect(f, f, t, t) == 0.0

    def test_zero_angles(self):
        assert orthogonality_defect(QUAD, LIN, 0.0, 0.0) == 0.0

    def test_asymmetric_value(self):
        # sqrt(1/4) sqrt(2/3) - sqrt(1/3) sqrt(3/4) = sqrt(1/6) - 1/2
        oracle = math.sqrt(1 / 6) - 0.5
        got = orthogonality_defect(COS2, LIN, math.pi / 3, math.pi / 3)
        assert got == pytest.approx(oracle, abs=1e-15)
        assert got == pytest.approx(-0.0918, abs=1e-3)

    @pytest.mark.parametrize("fp,fm", [(COS2, LIN), (LIN, QUAD), (QUAD, COS2), (LIN, LIN)])
    def test_matches_column_inner_product(self, fp, fm):
        for t in np.linspace(0, math.pi, 13):
            m = embed_pair(fp, fm, t, t).matrix
            inner = np.vdot(m[:, 1], m[:, 0]).real
            assert orthogonality_defect(fp, fm, t, t) == pytest.approx(inner, abs=1e-15)


class TestRotationAngles:
    def test_cos2_gives_half_angle(self):
        for t in np.linspace(0, 3.0, 7):
            ap, am = rotation_angles(COS2, COS2, t)
            assert ap == pytest.approx(t / 2, abs=1e-15) and am == pytest.approx(t / 2, abs=1e-15)

    def test_linear_and_quadratic(self):
        assert rotation_angles(LIN, LIN, math.pi / 2)[0] == pytest.approx(math.pi / 4, abs=1e-15)
        # arctan(sqrt(1/4) / sqrt(3/4)) = pi/6
        assert rotation_angles(QUAD, QUAD, math.pi / 2)[0] == pytest.approx(math.pi / 6, abs=1e-15)

    def test_singular_angle_is_flagged_not_fatal(self):
        with pytest.warns(SingularAngle):
            ap, am = rotation_angles(COS2, LIN, math.pi)
        assert ap == math.pi / 2 and am == math.pi / 2


class TestGivSystem:
    def test_eigenstate_components_are_embedding_columns(self):
        s = iso(1.1)
        b1 = s.eigenstate("B", 1)
        assert np.array_equal(b1.component("A").components, s.embedding("A", "B")[:, 1])
        assert np.array_equal(b1.component("B").components, [0, 1])
        assert b1.kind == "eigenstate"

    def test_missing_reverse_of_unitary_is_inferred(self):
        vs = [VariableSpec("A", ("+", "-")), VariableSpec("B", ("+", "-"))]
        s = GivSystem(vs, {("A", "B"): rot(0.4)})
        assert np.allclose(s.embedding("B", "A"), rot(-0.4))

    def test_missing_reverse_of_non_unitary_is_an_error(self):
        vs = [VariableSpec("A", ("+", "-")), VariableSpec("B", ("+", "-"))]
        m = embed_pair(COS2, LIN, 1.0, 1.0).matrix
        with pytest.raises(ValueError):
            GivSystem(vs, {("A", "B"): m})

    def test_columns_must_be_unit_norm(self):
        vs = [VariableSpec("A", ("+", "-")), VariableSpec("B", ("+", "-"))]
        with pytest.raises(NotNormalized):
            GivSystem(vs, {("A", "B"): 2 * np.eye(2)})

    def test_variable_spec_validation(self):
        with pytest.raises(ValueError):
            VariableSpec("A", ("x", "x"))
        with pytest.raises(ValueError):
            VariableSpec("A", ("x",))

    def test_explicit_state(self):
        s = iso(1.0)
        st = s.state({"A": [1, 1], "B": [1, 0]})
        assert restricted_born(st, "A", 0) == pytest.approx(0.5)
        with pytest.raises(UnknownVariable):
            s.state({"A": [1, 0]})


class TestRestrictedBorn:
    def test_certainty(self):
        s = iso(1.0)
        a1 = s.eigenstate("A", 0)
        assert restricted_born(a1, "A", 0) == 1.0
        assert restricted_born(a1, "A", 1) == 0.0

    def test_arrow_value(self):
        s = iso(math.pi / 3)
        assert restricted_born(s.eigenstate("B", 0), "A", 0) == pytest.approx(0.75, abs=1e-15)

    def test_errors(self):
        s = iso(1.0)
        with pytest.raises(UnknownVariable):
            restricted_born(s.eigenstate("A", 0), "Z", 0)
        with pytest.raises(IndexOutOfRange):
            restricted_born(s.eigenstate("A", 0), "A", 2)


class TestMeasure:
    def test_eigenstate_measurement_is_certain(self):
        s = iso(1.0)
        a = s.eigenstate("A", 0)
        rng = make_rng(1)
        for _ in range(50):
            k, post = measure(a, "A", rng)
            assert k == 0 and post.eigen == ("A", 0)

    def test_repeat_measurement(self):
        s = iso(1.3)
        rng = make_rng(3)
        st = arrow.prepare(s, 0.7)
        for _ in range(200):
            k, post = measure(st, "B", rng)
            k2, _ = measure(post, "B", rng)
            assert k2 == k

    def test_collapse_updates_every_space(self):
        s = iso(1.3)
        k, post = measure(s.eigenstate("A", 0), "B", make_rng(5))
        assert np.array_equal(post.component("A").components, s.embedding("A", "B")[:, k])

    def test_binomial_frequency(self):
        s = iso(math.pi / 2)
        n = 100_000
        counts = sample_counts(s.eigenstate("A", 0), "B", n, make_rng(42))
        sigma = math.sqrt(0.25 / n)
        assert abs(counts[0] / n - 0.5) <= 3 * sigma

    def test_sample_counts_matches_repeated_measure(self):
        s = iso(0.9)
        st = arrow.prepare(s, 2.0)
        counts = sample_counts(st, "A", 500, make_rng(11, stream=2))
        rng = make_rng(11, stream=2)
        manual = np.bincount([measure(st, "A", rng)[0] for _ in range(500)], minlength=2)
        assert np.array_equal(counts, manual)

    def test_streams_differ(self):
        a = make_rng(7, 0).random(4)
        b = make_rng(7, 1).random(4)
        assert not np.array_equal(a, b)
        assert np.array_equal(a, make_rng(7, 0).random(4))


class TestInterference:
    def test_direct_probabilities(self):
        s = iso(math.pi / 3)
        assert direct_probability(s.eigenstate("A", 0), "A", 1) == 0.0
        assert direct_probability(s.eigenstate("B", 0), "A", 0) == pytest.approx(0.75, abs=1e-15)

    def test_indirect_closed_form(self):
        s = iso(math.pi / 2)
        a1 = s.eigenstate("A", 0)
        # 2 sin^2(t/2) cos^2(t/2) at t = pi/2
        assert indirect_probability(a1, "B", "A", 1) == pytest.approx(0.5, abs=1e-15)
        assert interference_deviation(a1, "B", "A", 1) == pytest.approx(-0.5, abs=1e-15)

    def test_generic_incompatible_pair_interferes(self):
        cfg = arrow.ArrowConfig(
            {"A": 0.0, "B": 0.8},
            {"A": (LIN, QUAD), "B": (COS2, LIN)},
            "none",
        )
        s = arrow.build_arrow_system(cfg)
        assert indirect_probability(s.eigenstate("A", 0), "B", "A", 1) > 0
        assert interference_deviation(s.eigenstate("A", 0), "B", "A", 1) < 0

    def test_compatible_system_has_no_interference(self):
        s = compatible_system()
        for i in range(2):
            st = s.eigenstate("A", i)
            for k in range(2):
                assert indirect_probability(st, "B", "A", k) == direct_probability(st, "A", k)
                assert interference_deviation(st, "B", "A", k) == 0.0
        assert s.compatible("A", "B")

    def test_same_variable_refused(self):
        s = iso(1.0)
        with pytest.raises(SameVariable):
            indirect_probability(s.eigenstate("A", 0), "A", "A", 0)

    @pytest.mark.parametrize("phi", np.linspace(0, math.pi, 7)[:-1])
    @pytest.mark.parametrize("theta", np.linspace(0.1, 3.0, 5))
    def test_deviation_equals_hand_expanded_cross_term(self, phi, theta):
        s = iso(theta)
        st = arrow.prepare(s, phi)
        r1 = math.cos(theta / 2) * math.cos((phi - theta) / 2)
        r2 = -math.sin(theta / 2) * math.sin((phi - theta) / 2)
        dev = interference_deviation(st, "B", "A", 0)
        assert dev == pytest.approx(2 * r1 * r2, abs=1e-12)
        assert interference_cross_term(st, "B", "A", 0) == pytest.approx(2 * r1 * r2, abs=1e-12)


class TestUncertainty:
    def test_incompatible_pair_has_no_joint_value_state(self):
        s = iso(1.0, C=2.2)
        assert engine.joint_certainty_witnesses(s, "A", "B") == []
        assert not s.compatible("A", "B")

    def test_compatible_pair_has_joint_value_states(self):
        s = compatible_system()
        assert len(engine.joint_certainty_witnesses(s, "A", "B")) == 4


def test_outcome_distribution_sums_to_one():
    s = iso(1.2, C=2.5)
    for t in np.linspace(0, 2 * math.pi, 37):
        st = arrow.prepare(s, t)
        for v in s.ids:
            assert abs(engine.outcome_distribution(st, v).sum() - 1) <= 1e-10


def test_singular_angle_warning_uses_category():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        engine.rotation_angle(LIN, math.pi)
    assert rec and issubclass(rec[0].category, SingularAngle)
