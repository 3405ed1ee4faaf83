import math

import numpy as np
import pytest
from scipy.linalg import expm

from givlab import arrow
from givlab.arrow import (
    ArrowConfig,
    build_arrow_system,
    c2_closure_defect,
    composition_defect,
    isotropy_scan,
    prepare,
    sample_frequencies,
    spin_half_reference,
)
from givlab.engine import restricted_born
from givlab.errors import AngleOutOfRange, ConstraintViolation, DegenerateDirections, UnknownVariable

COS2 = arrow.cosine_squared()
LIN = arrow.linear()
QUAD = arrow.quadratic()
SY = np.array([[0, -1j], [1j, 0]])


def same_up_to_phase(u, v, tol=1e-12):
    return abs(abs(np.vdot(u, v)) - 1.0) <= tol


class TestProbabilityFunctions:
    @pytest.mark.parametrize("f", [LIN, QUAD, COS2])
    def test_endpoints(self, f):
        assert f(0.0) == pytest.approx(1.0, abs=1e-15)
        assert f(math.pi) == pytest.approx(0.0, abs=1e-15)

    def test_values(self):
        assert LIN(math.pi / 3) == pytest.approx(2 / 3)
        assert QUAD(math.pi / 2) == pytest.approx(0.75)
        assert COS2(math.pi / 2) == pytest.approx(0.5)

    def test_custom_validation(self):
        with pytest.raises(ValueError):
            arrow.custom("bad", lambda t: 0.5)
        ok = arrow.custom("half-linear", lambda t: 1 - t / math.pi)
        assert ok(math.pi / 2) == pytest.approx(0.5)

    def test_named_function(self):
        assert arrow.named_function("linear") == LIN
        with pytest.raises(ValueError):
            arrow.named_function("cubic")


class TestClosure:
    def test_linear_and_cos2_close(self):
        assert c2_closure_defect(LIN) <= 1e-12
        assert c2_closure_defect(COS2) <= 1e-12

    def test_quadratic_fails_by_half_at_quarter_turn(self):
        # f(pi/2) + f(pi/2) - 1 = 2 * 3/4 - 1
        assert abs(QUAD(math.pi / 2) * 2 - 1) == pytest.approx(0.5, abs=1e-12)
        assert c2_closure_defect(QUAD) == pytest.approx(0.5, abs=1e-12)


class TestComposition:
    def test_cos2_is_additive(self):
        ts = np.linspace(0, math.pi, 13)
        for t1 in ts:
            for t2 in ts:
                if t1 + t2 <= math.pi:
                    assert composition_defect(COS2, t1, t2) <= 1e-12

    def test_linear_is_not_additive(self):
        # atan(sqrt(1/3)) doubled is pi/3, but the half turn sits at pi/4
        w = arrow.hilbert_angle(LIN, math.pi / 4)
        w2 = arrow.hilbert_angle(LIN, math.pi / 2)
        assert abs(2 * w - w2) > 1e-2
        assert composition_defect(LIN, math.pi / 4, math.pi / 4) > 1e-2

    def test_range(self):
        with pytest.raises(AngleOutOfRange):
            composition_defect(COS2, 2.0, 2.0)

    def test_scan_picks_cos2(self):
        rows = {r.name: r for r in isotropy_scan([LIN, QUAD, COS2], grid=31)}
        assert rows["cosine_squared"].passes
        assert not rows["linear"].passes and not rows["quadratic"].passes
        assert rows["linear"].max_closure_defect <= 1e-12
        assert rows["quadratic"].max_composition_defect > 1e-2


class TestSpinHalf:
    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 9))
    def test_reference_matches_matrix_exponential(self, theta):
        up = np.array([1.0, 0.0])
        p = abs(up @ expm(-1j * theta * SY / 2) @ up) ** 2
        assert spin_half_reference(theta) == pytest.approx(p, abs=1e-14)

    def test_isotropic_arrow_matches_reference(self):
        for t in np.linspace(0, math.pi, 181)[1:-1]:
            s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": t}))
            p = restricted_born(s.eigenstate("A", 0), "B", 0)
            assert abs(p - spin_half_reference(t)) <= 1e-12


class TestConfig:
    def test_c2_spacetime_requires_equal_pair(self):
        with pytest.raises(ConstraintViolation):
            ArrowConfig({"A": 0.0, "B": 1.0}, {"A": (LIN, COS2), "B": (LIN, LIN)}, "c2_spacetime")

    def test_isotropic_requires_shared_function(self):
        with pytest.raises(ConstraintViolation):
            ArrowConfig({"A": 0.0, "B": 1.0}, {"A": (LIN, LIN), "B": (COS2, COS2)}, "isotropic")

    def test_c2_spacetime_requires_closure(self):
        with pytest.raises(ConstraintViolation, match="pi - t"):
            ArrowConfig.uniform({"A": 0.0, "B": 1.0}, f=QUAD, level="c2_spacetime")
        ArrowConfig.uniform({"A": 0.0, "B": 1.0}, f=LIN, level="c2_spacetime")

    def test_isotropic_requires_cos2(self):
        with pytest.raises(ConstraintViolation, match="additively"):
            ArrowConfig.uniform({"A": 0.0, "B": 1.0}, f=LIN, level="isotropic")

    def test_none_level_accepts_anything(self):
        cfg = ArrowConfig({"A": 0.0, "B": 1.0}, {"A": (LIN, COS2), "B": (QUAD, LIN)}, "none")
        assert list(build_arrow_system(cfg).ids) == ["A", "B"]

    def test_degenerate_directions(self):
        with pytest.raises(DegenerateDirections):
            build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": math.pi}))
        with pytest.raises(DegenerateDirections):
            build_arrow_system(ArrowConfig.uniform({"A": 0.3, "B": 0.3}))


class TestGeometry:
    def test_isotropic_embedding_composes(self):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": 1.0, "C": 2.5, "D": 4.0}))
        for a in s.ids:
            for b in s.ids:
                for c in s.ids:
                    lhs = s.embedding(a, b) @ s.embedding(b, c)
                    assert np.allclose(lhs, s.embedding(a, c), atol=1e-12)

    def test_reverse_is_inverse(self):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.2, "B": 5.0}, f=LIN, level="c2_spacetime"))
        assert np.allclose(s.embedding("B", "A") @ s.embedding("A", "B"), np.eye(2), atol=1e-12)

    def test_prepare_along_an_axis_is_the_eigenstate(self):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": 1.1, "C": 2.0}))
        for v, d in s.config.directions.items():
            up = prepare(s, d)
            down = prepare(s, d + math.pi)
            for w in s.ids:
                assert same_up_to_phase(up.component(w).components, s.eigenstate(v, 0).component(w).components)
                assert same_up_to_phase(down.component(w).components, s.eigenstate(v, 1).component(w).components)

    @pytest.mark.parametrize("f", [LIN, QUAD, COS2])
    def test_prepare_probabilities_follow_f(self, f):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": 1.0}, f=f, level="none"))
        for t in np.linspace(0, math.pi, 19):
            st = prepare(s, t)
            assert restricted_born(st, "A", 0) == pytest.approx(f(t), abs=1e-12)
            assert restricted_born(st, "A", 1) == pytest.approx(1 - f(t), abs=1e-12)

    def test_prepare_below_the_axis(self):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": 1.0}, f=LIN, level="none"))
        # 3pi/2 is pi/2 from the head of A the other way round
        assert restricted_born(prepare(s, 1.5 * math.pi), "A", 0) == pytest.approx(0.5, abs=1e-12)


class TestSampling:
    def test_frequencies_within_four_sigma(self):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": 1.0}))
        tab = sample_frequencies(s, 1.2, "A", 20_000, seed=9)
        p = COS2(1.2)
        assert tab.probabilities[0] == pytest.approx(p, abs=1e-12)
        assert abs(tab.frequencies[0] - p) <= 4 * math.sqrt(p * (1 - p) / 20_000)
        assert sum(tab.counts) == 20_000

    def test_reproducible(self):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": 1.0}))
        a = sample_frequencies(s, 0.5, "B", 1000, seed=3, stream=4)
        b = sample_frequencies(s, 0.5, "B", 1000, seed=3, stream=4)
        assert a == b

    def test_unknown_variable(self):
        s = build_arrow_system(ArrowConfig.uniform({"A": 0.0, "B": 1.0}))
        with pytest.raises(UnknownVariable):
            sample_frequencies(s, 0.5, "Q", 10, seed=1)
