import json
import math
from fractions import Fraction

import numpy as np
import pytest

from dyadicmax.crystal import ScaleSet, Shape
from dyadicmax.dyadic import DyadicRational
from dyadicmax.errors import NoProgressionError, ParameterError
from dyadicmax.evaluator import maximal_field, rasterize, superlevel_measure
from dyadicmax.family import Progression
from dyadicmax.verify import (
    CSV_COLUMNS,
    build_instance,
    check_disjointness,
    check_homogeneity,
    cube_counterexample,
    fraction_decimal,
    union_Y_mask,
    verify_theorem,
)


def prog(*values):
    return Progression(values, values[1] - values[0])


class TestBuildInstance:
    def test_n3_u012(self):
        inst = build_instance(3, prog(0, 1, 2))
        assert inst.h == (0, 1, 2)
        assert inst.Z == ScaleSet((-2, -1, 0))
        assert len(inst.indices) == 6
        assert all(sum(i) <= 2 for i in inst.indices)

    def test_smallest_case(self):
        inst = build_instance(2, prog(0, 1))
        assert inst.R[(0,)] == Shape((0, 0))

    def test_zero_sum_primitive_shapes(self):
        inst = build_instance(3, prog(1, 3, 5))
        for i in inst.indices:
            assert inst.R[i].volume_exponent == 0

    def test_index_count_is_binomial(self):
        for n in (2, 3):
            for m in (2, 3, 4):
                inst = build_instance(n, prog(*range(m)))
                assert len(inst.indices) == math.comb(m - 1 + n - 1, n - 1)

    def test_measure_identity(self):
        inst = build_instance(2, prog(0, 2, 4))
        for i in inst.indices:
            from dyadicmax.crystal import crystal_measure

            assert crystal_measure(inst.Y[i]) == inst.measure_E().scale2(
                inst.m - 1
            )

    def test_E_contained_in_every_Y(self):
        inst = build_instance(2, prog(0, 1, 2))
        mask_E = rasterize(inst.E, inst.grid)
        for i in inst.indices:
            mask_Y = rasterize(inst.Y[i], inst.grid)
            assert not (mask_E.values & ~mask_Y.values).any()

    def test_validation(self):
        with pytest.raises(ParameterError):
            build_instance(1, prog(0, 1))
        with pytest.raises(ParameterError):
            build_instance(2, prog(0, 1), A={5, 6})


class TestHomogeneity:
    def test_smallest_case(self):
        inst = build_instance(2, prog(0, 1))
        r = check_homogeneity(inst, (0,))
        assert r.passed and r.k <= 1

    def test_n2_u012_all_pass_with_k2(self):
        inst = build_instance(2, prog(0, 1, 2))
        for i in inst.indices:
            r = check_homogeneity(inst, i)
            assert r.passed and r.k == 2

    def test_n3_u012_all_six_pass(self):
        inst = build_instance(3, prog(0, 1, 2))
        mask_E = rasterize(inst.E, inst.grid)
        results = [check_homogeneity(inst, i, mask_E) for i in inst.indices]
        assert len(results) == 6
        assert all(r.passed and r.k == 2 for r in results)


class TestDisjointness:
    def test_n2_u012(self):
        inst = build_instance(2, prog(0, 1, 2))
        d = check_disjointness(inst)
        assert d.passed
        assert d.min_delta == Fraction(1, 4)
        assert d.sum_Y.as_fraction() == 3 * inst.measure_E().as_fraction() * 4

    def test_sum_identity(self):
        inst = build_instance(3, prog(0, 1, 2))
        d = check_disjointness(inst)
        assert d.sum_Y == DyadicRational(
            len(inst.indices), 0
        ) * inst.measure_E().scale2(inst.m - 1)
        assert 0 < d.rho <= 1


class TestVerifyTheorem:
    def test_no_progression(self):
        with pytest.raises(NoProgressionError):
            verify_theorem(2, {1, 2, 4, 8}, 3)

    def test_n2_m3_report(self):
        rep = verify_theorem(2, {0, 1, 2}, 3)
        assert rep.passed
        assert rep.homogeneity_ok and rep.disjointness_ok and rep.inclusion_ok
        assert rep.index_count == 3
        assert rep.ratio > 0
        # superlevel sets nest: lower threshold covers at least as much
        assert rep.superlevel_alt >= rep.superlevel

    def test_n3_m4_report(self):
        rep = verify_theorem(3, {0, 1, 2, 3}, 4)
        assert rep.passed
        assert rep.index_count == math.comb(5, 2)

    def test_union_inside_superlevel(self):
        from dyadicmax.family import FamilySpec, generate_shapes

        A = {0, 1, 2, 3}
        rep = verify_theorem(2, A, 4)
        assert rep.inclusion_ok
        assert rep.union_Y <= rep.superlevel

    def test_json_and_csv(self):
        rep = verify_theorem(2, {0, 1, 2}, 3)
        d = json.loads(rep.to_json())
        assert d["schema_version"] == 1
        assert d["measure_E"] == {
            "mantissa": rep.measure_E.mantissa,
            "exponent": rep.measure_E.exponent,
        }
        row = rep.csv_row()
        assert tuple(row) == CSV_COLUMNS
        assert row["index_count"] == 3


class TestCubeCounterexample:
    def test_n1_hardy_littlewood_scaling(self):
        rep = cube_counterexample(1, 4)
        # n - 1 = 0: no logarithmic factor, pure 2^m scaling
        assert rep.ratio > 0
        assert rep.superlevel.as_fraction() == rep.ratio * 16

    def test_n2_positive_ratios(self):
        for m in (1, 2, 3, 4):
            rep = cube_counterexample(2, m)
            assert rep.passed and rep.ratio > 0

    def test_monotone_in_shape_set(self):
        # growing the shape set can only grow the superlevel set
        from dyadicmax.crystal import CrystalND, build_crystal
        from dyadicmax.evaluator import GridSpec
        from itertools import product as iproduct

        m = 3
        grid = GridSpec((0, 0), (m, m))
        Q = CrystalND((build_crystal(ScaleSet((0,))),) * 2)
        mask = rasterize(Q, grid)
        shapes = [Shape(e) for e in iproduct(range(m + 1), repeat=2)]
        small = maximal_field(mask, shapes[:3])
        big = maximal_field(mask, shapes)
        thr = DyadicRational.pow2(-m)
        assert superlevel_measure(small, thr) <= superlevel_measure(big, thr)

    def test_validation(self):
        with pytest.raises(ParameterError):
            cube_counterexample(0, 3)


def test_fraction_decimal_deterministic():
    assert fraction_decimal(Fraction(1, 3)) == fraction_decimal(Fraction(1, 3))
    assert fraction_decimal(Fraction(3, 4)) == "0.75"
