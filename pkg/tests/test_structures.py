from __future__ import annotations

import random

import pytest
from hypothesis import given

from itlsynth.formula import closure, parse_formula, subformulas, normalize
from itlsynth.structures import (
    Interval,
    IntervalStructure,
    ModelChecker,
    StructureError,
    all_types,
    check,
    dump_structure,
    parse_structure,
)

from oracles import formulas, naive_eval, random_formula, random_structure, structures

T = parse_formula


class TestParse:
    def test_label_line(self):
        M = parse_structure("points 2\nlabel 0 1 : a")
        assert M.n == 2
        assert M.label(0, 1) == {"a"}
        assert M.label(0, 0) == frozenset()
        assert M.classes() == [[0], [1]]

    def test_class_line(self):
        M = parse_structure("points 3\nclass 0 2")
        assert M.sim(0, 2) and not M.sim(0, 1) and not M.sim(1, 2)

    def test_out_of_range(self):
        with pytest.raises(StructureError):
            parse_structure("points 1\nlabel 0 1 : a")

    def test_reversed_interval(self):
        with pytest.raises(StructureError):
            parse_structure("points 3\nlabel 2 1 : a")

    @pytest.mark.parametrize(
        "text",
        ["label 0 0 : a", "points x", "points 2\nlabel 0 : a", "points 2\nfoo 1", "points 2\nlabel 0 0 : ~"],
    )
    def test_malformed(self, text):
        with pytest.raises(StructureError):
            parse_structure(text)

    def test_duplicate_labels_merge(self):
        M = parse_structure("points 2\nlabel 0 1 : a\nlabel 0 1 : b a  # again")
        assert M.label(0, 1) == {"a", "b"}

    def test_classes_merge_transitively(self):
        M = parse_structure("points 4\nclass 0 1\nclass 1 3")
        assert M.sim(0, 3) and not M.sim(0, 2)

    @given(structures())
    def test_dump_round_trip(self, M):
        assert parse_structure(dump_structure(M)).key() == M.key()

    def test_sim_never_stored(self):
        with pytest.raises(StructureError):
            IntervalStructure.build(2, {(0, 1): ["~"]})


class TestCheck:
    M = parse_structure("points 2\nlabel 0 1 : a")

    def test_a_relation_reaches_right_neighbour(self):
        assert check(self.M, Interval(0, 0), T("<A> a"))

    def test_sim_reflexive_on_points(self):
        assert check(self.M, (0, 0), T("~"))

    def test_point_test(self):
        assert not check(self.M, (0, 1), T("[B] false"))
        assert check(self.M, (0, 0), T("[B] false"))

    def test_abar_and_bbar(self):
        assert check(self.M, (1, 1), T("<Ab> a"))
        assert check(self.M, (0, 0), T("<Bb> a"))
        assert not check(self.M, (0, 1), T("<Bb> a"))

    def test_invalid_interval(self):
        with pytest.raises(ValueError):
            check(self.M, (1, 0), T("a"))

    @given(structures(max_n=5), formulas(max_depth=4))
    def test_agrees_with_naive_evaluator(self, M, f):
        mc = ModelChecker(M)
        for x in range(M.n):
            for y in range(x, M.n):
                assert mc.check(x, y, f) == naive_eval(M, x, y, f)

    def test_each_pair_evaluated_once(self):
        rng = random.Random(5)
        for _ in range(30):
            M = random_structure(rng, 5)
            f = normalize(random_formula(rng, 4))
            mc = ModelChecker(M)
            for x in range(M.n):
                for y in range(x, M.n):
                    mc.check(x, y, f)
            distinct = len(set(subformulas(f)))
            assert mc.evaluations == distinct * M.n * (M.n + 1) // 2


class TestTypes:
    def test_points_and_sim(self):
        rng = random.Random(1)
        for _ in range(50):
            M = random_structure(rng, 5)
            table = closure(T("<A>(a & ~) | [Bb] b"))
            types = all_types(M, table)
            for x in range(M.n):
                assert table.index[T("~")] in types[(x, x)]
                assert table.pi_id not in types[(x, x)]  # <B>!false fails: [B]false holds

    def test_agree_with_check_on_200_pairs(self):
        rng = random.Random(2)
        for _ in range(200):
            M = random_structure(rng, 4)
            f = random_formula(rng, 3)
            table = closure(f)
            types = all_types(M, table)
            for (x, y), ids in types.items():
                for i, g in enumerate(table.items):
                    assert (i in ids) == naive_eval(M, x, y, g)

    def test_sim_laws(self):
        rng = random.Random(4)
        for _ in range(100):
            M = random_structure(rng, 6)
            for x in range(M.n):
                assert check(M, (x, x), T("~"))
                for y in range(x, M.n):
                    for z in range(y, M.n):
                        xy, yz, xz = M.sim(x, y), M.sim(y, z), M.sim(x, z)
                        assert not (xy and yz) or xz
                        assert not (xz and yz) or xy
                        assert not (xy and xz) or yz
