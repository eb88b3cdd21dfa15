from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from itlsynth.atoms import compass_from_structure
from itlsynth.formula import ABB_SIM, closure, parse_formula
from itlsynth.solver.wqo import (
    MultisetCollection,
    dominated,
    is_minimal_prefix,
    multiset_collection,
    wqo_leq,
)
from itlsynth.structures import IntervalStructure, parse_structure

from oracles import brute_leq, random_collection, random_walk

MC = MultisetCollection.of


collections = st.lists(
    st.lists(st.integers(0, 2), min_size=1, max_size=3), max_size=4
).map(MC)


class TestOrder:
    def test_examples(self):
        assert wqo_leq(MC([["F"]]), MC([["F", "G"]]))
        assert not wqo_leq(MC([["F"], ["F"]]), MC([["F"]]))
        assert wqo_leq(MC([]), MC([["F"]]))
        assert not wqo_leq(MC([["F", "F"]]), MC([["F", "G"]]))

    def test_needs_matching_not_greedy(self):
        # greedy left-to-right assignment of {F} to {F, G} would block {F, G}
        a = MC([["F"], ["F", "G"]])
        b = MC([["F", "G"], ["F"]])
        assert wqo_leq(a, b)

    def test_empty_inner_rejected(self):
        with pytest.raises(ValueError):
            MC([[]])

    def test_canonical_form(self):
        assert MC([[2, 1], [0]]) == MC([[0], [1, 2]])

    def test_agrees_with_brute_force_1000(self):
        rng = random.Random(31)
        for _ in range(1000):
            a, b = random_collection(rng), random_collection(rng, max_groups=4)
            assert wqo_leq(a, b) == brute_leq(a, b)

    @given(collections, collections)
    def test_agrees_with_brute_force(self, a, b):
        assert wqo_leq(a, b) == brute_leq(a, b)

    def test_reflexive_1000(self):
        rng = random.Random(32)
        for _ in range(1000):
            a = random_collection(rng)
            assert wqo_leq(a, a)

    def test_transitive_1000(self):
        rng = random.Random(33)
        hits = 0
        for _ in range(1000):
            a = random_collection(rng, universe=2, max_groups=2)
            b = random_collection(rng, universe=2, max_groups=3)
            c = random_collection(rng, universe=2, max_groups=4)
            if wqo_leq(a, b) and wqo_leq(b, c):
                assert wqo_leq(a, c)
                hits += 1
        assert hits > 50

    def test_monotone_1000(self):
        rng = random.Random(34)
        for _ in range(1000):
            a = random_collection(rng)
            b = random_collection(rng, max_groups=4)
            if not wqo_leq(a, b):
                continue
            extra = [rng.randrange(3) for _ in range(rng.randint(1, 3))]
            assert wqo_leq(a, b.with_extra(extra))
            if len(b):
                assert wqo_leq(a, b.with_grown(rng.randrange(len(b)), rng.randrange(3)))

    @given(collections, st.lists(st.integers(0, 2), min_size=1, max_size=3))
    def test_grows_above_itself(self, a, extra):
        assert wqo_leq(a, a.with_extra(extra))


class TestBadSequences:
    def test_random_walks_contain_dominating_pair(self):
        rng = random.Random(35)
        for _ in range(100):
            walk = random_walk(rng, 200)
            assert len(walk) == 200
            assert not is_minimal_prefix(walk)


class TestMinimalPrefix:
    def test_single(self):
        assert is_minimal_prefix([MC([[1]])])

    def test_repeat(self):
        assert not is_minimal_prefix([MC([[1]]), MC([[1]])])

    def test_shrinking(self):
        seq = [MC([[0, 1, 2], [0]]), MC([[0, 1], [1]]), MC([[2, 2]]), MC([[1]])]
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                assert not wqo_leq(seq[i], seq[j])
        assert is_minimal_prefix(seq)

    def test_dominated_checks_newest_only(self):
        history = [MC([[0]]), MC([[1, 1]])]
        assert dominated(history, MC([[0, 2]]))
        assert not dominated(history, MC([[2]]))


class TestRowCollections:
    table = closure(parse_formula("<A> a"), ABB_SIM)

    def test_first_row(self):
        G = compass_from_structure(IntervalStructure.build(3), self.table)
        mc = multiset_collection(G, 0)
        assert len(mc) == 1 and len(mc.inner[0]) == 1
        assert mc.inner[0][0] == G.cell(0, 0).bits

    def test_one_class(self):
        G = compass_from_structure(parse_structure("points 3\nclass 0 1 2"), self.table)
        mc = multiset_collection(G, 2)
        assert [len(g) for g in mc.inner] == [3]

    def test_hand_count(self):
        M = parse_structure("points 3\nclass 0 2\nlabel 0 2 : a\nlabel 1 2 : a")
        G = compass_from_structure(M, self.table)
        mc = multiset_collection(G, 2)
        want = MC([[G.cell(0, 2).bits, G.cell(2, 2).bits], [G.cell(1, 2).bits]])
        assert mc == want

    def test_row_outside(self):
        G = compass_from_structure(IntervalStructure.build(2), self.table)
        with pytest.raises(ValueError):
            multiset_collection(G, 2)
