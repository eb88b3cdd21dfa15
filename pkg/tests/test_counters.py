from __future__ import annotations

import random

import pytest

from itlsynth.counters import (
    BOUND_EXHAUSTED,
    CLOSED,
    FOUND,
    DEL,
    P,
    Configuration,
    CounterMachine,
    Inc,
    MachineError,
    Zdec,
    aabb_conjuncts,
    abb_sim_conjuncts,
    counter_letter,
    dump_machine,
    encode,
    encode_abb_sim,
    encode_witness_structure,
    is_computation,
    normalize_lossy,
    parse_machine,
    reach_00,
    state_letter,
    step,
)
from itlsynth.formula import (
    ABB_SIM,
    Fragment,
    Rel,
    build_derived,
    modalities,
    subformulas,
    uses_sim,
)
from itlsynth.structures import IntervalStructure, check

from corpus import HAND_MACHINES, INC_THEN_TEST, ONE_STEP, TWO_COUNTERS

AABB_ABAR = Fragment(frozenset({Rel.A, Rel.ABAR, Rel.B, Rel.BBAR}), False)

C = Configuration


def random_machine(rng: random.Random) -> CounterMachine:
    k = rng.randint(1, 2)
    states = [f"q{i}" for i in range(rng.randint(1, 3))]
    targets = states + ["qh"]
    delta = {}
    for q in states:
        i = rng.randint(1, k)
        if rng.random() < 0.5:
            delta[q] = Inc(i, rng.choice(targets))
        else:
            delta[q] = Zdec(i, rng.choice(targets), rng.choice(targets))
    return CounterMachine(k, delta, "q0", "qh")


def lossy_by_definition(M, c):
    """Successors with drops before and after the perfect transition."""
    out = set()
    for before in _below(c.counters):
        rule = M.delta.get(c.state)
        if rule is None:
            continue
        z = list(before)
        i = rule.counter - 1
        if isinstance(rule, Inc):
            z[i] += 1
            nxt = rule.next
        elif z[i] == 0:
            nxt = rule.if_zero
        else:
            z[i] -= 1
            nxt = rule.if_pos
        for after in _below(tuple(z)):
            out.add(C(nxt, after))
    return out


def _below(v):
    if not v:
        yield ()
        return
    for head in range(v[0] + 1):
        for rest in _below(v[1:]):
            yield (head,) + rest


def failing(structure, conjuncts):
    return [name for name, f in conjuncts if not check(structure, (0, 0), f)]


class TestMachines:
    def test_parse_and_dump(self):
        for text in HAND_MACHINES:
            M = parse_machine(text)
            assert parse_machine(dump_machine(M)) == M

    @pytest.mark.parametrize(
        "text",
        [
            "counters 1\ninit q0\nhalt qh\n",
            "counters 1\nstate q0: inc 2 goto qh\ninit q0\nhalt qh\n",
            "counters 1\nstate q0: jump qh\ninit q0\nhalt qh\n",
            "counters 1\nstate q0: ifz 1 goto qh else dec 2 goto q0\ninit q0\nhalt qh\n",
            "state q0: inc 1 goto qh\ninit q0\nhalt qh\n",
            "counters 1\nstate q0: inc 1 goto qh\nstate qh: inc 1 goto q0\ninit q0\nhalt qh\n",
        ],
    )
    def test_parse_errors(self, text):
        with pytest.raises(MachineError):
            parse_machine(text)

    def test_negative_counter(self):
        with pytest.raises(MachineError):
            C("q", (-1,))


class TestSteps:
    def test_inc(self):
        M = CounterMachine(1, {"q0": Inc(1, "q1"), "q1": Inc(1, "qh")}, "q0", "qh")
        assert C("q1", (1,)) in step(M, C("q0", (0,)))

    def test_zero_test(self):
        M = parse_machine(ONE_STEP)
        assert step(M, C("q0", (0,))) == {C("qh", (0,))}
        assert step(M, C("q0", (2,))) == {C("q0", (1,))}

    def test_lossy_can_empty(self):
        M = parse_machine(INC_THEN_TEST)
        assert C("qh", (0,)) in step(M, C("q1", (2,)), lossy=True)
        assert any(d.counters == (0,) for d in step(M, C("q1", (2,)), lossy=True))

    def test_halt_has_no_successor(self):
        M = parse_machine(ONE_STEP)
        assert step(M, M.final()) == set() and step(M, M.final(), lossy=True) == set()

    def test_perfect_within_lossy_500(self):
        rng = random.Random(41)
        for _ in range(500):
            M = random_machine(rng)
            c = C(rng.choice(M.states), tuple(rng.randint(0, 3) for _ in range(M.k)))
            perfect = step(M, c)
            lossy = step(M, c, lossy=True)
            assert perfect <= lossy
            assert lossy == lossy_by_definition(M, c)


class TestReachability:
    def test_one_step_machine(self):
        r = reach_00(parse_machine(ONE_STEP))
        assert r.status == FOUND
        assert r.path == [C("q0", (0,)), C("qh", (0,))]

    def test_inc_then_test(self):
        # perfect: q0 -> q1 with 1, dec back to q0 with 0, forever
        M = parse_machine(INC_THEN_TEST)
        perfect = reach_00(M, cap=5)
        assert perfect.status == CLOSED and not perfect.cap_hit
        lossy = reach_00(M, lossy=True, cap=5)
        assert lossy.status == FOUND
        assert lossy.path == [C("q0", (0,)), C("q1", (0,)), C("qh", (0,))]

    def test_two_counters(self):
        M = parse_machine(TWO_COUNTERS)
        r = reach_00(M, cap=5)
        assert r.status == FOUND and len(r.path) == 7
        assert is_computation(M, r.path, lossy=False)

    def test_bound_flagged(self):
        M = CounterMachine(1, {"q0": Inc(1, "q0")}, "q0", "qh")
        assert reach_00(M, bound=10).status == BOUND_EXHAUSTED
        capped = reach_00(M, cap=3)
        assert capped.status == BOUND_EXHAUSTED and capped.cap_hit

    def test_paths_replay_and_lossy_finds_perfect(self):
        rng = random.Random(42)
        for _ in range(300):
            M = random_machine(rng)
            perfect = reach_00(M, bound=500, cap=3)
            lossy = reach_00(M, lossy=True, bound=500, cap=3)
            for r, is_lossy in ((perfect, False), (lossy, True)):
                if r.found:
                    assert r.path[0] == M.initial() and r.path[-1] == M.final()
                    assert is_computation(M, r.path, is_lossy)
            if perfect.found:
                assert lossy.found and len(lossy.path) <= len(perfect.path)


class TestEncoders:
    def test_forward_encoding_shape(self):
        M = parse_machine(TWO_COUNTERS)
        phi, spoiler = encode(M)
        assert spoiler == frozenset({"p_sp"})
        assert AABB_ABAR.conforms(phi) and not uses_sim(phi)
        parts = set(subformulas(phi))
        assert build_derived("psi_sur", [counter_letter(1), counter_letter(2)], "new", "p") in parts
        assert build_derived("psi_inj", "p", "p_sp", "s") in parts

    def test_backward_encoding_shape(self):
        M = parse_machine(TWO_COUNTERS)
        phi = encode_abb_sim(M)
        assert ABB_SIM.conforms(phi)
        assert Rel.ABAR not in modalities(phi)
        names = dict(abb_sim_conjuncts(M))
        assert "phi_sim_inj" in names
        sim_inj = build_derived("phi_sim_inj", [state_letter(q) for q in M.states])
        assert names["phi_sim_inj"] == sim_inj
        assert sim_inj in set(subformulas(phi))

    def test_conjunct_names(self):
        M = parse_machine(INC_THEN_TEST)
        forward = [n for n, _ in aabb_conjuncts(M)]
        backward = [n for n, _ in abb_sim_conjuncts(M)]
        assert len(forward) == len(set(forward)) and len(backward) == len(set(backward))
        assert {"psi_sur", "psi_inj", "start", "end-is-halt"} <= set(forward)
        assert {"start-is-halt", "end-is-init", "phi_sim_inj"} <= set(backward)


class TestWitnesses:
    def test_one_step_layout(self):
        M = parse_machine(ONE_STEP)
        W = encode_witness_structure(M, reach_00(M).path)
        assert W.n == 3
        assert W.label(0, 1) == {state_letter("qh")} and W.label(1, 2) == {state_letter("q0")}

    def test_counter_values_are_token_counts(self):
        M = parse_machine(TWO_COUNTERS)
        path = reach_00(M).path
        W = encode_witness_structure(M, path, "aabb")
        units = [W.label(x, x + 1) for x in range(W.n - 1)]
        blocks, cur = [], None
        for lab in units:
            if any(a.startswith("at_") for a in lab):
                cur = [lab, []]
                blocks.append(cur)
            else:
                cur[1].append(lab)
        assert [next(a for a in b[0] if a.startswith("at_")) for b in blocks] == [state_letter(c.state) for c in path]
        for (head, tokens), conf in zip(blocks, path):
            for i in range(1, M.k + 1):
                assert sum(counter_letter(i) in t for t in tokens) == conf.counters[i - 1]
            assert all(len([a for a in t if a.startswith("c")]) == 1 for t in tokens)

    def test_deleted_tokens_are_not_transferred(self):
        M = parse_machine(TWO_COUNTERS)
        W = encode_witness_structure(M, reach_00(M).path, "aabb")
        deleted = [x for x in range(W.n - 1) if DEL in W.label(x, x + 1)]
        assert deleted
        for x in deleted:
            assert not any(P in W.label(x + 1, z) for z in range(x + 1, W.n))

    @pytest.mark.parametrize("text", HAND_MACHINES)
    def test_backward_conjuncts_hold(self, text):
        M = parse_machine(text)
        r = reach_00(M, lossy=True, cap=5)
        W = encode_witness_structure(M, r.path, "abbsim")
        assert failing(W, abb_sim_conjuncts(M)) == []
        assert check(W, (0, 0), encode_abb_sim(M))

    @pytest.mark.parametrize("text", [ONE_STEP, TWO_COUNTERS])
    def test_forward_conjuncts_hold(self, text):
        M = parse_machine(text)
        W = encode_witness_structure(M, reach_00(M, cap=5).path, "aabb")
        assert failing(W, aabb_conjuncts(M)) == []

    @pytest.mark.parametrize("variant", ["abbsim", "aabb"])
    def test_single_label_removal_is_caught(self, variant):
        M = parse_machine(TWO_COUNTERS)
        W = encode_witness_structure(M, reach_00(M, cap=5).path, variant)
        conjuncts = abb_sim_conjuncts(M) if variant == "abbsim" else aabb_conjuncts(M)
        for cell, labels in W.valuation.items():
            for a in labels:
                val = {c: set(v) for c, v in W.valuation.items()}
                val[cell].discard(a)
                broken = IntervalStructure(W.n, {c: frozenset(v) for c, v in val.items() if v}, W.cls)
                assert failing(broken, conjuncts), f"removing {a} from {cell} went unnoticed"

    def test_random_tiny_machines(self):
        rng = random.Random(43)
        done = 0
        while done < 30:
            M = random_machine(rng)
            r = reach_00(M, lossy=True, bound=2000, cap=3)
            if not r.found or len(r.path) > 7:
                continue
            done += 1
            W = encode_witness_structure(M, r.path, "abbsim")
            assert failing(W, abb_sim_conjuncts(M)) == []
            if is_computation(M, r.path, lossy=False):
                W = encode_witness_structure(M, r.path, "aabb")
                assert failing(W, aabb_conjuncts(M)) == []

    def test_invalid_computation(self):
        M = parse_machine(ONE_STEP)
        with pytest.raises(MachineError):
            encode_witness_structure(M, [C("q0", (0,))])
        with pytest.raises(MachineError):
            encode_witness_structure(M, [C("q0", (0,)), C("q0", (0,)), C("qh", (0,))])
        with pytest.raises(MachineError):
            encode_witness_structure(M, reach_00(M).path, "other")

    def test_forward_needs_perfect_run(self):
        M = parse_machine(INC_THEN_TEST)
        with pytest.raises(MachineError):
            encode_witness_structure(M, reach_00(M, lossy=True, cap=5).path, "aabb")


class TestNormalizeLossy:
    def test_keeps_endpoints(self):
        rng = random.Random(44)
        done = 0
        while done < 50:
            M = random_machine(rng)
            r = reach_00(M, lossy=True, bound=2000, cap=3)
            if not r.found:
                continue
            done += 1
            norm = normalize_lossy(M, r.path)
            assert len(norm) == len(r.path)
            assert norm[0] == r.path[0] and norm[-1] == r.path[-1]
            assert is_computation(M, norm, lossy=True)
            for a, b in zip(norm, r.path):
                assert a.state == b.state
                assert all(x <= y for x, y in zip(a.counters, b.counters))

    def test_rejects_non_computation(self):
        M = parse_machine(ONE_STEP)
        with pytest.raises(MachineError):
            normalize_lossy(M, [C("qh", (0,)), C("q0", (0,))])
