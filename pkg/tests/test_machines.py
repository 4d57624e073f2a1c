import itertools
import random

import pytest

from certsynth.machines import (
    GuaranteeTs, LocalStrategy, MachineFormatError, MooreTs, compose, compute, dumps, extend, from_guards,
    is_valid_history, letters_over, loads, moore, parallel_compose, rename_states, restrict, simulates, to_dot,
)

from crossing import AC1, AC2, GO1, GO2, S1_BLACK, g1, g2, s1, s2
from oracles import random_moore, run_moore, simulation_relations


def _defined(ts, t):
    return {frozenset(i) for i in ts.defined_inputs(t)}


def _black_inputs(state):
    gen = from_guards(2, 0, (AC1, AC2, GO2), [], S1_BLACK, [[], []], LocalStrategy)
    return _defined(gen, state)


def test_cubes_order():
    assert letters_over(["b", "a"]) == (frozenset(), {"a"}, {"b"}, {"a", "b"})


def test_crossing_machines_are_well_formed():
    assert g2().is_total() and g1().is_total() and s1().is_total() and s2().is_total()
    with pytest.raises(ValueError):
        from_guards(1, 0, ["a"], ["o"], [(0, [], [], 0)], [[]], GuaranteeTs).__class__(
            1, 0, frozenset(["a"]), frozenset(["o"]), {}, (frozenset(),))


def test_compute_g2():
    # r1 at the crossing: g2 stays in the left state and keeps go_2 off
    assert compute(g2(), [{AC1}, set()]) == [{AC1}, set()]
    # r1 away: go_2 is switched on in the next step
    assert compute(g2(), [set(), set()]) == [set(), {GO2}]


def test_compute_empty_and_partial():
    assert compute(s1(), []) == []
    local = restrict(s1(), [g2()])
    assert len(compute(local, [{GO2}, set()])) == 0
    # g2 raises go_2 right after r1 leaves, so a quiet second letter is not a valid history
    assert len(compute(local, [set(), set(), set()])) == 1
    assert len(compute(local, [set(), {GO2}])) == 2


def test_compute_matches_manual_interpreter():
    rng = random.Random(31)
    for _ in range(100):
        ts = random_moore(rng, 3, ["a", "b"], ["o", "p"])
        inputs = [frozenset(x for x in "ab" if rng.random() < 0.5) for _ in range(5)]
        t, expected = ts.initial, []
        for i in inputs:
            expected.append(i | ts.labels[t])
            t = ts.transitions[(t, i)]
        assert compute(ts, inputs) == expected


def test_valid_histories_of_g2():
    assert not is_valid_history([{AC1}, {GO2}], [g2()])
    assert is_valid_history([{AC2}, {GO2}], [g2()])
    assert is_valid_history([{AC1, GO2}, {GO2}], [])


def test_valid_history_prefix_closed():
    rng = random.Random(32)
    g = g2()
    for _ in range(300):
        prefix = [frozenset(v for v in (AC1, AC2, GO1, GO2) if rng.random() < 0.5) for _ in range(4)]
        if is_valid_history(prefix, [g]):
            assert all(is_valid_history(prefix[:k], [g]) for k in range(5))


def test_restriction_removes_gray_transitions():
    local = restrict(s1(), [g2()])
    assert local.num_states == 2
    for t in (0, 1):
        assert _defined(local, t) == _black_inputs(t)
    assert local.associated == {GO2}
    assert local.labels == ({GO1}, {GO2})


def test_restrict_without_guarantees_is_identity():
    s = s1()
    local = restrict(s, [])
    assert dict(local.transitions) == dict(s.transitions)
    assert local.labels == tuple(x & s.outputs for x in s.labels)


def _one_step_oracle_lengths(s, g, seq):
    """Length of the longest prefix of s's computation that respects g."""
    trace = compute(s, seq)
    u, k = g.initial, 0
    for letter in trace:
        if letter & g.outputs != g.labels[u]:
            break
        u = g.transitions[(u, letter & g.inputs)]
        k += 1
    return k


def test_restrict_matches_valid_history_oracle():
    rng = random.Random(33)
    for _ in range(150):
        # g reads the environment input and s's output, and writes s's second input
        s = random_moore(rng, rng.randint(1, 3), ["e", "h"], ["o"])
        g = random_moore(rng, rng.randint(1, 2), ["e", "o"], ["h"], GuaranteeTs)
        local = restrict(s, [g])
        for seq in itertools.product(letters_over(["e", "h"]), repeat=3):
            assert len(compute(local, seq)) == _one_step_oracle_lengths(s, g, seq)


def test_restrict_with_hidden_inputs_keeps_everything_possible():
    # g's output depends on a variable s cannot see, so any value of h may occur
    s = random_moore(random.Random(1), 2, ["h"], ["o"])
    g = GuaranteeTs(2, 0, frozenset(["x"]), frozenset(["h"]),
                    {(0, frozenset()): 0, (0, frozenset(["x"])): 1, (1, frozenset()): 0, (1, frozenset(["x"])): 1},
                    (frozenset(), frozenset(["h"])))
    local = restrict(s, [g])
    # first step: g starts without h
    assert _defined(local, local.initial) == {frozenset()}
    # afterwards h is unpredictable for s, so both values stay possible
    nxt = local.step(local.initial, frozenset())
    assert _defined(local, nxt) == {frozenset(), frozenset(["h"])}


def test_simulation_examples():
    s = s1()
    assert simulates(s, s, s.outputs) is not None
    assert simulates(g1(), s1(), {GO1}) is not None
    assert simulates(g2(), s2(), {GO2}) is not None
    assert simulates(g2(), rename_states(_flip_label(s2()), MooreTs), {GO2}) is None


def _flip_label(s):
    labels = (s.labels[0] | {GO2}, s.labels[1])
    return MooreTs(s.num_states, s.initial, s.inputs, s.outputs, dict(s.transitions), labels)


def test_simulation_alphabet_errors():
    with pytest.raises(ValueError):
        simulates(g1(), s2(), {GO1})
    with pytest.raises(ValueError):
        simulates(g1(), s1(), {"m_1"})


def test_simulation_matches_exhaustive_relations():
    rng = random.Random(34)
    for _ in range(200):
        concrete = random_moore(rng, rng.randint(1, 3), ["i"], ["o", "p"], partial=0.3)
        abstract = random_moore(rng, rng.randint(1, 3), ["i"], ["o"])
        assert simulates(abstract, concrete, {"o"}) == simulation_relations(abstract, concrete, {"o"})


def test_simulation_transitive():
    rng = random.Random(35)
    hits = 0
    for _ in range(400):
        a = random_moore(rng, 2, ["i"], ["o"])
        b = random_moore(rng, 2, ["i"], ["o"])
        c = random_moore(rng, 2, ["i"], ["o"])
        if simulates(a, b, {"o"}) and simulates(b, c, {"o"}):
            hits += 1
            assert simulates(a, c, {"o"}) is not None
    assert hits > 5


def test_composition_of_robot_strategies():
    comp = parallel_compose(s1(), s2())
    assert comp.inputs == {AC1, AC2}
    trace = compute(comp, [{AC1}, {AC1}, set(), {AC2}, {AC1, AC2}, set()])
    # r1 moves whenever it was at the crossing, r2 otherwise
    assert [x & {GO1, GO2} for x in trace] == [{GO1}, {GO1}, {GO1}, {GO2}, {GO2}, {GO1}]


def test_composition_independent_components():
    a = moore(2, 0, ["x"], ["o"], {(0, ()): 0, (0, ("x",)): 1, (1, ()): 1, (1, ("x",)): 0}, [[], ["o"]])
    b = moore(1, 0, ["y"], ["p"], {(0, ()): 0, (0, ("y",)): 0}, [["p"]])
    comp = compose([a, b])
    assert comp.num_states == 2
    assert compute(comp, [{"x"}, {"y"}]) == [{"x", "p"}, {"y", "o", "p"}]


def test_composition_matches_joint_step_oracle():
    rng = random.Random(36)
    for _ in range(150):
        a = random_moore(rng, rng.randint(1, 3), ["e", "q"], ["p"])
        b = random_moore(rng, rng.randint(1, 3), ["e", "p"], ["q"])
        comp = compose([a, b])
        for _ in range(5):
            env = [frozenset(["e"]) if rng.random() < 0.5 else frozenset() for _ in range(5)]
            assert compute(comp, env) == run_moore([a, b], env)


def test_composition_associative_on_traces():
    rng = random.Random(37)
    for _ in range(60):
        a = random_moore(rng, 2, ["e", "r"], ["p"])
        b = random_moore(rng, 2, ["e", "p"], ["q"])
        c = random_moore(rng, 2, ["q"], ["r"])
        left = compose([compose([a, b]), c])
        right = compose([a, compose([b, c])])
        for env in itertools.product([frozenset(), frozenset(["e"])], repeat=4):
            assert compute(left, env) == compute(right, env)


def test_composition_output_overlap():
    a = moore(1, 0, [], ["o"], {(0, ()): 0}, [[]])
    with pytest.raises(ValueError):
        compose([a, a])


def test_extend_total_is_identity():
    s = s1()
    own = rename_states(MooreTs(2, 0, s.inputs, frozenset([GO1]), dict(s.transitions),
                                tuple(x & {GO1} for x in s.labels)), GuaranteeTs)
    e = extend(s, own)
    assert dict(e.transitions) == dict(s.transitions) and e.labels == s.labels


def test_extend_immediate_fallback():
    own = g1()
    stuck = LocalStrategy(1, 0, own.inputs, frozenset([GO1, "m_1"]), {}, (frozenset([GO1]),))
    e = extend(stuck, own)
    for seq in itertools.product(letters_over(own.inputs), repeat=2):
        assert [x & {GO1} for x in compute(e, seq)] == [x & {GO1} for x in compute(own, seq)]
        assert all("m_1" not in x for x in compute(e, seq)[1:])


def test_extend_rejects_non_simulating_certificate():
    s = s1()
    bad = GuaranteeTs(1, 0, s.inputs, frozenset([GO1]), {(0, i): 0 for i in s.letters()}, (frozenset(),))
    with pytest.raises(ValueError):
        extend(restrict(s, [g2()]), bad)


def test_restrict_extend_round_trip():
    rng = random.Random(38)
    for _ in range(80):
        # process reads env "e" and the guarantee output "h" of a partner; it guarantees "o"
        s = random_moore(rng, rng.randint(1, 3), ["e", "h"], ["o", "m"])
        own = rename_states(MooreTs(s.num_states, s.initial, s.inputs, frozenset(["o"]), dict(s.transitions),
                                    tuple(x & {"o"} for x in s.labels)), GuaranteeTs)
        partner = random_moore(rng, rng.randint(1, 2), ["e", "o"], ["h"], GuaranteeTs)
        e = extend(restrict(s, [partner]), own)
        for seq in itertools.product(letters_over(["e", "h"]), repeat=3):
            valid = _one_step_oracle_lengths(s, partner, seq)
            assert compute(e, seq)[:valid] == compute(s, seq)[:valid]


def test_json_round_trip_and_dot():
    for m in (s1(), g2(), restrict(s1(), [g2()])):
        back = loads(dumps(m))
        assert type(back) is type(m)
        assert back == m and dict(back.transitions) == dict(m.transitions)
        assert to_dot(m).startswith("digraph")


@pytest.mark.parametrize("text", ["[]", "{}", "not json", '{"kind": "certificate", "states": 1, "initial": 0,'
                                  ' "inputs": ["a"], "outputs": [], "labels": [[]], "transitions": []}'])
def test_malformed_machine_json(text):
    with pytest.raises(MachineFormatError):
        loads(text)
