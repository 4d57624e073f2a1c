import itertools

import pytest

from certsynth.architecture import Architecture
from certsynth.automata import Guard, UniversalCoBuchi, spec_uca
from certsynth.encoding import (
    Bounds, DimacsError, EncodingError, VariableRegistry, bit_width, comparator, constraint_families, encode,
    parse_dimacs, to_dimacs,
)
from certsynth.logic import ConjunctiveSpec, decompose, relevant_processes
from certsynth.solving import Cdcl, solve

from crossing import robots_arch, robots_spec


def _instance(arch, spec, s, c, mode="moore"):
    dec = decompose(spec, arch)
    rel = relevant_processes(dec, arch)
    ucas = {n: spec_uca(d.conjuncts) for n, d in dec.items()}
    return arch, dec, rel, ucas, Bounds.uniform(arch.names, s, c), mode


def _single(texts, inputs=("i",), outputs=("o",)):
    arch = Architecture.build([("p", list(inputs), list(outputs))], list(inputs))
    return arch, ConjunctiveSpec.parse(texts)


def _sat(args):
    return solve(encode(*args)).status == "sat"


def test_certificate_totality_counts():
    arch, spec = _single(["G o"])
    fam = constraint_families(*_instance(arch, spec, 1, 1))["p"]
    assert fam["guarantee_total"] and all(len(c) == 1 for c in fam["guarantee_total"])
    fam = constraint_families(*_instance(arch, spec, 1, 2))["p"]
    # two states, two cubes, one at-least-one and one at-most-one clause each
    assert len(fam["guarantee_total"]) == 8


def test_no_relevant_processes_means_no_cross_simulation():
    arch = Architecture.build([("p", ["i"], ["o"]), ("q", ["i"], ["r"])], ["i"])
    spec = ConjunctiveSpec.parse(["G (i -> X o)", "G (i -> X r)"])
    fams = constraint_families(*_instance(arch, spec, 1, 1))
    assert not any(k.startswith("cross_simulation") for f in fams.values() for k in f)


def test_cross_simulation_present_for_robots():
    fams = constraint_families(*_instance(robots_arch(), robots_spec(), 1, 1))
    assert fams["r1"]["cross_simulation/r2"] and fams["r2"]["cross_simulation/r1"]


def test_env_totality_only_in_mealy():
    arch, spec = _single(["G o"])
    assert constraint_families(*_instance(arch, spec, 2, 1))["p"]["env_totality"] == []
    assert constraint_families(*_instance(arch, spec, 2, 1, "mealy"))["p"]["env_totality"]


def test_unknown_mode():
    arch, spec = _single(["G o"])
    with pytest.raises(EncodingError):
        encode(*_instance(arch, spec, 1, 1, "both"))


def test_true_spec_is_sat_at_bound_one():
    arch, spec = _single(["true"])
    assert _sat(_instance(arch, spec, 1, 1))


def test_contradictory_spec_unsat():
    arch, spec = _single(["G o", "F !o"])
    for s in (1, 2, 3):
        assert not _sat(_instance(arch, spec, s, 1))


def test_simple_response_sat():
    arch, spec = _single(["G (i -> X o)"])
    assert _sat(_instance(arch, spec, 2, 1))
    arch, spec = _single(["G (X o <-> i)"])
    assert not _sat(_instance(arch, spec, 1, 1))
    assert _sat(_instance(arch, spec, 2, 1))


def test_rejecting_initial_loop_is_unsat():
    arch, spec = _single(["true"])
    args = list(_instance(arch, spec, 2, 1))
    args[3] = {"p": UniversalCoBuchi(1, 0, ((0, Guard(), 0),), frozenset([0]), frozenset())}
    assert not _sat(tuple(args))


def test_robots_bounds():
    assert not _sat(_instance(robots_arch(), robots_spec(), 1, 1))
    assert _sat(_instance(robots_arch(), robots_spec(), 2, 2))


@pytest.mark.parametrize("width", [0, 1, 2, 3])
@pytest.mark.parametrize("strict", [False, True])
def test_comparator_exhaustive(width, strict):
    for a_val, b_val in itertools.product(range(1 << width), repeat=2):
        reg = VariableRegistry()
        a = [reg.var("a", k) for k in range(width)]
        b = [reg.var("b", k) for k in range(width)]
        x, clauses = comparator(reg, a, b, strict)
        # most significant bit first
        units = [(v if a_val >> (width - 1 - k) & 1 else -v,) for k, v in enumerate(a)]
        units += [(v if b_val >> (width - 1 - k) & 1 else -v,) for k, v in enumerate(b)]
        res = Cdcl(len(reg), clauses + units + [(x,)]).solve()
        assert res == (a_val > b_val if strict else a_val >= b_val)


def test_bit_width():
    assert bit_width(1, 1) == 1
    assert bit_width(2, 2) == 3
    assert bit_width(3, 5) == 4
    # every value up to the product fits
    for s, q in itertools.product(range(1, 6), repeat=2):
        assert (1 << bit_width(s, q)) > s * q


def test_registry_json_round_trip():
    cnf = encode(*_instance(robots_arch(), robots_spec(), 1, 1))
    data = cnf.registry.to_json()
    assert sorted(data.values()) == list(range(1, cnf.num_vars + 1))
    back = VariableRegistry.from_json(data)
    assert len(back) == cnf.num_vars
    for name, v in data.items():
        assert back.get(name) == v


def test_dimacs_format_and_round_trip():
    assert to_dimacs((0, [])) == "p cnf 0 0"
    assert to_dimacs((1, [(1,)])) == "p cnf 1 1\n1 0"
    cnf = encode(*_instance(robots_arch(), robots_spec(), 1, 1))
    num, clauses = parse_dimacs(to_dimacs(cnf))
    assert num == cnf.num_vars and clauses == [tuple(c) for c in cnf.clauses]


@pytest.mark.parametrize("text", ["1 0", "p cnf 1 1\n2 0", "p cnf 1 2\n1 0", "p dnf 1 1\n1 0", ""])
def test_dimacs_errors(text):
    with pytest.raises(DimacsError):
        parse_dimacs(text)


def test_too_many_inputs():
    inputs = [f"i{k}" for k in range(13)]
    arch, spec = _single(["G o"], inputs=inputs)
    with pytest.raises(EncodingError):
        encode(*_instance(arch, spec, 1, 1))


def test_encoding_is_deterministic():
    a = to_dimacs(encode(*_instance(robots_arch(), robots_spec(), 2, 2)))
    b = to_dimacs(encode(*_instance(robots_arch(), robots_spec(), 2, 2)))
    assert a == b


def test_bounds_validation():
    with pytest.raises(ValueError):
        Bounds({"p": 0}, {"p": 1})
    assert Bounds({"p": 2, "q": 1}, {"p": 1, "q": 3}).pair() == (2, 3)
