import os
import sys

import pytest

from certsynth.architecture import Architecture
from certsynth.benchmarks import latch, shift
from certsynth.logic import ConjunctiveSpec
from certsynth.machines import compute, letters_over
from certsynth.synthesis import Solution, Unknown, Unrealizable, bound_schedule, synthesize
from certsynth.solving import SolverBackend

from crossing import GO1, GO2, robots_arch, robots_spec


def test_bound_schedule_orders():
    assert list(bound_schedule(2, 2)) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert list(bound_schedule(2, 2, "strategy-first")) == [(1, 1), (2, 1), (1, 2), (2, 2)]
    assert list(bound_schedule(1, 1)) == [(1, 1)]
    assert list(bound_schedule(3, 1)) == [(1, 1), (2, 1), (3, 1)]


def test_bound_schedule_errors():
    with pytest.raises(ValueError):
        list(bound_schedule(2, 2, "random"))
    with pytest.raises(ValueError):
        list(bound_schedule(0, 2))


@pytest.fixture(scope="module")
def robots_solution():
    return synthesize(robots_arch(), robots_spec(), 2, 2)


def test_robots_realizable_and_verified(robots_solution):
    sol = robots_solution
    assert isinstance(sol, Solution)
    assert sol.bounds.pair() == (2, 2)
    assert sol.report.realizable
    names = {c.name for c in sol.report.checks}
    assert {"simulation/r1", "simulation/r2", "global", "local_satisfaction/r1", "tracking/r1/r2"} <= names
    assert [a["status"] for a in sol.stats["attempts"]] == ["unsat", "unsat", "unsat", "sat"]


def test_local_strategies_only_read_valid_inputs(robots_solution):
    for name, local in robots_solution.local.items():
        assoc = local.associated
        assert assoc == ({GO2} if name == "r1" else {GO1})
        for (t, i) in local.transitions:
            assert i & assoc == local.labels[t] & assoc


def test_strategies_are_total_and_certified(robots_solution):
    sol = robots_solution
    for name, s in sol.strategies.items():
        assert s.is_total()
        own = sol.certificates[name]
        for a in letters_over(sorted(s.inputs)):
            for b in letters_over(sorted(s.inputs)):
                trace = compute(s, [a, b, a])
                cert = compute(own, [a, b, a])
                assert [x & own.outputs for x in trace] == [x & own.outputs for x in cert]


def test_unrealizable_both_policies():
    arch = Architecture.build([("p", ["i"], ["o"]), ("q", ["i"], ["r"])], ["i"])
    spec = ConjunctiveSpec.parse(["G (o <-> i)", "G (r -> X r)"])
    for policy in ("certificate-first", "strategy-first"):
        res = synthesize(arch, spec, 2, 2, policy=policy)
        assert isinstance(res, Unrealizable)
        assert res.max_bounds == (2, 2) and len(res.attempts) == 4


def test_mealy_makes_it_realizable():
    arch = Architecture.build([("p", ["i"], ["o"]), ("q", ["i"], ["r"])], ["i"])
    spec = ConjunctiveSpec.parse(["G (o <-> i)", "G (r -> X r)"])
    res = synthesize(arch, spec, 1, 1, mode="mealy")
    assert isinstance(res, Solution) and res.report.realizable


def test_latch_and_shift():
    for sf in (latch(2), shift(2)):
        res = synthesize(sf.arch, sf.spec, 2, 1)
        assert isinstance(res, Solution), sf.texts
        assert res.report.realizable


def test_synthesis_is_deterministic():
    a = synthesize(robots_arch(), robots_spec(), 2, 2)
    b = synthesize(robots_arch(), robots_spec(), 2, 2)
    for name in a.strategies:
        assert a.strategies[name] == b.strategies[name]
        assert a.certificates[name] == b.certificates[name]
    strip = lambda xs: [{k: v for k, v in x.items() if not k.endswith("seconds")} for x in xs]
    assert strip(a.stats["attempts"]) == strip(b.stats["attempts"])


def test_dimacs_dump(tmp_path):
    synthesize(robots_arch(), robots_spec(), 1, 2, dimacs_dir=str(tmp_path))
    assert sorted(os.listdir(tmp_path)) == [
        "bounds_s1_c1.cnf", "bounds_s1_c1.vars.json", "bounds_s1_c2.cnf", "bounds_s1_c2.vars.json",
    ]
    assert (tmp_path / "bounds_s1_c1.cnf").read_text().startswith("p cnf ")


def test_unknown_stops_the_search(tmp_path):
    exe = tmp_path / "undecided"
    exe.write_text(f"#!{sys.executable}\nprint('s UNKNOWN')\n")
    exe.chmod(0o755)
    res = synthesize(robots_arch(), robots_spec(), 2, 2, backend=SolverBackend(str(exe)))
    assert isinstance(res, Unknown)
    assert res.bounds.pair() == (1, 1)
    assert [a["status"] for a in res.attempts] == ["unknown"]


def test_mealy_robots():
    res = synthesize(robots_arch(), robots_spec(), 2, 2, mode="mealy")
    assert isinstance(res, Solution) and res.report.realizable
