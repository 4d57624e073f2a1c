import os
import random
import stat
import sys
import textwrap

import pytest

from certsynth.architecture import Architecture
from certsynth.automata import spec_uca
from certsynth.encoding import Bounds, encode
from certsynth.logic import ConjunctiveSpec, decompose, relevant_processes
from certsynth.solving import (
    Cdcl, DecodeError, Model, SolverBackend, SolverError, decode, machine_units, parse_solver_output,
    roundtrip_consistent, solve, solve_clauses,
)

from crossing import robots_arch, robots_spec
from oracles import sat_by_truth_table


def _random_cnf(rng, n, m, k=3):
    return [tuple(rng.choice([-1, 1]) * v for v in rng.sample(range(1, n + 1), min(k, n))) for _ in range(m)]


def test_trivial_instances():
    assert solve_clauses(1, [(1,)]).status == "sat"
    assert solve_clauses(1, [(1,), (-1,)]).status == "unsat"
    assert solve_clauses(0, []).status == "sat"
    assert solve_clauses(2, [()]).status == "unsat"


def test_cdcl_matches_truth_table():
    rng = random.Random(41)
    seen = {True: 0, False: 0}
    for _ in range(400):
        n = rng.randint(1, 10)
        clauses = _random_cnf(rng, n, rng.randint(1, 5 * n))
        expected = sat_by_truth_table(n, clauses)
        res = solve_clauses(n, clauses)
        assert (res.status == "sat") == expected
        if expected:
            assert res.model.satisfies(clauses)
        seen[expected] += 1
    assert seen[True] > 50 and seen[False] > 50


def _pigeonhole(holes):
    pigeons = holes + 1
    var = lambda p, h: p * holes + h + 1
    clauses = [tuple(var(p, h) for h in range(holes)) for p in range(pigeons)]
    clauses += [(-var(p, h), -var(q, h)) for h in range(holes) for p in range(pigeons) for q in range(p + 1, pigeons)]
    return pigeons * holes, clauses


def test_cdcl_pigeonhole_unsat():
    assert Cdcl(*_pigeonhole(4)).solve() is False


def test_cdcl_larger_random_instances_have_valid_models():
    rng = random.Random(42)
    for _ in range(20):
        clauses = _random_cnf(rng, 60, 200)
        res = solve_clauses(60, clauses)
        if res.status == "sat":
            assert res.model.satisfies(clauses)


def test_timeout_gives_unknown():
    n, clauses = _pigeonhole(10)
    res = solve_clauses(n, clauses, SolverBackend(timeout=0.05))
    assert res.status == "unknown" and res.model is None
    assert res.seconds < 2.0


def _script(tmp_path, body):
    path = tmp_path / "fake_solver"
    path.write_text(f"#!{sys.executable}\n" + textwrap.dedent(body))
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


def test_external_solver_sat(tmp_path):
    exe = _script(tmp_path, """
        import sys
        print("c fake")
        print("s SATISFIABLE")
        print("v 1 -2 0")
    """)
    res = solve_clauses(2, [(1,), (-2,)], SolverBackend(exe))
    assert res.status == "sat" and res.model.values[1:] == (True, False)


def test_external_solver_unsat_and_wrong_model(tmp_path):
    exe = _script(tmp_path, 'print("s UNSATISFIABLE")\n')
    assert solve_clauses(1, [(1,)], SolverBackend(exe)).status == "unsat"
    liar = _script(tmp_path, 'print("s SATISFIABLE")\nprint("v -1 0")\n')
    with pytest.raises(SolverError):
        solve_clauses(1, [(1,)], SolverBackend(liar))


def test_external_solver_timeout(tmp_path):
    exe = _script(tmp_path, "import time\ntime.sleep(5)\n")
    assert solve_clauses(1, [(1,)], SolverBackend(exe, timeout=0.3)).status == "unknown"


def test_missing_solver(tmp_path):
    with pytest.raises(SolverError):
        solve_clauses(1, [(1,)], SolverBackend(os.path.join(tmp_path, "nope")))


@pytest.mark.parametrize("text", ["", "v 1 0", "s MAYBE", "s SATISFIABLE\nv x 0"])
def test_malformed_solver_output(text):
    with pytest.raises(SolverError):
        parse_solver_output(text, 1)


def test_solver_output_unknown():
    assert parse_solver_output("s UNKNOWN\n", 3) == (None, None)


def _robots_cnf(s=2, c=2, mode="moore"):
    arch, spec = robots_arch(), robots_spec()
    dec = decompose(spec, arch)
    rel = relevant_processes(dec, arch)
    ucas = {n: spec_uca(d.conjuncts) for n, d in dec.items()}
    return encode(arch, dec, rel, ucas, Bounds.uniform(arch.names, s, c), mode)


def test_decode_robots_and_round_trip():
    cnf = _robots_cnf()
    res = solve(cnf)
    assert res.status == "sat"
    decoded = decode(res.model, cnf)
    assert set(decoded) == {"r1", "r2"}
    for d in decoded.values():
        assert d.certificate.is_total()
        assert d.local.num_states == 2
    assert Model(res.model.values).satisfies(machine_units(cnf, decoded))
    assert roundtrip_consistent(cnf, decoded)


def test_decode_rejects_inconsistent_model():
    cnf = _robots_cnf()
    res = solve(cnf)
    assert res.status == "sat"
    values = list(res.model.values)
    # give a local state two successors on the same input
    reg = cnf.registry
    key = next(k for k, v in reg.items() if k[0] == "trans_T" and values[v])
    other = reg.get("trans_T", key[1], key[2], key[3], 1 - key[4])
    values[other] = True
    with pytest.raises(DecodeError):
        decode(Model(tuple(values)), cnf)


def test_decode_mealy():
    arch = Architecture.build([("p", ["i"], ["o"])], ["i"])
    spec = ConjunctiveSpec.parse(["G (o <-> i)"])
    dec = decompose(spec, arch)
    ucas = {"p": spec_uca(dec["p"].conjuncts)}
    moore_cnf = encode(arch, dec, {"p": ()}, ucas, Bounds.uniform(["p"], 2, 1))
    assert solve(moore_cnf).status == "unsat"
    cnf = encode(arch, dec, {"p": ()}, ucas, Bounds.uniform(["p"], 1, 1), "mealy")
    res = solve(cnf)
    assert res.status == "sat"
    local = decode(res.model, cnf)["p"].local
    assert local.mealy_outputs[(0, frozenset(["i"]))] == {"o"}
    assert local.mealy_outputs[(0, frozenset())] == frozenset()
